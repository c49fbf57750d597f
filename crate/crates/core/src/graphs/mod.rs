//! Finite simple graphs, path metrics, automorphism groups and the gadget
//! graph that replays a permutation group as graph symmetries.

mod automorphism;
mod gadget;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use automorphism::{automorphism_group, AutomorphismGroup, TwinClass, TwinKind, DEFAULT_VERTEX_CAP};
pub use gadget::{build_display_graph, verify_gadget, GadgetLayout, GadgetReport, GadgetVerdict, Role};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut sets = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("loop at vertex {u}")));
            }
            if !sets[u].insert(v) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u},{v})")));
            }
            sets[v].insert(u);
        }
        Ok(Graph { adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(), labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Graph> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn from_record(rec: &GraphRecord) -> Result<Graph> {
        let edges: Vec<(usize, usize)> = rec.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = Graph::new(rec.n, &edges)?;
        match &rec.labels {
            Some(l) => g.with_labels(l.clone()),
            None => Ok(g),
        }
    }

    pub fn to_record(&self) -> GraphRecord {
        GraphRecord { n: self.n(), edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(), labels: self.labels.clone() }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn label(&self, v: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v].as_str())
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// BFS distances from `src`; `u32::MAX` marks unreachable vertices.
    pub fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n()];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.bfs(0).iter().all(|&d| d != u32::MAX)
    }

    pub fn is_automorphism(&self, p: &[usize]) -> bool {
        if p.len() != self.n() {
            return false;
        }
        (0..self.n()).all(|u| {
            self.label(u) == self.label(p[u])
                && self.degree(u) == self.degree(p[u])
                && self.adj[u].iter().all(|&v| self.has_edge(p[u], p[v]))
        })
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::new(n, &edges).expect("valid path")
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::new(n, &edges).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Graph::new(n, &edges).expect("valid complete graph")
    }

    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::new(leaves + 1, &edges).expect("valid star")
    }
}

/// All-pairs shortest-path distances of a connected graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathMetric {
    pub dist: Vec<Vec<u32>>,
}

impl PathMetric {
    pub fn n(&self) -> usize {
        self.dist.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().flatten().copied().max().unwrap_or(0)
    }
}

pub fn path_metric(g: &Graph) -> Result<PathMetric> {
    let rows = crate::par::map_range(g.n(), |v| g.bfs(v));
    if rows.iter().flatten().any(|&d| d == u32::MAX) {
        return Err(Error::InvalidInput("graph is disconnected".into()));
    }
    Ok(PathMetric { dist: rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        assert_eq!(path_metric(&Graph::path(3)).unwrap().get(0, 2), 2);
        let k3 = path_metric(&Graph::complete(3)).unwrap();
        assert!((0..3).all(|i| (0..3).all(|j| k3.get(i, j) == u32::from(i != j))));
        let c5 = path_metric(&Graph::cycle(5)).unwrap();
        assert_eq!((c5.get(0, 2), c5.get(0, 3)), (2, 2));
    }

    #[test]
    fn disconnected_rejected() {
        let g = Graph::new(3, &[(0, 1)]).unwrap();
        assert!(path_metric(&g).is_err());
    }

    #[test]
    fn invalid_graphs() {
        assert!(Graph::new(2, &[(0, 0)]).is_err());
        assert!(Graph::new(2, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn record_roundtrip() {
        let g = Graph::cycle(4).with_labels(vec!["a".into(), "b".into(), "a".into(), "b".into()]).unwrap();
        let json = serde_json::to_string(&g.to_record()).unwrap();
        let back: GraphRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(Graph::from_record(&back).unwrap(), g);
    }
}
