use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::group::Perm;
use crate::par;

pub const DEFAULT_VERTEX_CAP: usize = 5000;
const CORE_CAP: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwinKind {
    /// Same open neighbourhood (pairwise non-adjacent).
    False,
    /// Same closed neighbourhood (pairwise adjacent).
    True,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwinClass {
    pub members: Vec<usize>,
    pub kind: TwinKind,
}

/// `Aut(G)` as `core ⋉ Π Sym(twin class)`.
///
/// `core` lifts the automorphisms of the twin quotient so that members of
/// a class are mapped in increasing order; it is a subgroup. Every
/// permutation inside a twin class is an automorphism, and these generate
/// the normal "twin kernel".
#[derive(Clone, Debug)]
pub struct AutomorphismGroup {
    n: usize,
    core: Vec<Perm>,
    twins: Vec<TwinClass>,
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

impl AutomorphismGroup {
    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn core(&self) -> &[Perm] {
        &self.core
    }

    pub fn twin_classes(&self) -> &[TwinClass] {
        &self.twins
    }

    pub fn core_order(&self) -> usize {
        self.core.len()
    }

    pub fn twin_kernel_order(&self) -> BigUint {
        self.twins.iter().map(|c| factorial(c.members.len())).product()
    }

    pub fn order(&self) -> BigUint {
        BigUint::from(self.core.len()) * self.twin_kernel_order()
    }

    /// Core elements plus adjacent transpositions inside each twin class.
    pub fn generators(&self) -> Vec<Perm> {
        let mut gens: Vec<Perm> = self.core.iter().filter(|p| !p.is_identity()).cloned().collect();
        for c in &self.twins {
            for w in c.members.windows(2) {
                let mut p = Perm::identity(self.n);
                p.0.swap(w[0], w[1]);
                gens.push(p);
            }
        }
        gens
    }

    /// All elements, if there are at most `cap` of them.
    pub fn elements(&self, cap: usize) -> Result<Vec<Perm>> {
        if self.order() > BigUint::from(cap) {
            return Err(Error::CapExceeded { what: "automorphism group order".into(), cap });
        }
        let mut kernel = vec![Perm::identity(self.n)];
        for c in &self.twins {
            let mut next = Vec::new();
            for arrangement in permutations(&c.members) {
                let mut local = Perm::identity(self.n);
                for (src, dst) in c.members.iter().zip(&arrangement) {
                    local.0[*src] = *dst;
                }
                for k in &kernel {
                    next.push(local.compose(k));
                }
            }
            kernel = next;
        }
        let mut out = Vec::with_capacity(kernel.len() * self.core.len());
        for c in &self.core {
            for k in &kernel {
                out.push(c.compose(k));
            }
        }
        out.sort();
        Ok(out)
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn twin_classes(g: &Graph) -> Vec<TwinClass> {
    let mut open: BTreeMap<(Option<&str>, &[usize]), Vec<usize>> = BTreeMap::new();
    for v in 0..g.n() {
        open.entry((g.label(v), g.neighbors(v))).or_default().push(v);
    }
    let mut closed: BTreeMap<(Option<&str>, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for v in 0..g.n() {
        let mut nb = g.neighbors(v).to_vec();
        let pos = nb.binary_search(&v).unwrap_err();
        nb.insert(pos, v);
        closed.entry((g.label(v), nb)).or_default().push(v);
    }
    let mut out: Vec<TwinClass> = open
        .into_values()
        .filter(|m| m.len() > 1)
        .map(|members| TwinClass { members, kind: TwinKind::False })
        .chain(
            closed
                .into_values()
                .filter(|m| m.len() > 1)
                .map(|members| TwinClass { members, kind: TwinKind::True }),
        )
        .collect();
    out.sort_by(|a, b| a.members.cmp(&b.members));
    out
}

/// Compact labelled quotient used by the search.
struct Quotient {
    reps: Vec<usize>,
    adj: Vec<Vec<usize>>,
    dist: Vec<Vec<u32>>,
    color: Vec<usize>,
}

fn build_quotient(g: &Graph, twins: &[TwinClass]) -> Quotient {
    let mut class_of: Vec<Option<usize>> = vec![None; g.n()];
    for (ci, c) in twins.iter().enumerate() {
        for &m in &c.members {
            class_of[m] = Some(ci);
        }
    }
    let reps: Vec<usize> = (0..g.n())
        .filter(|&v| class_of[v].is_none_or(|ci| twins[ci].members[0] == v))
        .collect();
    let index: HashMap<usize, usize> = reps.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adj: Vec<Vec<usize>> = reps
        .iter()
        .map(|&v| g.neighbors(v).iter().filter_map(|u| index.get(u).copied()).collect())
        .collect();
    let q = Graph { adj: adj.clone(), labels: None };
    let dist: Vec<Vec<u32>> = par::map_range(reps.len(), |i| q.bfs(i));

    // initial colour: (label, class size, class kind, degree in G, distance profile)
    let keys: Vec<_> = reps
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (size, kind) = match class_of[v] {
                Some(ci) => (twins[ci].members.len(), twins[ci].kind as u8 + 1),
                None => (1, 0),
            };
            let mut profile = dist[i].clone();
            profile.sort_unstable();
            (g.label(v).map(str::to_owned), size, kind, g.degree(v), profile)
        })
        .collect();
    let mut color = rank(&keys);
    // colour refinement by neighbour colour multisets
    loop {
        let keys: Vec<(usize, Vec<usize>)> = (0..reps.len())
            .map(|i| {
                let mut nb: Vec<usize> = adj[i].iter().map(|&j| color[j]).collect();
                nb.sort_unstable();
                (color[i], nb)
            })
            .collect();
        let next = rank(&keys);
        let before = color.iter().max().copied().unwrap_or(0);
        let after = next.iter().max().copied().unwrap_or(0);
        color = next;
        if after == before {
            break;
        }
    }
    Quotient { reps, adj, dist, color }
}

fn rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("present")).collect()
}

struct Search<'a> {
    q: &'a Quotient,
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
}

impl Search<'_> {
    fn candidates(&self, k: usize, img: &[usize], used: &[bool]) -> Vec<usize> {
        let v = self.order[k];
        let pool: Vec<usize> = match self.parent[k] {
            Some(p) => self.q.adj[img[p]].clone(),
            None => (0..self.q.reps.len()).collect(),
        };
        pool.into_iter()
            .filter(|&w| {
                !used[w]
                    && self.q.color[w] == self.q.color[v]
                    && self.order[..k].iter().all(|&u| self.q.dist[u][v] == self.q.dist[img[u]][w])
            })
            .collect()
    }

    fn extend(&self, k: usize, img: &mut [usize], used: &mut [bool], out: &mut Vec<Vec<usize>>) -> Result<()> {
        if k == self.order.len() {
            if out.len() >= CORE_CAP {
                return Err(Error::CapExceeded { what: "automorphisms of twin quotient".into(), cap: CORE_CAP });
            }
            out.push(img.to_vec());
            return Ok(());
        }
        let v = self.order[k];
        for w in self.candidates(k, img, used) {
            img[v] = w;
            used[w] = true;
            self.extend(k + 1, img, used, out)?;
            used[w] = false;
        }
        Ok(())
    }
}

/// Full automorphism group of a (labelled) graph.
pub fn automorphism_group(g: &Graph, vertex_cap: usize) -> Result<AutomorphismGroup> {
    if g.n() > vertex_cap {
        return Err(Error::CapExceeded { what: "vertex count".into(), cap: vertex_cap });
    }
    let twins = twin_classes(g);
    let q = build_quotient(g, &twins);
    let nq = q.reps.len();

    // BFS order from the smallest colour cell; parent gives candidate pools
    let mut cell_size = vec![0usize; nq];
    for &c in &q.color {
        cell_size[c] += 1;
    }
    let mut order = Vec::with_capacity(nq);
    let mut parent_vertex: Vec<Option<usize>> = Vec::with_capacity(nq);
    let mut seen = vec![false; nq];
    while order.len() < nq {
        let root = (0..nq)
            .filter(|&v| !seen[v])
            .min_by_key(|&v| (cell_size[q.color[v]], v))
            .expect("unvisited vertex");
        seen[root] = true;
        order.push(root);
        parent_vertex.push(None);
        let mut head = order.len() - 1;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbs = q.adj[u].clone();
            nbs.sort_by_key(|&w| (cell_size[q.color[w]], w));
            for w in nbs {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                    parent_vertex.push(Some(u));
                }
            }
        }
    }
    let search = Search { q: &q, order: order.clone(), parent: parent_vertex };

    let first = search.candidates(0, &vec![0; nq], &vec![false; nq]);
    let branches: Vec<Result<Vec<Vec<usize>>>> = par::map(&first, |&w| {
        let mut img = vec![0; nq];
        let mut used = vec![false; nq];
        img[order[0]] = w;
        used[w] = true;
        let mut out = Vec::new();
        search.extend(1, &mut img, &mut used, &mut out)?;
        Ok(out)
    });

    // lift quotient automorphisms back to G
    let mut members_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for c in &twins {
        members_of.insert(c.members[0], c.members.clone());
    }
    let mut core = Vec::new();
    for b in branches {
        for qa in b? {
            let mut p = vec![usize::MAX; g.n()];
            for (i, &rep) in q.reps.iter().enumerate() {
                let target = q.reps[qa[i]];
                match (members_of.get(&rep), members_of.get(&target)) {
                    (Some(src), Some(dst)) => {
                        for (a, b) in src.iter().zip(dst) {
                            p[*a] = *b;
                        }
                    }
                    _ => p[rep] = target,
                }
            }
            if !g.is_automorphism(&p) {
                return Err(Error::CheckFailed("lifted map is not an automorphism".into()));
            }
            core.push(Perm(p));
        }
    }
    core.sort();
    Ok(AutomorphismGroup { n: g.n(), core, twins })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_order(g: &Graph) -> usize {
        permutations(&(0..g.n()).collect::<Vec<_>>()).iter().filter(|p| g.is_automorphism(p)).count()
    }

    #[test]
    fn spec_examples() {
        let cases = [(Graph::path(3), 2u32), (Graph::cycle(4), 8), (Graph::star(3), 6)];
        for (g, want) in cases {
            let a = automorphism_group(&g, DEFAULT_VERTEX_CAP).unwrap();
            assert_eq!(a.order(), BigUint::from(want));
            assert_eq!(brute_force_order(&g), want as usize);
        }
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        let graphs = vec![
            Graph::complete(4),
            Graph::cycle(5),
            Graph::path(5),
            Graph::new(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)]).unwrap(),
            Graph::new(6, &[(0, 1), (0, 2), (0, 3), (3, 4), (3, 5)]).unwrap(),
            Graph::new(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)]).unwrap(),
            Graph::new(5, &[(0, 1), (2, 3)]).unwrap(),
        ];
        for g in graphs {
            let a = automorphism_group(&g, DEFAULT_VERTEX_CAP).unwrap();
            let els = a.elements(10_000).unwrap();
            assert_eq!(els.len(), brute_force_order(&g), "{g:?}");
            assert!(els.iter().all(|p| g.is_automorphism(&p.0)));
            for x in &els {
                assert!(els.binary_search(&x.inverse()).is_ok());
                for y in els.iter().take(10) {
                    assert!(els.binary_search(&x.compose(y)).is_ok());
                }
            }
        }
    }

    #[test]
    fn labels_restrict_symmetry() {
        let g = Graph::path(3).with_labels(vec!["x".into(), "y".into(), "z".into()]).unwrap();
        assert_eq!(automorphism_group(&g, 10).unwrap().order(), BigUint::one());
    }

    #[test]
    fn vertex_cap_enforced() {
        assert!(automorphism_group(&Graph::path(10), 5).is_err());
    }
}
