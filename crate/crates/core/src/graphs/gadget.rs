use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{automorphism_group, Graph, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::group::{all_tuples, Perm, PermGroup};

pub const FIRST_MARKER: usize = 7;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum Role {
    Tuple { tuple: Vec<usize>, marker: usize },
    /// On the path `s - a - st`; carries the pendant `b`.
    A { s: usize, t: usize },
    B { s: usize, t: usize },
    /// On the path `t - c - st`; carries the pendants `d` and `e`.
    C { s: usize, t: usize },
    D { s: usize, t: usize },
    E { s: usize, t: usize },
    Leaf { owner: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetLayout {
    pub points: usize,
    pub depths: Vec<usize>,
    pub roles: Vec<Role>,
}

impl GadgetLayout {
    pub fn tuple_vertices(&self) -> impl Iterator<Item = (usize, &Vec<usize>, usize)> {
        self.roles.iter().enumerate().filter_map(|(v, r)| match r {
            Role::Tuple { tuple, marker } => Some((v, tuple, *marker)),
            _ => None,
        })
    }

    /// Vertex index of the length-1 tuple `(x)`.
    pub fn point_vertex(&self, x: usize) -> Option<usize> {
        self.tuple_vertices().find(|(_, t, _)| t.len() == 1 && t[0] == x).map(|(v, _, _)| v)
    }
}

fn check_depths(depths: &[usize]) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = depths.iter().copied().collect();
    if set.is_empty() {
        return Err(Error::InvalidInput("empty depth set".into()));
    }
    let expected: Vec<usize> = (0..set.len()).map(|k| 1usize << k).collect();
    let got: Vec<usize> = set.into_iter().collect();
    if got != expected {
        return Err(Error::InvalidInput(format!(
            "depth set {got:?} must be a consecutive prefix of 1, 2, 4, ... so that every tuple is reachable by concatenation"
        )));
    }
    Ok(got)
}

/// Build the gadget graph for `h` acting on tuples of the lengths in `depths`.
pub fn build_display_graph(h: &PermGroup, depths: &[usize]) -> Result<(Graph, GadgetLayout)> {
    let depths = check_depths(depths)?;
    let m = h.degree();
    if m == 0 {
        return Err(Error::InvalidInput("permutation group on zero points".into()));
    }
    let mut lengths = vec![0];
    lengths.extend(&depths);

    let mut roles: Vec<Role> = Vec::new();
    let mut tuple_index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut marker_of: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut next_marker = FIRST_MARKER;
    for &len in &lengths {
        for orbit in h.tuple_orbits(len) {
            for t in orbit {
                marker_of.insert(t, next_marker);
            }
            next_marker += 1;
        }
    }
    for &len in &lengths {
        for t in all_tuples(m, len) {
            tuple_index.insert(t.clone(), roles.len());
            let marker = marker_of[&t];
            roles.push(Role::Tuple { tuple: t, marker });
        }
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let empty = tuple_index[&Vec::new()];
    for x in 0..m {
        edges.push((tuple_index[&vec![x]], empty));
    }
    for &len in &depths {
        if !depths.contains(&(2 * len)) {
            continue;
        }
        let tuples = all_tuples(m, len);
        for s in &tuples {
            for t in &tuples {
                let (sv, tv) = (tuple_index[s], tuple_index[t]);
                let st = tuple_index[&[s.as_slice(), t.as_slice()].concat()];
                let base = roles.len();
                roles.push(Role::A { s: sv, t: tv });
                roles.push(Role::B { s: sv, t: tv });
                roles.push(Role::C { s: sv, t: tv });
                roles.push(Role::D { s: sv, t: tv });
                roles.push(Role::E { s: sv, t: tv });
                let (a, b, c, d, e) = (base, base + 1, base + 2, base + 3, base + 4);
                edges.extend([(sv, a), (a, st), (a, b), (tv, c), (c, st), (c, d), (c, e)]);
            }
        }
    }
    let owners: Vec<(usize, usize)> = roles
        .iter()
        .enumerate()
        .filter_map(|(v, r)| match r {
            Role::Tuple { marker, .. } => Some((v, *marker)),
            _ => None,
        })
        .collect();
    for (v, marker) in owners {
        for _ in 0..marker {
            edges.push((v, roles.len()));
            roles.push(Role::Leaf { owner: v });
        }
    }
    let g = Graph::new(roles.len(), &edges)?;
    Ok((g, GadgetLayout { points: m, depths, roles }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GadgetVerdict {
    #[serde(rename = "EQUAL")]
    Equal,
    #[serde(rename = "K-CLOSURE-GAP")]
    KClosureGap,
    #[serde(rename = "MISMATCH")]
    Mismatch,
}

impl std::fmt::Display for GadgetVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GadgetVerdict::Equal => "EQUAL",
            GadgetVerdict::KClosureGap => "K-CLOSURE-GAP",
            GadgetVerdict::Mismatch => "MISMATCH",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GadgetReport {
    pub verdict: GadgetVerdict,
    /// Restriction `Aut(graph) -> Sym(points)` is injective.
    pub injective: bool,
    /// Injective once the twin kernel (permutations of interchangeable leaves) is factored out.
    pub injective_modulo_twins: bool,
    pub aut_order: String,
    pub essential_order: usize,
    pub twin_kernel_order: String,
    pub group_order: usize,
    pub restricted_order: usize,
    pub restricted: Vec<Vec<usize>>,
    /// Every automorphism maps tuple vertices to tuple vertices with the same marker.
    pub markers_preserved: bool,
    /// Tuple vertices are exactly the vertices of degree at least 7.
    pub valence_separation: bool,
}

pub fn verify_gadget(g: &Graph, layout: &GadgetLayout, h: &PermGroup) -> Result<GadgetReport> {
    if layout.roles.len() != g.n() || h.degree() != layout.points {
        return Err(Error::InvalidInput("layout does not match graph or group".into()));
    }
    let aut = automorphism_group(g, DEFAULT_VERTEX_CAP.max(g.n()))?;
    let is_tuple: Vec<bool> = layout.roles.iter().map(|r| matches!(r, Role::Tuple { .. })).collect();
    let marker: Vec<usize> = layout
        .roles
        .iter()
        .map(|r| if let Role::Tuple { marker, .. } = r { *marker } else { 0 })
        .collect();
    let valence_separation = (0..g.n()).all(|v| (g.degree(v) >= 7) == is_tuple[v])
        && layout.roles.iter().enumerate().all(|(v, r)| match r {
            Role::A { .. } => g.degree(v) == 3,
            Role::C { .. } => g.degree(v) == 4,
            Role::B { .. } | Role::D { .. } | Role::E { .. } | Role::Leaf { .. } => g.degree(v) == 1,
            Role::Tuple { .. } => true,
        });
    let twin_touches_tuple = aut.twin_classes().iter().any(|c| c.members.iter().any(|&v| is_tuple[v]));
    let markers_preserved = !twin_touches_tuple
        && aut.core().iter().all(|p| (0..g.n()).all(|v| !is_tuple[v] || (is_tuple[p.apply(v)] && marker[p.apply(v)] == marker[v])));

    let point_vertex: Vec<usize> = (0..layout.points)
        .map(|x| layout.point_vertex(x).ok_or_else(|| Error::InvalidInput("missing length-1 tuple".into())))
        .collect::<Result<_>>()?;
    let vertex_point: HashMap<usize, usize> = point_vertex.iter().enumerate().map(|(x, &v)| (v, x)).collect();
    let mut restricted: BTreeSet<Perm> = BTreeSet::new();
    for p in aut.core() {
        let images: Option<Vec<usize>> = point_vertex.iter().map(|&v| vertex_point.get(&p.apply(v)).copied()).collect();
        match images {
            Some(img) => {
                restricted.insert(Perm(img));
            }
            None => return Err(Error::CheckFailed("automorphism moves a point vertex off the point layer".into())),
        }
    }
    let target: BTreeSet<Perm> = h.elements().iter().cloned().collect();
    let verdict = if restricted == target {
        GadgetVerdict::Equal
    } else if target.is_subset(&restricted) {
        GadgetVerdict::KClosureGap
    } else {
        GadgetVerdict::Mismatch
    };
    let injective_modulo_twins = restricted.len() == aut.core_order();
    let twin_kernel = aut.twin_kernel_order();
    Ok(GadgetReport {
        verdict,
        injective: injective_modulo_twins && twin_kernel == num_bigint::BigUint::from(1u32),
        injective_modulo_twins,
        aut_order: aut.order().to_string(),
        essential_order: aut.core_order(),
        twin_kernel_order: twin_kernel.to_string(),
        group_order: h.order(),
        restricted_order: restricted.len(),
        restricted: restricted.into_iter().map(|p| p.0).collect(),
        markers_preserved,
        valence_separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> PermGroup {
        PermGroup::generate(2, &[Perm(vec![1, 0])], 10).unwrap()
    }

    #[test]
    fn trivial_on_one_point() {
        let h = PermGroup::trivial(1);
        let (g, layout) = build_display_graph(&h, &[1]).unwrap();
        // empty tuple with 7 leaves, point with 8 leaves
        assert_eq!(g.n(), 2 + 7 + 8);
        let r = verify_gadget(&g, &layout, &h).unwrap();
        assert_eq!(r.verdict, GadgetVerdict::Equal);
        assert_eq!(r.essential_order, 1);
        assert!(r.valence_separation && r.markers_preserved);
    }

    #[test]
    fn s2_on_two_points() {
        let h = s2();
        let (g, layout) = build_display_graph(&h, &[1, 2]).unwrap();
        let r = verify_gadget(&g, &layout, &h).unwrap();
        assert_eq!(r.verdict, GadgetVerdict::Equal);
        assert_eq!(r.restricted_order, 2);
        assert!(r.injective_modulo_twins);
        assert!(!r.injective);
        assert!(r.valence_separation && r.markers_preserved);
    }

    #[test]
    fn trivial_on_three_points() {
        let h = PermGroup::trivial(3);
        let (g, layout) = build_display_graph(&h, &[1]).unwrap();
        let r = verify_gadget(&g, &layout, &h).unwrap();
        assert_eq!(r.verdict, GadgetVerdict::Equal);
    }

    #[test]
    fn markers_follow_orbits() {
        let h = PermGroup::generate(3, &[Perm(vec![1, 2, 0])], 10).unwrap();
        let (_, layout) = build_display_graph(&h, &[1, 2]).unwrap();
        let marker: HashMap<Vec<usize>, usize> = layout.tuple_vertices().map(|(_, t, m)| (t.clone(), m)).collect();
        for g in h.elements() {
            for (t, m) in &marker {
                let img: Vec<usize> = t.iter().map(|&x| g.apply(x)).collect();
                assert_eq!(marker[&img], *m);
            }
        }
        assert!(marker.values().all(|&m| m >= FIRST_MARKER));
    }

    #[test]
    fn bad_depths() {
        assert!(build_display_graph(&s2(), &[1, 4]).is_err());
        assert!(build_display_graph(&s2(), &[2]).is_err());
        assert!(build_display_graph(&s2(), &[]).is_err());
    }
}
