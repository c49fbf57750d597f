//! The graph norm on `R^n`: the maximum of `|a_n + a_m/(1+2d)|`,
//! `|a_n - a_m/(2+2d)|` over ordered pairs and of `|a_n|`, where `d` is the
//! path distance of a connected graph.

use std::collections::{BTreeSet, HashSet};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{
    automorphism_group, build_display_graph, path_metric, verify_gadget, AutomorphismGroup, GadgetLayout,
    GadgetReport, GadgetVerdict, Graph, PathMetric, DEFAULT_VERTEX_CAP,
};
use crate::group::{Perm, PermGroup};
use crate::polytope;
use crate::scalar::{rat_int, Rational};

pub const DEFAULT_EXTREME_CAP: usize = 8;
const BRUTE_FORCE_CAP: usize = 8;

/// One facet functional with at most two nonzero coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SparseFunctional(pub Vec<(usize, Rational)>);

impl SparseFunctional {
    fn new(mut terms: Vec<(usize, Rational)>) -> Self {
        terms.retain(|(_, c)| !c.is_zero());
        terms.sort();
        SparseFunctional(terms)
    }

    pub fn eval(&self, a: &[Rational]) -> Rational {
        self.0.iter().map(|(i, c)| c * &a[*i]).sum()
    }

    pub fn eval_f64(&self, a: &[f64]) -> f64 {
        self.0.iter().map(|(i, c)| crate::scalar::rational_to_f64(c) * a[*i]).sum()
    }

    pub fn neg(&self) -> Self {
        SparseFunctional(self.0.iter().map(|(i, c)| (*i, -c.clone())).collect())
    }

    pub fn dense(&self, n: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); n];
        for (i, c) in &self.0 {
            v[*i] = c.clone();
        }
        v
    }

    /// The functional `phi ∘ T^{-1}` for the signed map `e_j -> s_j e_{p(j)}`.
    pub fn push_forward(&self, perm: &Perm, signs: &[i8]) -> Self {
        SparseFunctional::new(
            self.0
                .iter()
                .map(|(j, c)| (perm.apply(*j), if signs[*j] < 0 { -c.clone() } else { c.clone() }))
                .collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct GammaSpace {
    graph: Graph,
    metric: PathMetric,
    facets: Vec<SparseFunctional>,
}

impl GammaSpace {
    pub fn new(graph: Graph) -> Result<GammaSpace> {
        let metric = path_metric(&graph)?;
        let n = graph.n();
        let mut facets = Vec::with_capacity(2 * n * n);
        for (kind, offset) in [(1i64, 1i64), (-1, 2)] {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let k = offset + 2 * i64::from(metric.get(i, j));
                        facets.push(SparseFunctional::new(vec![
                            (i, rat_int(1)),
                            (j, Rational::new(kind.into(), k.into())),
                        ]));
                    }
                }
            }
        }
        for i in 0..n {
            facets.push(SparseFunctional::new(vec![(i, rat_int(1))]));
        }
        Ok(GammaSpace { graph, metric, facets })
    }

    pub fn dim(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn metric(&self) -> &PathMetric {
        &self.metric
    }

    /// Plus-type, minus-type and unit functionals (without negations).
    pub fn facets(&self) -> &[SparseFunctional] {
        &self.facets
    }

    /// The facet list followed by all negations.
    pub fn symmetric_facets(&self) -> Vec<SparseFunctional> {
        let mut all = self.facets.clone();
        all.extend(self.facets.iter().map(SparseFunctional::neg));
        all
    }

    pub fn norm(&self, a: &[Rational]) -> Result<Rational> {
        self.check_dim(a.len())?;
        Ok(self.facets.iter().map(|f| f.eval(a).abs()).max().unwrap_or_else(Rational::zero))
    }

    pub fn norm_f64(&self, a: &[f64]) -> Result<f64> {
        self.check_dim(a.len())?;
        Ok(self.facets.iter().map(|f| f.eval_f64(a).abs()).fold(0.0, f64::max))
    }

    /// First functional of [`Self::symmetric_facets`] attaining the norm.
    pub fn support(&self, a: &[Rational]) -> Result<SparseFunctional> {
        let n = self.norm(a)?;
        if n.is_zero() {
            return Err(Error::InvalidInput("support functional of the zero vector".into()));
        }
        self.symmetric_facets()
            .into_iter()
            .find(|f| f.eval(a) == n)
            .ok_or_else(|| Error::CheckFailed("no facet attains the norm".into()))
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }

    /// Whether the signed vertex map `e_j -> s_j e_{p(j)}` maps the facet set onto itself.
    pub fn preserves_facets(&self, perm: &Perm, signs: &[i8]) -> bool {
        let set: HashSet<SparseFunctional> = self.symmetric_facets().into_iter().collect();
        self.facets.iter().all(|f| set.contains(&f.push_forward(perm, signs)))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremePointReport {
    pub dim: usize,
    pub vertex_count: usize,
    pub vertices: Vec<Vec<String>>,
    /// The vertex set is exactly `{±e_p}`.
    pub signed_units_only: bool,
}

pub fn extreme_points(space: &GammaSpace, cap: usize) -> Result<(Vec<Vec<Rational>>, ExtremePointReport)> {
    if space.dim() > cap {
        return Err(Error::CapExceeded { what: "dimension for vertex enumeration".into(), cap });
    }
    // unit functionals first: the enumeration then starts from the cube
    let mut ordered = space.symmetric_facets();
    ordered.sort_by_key(|f| f.0.len());
    let dense: Vec<Vec<Rational>> = ordered.iter().map(|f| f.dense(space.dim())).collect();
    let vertices = polytope::enumerate_vertices(&dense, 2_000_000)?;
    let n = space.dim();
    let mut units: BTreeSet<Vec<Rational>> = BTreeSet::new();
    for i in 0..n {
        for s in [1, -1] {
            let mut v = vec![Rational::zero(); n];
            v[i] = rat_int(s);
            units.insert(v);
        }
    }
    let got: BTreeSet<Vec<Rational>> = vertices.iter().cloned().collect();
    let report = ExtremePointReport {
        dim: n,
        vertex_count: vertices.len(),
        vertices: vertices.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect(),
        signed_units_only: got == units,
    };
    Ok((vertices, report))
}

/// A linear map `e_j -> signs[j] e_{perm(j)}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignedPerm {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

/// Every signed vertex map preserving the facet set, by exhaustive
/// backtracking (pruned on facets whose support is already assigned).
pub fn brute_force_signed_maps(space: &GammaSpace) -> Result<Vec<SignedPerm>> {
    let n = space.dim();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded { what: "dimension for brute force".into(), cap: BRUTE_FORCE_CAP });
    }
    let set: HashSet<SparseFunctional> = space.symmetric_facets().into_iter().collect();
    // facets grouped by the largest coordinate in their support
    let mut by_last: Vec<Vec<&SparseFunctional>> = vec![Vec::new(); n];
    for f in space.facets() {
        let last = f.0.iter().map(|(i, _)| *i).max().expect("nonempty facet");
        by_last[last].push(f);
    }
    let roots: Vec<(usize, i8)> = (0..n).flat_map(|t| [(t, 1i8), (t, -1i8)]).collect();
    let found = crate::par::map(&roots, |&(t0, s0)| {
        let mut perm = vec![usize::MAX; n];
        let mut signs = vec![0i8; n];
        let mut used = vec![false; n];
        perm[0] = t0;
        signs[0] = s0;
        used[t0] = true;
        let mut out = Vec::new();
        if partial_ok(&by_last[0], &perm, &signs, &set) {
            extend_signed(1, n, &by_last, &set, &mut perm, &mut signs, &mut used, &mut out);
        }
        out
    });
    let mut all: Vec<SignedPerm> = found.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}

fn partial_ok(facets: &[&SparseFunctional], perm: &[usize], signs: &[i8], set: &HashSet<SparseFunctional>) -> bool {
    let p = Perm(perm.to_vec());
    facets.iter().all(|f| set.contains(&f.push_forward(&p, signs)))
}

#[allow(clippy::too_many_arguments)]
fn extend_signed(
    j: usize,
    n: usize,
    by_last: &[Vec<&SparseFunctional>],
    set: &HashSet<SparseFunctional>,
    perm: &mut Vec<usize>,
    signs: &mut Vec<i8>,
    used: &mut Vec<bool>,
    out: &mut Vec<SignedPerm>,
) {
    if j == n {
        out.push(SignedPerm { perm: perm.clone(), signs: signs.clone() });
        return;
    }
    for t in 0..n {
        if used[t] {
            continue;
        }
        for s in [1i8, -1] {
            perm[j] = t;
            signs[j] = s;
            used[t] = true;
            if partial_ok(&by_last[j], perm, signs, set) {
                extend_signed(j + 1, n, by_last, set, perm, signs, used, out);
            }
            used[t] = false;
        }
    }
    perm[j] = usize::MAX;
    signs[j] = 0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Completeness {
    /// Extreme points are `{±e_p}`, so every isometry is a signed vertex map.
    Verified,
    /// Extreme points include more than `{±e_p}`, but colour refinement of
    /// the vertex-facet incidence isolates `{±e_p}` as an invariant class,
    /// so every isometry is still a signed vertex map.
    CertifiedByIncidence,
    /// Extreme points were not checked or are not `{±e_p}`; the signed-map
    /// search alone does not exclude other isometries.
    Unverified,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaIsometryReport {
    pub order: String,
    pub aut_order: String,
    pub essential_order: usize,
    /// Every generator maps the facet set onto itself.
    pub generators_certified: bool,
    pub completeness: Completeness,
    pub extreme_points_checked: bool,
    /// Exhaustive signed-map search agrees with `{±1} × Aut`, when run.
    pub brute_force_agrees: Option<bool>,
    /// Checked for dimensions up to 16.
    pub pair_norms_distinguish: Option<bool>,
}

pub struct GammaIsometryGroup {
    pub automorphisms: AutomorphismGroup,
    pub report: GammaIsometryReport,
}

impl GammaIsometryGroup {
    /// `{ε P_φ}` listed explicitly, if the order is at most `cap`.
    pub fn elements(&self, cap: usize) -> Result<Vec<SignedPerm>> {
        let auts = self.automorphisms.elements(cap / 2)?;
        let n = self.automorphisms.degree();
        let mut out: Vec<SignedPerm> = auts
            .into_iter()
            .flat_map(|p| [1i8, -1].map(|s| SignedPerm { perm: p.0.clone(), signs: vec![s; n] }))
            .collect();
        out.sort();
        Ok(out)
    }
}

/// `‖e_n + e_m‖ ≠ ‖e_p − e_q‖` for all pairs, and the distance is read back
/// from `1/(‖e_n + e_m‖ − 1) = 1 + 2d(n, m)`.
pub fn pair_norms_distinguish(space: &GammaSpace) -> bool {
    let n = space.dim();
    let mut plus = BTreeSet::new();
    let mut minus = BTreeSet::new();
    let mut readable = true;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut a = vec![Rational::zero(); n];
            a[i] = rat_int(1);
            a[j] = rat_int(1);
            let p = space.norm(&a).expect("dimension");
            a[j] = rat_int(-1);
            let m = space.norm(&a).expect("dimension");
            let d = i64::from(space.metric().get(i, j));
            readable &= (p.clone() - rat_int(1)).recip() == rat_int(1 + 2 * d);
            plus.insert(p);
            minus.insert(m);
        }
    }
    readable && plus.is_disjoint(&minus)
}

pub fn gamma_isometry_group(space: &GammaSpace, extreme_cap: usize) -> Result<GammaIsometryGroup> {
    let automorphisms = automorphism_group(space.graph(), DEFAULT_VERTEX_CAP.max(space.dim()))?;
    let n = space.dim();
    let mut gens: Vec<SignedPerm> =
        automorphisms.generators().into_iter().map(|p| SignedPerm { perm: p.0, signs: vec![1; n] }).collect();
    gens.push(SignedPerm { perm: (0..n).collect(), signs: vec![-1; n] });
    let set: HashSet<SparseFunctional> = space.symmetric_facets().into_iter().collect();
    let generators_certified = crate::par::all(&gens, |g| {
        let p = Perm(g.perm.clone());
        space.facets().iter().all(|f| set.contains(&f.push_forward(&p, &g.signs)))
    });

    let (extreme_points_checked, completeness) = if n <= extreme_cap {
        let (vertices, rep) = extreme_points(space, extreme_cap)?;
        let c = if rep.signed_units_only {
            Completeness::Verified
        } else if units_form_invariant_class(space, &vertices)? {
            Completeness::CertifiedByIncidence
        } else {
            Completeness::Unverified
        };
        (true, c)
    } else {
        (false, Completeness::Unverified)
    };
    let order = automorphisms.order() * num_bigint::BigUint::from(2u32);
    let mut report = GammaIsometryReport {
        order: order.to_string(),
        aut_order: automorphisms.order().to_string(),
        essential_order: 2 * automorphisms.core_order(),
        generators_certified,
        completeness,
        extreme_points_checked,
        brute_force_agrees: None,
        pair_norms_distinguish: (n <= 16).then(|| pair_norms_distinguish(space)),
    };
    let group = GammaIsometryGroup { automorphisms, report: report.clone() };
    if n <= BRUTE_FORCE_CAP {
        let brute = brute_force_signed_maps(space)?;
        let ours = group.elements(usize::MAX / 4)?;
        report.brute_force_agrees = Some(brute == ours);
    }
    Ok(GammaIsometryGroup { report, ..group })
}

/// Whether the signed unit vectors form a union of incidence colour classes.
pub fn units_form_invariant_class(space: &GammaSpace, vertices: &[Vec<Rational>]) -> Result<bool> {
    let dense: Vec<Vec<Rational>> = space.symmetric_facets().iter().map(|f| f.dense(space.dim())).collect();
    let incidence = polytope::facet_incidence(vertices, &dense)?;
    let colors = polytope::incidence_colors(vertices.len(), &incidence);
    let is_unit: Vec<bool> = vertices
        .iter()
        .map(|v| v.iter().filter(|x| !x.is_zero()).count() == 1 && v.iter().all(|x| x.is_zero() || x.abs() == rat_int(1)))
        .collect();
    let unit_colors: BTreeSet<usize> = (0..vertices.len()).filter(|&i| is_unit[i]).map(|i| colors[i]).collect();
    Ok(is_unit.iter().filter(|u| **u).count() == 2 * space.dim()
        && (0..vertices.len()).all(|i| is_unit[i] || !unit_colors.contains(&colors[i])))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C0DisplayReport {
    pub vertices: usize,
    pub gadget: GadgetReport,
    pub isometries: GammaIsometryReport,
    /// `|Isom| = 2 |Aut(Γ)|`.
    pub order_law: bool,
    /// The isometry group, with interchangeable leaves factored out, is `{±1} × h`.
    pub isomorphic_modulo_twins: bool,
    /// The full isometry group is `{±1} × h`.
    pub isomorphic: bool,
}

pub fn display_on_c0(h: &PermGroup, depths: &[usize]) -> Result<(GammaSpace, GadgetLayout, GammaIsometryGroup, C0DisplayReport)> {
    let (graph, layout) = build_display_graph(h, depths)?;
    let gadget = verify_gadget(&graph, &layout, h)?;
    let space = GammaSpace::new(graph)?;
    let iso = gamma_isometry_group(&space, DEFAULT_EXTREME_CAP)?;
    let rep = &iso.report;
    let order_law = rep.order == (iso.automorphisms.order() * num_bigint::BigUint::from(2u32)).to_string();
    let equal = gadget.verdict == GadgetVerdict::Equal;
    let report = C0DisplayReport {
        vertices: space.dim(),
        isomorphic_modulo_twins: equal && gadget.injective_modulo_twins && rep.generators_certified,
        isomorphic: equal && gadget.injective && rep.generators_certified,
        gadget,
        isometries: rep.clone(),
        order_law,
    };
    Ok((space, layout, iso, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn unit(n: usize, i: usize, s: i64) -> Vec<Rational> {
        let mut v = vec![rat_int(0); n];
        v[i] = rat_int(s);
        v
    }

    #[test]
    fn path3_norms() {
        let sp = GammaSpace::new(Graph::path(3)).unwrap();
        let a = vec![rat_int(1), rat_int(0), rat_int(1)];
        assert_eq!(sp.norm(&a).unwrap(), rat(6, 5));
        let b = vec![rat_int(1), rat_int(-1), rat_int(0)];
        assert_eq!(sp.norm(&b).unwrap(), rat(5, 4));
        assert_eq!(sp.norm(&unit(3, 1, -1)).unwrap(), rat_int(1));
        let c = vec![rat_int(1), rat_int(1), rat_int(0)];
        assert_eq!(sp.norm(&c).unwrap(), rat(4, 3));
    }

    #[test]
    fn isometry_orders() {
        for (g, want) in [(Graph::path(3), 4u32), (Graph::star(3), 12)] {
            let sp = GammaSpace::new(g).unwrap();
            let iso = gamma_isometry_group(&sp, 0).unwrap();
            assert_eq!(iso.report.order, want.to_string());
            assert_eq!(iso.report.brute_force_agrees, Some(true));
            assert!(iso.report.generators_certified);
            assert_eq!(iso.report.pair_norms_distinguish, Some(true));
        }
    }

    #[test]
    fn support_ties_lowest_index() {
        let sp = GammaSpace::new(Graph::path(3)).unwrap();
        let f = sp.support(&[rat_int(1), rat_int(1), rat_int(0)]).unwrap();
        assert_eq!(f.dense(3), vec![rat_int(1), rat(1, 3), rat_int(0)]);
    }
}
