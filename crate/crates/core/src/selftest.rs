//! The eleven acceptance criteria as runnable checks.
//!
//! Each criterion returns a list of [`Check`]s; a failing check carries the
//! offending object as its witness. Runtime limits are part of the verdict.

use std::time::{Duration, Instant};

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dd::{self, Dd};
use crate::diagnostics::{self, GroupSource, DEFAULT_EPS_GRID};
use crate::error::Result;
use crate::fixtures;
use crate::free_space::{self, FiniteMetricSpace, FreeIsometryConfig};
use crate::graph_norm::{self, GammaSpace, SignedPerm, DEFAULT_EXTREME_CAP};
use crate::graphs::{build_display_graph, verify_gadget, GadgetVerdict, Graph};
use crate::group::{signed_perm_matrix, MatrixGroup, Perm};
use crate::linalg::Matrix;
use crate::par;
use crate::pimple::display::{default_sequence, display_and_verify, display_renorm, norm_deviation, DisplayConfig};
use crate::pimple::lambda::{check_pimple_properties, select_lambda, LambdaConfig, SpikeLevel};
use crate::pimple::schedule::{orbit_separations, orbit_up_to_sign};
use crate::report::{Check, Verdict};
use crate::scalar::{rat, rat_int, Rational};
use crate::space::NormedSpace;

pub const CRITERIA: usize = 11;

const TITLES: [&str; CRITERIA] = [
    "graph-norm closed forms",
    "graph-norm extreme points",
    "graph-norm isometry group",
    "gadget verification",
    "pimple min-decomposition",
    "separation bounds",
    "display round trip",
    "Arens-Eells duality",
    "free-space isometries",
    "transform invariance",
    "diagnostics",
];

const LIMITS: [Option<u64>; CRITERIA] = [Some(1), Some(30), Some(60), None, None, None, Some(300), None, None, None, None];

const DECOMPOSITION_TOL: f64 = 1e-7;
const DUALITY_TOL: f64 = 1e-9;
const LUR_TOL: f64 = 1e-6;
const MOLECULES: usize = 500;
const MAX_POINTS: usize = 12;
const ORACLE_SUPPORT: usize = 8;
const FREE_INSTANCES: usize = 25;
const PIMPLE_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestConfig {
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig { seed: 0, tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub seconds: f64,
    pub limit_seconds: Option<u64>,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    /// First failing check, for one-line summaries.
    pub fn headline(&self) -> String {
        match self.checks.iter().find(|c| c.verdict != Verdict::Pass) {
            Some(c) => format!("{}: {}", c.name, c.detail),
            None => format!("{} checks", self.checks.len()),
        }
    }
}

pub fn title(id: usize) -> &'static str {
    TITLES[id - 1]
}

/// Runs one criterion (1-based). Errors become failing checks.
pub fn run_criterion(id: usize, cfg: &SelftestConfig) -> CriterionResult {
    assert!((1..=CRITERIA).contains(&id), "criterion {id} out of range");
    let start = Instant::now();
    let outcome = match id {
        1 => closed_forms(),
        2 => extreme_points(),
        3 => gamma_isometries(),
        4 => gadgets(),
        5 => min_decomposition(cfg),
        6 => separations(cfg),
        7 => round_trip(cfg),
        8 => duality(cfg),
        9 => free_isometries(cfg),
        10 => transform_invariance(cfg),
        _ => diagnostics_checks(cfg),
    };
    let elapsed = start.elapsed();
    let mut checks = outcome.unwrap_or_else(|e| vec![Check::fail("error", e.to_string(), json!({ "error": e.to_string() }))]);
    let limit = LIMITS[id - 1];
    if let Some(secs) = limit {
        let ok = elapsed <= Duration::from_secs(secs);
        checks.push(Check::from_bool("runtime", ok, format!("{:.2} s (limit {secs} s)", elapsed.as_secs_f64()), || {
            json!({ "seconds": elapsed.as_secs_f64(), "limit": secs })
        }));
    }
    CriterionResult {
        id,
        title: title(id).into(),
        passed: checks.iter().all(|c| c.verdict == Verdict::Pass),
        seconds: elapsed.as_secs_f64(),
        limit_seconds: limit,
        checks,
    }
}

pub fn run_all(cfg: &SelftestConfig) -> Vec<CriterionResult> {
    (1..=CRITERIA).map(|id| run_criterion(id, cfg)).collect()
}

fn unit_pair(n: usize, a: usize, b: usize, sign: i64) -> Vec<Rational> {
    let mut v = vec![rat_int(0); n];
    v[a] = rat_int(1);
    v[b] = rat_int(sign);
    v
}

fn closed_forms() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, g) in fixtures::catalog_graphs() {
        let space = GammaSpace::new(g)?;
        let n = space.dim();
        let mut bad: Vec<Value> = Vec::new();
        let mut pairs = 0;
        for a in 0..n {
            for b in a + 1..n {
                pairs += 1;
                let d = i64::from(space.metric().get(a, b));
                let plus = space.norm(&unit_pair(n, a, b, 1))?;
                let minus = space.norm(&unit_pair(n, a, b, -1))?;
                let want_plus = Rational::one() + rat(1, 1 + 2 * d);
                let want_minus = Rational::one() + rat(1, 2 + 2 * d);
                if plus != want_plus || minus != want_minus {
                    bad.push(json!({ "pair": [a, b], "d": d, "plus": plus.to_string(), "minus": minus.to_string() }));
                }
            }
        }
        checks.push(Check::from_bool(name, bad.is_empty(), format!("{pairs} pairs, {} mismatches", bad.len()), || json!(bad)));
    }
    Ok(checks)
}

fn extreme_points() -> Result<Vec<Check>> {
    let graphs: Vec<(&str, Graph)> = fixtures::catalog_graphs().into_iter().filter(|(_, g)| g.n() <= DEFAULT_EXTREME_CAP).collect();
    let reports = par::map(&graphs, |(_, g)| {
        GammaSpace::new(g.clone()).and_then(|s| graph_norm::extreme_points(&s, DEFAULT_EXTREME_CAP)).map(|(_, r)| r)
    });
    let mut checks = Vec::new();
    for ((name, _), rep) in graphs.iter().zip(reports) {
        let rep = rep?;
        let extra: Vec<&Vec<String>> =
            rep.vertices.iter().filter(|v| v.iter().filter(|c| c.as_str() != "0").count() != 1 || v.iter().any(|c| c != "0" && c != "1" && c != "-1")).take(4).collect();
        checks.push(Check::from_bool(
            *name,
            rep.signed_units_only,
            format!("{} vertices, {} expected", rep.vertex_count, 2 * rep.dim),
            || json!({ "vertex_count": rep.vertex_count, "non_unit_vertices": extra }),
        ));
    }
    Ok(checks)
}

/// Graph automorphisms by trying every permutation.
fn automorphisms_by_enumeration(g: &Graph) -> Vec<Vec<usize>> {
    fn rec(g: &Graph, p: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let k = p.len();
        if k == g.n() {
            if g.is_automorphism(p) {
                out.push(p.clone());
            }
            return;
        }
        for t in 0..g.n() {
            if !used[t] && g.degree(t) == g.degree(k) {
                used[t] = true;
                p.push(t);
                rec(g, p, used, out);
                p.pop();
                used[t] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(g, &mut Vec::new(), &mut vec![false; g.n()], &mut out);
    out
}

fn gamma_isometries() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, g) in fixtures::catalog_graphs() {
        let space = GammaSpace::new(g.clone())?;
        let n = space.dim();
        let group = graph_norm::gamma_isometry_group(&space, DEFAULT_EXTREME_CAP)?;
        let mut brute = graph_norm::brute_force_signed_maps(&space)?;
        brute.sort();
        let mut expected: Vec<SignedPerm> = automorphisms_by_enumeration(&g)
            .into_iter()
            .flat_map(|p| [1i8, -1].map(|s| SignedPerm { perm: p.clone(), signs: vec![s; n] }))
            .collect();
        expected.sort();
        let listed = group.elements(usize::MAX / 4)?;
        let order_ok = group.report.order == expected.len().to_string();
        let ok = brute == expected && listed == expected && order_ok && group.report.generators_certified;
        checks.push(Check::from_bool(name, ok, format!("brute force {} maps, expected {}, reported order {}", brute.len(), expected.len(), group.report.order), || {
            let only_brute: Vec<&SignedPerm> = brute.iter().filter(|m| !expected.contains(m)).take(4).collect();
            let only_expected: Vec<&SignedPerm> = expected.iter().filter(|m| !brute.contains(m)).take(4).collect();
            json!({ "only_brute_force": only_brute, "only_expected": only_expected, "reported_order": group.report.order })
        }));
    }
    Ok(checks)
}

fn gadgets() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for name in ["trivial-1", "trivial-3", "s2-2"] {
        let h = fixtures::perm_group(name)?;
        let (g, layout) = build_display_graph(&h, &[1, 2])?;
        let rep = verify_gadget(&g, &layout, &h)?;
        let detail = format!("{} vertices, verdict {}", g.n(), rep.verdict);
        checks.push(match rep.verdict {
            GadgetVerdict::Equal => Check::pass(name, detail),
            GadgetVerdict::KClosureGap => Check::with_verdict(name, Verdict::KClosureGap, detail, Some(json!(rep))),
            GadgetVerdict::Mismatch => Check::fail(name, detail, json!(rep)),
        });
    }
    Ok(checks)
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Nested spike directions `Σ_{i≤k} 4^{-i} e_{i mod dim}`, normalised.
fn nested_directions(dim: usize, levels: usize) -> Vec<Vec<Dd>> {
    let mut acc = vec![0.0; dim];
    (0..levels)
        .map(|k| {
            acc[k % dim] += 0.25f64.powi(k as i32);
            dd::from_f64_slice(&normalized(&acc))
        })
        .collect()
}

fn min_decomposition(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let configs: Vec<(usize, usize)> = (2..=4).flat_map(|d| (1..=3).map(move |l| (d, l))).collect();
    let outcomes = par::map(&configs, |&(dim, count)| -> Result<(usize, usize, f64, Vec<String>)> {
        let g: MatrixGroup<f64> = fixtures::matrix_group(&format!("pm-id-{dim}"))?;
        let y = nested_directions(dim, count);
        let c = orbit_separations(&g, &y);
        let mut delta = f64::INFINITY;
        let levels: Vec<SpikeLevel> = y
            .iter()
            .zip(&c)
            .map(|(yk, &ck)| {
                delta = delta.min(ck / 4.0);
                SpikeLevel { points: orbit_up_to_sign(&g, yk), c: ck, delta, b: None }
            })
            .collect();
        let lcfg = LambdaConfig { seed: cfg.seed, ..LambdaConfig::default() };
        let choices = select_lambda(dim, &levels, &lcfg)?;
        let rep = check_pimple_properties(dim, &levels, &choices, lcfg.m, PIMPLE_SAMPLES, cfg.seed.wrapping_add(1), DECOMPOSITION_TOL)?;
        Ok((dim, count, rep.max_decomposition_gap, rep.failures))
    });
    let mut checks = Vec::new();
    for out in outcomes {
        let (dim, count, gap, failures) = out?;
        checks.push(Check::from_bool(
            format!("dim {dim}, {count} levels"),
            gap <= DECOMPOSITION_TOL,
            format!("max gap {gap:.2e} over {PIMPLE_SAMPLES} samples"),
            || json!({ "max_gap": gap, "other_failures": failures }),
        ));
    }
    Ok(checks)
}

fn display_config(cfg: &SelftestConfig) -> DisplayConfig {
    DisplayConfig { seed: cfg.seed, tolerance: cfg.tolerance, ..DisplayConfig::default() }
}

fn separations(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let groups = fixtures::display_groups();
    let dcfg = display_config(cfg);
    let results = par::map(&groups, |(_, g)| display_renorm(g, &default_sequence(g.dim()), &dcfg));
    let mut checks = Vec::new();
    for ((name, _), r) in groups.iter().zip(results) {
        let s = r?.separation;
        let ok = s.passed();
        checks.push(Check::from_bool(
            *name,
            ok,
            format!("(a) {} checked, (b) {} checked, {} violations", s.a_checked, s.b_checked, s.a_violations + s.b_violations),
            || json!(s),
        ));
    }
    Ok(checks)
}

/// All signed permutation matrices of size `n`.
fn signed_permutations(n: usize) -> Vec<Matrix<f64>> {
    let perms = automorphisms_by_enumeration(&Graph::new(n, &[]).expect("empty graph"));
    let mut out = Vec::new();
    for p in perms {
        for mask in 0..(1u32 << n) {
            let signs: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
            out.push(signed_perm_matrix(&Perm(p.clone()), &signs));
        }
    }
    out
}

fn round_trip(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let groups = fixtures::display_groups();
    let dcfg = display_config(cfg);
    let threshold = 10.0 * dcfg.tolerance;
    let mut checks = Vec::new();
    for (name, g) in &groups {
        let r = display_and_verify(g, &default_sequence(g.dim()), &dcfg)?;
        let iso = r.isometry.as_ref().expect("verified display");
        let recovered = iso.elements();
        let equal = iso.equals_input && g.same_elements(&recovered, 1e-9) && recovered.len() == g.order();
        let bad_candidates: Vec<Value> = iso
            .candidates
            .iter()
            .filter(|c| !c.member && (c.accepted || c.deviation <= threshold))
            .map(|c| json!(c))
            .collect();
        let outsiders: Vec<Matrix<f64>> = signed_permutations(g.dim()).into_iter().filter(|m| !g.contains(m, 1e-9)).collect();
        let deviations = par::map(&outsiders, |m| norm_deviation(&r, m));
        let mut min_dev = f64::INFINITY;
        let mut weak: Vec<Value> = Vec::new();
        for (m, d) in outsiders.iter().zip(deviations) {
            let d = d?;
            min_dev = min_dev.min(d);
            if d <= threshold {
                weak.push(json!({ "matrix": m.to_rows(), "deviation": d }));
            }
        }
        let ok = equal && bad_candidates.is_empty() && weak.is_empty();
        checks.push(Check::from_bool(
            *name,
            ok,
            format!(
                "order {} recovered {}, {} candidates, {} signed non-members, min deviation {:.2e}",
                g.order(),
                recovered.len(),
                iso.candidates.len(),
                outsiders.len(),
                min_dev.min(iso.min_rejected_deviation.unwrap_or(f64::INFINITY))
            ),
            || {
                json!({
                    "recovered": recovered.iter().map(Matrix::to_rows).collect::<Vec<_>>(),
                    "bad_candidates": bad_candidates,
                    "weak_non_members": weak,
                })
            },
        ));
    }
    Ok(checks)
}

fn instance_rng(seed: u64, stream: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(i as u128 * 4096);
    rng
}

fn duality(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let rows = par::map_range(MOLECULES, |i| -> Result<(f64, f64, Option<f64>, Value)> {
        let mut rng = instance_rng(cfg.seed, 8, i);
        let n = rng.random_range(2..=MAX_POINTS);
        let space = free_space::random_metric(&mut rng, n, i % 2 == 0);
        let (space, _) = space.transform_bounded().transform_concave()?;
        let m = free_space::random_molecule(&mut rng, n, n);
        let primal = free_space::ae_norm_primal(&space, &m)?.value;
        let dual = free_space::ae_norm_dual(&space, &m)?.value;
        let support = m.iter().filter(|v| **v != 0.0).count();
        let oracle = if support <= ORACLE_SUPPORT { Some(free_space::transport_by_bases(&space, &m)?) } else { None };
        Ok((primal, dual, oracle, json!({ "instance": i, "metric": space.matrix(), "molecule": m })))
    });
    let mut worst_gap = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut oracle_runs = 0;
    let mut gap_witness = None;
    let mut oracle_witness = None;
    for row in rows {
        let (p, d, o, w) = row?;
        if (p - d).abs() > worst_gap {
            worst_gap = (p - d).abs();
            if worst_gap > DUALITY_TOL {
                gap_witness.get_or_insert(json!({ "primal": p, "dual": d, "case": w.clone() }));
            }
        }
        if let Some(o) = o {
            oracle_runs += 1;
            if (p - o).abs() > worst_oracle {
                worst_oracle = (p - o).abs();
                if worst_oracle > DUALITY_TOL {
                    oracle_witness.get_or_insert(json!({ "primal": p, "oracle": o, "case": w }));
                }
            }
        }
    }
    Ok(vec![
        Check::from_bool("primal = dual", worst_gap <= DUALITY_TOL, format!("{MOLECULES} molecules, max gap {worst_gap:.2e}"), || {
            gap_witness.unwrap_or(Value::Null)
        }),
        Check::from_bool(
            "primal = oracle",
            worst_oracle <= DUALITY_TOL,
            format!("{oracle_runs} molecules with support <= {ORACLE_SUPPORT}, max gap {worst_oracle:.2e}"),
            || oracle_witness.unwrap_or(Value::Null),
        ),
    ])
}

/// The equilateral triangle followed by random metrics on 3 to 7 points,
/// alternating between `{1,2}`-valued and generic distances.
pub fn free_instances(seed: u64) -> Result<Vec<(String, FiniteMetricSpace)>> {
    let mut out = vec![("equilateral3".to_string(), fixtures::metric("equilateral3")?)];
    for i in 1..FREE_INSTANCES {
        let mut rng = instance_rng(seed, 9, i);
        let n = rng.random_range(3..=7);
        let discrete = i % 2 == 1;
        let kind = if discrete { "discrete" } else { "generic" };
        out.push((format!("random-{i}-{kind}-{n}"), free_space::random_metric(&mut rng, n, discrete)));
    }
    Ok(out)
}

fn free_isometries(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let instances = free_instances(cfg.seed)?;
    let fcfg = FreeIsometryConfig { seed: cfg.seed, ..FreeIsometryConfig::default() };
    let reports = par::map(&instances, |(_, d1)| {
        d1.transform_bounded().transform_concave().and_then(|(d3, _)| free_space::ae_isometry_group(&d3, &fcfg))
    });
    let mut checks = Vec::new();
    for ((name, _), rep) in instances.iter().zip(reports) {
        let rep = rep?;
        let mut ok = rep.order == rep.expected_order && rep.extra_isometries == 0 && rep.missing_candidates == 0 && rep.matches_structure;
        if name == "equilateral3" {
            ok &= rep.order == 12;
        }
        checks.push(Check::from_bool(
            name.clone(),
            ok,
            format!("|Isom(Y)| = {}, free-space order {}, extra {}", rep.metric_group.len(), rep.order, rep.extra_isometries),
            || json!(rep),
        ));
    }
    Ok(checks)
}

fn transform_invariance(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, d1) in free_instances(cfg.seed)? {
        let d2 = d1.transform_bounded();
        let (d3, _) = d2.transform_concave()?;
        let cap = usize::MAX;
        let g1 = free_space::metric_isometry_group(&d1, cap)?;
        let g2 = free_space::metric_isometry_group(&d2, cap)?;
        let g3 = free_space::metric_isometry_group(&d3, cap)?;
        let ok = g1 == g2 && g2 == g3;
        checks.push(Check::from_bool(name, ok, format!("orders {}, {}, {}", g1.len(), g2.len(), g3.len()), || {
            let show = |g: &[Perm]| g.iter().map(|p| p.0.clone()).collect::<Vec<_>>();
            json!({ "d1": show(&g1), "d2": show(&g2), "d3": show(&g3) })
        }));
    }
    Ok(checks)
}

fn diagnostics_checks(cfg: &SelftestConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for dim in [2, 3] {
        let space = NormedSpace::Euclidean { dim };
        let mut x = vec![0.0; dim];
        x[0] = 1.0;
        let lur = diagnostics::lur_modulus(&space, &x, &DEFAULT_EPS_GRID, 16, cfg.seed)?;
        let worst = lur
            .table
            .iter()
            .map(|e| (e.eps, e.delta, (e.delta - (2.0 - (4.0 - e.eps * e.eps).sqrt())).abs()))
            .fold((0.0, 0.0, 0.0), |a, b| if b.2 > a.2 { b } else { a });
        checks.push(Check::from_bool(format!("euclidean{dim} LUR modulus"), worst.2 <= LUR_TOL, format!("max error {:.2e}", worst.2), || {
            json!({ "eps": worst.0, "delta": worst.1, "error": worst.2 })
        }));
    }

    let linf = crate::space::linf(2);
    let group = GroupSource::Finite(fixtures::matrix_group("signed-perms-2")?);
    let verdict = diagnostics::convex_transitivity_test(&linf, &group, &[1.0, 0.0], &[0.5, 0.5], cfg.tolerance)?;
    let refuted = verdict.witness.is_some();
    checks.push(Check::from_bool(
        "linf2 convex transitivity fails",
        refuted,
        format!("sup x*(Tx) = {} over {} isometries", verdict.sup, verdict.elements_checked),
        || json!(verdict),
    ));

    for (name, g) in fixtures::display_groups() {
        let dim = g.dim();
        let space = NormedSpace::Euclidean { dim };
        let y = normalized(&default_sequence(dim)[0]);
        let label = format!("{name} separation witness");
        match diagnostics::separation_witness(&space, &g, &y, 16, cfg.seed) {
            Ok(w) => {
                let ok = w.verified && w.beta > 0.0;
                checks.push(Check::from_bool(label, ok, format!("beta {:.3e}, sup {:.6}", w.beta, w.sup), || json!(w)));
            }
            Err(e) => checks.push(Check::fail(label, e.to_string(), json!({ "group": name, "y": y, "error": e.to_string() }))),
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_hold() {
        let r = run_criterion(1, &SelftestConfig::default());
        assert!(r.checks.iter().filter(|c| c.name != "runtime").all(|c| c.verdict == Verdict::Pass), "{:?}", r.checks);
    }

    #[test]
    fn nested_directions_are_unit_and_distinct() {
        let y = nested_directions(2, 3);
        for v in &y {
            assert!((dd::norm2(v).hi() - 1.0).abs() < 1e-15);
        }
        assert!(y[1] != y[2]);
    }

    #[test]
    fn signed_permutation_count() {
        assert_eq!(signed_permutations(3).len(), 48);
    }
}
