use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lambda::{check_pimple_properties, near_point, select_lambda, sphere_point, LambdaChoice, LambdaConfig, PropertyReport, SpikeLevel};
use super::norm::{PimpleSpace, Spike};
use super::schedule::{act, build_y_sequence, distance, distinguished_mu, normalize, orbit_separations, orbit_up_to_sign, MuSchedule, SeparationReport};
use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::group::{MatrixGroup, MatrixGroupRecord};
use crate::linalg::{self, Matrix};
use crate::par;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayConfig {
    pub eps: f64,
    pub m: f64,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub deviation_samples: usize,
    pub candidate_cap: usize,
}

impl Default for DisplayConfig {
    fn default() -> Self {
        DisplayConfig { eps: 0.25, m: 0.5, samples: 2000, seed: 0, tolerance: 1e-9, deviation_samples: 500, candidate_cap: 1_000_000 }
    }
}

/// Per-level parameters of the renorming.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelParameters {
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
    pub b: f64,
    pub alpha: f64,
    pub mu: f64,
    pub d: f64,
    pub lambda: Dd,
    pub kappa: Dd,
    pub orbit_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PimpleSchedule {
    pub eps: f64,
    pub m: f64,
    pub levels: Vec<LevelParameters>,
}

/// A spike tip `λ_k⁻¹ g y_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoint {
    pub point: Vec<Dd>,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayResult {
    pub dim: usize,
    pub group: MatrixGroupRecord,
    /// The sequence after pruning dependent vectors.
    pub x: Vec<Vec<f64>>,
    pub pruned: Vec<usize>,
    pub mu: MuSchedule,
    pub separation: SeparationReport,
    pub y: Vec<Vec<Dd>>,
    pub schedule: PimpleSchedule,
    pub space: PimpleSpace,
    pub extremes: Vec<ExtremePoint>,
    pub properties: PropertyReport,
    pub config: DisplayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isometry: Option<IsometryReport>,
}

impl DisplayResult {
    pub fn group(&self) -> Result<MatrixGroup<f64>> {
        Ok(self.group.decode(crate::group::DEFAULT_GROUP_CAP, self.config.tolerance)?.to_f64())
    }
}

fn check_orthogonal(g: &MatrixGroup<f64>, tol: f64) -> Result<()> {
    for m in g.elements() {
        let p = m.transpose().mul(m)?;
        if !p.is_identity(tol.max(1e-12) * 10.0) {
            return Err(Error::InvalidInput("group element is not a Euclidean isometry".into()));
        }
    }
    Ok(())
}

/// Drops vectors dependent on their predecessors, left to right.
pub fn prune_dependent(x: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for (i, v) in x.iter().enumerate() {
        let n = linalg::euclid(v);
        if n == 0.0 || linalg::distance_to_span(v, &kept) / n < 1e-10 {
            dropped.push(i);
        } else {
            kept.push(v.clone());
        }
    }
    (kept, dropped)
}

/// `(1, 2, …, n)/‖·‖` followed by the standard basis.
pub fn default_sequence(dim: usize) -> Vec<Vec<f64>> {
    let lead: Vec<f64> = (1..=dim).map(|i| i as f64).collect();
    let n = linalg::euclid(&lead);
    let mut x = vec![linalg::scaled(&lead, 1.0 / n)];
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        x.push(e);
    }
    x
}

/// Renorms Euclidean `R^dim` so that `g` is the full isometry group.
pub fn display_renorm(g: &MatrixGroup<f64>, x: &[Vec<f64>], cfg: &DisplayConfig) -> Result<DisplayResult> {
    let dim = g.dim();
    if x.iter().any(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: x.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(0) });
    }
    if !g.contains_minus_identity(cfg.tolerance) {
        return Err(Error::NecessaryCondition("the group does not contain -Id".into()));
    }
    check_orthogonal(g, cfg.tolerance)?;
    let (x, pruned) = prune_dependent(x);
    if x.len() != dim {
        return Err(Error::InvalidInput(format!("sequence spans a {}-dimensional subspace of R^{dim}", x.len())));
    }
    let mu = distinguished_mu(&x, g, cfg.eps)?;
    let (y, separation) = build_y_sequence(&x, &mu, g)?;
    if !separation.passed() {
        return Err(Error::CheckFailed(format!("separation violated: {separation:?}")));
    }
    let c = orbit_separations(g, &y);
    let mut levels = Vec::with_capacity(y.len());
    let mut running = f64::INFINITY;
    for (k, yk) in y.iter().enumerate() {
        running = running.min(c[k] / 4.0);
        levels.push(SpikeLevel { points: orbit_up_to_sign(g, yk), c: c[k], delta: running, b: None });
    }
    let lcfg = LambdaConfig { m: cfg.m, samples: cfg.samples, seed: cfg.seed, decomposition_tol: 1e-9 };
    let choices = select_lambda(dim, &levels, &lcfg)?;
    let properties = check_pimple_properties(dim, &levels, &choices, cfg.m, cfg.samples, cfg.seed.wrapping_add(7919), 1e-7)?;
    assemble(g, x, pruned, mu, separation, y, &levels, &choices, properties, cfg)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    g: &MatrixGroup<f64>,
    x: Vec<Vec<f64>>,
    pruned: Vec<usize>,
    mu: MuSchedule,
    separation: SeparationReport,
    y: Vec<Vec<Dd>>,
    levels: &[SpikeLevel],
    choices: &[LambdaChoice],
    properties: PropertyReport,
    cfg: &DisplayConfig,
) -> Result<DisplayResult> {
    let dim = g.dim();
    let mut spikes = Vec::new();
    let mut extremes = Vec::new();
    let mut params = Vec::new();
    for (k, (lv, ch)) in levels.iter().zip(choices).enumerate() {
        for p in &lv.points {
            spikes.push(Spike { direction: p.clone(), lambda: ch.lambda });
            let tip: Vec<Dd> = p.iter().map(|&v| v / ch.lambda).collect();
            extremes.push(ExtremePoint { point: tip.iter().map(|&v| -v).collect(), level: k });
            extremes.push(ExtremePoint { point: tip, level: k });
        }
        params.push(LevelParameters {
            c: lv.c,
            eps: lv.c / 2.0,
            delta: lv.delta,
            b: ch.b,
            alpha: mu.alpha[k],
            mu: mu.mu[k],
            d: mu.d[k],
            lambda: ch.lambda,
            kappa: ch.kappa,
            orbit_size: 2 * lv.points.len(),
        });
    }
    let space = PimpleSpace::new(dim, spikes)?;
    Ok(DisplayResult {
        dim,
        group: MatrixGroupRecord::encode(g, |&v| Scalar::Float(v)),
        x,
        pruned,
        mu,
        separation,
        y,
        schedule: PimpleSchedule { eps: cfg.eps, m: cfg.m, levels: params },
        space,
        extremes,
        properties,
        config: *cfg,
        isometry: None,
    })
}

/// Length, in the renormed space, of a maximal segment of the unit sphere
/// starting at the extreme point `p`; `verified` records that the segment
/// lies on the sphere and cannot be extended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentInvariant {
    pub value: f64,
    pub verified: bool,
}

pub fn segment_invariant(space: &PimpleSpace, p: &[Dd]) -> Result<SegmentInvariant> {
    let dim = p.len();
    if dim == 1 {
        return Ok(SegmentInvariant { value: 0.0, verified: true });
    }
    let r = dd::norm2(p);
    let v: Vec<Dd> = p.iter().map(|&t| t / r).collect();
    let lambda = r.recip();
    // orthogonal direction built from the basis vector least aligned with v
    let i = (0..dim).min_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap();
    let mut e = vec![Dd::ZERO; dim];
    e[i] = Dd::ONE;
    let a = dd::dot(&e, &v);
    let u = normalize(&e.iter().zip(&v).map(|(&ei, &vi)| ei - a * vi).collect::<Vec<_>>());
    let side = ((Dd::ONE - lambda) * (Dd::ONE + lambda)).sqrt();
    let q: Vec<Dd> = v.iter().zip(&u).map(|(&vi, &ui)| lambda * vi + side * ui).collect();
    let w: Vec<Dd> = q.iter().zip(p).map(|(&qi, &pi)| qi - pi).collect();
    let value = space.norm(&w)?;
    let at = |t: f64| -> Result<Dd> {
        let z: Vec<Dd> = p.iter().zip(&w).map(|(&pi, &wi)| pi + Dd::from(t) * wi).collect();
        space.norm(&z)
    };
    let tight = 1e-24;
    let excess = |t: f64| -> Result<f64> { Ok((at(t)? - Dd::ONE).hi()) };
    let on_sphere = [0.25, 0.5, 0.75].iter().map(|&t| excess(t)).collect::<Result<Vec<_>>>()?.iter().all(|e| e.abs() < tight);
    let beyond = excess(2.0)? > tight && excess(-1.0)? > tight;
    Ok(SegmentInvariant { value: value.hi(), verified: on_sphere && beyond })
}

/// A linear map sending a basis of extreme points to extreme points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub matrix: Vec<Vec<f64>>,
    pub member: bool,
    pub deviation: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub extreme_points: usize,
    pub level_invariants: Vec<f64>,
    pub invariants_verified: bool,
    pub classes_match_levels: bool,
    pub assignments_tried: usize,
    pub candidates: Vec<Candidate>,
    pub order: usize,
    pub equals_input: bool,
    /// Smallest deviation among rejected non-members.
    pub min_rejected_deviation: Option<f64>,
    pub rejection_threshold: f64,
}

impl IsometryReport {
    pub fn elements(&self) -> Vec<Matrix<f64>> {
        self.candidates.iter().filter(|c| c.accepted).map(|c| Matrix::from_rows(c.matrix.clone()).expect("square")).collect()
    }
}

/// Groups points whose invariants agree to `rel` relative precision.
fn cluster(values: &[f64], rel: f64) -> Vec<usize> {
    let mut reps: Vec<f64> = Vec::new();
    values
        .iter()
        .map(|&v| match reps.iter().position(|&r| (r - v).abs() <= rel * r.abs().max(v.abs()).max(1e-300)) {
            Some(i) => i,
            None => {
                reps.push(v);
                reps.len() - 1
            }
        })
        .collect()
}

/// Recovers the isometry group from the isolated extreme points: every
/// class-preserving assignment on a basis of extreme points that maps the
/// whole set onto itself is a candidate; members of the input group are
/// accepted by matrix comparison, others by a sampled norm test.
pub fn isometry_group_from_extremes(result: &DisplayResult) -> Result<IsometryReport> {
    let cfg = &result.config;
    let g = result.group()?;
    let space = &result.space;
    let dim = result.dim;
    let pts: Vec<Vec<Dd>> = result.extremes.iter().map(|e| e.point.clone()).collect();
    let invariants: Vec<SegmentInvariant> = par::map(&pts, |p| segment_invariant(space, p)).into_iter().collect::<Result<_>>()?;
    let inv_values: Vec<f64> = invariants.iter().map(|s| s.value).collect();
    let classes = cluster(&inv_values, 1e-9);
    let classes_match_levels = (0..pts.len()).all(|i| (0..pts.len()).all(|j| (classes[i] == classes[j]) == (result.extremes[i].level == result.extremes[j].level)));
    let mut level_invariants = vec![0.0; result.schedule.levels.len()];
    for (e, v) in result.extremes.iter().zip(&inv_values) {
        level_invariants[e.level] = *v;
    }
    // well-conditioned spanning subset, chosen greedily
    let f64pts: Vec<Vec<f64>> = pts.iter().map(|p| dd::to_f64_vec(p)).collect();
    let mut basis: Vec<usize> = Vec::new();
    while basis.len() < dim {
        let chosen: Vec<Vec<f64>> = basis.iter().map(|&i| f64pts[i].clone()).collect();
        let (best, dist) = (0..pts.len())
            .map(|i| (i, linalg::distance_to_span(&f64pts[i], &chosen) / linalg::euclid(&f64pts[i])))
            .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if dist < 1e-14 {
            return Err(Error::InvalidInput("extreme points do not span".into()));
        }
        basis.push(best);
    }
    let bmat = Matrix::from_columns(&basis.iter().map(|&i| pts[i].clone()).collect::<Vec<_>>())?;
    let binv = bmat.inverse(1e-28)?;
    // pairwise norms drive the pruning of partial assignments
    let pair = |i: usize, j: usize| -> Result<f64> { Ok(space.norm(&pts[i].iter().zip(&pts[j]).map(|(&a, &b)| a - b).collect::<Vec<_>>())?.hi()) };
    let needed: Vec<(usize, usize)> = (0..pts.len()).flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> = par::map(&needed, |&(i, j)| pair(i, j)).into_iter().collect::<Result<_>>()?;
    let mut pn = vec![vec![0.0; pts.len()]; pts.len()];
    for (&(i, j), v) in needed.iter().zip(values) {
        pn[i][j] = v;
        pn[j][i] = v;
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-15 + 1e-10 * a.abs().max(b.abs());
    let mut min_sep = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            min_sep = min_sep.min(linalg::euclid(&linalg::sub(&f64pts[i], &f64pts[j])));
        }
    }
    let match_tol = min_sep / 4.0;
    let mut assignments: Vec<Vec<usize>> = Vec::new();
    let mut tried = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    extend(&basis, &classes, &pn, &same, &mut stack, &mut assignments, &mut tried, cfg.candidate_cap)?;
    let maps: Vec<Option<Matrix<Dd>>> = par::map(&assignments, |images| {
        let w = Matrix::from_columns(&images.iter().map(|&i| pts[i].clone()).collect::<Vec<_>>()).ok()?;
        let t = w.mul(&binv).ok()?;
        let mut hit = vec![false; pts.len()];
        for (i, p) in pts.iter().enumerate() {
            let img = dd::to_f64_vec(&t.apply(p).ok()?);
            let j = (0..pts.len()).find(|&j| classes[j] == classes[i] && linalg::euclid(&linalg::sub(&img, &f64pts[j])) < match_tol)?;
            if hit[j] {
                return None;
            }
            hit[j] = true;
        }
        Some(t)
    });
    let consistent: Vec<Matrix<Dd>> = maps.into_iter().flatten().collect();
    let threshold = 10.0 * cfg.tolerance;
    let samples = deviation_samples(result);
    let base_norms: Vec<f64> = par::map(&samples, |y| space.norm(y).map(|v| v.hi())).into_iter().collect::<Result<_>>()?;
    let candidates: Vec<Candidate> = par::map(&consistent, |t| -> Result<Candidate> {
        let tf = t.map(|v| v.hi());
        let member = g.contains(&tf, cfg.tolerance);
        let deviation = sampled_deviation(space, &samples, &base_norms, t, (!member).then_some(threshold))?;
        let accepted = member || deviation <= threshold;
        Ok(Candidate { matrix: tf.to_rows(), member, deviation, accepted })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let accepted: Vec<Matrix<f64>> = candidates.iter().filter(|c| c.accepted).map(|c| Matrix::from_rows(c.matrix.clone())).collect::<Result<_>>()?;
    let equals_input = g.same_elements(&accepted, cfg.tolerance);
    let min_rejected_deviation = candidates.iter().filter(|c| !c.accepted).map(|c| c.deviation).reduce(f64::min);
    Ok(IsometryReport {
        extreme_points: pts.len(),
        level_invariants,
        invariants_verified: invariants.iter().all(|s| s.verified),
        classes_match_levels,
        assignments_tried: tried,
        order: accepted.len(),
        candidates,
        equals_input,
        min_rejected_deviation,
        rejection_threshold: threshold,
    })
}

fn sampled_deviation(space: &PimpleSpace, samples: &[Vec<Dd>], norms: &[f64], t: &Matrix<Dd>, stop_above: Option<f64>) -> Result<f64> {
    let mut deviation = 0.0f64;
    for (y, &ny) in samples.iter().zip(norms) {
        let ty = t.apply(y)?;
        deviation = deviation.max((space.norm(&ty)?.hi() - ny).abs());
        if stop_above.is_some_and(|s| deviation > s) {
            break;
        }
    }
    Ok(deviation)
}

/// `max |⫼Ty⫼ − ⫼y⫼|` over the seeded deviation samples.
pub fn norm_deviation(result: &DisplayResult, t: &Matrix<f64>) -> Result<f64> {
    let samples = deviation_samples(result);
    let norms: Vec<f64> = samples.iter().map(|y| result.space.norm(y).map(|v| v.hi())).collect::<Result<_>>()?;
    sampled_deviation(&result.space, &samples, &norms, &t.map(|&v| Dd::from(v)), None)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    basis: &[usize],
    classes: &[usize],
    pn: &[Vec<f64>],
    same: &dyn Fn(f64, f64) -> bool,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    tried: &mut usize,
    cap: usize,
) -> Result<()> {
    let depth = stack.len();
    if depth == basis.len() {
        out.push(stack.clone());
        return Ok(());
    }
    let src = basis[depth];
    for cand in 0..classes.len() {
        if classes[cand] != classes[src] || stack.contains(&cand) {
            continue;
        }
        *tried += 1;
        if *tried > cap {
            return Err(Error::CapExceeded { what: "basis assignments".into(), cap });
        }
        if (0..depth).all(|a| same(pn[basis[a]][src], pn[stack[a]][cand])) {
            stack.push(cand);
            extend(basis, classes, pn, same, stack, out, tried, cap)?;
            stack.pop();
        }
    }
    Ok(())
}

/// Points for the norm-deviation test: the extreme points, then seeded
/// uniform directions and points near the caps, scaled variously.
fn deviation_samples(result: &DisplayResult) -> Vec<Vec<Dd>> {
    let mut rng = ChaCha8Rng::seed_from_u64(result.config.seed ^ 0x5eed);
    let n = result.config.deviation_samples;
    // the tips themselves carry the largest deviations for non-members
    let mut out: Vec<Vec<Dd>> = result.extremes.iter().map(|e| e.point.clone()).collect();
    out.reserve(n);
    for i in 0..n {
        let y = if i % 2 == 0 || result.extremes.is_empty() {
            sphere_point(&mut rng, result.dim)
        } else {
            let e = &result.extremes[(i / 2) % result.extremes.len()];
            let lam = result.schedule.levels[e.level].lambda;
            let dir: Vec<Dd> = e.point.iter().map(|&v| v * lam).collect();
            let r = (Dd::from(2.0) * result.schedule.levels[e.level].kappa).sqrt() * Dd::from(0.5 + (i % 7) as f64 * 0.3);
            near_point(&mut rng, &dir, r)
        };
        out.push(y);
    }
    out
}

/// Runs the renorming and recovers its isometry group.
pub fn display_and_verify(g: &MatrixGroup<f64>, x: &[Vec<f64>], cfg: &DisplayConfig) -> Result<DisplayResult> {
    let mut r = display_renorm(g, x, cfg)?;
    r.isometry = Some(isometry_group_from_extremes(&r)?);
    Ok(r)
}

/// Distance from `v` to its orbit under `g` minus the identity.
pub fn min_displacement(g: &MatrixGroup<f64>, v: &[f64]) -> f64 {
    let vd = dd::from_f64_slice(v);
    g.elements()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != g.identity_index())
        .map(|(_, m)| distance(&act(m, &vd), &vd).hi())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DisplayConfig {
        DisplayConfig { samples: 400, deviation_samples: 100, ..Default::default() }
    }

    #[test]
    fn pm_identity_dim2_round_trip() {
        let g = MatrixGroup::closure(2, &[Matrix::identity(2).neg()], 10, 1e-9).unwrap();
        let r = display_and_verify(&g, &default_sequence(2), &cfg()).unwrap();
        let iso = r.isometry.as_ref().unwrap();
        assert!(iso.equals_input, "{iso:?}");
        assert!(iso.classes_match_levels);
        assert!(iso.candidates.iter().filter(|c| c.member).all(|c| c.deviation < 1e-20));
        let flip = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(norm_deviation(&r, &flip).unwrap() > iso.rejection_threshold);
        assert!(r.properties.passed, "{:?}", r.properties.failures);
    }

    #[test]
    fn missing_minus_identity_is_rejected() {
        let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = MatrixGroup::closure(2, &[swap], 10, 1e-9).unwrap();
        assert!(matches!(display_renorm(&g, &default_sequence(2), &cfg()), Err(Error::NecessaryCondition(_))));
    }

    #[test]
    fn dependent_vectors_pruned() {
        let (kept, dropped) = prune_dependent(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(kept.len(), 2);
        assert_eq!(dropped, vec![1]);
    }

    #[test]
    fn segment_invariants_separate_levels() {
        let g = MatrixGroup::closure(2, &[Matrix::identity(2).neg()], 10, 1e-9).unwrap();
        let r = display_renorm(&g, &default_sequence(2), &cfg()).unwrap();
        let inv: Vec<SegmentInvariant> = r.extremes.iter().map(|e| segment_invariant(&r.space, &e.point).unwrap()).collect();
        assert!(inv.iter().all(|s| s.verified));
        assert!(inv[0].value > 1.5 * inv[2].value);
    }
}
