use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::norm::{min_single_norm, PimpleSpace, Spike};
use super::schedule::{distance, normalize};
use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::par;

/// Norm values below `1 - CAP_SLACK` on the base sphere count as "inside a cap".
const CAP_SLACK: f64 = 1e-24;
const MIN_KAPPA: f64 = 1e-28;

/// One level of spikes: its orbit points (up to sign) and the targets
/// for the cap radius and the endpoint segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeLevel {
    pub points: Vec<Vec<Dd>>,
    /// Orbit separation of the level.
    pub c: f64,
    pub delta: f64,
    /// Upper bound on the endpoint segment; `None` derives it from the
    /// previous level as half its segment length.
    pub b: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaConfig {
    pub m: f64,
    pub samples: usize,
    pub seed: u64,
    /// Tolerance for the min-decomposition identity during the search.
    pub decomposition_tol: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig { m: 0.5, samples: 2000, seed: 0, decomposition_tol: 1e-9 }
    }
}

/// A selected level: `λ = 1/(1+κ)` and the bounds actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaChoice {
    pub lambda: Dd,
    pub kappa: Dd,
    /// Largest κ that passed the sampled checks (`λ₀ = 1/(1+κ₀)`).
    pub kappa_threshold: Dd,
    pub b: f64,
    pub bisection_steps: usize,
}

/// Segment from a spike tip to the tangent point on the base sphere.
pub fn segment_length(lambda: Dd) -> Dd {
    (lambda.recip().sqr() - Dd::ONE).sqrt()
}

fn lambda_of(kappa: Dd) -> Dd {
    Dd::ONE / (Dd::ONE + kappa)
}

fn space_for(dim: usize, levels: &[SpikeLevel], lambdas: &[Dd]) -> Result<PimpleSpace> {
    let spikes = levels
        .iter()
        .zip(lambdas)
        .flat_map(|(lv, &lambda)| lv.points.iter().map(move |p| Spike { direction: p.clone(), lambda }))
        .collect();
    PimpleSpace::new(dim, spikes)
}

pub(crate) fn sphere_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Dd> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().any(|x| x.abs() > 1e-6) {
            return normalize(&dd::from_f64_slice(&v));
        }
    }
}

/// Unit point at distance about `radius` from `center` along a random
/// orthogonal direction.
pub(crate) fn near_point(rng: &mut ChaCha8Rng, center: &[Dd], radius: Dd) -> Vec<Dd> {
    let dim = center.len();
    if dim == 1 {
        return center.to_vec();
    }
    let u = sphere_point(rng, dim);
    let a = dd::dot(&u, center);
    let perp: Vec<Dd> = u.iter().zip(center).map(|(&ui, &ci)| ui - a * ci).collect();
    let np = dd::norm2(&perp);
    if np.is_zero() {
        return center.to_vec();
    }
    let v: Vec<Dd> = center.iter().zip(&perp).map(|(&ci, &pi)| ci + radius * pi / np).collect();
    normalize(&v)
}

/// Samples for a level check: half uniform, half clustered near the
/// spikes of `focus` at cap scale and at δ scale.
fn samples_for(dim: usize, levels: &[SpikeLevel], kappas: &[Dd], focus: Option<usize>, n: usize, seed: u64) -> Vec<Vec<Dd>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n / 2 {
        out.push(sphere_point(&mut rng, dim));
    }
    while out.len() < n {
        let k = match focus {
            Some(k) => k,
            None => rng.random_range(0..levels.len()),
        };
        let lv = &levels[k];
        let mut p = lv.points[rng.random_range(0..lv.points.len())].clone();
        if rng.random_bool(0.5) {
            p.iter_mut().for_each(|x| *x = -*x);
        }
        let cap = (Dd::from(2.0) * kappas[k]).sqrt();
        let r = if rng.random_bool(0.5) { cap * Dd::from(rng.random_range(0.0..3.0)) } else { Dd::from(rng.random_range(0.0..2.0) * lv.delta) };
        out.push(near_point(&mut rng, &p, r));
    }
    out
}

/// Per-sample outcome of the sampled property checks.
#[derive(Clone, Debug, Default)]
struct SampleStats {
    max_decomposition_gap: f64,
    lower_violations: usize,
    upper_violations: usize,
    cap_violations: usize,
    below_base: usize,
    solver_failures: usize,
}

fn sample_stats(space: &PimpleSpace, levels: &[SpikeLevel], samples: &[Vec<Dd>], m: f64) -> SampleStats {
    let per: Vec<SampleStats> = par::map(samples, |y| {
        let mut s = SampleStats::default();
        let Ok(v) = space.norm(y) else {
            s.solver_failures = 1;
            return s;
        };
        s.max_decomposition_gap = (v - min_single_norm(space, y)).abs().hi();
        if v.hi() < m - 1e-15 {
            s.lower_violations = 1;
        }
        let excess = (v - Dd::ONE).hi();
        if excess > 1e-20 {
            s.upper_violations = 1;
        }
        if excess < -CAP_SLACK {
            s.below_base = 1;
            let near = levels.iter().any(|lv| {
                lv.points.iter().any(|p| {
                    let neg: Vec<Dd> = p.iter().map(|&x| -x).collect();
                    distance(p, y).hi() < lv.delta || distance(&neg, y).hi() < lv.delta
                })
            });
            if !near {
                s.cap_violations = 1;
            }
        }
        s
    });
    per.into_iter().fold(SampleStats::default(), |mut a, s| {
        a.max_decomposition_gap = a.max_decomposition_gap.max(s.max_decomposition_gap);
        a.lower_violations += s.lower_violations;
        a.upper_violations += s.upper_violations;
        a.cap_violations += s.cap_violations;
        a.below_base += s.below_base;
        a.solver_failures += s.solver_failures;
        a
    })
}

/// Spike tip plus tangent points of its cap, as f64 coordinates.
fn cap_points(dir: &[Dd], lambda: Dd) -> Vec<Vec<f64>> {
    let dim = dir.len();
    let mut pts = vec![dd::to_f64_vec(&dir.iter().map(|&x| x / lambda).collect::<Vec<_>>())];
    let side = ((Dd::ONE - lambda) * (Dd::ONE + lambda)).sqrt();
    for i in 0..dim {
        let mut e = vec![Dd::ZERO; dim];
        e[i] = Dd::ONE;
        let a = dd::dot(&e, dir);
        let perp: Vec<Dd> = e.iter().zip(dir).map(|(&ei, &di)| ei - a * di).collect();
        let np = dd::norm2(&perp);
        if np.hi() < 1e-8 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let q: Vec<Dd> = dir.iter().zip(&perp).map(|(&di, &pi)| lambda * di + Dd::from(sign) * side * pi / np).collect();
            pts.push(dd::to_f64_vec(&q));
        }
    }
    pts
}

/// Smallest `‖x − y‖ / (c_{min(k,l)}/3)` over sampled cap points of distinct
/// spike points (v and −v are distinct here).
fn cap_separation_ratio(levels: &[SpikeLevel], lambdas: &[Dd]) -> f64 {
    let mut caps: Vec<(usize, usize, Vec<Vec<f64>>)> = Vec::new();
    let mut id = 0;
    for (k, (lv, &lambda)) in levels.iter().zip(lambdas).enumerate() {
        for p in &lv.points {
            let neg: Vec<Dd> = p.iter().map(|&x| -x).collect();
            caps.push((k, id, cap_points(p, lambda)));
            caps.push((k, id + 1, cap_points(&neg, lambda)));
            id += 2;
        }
    }
    let ratios = par::map_range(caps.len(), |i| {
        let (ki, _, ref pi) = caps[i];
        let mut best = f64::INFINITY;
        for (kj, _, pj) in &caps[i + 1..] {
            let c = levels[ki.min(*kj)].c / 3.0;
            for a in pi {
                for b in pj {
                    best = best.min(crate::linalg::euclid(&crate::linalg::sub(a, b)) / c);
                }
            }
        }
        best
    });
    ratios.into_iter().fold(f64::INFINITY, f64::min)
}

/// First failing check for the prefix `levels[..=k]`, or `None`.
fn level_failure(dim: usize, levels: &[SpikeLevel], kappas: &[Dd], k: usize, cfg: &LambdaConfig) -> Result<Option<String>> {
    let lambdas: Vec<Dd> = kappas.iter().map(|&q| lambda_of(q)).collect();
    let space = space_for(dim, &levels[..=k], &lambdas[..=k])?;
    let samples = samples_for(dim, &levels[..=k], &kappas[..=k], Some(k), cfg.samples, cfg.seed ^ (k as u64 + 1).wrapping_mul(0x9e37_79b9));
    let st = sample_stats(&space, &levels[..=k], &samples, cfg.m);
    if st.solver_failures > 0 {
        return Ok(Some("solver did not converge".into()));
    }
    if st.max_decomposition_gap > cfg.decomposition_tol {
        return Ok(Some(format!("min-decomposition gap {:.3e}", st.max_decomposition_gap)));
    }
    if st.lower_violations + st.upper_violations > 0 {
        return Ok(Some("norm sandwich m‖y‖ ≤ ⫼y⫼ ≤ ‖y‖".into()));
    }
    if st.cap_violations > 0 {
        return Ok(Some(format!("{} samples below the base norm outside every δ-neighbourhood", st.cap_violations)));
    }
    let ratio = cap_separation_ratio(&levels[..=k], &lambdas[..=k]);
    if ratio < 1.0 {
        return Ok(Some(format!("spike caps closer than c/3 (ratio {ratio:.3})")));
    }
    Ok(None)
}

/// Picks `λ_k` level by level: the largest passing κ is located by bisection
/// in log scale, and κ is then halved to sit strictly inside the admissible
/// range.
pub fn select_lambda(dim: usize, levels: &[SpikeLevel], cfg: &LambdaConfig) -> Result<Vec<LambdaChoice>> {
    if levels.is_empty() {
        return Err(Error::InvalidInput("no spike levels".into()));
    }
    if !(cfg.m > 0.0 && cfg.m < 1.0) {
        return Err(Error::InvalidInput(format!("m {} outside (0, 1)", cfg.m)));
    }
    let mut kappas: Vec<Dd> = Vec::new();
    let mut out: Vec<LambdaChoice> = Vec::new();
    for (k, lv) in levels.iter().enumerate() {
        if lv.points.is_empty() || !(lv.delta > 0.0) {
            return Err(Error::InvalidInput(format!("level {k} has no points or δ ≤ 0")));
        }
        let derived = out.last().map(|p: &LambdaChoice| 0.49 * segment_length(p.lambda).hi());
        let b = match (lv.b, derived) {
            (Some(x), Some(y)) => x.min(y),
            (Some(x), None) => x,
            (None, Some(y)) => y,
            (None, None) => lv.delta,
        };
        // κ ≤ δ/3, segment sqrt(2κ+κ²) ≤ b, κ nonincreasing, λ > m
        let b2 = Dd::from(b).sqr();
        let mut hi = Dd::from(lv.delta / 3.0).min(b2 / ((Dd::ONE + b2).sqrt() + Dd::ONE));
        hi = hi.min(Dd::ONE / Dd::from(cfg.m) - Dd::ONE);
        if let Some(prev) = kappas.last() {
            hi = hi.min(*prev);
        }
        let mut trial = kappas.clone();
        trial.push(hi);
        let mut steps = 0;
        let threshold = if level_failure(dim, levels, &trial, k, cfg)?.is_none() {
            hi
        } else {
            let mut fail = hi;
            let mut pass = hi;
            let mut last_reason = String::new();
            loop {
                pass *= Dd::from(1e-3);
                if pass.hi() < MIN_KAPPA {
                    return Err(Error::PrecisionExhausted(format!("level {k}: {last_reason}")));
                }
                trial[k] = pass;
                steps += 1;
                match level_failure(dim, levels, &trial, k, cfg)? {
                    None => break,
                    Some(r) => {
                        last_reason = r;
                        fail = pass;
                    }
                }
            }
            for _ in 0..30 {
                let mid = (pass * fail).sqrt();
                trial[k] = mid;
                steps += 1;
                if level_failure(dim, levels, &trial, k, cfg)?.is_none() {
                    pass = mid;
                } else {
                    fail = mid;
                }
            }
            pass
        };
        let kappa = threshold * Dd::from(0.5);
        kappas.push(kappa);
        out.push(LambdaChoice { lambda: lambda_of(kappa), kappa, kappa_threshold: threshold, b, bisection_steps: steps });
    }
    Ok(out)
}

/// Endpoint-segment bounds for one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointCheck {
    pub level: usize,
    pub segment: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

/// Sampled verification of the spike-norm properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub samples: usize,
    pub max_decomposition_gap: f64,
    pub decomposition_tol: f64,
    pub sandwich_violations: usize,
    pub samples_below_base: usize,
    pub cap_violations: usize,
    pub cap_separation_ratio: f64,
    pub endpoints: Vec<EndpointCheck>,
    pub solver_failures: usize,
    pub failures: Vec<String>,
    pub passed: bool,
}

pub fn check_pimple_properties(dim: usize, levels: &[SpikeLevel], choices: &[LambdaChoice], m: f64, samples: usize, seed: u64, decomposition_tol: f64) -> Result<PropertyReport> {
    if levels.len() != choices.len() {
        return Err(Error::DimensionMismatch { expected: levels.len(), got: choices.len() });
    }
    let lambdas: Vec<Dd> = choices.iter().map(|c| c.lambda).collect();
    let kappas: Vec<Dd> = choices.iter().map(|c| c.kappa).collect();
    let space = space_for(dim, levels, &lambdas)?;
    let pts = samples_for(dim, levels, &kappas, None, samples, seed);
    let st = sample_stats(&space, levels, &pts, m);
    let ratio = cap_separation_ratio(levels, &lambdas);
    let endpoints: Vec<EndpointCheck> = choices
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let segment = segment_length(c.lambda).hi();
            let lower = (c.lambda.recip() - Dd::ONE).hi();
            EndpointCheck { level: k, segment, lower, upper: c.b, passed: lower <= segment && segment <= c.b }
        })
        .collect();
    let mut failures = Vec::new();
    if st.solver_failures > 0 {
        failures.push(format!("{} solver failures", st.solver_failures));
    }
    if st.max_decomposition_gap > decomposition_tol {
        failures.push(format!("min-decomposition gap {:.3e}", st.max_decomposition_gap));
    }
    if st.lower_violations + st.upper_violations > 0 {
        failures.push("norm sandwich violated".into());
    }
    if st.cap_violations > 0 {
        failures.push(format!("{} cap violations", st.cap_violations));
    }
    if ratio < 1.0 {
        failures.push(format!("cap separation ratio {ratio:.3}"));
    }
    for e in endpoints.iter().filter(|e| !e.passed) {
        failures.push(format!("endpoint segment at level {}", e.level));
    }
    Ok(PropertyReport {
        samples,
        max_decomposition_gap: st.max_decomposition_gap,
        decomposition_tol,
        sandwich_violations: st.lower_violations + st.upper_violations,
        samples_below_base: st.below_base,
        cap_violations: st.cap_violations,
        cap_separation_ratio: ratio,
        endpoints,
        solver_failures: st.solver_failures,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_spike_respects_delta_bound() {
        let lv = SpikeLevel { points: vec![dd::from_f64_slice(&[1.0, 0.0])], c: 2.0, delta: 0.1, b: None };
        let cfg = LambdaConfig { samples: 400, ..Default::default() };
        let ch = select_lambda(2, std::slice::from_ref(&lv), &cfg).unwrap();
        let lam = ch[0].lambda.hi();
        assert!(1.0 / lam - 1.0 <= 0.1 / 3.0 + 1e-15);
        assert!(lam >= 1.0 / (1.0 + 0.1 * 0.75));
        let rep = check_pimple_properties(2, &[lv], &ch, 0.5, 400, 1, 1e-9).unwrap();
        assert!(rep.passed, "{:?}", rep.failures);
    }

    #[test]
    fn later_levels_have_shorter_segments() {
        let s = 0.5f64.sqrt();
        let levels = vec![
            SpikeLevel { points: vec![dd::from_f64_slice(&[1.0, 0.0])], c: 0.7, delta: 0.1, b: None },
            SpikeLevel { points: vec![dd::from_f64_slice(&[s, s])], c: 0.7, delta: 0.1, b: None },
        ];
        let ch = select_lambda(2, &levels, &LambdaConfig { samples: 300, ..Default::default() }).unwrap();
        assert!(ch[1].lambda >= ch[0].lambda);
        assert!(segment_length(ch[1].lambda).hi() < 0.5 * segment_length(ch[0].lambda).hi());
    }
}
