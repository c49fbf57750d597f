use serde::{Deserialize, Serialize};

use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::group::MatrixGroup;
use crate::linalg::{self, Matrix};

/// Displacements at or below this are treated as "g fixes the point".
pub const FIX_TOL: f64 = 1e-13;

pub(crate) fn act(g: &Matrix<f64>, v: &[Dd]) -> Vec<Dd> {
    (0..g.rows())
        .map(|i| g.row(i).iter().zip(v).map(|(&a, &b)| Dd::from(a) * b).sum())
        .collect()
}

pub(crate) fn distance(a: &[Dd], b: &[Dd]) -> Dd {
    let d: Vec<Dd> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    dd::norm2(&d)
}

pub(crate) fn normalize(v: &[Dd]) -> Vec<Dd> {
    let n = dd::norm2(v);
    v.iter().map(|&x| x / n).collect()
}

/// Coefficients `μ_k` for the distinguished sequence, with the stabilizer
/// separations `α_k` and distances to span `d_k` they were derived from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSchedule {
    pub eps: f64,
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
    pub d: Vec<f64>,
}

fn pow2_floor(bound: f64) -> f64 {
    let mut p = 1.0f64;
    while p > bound {
        p *= 0.5;
    }
    p
}

/// Builds `μ` with `μ_0 = 1` and each later entry the largest power of 1/2
/// below half the binding constraint, then checks every condition.
pub fn distinguished_mu(x: &[Vec<f64>], g: &MatrixGroup<f64>, eps: f64) -> Result<MuSchedule> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps {eps} outside (0, 1)")));
    }
    let xs: Vec<Vec<Dd>> = x.iter().map(|v| normalize(&dd::from_f64_slice(v))).collect();
    let mut alpha = Vec::with_capacity(x.len());
    let mut d = Vec::with_capacity(x.len());
    let mut stab: Vec<usize> = (0..g.order()).collect();
    for (n, xn) in xs.iter().enumerate() {
        let dn = if n == 0 { 1.0 } else { linalg::distance_to_span(&x[n], &x[..n]) / linalg::euclid(&x[n]) };
        if dn < 1e-12 {
            return Err(Error::InvalidInput(format!("x_{n} depends on its predecessors")));
        }
        d.push(dn);
        let moved = stab
            .iter()
            .map(|&i| distance(&act(&g.elements()[i], xn), xn).hi())
            .filter(|&s| s > FIX_TOL)
            .fold(f64::INFINITY, f64::min);
        let prev = alpha.last().copied().unwrap_or(2.0);
        alpha.push(moved.min(prev).min(2.0));
        stab.retain(|&i| distance(&act(&g.elements()[i], xn), xn).hi() <= FIX_TOL);
    }
    let mut mu = vec![1.0];
    for k in 0..x.len() - 1 {
        let bound = (alpha[k] * mu[k] / 192.0)
            .min(eps * d[k] * mu[k] / 8.0)
            .min(alpha[k] * mu[k] / (8.0 * (1.0 - eps) * d[k + 1]));
        mu.push(pow2_floor(0.5 * bound));
    }
    let sched = MuSchedule { eps, mu, alpha, d };
    let failures = mu_condition_failures(&sched, &xs);
    if !failures.is_empty() {
        return Err(Error::CheckFailed(failures.join("; ")));
    }
    Ok(sched)
}

/// The four bullet conditions, evaluated verbatim; returns the violated ones.
pub fn mu_condition_failures(s: &MuSchedule, xs: &[Vec<Dd>]) -> Vec<String> {
    let (mu, alpha, d, eps) = (&s.mu, &s.alpha, &s.d, s.eps);
    let mut bad = Vec::new();
    let dim = xs.first().map_or(0, Vec::len);
    let mut z = vec![Dd::ZERO; dim];
    for k in 0..mu.len() {
        for (zi, xi) in z.iter_mut().zip(&xs[k]) {
            *zi += Dd::from(mu[k]) * *xi;
        }
        let nz = dd::norm2(&z).hi();
        let inside = |v: f64| (1.0 - eps / 2.0..=1.0 + eps / 2.0).contains(&v);
        if !inside(nz) || !inside(1.0 / nz) {
            bad.push(format!("normalisation at k={k}"));
        }
        let tail: f64 = mu[k + 1..].iter().sum();
        if !(tail < (alpha[k] * mu[k] / 4.0).min(alpha[k] / 16.0).min(mu[k])) {
            bad.push(format!("tail sum at k={k}"));
        }
        if k + 1 < mu.len() {
            if !(8.0 * mu[k + 1] <= (alpha[k] * mu[k] / 24.0).min(eps * d[k] * mu[k])) {
                bad.push(format!("8 mu_(k+1) bound at k={k}"));
            }
            if !((1.0 - eps) * d[k + 1] * mu[k + 1] <= alpha[k] * mu[k] / 8.0) {
                bad.push(format!("(1-eps) d mu bound at k={k}"));
            }
        }
    }
    bad
}

/// Outcome of the exhaustive separation check over `G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `‖y_n − g y_n‖` against its bound, over all g and n.
    pub a_checked: usize,
    pub a_violations: usize,
    pub a_min_ratio: f64,
    /// `‖y_n − g y_m‖` for n > m.
    pub b_checked: usize,
    pub b_violations: usize,
    pub b_min_ratio: f64,
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.a_violations == 0 && self.b_violations == 0
    }
}

/// `(1−ε) μ_{n+1} d_{n+1}`, or `α_n μ_n / 8` past the end of the sequence.
pub fn separation_bound(s: &MuSchedule, n: usize) -> f64 {
    if n + 1 < s.mu.len() {
        (1.0 - s.eps) * s.mu[n + 1] * s.d[n + 1]
    } else {
        s.alpha[n] * s.mu[n] / 8.0
    }
}

/// Normalised partial sums `y_n = z_n / ‖z_n‖` with an exhaustive check of
/// both separation properties.
pub fn build_y_sequence(x: &[Vec<f64>], s: &MuSchedule, g: &MatrixGroup<f64>) -> Result<(Vec<Vec<Dd>>, SeparationReport)> {
    if x.len() != s.mu.len() {
        return Err(Error::DimensionMismatch { expected: s.mu.len(), got: x.len() });
    }
    let xs: Vec<Vec<Dd>> = x.iter().map(|v| normalize(&dd::from_f64_slice(v))).collect();
    let dim = xs[0].len();
    let mut z = vec![Dd::ZERO; dim];
    let mut y = Vec::with_capacity(xs.len());
    for (k, xk) in xs.iter().enumerate() {
        for (zi, xi) in z.iter_mut().zip(xk) {
            *zi += Dd::from(s.mu[k]) * *xi;
        }
        y.push(normalize(&z));
    }
    let mut rep = SeparationReport { a_checked: 0, a_violations: 0, a_min_ratio: f64::INFINITY, b_checked: 0, b_violations: 0, b_min_ratio: f64::INFINITY };
    for gm in g.elements() {
        let images: Vec<Vec<Dd>> = y.iter().map(|v| act(gm, v)).collect();
        for n in 0..y.len() {
            let bound = separation_bound(s, n);
            let dist = distance(&y[n], &images[n]).hi();
            if dist > FIX_TOL {
                rep.a_checked += 1;
                rep.a_min_ratio = rep.a_min_ratio.min(dist / bound);
                if dist < bound {
                    rep.a_violations += 1;
                }
            }
            for m in 0..n {
                let bound = separation_bound(s, m);
                let dist = distance(&y[n], &images[m]).hi();
                rep.b_checked += 1;
                rep.b_min_ratio = rep.b_min_ratio.min(dist / bound);
                if dist < bound {
                    rep.b_violations += 1;
                }
            }
        }
    }
    Ok((y, rep))
}

/// Orbit `G·v` with `v` and `-v` identified; the representative listed is
/// the first image found.
pub fn orbit_up_to_sign(g: &MatrixGroup<f64>, v: &[Dd]) -> Vec<Vec<Dd>> {
    let mut out: Vec<Vec<Dd>> = Vec::new();
    for gm in g.elements() {
        let w = act(gm, v);
        let neg: Vec<Dd> = w.iter().map(|&t| -t).collect();
        if out.iter().all(|o| distance(o, &w).hi() > FIX_TOL && distance(o, &neg).hi() > FIX_TOL) {
            out.push(w);
        }
    }
    out
}

/// `c_k`: smallest nonzero `‖y_j − g y_k‖` over all levels j and g ∈ G.
pub fn orbit_separations(g: &MatrixGroup<f64>, y: &[Vec<Dd>]) -> Vec<f64> {
    y.iter()
        .map(|yk| {
            let mut c = f64::INFINITY;
            for gm in g.elements() {
                let img = act(gm, yk);
                for yj in y {
                    let dist = distance(yj, &img).hi();
                    if dist > FIX_TOL {
                        c = c.min(dist);
                    }
                }
            }
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::MatrixGroup;

    fn pm_id(dim: usize) -> MatrixGroup<f64> {
        MatrixGroup::closure(dim, &[Matrix::identity(dim).neg()], 10, 1e-9).unwrap()
    }

    #[test]
    fn mu_zero_is_one_and_bounds_hold() {
        let g = pm_id(2);
        let x = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = distinguished_mu(&x, &g, 0.25).unwrap();
        assert_eq!(s.mu[0], 1.0);
        assert_eq!(s.alpha[0], 2.0);
        assert!((s.d[1] - 1.0).abs() < 1e-15);
        assert!(s.mu[1] <= s.alpha[0] * s.mu[0] / 32.0);
        let (y, rep) = build_y_sequence(&x, &s, &g).unwrap();
        assert_eq!(y[0], dd::from_f64_slice(&[1.0, 0.0]));
        assert!(rep.passed());
    }

    #[test]
    fn single_element_sequence() {
        let g = pm_id(3);
        let s = distinguished_mu(&[vec![0.0, 0.0, 1.0]], &g, 0.25).unwrap();
        assert_eq!(s.mu, vec![1.0]);
    }

    #[test]
    fn dependent_sequence_rejected() {
        let g = pm_id(2);
        assert!(distinguished_mu(&[vec![1.0, 0.0], vec![2.0, 0.0]], &g, 0.25).is_err());
    }

    #[test]
    fn signed_perm_orbit_and_separation() {
        let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let flip = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let g = MatrixGroup::closure(2, &[swap, flip], 20, 1e-9).unwrap();
        assert_eq!(g.order(), 8);
        let e0 = dd::from_f64_slice(&[1.0, 0.0]);
        assert_eq!(orbit_up_to_sign(&g, &e0).len(), 2);
        let c = orbit_separations(&g, &[e0]);
        assert!((c[0] - 2f64.sqrt()).abs() < 1e-15);
    }
}
