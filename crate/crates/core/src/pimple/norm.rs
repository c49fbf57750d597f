use serde::{Deserialize, Serialize};

use crate::dd::{self, Dd};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 5000;
pub const DEFAULT_GAP: f64 = 1e-26;

/// A spike segment `[-v/λ, v/λ]` added to the Euclidean unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(Vec<Dd>, Dd)", into = "(Vec<Dd>, Dd)")]
pub struct Spike {
    pub direction: Vec<Dd>,
    pub lambda: Dd,
}

impl From<(Vec<Dd>, Dd)> for Spike {
    fn from((direction, lambda): (Vec<Dd>, Dd)) -> Spike {
        Spike { direction, lambda }
    }
}

impl From<Spike> for (Vec<Dd>, Dd) {
    fn from(s: Spike) -> Self {
        (s.direction, s.lambda)
    }
}

impl Spike {
    /// `λ / sqrt(1 - λ²)`: the slope at which the spike stops helping.
    fn threshold(&self) -> Dd {
        let one_minus = Dd::ONE - self.lambda;
        let one_plus = Dd::ONE + self.lambda;
        self.lambda / (one_minus * one_plus).sqrt()
    }
}

/// Gauge of the convex hull of the Euclidean ball and the spike segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PimpleSpace {
    dim: usize,
    spikes: Vec<Spike>,
    #[serde(skip, default = "default_gap")]
    gap: f64,
}

fn default_gap() -> f64 {
    DEFAULT_GAP
}

#[derive(Clone, Debug)]
pub struct PimpleSolution {
    pub value: Dd,
    pub coefficients: Vec<Dd>,
    /// A functional with dual norm at most one certifying `value - gap`.
    pub dual: Vec<Dd>,
    pub gap: Dd,
}

impl PimpleSpace {
    /// Directions are renormalised (they must be unit up to 1e-9); each
    /// line is kept once, so `v` and `-v` count as one spike.
    pub fn new(dim: usize, spikes: Vec<Spike>) -> Result<PimpleSpace> {
        let mut kept: Vec<Spike> = Vec::new();
        for s in spikes {
            if s.direction.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: s.direction.len() });
            }
            let n = dd::norm2(&s.direction);
            if (n.hi() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("spike direction has norm {}", n.hi())));
            }
            if !(s.lambda > Dd::from(0.5) && s.lambda < Dd::ONE) {
                return Err(Error::InvalidInput(format!("spike lambda {} outside (1/2, 1)", s.lambda)));
            }
            let direction: Vec<Dd> = s.direction.iter().map(|&x| x / n).collect();
            let same_line = kept.iter().any(|k| (dd::dot(&k.direction, &direction).abs() - Dd::ONE).abs().hi() < 1e-28);
            if !same_line {
                kept.push(Spike { direction, lambda: s.lambda });
            }
        }
        Ok(PimpleSpace { dim, spikes: kept, gap: DEFAULT_GAP })
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = gap;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    /// Spike tips `±v/λ`.
    pub fn tips(&self) -> Vec<Vec<Dd>> {
        let mut out = Vec::with_capacity(2 * self.spikes.len());
        for s in &self.spikes {
            let tip: Vec<Dd> = s.direction.iter().map(|&x| x / s.lambda).collect();
            out.push(tip.iter().map(|&x| -x).collect());
            out.push(tip);
        }
        out
    }

    pub fn norm(&self, y: &[Dd]) -> Result<Dd> {
        Ok(self.solve(y)?.value)
    }

    pub fn norm_f64(&self, y: &[f64]) -> Result<f64> {
        Ok(self.norm(&dd::from_f64_slice(y))?.hi())
    }

    /// Support function of the unit ball: `max(‖φ‖, max_j |<φ, v_j>|/λ_j)`.
    pub fn dual_norm(&self, phi: &[Dd]) -> Dd {
        let mut m = dd::norm2(phi);
        for s in &self.spikes {
            m = m.max(dd::dot(phi, &s.direction).abs() / s.lambda);
        }
        m
    }

    fn certify(&self, candidate: Vec<Dd>, y: &[Dd], best: &mut (Dd, Vec<Dd>)) {
        let h = self.dual_norm(&candidate);
        if h.is_zero() {
            return;
        }
        let phi: Vec<Dd> = candidate.iter().map(|&x| x / h).collect();
        let lb = dd::dot(&phi, y);
        if lb > best.0 {
            *best = (lb, phi);
        }
    }

    /// Minimise `‖y - Σ t_j v_j‖ + Σ λ_j |t_j|` by cyclic exact coordinate
    /// minimisation; stops once a dual certificate closes the gap.
    pub fn solve(&self, y: &[Dd]) -> Result<PimpleSolution> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        let ny = dd::norm2(y);
        if ny.is_zero() {
            return Ok(PimpleSolution { value: Dd::ZERO, coefficients: vec![Dd::ZERO; self.spikes.len()], dual: vec![Dd::ZERO; self.dim], gap: Dd::ZERO });
        }
        let thresholds: Vec<Dd> = self.spikes.iter().map(Spike::threshold).collect();
        let mut t = vec![Dd::ZERO; self.spikes.len()];
        let mut r = y.to_vec();
        let mut best = (Dd::from(f64::NEG_INFINITY), vec![Dd::ZERO; self.dim]);
        self.certify(y.to_vec(), y, &mut best);
        for _ in 0..MAX_SWEEPS {
            for (j, s) in self.spikes.iter().enumerate() {
                let v = &s.direction;
                if !t[j].is_zero() {
                    for (ri, vi) in r.iter_mut().zip(v) {
                        *ri += t[j] * *vi;
                    }
                }
                let a = dd::dot(&r, v);
                let perp: Vec<Dd> = r.iter().zip(v).map(|(&ri, &vi)| ri - a * vi).collect();
                let h = dd::norm2(&perp);
                let excess = a.abs() - thresholds[j] * h;
                t[j] = if excess > Dd::ZERO { Dd::from(a.signum()) * excess } else { Dd::ZERO };
                if !t[j].is_zero() {
                    for (ri, vi) in r.iter_mut().zip(v) {
                        *ri -= t[j] * *vi;
                    }
                }
            }
            let nr = dd::norm2(&r);
            let value = nr + self.spikes.iter().zip(&t).map(|(s, tj)| s.lambda * tj.abs()).sum::<Dd>();
            if !nr.is_zero() {
                self.certify(r.clone(), y, &mut best);
            }
            for (j, s) in self.spikes.iter().enumerate() {
                if t[j].is_zero() {
                    continue;
                }
                // optimal single-spike dual: λ sign(t) v + sqrt(1-λ²) u, u ⟂ v
                let a = dd::dot(&r, &s.direction);
                let perp: Vec<Dd> = r.iter().zip(&s.direction).map(|(&ri, &vi)| ri - a * vi).collect();
                let np = dd::norm2(&perp);
                let side = ((Dd::ONE - s.lambda) * (Dd::ONE + s.lambda)).sqrt();
                let sign = Dd::from(t[j].signum());
                let cand: Vec<Dd> = s
                    .direction
                    .iter()
                    .zip(&perp)
                    .map(|(&vi, &pi)| sign * s.lambda * vi + if np.is_zero() { Dd::ZERO } else { side * pi / np })
                    .collect();
                self.certify(cand, y, &mut best);
            }
            let gap = value - best.0;
            if gap.hi() <= self.gap * value.hi().max(1.0) {
                return Ok(PimpleSolution { value, coefficients: t, dual: best.1, gap });
            }
        }
        Err(Error::NoConvergence(format!("pimple norm did not reach duality gap {}", self.gap)))
    }

    /// A norming functional for `y` (dual norm one).
    pub fn support(&self, y: &[Dd]) -> Result<Vec<Dd>> {
        Ok(self.solve(y)?.dual)
    }
}

/// `min_t ‖y - t x0‖ + λ|t|` for a unit vector `x0` under the Euclidean norm.
pub fn single_pimple_norm(x0: &[Dd], lambda: Dd, y: &[Dd]) -> Dd {
    let a = dd::dot(y, x0);
    let perp: Vec<Dd> = y.iter().zip(x0).map(|(&yi, &xi)| yi - a * xi).collect();
    let h = dd::norm2(&perp);
    let spike = Spike { direction: x0.to_vec(), lambda };
    if a.abs() > spike.threshold() * h {
        let side = ((Dd::ONE - lambda) * (Dd::ONE + lambda)).sqrt();
        lambda * a.abs() + h * side
    } else {
        dd::norm2(y)
    }
}

/// `min_t base(y - t x0) + λ|t|` for an arbitrary convex `base`, by golden
/// section search on a bracket containing the minimiser.
pub fn single_pimple_norm_with(base: &dyn Fn(&[Dd]) -> Dd, x0: &[Dd], lambda: Dd, y: &[Dd], iterations: usize) -> Dd {
    let f = |t: Dd| {
        let z: Vec<Dd> = y.iter().zip(x0).map(|(&yi, &xi)| yi - t * xi).collect();
        base(&z) + lambda * t.abs()
    };
    // |t| beyond 2 base(y)/(1-λ)·(1/base(x0)) cannot beat t = 0
    let bound = Dd::from(2.0) * base(y) / ((Dd::ONE - lambda) * base(x0));
    let (mut lo, mut hi) = (-bound, bound);
    let phi = Dd::from((5f64.sqrt() - 1.0) / 2.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    fc.min(fd).min(f(Dd::ZERO))
}

/// `min(‖y‖, min_j single-spike norm)`; equals the multi-spike norm when the
/// spikes are well separated.
pub fn min_single_norm(space: &PimpleSpace, y: &[Dd]) -> Dd {
    space
        .spikes()
        .iter()
        .map(|s| single_pimple_norm(&s.direction, s.lambda, y))
        .fold(dd::norm2(y), Dd::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vec<Dd> {
        dd::from_f64_slice(x)
    }

    #[test]
    fn single_spike_tip_and_far_point() {
        let lam = Dd::from(0.8);
        let sp = PimpleSpace::new(2, vec![Spike { direction: v(&[1.0, 0.0]), lambda: lam }]).unwrap();
        // the tip 1/λ e0 has norm one
        let tip = vec![Dd::ONE / lam, Dd::ZERO];
        assert!((sp.norm(&tip).unwrap() - Dd::ONE).abs().hi() < 1e-28);
        // orthogonal direction is untouched
        assert!((sp.norm(&v(&[0.0, 1.0])).unwrap() - Dd::ONE).abs().hi() < 1e-28);
        // closed form agrees with the generic search
        let y = v(&[0.9, 0.2]);
        let closed = single_pimple_norm(&v(&[1.0, 0.0]), lam, &y);
        let generic = single_pimple_norm_with(&|z: &[Dd]| dd::norm2(z), &v(&[1.0, 0.0]), lam, &y, 200);
        assert!((closed - generic).abs().hi() < 1e-12);
        assert!((sp.norm(&y).unwrap() - closed).abs().hi() < 1e-26);
    }

    #[test]
    fn tiny_spikes_resolve() {
        let kappa = Dd::from(1e-17);
        let lam = Dd::ONE / (Dd::ONE + kappa);
        let sp = PimpleSpace::new(3, vec![Spike { direction: v(&[0.0, 1.0, 0.0]), lambda: lam }]).unwrap();
        let n = sp.norm(&v(&[0.0, 1.0, 0.0])).unwrap();
        assert!(n < Dd::ONE);
        assert!(((Dd::ONE - n) - kappa).abs().hi() < 1e-30);
    }

    #[test]
    fn rejects_bad_spikes() {
        assert!(PimpleSpace::new(2, vec![Spike { direction: v(&[2.0, 0.0]), lambda: Dd::from(0.9) }]).is_err());
        assert!(PimpleSpace::new(2, vec![Spike { direction: v(&[1.0, 0.0]), lambda: Dd::from(0.4) }]).is_err());
        let sp = PimpleSpace::new(2, vec![
            Spike { direction: v(&[1.0, 0.0]), lambda: Dd::from(0.9) },
            Spike { direction: v(&[-1.0, 0.0]), lambda: Dd::from(0.9) },
        ])
        .unwrap();
        assert_eq!(sp.spikes().len(), 1);
    }

    #[test]
    fn dual_certificate_is_feasible() {
        let s = 0.5f64.sqrt();
        let sp = PimpleSpace::new(2, vec![
            Spike { direction: v(&[1.0, 0.0]), lambda: Dd::from(0.7) },
            Spike { direction: v(&[s, s]), lambda: Dd::from(0.75) },
        ])
        .unwrap();
        let y = v(&[0.3, 1.0]);
        let sol = sp.solve(&y).unwrap();
        assert!(sp.dual_norm(&sol.dual).hi() <= 1.0 + 1e-25);
        assert!((dd::dot(&sol.dual, &y) - sol.value).abs().hi() < 1e-20);
    }
}
