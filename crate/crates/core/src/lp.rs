//! Small dense simplex solver (Bland's rule) for the free-space LPs.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    // reduced costs; the last entry holds minus the objective value
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<f64>| {
            let f = row[c];
            if f != 0.0 {
                for (v, q) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * q;
                }
                row[c] = 0.0;
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Maximise until optimal; `Ok(false)` means unbounded.
    fn run(&mut self, enter_limit: usize) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..enter_limit).find(|&j| self.obj[j] > PIVOT_EPS) else {
                return Ok(true);
            };
            let w = self.width();
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[w] / row[c];
                    let better = match best {
                        None => true,
                        Some((b, r)) => ratio < r - 1e-15 || (ratio <= r + 1e-15 && self.basis[i] < self.basis[b]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(false),
            }
        }
        Err(Error::NoConvergence(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let w = self.width();
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][w];
            }
        }
        x
    }
}

/// `max c·x` subject to `A x ≤ b`, `x ≥ 0`, for `b ≥ 0` (the origin is feasible).
pub fn maximize_le(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let (m, n) = (a.len(), c.len());
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.len() });
    }
    if let Some(i) = b.iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidInput(format!("right-hand side {i} is negative")));
    }
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        let mut r = row.clone();
        r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        r.push(b[i]);
        rows.push(r);
    }
    let mut obj = c.to_vec();
    obj.extend(std::iter::repeat_n(0.0, m + 1));
    let mut t = Tableau { rows, obj, basis: (n..n + m).collect() };
    if !t.run(n + m)? {
        return Ok(LpOutcome::Unbounded);
    }
    let value = -t.obj[n + m];
    Ok(LpOutcome::Optimal { value, x: t.solution(n) })
}

/// Phase one for `A x = b, x ≥ 0`: the minimal total infeasibility and a
/// minimiser. A residual of zero means the system is feasible.
pub fn feasibility(a: &[Vec<f64>], b: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.len() });
    }
    let mut rows = Vec::with_capacity(m);
    let mut obj = vec![0.0; n + m + 1];
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| s * v).collect();
        r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        r.push(s * b[i]);
        for j in 0..n {
            obj[j] += r[j];
        }
        obj[n + m] += r[n + m];
        rows.push(r);
    }
    let mut t = Tableau { rows, obj, basis: (n..n + m).collect() };
    t.run(n)?;
    Ok((t.obj[n + m].max(0.0), t.solution(n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        match maximize_le(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0]).unwrap() {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 36.0).abs() < 1e-12);
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
            }
            LpOutcome::Unbounded => panic!("bounded LP"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let out = maximize_le(&[1.0, 1.0], &[vec![1.0, -1.0]], &[1.0]).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn phase_one_residuals() {
        // x + y = 1, x - y = 0 is feasible
        let (r, x) = feasibility(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[1.0, 0.0]).unwrap();
        assert!(r < 1e-12);
        assert!((x[0] - 0.5).abs() < 1e-12);
        // x + y = 1, x + y = 3 is not
        let (r, _) = feasibility(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 3.0]).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }
}
