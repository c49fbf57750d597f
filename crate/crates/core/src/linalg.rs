//! Dense square and rectangular matrices over a [`Field`].

use crate::error::{Error, Result};
use crate::scalar::Field;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// A square matrix acting on column vectors.
pub type LinearMap<T> = Matrix<T>;

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            if col.len() != r {
                return Err(Error::DimensionMismatch { expected: r, got: col.len() });
            }
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = v.clone();
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero_tol(0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x.clone())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&Self::identity(self.rows), tol)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }

    /// Row echelon reduction with partial pivoting; returns the pivot columns.
    fn eliminate(&mut self, tol: f64, mut companion: Option<&mut Self>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let mut best = None;
            let mut best_abs = T::zero();
            for i in r..self.rows {
                let a = self[(i, c)].abs();
                if !a.is_zero_tol(tol) && (best.is_none() || a > best_abs) {
                    best = Some(i);
                    best_abs = a;
                    if T::EXACT {
                        break;
                    }
                }
            }
            let Some(p) = best else { continue };
            self.swap_rows(r, p);
            if let Some(comp) = companion.as_deref_mut() {
                comp.swap_rows(r, p);
            }
            let inv = T::one() / self[(r, c)].clone();
            for j in 0..self.cols {
                let v = self[(r, j)].clone() * inv.clone();
                self[(r, j)] = v;
            }
            if let Some(comp) = companion.as_deref_mut() {
                for j in 0..comp.cols {
                    let v = comp[(r, j)].clone() * inv.clone();
                    comp[(r, j)] = v;
                }
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self[(i, c)].clone();
                if f.is_zero_tol(0.0) {
                    continue;
                }
                for j in 0..self.cols {
                    let v = self[(i, j)].clone() - f.clone() * self[(r, j)].clone();
                    self[(i, j)] = v;
                }
                if let Some(comp) = companion.as_deref_mut() {
                    for j in 0..comp.cols {
                        let v = comp[(i, j)].clone() - f.clone() * comp[(r, j)].clone();
                        comp[(i, j)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.clone().eliminate(tol, None).len()
    }

    pub fn inverse(&self, tol: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let mut a = self.clone();
        let mut inv = Self::identity(self.rows);
        if a.eliminate(tol, Some(&mut inv)).len() < self.rows {
            return Err(Error::Singular);
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> T {
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a[(i, c)].is_zero_tol(0.0)) else {
                return T::zero();
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let piv = a[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                let f = a[(i, c)].clone() / piv.clone();
                for j in c..n {
                    let v = a[(i, j)].clone() - f.clone() * a[(c, j)].clone();
                    a[(i, j)] = v;
                }
            }
        }
        det
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Indices of a maximal linearly independent prefix-greedy subfamily.
pub fn independent_subset<T: Field>(vectors: &[Vec<T>], tol: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<T>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let mut trial = basis.clone();
        trial.push(v.clone());
        let m = Matrix::from_rows(trial).expect("equal lengths");
        if m.rank(tol) == basis.len() + 1 {
            basis.push(v.clone());
            chosen.push(i);
        }
    }
    chosen
}

pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn euclid(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Euclidean distance from `v` to the span of `basis` (Gram-Schmidt).
pub fn distance_to_span(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut w = b.clone();
        for q in &ortho {
            let c = dot(&w, q);
            w = sub(&w, &scaled(q, c));
        }
        let n = euclid(&w);
        if n > 1e-14 {
            ortho.push(scaled(&w, 1.0 / n));
        }
    }
    let mut r = v.to_vec();
    for q in &ortho {
        let c = dot(&r, q);
        r = sub(&r, &scaled(q, c));
    }
    euclid(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rational};

    fn q(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat_int(x)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn exact_inverse() {
        let m = q(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse(0.0).unwrap();
        assert_eq!(inv, q(&[&[1, -1], &[-1, 2]]));
        assert!(m.mul(&inv).unwrap().is_identity(0.0));
        assert_eq!(m.determinant(), rat_int(1));
    }

    #[test]
    fn singular_detected() {
        let m = q(&[&[1, 2], &[2, 4]]);
        assert!(matches!(m.inverse(0.0), Err(Error::Singular)));
        assert_eq!(m.rank(0.0), 1);
    }

    #[test]
    fn apply_and_subset() {
        let m = Matrix::from_rows(vec![vec![rat(1, 2), rat_int(0)], vec![rat_int(0), rat_int(3)]])
            .unwrap();
        assert_eq!(m.apply(&[rat_int(2), rat_int(1)]).unwrap(), vec![rat_int(1), rat_int(3)]);
        let vs = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(independent_subset(&vs, 1e-12), vec![0, 2]);
    }

    #[test]
    fn span_distance() {
        let d = distance_to_span(&[1.0, 1.0, 0.0], &[vec![1.0, 0.0, 0.0]]);
        assert!((d - 1.0).abs() < 1e-15);
        assert!((distance_to_span(&[0.0, 0.0, 2.0], &[]) - 2.0).abs() < 1e-15);
    }
}
