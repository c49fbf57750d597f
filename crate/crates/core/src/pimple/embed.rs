use serde::{Deserialize, Serialize};

use super::display::{display_renorm, min_displacement, DisplayConfig, DisplayResult};
use crate::error::{Error, Result};
use crate::group::{signed_perm_matrix, MatrixGroup, Perm, PermGroup};
use crate::linalg::Matrix;

/// How the second factor of `B × {0..r}` is acted on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SecondFactor {
    /// `r + 1` copies of `B`, acted on trivially.
    Multiplicity { r: usize },
    /// All points `0..m`, acted on by the group itself (always faithful).
    Points,
}

#[derive(Clone, Debug)]
pub struct InvolutionEmbedding {
    /// Pairs `(b, j)` in the chosen linear order.
    pub points: Vec<(usize, usize)>,
    /// The `s`-orbits, each listed as (smaller, larger) in that order.
    pub orbits: Vec<(usize, usize)>,
    /// `π(h)` for every element of `h`, in the order of `h.elements()`.
    pub images: Vec<Matrix<f64>>,
    pub group: MatrixGroup<f64>,
    pub faithful: bool,
    pub homomorphism_verified: bool,
}

/// Signed-permutation representation sending the central involution `s`
/// to `-Id`: `h` permutes the 2-element `s`-orbits of `B × J`, and each
/// orbit map either keeps or reverses the fixed order.
pub fn central_involution_embedding(h: &PermGroup, s: &Perm, second: SecondFactor) -> Result<InvolutionEmbedding> {
    if !h.contains(s) {
        return Err(Error::InvalidInput("s is not in the group".into()));
    }
    if s.is_identity() || !s.compose(s).is_identity() {
        return Err(Error::InvalidInput("s is not a nontrivial involution".into()));
    }
    if !h.is_central(s) {
        return Err(Error::InvalidInput("s is not central".into()));
    }
    let moved = s.moved_points();
    if moved.is_empty() {
        return Err(Error::InvalidInput("s moves no points".into()));
    }
    let second_range: Vec<usize> = match second {
        SecondFactor::Multiplicity { r } => (0..=r).collect(),
        SecondFactor::Points => (0..h.degree()).collect(),
    };
    let points: Vec<(usize, usize)> = moved.iter().flat_map(|&b| second_range.iter().map(move |&j| (b, j))).collect();
    let index = |p: (usize, usize)| points.binary_search(&p).expect("invariant set");
    let act = |g: &Perm, p: (usize, usize)| match second {
        SecondFactor::Multiplicity { .. } => (g.apply(p.0), p.1),
        SecondFactor::Points => (g.apply(p.0), g.apply(p.1)),
    };
    let mut orbit_of = vec![usize::MAX; points.len()];
    let mut orbits = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if orbit_of[i] != usize::MAX {
            continue;
        }
        let j = index(act(s, p));
        orbit_of[i] = orbits.len();
        orbit_of[j] = orbits.len();
        orbits.push((i.min(j), i.max(j)));
    }
    let dim = orbits.len();
    let images: Vec<Matrix<f64>> = h
        .elements()
        .iter()
        .map(|g| {
            let mut m = Matrix::zeros(dim, dim);
            for (n, &(lo, hi)) in orbits.iter().enumerate() {
                let (glo, ghi) = (index(act(g, points[lo])), index(act(g, points[hi])));
                let target = orbit_of[glo];
                m[(target, n)] = if glo < ghi { 1.0 } else { -1.0 };
            }
            m
        })
        .collect();
    let mut homomorphism_verified = true;
    for (a, ga) in h.elements().iter().enumerate() {
        for (b, gb) in h.elements().iter().enumerate() {
            let prod = images[a].mul(&images[b])?;
            let idx = h.elements().iter().position(|e| *e == ga.compose(gb)).expect("closed group");
            if !prod.approx_eq(&images[idx], 0.0) {
                homomorphism_verified = false;
            }
        }
    }
    let mut distinct: Vec<&Matrix<f64>> = Vec::new();
    for m in &images {
        if !distinct.iter().any(|d| d.approx_eq(m, 0.0)) {
            distinct.push(m);
        }
    }
    let faithful = distinct.len() == h.order();
    let group = MatrixGroup::closure(dim, &images, h.order().max(1) * 2 + 1, 1e-12)?;
    Ok(InvolutionEmbedding { points, orbits, images, group, faithful, homomorphism_verified })
}

/// Signed permutations `{±1} × Sym(n)` (or a subgroup given by generators).
pub fn signed_permutation_group(n: usize, perms: &[Perm]) -> Result<MatrixGroup<f64>> {
    let mut gens: Vec<Matrix<f64>> = perms.iter().map(|p| signed_perm_matrix(p, &vec![1; n])).collect();
    gens.push(Matrix::identity(n).neg());
    MatrixGroup::closure(n, &gens, crate::group::DEFAULT_GROUP_CAP, 1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub copies: usize,
    pub alpha: f64,
    pub displacement: f64,
    pub distinguished: bool,
}

/// Block-diagonal action of `g` on `r` copies of its space.
pub fn diagonal_group(g: &MatrixGroup<f64>, r: usize) -> Result<MatrixGroup<f64>> {
    let n = g.dim();
    let blocks: Vec<Matrix<f64>> = g
        .elements()
        .iter()
        .map(|m| {
            let mut big = Matrix::zeros(n * r, n * r);
            for b in 0..r {
                for i in 0..n {
                    for j in 0..n {
                        big[(b * n + i, b * n + j)] = m[(i, j)];
                    }
                }
            }
            big
        })
        .collect();
    MatrixGroup::closure(n * r, &blocks, g.order() * 2 + 1, 1e-12)
}

/// Displays `g` on the ℓ₂-sum of `witnesses.len()` copies of Euclidean
/// space, leading with the concatenated witness point.
pub fn power_display(g: &MatrixGroup<f64>, witnesses: &[Vec<f64>], alpha: f64, cfg: &DisplayConfig) -> Result<(DisplayResult, PowerReport)> {
    let r = witnesses.len();
    if r == 0 || witnesses.iter().any(|w| w.len() != g.dim()) {
        return Err(Error::InvalidInput("witnesses must be nonempty vectors of the group dimension".into()));
    }
    let big = diagonal_group(g, r)?;
    let lead: Vec<f64> = witnesses.concat();
    let displacement = min_displacement(&big, &lead);
    let report = PowerReport { copies: r, alpha, displacement, distinguished: displacement >= alpha - 1e-12 };
    if !report.distinguished {
        return Err(Error::InvalidInput(format!("witnesses separate only to {displacement:.3e} < α = {alpha}")));
    }
    let dim = big.dim();
    let mut x = vec![lead];
    for i in 0..dim {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        x.push(e);
    }
    Ok((display_renorm(&big, &x, cfg)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(v: &[usize]) -> Perm {
        Perm::from_images(v.to_vec()).unwrap()
    }

    #[test]
    fn c2_on_two_points_gives_minus_one() {
        let s = perm(&[1, 0]);
        let h = PermGroup::generate(2, std::slice::from_ref(&s), 10).unwrap();
        let e = central_involution_embedding(&h, &s, SecondFactor::Multiplicity { r: 0 }).unwrap();
        assert_eq!(e.orbits.len(), 1);
        let idx = h.elements().iter().position(|g| *g == s).unwrap();
        assert_eq!(e.images[idx][(0, 0)], -1.0);
        assert!(e.faithful && e.homomorphism_verified);
    }

    #[test]
    fn double_transposition_all_signs_negative() {
        let s = perm(&[1, 0, 3, 2]);
        let h = PermGroup::generate(4, std::slice::from_ref(&s), 10).unwrap();
        let e = central_involution_embedding(&h, &s, SecondFactor::Multiplicity { r: 0 }).unwrap();
        let idx = h.elements().iter().position(|g| *g == s).unwrap();
        assert!(e.images[idx].approx_eq(&Matrix::<f64>::identity(2).neg(), 0.0));
    }

    #[test]
    fn klein_four_homomorphism() {
        let a = perm(&[1, 0, 2, 3]);
        let b = perm(&[0, 1, 3, 2]);
        let h = PermGroup::generate(4, &[a, b], 10).unwrap();
        let s = perm(&[1, 0, 3, 2]);
        let e = central_involution_embedding(&h, &s, SecondFactor::Multiplicity { r: 0 }).unwrap();
        assert!(e.homomorphism_verified && e.faithful);
        assert_eq!(e.group.order(), 4);
        assert!(e.group.contains_minus_identity(1e-12));
    }

    #[test]
    fn non_central_rejected() {
        let h = PermGroup::generate(3, &[perm(&[1, 0, 2]), perm(&[1, 2, 0])], 10).unwrap();
        assert!(central_involution_embedding(&h, &perm(&[1, 0, 2]), SecondFactor::Points).is_err());
    }

    #[test]
    fn power_witness_separation() {
        let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let g = MatrixGroup::closure(2, &[swap, Matrix::identity(2).neg()], 10, 1e-9).unwrap();
        let big = diagonal_group(&g, 1).unwrap();
        assert!((min_displacement(&big, &[1.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
    }
}
