//! Geometric diagnostics: convex transitivity, the necessary conditions for
//! an isometry group, distinguished points, LUR and uniform convexity moduli,
//! and the separating-functional construction for discrete orbits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::MatrixGroup;
use crate::linalg::{add, dot, euclid, scaled, sub, Matrix};
use crate::par;
use crate::space::NormOracle;

pub const NORMALIZATION_TOL: f64 = 1e-9;
pub const DEFAULT_EPS_GRID: [f64; 19] =
    [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9];

/// A group to take suprema over: an explicit finite group or a seeded sample
/// of a compact continuous one.
#[derive(Clone, Debug)]
pub enum GroupSource {
    Finite(MatrixGroup<f64>),
    /// `angles` equally spaced rotations of the plane.
    Rotations2 { angles: usize },
    /// Haar-like random orthogonal matrices (plus `±Id`).
    Orthogonal { dim: usize, samples: usize, seed: u64 },
}

fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> Matrix<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for q in &cols {
            v = sub(&v, &scaled(q, dot(&v, q)));
        }
        let n = euclid(&v);
        if n > 1e-8 {
            cols.push(scaled(&v, 1.0 / n));
        }
    }
    Matrix::from_columns(&cols).expect("square")
}

impl GroupSource {
    pub fn dim(&self) -> usize {
        match self {
            GroupSource::Finite(g) => g.dim(),
            GroupSource::Rotations2 { .. } => 2,
            GroupSource::Orthogonal { dim, .. } => *dim,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, GroupSource::Finite(_))
    }

    /// Guaranteed gap between the sampled and the true supremum, when known.
    /// For equally spaced rotations acting on a euclidean pair the
    /// supremum is missed by at most `1 − cos(π/angles)`.
    pub fn confidence_radius(&self) -> Option<f64> {
        match self {
            GroupSource::Finite(_) => Some(0.0),
            GroupSource::Rotations2 { angles } => Some(1.0 - (std::f64::consts::PI / *angles as f64).cos()),
            GroupSource::Orthogonal { .. } => None,
        }
    }

    pub fn elements(&self) -> Vec<Matrix<f64>> {
        match self {
            GroupSource::Finite(g) => g.elements().to_vec(),
            GroupSource::Rotations2 { angles } => (0..*angles)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / *angles as f64;
                    Matrix::from_rows(vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]).expect("2x2")
                })
                .collect(),
            GroupSource::Orthogonal { dim, samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut out = vec![Matrix::identity(*dim), Matrix::identity(*dim).neg()];
                out.extend((0..*samples).map(|_| random_orthogonal(&mut rng, *dim)));
                out
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitivityKind {
    Transitive,
    AlmostTransitive,
    /// The tested pair does not refute convex transitivity.
    ConvexTransitive,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub xstar: Vec<f64>,
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitivityVerdict {
    pub kind: TransitivityKind,
    pub sup: f64,
    pub argmax: usize,
    pub exact: bool,
    pub confidence_radius: Option<f64>,
    pub elements_checked: usize,
    pub witness: Option<Witness>,
}

fn check_dim(space: &dyn NormOracle, v: &[f64]) -> Result<()> {
    if v.len() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: v.len() });
    }
    Ok(())
}

fn sup_pairing(elements: &[Matrix<f64>], x: &[f64], xstar: &[f64]) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, t) in elements.iter().enumerate() {
        let v = dot(xstar, &t.apply(x)?);
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

/// `sup_{T∈G} x*(Tx)` for a normalised pair; below `1 − tolerance` refutes
/// convex transitivity with `(x, x*)` as witness.
pub fn convex_transitivity_test(
    space: &dyn NormOracle,
    group: &GroupSource,
    x: &[f64],
    xstar: &[f64],
    tolerance: f64,
) -> Result<TransitivityVerdict> {
    check_dim(space, x)?;
    check_dim(space, xstar)?;
    if group.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: group.dim() });
    }
    let nx = space.norm(x)?;
    let nd = space.dual_norm(xstar)?;
    if (nx - 1.0).abs() > NORMALIZATION_TOL || (nd - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidInput(format!("expected ‖x‖ = ‖x*‖ = 1, got {nx} and {nd}")));
    }
    let elements = group.elements();
    let (sup, argmax) = sup_pairing(&elements, x, xstar)?;
    let fails = sup < 1.0 - tolerance;
    Ok(TransitivityVerdict {
        kind: if fails { TransitivityKind::Fails } else { TransitivityKind::ConvexTransitive },
        sup,
        argmax,
        exact: group.is_exact(),
        confidence_radius: group.confidence_radius(),
        elements_checked: elements.len(),
        witness: fails.then(|| Witness { x: x.to_vec(), xstar: xstar.to_vec(), sup }),
    })
}

/// A point of the unit sphere of `space` in a Gaussian direction.
pub fn random_sphere_point(space: &dyn NormOracle, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    loop {
        let v: Vec<f64> = (0..space.dim()).map(|_| rng.sample(StandardNormal)).collect();
        if euclid(&v) > 1e-6 {
            let n = space.norm(&v)?;
            return Ok(scaled(&v, 1.0 / n));
        }
    }
}

fn basis_vector(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessaryReport {
    pub contains_minus_identity: bool,
    /// Finite groups are closed; continuous samplers cannot certify closure.
    pub closed: Option<bool>,
    pub closure_note: String,
    pub witness: Option<Witness>,
    pub best_sup: f64,
    pub pairs_tried: usize,
    pub tolerance: f64,
}

impl NecessaryReport {
    pub fn witness_found(&self) -> bool {
        self.witness.is_some()
    }
}

/// Checks `−Id ∈ G`, closedness, and searches sphere points with the support
/// functionals of other sphere points for a pair with `sup x*(Tx) < 1`.
pub fn necessary_conditions(
    space: &dyn NormOracle,
    group: &GroupSource,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<NecessaryReport> {
    let dim = space.dim();
    if group.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: group.dim() });
    }
    let elements = group.elements();
    let minus = Matrix::identity(dim).neg();
    let contains_minus_identity = elements.iter().any(|t| t.approx_eq(&minus, 1e-12));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<f64>> = (0..dim).map(|i| {
        let e = basis_vector(dim, i);
        let n = space.norm(&e)?;
        Ok(scaled(&e, 1.0 / n))
    }).collect::<Result<_>>()?;
    for _ in 0..samples {
        points.push(random_sphere_point(space, &mut rng)?);
    }
    let functionals: Vec<Vec<f64>> = par::map(&points, |p| space.support(p)).into_iter().collect::<Result<_>>()?;
    let rows = par::map_range(points.len(), |i| -> Result<(f64, usize)> {
        let mut best = (f64::INFINITY, 0);
        for (j, f) in functionals.iter().enumerate() {
            let (s, _) = sup_pairing(&elements, &points[i], f)?;
            if s < best.0 {
                best = (s, j);
            }
        }
        Ok(best)
    });
    let mut best = (f64::INFINITY, 0, 0);
    for (i, r) in rows.into_iter().enumerate() {
        let (s, j) = r?;
        if s < best.0 {
            best = (s, i, j);
        }
    }
    let (best_sup, i, j) = best;
    let witness = (best_sup < 1.0 - tolerance).then(|| Witness { x: points[i].clone(), xstar: functionals[j].clone(), sup: best_sup });
    let (closed, closure_note) = if group.is_exact() {
        (Some(true), "vacuous: finite groups are closed".to_string())
    } else {
        (None, "not certified: group is sampled".to_string())
    };
    Ok(NecessaryReport {
        contains_minus_identity,
        closed,
        closure_note,
        witness,
        best_sup,
        pairs_tried: points.len() * functionals.len(),
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishedReport {
    pub min_displacement: f64,
    pub argmin: Option<usize>,
    pub distinguished: bool,
}

/// `min_{T≠Id} ‖Tx − x‖` over a finite group.
pub fn distinguished_point_check(
    space: &dyn NormOracle,
    group: &MatrixGroup<f64>,
    x: &[f64],
    tolerance: f64,
) -> Result<DistinguishedReport> {
    check_dim(space, x)?;
    let mut best = (f64::INFINITY, None);
    for (i, t) in group.elements().iter().enumerate() {
        if t.is_identity(1e-12) {
            continue;
        }
        let d = space.norm(&sub(&t.apply(x)?, x))?;
        if d < best.0 {
            best = (d, Some(i));
        }
    }
    Ok(DistinguishedReport { min_displacement: best.0, argmin: best.1, distinguished: best.0 > tolerance })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusEntry {
    pub eps: f64,
    pub delta: f64,
    /// Sphere point attaining the recorded `‖x + y‖`; `None` when no sphere
    /// point is `eps`-far from `x`.
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LurModulus {
    pub x: Vec<f64>,
    pub table: Vec<ModulusEntry>,
    pub seed: u64,
    pub directions: usize,
    /// Some `eps > 0` has `delta ≈ 0`.
    pub not_lur_evidence: bool,
}

const ARC_GRID: usize = 48;
const BISECTIONS: usize = 60;

struct Arc<'a> {
    space: &'a dyn NormOracle,
    x: &'a [f64],
    u: Vec<f64>,
}

impl Arc<'_> {
    fn point(&self, theta: f64) -> Result<Vec<f64>> {
        let v = add(&scaled(self.x, theta.cos()), &scaled(&self.u, theta.sin()));
        let n = self.space.norm(&v)?;
        Ok(v.iter().map(|c| c / n).collect())
    }

    /// `(‖x + y‖, ‖x − y‖, y)` at angle `theta`; the distance is rounded up
    /// by a relative 1e-14 so that rounding on flat faces does not exclude
    /// boundary points.
    fn eval(&self, theta: f64) -> Result<(f64, f64, Vec<f64>)> {
        let y = self.point(theta)?;
        let d = self.space.norm(&sub(self.x, &y))?;
        Ok((self.space.norm(&add(self.x, &y))?, d * (1.0 + 1e-14), y))
    }

    /// Best feasible `‖x + y‖` along the half circle through `x` and `u`.
    fn best(&self, eps: f64) -> Result<Option<(f64, Vec<f64>)>> {
        let thetas: Vec<f64> = (0..=ARC_GRID).map(|k| std::f64::consts::PI * k as f64 / ARC_GRID as f64).collect();
        let vals: Vec<(f64, f64, Vec<f64>)> = thetas.iter().map(|&t| self.eval(t)).collect::<Result<_>>()?;
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut offer = |s: f64, y: Vec<f64>| {
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, y));
            }
        };
        for (k, (s, d, y)) in vals.iter().enumerate() {
            if *d >= eps {
                offer(*s, y.clone());
            }
            if k + 1 < vals.len() && (*d >= eps) != (vals[k + 1].1 >= eps) {
                // locate the constraint boundary, keeping the feasible side
                let (mut lo, mut hi) = (thetas[k], thetas[k + 1]);
                let lo_feasible = *d >= eps;
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if (self.eval(mid)?.1 >= eps) == lo_feasible {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let edge = if lo_feasible { lo } else { hi };
                let (s, d, y) = self.eval(edge)?;
                if d >= eps {
                    offer(s, y);
                }
            }
        }
        // golden-section polish around interior maxima
        if let Some(k) = (1..ARC_GRID).filter(|&k| vals[k].1 >= eps && vals[k - 1].1 >= eps && vals[k + 1].1 >= eps).max_by(|&a, &b| vals[a].0.total_cmp(&vals[b].0)) {
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut a, mut b) = (thetas[k - 1], thetas[k + 1]);
            for _ in 0..40 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if self.eval(c)?.0 >= self.eval(d)?.0 {
                    b = d;
                } else {
                    a = c;
                }
            }
            let (s, d, y) = self.eval(0.5 * (a + b))?;
            if d >= eps {
                offer(s, y);
            }
        }
        Ok(best)
    }
}

fn delta_at(space: &dyn NormOracle, x: &[f64], eps: f64, directions: usize, seed: u64) -> Result<ModulusEntry> {
    let dim = space.dim();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let offer = |cand: Option<(f64, Vec<f64>)>, best: &mut Option<(f64, Vec<f64>)>| {
        if let Some((s, y)) = cand {
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                *best = Some((s, y));
            }
        }
    };
    // y = ±x
    for y in [x.to_vec(), scaled(x, -1.0)] {
        if space.norm(&sub(x, &y))? >= eps {
            offer(Some((space.norm(&add(x, &y))?, y)), &mut best);
        }
    }
    if dim > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dirs: Vec<Vec<f64>> = (0..dim).map(|i| basis_vector(dim, i)).collect();
        for _ in 0..directions {
            dirs.push((0..dim).map(|_| rng.sample(StandardNormal)).collect());
        }
        let mut best_dir: Option<(f64, Vec<f64>)> = None;
        for u in dirs {
            // keep the arc a genuine half circle
            let u = sub(&u, &scaled(x, dot(&u, x) / dot(x, x)));
            if euclid(&u) < 1e-9 {
                continue;
            }
            let u = scaled(&u, 1.0 / euclid(&u));
            let found = Arc { space, x, u: u.clone() }.best(eps)?;
            if let Some((s, _)) = &found {
                if best_dir.as_ref().is_none_or(|(b, _)| s > b) {
                    best_dir = Some((*s, u));
                }
            }
            offer(found, &mut best);
        }
        // local refinement of the best direction
        if let Some((mut score, mut u)) = best_dir {
            let mut step = 0.3;
            for _ in 0..directions {
                let trial: Vec<f64> = u.iter().map(|v| v + step * rng.sample::<f64, _>(StandardNormal)).collect();
                let trial = sub(&trial, &scaled(x, dot(&trial, x) / dot(x, x)));
                if euclid(&trial) < 1e-9 {
                    continue;
                }
                let trial = scaled(&trial, 1.0 / euclid(&trial));
                let found = Arc { space, x, u: trial.clone() }.best(eps)?;
                match &found {
                    Some((s, _)) if *s > score => {
                        score = *s;
                        u = trial;
                    }
                    _ => step *= 0.7,
                }
                offer(found, &mut best);
                if step < 1e-6 {
                    break;
                }
            }
        }
    }
    Ok(match best {
        Some((s, y)) => ModulusEntry { eps, delta: (2.0 - s).max(0.0), witness: Some(y) },
        None => ModulusEntry { eps, delta: 2.0, witness: None },
    })
}

/// `δ(ε) = 2 − sup{‖x+y‖ : ‖y‖ = 1, ‖x−y‖ ≥ ε}` on a grid, by searching
/// half circles through `x` in random directions.
pub fn lur_modulus(space: &dyn NormOracle, x: &[f64], eps_grid: &[f64], directions: usize, seed: u64) -> Result<LurModulus> {
    check_dim(space, x)?;
    let nx = space.norm(x)?;
    if (nx - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidInput(format!("expected ‖x‖ = 1, got {nx}")));
    }
    let mut table: Vec<ModulusEntry> = par::map(eps_grid, |&eps| delta_at(space, x, eps, directions, seed))
        .into_iter()
        .collect::<Result<_>>()?;
    // a witness for a larger ε also serves every smaller ε
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| table[b].eps.total_cmp(&table[a].eps));
    let mut carry: Option<ModulusEntry> = None;
    for i in order {
        if let Some(c) = &carry {
            if c.witness.is_some() && c.delta < table[i].delta {
                table[i].delta = c.delta;
                table[i].witness = c.witness.clone();
            }
        }
        if carry.as_ref().is_none_or(|c| table[i].delta <= c.delta) {
            carry = Some(table[i].clone());
        }
    }
    let not_lur_evidence = table.iter().any(|e| e.eps > 0.0 && e.delta <= NORMALIZATION_TOL);
    Ok(LurModulus { x: x.to_vec(), table, seed, directions, not_lur_evidence })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformModulus {
    pub table: Vec<ModulusEntry>,
    pub points_sampled: usize,
    pub seed: u64,
}

/// `inf_x δ(x, ε)` over basis directions and random sphere points.
pub fn uniform_convexity_modulus(
    space: &dyn NormOracle,
    eps_grid: &[f64],
    points: usize,
    directions: usize,
    seed: u64,
) -> Result<UniformModulus> {
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        let e = basis_vector(dim, i);
        xs.push(scaled(&e, 1.0 / space.norm(&e)?));
    }
    for _ in 0..points {
        xs.push(random_sphere_point(space, &mut rng)?);
    }
    let mut table: Vec<ModulusEntry> = eps_grid.iter().map(|&eps| ModulusEntry { eps, delta: f64::INFINITY, witness: None }).collect();
    for (k, x) in xs.iter().enumerate() {
        let m = lur_modulus(space, x, eps_grid, directions, seed.wrapping_add(k as u64))?;
        for (t, e) in table.iter_mut().zip(m.table) {
            if e.delta < t.delta {
                *t = e;
            }
        }
    }
    Ok(UniformModulus { table, points_sampled: xs.len(), seed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationWitness {
    pub y: Vec<f64>,
    /// `min ‖y − gy‖` over `g` moving `y`.
    pub alpha: f64,
    /// `‖y + Ty‖ ≤ 2 − 2ε` whenever `Ty ≠ y`.
    pub epsilon: f64,
    pub x: Vec<f64>,
    pub radius: f64,
    pub xstar: Vec<f64>,
    /// LUR modulus at `y` for the radius `‖x − y‖`.
    pub delta_at_radius: f64,
    pub beta: f64,
    pub sup: f64,
    pub verified: bool,
}

/// Builds `(x, x*)` with `sup_{T∈G} x*(Tx) ≤ 1 − β` from a point `y` with a
/// discrete orbit, and checks the bound over every group element.
pub fn separation_witness(
    space: &dyn NormOracle,
    group: &MatrixGroup<f64>,
    y: &[f64],
    directions: usize,
    seed: u64,
) -> Result<SeparationWitness> {
    check_dim(space, y)?;
    let ny = space.norm(y)?;
    if (ny - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidInput(format!("expected ‖y‖ = 1, got {ny}")));
    }
    let mut alpha = f64::INFINITY;
    let mut worst_sum: f64 = 0.0;
    for t in group.elements() {
        let ty = t.apply(y)?;
        let moved = space.norm(&sub(&ty, y))?;
        if moved > 1e-12 {
            alpha = alpha.min(moved);
            worst_sum = worst_sum.max(space.norm(&add(&ty, y))?);
        }
    }
    if alpha.is_infinite() {
        alpha = 0.0;
    }
    if group.elements().iter().any(|t| t.apply(y).is_ok_and(|ty| space.norm(&sub(&ty, y)).is_ok_and(|m| m > 1e-12))) && alpha <= 0.0 {
        return Err(Error::InvalidInput("orbit of y is not discrete".into()));
    }
    // with no moved images the first case is vacuous
    let epsilon = if worst_sum == 0.0 && alpha == 0.0 { 1.0 } else { (2.0 - worst_sum) / 2.0 };
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput("no ε > 0 separates y from its other images".into()));
    }
    let dim = space.dim();
    if dim < 2 {
        return Err(Error::Unsupported("the unit sphere of a 1-dimensional space has no point within ε of y other than y".into()));
    }
    let xstar = space.support(y)?;
    // x on the sphere with 0 < ‖x − y‖ < ε, aiming at radius about ε/2
    let dir = (0..dim)
        .map(|i| basis_vector(dim, i))
        .map(|e| sub(&e, &scaled(y, dot(&e, y) / dot(y, y))))
        .max_by(|a, b| euclid(a).total_cmp(&euclid(b)))
        .expect("dim ≥ 2");
    let mut s = epsilon / 2.0;
    let (x, radius) = loop {
        let v = add(y, &scaled(&dir, s / euclid(&dir)));
        let x = scaled(&v, 1.0 / space.norm(&v)?);
        let r = space.norm(&sub(&x, y))?;
        if r > 0.0 && r < epsilon * 0.75 {
            break (x, r);
        }
        s *= 0.5;
        if s < 1e-12 {
            return Err(Error::NoConvergence("could not place x near y".into()));
        }
    };
    let delta_at_radius = lur_modulus(space, y, &[radius], directions, seed)?.table[0].delta;
    let beta = (2.0 * epsilon - radius).min(delta_at_radius);
    let (sup, _) = sup_pairing(group.elements(), &x, &xstar)?;
    Ok(SeparationWitness {
        y: y.to_vec(),
        alpha,
        epsilon,
        x,
        radius,
        xstar,
        delta_at_radius,
        beta,
        sup,
        verified: beta > 0.0 && sup <= 1.0 - beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{signed_perm_matrix, Perm};
    use crate::space::{linf, NormedSpace};

    fn pm_id(dim: usize) -> MatrixGroup<f64> {
        MatrixGroup::closure(dim, &[Matrix::identity(dim).neg()], 10, 1e-12).unwrap()
    }

    fn signed_swap() -> MatrixGroup<f64> {
        let swap = signed_perm_matrix::<f64>(&Perm(vec![1, 0]), &[1, 1]);
        MatrixGroup::closure(2, &[swap, Matrix::identity(2).neg()], 10, 1e-12).unwrap()
    }

    fn signed_perms2() -> MatrixGroup<f64> {
        let swap = signed_perm_matrix::<f64>(&Perm(vec![1, 0]), &[1, 1]);
        let flip = signed_perm_matrix::<f64>(&Perm(vec![0, 1]), &[-1, 1]);
        MatrixGroup::closure(2, &[swap, flip], 10, 1e-12).unwrap()
    }

    #[test]
    fn convex_transitivity_examples() {
        let e2 = NormedSpace::Euclidean { dim: 2 };
        let x = [0.6, 0.8];
        let v = convex_transitivity_test(&e2, &GroupSource::Rotations2 { angles: 10_000 }, &x, &[0.0, 1.0], 1e-3).unwrap();
        assert!(v.sup >= 1.0 - 1e-3);
        assert_eq!(v.kind, TransitivityKind::ConvexTransitive);
        let full = GroupSource::Orthogonal { dim: 2, samples: 10, seed: 1 };
        let v = convex_transitivity_test(&e2, &full, &x, &x, 1e-12).unwrap();
        assert_eq!(v.sup, 1.0);

        let l = linf(2);
        let v = convex_transitivity_test(&l, &GroupSource::Finite(signed_perms2()), &[1.0, 0.0], &[0.5, 0.5], 1e-9).unwrap();
        assert_eq!(v.elements_checked, 8);
        assert_eq!(v.sup, 0.5);
        assert_eq!(v.kind, TransitivityKind::Fails);
        assert!(v.witness.is_some());
        assert!(convex_transitivity_test(&l, &GroupSource::Finite(signed_perms2()), &[2.0, 0.0], &[0.5, 0.5], 1e-9).is_err());
    }

    #[test]
    fn necessary_condition_examples() {
        let e2 = NormedSpace::Euclidean { dim: 2 };
        let r = necessary_conditions(&e2, &GroupSource::Finite(pm_id(2)), 16, 0, 1e-6).unwrap();
        assert!(r.contains_minus_identity && r.witness_found());
        assert!(r.best_sup.abs() < 1e-12);
        let r = necessary_conditions(&e2, &GroupSource::Rotations2 { angles: 1000 }, 16, 0, 1e-3).unwrap();
        assert!(!r.witness_found());
        let trivial = MatrixGroup::closure(2, &[], 10, 1e-12).unwrap();
        assert!(!necessary_conditions(&e2, &GroupSource::Finite(trivial), 4, 0, 1e-6).unwrap().contains_minus_identity);
    }

    #[test]
    fn distinguished_examples() {
        let e2 = NormedSpace::Euclidean { dim: 2 };
        let r = distinguished_point_check(&e2, &pm_id(2), &[1.0, 0.0], 1e-12).unwrap();
        assert_eq!(r.min_displacement, 2.0);
        let s = 0.5f64.sqrt();
        assert!(!distinguished_point_check(&e2, &signed_swap(), &[s, s], 1e-12).unwrap().distinguished);
        let k = 5f64.sqrt();
        let r = distinguished_point_check(&e2, &signed_swap(), &[2.0 / k, 1.0 / k], 1e-12).unwrap();
        assert!((r.min_displacement - (2.0f64 / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn euclidean_lur_matches_closed_form() {
        for dim in [2, 3] {
            let e = NormedSpace::Euclidean { dim };
            let mut x = vec![0.0; dim];
            x[0] = 0.6;
            x[dim - 1] += 0.8;
            let m = lur_modulus(&e, &x, &DEFAULT_EPS_GRID, 16, 7).unwrap();
            for entry in &m.table {
                let exact = 2.0 - (4.0 - entry.eps * entry.eps).sqrt();
                assert!((entry.delta - exact).abs() < 1e-6, "dim {dim} eps {}: {} vs {exact}", entry.eps, entry.delta);
            }
            assert!(!m.not_lur_evidence);
        }
        let e = NormedSpace::Euclidean { dim: 2 };
        assert_eq!(lur_modulus(&e, &[1.0, 0.0], &[0.0], 4, 0).unwrap().table[0].delta, 0.0);
    }

    #[test]
    fn flat_faces_and_dimension_one() {
        let l = linf(2);
        let m = lur_modulus(&l, &[1.0, 0.0], &[0.25, 0.5, 1.0], 16, 0).unwrap();
        assert!(m.table.iter().all(|e| e.delta < 1e-9), "{m:?}");
        assert!(m.not_lur_evidence);
        let u = uniform_convexity_modulus(&l, &[0.5, 1.0], 4, 8, 0).unwrap();
        assert!(u.table.iter().all(|e| e.delta < 1e-9));
        let line = NormedSpace::Euclidean { dim: 1 };
        let m = lur_modulus(&line, &[1.0], &[0.5, 2.0], 4, 0).unwrap();
        assert!(m.table.iter().all(|e| e.delta == 2.0));
    }

    #[test]
    fn separation_examples() {
        let e2 = NormedSpace::Euclidean { dim: 2 };
        let w = separation_witness(&e2, &pm_id(2), &[1.0, 0.0], 16, 0).unwrap();
        assert_eq!(w.alpha, 2.0);
        assert!(w.verified && w.beta > 0.0, "{w:?}");
        let k = 5f64.sqrt();
        let w = separation_witness(&e2, &signed_swap(), &[2.0 / k, 1.0 / k], 16, 0).unwrap();
        assert!(w.verified && w.beta > 0.0, "{w:?}");
        let trivial = MatrixGroup::closure(2, &[], 10, 1e-12).unwrap();
        assert!(separation_witness(&e2, &trivial, &[1.0, 0.0], 16, 0).unwrap().verified);
        let line = NormedSpace::Euclidean { dim: 1 };
        assert!(separation_witness(&line, &pm_id(1), &[1.0], 4, 0).is_err());
    }
}
