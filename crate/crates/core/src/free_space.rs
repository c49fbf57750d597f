//! Finite metric spaces, the metric transforms `t/(1+t)` and `sqrt`, and the
//! Arens-Eells (Lipschitz-free) norm with its isometry group.
//!
//! Molecules on `Y = {y_0, …, y_{n-1}}` are written in the coordinates
//! `(m(y_1), …, m(y_{n-1}))`, i.e. against the basis `1_{y_i} − 1_{y_0}`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{MatrixGroupRecord, Perm};
use crate::linalg::Matrix;
use crate::lp::{self, LpOutcome};
use crate::par;
use crate::scalar::Scalar;

pub const METRIC_TOL: f64 = 1e-12;
pub const CONCAVITY_MARGIN: f64 = 1e-9;
pub const FREE_TOL: f64 = 1e-9;
pub const DEFAULT_POINT_CAP: usize = 10;
pub const ORACLE_SUPPORT_CAP: usize = 8;

/// A finite metric space with labelled points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricRecord", into = "MetricRecord")]
pub struct FiniteMetricSpace {
    points: Vec<String>,
    d: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricRecord {
    pub points: Vec<String>,
    pub d: Vec<Vec<Scalar>>,
}

impl TryFrom<MetricRecord> for FiniteMetricSpace {
    type Error = Error;
    fn try_from(r: MetricRecord) -> Result<Self> {
        let d = r.d.iter().map(|row| row.iter().map(Scalar::to_f64).collect()).collect();
        FiniteMetricSpace::new(r.points, d)
    }
}

impl From<FiniteMetricSpace> for MetricRecord {
    fn from(m: FiniteMetricSpace) -> Self {
        MetricRecord { points: m.points, d: m.d.iter().map(|r| r.iter().map(|&x| Scalar::Float(x)).collect()).collect() }
    }
}

impl FiniteMetricSpace {
    pub fn new(points: Vec<String>, d: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidInput("metric space has no points".into()));
        }
        if points.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::InvalidInput("duplicate point labels".into()));
        }
        if d.len() != n || d.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("distance matrix must be {n}x{n}")));
        }
        let scale = d.iter().flatten().fold(1.0f64, |a, &b| a.max(b.abs()));
        for i in 0..n {
            if d[i][i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {}", points[i])));
            }
            for j in 0..n {
                let v = d[i][j];
                if !v.is_finite() || (i != j && v <= 0.0) {
                    return Err(Error::InvalidInput(format!("distance ({},{}) must be positive", points[i], points[j])));
                }
                if (v - d[j][i]).abs() > METRIC_TOL * scale {
                    return Err(Error::InvalidInput(format!("asymmetric distance ({},{})", points[i], points[j])));
                }
                for k in 0..n {
                    if d[i][k] > v + d[j][k] + METRIC_TOL * scale {
                        return Err(Error::InvalidInput(format!(
                            "triangle inequality fails for ({}, {}, {})",
                            points[i], points[j], points[k]
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { points, d })
    }

    /// Points labelled `"0"`, `"1"`, ….
    pub fn unlabelled(d: Vec<Vec<f64>>) -> Result<Self> {
        FiniteMetricSpace::new((0..d.len()).map(|i| i.to_string()).collect(), d)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
    }

    fn mapped(&self, f: impl Fn(f64) -> f64) -> FiniteMetricSpace {
        FiniteMetricSpace { points: self.points.clone(), d: self.d.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect() }
    }

    /// `t ↦ t/(1+t)`: same isometries, diameter below one.
    pub fn transform_bounded(&self) -> FiniteMetricSpace {
        self.mapped(|t| t / (1.0 + t))
    }

    /// `t ↦ sqrt(t)` for a metric of diameter below one, with the strictness report.
    pub fn transform_concave(&self) -> Result<(FiniteMetricSpace, ConcavityReport)> {
        let diam = self.diameter();
        if diam >= 1.0 {
            return Err(Error::InvalidInput(format!("diameter {diam} is not below 1")));
        }
        let out = self.mapped(f64::sqrt);
        let report = out.concavity();
        Ok((out, report))
    }

    /// Minimal strict-triangle margin `d(x,y) + d(y,z) − d(x,z)` over distinct triples.
    pub fn concavity(&self) -> ConcavityReport {
        let n = self.len();
        let mut min_margin: Option<(f64, [usize; 3])> = None;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    let m = self.d[x][y] + self.d[y][z] - self.d[x][z];
                    if min_margin.is_none_or(|(b, _)| m < b) {
                        min_margin = Some((m, [x, y, z]));
                    }
                }
            }
        }
        let diameter = self.diameter();
        ConcavityReport {
            min_margin: min_margin.map(|(m, _)| m),
            worst_triple: min_margin.map(|(_, t)| t),
            diameter,
            concave: diameter < 1.0 && min_margin.is_none_or(|(m, _)| m > CONCAVITY_MARGIN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub min_margin: Option<f64>,
    pub worst_triple: Option<[usize; 3]>,
    pub diameter: f64,
    pub concave: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= METRIC_TOL * a.abs().max(b.abs()).max(1.0)
}

/// All bijections `π` with `d(πx,πy) = λ d(x,y)`, by backtracking over
/// distance profiles. `λ = 1` gives the isometry group.
fn scaled_maps(space: &FiniteMetricSpace, lambda: f64, limit: usize) -> Vec<Perm> {
    let n = space.len();
    let profile = |i: usize, s: f64| {
        let mut p: Vec<f64> = space.d[i].iter().map(|x| x * s).collect();
        p.sort_by(f64::total_cmp);
        p
    };
    let src: Vec<Vec<f64>> = (0..n).map(|i| profile(i, lambda)).collect();
    let dst: Vec<Vec<f64>> = (0..n).map(|i| profile(i, 1.0)).collect();
    let allowed: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| src[i].iter().zip(&dst[j]).all(|(a, b)| close(*a, *b))).collect()).collect();
    let mut out = Vec::new();
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        i: usize,
        space: &FiniteMetricSpace,
        lambda: f64,
        allowed: &[Vec<usize>],
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Perm>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        if i == image.len() {
            out.push(Perm(image.clone()));
            return;
        }
        for &c in &allowed[i] {
            if used[c] || !(0..i).all(|j| close(space.d[c][image[j]], lambda * space.d[i][j])) {
                continue;
            }
            image[i] = c;
            used[c] = true;
            extend(i + 1, space, lambda, allowed, image, used, out, limit);
            used[c] = false;
        }
        image[i] = usize::MAX;
    }
    extend(0, space, lambda, &allowed, &mut image, &mut used, &mut out, limit);
    out.sort();
    out
}

/// `Isom(Y, d)` as a sorted list of permutations.
pub fn metric_isometry_group(space: &FiniteMetricSpace, cap: usize) -> Result<Vec<Perm>> {
    if space.len() > cap {
        return Err(Error::CapExceeded { what: format!("metric space with {} points", space.len()), cap });
    }
    Ok(scaled_maps(space, 1.0, usize::MAX))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub lambda: f64,
    pub diameter: f64,
    /// `λ · diam = diam` is necessary for a surjective λ-dilation.
    pub diameter_allows: bool,
    pub found: bool,
}

/// Searches for a bijection scaling every distance by `lambda`.
pub fn dilation_check(space: &FiniteMetricSpace, lambda: f64) -> DilationReport {
    let diameter = space.diameter();
    DilationReport {
        lambda,
        diameter,
        diameter_allows: close(lambda * diameter, diameter),
        found: !scaled_maps(space, lambda, 1).is_empty(),
    }
}

/// Finitely supported sum-zero mass distribution, keyed by point label.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Molecule {
    pub masses: BTreeMap<String, Scalar>,
}

impl Molecule {
    pub fn from_vector(space: &FiniteMetricSpace, masses: &[f64]) -> Molecule {
        Molecule {
            masses: space
                .points
                .iter()
                .zip(masses)
                .filter(|(_, m)| **m != 0.0)
                .map(|(p, m)| (p.clone(), Scalar::Float(*m)))
                .collect(),
        }
    }

    /// Mass vector over the points of `space`; rejects unknown labels and nonzero total mass.
    pub fn to_vector(&self, space: &FiniteMetricSpace) -> Result<Vec<f64>> {
        let mut v = vec![0.0; space.len()];
        for (label, m) in &self.masses {
            let i = space.index_of(label).ok_or_else(|| Error::InvalidInput(format!("unknown point {label:?}")))?;
            v[i] += m.to_f64();
        }
        check_sum_zero(&v)?;
        Ok(v)
    }
}

fn check_sum_zero(m: &[f64]) -> Result<()> {
    let total: f64 = m.iter().sum();
    let scale = m.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    if total.abs() > FREE_TOL * scale {
        return Err(Error::InvalidInput(format!("molecule has total mass {total}, expected 0")));
    }
    Ok(())
}

pub fn atom(n: usize, x: usize, y: usize) -> Vec<f64> {
    let mut m = vec![0.0; n];
    m[x] += 1.0;
    m[y] -= 1.0;
    m
}

/// Molecule coordinates against the basis `1_{y_i} − 1_{y_0}`.
pub fn coordinates(m: &[f64]) -> Vec<f64> {
    m[1..].to_vec()
}

pub fn from_coordinates(c: &[f64]) -> Vec<f64> {
    let mut m = Vec::with_capacity(c.len() + 1);
    m.push(-c.iter().sum::<f64>());
    m.extend_from_slice(c);
    m
}

/// One leg `amount · m_{from,to}` of a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shipment {
    pub from: usize,
    pub to: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    pub value: f64,
    pub plan: Vec<Shipment>,
}

struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Arens-Eells norm as a transportation problem between the positive and
/// negative parts, solved by successive shortest paths.
pub fn ae_norm_primal(space: &FiniteMetricSpace, m: &[f64]) -> Result<Transport> {
    let n = space.len();
    if m.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.len() });
    }
    check_sum_zero(m)?;
    let pos: Vec<usize> = (0..n).filter(|&i| m[i] > 0.0).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| m[i] < 0.0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Ok(Transport { value: 0.0, plan: Vec::new() });
    }
    // nodes: 0 source, 1..=P positives, then negatives, then sink
    let (np, nn) = (pos.len(), neg.len());
    let sink = np + nn + 1;
    let mut arcs: Vec<Arc> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); sink + 1];
    let mut add = |arcs: &mut Vec<Arc>, a: usize, b: usize, cap: f64, cost: f64| {
        adj[a].push(arcs.len());
        arcs.push(Arc { to: b, cap, cost });
        adj[b].push(arcs.len());
        arcs.push(Arc { to: a, cap: 0.0, cost: -cost });
    };
    for (k, &p) in pos.iter().enumerate() {
        add(&mut arcs, 0, 1 + k, m[p], 0.0);
    }
    let mut transport_arcs = Vec::new();
    for (k, &p) in pos.iter().enumerate() {
        for (l, &q) in neg.iter().enumerate() {
            transport_arcs.push((arcs.len(), p, q));
            add(&mut arcs, 1 + k, 1 + np + l, f64::INFINITY, space.d[p][q]);
        }
    }
    for (l, &q) in neg.iter().enumerate() {
        add(&mut arcs, 1 + np + l, sink, -m[q], 0.0);
    }
    let nodes = sink + 1;
    for _ in 0..10 * nodes * nodes + 100 {
        // Bellman-Ford on the residual network
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[0] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for &e in &adj[u] {
                    let a = &arcs[e];
                    if a.cap > 0.0 && dist[u] + a.cost < dist[a.to] - 1e-15 {
                        dist[a.to] = dist[u] + a.cost;
                        via[a.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink].is_infinite() {
            let plan: Vec<Shipment> = transport_arcs
                .iter()
                .filter(|(e, _, _)| arcs[e ^ 1].cap > 0.0)
                .map(|&(e, p, q)| Shipment { from: p, to: q, amount: arcs[e ^ 1].cap })
                .collect();
            let value = plan.iter().map(|s| s.amount * space.d[s.from][s.to]).sum();
            return Ok(Transport { value, plan });
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != 0 {
            let e = via[v];
            path.push(e);
            v = arcs[e ^ 1].to;
        }
        let push = path.iter().map(|&e| arcs[e].cap).fold(f64::INFINITY, f64::min);
        for &e in &path {
            arcs[e].cap -= push;
            arcs[e ^ 1].cap += push;
        }
    }
    Err(Error::NoConvergence("transportation did not terminate".into()))
}

/// Independent oracle: the minimum over all spanning-tree bases of the
/// transportation polytope. Support is capped at [`ORACLE_SUPPORT_CAP`].
pub fn transport_by_bases(space: &FiniteMetricSpace, m: &[f64]) -> Result<f64> {
    check_sum_zero(m)?;
    let pos: Vec<usize> = (0..m.len()).filter(|&i| m[i] > 0.0).collect();
    let neg: Vec<usize> = (0..m.len()).filter(|&i| m[i] < 0.0).collect();
    if pos.len() + neg.len() > ORACLE_SUPPORT_CAP {
        return Err(Error::CapExceeded { what: "oracle support".into(), cap: ORACLE_SUPPORT_CAP });
    }
    if pos.is_empty() || neg.is_empty() {
        return Ok(0.0);
    }
    let (np, nn) = (pos.len(), neg.len());
    let edges: Vec<(usize, usize)> = (0..np).flat_map(|i| (0..nn).map(move |j| (i, np + j))).collect();
    let supply: Vec<f64> = pos.iter().map(|&p| m[p]).chain(neg.iter().map(|&q| m[q])).collect();
    let k = np + nn - 1;
    let mut best = f64::INFINITY;
    let mut choice: Vec<usize> = (0..k).collect();
    loop {
        if let Some(cost) = tree_cost(&choice, &edges, &supply, |e| space.d[pos[edges[e].0]][neg[edges[e].1 - np]]) {
            best = best.min(cost);
        }
        // next k-combination of the edge indices
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if choice[i] < edges.len() - k + i {
                break;
            }
        }
        choice[i] += 1;
        for j in i + 1..k {
            choice[j] = choice[j - 1] + 1;
        }
    }
}

/// Flow cost of the basic solution on a spanning tree, or `None` when the
/// edges contain a cycle or the flow is negative somewhere.
fn tree_cost(choice: &[usize], edges: &[(usize, usize)], supply: &[f64], cost: impl Fn(usize) -> f64) -> Option<f64> {
    let nodes = supply.len();
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &e in choice {
        let (a, b) = (root(&mut parent, edges[e].0), root(&mut parent, edges[e].1));
        if a == b {
            return None;
        }
        parent[a] = b;
    }
    let mut rest = supply.to_vec();
    let mut alive: Vec<bool> = vec![true; choice.len()];
    let mut total = 0.0;
    let scale = supply.iter().map(|s| s.abs()).sum::<f64>();
    for _ in 0..choice.len() {
        let mut degree = vec![0usize; nodes];
        for (i, &e) in choice.iter().enumerate() {
            if alive[i] {
                degree[edges[e].0] += 1;
                degree[edges[e].1] += 1;
            }
        }
        let (i, leaf) = choice.iter().enumerate().find_map(|(i, &e)| {
            let (a, b) = edges[e];
            if !alive[i] {
                None
            } else if degree[a] == 1 {
                Some((i, a))
            } else if degree[b] == 1 {
                Some((i, b))
            } else {
                None
            }
        })?;
        let (a, b) = edges[choice[i]];
        let other = if leaf == a { b } else { a };
        // positive endpoints send, negative endpoints receive
        let flow = if leaf == a { rest[a] } else { -rest[b] };
        if flow < -1e-12 * scale.max(1.0) {
            return None;
        }
        rest[other] += if leaf == a { flow } else { -flow };
        rest[leaf] = 0.0;
        total += flow.max(0.0) * cost(choice[i]);
        alive[i] = false;
    }
    Some(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub value: f64,
    /// A 1-Lipschitz function with `f(y_0) = 0` attaining the value.
    pub witness: Vec<f64>,
    pub max_lipschitz_excess: f64,
}

/// `sup Σ m(y) f(y)` over 1-Lipschitz `f` with `f(y_0) = 0`, as an LP in the
/// shifted variables `u_i = f(y_i) + d(y_i, y_0) ≥ 0`.
pub fn ae_norm_dual(space: &FiniteMetricSpace, m: &[f64]) -> Result<DualSolution> {
    let n = space.len();
    if m.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.len() });
    }
    check_sum_zero(m)?;
    let d = &space.d;
    let vars = n - 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for x in 1..n {
        let mut row = vec![0.0; vars];
        row[x - 1] = 1.0;
        a.push(row);
        b.push(2.0 * d[x][0]);
        for y in 1..n {
            if x != y {
                let mut row = vec![0.0; vars];
                row[x - 1] = 1.0;
                row[y - 1] = -1.0;
                a.push(row);
                b.push((d[x][y] + d[x][0] - d[y][0]).max(0.0));
            }
        }
    }
    let c: Vec<f64> = m[1..].to_vec();
    let u = match lp::maximize_le(&c, &a, &b)? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Unbounded => return Err(Error::CheckFailed("Lipschitz LP reported unbounded".into())),
    };
    let mut witness = vec![0.0; n];
    for x in 1..n {
        witness[x] = u[x - 1] - d[x][0];
    }
    let value = m.iter().zip(&witness).map(|(a, f)| a * f).sum::<f64>() + 0.0;
    let mut excess: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            excess = excess.max(witness[x] - witness[y] - d[x][y]);
        }
    }
    Ok(DualSolution { value, witness, max_lipschitz_excess: excess })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCertificate {
    pub x: usize,
    pub y: usize,
    /// Phase-one infeasibility of writing the atom as a convex combination
    /// of the other normalised atoms; positive means extreme.
    pub residual: f64,
    pub extreme: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeAtomsReport {
    pub concavity: ConcavityReport,
    pub atoms: Vec<AtomCertificate>,
    pub all_extreme: bool,
}

fn normalized_atoms(space: &FiniteMetricSpace) -> Vec<(usize, usize, Vec<f64>)> {
    let n = space.len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let c = coordinates(&atom(n, x, y)).iter().map(|v| v / space.d[x][y]).collect();
                out.push((x, y, c));
            }
        }
    }
    out
}

/// Certifies, per ordered pair, whether `m_{x,y}/d(x,y)` is an extreme point
/// of the free-space ball. The ball is the convex hull of these atoms.
pub fn free_extreme_atoms(space: &FiniteMetricSpace) -> Result<ExtremeAtomsReport> {
    let atoms = normalized_atoms(space);
    let certs = par::map_range(atoms.len(), |k| -> Result<AtomCertificate> {
        let (x, y, target) = &atoms[k];
        let others: Vec<&Vec<f64>> = atoms.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, a)| &a.2).collect();
        let dim = target.len();
        let mut a: Vec<Vec<f64>> = (0..dim).map(|r| others.iter().map(|v| v[r]).collect()).collect();
        a.push(vec![1.0; others.len()]);
        let mut b = target.clone();
        b.push(1.0);
        let residual = if others.is_empty() { 1.0 } else { lp::feasibility(&a, &b)?.0 };
        Ok(AtomCertificate { x: *x, y: *y, residual, extreme: residual > FREE_TOL })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let all_extreme = certs.iter().all(|c| c.extreme);
    Ok(ExtremeAtomsReport { concavity: space.concavity(), atoms: certs, all_extreme })
}

/// `T_{σ,g}` in molecule coordinates: `m ↦ σ · m∘g⁻¹`.
pub fn free_isometry_matrix(g: &Perm, sigma: f64) -> Matrix<f64> {
    let n = g.degree();
    let mut t = Matrix::zeros(n - 1, n - 1);
    let g0 = g.apply(0);
    for i in 1..n {
        let gi = g.apply(i);
        if gi != 0 {
            t[(gi - 1, i - 1)] += sigma;
        }
        if g0 != 0 {
            t[(g0 - 1, i - 1)] -= sigma;
        }
    }
    t
}

fn integer_key(t: &Matrix<f64>) -> Option<Vec<i8>> {
    let mut key = Vec::with_capacity(t.rows() * t.cols());
    for r in t.to_rows() {
        for v in r {
            let k = v.round();
            if (v - k).abs() > FREE_TOL || k.abs() > 100.0 {
                return None;
            }
            key.push(k as i8);
        }
    }
    Some(key)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeIsometryConfig {
    pub samples: usize,
    pub seed: u64,
    pub point_cap: usize,
}

impl Default for FreeIsometryConfig {
    fn default() -> Self {
        FreeIsometryConfig { samples: 20, seed: 0, point_cap: DEFAULT_POINT_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeIsometryReport {
    pub points: usize,
    pub dim: usize,
    pub concavity: ConcavityReport,
    pub metric_group: Vec<Vec<usize>>,
    /// `2 · |Isom(Y, d)|`.
    pub expected_order: usize,
    pub candidates_distinct: bool,
    pub candidates_preserve_atoms: bool,
    pub max_sampled_deviation: f64,
    pub group_law_verified: bool,
    /// Linear maps permuting the extreme atoms, found by enumeration.
    pub order: usize,
    pub extra_isometries: usize,
    pub missing_candidates: usize,
    pub assignments_tried: u64,
    pub matches_structure: bool,
    pub group: MatrixGroupRecord,
}

fn random_molecule_coords(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut m: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = m.iter().sum::<f64>() / n as f64;
    m.iter_mut().for_each(|v| *v -= mean);
    coordinates(&m)
}

fn norm_of_coords(space: &FiniteMetricSpace, c: &[f64]) -> Result<f64> {
    Ok(ae_norm_primal(space, &from_coordinates(c))?.value)
}

/// The linear isometry group of the free space over a concave metric with at
/// least three points, checked against `{±1} × Isom(Y, d)`.
pub fn ae_isometry_group(space: &FiniteMetricSpace, cfg: &FreeIsometryConfig) -> Result<FreeIsometryReport> {
    let n = space.len();
    if n < 3 {
        return Err(Error::InvalidInput("the free-space isometry structure needs at least 3 points".into()));
    }
    let concavity = space.concavity();
    if !concavity.concave {
        return Err(Error::InvalidInput(format!(
            "metric is not concave (min margin {:?}, diameter {})",
            concavity.min_margin, concavity.diameter
        )));
    }
    let extremes = free_extreme_atoms(space)?;
    if !extremes.all_extreme {
        return Err(Error::CheckFailed("a normalised atom is not extreme".into()));
    }
    let perms = metric_isometry_group(space, cfg.point_cap)?;
    let dim = n - 1;

    let mut candidates: BTreeMap<Vec<i8>, (usize, f64)> = BTreeMap::new();
    let mut cand_mats = Vec::new();
    for (gi, g) in perms.iter().enumerate() {
        for sigma in [1.0, -1.0] {
            let t = free_isometry_matrix(g, sigma);
            candidates.insert(integer_key(&t).expect("integral"), (gi, sigma));
            cand_mats.push(t);
        }
    }
    let expected_order = 2 * perms.len();
    let candidates_distinct = candidates.len() == expected_order;
    let candidates_preserve_atoms =
        perms.iter().all(|g| (0..n).all(|x| (0..n).all(|y| close(space.d[g.apply(x)][g.apply(y)], space.d[x][y]))));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples: Vec<Vec<f64>> = (0..cfg.samples).map(|_| random_molecule_coords(&mut rng, n)).collect();
    let deviations = par::map(&cand_mats, |t| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for c in &samples {
            let a = norm_of_coords(space, c)?;
            let b = norm_of_coords(space, &t.apply(c)?)?;
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    });
    let max_sampled_deviation = deviations.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);

    let group_law_verified = if perms.len() <= 60 {
        let mut ok = true;
        for (g, &s) in perms.iter().flat_map(|g| [1.0, -1.0].iter().map(move |s| (g, s))) {
            for (h, &t) in perms.iter().flat_map(|h| [1.0, -1.0].iter().map(move |t| (h, t))) {
                let lhs = free_isometry_matrix(g, s).mul(&free_isometry_matrix(h, t))?;
                ok &= lhs.approx_eq(&free_isometry_matrix(&g.compose(h), s * t), 0.0);
            }
        }
        ok
    } else {
        perms.windows(2).all(|w| {
            let lhs = free_isometry_matrix(&w[0], -1.0).mul(&free_isometry_matrix(&w[1], 1.0)).expect("square");
            lhs.approx_eq(&free_isometry_matrix(&w[0].compose(&w[1]), -1.0), 0.0)
        })
    };

    let (found, assignments_tried) = extreme_atom_isometries(space)?;
    let mut found_keys = BTreeSet::new();
    let mut extra_isometries = 0;
    for t in &found {
        match integer_key(t) {
            Some(k) if candidates.contains_key(&k) => {
                found_keys.insert(k);
            }
            _ => extra_isometries += 1,
        }
    }
    let missing_candidates = candidates.keys().filter(|k| !found_keys.contains(*k)).count();
    let order = found.len();
    let matches_structure = candidates_distinct
        && candidates_preserve_atoms
        && max_sampled_deviation <= FREE_TOL
        && group_law_verified
        && extra_isometries == 0
        && missing_candidates == 0
        && order == expected_order;
    let group = MatrixGroupRecord {
        dim,
        elements: found.iter().map(|t| t.to_rows().iter().map(|r| r.iter().map(|&v| Scalar::Float(v)).collect()).collect()).collect(),
    };
    Ok(FreeIsometryReport {
        points: n,
        dim,
        concavity,
        metric_group: perms.into_iter().map(|p| p.0).collect(),
        expected_order,
        candidates_distinct,
        candidates_preserve_atoms,
        max_sampled_deviation,
        group_law_verified,
        order,
        extra_isometries,
        missing_candidates,
        assignments_tried,
        matches_structure,
        group,
    })
}

/// Every linear map sending the normalised atoms bijectively onto themselves.
/// Images of the basis atoms `m_{y_i,y_0}/d` are chosen by backtracking,
/// pruned by the pairwise free-norm distances between atoms.
fn extreme_atom_isometries(space: &FiniteMetricSpace) -> Result<(Vec<Matrix<f64>>, u64)> {
    let n = space.len();
    let atoms = normalized_atoms(space);
    let verts: Vec<Vec<f64>> = atoms.iter().map(|a| a.2.clone()).collect();
    let v = verts.len();
    let index = |x: usize, y: usize| atoms.iter().position(|a| a.0 == x && a.1 == y).expect("atom");
    let pairs: Vec<(usize, usize)> = (0..v).flat_map(|a| (a + 1..v).map(move |b| (a, b))).collect();
    let dists = par::map(&pairs, |&(a, b)| {
        let diff: Vec<f64> = verts[a].iter().zip(&verts[b]).map(|(p, q)| p - q).collect();
        norm_of_coords(space, &diff)
    });
    let mut gap = vec![vec![0.0; v]; v];
    for (&(a, b), d) in pairs.iter().zip(dists) {
        let d = d?;
        gap[a][b] = d;
        gap[b][a] = d;
    }
    let profile = |a: usize| {
        let mut p = gap[a].clone();
        p.sort_by(f64::total_cmp);
        p
    };
    let profiles: Vec<Vec<f64>> = (0..v).map(profile).collect();
    let same = |a: f64, b: f64| (a - b).abs() <= FREE_TOL * a.abs().max(1.0);
    let basis: Vec<usize> = (1..n).map(|i| index(i, 0)).collect();
    let allowed: Vec<Vec<usize>> = basis
        .iter()
        .map(|&b| (0..v).filter(|&c| profiles[b].iter().zip(&profiles[c]).all(|(p, q)| same(*p, *q))).collect())
        .collect();
    let mut found = Vec::new();
    let mut tried = 0u64;
    let mut chosen = Vec::with_capacity(basis.len());
    let search = |chosen: &mut Vec<usize>, found: &mut Vec<Matrix<f64>>, tried: &mut u64| -> Result<()> {
        let mut stack: Vec<usize> = vec![0];
        while let Some(pos) = stack.pop() {
            let depth = stack.len();
            chosen.truncate(depth);
            if pos >= allowed[depth].len() {
                continue;
            }
            stack.push(pos + 1);
            let c = allowed[depth][pos];
            let b = basis[depth];
            if !(0..depth).all(|j| same(gap[c][chosen[j]], gap[b][basis[j]])) {
                continue;
            }
            *tried += 1;
            chosen.push(c);
            if depth + 1 == basis.len() {
                let cols: Vec<Vec<f64>> =
                    chosen.iter().zip(1..n).map(|(&img, i)| verts[img].iter().map(|x| x * space.d[i][0]).collect()).collect();
                let t = Matrix::from_columns(&cols)?;
                if permutes(&t, &verts)? {
                    found.push(t);
                }
                chosen.pop();
            } else {
                stack.push(0);
            }
        }
        Ok(())
    };
    search(&mut chosen, &mut found, &mut tried)?;
    Ok((found, tried))
}

fn permutes(t: &Matrix<f64>, verts: &[Vec<f64>]) -> Result<bool> {
    let mut hit = vec![false; verts.len()];
    for v in verts {
        let w = t.apply(v)?;
        let Some(k) = verts.iter().position(|u| u.iter().zip(&w).all(|(a, b)| (a - b).abs() <= FREE_TOL)) else {
            return Ok(false);
        };
        if hit[k] {
            return Ok(false);
        }
        hit[k] = true;
    }
    Ok(true)
}

/// Distances drawn from `{1, 2}` (often symmetric) or uniformly from `[1, 2]`
/// (generic). Both are metrics since no distance exceeds twice another.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize, discrete: bool) -> FiniteMetricSpace {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = if discrete { f64::from(rng.random_range(1u8..=2)) } else { rng.random_range(1.0..2.0) };
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    FiniteMetricSpace::unlabelled(d).expect("distances in [1,2] form a metric")
}

/// Sum-zero masses on a random support of size at most `max_support`.
pub fn random_molecule(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> Vec<f64> {
    let k = rng.random_range(2..=max_support.min(n).max(2));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut m = vec![0.0; n];
    for &i in &idx[..k] {
        m[i] = rng.random_range(-1.0..1.0);
    }
    let mean = idx[..k].iter().map(|&i| m[i]).sum::<f64>() / k as f64;
    for &i in &idx[..k] {
        m[i] -= mean;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> FiniteMetricSpace {
        FiniteMetricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
        )
        .unwrap()
    }

    fn equilateral(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::unlabelled((0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect()).unwrap()
    }

    fn concave(m: &FiniteMetricSpace) -> FiniteMetricSpace {
        m.transform_bounded().transform_concave().unwrap().0
    }

    #[test]
    fn transforms() {
        let m = FiniteMetricSpace::unlabelled(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(m.transform_bounded().dist(0, 1), 0.75);
        let (c, _) = m.transform_bounded().transform_concave().unwrap();
        assert!((c.dist(0, 1) - 0.866025).abs() < 1e-6);
        let (p, rep) = path3().transform_bounded().transform_concave().unwrap();
        assert!((p.dist(0, 1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
        assert!((p.dist(0, 2) - 0.816497).abs() < 1e-6);
        assert!((rep.min_margin.unwrap() - 0.597717).abs() < 1e-6);
        assert!(rep.concave);
        assert!(path3().transform_concave().is_err());
    }

    #[test]
    fn validation() {
        assert!(FiniteMetricSpace::unlabelled(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::unlabelled(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::unlabelled(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
        let m: FiniteMetricSpace = serde_json::from_str(r#"{"points":["a","b"],"d":[[0,"1/2"],[0.5,0]]}"#).unwrap();
        assert_eq!(m.dist(0, 1), 0.5);
    }

    #[test]
    fn isometry_groups() {
        assert_eq!(metric_isometry_group(&equilateral(3), 10).unwrap().len(), 6);
        assert_eq!(metric_isometry_group(&path3(), 10).unwrap(), vec![Perm(vec![0, 1, 2]), Perm(vec![2, 1, 0])]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(metric_isometry_group(&random_metric(&mut rng, 6, false), 10).unwrap().len(), 1);
        assert!(metric_isometry_group(&equilateral(11), 10).is_err());
    }

    #[test]
    fn primal_examples() {
        let p = path3();
        assert_eq!(ae_norm_primal(&p, &atom(3, 0, 2)).unwrap().value, 2.0);
        assert_eq!(ae_norm_primal(&p, &[1.0, 1.0, -2.0]).unwrap().value, 3.0);
        assert_eq!(ae_norm_primal(&p, &[0.0; 3]).unwrap().value, 0.0);
        assert!(ae_norm_primal(&p, &[1.0, 0.0, 0.0]).is_err());
        assert_eq!(transport_by_bases(&p, &[1.0, 1.0, -2.0]).unwrap(), 3.0);
    }

    #[test]
    fn dual_examples() {
        let p = path3();
        let s = ae_norm_dual(&p, &atom(3, 0, 2)).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert!(s.max_lipschitz_excess < 1e-12);
        let z = ae_norm_dual(&p, &[0.0; 3]).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.witness.iter().all(|v| v.abs() < 1e-12) || z.max_lipschitz_excess < 1e-12);
    }

    #[test]
    fn duality_on_random_molecules() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..60 {
            let n = rng.random_range(2..=9);
            let space = random_metric(&mut rng, n, round % 2 == 0);
            let m = random_molecule(&mut rng, n, 8);
            let primal = ae_norm_primal(&space, &m).unwrap().value;
            let dual = ae_norm_dual(&space, &m).unwrap().value;
            let oracle = transport_by_bases(&space, &m).unwrap();
            assert!((primal - dual).abs() < 1e-9, "{primal} vs {dual}");
            assert!((primal - oracle).abs() < 1e-9, "{primal} vs {oracle}");
        }
    }

    #[test]
    fn extreme_atoms() {
        let r = free_extreme_atoms(&concave(&equilateral(3))).unwrap();
        assert_eq!(r.atoms.len(), 6);
        assert!(r.all_extreme);
        let two = FiniteMetricSpace::unlabelled(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(free_extreme_atoms(&two).unwrap().all_extreme);
        let raw = free_extreme_atoms(&path3()).unwrap();
        let ac = raw.atoms.iter().find(|c| c.x == 0 && c.y == 2).unwrap();
        assert!(!ac.extreme);
        assert!(!raw.concavity.concave);
    }

    #[test]
    fn free_isometries() {
        let r = ae_isometry_group(&concave(&equilateral(3)), &FreeIsometryConfig::default()).unwrap();
        assert_eq!(r.order, 12);
        assert!(r.matches_structure, "{r:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rigid = concave(&random_metric(&mut rng, 4, false));
        let r = ae_isometry_group(&rigid, &FreeIsometryConfig::default()).unwrap();
        assert_eq!(r.order, 2);
        assert!(r.matches_structure);
        assert!(ae_isometry_group(&concave(&FiniteMetricSpace::unlabelled(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()), &FreeIsometryConfig::default()).is_err());
    }

    #[test]
    fn no_dilations() {
        let m = concave(&equilateral(4));
        let r = dilation_check(&m, 1.5);
        assert!(!r.diameter_allows && !r.found);
        assert!(dilation_check(&m, 1.0).found);
    }
}
