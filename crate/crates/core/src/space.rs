//! Finite-dimensional normed spaces and their generic norm, dual-norm and
//! support-functional evaluators.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::graph_norm::{extreme_points, GammaSpace};
use crate::graphs::{path_metric, Graph};
use crate::linalg::Matrix;
use crate::pimple::{PimpleSpace, Spike};
use crate::polytope::enumerate_vertices;
use crate::scalar::{homogenize, Field, Homogeneous, Rational, Scalar};

pub const DEFAULT_VERTEX_CAP: usize = 200_000;

#[derive(Clone, Debug)]
pub enum FacetList {
    Exact(Vec<Vec<Rational>>),
    Float(Vec<Vec<f64>>),
}

/// Unit ball `{x : |φ_i(x)| ≤ 1}` for a facet list closed under negation.
#[derive(Clone, Debug)]
pub struct PolyhedralSpace {
    dim: usize,
    facets: FacetList,
    vertices: OnceLock<Vec<Vec<Rational>>>,
}

fn exact_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite value {x}")))
}

impl PolyhedralSpace {
    pub fn new(dim: usize, facets: FacetList) -> Result<PolyhedralSpace> {
        let exact: Vec<Vec<Rational>> = match &facets {
            FacetList::Exact(f) => f.clone(),
            FacetList::Float(f) => f.iter().map(|r| r.iter().map(|&x| exact_f64(x)).collect()).collect::<Result<_>>()?,
        };
        if let Some(bad) = exact.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        for f in &exact {
            let neg: Vec<Rational> = f.iter().map(|x| -x).collect();
            if !exact.contains(&neg) {
                return Err(Error::InvalidInput("facet list is not closed under negation".into()));
            }
        }
        if exact.is_empty() || Matrix::from_rows(exact.clone())?.rank(0.0) < dim {
            return Err(Error::InvalidInput("facets do not span the dual: the norm is not positive definite".into()));
        }
        Ok(PolyhedralSpace { dim, facets, vertices: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &FacetList {
        &self.facets
    }

    pub fn exact_facets(&self) -> Vec<Vec<Rational>> {
        match &self.facets {
            FacetList::Exact(f) => f.clone(),
            FacetList::Float(f) => f.iter().map(|r| r.iter().map(|&x| Rational::from_float(x).expect("validated")).collect()).collect(),
        }
    }

    /// Ball vertices, enumerated once.
    pub fn vertices(&self) -> Result<&[Vec<Rational>]> {
        if let Some(v) = self.vertices.get() {
            return Ok(v);
        }
        let v = enumerate_vertices(&self.exact_facets(), DEFAULT_VERTEX_CAP)?;
        Ok(self.vertices.get_or_init(|| v))
    }
}

/// A coordinate space with one of the supported norms.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SpaceRecord", into = "SpaceRecord")]
pub enum NormedSpace {
    Euclidean { dim: usize },
    Polyhedral(PolyhedralSpace),
    GraphNorm(GammaSpace),
    Pimple(PimpleSpace),
}

/// JSON shape shared by all space kinds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceRecord {
    pub dim: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<Scalar>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<SpaceRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spikes: Option<Vec<Spike>>,
}

impl SpaceRecord {
    fn bare(dim: usize, kind: &str) -> SpaceRecord {
        SpaceRecord { dim, kind: kind.into(), facets: None, metric: None, base: None, spikes: None }
    }
}

/// Graph whose path metric is `metric`: edges are the pairs at distance one.
pub fn graph_from_metric(metric: &[Vec<u32>]) -> Result<Graph> {
    let n = metric.len();
    let mut edges = Vec::new();
    for (i, row) in metric.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput("metric is not square".into()));
        }
        for j in i + 1..n {
            if row[j] == 1 {
                edges.push((i, j));
            }
        }
    }
    let g = Graph::new(n, &edges)?;
    let pm = path_metric(&g)?;
    for i in 0..n {
        for j in 0..n {
            if pm.get(i, j) != metric[i][j] {
                return Err(Error::InvalidInput(format!("metric entry ({i},{j}) is not the path metric of its distance-one graph")));
            }
        }
    }
    Ok(g)
}

impl TryFrom<SpaceRecord> for NormedSpace {
    type Error = Error;

    fn try_from(r: SpaceRecord) -> Result<NormedSpace> {
        if r.dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        match r.kind.as_str() {
            "euclidean" => Ok(NormedSpace::Euclidean { dim: r.dim }),
            "polyhedral" => {
                let rows = r.facets.ok_or_else(|| Error::InvalidInput("polyhedral space needs \"facets\"".into()))?;
                let flat: Vec<Scalar> = rows.iter().flatten().cloned().collect();
                let width = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|row| row.len() != width) {
                    return Err(Error::InvalidInput("ragged facet list".into()));
                }
                let w = width.max(1);
                let facets = match homogenize(&flat)? {
                    Homogeneous::Exact(v) => FacetList::Exact(v.chunks(w).map(<[_]>::to_vec).collect()),
                    Homogeneous::Float(v) => FacetList::Float(v.chunks(w).map(<[_]>::to_vec).collect()),
                };
                Ok(NormedSpace::Polyhedral(PolyhedralSpace::new(r.dim, facets)?))
            }
            "graph_norm" => {
                let metric = r.metric.ok_or_else(|| Error::InvalidInput("graph_norm space needs \"metric\"".into()))?;
                if metric.len() != r.dim {
                    return Err(Error::DimensionMismatch { expected: r.dim, got: metric.len() });
                }
                Ok(NormedSpace::GraphNorm(GammaSpace::new(graph_from_metric(&metric)?)?))
            }
            "pimple" => {
                let base = r.base.ok_or_else(|| Error::InvalidInput("pimple space needs \"base\"".into()))?;
                if base.kind != "euclidean" {
                    return Err(Error::Unsupported(format!("pimple base {:?}: only a euclidean base is supported", base.kind)));
                }
                if base.dim != r.dim {
                    return Err(Error::DimensionMismatch { expected: r.dim, got: base.dim });
                }
                Ok(NormedSpace::Pimple(PimpleSpace::new(r.dim, r.spikes.unwrap_or_default())?))
            }
            other => Err(Error::InvalidInput(format!("unknown space kind {other:?}"))),
        }
    }
}

impl From<NormedSpace> for SpaceRecord {
    fn from(s: NormedSpace) -> SpaceRecord {
        match s {
            NormedSpace::Euclidean { dim } => SpaceRecord::bare(dim, "euclidean"),
            NormedSpace::Polyhedral(p) => SpaceRecord {
                facets: Some(match &p.facets {
                    FacetList::Exact(f) => f.iter().map(|r| r.iter().cloned().map(Scalar::Exact).collect()).collect(),
                    FacetList::Float(f) => f.iter().map(|r| r.iter().copied().map(Scalar::Float).collect()).collect(),
                }),
                ..SpaceRecord::bare(p.dim, "polyhedral")
            },
            NormedSpace::GraphNorm(g) => {
                let n = g.dim();
                let m = g.metric();
                SpaceRecord { metric: Some((0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()), ..SpaceRecord::bare(n, "graph_norm") }
            }
            NormedSpace::Pimple(p) => SpaceRecord {
                base: Some(Box::new(SpaceRecord::bare(p.dim(), "euclidean"))),
                spikes: Some(p.spikes().to_vec()),
                ..SpaceRecord::bare(p.dim(), "pimple")
            },
        }
    }
}

/// `sqrt(q)` when `q` is the square of a rational.
pub fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer().sqrt(), q.denom().sqrt());
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Rational::new(n, d))
}

fn sum_squares(x: &[Rational]) -> Rational {
    x.iter().fold(<Rational as Zero>::zero(), |acc, v| acc + v * v)
}

fn max_pairing_exact(functionals: &[Vec<Rational>], x: &[Rational]) -> Option<(usize, Rational)> {
    functionals
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f.iter().zip(x).fold(<Rational as Zero>::zero(), |a, (p, q)| a + p * q)))
        .fold(None, |best: Option<(usize, Rational)>, (i, v)| match best {
            Some((_, ref b)) if *b >= v => best,
            _ => Some((i, v)),
        })
}

fn max_pairing_f64(functionals: &[Vec<f64>], x: &[f64]) -> Option<(usize, f64)> {
    functionals
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()))
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
}

impl NormedSpace {
    pub fn dim(&self) -> usize {
        match self {
            NormedSpace::Euclidean { dim } => *dim,
            NormedSpace::Polyhedral(p) => p.dim,
            NormedSpace::GraphNorm(g) => g.dim(),
            NormedSpace::Pimple(p) => p.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NormedSpace::Euclidean { .. } => "euclidean",
            NormedSpace::Polyhedral(_) => "polyhedral",
            NormedSpace::GraphNorm(_) => "graph_norm",
            NormedSpace::Pimple(_) => "pimple",
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: len });
        }
        Ok(())
    }

    /// Dual-ball vertices in exact arithmetic, when the ball is a polytope.
    fn dual_vertices(&self) -> Result<Vec<Vec<Rational>>> {
        match self {
            NormedSpace::Polyhedral(p) => Ok(p.vertices()?.to_vec()),
            NormedSpace::GraphNorm(g) => Ok(extreme_points(g, crate::graph_norm::DEFAULT_EXTREME_CAP)?.0),
            _ => Err(Error::Unsupported(format!("no vertex description for a {} space", self.kind()))),
        }
    }
}

/// `‖x‖`, exact whenever the space and the input allow it.
pub fn norm_eval(space: &NormedSpace, x: &[Scalar]) -> Result<Scalar> {
    space.check(x.len())?;
    match (space, homogenize(x)?) {
        (NormedSpace::Euclidean { .. }, Homogeneous::Exact(v)) => {
            let s = sum_squares(&v);
            Ok(match exact_sqrt(&s) {
                Some(r) => Scalar::Exact(r),
                None => Scalar::Float(dd::norm2(&v.iter().map(|r| Dd::from(Field::to_f64(r))).collect::<Vec<_>>()).hi()),
            })
        }
        (NormedSpace::Euclidean { .. }, Homogeneous::Float(v)) => Ok(Scalar::Float(crate::linalg::euclid(&v))),
        (NormedSpace::Polyhedral(p), Homogeneous::Exact(v)) => match &p.facets {
            FacetList::Exact(f) => Ok(Scalar::Exact(max_pairing_exact(f, &v).map(|(_, n)| n).unwrap_or_default())),
            FacetList::Float(f) => Ok(Scalar::Float(max_pairing_f64(f, &v.iter().map(Field::to_f64).collect::<Vec<_>>()).map_or(0.0, |(_, n)| n))),
        },
        (NormedSpace::Polyhedral(p), Homogeneous::Float(v)) => {
            let f64_facets = match &p.facets {
                FacetList::Exact(f) => f.iter().map(|r| r.iter().map(Field::to_f64).collect()).collect(),
                FacetList::Float(f) => f.clone(),
            };
            Ok(Scalar::Float(max_pairing_f64(&f64_facets, &v).map_or(0.0, |(_, n)| n)))
        }
        (NormedSpace::GraphNorm(g), Homogeneous::Exact(v)) => Ok(Scalar::Exact(g.norm(&v)?)),
        (NormedSpace::GraphNorm(g), Homogeneous::Float(v)) => Ok(Scalar::Float(g.norm_f64(&v)?)),
        (NormedSpace::Pimple(p), h) => {
            let v = match h {
                Homogeneous::Exact(v) => v.iter().map(Field::to_f64).collect(),
                Homogeneous::Float(v) => v,
            };
            Ok(Scalar::Float(p.norm_f64(&v)?))
        }
    }
}

/// `sup{φ(x) : ‖x‖ ≤ 1}`.
pub fn dual_norm_eval(space: &NormedSpace, phi: &[Scalar]) -> Result<Scalar> {
    space.check(phi.len())?;
    let h = homogenize(phi)?;
    match space {
        NormedSpace::Euclidean { .. } => norm_eval(space, phi),
        NormedSpace::Pimple(p) => {
            let v: Vec<Dd> = match h {
                Homogeneous::Exact(v) => v.iter().map(|r| Dd::from(Field::to_f64(r))).collect(),
                Homogeneous::Float(v) => dd::from_f64_slice(&v),
            };
            Ok(Scalar::Float(p.dual_norm(&v).hi()))
        }
        _ => {
            let verts = space.dual_vertices()?;
            match h {
                Homogeneous::Exact(v) => Ok(Scalar::Exact(max_pairing_exact(&verts, &v).map(|(_, n)| n).unwrap_or_default())),
                Homogeneous::Float(v) => {
                    let fv: Vec<Vec<f64>> = verts.iter().map(|r| r.iter().map(Field::to_f64).collect()).collect();
                    Ok(Scalar::Float(max_pairing_f64(&fv, &v).map_or(0.0, |(_, n)| n)))
                }
            }
        }
    }
}

/// A norming functional: dual norm one and `φ(x) = ‖x‖`. Polyhedral ties go
/// to the lowest facet index.
pub fn support_functional(space: &NormedSpace, x: &[Scalar]) -> Result<Vec<Scalar>> {
    space.check(x.len())?;
    let h = homogenize(x)?;
    let zero = match &h {
        Homogeneous::Exact(v) => v.iter().all(Zero::is_zero),
        Homogeneous::Float(v) => v.iter().all(|t| *t == 0.0),
    };
    if zero {
        return Err(Error::InvalidInput("support functional of the zero vector".into()));
    }
    match (space, h) {
        (NormedSpace::Euclidean { .. }, h) => {
            let n = norm_eval(space, x)?;
            match (n, h) {
                (Scalar::Exact(n), Homogeneous::Exact(v)) => Ok(v.iter().map(|t| Scalar::Exact(t / &n)).collect()),
                (n, _) => Ok(x.iter().map(|t| Scalar::Float(t.to_f64() / n.to_f64())).collect()),
            }
        }
        (NormedSpace::Polyhedral(p), Homogeneous::Exact(v)) => match &p.facets {
            FacetList::Exact(f) => Ok(f[max_pairing_exact(f, &v).expect("nonempty").0].iter().cloned().map(Scalar::Exact).collect()),
            FacetList::Float(f) => {
                let fv: Vec<f64> = v.iter().map(Field::to_f64).collect();
                Ok(f[max_pairing_f64(f, &fv).expect("nonempty").0].iter().copied().map(Scalar::Float).collect())
            }
        },
        (NormedSpace::Polyhedral(p), Homogeneous::Float(v)) => {
            let f64_facets: Vec<Vec<f64>> = match &p.facets {
                FacetList::Exact(f) => f.iter().map(|r| r.iter().map(Field::to_f64).collect()).collect(),
                FacetList::Float(f) => f.clone(),
            };
            Ok(f64_facets[max_pairing_f64(&f64_facets, &v).expect("nonempty").0].iter().copied().map(Scalar::Float).collect())
        }
        (NormedSpace::GraphNorm(g), Homogeneous::Exact(v)) => Ok(g.support(&v)?.dense(g.dim()).into_iter().map(Scalar::Exact).collect()),
        (NormedSpace::GraphNorm(g), Homogeneous::Float(v)) => {
            let n = g.norm_f64(&v)?;
            let f = g
                .symmetric_facets()
                .into_iter()
                .find(|f| (f.eval_f64(&v) - n).abs() <= 1e-12 * n.max(1.0))
                .ok_or_else(|| Error::CheckFailed("no facet attains the norm".into()))?;
            Ok(f.dense(g.dim()).iter().map(|r| Scalar::Float(Field::to_f64(r))).collect())
        }
        (NormedSpace::Pimple(p), h) => {
            let v: Vec<f64> = match h {
                Homogeneous::Exact(v) => v.iter().map(Field::to_f64).collect(),
                Homogeneous::Float(v) => v,
            };
            Ok(p.support(&dd::from_f64_slice(&v))?.iter().map(|d| Scalar::Float(d.hi())).collect())
        }
    }
}

/// Floating-point access to a norm, for sampling-based diagnostics.
pub trait NormOracle: Sync {
    fn dim(&self) -> usize;
    fn norm(&self, x: &[f64]) -> Result<f64>;
    fn dual_norm(&self, phi: &[f64]) -> Result<f64>;
    fn support(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl NormOracle for NormedSpace {
    fn dim(&self) -> usize {
        NormedSpace::dim(self)
    }

    fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok(norm_eval(self, &crate::scalar::float_vec(x))?.to_f64())
    }

    fn dual_norm(&self, phi: &[f64]) -> Result<f64> {
        Ok(dual_norm_eval(self, &crate::scalar::float_vec(phi))?.to_f64())
    }

    fn support(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(support_functional(self, &crate::scalar::float_vec(x))?.iter().map(Scalar::to_f64).collect())
    }
}

/// `ℓ∞` ball in dimension `dim` as a polyhedral space.
pub fn linf(dim: usize) -> NormedSpace {
    let mut facets = Vec::new();
    for i in 0..dim {
        for s in [1i64, -1] {
            let mut f = vec![<Rational as Zero>::zero(); dim];
            f[i] = Rational::from_integer(BigInt::from(s));
            facets.push(f);
        }
    }
    NormedSpace::Polyhedral(PolyhedralSpace::new(dim, FacetList::Exact(facets)).expect("valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn ex(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&i| Scalar::Exact(rat_int(i))).collect()
    }

    fn parse(json: &str) -> NormedSpace {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn euclidean_examples() {
        let e = NormedSpace::Euclidean { dim: 2 };
        assert_eq!(norm_eval(&e, &ex(&[3, 4])).unwrap(), Scalar::Exact(rat_int(5)));
        assert_eq!(norm_eval(&e, &ex(&[0, 0])).unwrap(), Scalar::Exact(rat_int(0)));
        assert_eq!(dual_norm_eval(&e, &ex(&[0, 1])).unwrap(), Scalar::Exact(rat_int(1)));
        assert_eq!(support_functional(&e, &ex(&[0, 2])).unwrap(), ex(&[0, 1]));
        assert!(matches!(norm_eval(&e, &ex(&[1, 1])).unwrap(), Scalar::Float(_)));
    }

    #[test]
    fn linf_examples() {
        let s = linf(2);
        assert_eq!(dual_norm_eval(&s, &ex(&[1, 1])).unwrap(), Scalar::Exact(rat_int(2)));
        assert_eq!(support_functional(&s, &ex(&[1, 1])).unwrap(), ex(&[1, 0]));
    }

    #[test]
    fn graph_norm_examples() {
        let s = parse(r#"{"dim":3,"kind":"graph_norm","metric":[[0,1,2],[1,0,1],[2,1,0]]}"#);
        assert_eq!(norm_eval(&s, &ex(&[1, 1, 0])).unwrap(), Scalar::Exact(rat(4, 3)));
        assert_eq!(dual_norm_eval(&s, &ex(&[1, 0, 0])).unwrap(), Scalar::Exact(rat_int(1)));
        let phi = support_functional(&s, &ex(&[1, 1, 0])).unwrap();
        assert_eq!(phi, vec![Scalar::Exact(rat_int(1)), Scalar::Exact(rat(1, 3)), Scalar::Exact(rat_int(0))]);
        assert_eq!(dual_norm_eval(&s, &phi).unwrap(), Scalar::Exact(rat_int(1)));
    }

    #[test]
    fn rejects_bad_records() {
        assert!(serde_json::from_str::<NormedSpace>(r#"{"dim":2,"kind":"polyhedral","facets":[[1,0],[-1,0]]}"#).is_err());
        assert!(serde_json::from_str::<NormedSpace>(r#"{"dim":2,"kind":"polyhedral","facets":[[1,0],[0,1]]}"#).is_err());
        assert!(serde_json::from_str::<NormedSpace>(r#"{"dim":3,"kind":"graph_norm","metric":[[0,1,1],[1,0,1],[1,1,0],[0,0,0]]}"#).is_err());
        assert!(serde_json::from_str::<NormedSpace>(r#"{"dim":2,"kind":"graph_norm","metric":[[0,2],[2,0]]}"#).is_err());
        let e = NormedSpace::Euclidean { dim: 2 };
        assert!(matches!(norm_eval(&e, &ex(&[1, 2, 3])), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(norm_eval(&e, &[Scalar::Exact(rat_int(1)), Scalar::Float(0.5)]), Err(Error::ModeMismatch)));
    }

    #[test]
    fn pimple_record_round_trip() {
        let s = parse(r#"{"dim":2,"kind":"pimple","base":{"dim":2,"kind":"euclidean"},"spikes":[[[1.0,0.0],0.9]]}"#);
        let y = [Scalar::Float(0.0), Scalar::Float(1.0)];
        assert!((norm_eval(&s, &y).unwrap().to_f64() - 1.0).abs() < 1e-15);
        let x = [Scalar::Float(1.0), Scalar::Float(0.0)];
        assert!((norm_eval(&s, &x).unwrap().to_f64() - 0.9).abs() < 1e-15);
        let back: NormedSpace = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&s).unwrap());
        assert!(serde_json::from_str::<NormedSpace>(r#"{"dim":2,"kind":"pimple","base":{"dim":2,"kind":"polyhedral","facets":[[1,0],[-1,0],[0,1],[0,-1]]},"spikes":[]}"#).is_err());
    }
}
