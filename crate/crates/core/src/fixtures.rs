//! Embedded named inputs used by the self-test and by `fixture:NAME`
//! references on the command line.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::free_space::FiniteMetricSpace;
use crate::graphs::Graph;
use crate::group::{MatrixGroup, MatrixGroupRecord, Perm, PermGroup};
use crate::linalg::Matrix;
use crate::pimple::embed::{central_involution_embedding, signed_permutation_group, SecondFactor};
use crate::scalar::{rat_int, Scalar};
use crate::space::NormedSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    Graph,
    Metric,
    PermGroup,
    MatrixGroup,
    Space,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub kind: FixtureKind,
    pub description: &'static str,
    pub provenance: &'static str,
}

const CATALOG: &[(&str, FixtureKind, &str, &str)] = &[
    ("path3", FixtureKind::Graph, "3-vertex path", "TRIVIAL"),
    ("path5", FixtureKind::Graph, "5-vertex path", "TRIVIAL"),
    ("cycle4", FixtureKind::Graph, "4-cycle", "TRIVIAL"),
    ("cycle5", FixtureKind::Graph, "5-cycle", "TRIVIAL"),
    ("star3", FixtureKind::Graph, "star K_{1,3}", "TRIVIAL"),
    ("rigid-tree7", FixtureKind::Graph, "spider with legs 1, 2, 3 (smallest asymmetric tree)", "DERIVED: unique branch lengths"),
    ("trivial-1", FixtureKind::PermGroup, "trivial group on 1 point", "TRIVIAL"),
    ("trivial-3", FixtureKind::PermGroup, "trivial group on 3 points", "TRIVIAL"),
    ("s2-2", FixtureKind::PermGroup, "S_2 on 2 points", "TRIVIAL"),
    ("equilateral3", FixtureKind::Metric, "d = 1 on 3 points", "TRIVIAL"),
    ("path3-metric", FixtureKind::Metric, "path metric (1, 1, 2) on a, b, c", "TRIVIAL"),
    ("rigid4-metric", FixtureKind::Metric, "4 points with distinct distances in [1, 2]", "DERIVED: brute-force isometry search"),
    ("pm-id-1", FixtureKind::MatrixGroup, "{±Id} in dimension 1", "TRIVIAL"),
    ("pm-id-2", FixtureKind::MatrixGroup, "{±Id} in dimension 2", "TRIVIAL"),
    ("pm-id-3", FixtureKind::MatrixGroup, "{±Id} in dimension 3", "TRIVIAL"),
    ("pm-id-4", FixtureKind::MatrixGroup, "{±Id} in dimension 4", "TRIVIAL"),
    ("signed-swap-4", FixtureKind::MatrixGroup, "order-4 group generated by -Id and the coordinate swap", "DERIVED: group_closure of {-Id, swap}"),
    ("pm-s3", FixtureKind::MatrixGroup, "{±1} × S_3 acting by signed coordinate permutations", "DERIVED: group_closure"),
    ("signed-perms-2", FixtureKind::MatrixGroup, "all 8 signed permutations of the plane", "DERIVED: group_closure"),
    ("pi-c2", FixtureKind::MatrixGroup, "central_involution_embedding of C_2 (dimension 1)", "DERIVED: embedding"),
    ("pi-c2c2", FixtureKind::MatrixGroup, "central_involution_embedding of C_2 × C_2 with s = (01)(23)", "DERIVED: embedding"),
    ("euclidean2", FixtureKind::Space, "Euclidean plane", "TRIVIAL"),
    ("euclidean3", FixtureKind::Space, "Euclidean 3-space", "TRIVIAL"),
    ("linf2", FixtureKind::Space, "l_inf plane", "TRIVIAL"),
    ("path3-gamma", FixtureKind::Space, "graph norm of path3", "TRIVIAL"),
];

pub fn catalog() -> Vec<Fixture> {
    CATALOG.iter().map(|&(name, kind, description, provenance)| Fixture { name, kind, description, provenance }).collect()
}

fn unknown(name: &str) -> Error {
    Error::InvalidInput(format!("unknown fixture {name:?}"))
}

pub fn graph(name: &str) -> Result<Graph> {
    Ok(match name {
        "path3" => Graph::path(3),
        "path5" => Graph::path(5),
        "cycle4" => Graph::cycle(4),
        "cycle5" => Graph::cycle(5),
        "star3" => Graph::star(3),
        "rigid-tree7" => Graph::new(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)])?,
        _ => return Err(unknown(name)),
    })
}

/// The graphs of the closed-form, extreme-point and isometry checks.
pub fn catalog_graphs() -> Vec<(&'static str, Graph)> {
    ["path3", "path5", "cycle4", "cycle5", "star3", "rigid-tree7"].into_iter().map(|n| (n, graph(n).expect("catalog"))).collect()
}

fn perm(images: &[usize]) -> Perm {
    Perm::from_images(images.to_vec()).expect("valid permutation")
}

pub fn perm_group(name: &str) -> Result<PermGroup> {
    match name {
        "trivial-1" => Ok(PermGroup::trivial(1)),
        "trivial-3" => Ok(PermGroup::trivial(3)),
        "s2-2" => PermGroup::generate(2, &[perm(&[1, 0])], 10),
        _ => Err(unknown(name)),
    }
}

pub fn metric(name: &str) -> Result<FiniteMetricSpace> {
    let labels = |n: usize| (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect::<Vec<_>>();
    match name {
        "equilateral3" => FiniteMetricSpace::new(labels(3), vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]),
        "path3-metric" => FiniteMetricSpace::new(labels(3), vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]),
        "rigid4-metric" => FiniteMetricSpace::new(
            labels(4),
            vec![
                vec![0.0, 1.0, 1.25, 1.5],
                vec![1.0, 0.0, 1.75, 1.125],
                vec![1.25, 1.75, 0.0, 1.375],
                vec![1.5, 1.125, 1.375, 0.0],
            ],
        ),
        _ => Err(unknown(name)),
    }
}

fn minus_identity_group(dim: usize) -> MatrixGroup<f64> {
    MatrixGroup::closure(dim, &[Matrix::identity(dim).neg()], 4, 1e-12).expect("order 2")
}

pub fn matrix_group(name: &str) -> Result<MatrixGroup<f64>> {
    let swap = || Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).expect("2x2");
    match name {
        "pm-id-1" => Ok(minus_identity_group(1)),
        "pm-id-2" => Ok(minus_identity_group(2)),
        "pm-id-3" => Ok(minus_identity_group(3)),
        "pm-id-4" => Ok(minus_identity_group(4)),
        "signed-swap-4" => MatrixGroup::closure(2, &[swap(), Matrix::identity(2).neg()], 10, 1e-12),
        "pm-s3" => signed_permutation_group(3, &[perm(&[1, 0, 2]), perm(&[1, 2, 0])]),
        "signed-perms-2" => {
            let flip = Matrix::from_rows(vec![vec![-1.0, 0.0], vec![0.0, 1.0]])?;
            MatrixGroup::closure(2, &[swap(), flip], 10, 1e-12)
        }
        "pi-c2" => {
            let s = perm(&[1, 0]);
            let h = PermGroup::generate(2, std::slice::from_ref(&s), 10)?;
            Ok(central_involution_embedding(&h, &s, SecondFactor::Multiplicity { r: 0 })?.group)
        }
        "pi-c2c2" => {
            let h = PermGroup::generate(4, &[perm(&[1, 0, 2, 3]), perm(&[0, 1, 3, 2])], 10)?;
            Ok(central_involution_embedding(&h, &perm(&[1, 0, 3, 2]), SecondFactor::Multiplicity { r: 0 })?.group)
        }
        _ => Err(unknown(name)),
    }
}

/// Groups displayed by the renorming round trip.
pub fn display_groups() -> Vec<(&'static str, MatrixGroup<f64>)> {
    ["pm-id-1", "pm-id-2", "pm-id-3", "pm-id-4", "signed-swap-4", "pm-s3", "pi-c2", "pi-c2c2"]
        .into_iter()
        .map(|n| (n, matrix_group(n).expect("catalog")))
        .collect()
}

pub fn space(name: &str) -> Result<NormedSpace> {
    match name {
        "euclidean2" => Ok(NormedSpace::Euclidean { dim: 2 }),
        "euclidean3" => Ok(NormedSpace::Euclidean { dim: 3 }),
        "linf2" => Ok(crate::space::linf(2)),
        "path3-gamma" => Ok(NormedSpace::GraphNorm(crate::graph_norm::GammaSpace::new(Graph::path(3))?)),
        _ => Err(unknown(name)),
    }
}

/// The fixture in its on-disk JSON form.
pub fn fixture_json(name: &str) -> Result<Value> {
    let kind = CATALOG.iter().find(|f| f.0 == name).ok_or_else(|| unknown(name))?.1;
    Ok(match kind {
        FixtureKind::Graph => serde_json::to_value(graph(name)?.to_record())?,
        FixtureKind::Metric => serde_json::to_value(metric(name)?)?,
        FixtureKind::PermGroup => serde_json::to_value(perm_group(name)?.to_record())?,
        FixtureKind::MatrixGroup => {
            let g = matrix_group(name)?;
            // signed permutation entries are integers, kept exact in JSON
            let rec = MatrixGroupRecord::encode(&g, |&v| Scalar::Exact(rat_int(v.round() as i64)));
            serde_json::to_value(rec)?
        }
        FixtureKind::Space => match space(name)? {
            NormedSpace::Euclidean { dim } => json!({ "dim": dim, "kind": "euclidean" }),
            other => serde_json::to_value(other)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads_and_round_trips() {
        for f in catalog() {
            let v = fixture_json(f.name).unwrap();
            match f.kind {
                FixtureKind::Metric => {
                    let m: FiniteMetricSpace = serde_json::from_value(v).unwrap();
                    assert_eq!(m, metric(f.name).unwrap());
                }
                FixtureKind::MatrixGroup => {
                    let rec: MatrixGroupRecord = serde_json::from_value(v).unwrap();
                    let g = rec.decode(100, 1e-12).unwrap().to_f64();
                    assert!(g.same_elements(matrix_group(f.name).unwrap().elements(), 1e-12));
                }
                _ => assert!(!v.is_null()),
            }
        }
    }

    #[test]
    fn documented_orders() {
        assert_eq!(matrix_group("signed-swap-4").unwrap().order(), 4);
        assert_eq!(matrix_group("pm-s3").unwrap().order(), 12);
        assert_eq!(matrix_group("signed-perms-2").unwrap().order(), 8);
        assert_eq!(graph("path3").unwrap().n(), 3);
        let crate::graphs::GraphRecord { n, .. } = graph("rigid-tree7").unwrap().to_record();
        assert_eq!(n, 7);
        let rigid = metric("rigid4-metric").unwrap();
        assert_eq!(crate::free_space::metric_isometry_group(&rigid, 10).unwrap().len(), 1);
    }
}
