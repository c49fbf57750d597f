//! Invariants as properties over random inputs.

use isodisplay::diagnostics::{convex_transitivity_test, separation_witness, GroupSource};
use isodisplay::fixtures;
use isodisplay::free_space::{self, FiniteMetricSpace};
use isodisplay::graph_norm::GammaSpace;
use isodisplay::graphs::Graph;
use isodisplay::scalar::{rat, rat_int, Rational, Scalar};
use isodisplay::space::{self, NormOracle, NormedSpace};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=6).prop_map(|(p, q)| rat(p, q))
}

fn rational_vec(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(rational(), n)
}

fn float_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

fn linf_norm(a: &[Rational]) -> Rational {
    a.iter().map(Signed::abs).fold(Rational::zero(), |m, v| if v > m { v } else { m })
}

fn catalog_space(idx: usize) -> GammaSpace {
    let graphs = fixtures::catalog_graphs();
    GammaSpace::new(graphs[idx % graphs.len()].1.clone()).unwrap()
}

fn exact(a: &[Rational]) -> Vec<Scalar> {
    a.iter().cloned().map(Scalar::Exact).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_norm_sandwich_and_triangle(idx in 0usize..6, a in rational_vec(7), b in rational_vec(7)) {
        let space = catalog_space(idx);
        let n = space.dim();
        let (a, b) = (&a[..n], &b[..n]);
        let na = space.norm(a).unwrap();
        let inf = linf_norm(a);
        prop_assert!(inf <= na);
        prop_assert!(na <= inf * rat(4, 3));
        let sum: Vec<Rational> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        prop_assert!(space.norm(&sum).unwrap() <= na.clone() + space.norm(b).unwrap());
        let scaled: Vec<Rational> = a.iter().map(|x| x * rat(-3, 2)).collect();
        prop_assert_eq!(space.norm(&scaled).unwrap(), na.clone() * rat(3, 2));
        // the norming functional has dual norm one and attains the norm
        let phi = space.support(a).unwrap();
        prop_assert_eq!(phi.eval(a), na);
    }

    #[test]
    fn polyhedral_duality_is_exact(a in rational_vec(3)) {
        prop_assume!(a.iter().any(|v| !v.is_zero()));
        let s = space::linf(3);
        let x = exact(&a);
        let nx = space::norm_eval(&s, &x).unwrap();
        let phi = space::support_functional(&s, &x).unwrap();
        prop_assert_eq!(space::dual_norm_eval(&s, &phi).unwrap(), Scalar::Exact(rat_int(1)));
        let pairing: Rational = phi.iter().zip(&a).map(|(p, v)| p.as_rational().unwrap() * v).sum();
        prop_assert_eq!(Scalar::Exact(pairing), nx);
    }

    #[test]
    fn euclidean_norm_axioms(x in float_vec(3), y in float_vec(3), t in -4.0f64..4.0) {
        let s = NormedSpace::Euclidean { dim: 3 };
        let nx = s.norm(&x).unwrap();
        let ny = s.norm(&y).unwrap();
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(s.norm(&sum).unwrap() <= nx + ny + 1e-12);
        let sx: Vec<f64> = x.iter().map(|v| v * t).collect();
        prop_assert!((s.norm(&sx).unwrap() - t.abs() * nx).abs() <= 1e-12 * (1.0 + nx));
    }

    #[test]
    fn arens_eells_primal_equals_dual(seed in any::<u64>(), n in 2usize..=9, discrete in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d1 = free_space::random_metric(&mut rng, n, discrete);
        let (d3, _) = d1.transform_bounded().transform_concave().unwrap();
        let m = free_space::random_molecule(&mut rng, n, n);
        let p = free_space::ae_norm_primal(&d3, &m).unwrap().value;
        let d = free_space::ae_norm_dual(&d3, &m).unwrap().value;
        prop_assert!((p - d).abs() <= 1e-9, "primal {} dual {}", p, d);
        if m.iter().filter(|v| **v != 0.0).count() <= 8 {
            let o = free_space::transport_by_bases(&d3, &m).unwrap();
            prop_assert!((p - o).abs() <= 1e-9);
        }
    }

    #[test]
    fn atoms_have_norm_equal_to_distance(seed in any::<u64>(), n in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = free_space::random_metric(&mut rng, n, false);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    let v = free_space::ae_norm_primal(&space, &free_space::atom(n, x, y)).unwrap().value;
                    prop_assert!((v - space.dist(x, y)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn transforms_preserve_isometries(seed in any::<u64>(), n in 3usize..=6, discrete in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d1 = free_space::random_metric(&mut rng, n, discrete);
        let d2 = d1.transform_bounded();
        let (d3, rep) = d2.transform_concave().unwrap();
        prop_assert!(rep.concave);
        prop_assert!(d3.diameter() < 1.0);
        let g1 = free_space::metric_isometry_group(&d1, usize::MAX).unwrap();
        prop_assert_eq!(&g1, &free_space::metric_isometry_group(&d2, usize::MAX).unwrap());
        prop_assert_eq!(&g1, &free_space::metric_isometry_group(&d3, usize::MAX).unwrap());
    }

    #[test]
    fn convex_transitivity_sup_grows_with_the_group(angle in 0.0f64..std::f64::consts::TAU, beta in 0.0f64..std::f64::consts::TAU) {
        let s = NormedSpace::Euclidean { dim: 2 };
        let x = [angle.cos(), angle.sin()];
        let xs = [beta.cos(), beta.sin()];
        let mut last = f64::NEG_INFINITY;
        for name in ["pm-id-2", "signed-swap-4", "signed-perms-2"] {
            let g = GroupSource::Finite(fixtures::matrix_group(name).unwrap());
            let v = convex_transitivity_test(&s, &g, &x, &xs, 1e-9).unwrap();
            prop_assert!(v.sup >= last - 1e-15);
            last = v.sup;
        }
    }

    #[test]
    fn separation_witness_bound_holds(angle in 0.05f64..1.5) {
        let s = NormedSpace::Euclidean { dim: 2 };
        let g = fixtures::matrix_group("signed-swap-4").unwrap();
        let y = [angle.cos(), angle.sin()];
        let w = separation_witness(&s, &g, &y, 8, 0).unwrap();
        prop_assert!(w.beta > 0.0);
        for t in g.elements() {
            let tx = t.apply(&w.x).unwrap();
            let v: f64 = w.xstar.iter().zip(&tx).map(|(a, b)| a * b).sum();
            prop_assert!(v <= 1.0 - w.beta + 1e-12);
        }
    }
}

#[test]
fn metric_round_trip_through_json() {
    let m = fixtures::metric("rigid4-metric").unwrap();
    let text = serde_json::to_string(&m).unwrap();
    let back: FiniteMetricSpace = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
}

#[test]
fn graph_records_round_trip() {
    for (_, g) in fixtures::catalog_graphs() {
        let rec = g.to_record();
        let back = Graph::from_record(&serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
