//! End-to-end runs across modules on small, hand-checkable inputs.

use isodisplay::diagnostics::{necessary_conditions, GroupSource};
use isodisplay::fixtures;
use isodisplay::free_space::{self, FiniteMetricSpace, FreeIsometryConfig};
use isodisplay::graph_norm::display_on_c0;
use isodisplay::graphs::{build_display_graph, verify_gadget, GadgetVerdict};
use isodisplay::group::{signed_perm_matrix, MatrixGroup, Perm, PermGroup};
use isodisplay::linalg::Matrix;
use isodisplay::pimple::{default_sequence, display_and_verify, display_renorm, norm_deviation, DisplayConfig};
use isodisplay::space::NormedSpace;

fn path_metric_112() -> FiniteMetricSpace {
    FiniteMetricSpace::new(vec!["a".into(), "b".into(), "c".into()], vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap()
}

#[test]
fn euclidean_three_space_keeps_only_plus_minus_identity() {
    let g = fixtures::matrix_group("pm-id-3").unwrap();
    let r = display_and_verify(&g, &default_sequence(3), &DisplayConfig::default()).unwrap();
    let iso = r.isometry.as_ref().unwrap();
    assert!(iso.equals_input);
    assert_eq!(iso.order, 2);
    // a reflection is not an isometry of the renormed space
    let flip = signed_perm_matrix::<f64>(&Perm::identity(3), &[1, 1, -1]);
    assert!(norm_deviation(&r, &flip).unwrap() > 10.0 * r.config.tolerance);
}

#[test]
fn group_without_minus_identity_is_rejected() {
    let swap = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let g = MatrixGroup::closure(2, &[swap], 10, 1e-12).unwrap();
    assert!(display_renorm(&g, &default_sequence(2), &DisplayConfig::default()).is_err());
}

#[test]
fn display_output_meets_the_necessary_conditions() {
    let g = fixtures::matrix_group("pm-id-2").unwrap();
    let r = display_renorm(&g, &default_sequence(2), &DisplayConfig { samples: 500, ..DisplayConfig::default() }).unwrap();
    let space = NormedSpace::Pimple(r.space.clone());
    let rep = necessary_conditions(&space, &GroupSource::Finite(g), 40, 1, 1e-9).unwrap();
    assert!(rep.contains_minus_identity);
    assert_eq!(rep.closed, Some(true));
    assert!(rep.witness_found());
}

#[test]
fn graph_display_of_s2() {
    let h = fixtures::perm_group("s2-2").unwrap();
    let (_, _, group, rep) = display_on_c0(&h, &[1, 2]).unwrap();
    assert_eq!(rep.gadget.verdict, GadgetVerdict::Equal);
    assert!(rep.order_law);
    assert!(rep.isomorphic_modulo_twins);
    assert_eq!(group.report.essential_order, 4);
}

#[test]
fn cyclic_four_verdict_is_reported() {
    let c4 = PermGroup::generate(4, &[Perm::from_images(vec![1, 2, 3, 0]).unwrap()], 10).unwrap();
    let (g, layout) = build_display_graph(&c4, &[1, 2]).unwrap();
    let rep = verify_gadget(&g, &layout, &c4).unwrap();
    // either outcome is legitimate; a gap must never be reported as equality
    if rep.restricted_order != c4.order() {
        assert_ne!(rep.verdict, GadgetVerdict::Equal);
    }
}

#[test]
fn transportation_over_the_three_point_path() {
    let d = path_metric_112();
    let value = free_space::ae_norm_primal(&d, &[1.0, 1.0, -2.0]).unwrap().value;
    assert!((value - 3.0).abs() < 1e-12);
    let dual = free_space::ae_norm_dual(&d, &[1.0, 1.0, -2.0]).unwrap();
    assert!((dual.value - 3.0).abs() < 1e-9);
    assert!(dual.max_lipschitz_excess <= 1e-9);
}

#[test]
fn colinear_atom_is_not_extreme_until_transformed() {
    let d = path_metric_112();
    let rep = free_space::free_extreme_atoms(&d).unwrap();
    let ac = rep.atoms.iter().find(|a| a.x == 0 && a.y == 2).unwrap();
    assert!(!ac.extreme);
    let (d3, conc) = d.transform_bounded().transform_concave().unwrap();
    assert!(conc.concave);
    assert!(free_space::free_extreme_atoms(&d3).unwrap().all_extreme);
}

#[test]
fn concave_transform_of_the_path() {
    let (d3, conc) = path_metric_112().transform_bounded().transform_concave().unwrap();
    assert!((d3.dist(0, 1) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    assert!((d3.dist(0, 2) - 0.816_496_581).abs() < 1e-9);
    assert!((conc.min_margin.unwrap() - 0.597_716_981).abs() < 1e-9);
}

#[test]
fn rigid_four_point_space_has_two_isometries() {
    let (d3, _) = fixtures::metric("rigid4-metric").unwrap().transform_bounded().transform_concave().unwrap();
    let rep = free_space::ae_isometry_group(&d3, &FreeIsometryConfig::default()).unwrap();
    assert_eq!(rep.order, 2);
    assert!(rep.matches_structure);
}
