mod common;

use common::{disk_mesh, rel};
use insulopt_core::fem::Discretization;
use insulopt_core::flow::FlowParams;
use insulopt_core::geometry::{make_regular_polygon, triangulate};
use insulopt_core::insulation::InsulationParams;
use insulopt_core::scaling::{rescale_params, scaled_eigenvalue, ScaleMap};
use proptest::prelude::*;

#[test]
fn similar_meshes_give_identical_scaled_eigenvalues() {
    let fp = FlowParams::default();
    let mesh = disk_mesh(0.25);
    let base = scaled_eigenvalue(&Discretization::new(&mesh).unwrap(), 1.0, 0.05, &fp, None, 7).unwrap();
    for t in [0.25, 0.5, 2.0, 8.0] {
        let d = Discretization::new(&mesh.scaled(t)).unwrap();
        let e = scaled_eigenvalue(&d, 1.0, 0.05, &fp, None, 7).unwrap();
        assert_eq!(e.lambda_hat.to_bits(), base.lambda_hat.to_bits(), "t = {t}");
    }
    for t in [0.3, 1.7, 3.1] {
        let d = Discretization::new(&mesh.scaled(t)).unwrap();
        let e = scaled_eigenvalue(&d, 1.0, 0.05, &fp, None, 7).unwrap();
        assert!(rel(e.lambda_hat, base.lambda_hat) <= 1e-8, "t = {t}");
    }
}

#[test]
fn scaled_eigenvalue_of_a_hexagon_is_dilation_invariant() {
    let fp = FlowParams::default();
    let hex = make_regular_polygon(6, 1.0).unwrap();
    let a = scaled_eigenvalue(&Discretization::new(&triangulate(&hex, 0.2).unwrap()).unwrap(), 2.0, 0.1, &fp, None, 0)
        .unwrap();
    let big = hex.scaled(4.0);
    let b = scaled_eigenvalue(&Discretization::new(&triangulate(&big, 0.8).unwrap()).unwrap(), 2.0, 0.1, &fp, None, 0)
        .unwrap();
    assert_eq!(a.lambda_hat.to_bits(), b.lambda_hat.to_bits());
    assert_eq!(b.scale.t() * 4.0, a.scale.t());
}

#[test]
fn scale_map_normalizes_area() {
    let s = ScaleMap::to_unit_disk_area(4.0).unwrap();
    assert!(rel(s.t() * s.t() * 4.0, std::f64::consts::PI) <= 1e-15);
    assert!(ScaleMap::to_unit_disk_area(-1.0).is_err());
}

proptest! {
    #[test]
    fn rescale_group_law_is_exact(i in -8i32..8, j in -8i32..8, m in 0.1..10.0f64, q in 0.0..1.0f64, per in 1.0..20.0f64) {
        let p = InsulationParams::from_fraction(m, q, per).unwrap();
        let (s, t) = (2f64.powi(i), 2f64.powi(j));
        let two = rescale_params(s, &rescale_params(t, &p).unwrap()).unwrap();
        prop_assert_eq!(two, rescale_params(s * t, &p).unwrap());
        prop_assert_eq!(rescale_params(1.0 / t, &rescale_params(t, &p).unwrap()).unwrap(), p);
    }

    #[test]
    fn rescale_group_law_general_ratios(s in 0.1..10.0f64, t in 0.1..10.0f64, m in 0.1..10.0f64, q in 0.0..1.0f64) {
        let p = InsulationParams::from_fraction(m, q, 6.0).unwrap();
        let two = rescale_params(s, &rescale_params(t, &p).unwrap()).unwrap();
        let one = rescale_params(s * t, &p).unwrap();
        prop_assert!(rel(two.m_hat(), one.m_hat()) <= 1e-14);
        prop_assert!(rel(two.perimeter(), one.perimeter()) <= 1e-14);
        prop_assert!((two.fraction() - p.fraction()).abs() <= 1e-13);
    }
}
