mod common;

use common::*;
use insulopt_core::fem::{
    assemble_mass, assemble_stiffness, assemble_weighted_boundary_mass, smallest_generalized_eig, BoundaryRule,
    Discretization, EigOptions,
};
use insulopt_core::flow::{neumann_mu2, robin_eigen};
use insulopt_core::geometry::{make_regular_polygon, triangulate, ConvexPolygon, Vec2};
use proptest::prelude::*;

fn unit_square() -> ConvexPolygon {
    ConvexPolygon::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ])
    .unwrap()
}

#[test]
fn stiffness_kernel_and_rows() {
    let mesh = triangulate(&make_regular_polygon(7, 1.3).unwrap(), 0.2).unwrap();
    let k = assemble_stiffness(&mesh);
    assert!(k.is_symmetric());
    let n = mesh.num_nodes();
    let ku = k.mul_vec(&vec![2.5; n]);
    assert!(ku.iter().all(|v| v.abs() < 1e-12));
    for i in 0..n {
        let row = &k.values()[k.row_ptr()[i]..k.row_ptr()[i + 1]];
        let max = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(row.iter().sum::<f64>().abs() <= 1e-12 * max);
    }
}

#[test]
fn linear_field_energy_on_square() {
    let mesh = triangulate(&unit_square(), 0.2).unwrap();
    let u: Vec<f64> = mesh.nodes().iter().map(|p| p.x).collect();
    assert!((assemble_stiffness(&mesh).quad_form(&u) - 1.0).abs() < 1e-12);
    let m = assemble_mass(&mesh);
    assert!(m.is_symmetric());
    assert!((m.quad_form(&vec![1.0; mesh.num_nodes()]) - 1.0).abs() < 1e-12);
}

#[test]
fn boundary_mass_examples() {
    let mesh = triangulate(&unit_square(), 0.25).unwrap();
    let bg = mesh.boundary_graph().unwrap();
    let n = mesh.num_nodes();
    let ones = vec![1.0; n];
    for rule in [BoundaryRule::Lumped, BoundaryRule::Gauss3] {
        let b1 = assemble_weighted_boundary_mass(&bg, &vec![1.0; bg.len()], n, rule).unwrap();
        assert!((b1.quad_form(&ones) - 4.0).abs() < 1e-12);
        let b2 = assemble_weighted_boundary_mass(&bg, &vec![2.0; bg.len()], n, rule).unwrap();
        assert!((b2.quad_form(&ones) - 8.0).abs() < 1e-12);
        assert!(assemble_weighted_boundary_mass(&bg, &vec![0.0; bg.len()], n, rule).is_err());
    }
}

#[test]
fn neumann_on_disk_matches_bessel_root() {
    let d = disk(0.0625);
    let mu2 = neumann_mu2(&d).unwrap();
    assert!(rel(mu2, neumann_mu2_disk()) < 1e-2, "{mu2}");
}

#[test]
fn robin_on_disk_matches_transcendental_root() {
    let d = disk(0.0625);
    let e = robin_eigen(&d, std::f64::consts::PI, &EigOptions::default()).unwrap();
    assert!(rel(e.value, robin_disk(std::f64::consts::PI)) < 1e-2, "{}", e.value);
    assert!(e.residual <= 1e-6);
    assert!((d.l2_norm_sq(&e.vector) - 1.0).abs() < 1e-10);
}

#[test]
fn singular_pencil_without_deflation_gives_constant() {
    let d = disk(0.25);
    let e = smallest_generalized_eig(d.stiffness(), d.mass(), &[], &EigOptions::default()).unwrap();
    assert!(e.value.abs() < 1e-8);
    let mean = e.vector.iter().sum::<f64>() / e.vector.len() as f64;
    assert!(e.vector.iter().all(|v| (v - mean).abs() < 1e-6 * mean.abs()));
}

#[test]
fn nested_refinement_is_monotone() {
    // straight-edged refinement keeps the domain, so the spaces are nested
    let coarse = triangulate(&make_regular_polygon(12, 1.0).unwrap(), 0.3).unwrap();
    let fine = coarse.refine_uniform().unwrap();
    let finer = fine.refine_uniform().unwrap();
    let mut prev_n = f64::INFINITY;
    let mut prev_r = f64::INFINITY;
    for m in [coarse, fine, finer] {
        let d = Discretization::new(&m).unwrap();
        let n = neumann_mu2(&d).unwrap();
        let r = robin_eigen(&d, 1.0, &EigOptions::default()).unwrap().value;
        assert!(n <= prev_n * (1.0 + 1e-9) && r <= prev_r * (1.0 + 1e-9));
        prev_n = n;
        prev_r = r;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn assembled_matrices_are_exactly_symmetric(n in 3usize..12, r in 0.5f64..3.0, k in 3usize..8) {
        let p = make_regular_polygon(n, r).unwrap();
        let mesh = triangulate(&p, p.diameter() / k as f64).unwrap();
        prop_assert!(assemble_stiffness(&mesh).is_symmetric());
        let m = assemble_mass(&mesh);
        prop_assert!(m.is_symmetric());
        prop_assert!((m.quad_form(&vec![1.0; mesh.num_nodes()]) - mesh.area()).abs() <= 1e-12 * mesh.area());
    }
}
