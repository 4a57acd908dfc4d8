mod common;

use common::{disk, rel};
use insulopt_core::fem::{Discretization, EigOptions};
use insulopt_core::flow::{
    eigenvalue_no_lower_bound, film_model, initial_guess, insulation_eigenvalue, neumann_mu2, robin_eigen,
    robin_reference, run_film_flow, run_flow, EigenResult, FlowParams, StarProduct,
};
use insulopt_core::geometry::{make_regular_polygon, triangulate, ConvexPolygon, Vec2};
use insulopt_core::insulation::{objective_j, optimal_density, InsulationParams};

fn check_invariants(r: &EigenResult) {
    assert!(r.max_telescoping_defect <= 1e-10, "telescoping defect {}", r.max_telescoping_defect);
    assert!(r.max_norm_defect <= 1e-8, "norm identity defect {}", r.max_norm_defect);
    for w in r.log.windows(2) {
        assert!(w[1].j <= w[0].j * (1.0 + 1e-12), "energy rose at k = {}", w[1].k);
        assert!(w[1].l2_norm_sq >= w[0].l2_norm_sq);
    }
}

#[test]
fn constant_film_endpoint_is_the_robin_problem() {
    let d = disk(0.125);
    for m_hat in [1.0, 2.0, 3.0] {
        let r = insulation_eigenvalue(&d, m_hat, 1.0, &FlowParams::default(), 0).unwrap();
        check_invariants(&r);
        let robin = robin_reference(&d, m_hat).unwrap();
        assert!(rel(r.lambda, robin) <= 1e-8, "m̂ = {m_hat}: {} vs {robin}", r.lambda);
        assert!(r.density.ell().iter().all(|&l| l == 0.0));
    }
}

#[test]
fn eigenvalue_grows_with_the_lower_bound() {
    let d = disk(0.125);
    let fp = FlowParams::default();
    let mut last = f64::NEG_INFINITY;
    for i in 0..=5 {
        let q = i as f64 / 5.0;
        let r = insulation_eigenvalue(&d, 1.0, q, &fp, 0).unwrap();
        assert!(r.converged, "q = {q}");
        check_invariants(&r);
        assert!(r.lambda >= last - 1e-6, "q = {q}: {} < {last}", r.lambda);
        last = r.lambda;
    }
}

#[test]
fn invariants_hold_for_both_star_products_and_steps() {
    let d = disk(0.25);
    let init = initial_guess(&d, 1.0, 3).unwrap();
    for star in [StarProduct::H1, StarProduct::L2] {
        for tau in [0.5, 1.0, 10.0] {
            let fp = FlowParams {
                tau,
                star,
                max_iter: 300,
                ..FlowParams::default()
            };
            let p = InsulationParams::from_fraction(1.0, 0.5, d.perimeter()).unwrap();
            check_invariants(&run_flow(init.clone(), &d, &p, &fp).unwrap());
            check_invariants(&eigenvalue_no_lower_bound(init.clone(), &d, 1.0, &fp).unwrap());
        }
    }
}

#[test]
fn free_film_integrates_to_the_mass() {
    let d = disk(0.125);
    let init = initial_guess(&d, 1.0, 0).unwrap();
    let r = eigenvalue_no_lower_bound(init, &d, 1.0, &FlowParams::default()).unwrap();
    check_invariants(&r);
    let m = r.density.mass(d.boundary().weights());
    assert!(rel(m, 1.0) <= 1e-8);
    assert!(r.lambda < robin_reference(&d, 1.0).unwrap());
}

#[test]
fn large_mass_without_bound_approaches_robin() {
    let d = disk(0.125);
    let init = initial_guess(&d, 10.0, 0).unwrap();
    let r = eigenvalue_no_lower_bound(init, &d, 10.0, &FlowParams::default()).unwrap();
    let robin = robin_reference(&d, 10.0).unwrap();
    assert!(rel(r.lambda, robin) <= 1e-3, "{} vs {robin}", r.lambda);
}

#[test]
fn neumann_mu2_of_the_square_and_scaling() {
    let sq = ConvexPolygon::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(1.0, 0.0),
        Vec2::new(1.0, 1.0),
        Vec2::new(0.0, 1.0),
    ])
    .unwrap();
    let d = Discretization::new(&triangulate(&sq, 1.0 / 32.0).unwrap()).unwrap();
    let mu = neumann_mu2(&d).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!(rel(mu, pi2) <= 1e-2, "{mu} vs {pi2}");
    let mu3 = neumann_mu2(&d.scaled(3.0)).unwrap();
    assert!(rel(mu3, mu / 9.0) <= 1e-7);
}

#[test]
fn constant_trace_objective_closed_form() {
    let mesh = triangulate(&make_regular_polygon(24, 1.0).unwrap(), 0.2).unwrap();
    let d = Discretization::new(&mesh).unwrap();
    let p = d.perimeter();
    let m_hat = 1.5;
    let params = InsulationParams::from_fraction(m_hat, 0.3, p).unwrap();
    let u = vec![0.7; d.num_nodes()];
    let dens = optimal_density(&d.boundary().trace(&u), d.boundary().weights(), &params).unwrap();
    let j = objective_j(d.stiffness(), &u, d.boundary(), &dens).unwrap();
    assert!(rel(j, p * p * 0.49 / m_hat) <= 1e-12);
}

#[test]
fn flow_rejects_unnormalized_start() {
    let d = disk(0.25);
    let model = film_model(1.0, 0.5, &d).unwrap();
    let init = vec![2.0; d.num_nodes()];
    assert!(run_film_flow(init, &d, &model, &FlowParams::default()).is_err());
}

#[test]
fn robin_eigenvector_is_positive() {
    let d = disk(0.25);
    let e = robin_eigen(&d, 2.0, &EigOptions::default()).unwrap();
    assert!(e.vector.iter().all(|&x| x > 0.0));
}
