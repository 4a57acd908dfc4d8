//! Test oracles independent of the crate: Bessel functions by power series
//! and their roots by bisection.
#![allow(dead_code)]

use insulopt_core::fem::Discretization;
use insulopt_core::geometry::{disk_polygon, triangulate, Mesh};

/// `J_n(x) = Σ_k (−1)^k (x/2)^{2k+n} / (k! (k+n)!)`, accurate for `|x| ≲ 10`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..80 {
        term *= -half * half / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa = f(a);
    assert!(fa * f(b) < 0.0, "no sign change on [{a}, {b}]");
    while b - a > tol {
        let m = 0.5 * (a + b);
        if f(m) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// First zero of `J₁′(x) = J₀(x) − J₁(x)/x`.
pub fn j1_prime_first_zero() -> f64 {
    bisect(|x| bessel_j(0, x) - bessel_j(1, x) / x, 1.5, 2.5, 1e-13)
}

/// `μ₂(B₁) = (j′₁,₁)²`.
pub fn neumann_mu2_disk() -> f64 {
    j1_prime_first_zero().powi(2)
}

/// First Robin eigenvalue of the unit disk: `√λ J₁(√λ) = α J₀(√λ)`.
pub fn robin_disk(alpha: f64) -> f64 {
    // the root lies below the first zero of J₀
    let x = bisect(|x| x * bessel_j(1, x) - alpha * bessel_j(0, x), 1e-9, 2.404825557695773, 1e-13);
    x * x
}

pub fn disk_mesh(h: f64) -> Mesh {
    triangulate(&disk_polygon(1.0, h).unwrap(), h).unwrap()
}

pub fn disk(h: f64) -> Discretization {
    Discretization::new(&disk_mesh(h)).unwrap()
}

/// Nested refinements of the coarse disk mesh with all boundary nodes
/// snapped to the unit circle.
pub fn nested_disks(h0: f64, levels: usize) -> Vec<Mesh> {
    let coarse = disk_mesh(h0);
    let mut nodes = coarse.nodes().to_vec();
    for &b in coarse.boundary() {
        nodes[b] = nodes[b] * (1.0 / nodes[b].norm());
    }
    let mut out = vec![coarse.with_nodes(nodes).unwrap()];
    for _ in 1..levels {
        let next = out
            .last()
            .unwrap()
            .refine_uniform_with(|p| p * (1.0 / p.norm()))
            .unwrap();
        out.push(next);
    }
    out
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
