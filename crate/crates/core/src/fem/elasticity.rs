use alloc::vec::Vec;

use super::{element_mass, CsrMatrix};
use crate::geometry::{orient, Mesh, Vec2};
use crate::{Error, Result};

/// Plane-stress Lamé constants `(μ, λ*)` from Young's modulus and the
/// Poisson ratio: `μ = E/(2(1+ν))`, `λ* = Eν/(1−ν²)`.
pub fn plane_stress_lame(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) || !(poisson > 0.0 && poisson < 0.5) {
        return Err(Error::InvalidArgument(alloc::format!(
            "need E > 0 and 0 < ν < 1/2, got E = {young}, ν = {poisson}"
        )));
    }
    Ok((young / (2.0 * (1.0 + poisson)), young * poisson / (1.0 - poisson * poisson)))
}

/// Vector P1 matrix of `∫ 2μ ε(w):ε(v) + λ div w div v + ρ ∫ w·v`. Degree of
/// freedom `2i + a` is component `a` at node `i`.
pub fn assemble_elasticity(mesh: &Mesh, mu: f64, lambda: f64, rho: f64) -> CsrMatrix {
    let pts = mesh.nodes();
    let mut trips = Vec::with_capacity(36 * mesh.triangles().len());
    for t in mesh.triangles() {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        let area2 = orient(a, b, c);
        let area = 0.5 * area2;
        // ∇φ_i = perp(opposite edge) / 2|T|
        let e = [c - b, a - c, b - a];
        let grad: [Vec2; 3] = core::array::from_fn(|i| Vec2::new(-e[i].y / area2, e[i].x / area2));
        let m = element_mass(a, b, c);
        let mut k = [[0.0; 6]; 6];
        for i in 0..3 {
            let gi = [grad[i].x, grad[i].y];
            for j in 0..3 {
                let gj = [grad[j].x, grad[j].y];
                let gg = grad[i].dot(grad[j]);
                for p in 0..2 {
                    for q in 0..2 {
                        let delta = if p == q { 1.0 } else { 0.0 };
                        let mut v = area * (mu * (delta * gg + gj[p] * gi[q]) + lambda * gi[p] * gj[q]);
                        v += delta * rho * m[i][j];
                        k[2 * i + p][2 * j + q] = v;
                    }
                }
            }
        }
        let dof = |l: usize| 2 * t[l / 2] + l % 2;
        for r in 0..6 {
            trips.push((dof(r), dof(r), k[r][r]));
            for s in r + 1..6 {
                let v = 0.5 * (k[r][s] + k[s][r]);
                trips.push((dof(r), dof(s), v));
                trips.push((dof(s), dof(r), v));
            }
        }
    }
    CsrMatrix::from_triplets(2 * mesh.num_nodes(), trips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_regular_polygon, triangulate};
    use alloc::vec;

    #[test]
    fn rigid_motions_cost_only_damping() {
        let mesh = triangulate(&make_regular_polygon(8, 1.0).unwrap(), 0.5).unwrap();
        let (mu, la) = plane_stress_lame(0.5, 0.2).unwrap();
        let k = assemble_elasticity(&mesh, mu, la, 0.0);
        assert!(k.is_symmetric());
        let n = mesh.num_nodes();
        // translation and infinitesimal rotation are in the kernel without ρ
        let mut tx = vec![0.0; 2 * n];
        let mut rot = vec![0.0; 2 * n];
        for (i, p) in mesh.nodes().iter().enumerate() {
            tx[2 * i] = 1.0;
            rot[2 * i] = -p.y;
            rot[2 * i + 1] = p.x;
        }
        assert!(k.quad_form(&tx).abs() < 1e-12);
        assert!(k.quad_form(&rot).abs() < 1e-12);
        let kr = assemble_elasticity(&mesh, mu, la, 2.0);
        assert!((kr.quad_form(&tx) - 2.0 * mesh.area()).abs() < 1e-12);
    }

    #[test]
    fn lame_constants() {
        let (mu, la) = plane_stress_lame(0.5, 0.2).unwrap();
        assert!((mu - 0.5 / 2.4).abs() < 1e-15);
        assert!((la - 0.1 / 0.96).abs() < 1e-15);
        assert!(plane_stress_lame(0.5, 0.5).is_err());
    }
}
