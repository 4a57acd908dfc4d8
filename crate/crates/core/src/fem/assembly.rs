use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::geometry::{orient, BoundaryGraph, Mesh, Vec2};
use crate::{Error, Result};

/// P1 stiffness matrix of one triangle: `K_ij = (e_i . e_j) / (4|T|)` with
/// `e_i` the edge opposite vertex `i`.
pub fn element_stiffness(a: Vec2, b: Vec2, c: Vec2) -> [[f64; 3]; 3] {
    let e = [c - b, a - c, b - a];
    let area4 = 2.0 * orient(a, b, c);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = e[i].dot(e[j]) / area4;
        }
    }
    k
}

/// P1 mass matrix of one triangle: `|T|/12 [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn element_mass(a: Vec2, b: Vec2, c: Vec2) -> [[f64; 3]; 3] {
    let s = 0.5 * orient(a, b, c) / 12.0;
    let mut m = [[s; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * s;
    }
    m
}

/// Stiffness matrix. Off-diagonal entries are accumulated symmetrically and
/// the diagonal is set to minus the off-diagonal row sum, so constants are
/// in the kernel up to rounding of a single sum.
pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    let pts = mesh.nodes();
    let mut trips = Vec::with_capacity(9 * mesh.triangles().len());
    for t in mesh.triangles() {
        let k = element_stiffness(pts[t[0]], pts[t[1]], pts[t[2]]);
        for i in 0..3 {
            trips.push((t[i], t[i], 0.0));
            for j in i + 1..3 {
                trips.push((t[i], t[j], k[i][j]));
                trips.push((t[j], t[i], k[i][j]));
            }
        }
    }
    let mut a = CsrMatrix::from_triplets(mesh.num_nodes(), trips);
    let n = a.dim();
    let (rp, col) = (a.row_ptr().to_vec(), a.col_indices().to_vec());
    let mut diag = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for k in rp[i]..rp[i + 1] {
            if col[k] != i {
                s += a.values()[k];
            }
        }
        diag[i] = -s;
    }
    a.add_diagonal(&diag).expect("P1 pattern has a diagonal");
    a
}

/// Consistent mass matrix; same pattern as [`assemble_stiffness`].
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let pts = mesh.nodes();
    let mut trips = Vec::with_capacity(9 * mesh.triangles().len());
    for t in mesh.triangles() {
        let m = element_mass(pts[t[0]], pts[t[1]], pts[t[2]]);
        for i in 0..3 {
            trips.push((t[i], t[i], m[i][i]));
            for j in i + 1..3 {
                trips.push((t[i], t[j], m[i][j]));
                trips.push((t[j], t[i], m[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), trips)
}

/// Quadrature for boundary mass matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    /// Trapezoidal rule per edge: a diagonal matrix with entries
    /// `w_i * (L_{i-1} + L_i) / 2`.
    #[default]
    Lumped,
    /// Consistent matrix with 3-point Gauss quadrature per edge.
    Gauss3,
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

fn check_weights(w: &[f64], bg: &BoundaryGraph) -> Result<()> {
    if w.len() != bg.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "expected {} boundary weights, got {}",
            bg.len(),
            w.len()
        )));
    }
    match w.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        Some(i) => Err(Error::InvalidWeight { node: i, value: w[i] }),
        None => Ok(()),
    }
}

/// Diagonal of the lumped boundary mass with weights `w` (boundary order),
/// scattered to mesh node indices.
pub fn lumped_boundary_diagonal(bg: &BoundaryGraph, w: &[f64], n: usize) -> Result<Vec<f64>> {
    check_weights(w, bg)?;
    let mut d = vec![0.0; n];
    for (k, &i) in bg.nodes().iter().enumerate() {
        d[i] = w[k] * bg.weights()[k];
    }
    Ok(d)
}

/// `∫_∂Ω w φ_i φ_j ds` with `w` piecewise linear from its boundary nodal
/// values. `n` is the mesh node count.
pub fn assemble_weighted_boundary_mass(bg: &BoundaryGraph, w: &[f64], n: usize, rule: BoundaryRule) -> Result<CsrMatrix> {
    check_weights(w, bg)?;
    boundary_matrix(bg, n, rule, w, |s, wa, wb| (1.0 - s) * wa + s * wb)
}

/// `∫_∂Ω φ_i φ_j / f ds` for a positive piecewise-linear film thickness `f`
/// given at boundary nodes. With [`BoundaryRule::Gauss3`] the reciprocal is
/// evaluated at the quadrature points; the lumped rule uses nodal `1/f`.
pub fn assemble_film_boundary_mass(bg: &BoundaryGraph, film: &[f64], n: usize, rule: BoundaryRule) -> Result<CsrMatrix> {
    check_weights(film, bg)?;
    match rule {
        BoundaryRule::Lumped => {
            let w: Vec<f64> = film.iter().map(|f| 1.0 / f).collect();
            boundary_matrix(bg, n, rule, &w, |_, _, _| 0.0)
        }
        BoundaryRule::Gauss3 => boundary_matrix(bg, n, rule, film, |s, fa, fb| 1.0 / ((1.0 - s) * fa + s * fb)),
    }
}

fn boundary_matrix(
    bg: &BoundaryGraph,
    n: usize,
    rule: BoundaryRule,
    w: &[f64],
    weight_at: impl Fn(f64, f64, f64) -> f64,
) -> Result<CsrMatrix> {
    let nb = bg.len();
    let nodes = bg.nodes();
    let mut trips = Vec::with_capacity(4 * nb);
    match rule {
        BoundaryRule::Lumped => {
            for k in 0..nb {
                trips.push((nodes[k], nodes[k], w[k] * bg.weights()[k]));
            }
        }
        BoundaryRule::Gauss3 => {
            for k in 0..nb {
                let k1 = (k + 1) % nb;
                let (ia, ib) = (nodes[k], nodes[k1]);
                let l = bg.edge_lengths()[k];
                let (mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0);
                for &(s, g) in &GAUSS3 {
                    let ws = weight_at(s, w[k], w[k1]) * g * l;
                    aa += ws * (1.0 - s) * (1.0 - s);
                    ab += ws * (1.0 - s) * s;
                    bb += ws * s * s;
                }
                trips.push((ia, ia, aa));
                trips.push((ia, ib, ab));
                trips.push((ib, ia, ab));
                trips.push((ib, ib, bb));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, trips))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, ConvexPolygon};

    #[test]
    fn reference_element() {
        let (a, b, c) = (Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        let k = element_stiffness(a, b, c);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        let m = element_mass(a, b, c);
        assert!((m[0][0] - 1.0 / 12.0).abs() < 1e-16);
        assert!((m[0][1] - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn gauss_rule_is_exact_for_linear_weight() {
        // one long edge with w from 1 to 3: ∫ w ds = L (w0 + w1) / 2
        let sq = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 2.0),
            Vec2::new(0.0, 2.0),
        ])
        .unwrap();
        let m = triangulate(&sq, 3.0).unwrap();
        let bg = m.boundary_graph().unwrap();
        assert_eq!(bg.len(), 4);
        let w = [1.0, 3.0, 3.0, 1.0];
        let b = assemble_weighted_boundary_mass(&bg, &w, m.num_nodes(), BoundaryRule::Gauss3).unwrap();
        let (i, j) = (bg.nodes()[0], bg.nodes()[1]);
        let ones = vec![1.0; m.num_nodes()];
        let total = b.quad_form(&ones);
        assert!((total - 2.0 * (2.0 + 3.0 + 2.0 + 1.0)).abs() < 1e-13);
        // entry (i, j) = L (w_i + w_j) / 12 for linear w
        assert!((b.get(i, j) - 2.0 * (1.0 + 3.0) / 12.0).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_weights_rejected() {
        let sq = ConvexPolygon::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        let m = triangulate(&sq, 1.5).unwrap();
        let bg = m.boundary_graph().unwrap();
        let w = [1.0, 0.0, 1.0, 1.0];
        assert_eq!(
            assemble_weighted_boundary_mass(&bg, &w, m.num_nodes(), BoundaryRule::Lumped),
            Err(Error::InvalidWeight { node: 1, value: 0.0 })
        );
    }
}
