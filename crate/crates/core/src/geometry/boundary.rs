use alloc::format;
use alloc::vec::Vec;

use super::{Mesh, Vec2};
use crate::{Error, Result};

/// The boundary cycle of a mesh with per-edge lengths, node normals and
/// lumped (trapezoidal) node measures.
///
/// Edge `i` joins boundary positions `i` and `i + 1` (mod `len`).
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGraph {
    nodes: Vec<usize>,
    edge_lengths: Vec<f64>,
    normals: Vec<Vec2>,
    weights: Vec<f64>,
}

impl BoundaryGraph {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let nodes = mesh.boundary().to_vec();
        let nb = nodes.len();
        if nb < 3 {
            return Err(Error::InvalidMesh(format!("boundary has only {nb} nodes")));
        }
        let mut seen = alloc::vec![false; mesh.num_nodes()];
        for &i in &nodes {
            if i >= seen.len() || core::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidMesh(format!("boundary node {i} repeated or out of range")));
            }
        }
        let pts = mesh.nodes();
        let mut edge_lengths = Vec::with_capacity(nb);
        let mut edge_normals = Vec::with_capacity(nb);
        for i in 0..nb {
            let e = pts[nodes[(i + 1) % nb]] - pts[nodes[i]];
            let l = e.norm();
            if !(l > 0.0) {
                return Err(Error::InvalidMesh(format!("zero-length boundary edge at {i}")));
            }
            edge_lengths.push(l);
            edge_normals.push(e.perp_cw() * (1.0 / l));
        }
        let normals = (0..nb)
            .map(|i| (edge_normals[(i + nb - 1) % nb] + edge_normals[i]).normalized())
            .collect();
        let weights = (0..nb)
            .map(|i| 0.5 * (edge_lengths[(i + nb - 1) % nb] + edge_lengths[i]))
            .collect();
        Ok(Self {
            nodes,
            edge_lengths,
            normals,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Mesh node index of each boundary position.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    /// Outward unit normals: bisectors of the adjacent edge normals.
    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    /// Lumped node measures, half the sum of the adjacent edge lengths.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths.iter().sum()
    }

    /// Restriction of a nodal field to the boundary, in cycle order.
    pub fn trace(&self, u: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&i| u[i]).collect()
    }

    /// Same graph with all lengths multiplied by `t > 0`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            edge_lengths: self.edge_lengths.iter().map(|l| l * t).collect(),
            normals: self.normals.clone(),
            weights: self.weights.iter().map(|w| w * t).collect(),
        }
    }
}

/// Boundary graph of a mesh.
pub fn boundary_trace(mesh: &Mesh) -> Result<BoundaryGraph> {
    BoundaryGraph::new(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{centroid, make_regular_polygon, triangulate, ConvexPolygon};
    use alloc::vec;

    #[test]
    fn square_corners_only() {
        let m = Mesh::from_parts(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let bg = boundary_trace(&m).unwrap();
        assert_eq!(bg.weights(), &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(bg.perimeter(), 4.0);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let expect = [(-s, -s), (s, -s), (s, s), (-s, s)];
        for (n, e) in bg.normals().iter().zip(expect) {
            assert!((n.x - e.0).abs() < 1e-15 && (n.y - e.1).abs() < 1e-15);
        }
    }

    #[test]
    fn polygon_normals_are_radial_and_outward() {
        let n = 48;
        let poly = make_regular_polygon(n, 1.0).unwrap();
        let m = triangulate(&poly, 0.3).unwrap();
        let bg = m.boundary_graph().unwrap();
        let c = centroid(poly.vertices());
        for (k, &i) in bg.nodes().iter().enumerate() {
            let p = m.nodes()[i];
            let nrm = bg.normals()[k];
            assert!((nrm.norm() - 1.0).abs() < 1e-14);
            assert!(nrm.dot(p - c) > 0.0);
            assert!(nrm.cross(p.normalized()).abs() < 4.0 / n as f64);
        }
        let wsum: f64 = bg.weights().iter().sum();
        assert!((wsum - poly.perimeter()).abs() < 1e-12);
        assert!((bg.perimeter() - poly.perimeter()).abs() < 1e-12);
    }

    #[test]
    fn hexagon_measures() {
        let poly = make_regular_polygon(6, 1.0).unwrap();
        let m = triangulate(&poly, 0.4).unwrap();
        let (a, p) = m.measures();
        assert!((a - 2.598076211353316).abs() < 1e-12);
        assert!((p - 6.0).abs() < 1e-12);
        let (a2, p2) = m.scaled(2.0).measures();
        assert!((a2 - 4.0 * a).abs() < 1e-12);
        assert!((p2 - 2.0 * p).abs() < 1e-12);
        let _ = ConvexPolygon::new(m.boundary_points());
    }
}
