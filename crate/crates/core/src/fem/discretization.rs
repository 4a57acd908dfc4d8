use alloc::vec::Vec;

use super::{assemble_mass, assemble_stiffness, CsrMatrix};
use crate::geometry::{BoundaryGraph, Mesh};
use crate::{Error, Result};

/// Stiffness, mass and boundary measures of one mesh. `stiffness` and
/// `mass` share a sparsity pattern.
#[derive(Clone, Debug)]
pub struct Discretization {
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    boundary: BoundaryGraph,
    area: f64,
}

impl Discretization {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        Ok(Self {
            stiffness: assemble_stiffness(mesh),
            mass: assemble_mass(mesh),
            boundary: mesh.boundary_graph()?,
            area: mesh.area(),
        })
    }

    pub fn from_parts(stiffness: CsrMatrix, mass: CsrMatrix, boundary: BoundaryGraph, area: f64) -> Result<Self> {
        if !stiffness.same_pattern(&mass) {
            return Err(Error::InvalidArgument("stiffness and mass patterns differ".into()));
        }
        if boundary.nodes().iter().any(|&i| i >= stiffness.dim()) {
            return Err(Error::InvalidArgument("boundary node out of range".into()));
        }
        Ok(Self {
            stiffness,
            mass,
            boundary,
            area,
        })
    }

    /// The same algebra for the domain `tΩ`: stiffness is unchanged in 2D,
    /// mass scales by `t²` and boundary measures by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            stiffness: self.stiffness.clone(),
            mass: self.mass.scaled(t * t),
            boundary: self.boundary.scaled(t),
            area: self.area * t * t,
        }
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn boundary(&self) -> &BoundaryGraph {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary.perimeter()
    }

    /// `∫ u²`
    pub fn l2_norm_sq(&self, u: &[f64]) -> f64 {
        self.mass.quad_form(u)
    }

    /// Nodal diagonal `d_i = coef_k w_k` at boundary node `i = nodes[k]`.
    pub fn boundary_diagonal(&self, coef: &[f64]) -> Vec<f64> {
        let mut d = alloc::vec![0.0; self.num_nodes()];
        for ((&i, &w), &c) in self.boundary.nodes().iter().zip(self.boundary.weights()).zip(coef) {
            d[i] = c * w;
        }
        d
    }

    /// `K + diag(coef ⊙ w)` on the boundary nodes.
    pub fn robin_operator(&self, coef: &[f64]) -> CsrMatrix {
        let mut a = self.stiffness.clone();
        a.add_diagonal(&self.boundary_diagonal(coef))
            .expect("P1 pattern has a diagonal");
        a
    }
}
