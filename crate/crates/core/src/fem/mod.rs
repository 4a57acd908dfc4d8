//! P1 finite elements: assembly, sparse storage and the SPD/eigen solvers.

mod assembly;
mod discretization;
mod elasticity;
mod eigen;
mod solve;
mod sparse;

pub use assembly::{
    assemble_film_boundary_mass, assemble_mass, assemble_stiffness, assemble_weighted_boundary_mass,
    element_mass, element_stiffness, lumped_boundary_diagonal, BoundaryRule,
};
pub use discretization::Discretization;
pub use elasticity::{assemble_elasticity, plane_stress_lame};
pub use eigen::{smallest_generalized_eig, EigOptions, EigPair};
pub(crate) use solve::pcg;
pub use solve::{solve_spd, solve_spd_with, CgStats, DEFAULT_CG_TOL};
pub use sparse::{CsrMatrix, SparseMatrix};

/// One value per mesh node.
pub type NodalField = alloc::vec::Vec<f64>;
