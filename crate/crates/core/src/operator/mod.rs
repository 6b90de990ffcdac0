//! Discretizations of L_K: the odd lattice operator, the one-dimensional
//! operator, quadrature-based evaluation, the radial torsion problem and
//! dense Dirichlet systems.

pub mod lattice;
pub mod line;
pub mod quadrature;
pub mod system;
pub mod torsion;

pub use torsion::{apply_radial, fractional_torsion, solve_torsion, TorsionOptions, TorsionSolution};
pub use quadrature::{apply_odd_fn, ApplyOptions};
pub use line::{apply_1d, LineOperator, Profile1D, TailRule};
pub use lattice::{ExteriorRule, LatticeOperator, LatticeWeights, OddGridFunction, TriangularGrid};
pub use system::{DirichletSystem, SymFactor};
