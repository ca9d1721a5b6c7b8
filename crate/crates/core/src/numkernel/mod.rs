//! Dense numeric primitives: matrices, symmetric eigendecomposition,
//! linear solves and a small simplex LP solver.

mod eig;
mod lp;
mod lu;
mod matrix;

pub use eig::{sym_eig, EigenDecomposition};
pub use lp::{enumerate_vertices, lp_solve, LpResult, LpStatus, Sense};
pub use lu::{solve_linear, solve_linear_many, solve_symmetric_lstsq, SINGULAR_PIVOT};
pub use matrix::Matrix;
