//! Semi-Lagrangian duality for quadratic programs over the nonnegative orthant.

pub mod certificates;
pub mod cli;
pub mod copositivity;
pub mod corpus;
pub mod error;
pub mod io;
pub mod numkernel;
pub mod oracle;
pub mod orthant_qp;
pub mod qp_model;
pub mod reformulate;
pub mod scalar;
pub mod semilag_dual;

pub use error::{Error, Result};
pub use scalar::{ExtValue, Scalar};

pub type Matrix64 = numkernel::Matrix<f64>;
pub type Quadratic64 = qp_model::Quadratic<f64>;
pub type QpInstance64 = qp_model::QpInstance<f64>;
pub type MixedIntegerQp64 = qp_model::MixedIntegerQp<f64>;
pub type HqpInstance64 = qp_model::HqpInstance<f64>;
pub type UniformQpInstance64 = qp_model::UniformQpInstance<f64>;
pub type RobustMiqp64 = qp_model::RobustMiqp<f64>;
pub type Instance64 = qp_model::Instance<f64>;
pub type ThetaResult64 = orthant_qp::ThetaResult<f64>;
pub type DualResult64 = semilag_dual::DualResult<f64>;
pub type PrimalResult64 = oracle::PrimalResult<f64>;
pub type GapReport64 = semilag_dual::GapReport<f64>;
pub type Certificate64 = certificates::Certificate<f64>;
