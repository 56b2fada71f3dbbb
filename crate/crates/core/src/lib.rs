//! Bayesian experimental design for precision-matrix estimation in Gaussian
//! chain graph models.
//!
//! The model couples p predictor nodes to k response nodes through
//! `Y_i | X_i ~ N(Omega^-1 B^T X_i, Omega^-1)` and asks which designs X help
//! infer the response precision Omega. The crate provides exact likelihood
//! and prior Hessians, Laplace-approximated marginal posterior precisions
//! under four priors, the information-gain bound, MGIG mode finding and
//! importance sampling, and the simulation harness behind the KL-divergence
//! and Stein's-loss studies.

pub mod dataio;
pub mod error;
pub mod estimators;
pub mod laplace;
pub mod matrix;
pub mod mgig;
pub mod model;
pub mod prior;
pub mod sim;
pub mod wishart;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
pub use matrix::{DuplicationMatrix, SymMatrix};
pub use model::{ChainGraphParams, Dataset};
pub use prior::{MgigParams, PriorSpec};
