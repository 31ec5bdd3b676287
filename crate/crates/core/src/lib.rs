//! Robust correlation estimation built on the spatial sign covariance matrix (SSCM).
//!
//! The crate covers the pieces needed to go from raw observations to robust
//! correlation estimates:
//!
//! * [`linalg`]: small dense symmetric matrices and a Jacobi eigensolver.
//! * [`robust`]: spatial signs, the spatial median and the MAD.
//! * [`sscm`]: the empirical spatial sign covariance matrix.
//! * [`eigenmap`]: the map between shape eigenvalues and SSCM eigenvalues and its inverse.
//! * [`correlation`]: spatial sign correlation estimators and their asymptotic variances.
//! * [`elliptical`]: seedable samplers for normal, t and Laplace elliptical laws.
//! * [`simulation`]: the Monte Carlo efficiency study and eigenvalue scenarios.
//! * [`cli`]: the `sscor` command line front end.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlation;
pub mod eigenmap;
pub mod elliptical;
pub mod error;
pub mod linalg;
pub(crate) mod quadrature;
pub mod robust;
pub mod simulation;
pub mod sscm;

pub use error::{Error, Result};
