//! Fully nonlinear, gradient-homogeneous elliptic Neumann problems on balls.
//!
//! Radial solutions of
//!
//! ```text
//! F(x, Du, D²u) + b(x)·Du |Du|^α + (c(x) + λ)|u|^α u = g(x)   in B(0, R)
//! ⟨Du, n⟩ = 0                                                   on ∂B(0, R)
//! ```
//!
//! are computed on a uniform radial grid. The crate also brackets the two
//! principal eigenvalues (positive and negative eigenfunctions) through the
//! boundedness of a monotone iteration, and verifies an explicit positive
//! supersolution for a sign-changing zero-order coefficient.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod operators;
pub mod profile;
pub mod solver;

pub use certify::{Certificate, PiecewiseRadialFn, SupersolutionInputs, SupersolutionParams};
pub use eigen::{EigenEstimate, EigenOptions, EigenSign};
pub use error::{Error, Result};
pub use grid::{GridFunction, RadialGrid};
pub use operators::{EllipticOperator, OperatorKind, PucciSign};
pub use profile::{CoefficientField, RadialProfile};
pub use solver::{IterationOptions, IterationReport, SolveOptions, SolveReport, Verdict};
