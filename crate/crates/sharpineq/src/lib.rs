//! Numerical toolkit for sharp Sobolev, Gagliardo–Nirenberg, trace and
//! logarithmic Sobolev inequalities on ℝⁿ and the half-space, in their
//! mass-transport and Hopf–Lax (Borell–Brascamp–Lieb) forms.
//!
//! The layers build on each other: [`grid`] for sampled functions and
//! quadrature, [`norms`] for potentials and Legendre transforms,
//! [`hopf_lax`] for inf-convolutions, [`transport`] for one-dimensional
//! optimal transport, [`functionals`] for the integrals, and
//! [`inequalities`] for sharp constants and verifiers that return a gap with
//! an error budget and a verdict. [`report`] is the command-line front end.
//!
//! ```
//! use sharpineq::inequalities::{verify, Case, InequalityId, Resolution, TestInput};
//!
//! let case = Case::designated(InequalityId::Case1);
//! let report = verify(&case, TestInput::Equality, Resolution::Adaptive { tol: 1e-10 }).unwrap();
//! assert!(report.gap.abs() <= report.budget);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod grid;
pub mod hopf_lax;
pub mod inequalities;
pub mod norms;
pub mod optim;
pub mod report;
pub mod transport;

pub use error::{Error, Result};
