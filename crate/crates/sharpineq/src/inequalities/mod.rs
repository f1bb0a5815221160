//! Executable versions of the sharp inequalities: parameter regions, θ
//! solvers, extremal functions, sharp constants, randomized test functions
//! and one verifier per inequality.

mod catalog;
mod constants;
mod dynamic;
mod extremal;
mod params;
mod perturb;
mod verify;

pub use catalog::{Case, InequalityId, InequalityReport, Resolution, Term, TestInput, Verdict};
pub use constants::{
    derived_constant, gradient_power, gradient_power_with, log_radial_integral, normalized_cap, normalized_convex,
    normalized_exp, normalized_trace_exp, normalized_trace_power, ratio_constant, scaling_factor, scaling_optimize,
    sharp_constant, sharp_constant_with, RadialEval, ScalingOptimum, SharpConstant,
};
pub use dynamic::{classic_lambda, semigroup_integral, semigroup_values, subsample, sup_semigroup_integral, SemigroupGrid};
pub use extremal::{extremal, extremal_with_norm, unit_e, ExtremalKind};
pub use params::{
    conjugate, p_bound, param_region, region_boundary, theta_coefficients, theta_residual, theta_solve, ParamSet,
    RegionVerdict, ThetaKind,
};
pub use crate::transport::PhiSpec;
pub use perturb::{perturb_extremal, perturb_on, Bump, PerturbedField, Perturbation};
pub use verify::verify;
