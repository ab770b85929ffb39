//! Numerical library for fully nonlinear alpha-stable PIDEs under
//! sublinear expectation: admissible heavy-tailed distribution families,
//! the sublinear expectation as a four-corner maximum of integrals, the
//! monotone time-stepping scheme and its truncated variant, consistency
//! and regularity constants, and an experiment harness measuring
//! convergence rates of the scheme and of the generalized stable central
//! limit theorem.

pub mod error;
pub mod experiments;
pub mod measure;
pub mod pide;
pub mod quad;
pub mod scheme;
pub mod sublinear;

pub use error::{Error, Result};
pub use measure::{
    assumption_constants, gamma_exponent, AssumptionConstants, DistributionSpec, StableParams,
    TailProfile,
};
pub use pide::{
    consistency_residual, nonlocal_operator, reference_linear, stable_cosine_exponent,
    LevyMeasureView, ReferencePhi, SmoothTestFunction,
};
pub use scheme::{
    expect_shifted, holder_time, lipschitz_of, scheme_operator_s, solve, solve_final,
    solve_truncated, step, step_truncated, Extension, GridFunction, SchemeConfig, SchemeSolution,
    StepOperator,
};
pub use sublinear::{Integrand, QuadBudget, SublinearKernel};
