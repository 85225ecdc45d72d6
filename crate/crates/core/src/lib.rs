//! Numerical laboratory for the semilinear wave equation with
//! scale-invariant damping,
//!
//! ```text
//! ∂ₜ²u − Δu + μ/(1+t) ∂ₜu = |u|ᵖ,   u(0) = εf,  ∂ₜu(0) = εg,
//! ```
//!
//! with radially symmetric data supported in a ball of radius `r₀ < 1`.

pub mod error;
pub mod exponents;
pub mod functionals;
pub mod hypergeom;
pub mod quadrature;
pub mod regression;
pub mod sweep;
pub mod testfunc;
pub mod wavesolver;

pub use error::{Error, Result};
pub use exponents::{Branch, ProblemClass, Regime, RegimeTag, StraussExponent};
pub use hypergeom::{EvalPolicy, EvalResult, HypergeomParams, Method};
pub use testfunc::{ConeDomain, TestFunctionFamily};
pub use wavesolver::{BlowupReport, DataProfile, ModelParams, RadialGrid, RunStatus, SolverSettings};
