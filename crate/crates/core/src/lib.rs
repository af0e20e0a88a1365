//! Numerical kernel for superpositions of fundamental solutions of the
//! p-Laplace equation
//!
//! ```text
//! Δ_p u = div(|∇u|^{p-2} ∇u)
//! ```
//!
//! The crate is `no_std` (with `alloc`) and has no IO. It provides:
//!
//! - [`params`] and [`radial`]: the exponent/dimension pair, the radial
//!   fundamental solution and its first two derivatives, radial gradients
//!   and Hessians.
//! - [`superpose`]: weighted pole sets `V(x) = Σ a_i w(x - y_i)`, an optional
//!   additive [`concave`] term, and three independent evaluations of `Δ_p`
//!   (the expanded divergence identity, the closed-form `sin²θ_i` sum, and
//!   finite differences of the flux).
//! - [`concave`]: concave additive terms, mollification, the Hessian
//!   eigenvalue criterion.
//! - [`comparison`]: a discrete p-Dirichlet energy minimizer on rectangular
//!   grids and a harness checking `h <= W` for boundary data `h <= W`.
//! - [`evolution`]: the Barenblatt profile and the homogeneous-equation
//!   kernel, with the defect identities showing that superposition fails for
//!   the evolutionary equations.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod comparison;
pub mod concave;
pub mod error;
pub mod evolution;
pub mod linalg;
pub(crate) mod math;
pub mod params;
pub mod radial;
pub mod superpose;

pub use comparison::{
    comparison_check, solve_p_harmonic, ComparisonReport, ComparisonRun, GridDomain, GridFunction,
    NodeKind, SolveStats, SolverOptions,
};
pub use concave::{
    eigenvalue_criterion, eval_concave, operator_term, Affine, ConcaveEval, ConcaveTerm, Quadratic,
};
pub use error::{Error, Result};
pub use evolution::{EvolutionKernel, KernelKind};
pub use linalg::Matrix;
pub use params::Params;
pub use radial::{
    fundamental_profile, radial_gradient, radial_hessian, rayleigh_quotient, RadialProfile,
};
pub use superpose::{
    delta_p_closed_form, delta_p_direct, delta_p_fd, eval, potential_value, riemann_pole_set,
    sign_region, CellGrid, EvalResult, Pole, PoleSet, SignClass,
};
