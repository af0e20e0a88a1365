use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain(&'static str),
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// Derivatives were requested at a pole of the fundamental solution.
    PoleSingularity,
    /// A Rayleigh quotient was requested along the zero vector.
    DegenerateDirection,
    /// `Δ_p` is undefined: vanishing gradient with `p < 2`.
    UndefinedOperator,
    /// The closed-form route only covers pure superpositions.
    UnsupportedConfiguration(&'static str),
    /// A pole set with no positive weight.
    EmptyPoleSet,
    /// Derivatives requested where two affine pieces of a minimum tie.
    Kink,
    /// Quadrature produced a non-finite value.
    Quadrature,
    /// The p-harmonic solver exhausted its iteration budget.
    SolverFailure { iterations: usize, residual: f64 },
    /// The grid and pole configuration are incompatible.
    Configuration(&'static str),
    /// A Barenblatt derivative was requested on the free boundary.
    NonDifferentiable,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::PoleSingularity => f.write_str("evaluation at a pole"),
            Error::DegenerateDirection => f.write_str("zero direction vector"),
            Error::UndefinedOperator => {
                f.write_str("p-Laplacian undefined: vanishing gradient with p < 2")
            }
            Error::UnsupportedConfiguration(what) => write!(f, "unsupported configuration: {what}"),
            Error::EmptyPoleSet => f.write_str("pole set has no positive weight"),
            Error::Kink => f.write_str("derivative requested at a kink of a piecewise-affine minimum"),
            Error::Quadrature => f.write_str("mollifier quadrature produced a non-finite value"),
            Error::SolverFailure { iterations, residual } => write!(
                f,
                "p-harmonic solver did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::Configuration(what) => write!(f, "configuration error: {what}"),
            Error::NonDifferentiable => f.write_str("point lies on the Barenblatt free boundary"),
        }
    }
}

impl core::error::Error for Error {}
