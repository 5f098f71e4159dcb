use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coupling outside the pacman domain: {0}")]
    InvalidCoupling(String),

    #[error("point {re}{im:+}i lies within {distance:e} of the branch cut")]
    CutProximity { re: f64, im: f64, distance: f64 },

    #[error("point {re}{im:+}i is too close to the branch point")]
    BranchPointProximity { re: f64, im: f64 },

    #[error("Newton iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("square-root argument on the negative real axis: {0}")]
    BranchViolation(String),

    #[error("integration path crosses the cut at t = {0}")]
    CutCrossing(String),

    #[error("contour cannot clear the cut rays: {0}")]
    CutCollision(String),

    #[error("eigenvalue {eig} outside the contour capacity R/2 = {half_radius}")]
    SpectrumTooLarge { eig: f64, half_radius: f64 },

    #[error("contour quadrature failed its Cauchy self-test: {0}")]
    QuadratureDivergence(String),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),

    #[error("matrix is not positive semidefinite (pivot {0:e})")]
    NotPsd(f64),

    #[error("logarithm branch ambiguity: {0}")]
    LogBranchAmbiguity(String),

    #[error("contour point within {0:e} of an eigenvalue")]
    PoleCollision(f64),

    #[error("Monte Carlo relative standard error {0:.3} exceeds 10%")]
    VarianceBlowup(f64),

    #[error("quadrature did not converge under node doubling: {0}")]
    QuadratureUnderResolved(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("computation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("finite-difference step unstable: {0}")]
    StepInstability(String),
}

pub type Result<T> = std::result::Result<T, Error>;
