use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("wrong vector length: expected {expected}, got {actual}")]
    WrongVectorLength { expected: usize, actual: usize },

    #[error("direction vector is not unit norm (norm {0})")]
    NonUnitDirection(f64),

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("bare eigenvalues are not sorted ascending")]
    UnsortedEigenvalues,

    #[error("lowest bare eigenvalue must be zero (got {0})")]
    NonzeroGroundEnergy(f64),

    #[error("invalid unit energy {0}")]
    InvalidUnitEnergy(f64),

    #[error("degenerate bare Hamiltonian: trace {0} is not positive")]
    DegenerateBareHamiltonian(f64),

    #[error("asymmetric coupling tensor at sites {0:?}")]
    AsymmetricBeta(Vec<usize>),

    #[error("invalid coupling tuple {0:?}")]
    InvalidTuple(Vec<usize>),

    #[error("correlation order {order} out of range for {n_sites} sites")]
    OrderOutOfRange { order: usize, n_sites: usize },

    #[error("local weight {0} outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("negative radicand {0:.3e} in energy distance")]
    NegativeRadicand(f64),

    #[error("speed is singular at the trajectory boundary (F = {energy}, dF/dt = {rate})")]
    BoundarySingularity { energy: f64, rate: f64 },

    #[error("energy trajectory is not monotone: dF/dt = {rate:.3e} at t = {time}")]
    MonotonicityViolation { time: f64, rate: f64 },

    #[error("optimizer did not converge: {0}")]
    OptimizerNotConverged(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid product-state correlators: {0}")]
    InvalidCorrelators(String),

    #[error("enumeration of {0} basis states is too large")]
    EnumerationTooLarge(usize),

    #[error("useless witness: overlap {0} is 0 or 1")]
    UselessWitness(f64),

    #[error("overlap 1/2 unreachable across the partition (best {best})")]
    OverlapUnreachable { best: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("excitation count {excitations} out of range for {n_sites} sites")]
    ExcitationsOutOfRange { excitations: usize, n_sites: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
