use alloc::string::String;

/// Failures reported by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported precision: {0} digits")]
    UnsupportedPrecision(u32),
    #[error("jet orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),
    #[error("jet of order {have} is too short, need order {need}")]
    JetTooShort { have: usize, need: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular matrix: zero pivot in column {0}")]
    SingularMatrix(usize),
    #[error("rank-deficient least-squares system at column {0}")]
    RankDeficient(usize),
    #[error("complex eigenvalue pair {re} ± {im}i")]
    ComplexSpectrum { re: f64, im: f64 },
    #[error("eigenvalues {0} and {1} are not distinct")]
    RepeatedEigenvalue(usize, usize),
    #[error("eigen residual {residual:e} exceeds tolerance {tolerance:e}")]
    EigenResidual { residual: f64, tolerance: f64 },
    #[error("QR iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("leading coefficient is identically zero")]
    ZeroLeadingCoefficient,
    #[error("singular point at t = {0}")]
    SingularPoint(f64),
    #[error("system has an inhomogeneous term")]
    Inhomogeneous,
    #[error("stencil of row {0} leaves the grid")]
    StencilOutOfRange(usize),
    #[error("data point at t = {0} is not a grid node")]
    OffGrid(f64),
    #[error("more than one constraint at node {0}")]
    DuplicateConstraint(usize),
    #[error("too few rows: {rows} equations for {unknowns} unknowns")]
    Underdetermined { rows: usize, unknowns: usize },
    #[error("no eigen-direction retained (cut index {m} of {r})")]
    NothingRetained { m: usize, r: usize },
    #[error("scaling denominator vanishes")]
    DegenerateScaling,
    #[error("overflow while forming the matrix factorial at step {0}; retry with more digits")]
    Overflow(usize),
    #[error("{what} = {value} outside the validated range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("Pochhammer symbol has a pole at n = {0}")]
    Pole(f64),
    #[error("adaptive quadrature did not converge")]
    QuadratureFailure,
    #[error("basis member {index} is not differentiable at t = {t}")]
    BasisNotSmooth { index: usize, t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
