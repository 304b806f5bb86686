use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("{op}: dimension mismatch between {left:?} and {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("jacobi svd of a {rows}x{cols} matrix did not converge after {sweeps} sweeps (max normalized off-diagonal {residual:e})")]
    SvdNoConvergence { sweeps: usize, rows: usize, cols: usize, residual: f64 },
}

/// Errors from reading `.qc` text or constructing a circuit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {diagnostic}")]
    Invalid { line: usize, diagnostic: String },
    #[error("invalid circuit: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MpsError {
    #[error("line {line} out of range for {n} sites")]
    LineOutOfRange { line: usize, n: usize },
    #[error("cut {cut} out of range for {n} sites")]
    CutOutOfRange { cut: usize, n: usize },
    #[error("two-qubit gate needs distinct lines, got {0} twice")]
    SameLine(usize),
    #[error("gate matrix is not unitary; use the contraction backend for linear circuits")]
    NotUnitary,
    #[error("expected a {expected}x{expected} gate matrix, got {rows}x{cols}")]
    GateShape { expected: usize, rows: usize, cols: usize },
    #[error("amplitude vector of length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("{n} sites exceeds the statevector export cap of {cap}")]
    TooManySites { n: usize, cap: usize },
    #[error("both measurement probabilities vanish on line {line} (p0={p0:e}, p1={p1:e})")]
    InconsistentMeasurement { line: usize, p0: f64, p1: f64 },
    #[error("bond dimension {chi} at cut {cut} exceeds cap {cap}")]
    ChiCap { cut: usize, chi: usize, cap: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NetError {
    #[error("gate {index} acts on non-adjacent lines {j} and {k}; run lower_to_adjacent first")]
    NonAdjacentGate { index: usize, j: usize, k: usize },
    #[error("instruction {index} is a measurement; build networks from measurement-free circuits")]
    MeasurementInNetwork { index: usize },
    #[error("instruction {index} is classically conditioned; resolve conditions before building a network")]
    ConditionedInNetwork { index: usize },
    #[error("line {line} out of range for {n} lines")]
    LineOutOfRange { line: usize, n: usize },
    #[error("frontier at line {line} needs 2^{open} entries, above cap {cap}")]
    FrontierCap { line: usize, open: usize, cap: usize },
    #[error("network is malformed: {0}")]
    Malformed(String),
    #[error("probability has imaginary residue {0:e}")]
    ImaginaryResidue(f64),
    #[error("conditioning on line {line} outcome {bit} with probability {prob:e}")]
    ZeroProbabilityCondition { line: usize, bit: u8, prob: f64 },
    #[error("conditional probabilities for line {line} sum to {sum}, expected 1")]
    Unnormalized { line: usize, sum: f64 },
    #[error("sampling needs a unitary circuit; `linear` circuits only support contraction")]
    LinearSampling,
    #[error("duplicate line {0} in sampling order")]
    DuplicateLine(usize),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DenseError {
    #[error("{n} qubits exceeds the dense cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("line {line} out of range for {n} qubits")]
    LineOutOfRange { line: usize, n: usize },
    #[error("overall_unitary is undefined for circuits with measurements (instruction {0})")]
    HasMeasurement(usize),
    #[error("measurement instructions are not gates")]
    NotAGate,
}

/// Top-level error, grouped by how the command line reports it.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{0}")]
    Config(String),
}

impl Error {
    /// Exit code for the command-line tool: 2 parse/validation, 3 cap exceeded, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Circuit(_) | Error::Config(_) => 2,
            Error::Mps(MpsError::ChiCap { .. } | MpsError::TooManySites { .. })
            | Error::Net(NetError::FrontierCap { .. })
            | Error::Dense(DenseError::TooManyQubits { .. }) => 3,
            Error::Mps(MpsError::NotUnitary | MpsError::LineOutOfRange { .. } | MpsError::SameLine(_))
            | Error::Net(
                NetError::LinearSampling | NetError::DuplicateLine(_) | NetError::LineOutOfRange { .. },
            )
            | Error::Dense(DenseError::LineOutOfRange { .. }) => 2,
            _ => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
