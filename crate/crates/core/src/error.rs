//! Error type shared across the crate.

use thiserror::Error;

/// Anything that can go wrong while building states, circuits, datasets or
/// running the training loop.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("register of {qubits} qubits exceeds the {max}-qubit simulator ceiling")]
    TooManyQubits { qubits: usize, max: usize },

    #[error("amplitude vector length {len} is not a power of two (or is < 2)")]
    BadStateLength { len: usize },

    #[error("state norm {norm} drifted beyond the recoverable tolerance")]
    NormDrift { norm: f64 },

    #[error("cannot normalize a (near-)zero vector in {context}")]
    ZeroVector { context: &'static str },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("matrix is not unitary: ||U U^dag - I||_F = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian: max |m[i][j] - conj(m[j][i])| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("Kraus set violates completeness: ||sum K^dag K - I||_F = {deviation:.3e}")]
    KrausCompleteness { deviation: f64 },

    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("parameter index {index} out of range ({len} parameters)")]
    ParameterIndexOutOfRange { index: usize, len: usize },

    #[error("parameter count mismatch: ansatz expects {expected}, got {actual}")]
    ParameterCount { expected: usize, actual: usize },

    #[error("gate control and target coincide on qubit {qubit}")]
    ControlEqualsTarget { qubit: usize },

    #[error("encoder produced a near-zero amplitude vector for input {input}")]
    DegenerateEncoding { input: f64 },

    #[error("{context} must not be empty")]
    EmptyInput { context: &'static str },

    #[error("{context}: length mismatch ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {reason}")]
    MalformedCsv { path: String, reason: String },

    #[error("column '{column}' not found; available columns: {available:?}")]
    ColumnNotFound {
        column: String,
        available: Vec<String>,
    },

    #[error("data row {row}: '{value}' in column '{column}' is not a finite number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("series has {len} points but at least {min} are required")]
    SeriesTooShort { len: usize, min: usize },

    #[error("cannot fit min-max scaling: the training prefix is constant")]
    ConstantSeries,

    #[error("training diverged at epoch {epoch}: non-finite loss or gradient")]
    Diverged { epoch: usize },

    #[error("sequence step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the index of the sequence step it occurred at.
    pub fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
