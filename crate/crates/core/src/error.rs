use thiserror::Error;

#[derive(Debug, Error)]
pub enum HmfError {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("precision of {0} digits is not supported (15 or 16 only)")]
    Precision(u32),
    #[error("zero element where a unit or nonzero value is required")]
    Zero,
    #[error("divergent sum: {0}")]
    Divergent(String),
    #[error("membership violated: {0}")]
    Membership(String),
    #[error("residue ring of size {0} exceeds the supported limit")]
    DomainTooLarge(u128),
    #[error("pole of the Gamma function at {0}")]
    Pole(String),
    #[error("quadrature budget exceeded: {0}")]
    Quadrature(String),
    #[error("coefficient table too short: need norm {needed}, have {available}")]
    TableShortfall { needed: u64, available: u64 },
    #[error("missing Hecke eigenvalue at prime {0}")]
    MissingPrime(String),
    #[error("linear system: {0}")]
    Rank(String),
    #[error("negative harmonic weight {0:e} for form {1}")]
    NegativeWeight(f64, String),
    #[error("tail not converged: {0}")]
    Tail(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("Deligne bound violated at p = {p}: |a_p| = {value}")]
    Bound { p: u64, value: f64 },
    #[error("checksum mismatch (expected {expected}, found {found})")]
    Checksum { expected: String, found: String },
    #[error("normalization: {0}")]
    Normalization(String),
    #[error("label not found: {0}")]
    NotFound(String),
    #[error("network: {0}")]
    Network(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, HmfError>;
