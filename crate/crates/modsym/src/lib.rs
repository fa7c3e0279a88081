//! Modular symbols for `Gamma0(N)` with `N` prime (or 1) and even weight,
//! used to produce Hecke eigenvalues of newforms numerically.

pub mod heilbronn;
pub mod manin;
pub mod newforms;
pub mod p1;

pub use newforms::{cusp_dim, newforms, primes_up_to, Newform};

#[derive(Debug, thiserror::Error)]
pub enum ModSymError {
    #[error("level {0} is not prime")]
    UnsupportedLevel(u64),
    #[error("weight {0} must be even and at least 2")]
    UnsupportedWeight(u32),
    #[error("prime bound {bound} too large for weight {weight}")]
    BoundTooLarge { bound: u64, weight: u32 },
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}

pub type Result<T> = std::result::Result<T, ModSymError>;
