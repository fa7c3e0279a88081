//! Arithmetic and analytic machinery for twisted first moments of
//! Rankin-Selberg central values over `Q` and real quadratic fields.
//!
//! The crate is organised bottom-up: [`field`] and [`ideal`] hold the exact
//! arithmetic, [`exp_sums`] the generalized Kloosterman sums, [`analysis`] the
//! special functions and contour integrals, and [`rankin_selberg`],
//! [`petersson`] and [`moment`] assemble the L-value and moment computations.
//! [`data_io`] reads and writes eigenform coefficient records.

pub mod analysis;
pub mod data_io;
pub mod error;
pub mod exp_sums;
pub mod field;
pub mod ideal;
pub mod moment;
pub mod petersson;
pub mod rankin_selberg;
pub mod util;

pub use error::{HmfError, Result};
pub use field::{FieldElement, Rat, TotallyRealField};
pub use ideal::Ideal;
