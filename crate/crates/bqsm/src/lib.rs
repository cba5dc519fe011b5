//! Simulation and bound verification for cryptographic protocols in the
//! bounded-quantum-storage model.
//!
//! The crate is organised bottom-up: [`qstate`] and [`entropy`] provide the
//! numerical primitives, [`hashing`] and [`cqstate`] the privacy-amplification
//! machinery, and [`classical_ot`], [`uncertainty`], [`protocols`] and [`qkd`]
//! the experiment harnesses built on top of them.

pub mod classical_ot;
pub mod cqstate;
pub mod entropy;
pub mod hashing;
pub mod protocols;
pub mod qkd;
pub mod qstate;
pub mod uncertainty;

use thiserror::Error;

pub use entropy::{Distribution, JointDistribution};
pub use qstate::{Basis, DensityOperator, PureState, QError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Quantum(#[from] QError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

/// Stable per-index seed derived from a root seed (SplitMix64 finalizer), so
/// that trial `i` sees the same stream however trials are scheduled.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
