//! Resource allocation and system-level simulation for semantic feature
//! multiple access (SFMA) downlinks.
//!
//! Users are paired into two-user groups, the base-station budget is
//! water-filled across groups and split within each group under a semantic
//! interference SINR model, and the resulting sum rate is benchmarked against
//! F-NOMA, O-JSCC and OFDMA in Monte Carlo channel drops.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod channel;
pub mod error;
pub mod pairing;
pub mod power;
pub mod seed;
pub mod semantic_rate;
pub mod verify;

pub use error::{Error, Result, Stage};
