//! Noisy group testing toolkit.
//!
//! Rate thresholds for binary noise channels, constant-column and spatially
//! coupled pooling designs, and the DD, SPARC, SPEX, belief-propagation and
//! exhaustive-posterior decoders, plus a reproducible Monte Carlo harness.

pub mod channel;
pub mod decode;
pub mod design;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod rates;
pub mod rng;

pub use channel::{ExtendedReal, NoiseChannel};
pub use error::{Error, Result};
