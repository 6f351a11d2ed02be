//! Delay-resolved information processing capacity of linear and
//! continuous-variable quantum reservoirs.
//!
//! The crate simulates squeezed-vacuum photonic reservoirs with optional
//! photon addition/subtraction, trains optimal linear readouts against a
//! Legendre target basis, and measures total, per-delay, per-degree and
//! cross-term capacities together with the Gaussian capacity bound and the
//! excess-capacity witness. A truncated Fock-space simulator serves as the
//! ground truth for the Wick-expansion engine, and a Wishart sampling model
//! covers finite-ensemble measurement noise.

pub mod encoding;
pub mod error;
pub mod gaussian;
pub mod oracle;
pub mod readout;
pub mod reservoir;
pub mod resources;
pub mod runner;
pub mod seeds;
pub mod signal;
pub mod wick;

pub use error::{Error, Result};
