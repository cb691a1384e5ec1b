//! Time-varying delay estimation between two sensor streams with a
//! normalised adaptive all-pass (NAAP) filter.
//!
//! * [`signal`]: bandlimited sources, fractional delays and measurement noise.
//! * [`allpass`]: the all-pass linear predictor and direct delay read-out.
//! * [`naap`]: AAP / NAAP updates and convergence diagnostics.
//! * [`baselines`]: ETDE and an all-pass-constrained adaptive FIR.
//! * [`harness`]: Monte Carlo campaigns, learning-rate sweeps and CSV output.

pub mod allpass;
pub mod baselines;
pub mod csv;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod naap;
pub mod seed;
pub mod signal;

pub use error::{Error, Result};
