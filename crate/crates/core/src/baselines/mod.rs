//! Comparison estimators: the explicit time delay estimator (ETDE) and an
//! all-pass-constrained adaptive FIR in the style of Sun and Douglas.
//!
//! Both operate on a window `s1(n-P) ..= s1(n+P)` of the reference sensor and
//! predict the current sample of the delayed sensor, so they share the
//! `P`-sample lookahead of the all-pass predictor.

mod etde;
mod sun;

pub use etde::EtdeState;
pub use sun::SunState;

use crate::error::{Error, Result};

/// Reference-sensor window `s1[n-P ..= n+P]` in ascending sample order.
pub fn sensor1_window(sensor1: &[f64], n: usize, half_width: usize) -> Result<&[f64]> {
    if n < half_width || n + half_width >= sensor1.len() {
        return Err(Error::OutOfBounds {
            index: n,
            reason: format!(
                "window of half-width {half_width} does not fit a record of length {}",
                sensor1.len()
            ),
        });
    }
    Ok(&sensor1[n - half_width..=n + half_width])
}
