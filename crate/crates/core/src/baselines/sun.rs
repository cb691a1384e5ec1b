use crate::allpass::{dot, DEFAULT_DENOMINATOR_GUARD};
use crate::error::{Error, Result};
use crate::naap::{StepOutput, DIVERGENCE_LIMIT};

/// All-pass-constrained adaptive delay estimator.
///
/// A two-sided FIR `w_k`, `k = -P..P`, predicts the delayed stream from the
/// reference stream. An all-pass filter has unit energy, so the squared error
/// is augmented with the penalty `(1 - ||w||^2)^2 / 2` and both terms are
/// descended together:
///
/// ```text
/// y(n) = sum_k w_k s1(n - k),   e(n) = s2(n) - y(n)
/// w <- w + 2 mu [e(n) x(n) + (1 - ||w||^2) w]
/// ```
///
/// The delay is read directly from the taps as the centroid of the main
/// lobe: the largest tap and its two neighbours. The previous estimate is
/// held while the lobe's tap sum is below [`DEFAULT_DENOMINATOR_GUARD`].
#[derive(Debug, Clone, PartialEq)]
pub struct SunState {
    /// `weights[j]` is the tap at lag `k = j - P`.
    weights: Vec<f64>,
    mu: f64,
    delay_estimate: f64,
    scratch: Vec<f64>,
}

impl SunState {
    /// Starts from all-zero taps.
    ///
    /// Any nonzero start leaves a component outside the signal band that the
    /// data never corrects and the unit-energy penalty preserves.
    pub fn new(mu: f64, half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::invalid("half-width must be at least 1"));
        }
        Self::with_weights(mu, vec![0.0; 2 * half_width + 1])
    }

    /// Taps ordered by lag `-P..=P`; the length must be odd.
    pub fn with_weights(mu: f64, weights: Vec<f64>) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be non-negative, got {mu}")));
        }
        if weights.len().is_multiple_of(2) || weights.len() < 3 {
            return Err(Error::invalid(
                "weights must have odd length 2P+1 with P >= 1",
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        let delay = lobe_delay(&weights).unwrap_or(0.0);
        Ok(Self {
            scratch: weights.clone(),
            weights,
            mu,
            delay_estimate: delay,
        })
    }

    pub fn half_width(&self) -> usize {
        self.weights.len() / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delay_estimate(&self) -> f64 {
        self.delay_estimate
    }

    /// `window` holds `s1(n-P) ..= s1(n+P)` in ascending order.
    pub fn step(
        &mut self,
        window: &[f64],
        sensor2_sample: f64,
        index: usize,
    ) -> Result<StepOutput> {
        if window.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "window has {} samples, expected {}",
                window.len(),
                self.weights.len()
            )));
        }
        // regressor x_k = s1(n - k) is the window reversed
        let y: f64 = self
            .weights
            .iter()
            .zip(window.iter().rev())
            .map(|(w, x)| w * x)
            .sum();
        let e = sensor2_sample - y;
        let shrink = 1.0 - dot(&self.weights, &self.weights);
        let g = 2.0 * self.mu;
        let mut bad = !e.is_finite();
        for ((s, w), x) in self
            .scratch
            .iter_mut()
            .zip(&self.weights)
            .zip(window.iter().rev())
        {
            *s = w + g * (e * x + shrink * w);
            bad |= !s.is_finite() || s.abs() > DIVERGENCE_LIMIT;
        }
        if bad {
            return Err(Error::Divergence { index });
        }
        std::mem::swap(&mut self.weights, &mut self.scratch);
        if let Some(d) = lobe_delay(&self.weights) {
            self.delay_estimate = d;
        }
        Ok(StepOutput {
            error: e,
            delay: self.delay_estimate,
        })
    }
}

/// Centroid of the largest tap and its neighbours, in lags `-P..=P`.
fn lobe_delay(weights: &[f64]) -> Option<f64> {
    let p = (weights.len() / 2) as f64;
    let peak = weights
        .iter()
        .enumerate()
        .rev()
        .max_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    let lo = peak.saturating_sub(1);
    let hi = (peak + 1).min(weights.len() - 1);
    let lobe = &weights[lo..=hi];
    let gain: f64 = lobe.iter().sum();
    if gain.is_nan() || gain.abs() <= DEFAULT_DENOMINATOR_GUARD {
        return None;
    }
    let moment: f64 = lobe
        .iter()
        .enumerate()
        .map(|(i, w)| ((lo + i) as f64 - p) * w)
        .sum();
    Some(moment / gain)
}
