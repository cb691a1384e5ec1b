use crate::error::{Error, Result};
use crate::kernel::{sinc, sinc_derivative};
use crate::naap::StepOutput;

/// Explicit time delay estimator.
///
/// The delayed stream is modelled as a truncated sinc interpolation of the
/// reference stream,
///
/// ```text
/// y(n) = sum_{k=-P..P} sinc(k - D) s1(n - k),   e(n) = s2(n) - y(n),
/// ```
///
/// and `D` follows the negative gradient of `e(n)^2`:
/// `D <- D - 2 mu e(n) sum_k sinc'(k - D) s1(n - k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtdeState {
    delay_estimate: f64,
    mu: f64,
    half_width: usize,
}

impl EtdeState {
    pub fn new(mu: f64, half_width: usize) -> Result<Self> {
        Self::with_delay(mu, half_width, 0.0)
    }

    pub fn with_delay(mu: f64, half_width: usize, delay: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be non-negative, got {mu}")));
        }
        if half_width == 0 {
            return Err(Error::invalid("half-width must be at least 1"));
        }
        if !delay.is_finite() {
            return Err(Error::invalid("initial delay must be finite"));
        }
        Ok(Self {
            delay_estimate: delay,
            mu,
            half_width,
        })
    }

    pub fn delay_estimate(&self) -> f64 {
        self.delay_estimate
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Model output and `d y / d D` for the current delay.
    fn output_and_sensitivity(&self, window: &[f64]) -> (f64, f64) {
        let p = self.half_width as i64;
        let mut y = 0.0;
        let mut dy = 0.0;
        // window[j] = s1(n - P + j), i.e. lag k = P - j
        for (j, x) in window.iter().enumerate() {
            let t = (p - j as i64) as f64 - self.delay_estimate;
            y += sinc(t) * x;
            dy -= sinc_derivative(t) * x;
        }
        (y, dy)
    }

    /// Prediction error `e(n)` at the current delay, without adapting.
    pub fn error(&self, window: &[f64], sensor2_sample: f64) -> Result<f64> {
        self.check_window(window)?;
        Ok(sensor2_sample - self.output_and_sensitivity(window).0)
    }

    /// Derivative of `e(n)^2` with respect to the delay parameter.
    pub fn cost_gradient(&self, window: &[f64], sensor2_sample: f64) -> Result<f64> {
        self.check_window(window)?;
        let (y, dy) = self.output_and_sensitivity(window);
        Ok(-2.0 * (sensor2_sample - y) * dy)
    }

    /// `window` holds `s1(n-P) ..= s1(n+P)` in ascending order.
    pub fn step(
        &mut self,
        window: &[f64],
        sensor2_sample: f64,
        index: usize,
    ) -> Result<StepOutput> {
        self.check_window(window)?;
        let (y, dy) = self.output_and_sensitivity(window);
        let e = sensor2_sample - y;
        let next = self.delay_estimate + 2.0 * self.mu * e * dy;
        if !next.is_finite() {
            return Err(Error::Divergence { index });
        }
        self.delay_estimate = next;
        Ok(StepOutput {
            error: e,
            delay: next,
        })
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != 2 * self.half_width + 1 {
            return Err(Error::invalid(format!(
                "window has {} samples, expected {}",
                window.len(),
                2 * self.half_width + 1
            )));
        }
        Ok(())
    }
}
