//! Adaptive all-pass filtering.
//!
//! With the residual regressor `r(n)` the all-pass predictor is an ordinary
//! LMS problem:
//!
//! ```text
//! e(n)     = d(n) - r(n)^T w(n)
//! AAP:  w(n+1) = w(n) + 2 mu e(n) r(n)
//! NAAP: w(n+1) = w(n) + rho e(n) r(n) / (||r(n)||^2 + eps),   0 < rho < 1/3
//! ```
//!
//! After every update the delay is read from the weights; when the read-out is
//! degenerate the previous estimate is held.

use std::collections::VecDeque;

use crate::allpass::{delay_from_coefficients, dot, ApCoefficients, RegressorSet};
use crate::error::{Error, Result};

/// `||w||_inf` above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Sliding window used for the diagnostic `tr[R]` estimate.
pub const TRACE_R_WINDOW: usize = 500;

/// Default NAAP regulariser: `1e-6 * K`.
pub fn default_epsilon(k_max: usize) -> f64 {
    1e-6 * k_max as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Plain adaptive all-pass update with learning rate `mu`.
    Aap { mu: f64 },
    /// Normalised update with rate `rho` and regulariser `epsilon`.
    Naap { rho: f64, epsilon: f64 },
}

impl StepRule {
    pub fn aap(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be positive, got {mu}")));
        }
        Ok(StepRule::Aap { mu })
    }

    pub fn naap(rho: f64, epsilon: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(StepRule::Naap { rho, epsilon })
    }

    /// NAAP without regularisation. A zero-energy residual then leaves the weights unchanged.
    pub fn naap_unregularized(rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(StepRule::Naap { rho, epsilon: 0.0 })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0 / 3.0) {
        return Err(Error::invalid(format!(
            "rho must satisfy 0 < rho < 1/3, got {rho}"
        )));
    }
    Ok(())
}

/// A priori error `e(n) = d(n) - r(n)^T w`.
pub fn prediction_error(weights: &ApCoefficients, reg: &RegressorSet) -> Result<f64> {
    check_dims(weights, reg)?;
    Ok(reg.desired - dot(weights.weights(), &reg.residual))
}

/// Instantaneous cost `J = e(n)^2`.
pub fn cost(weights: &ApCoefficients, reg: &RegressorSet) -> Result<f64> {
    prediction_error(weights, reg).map(|e| e * e)
}

/// Analytic gradient of `e(n)^2` with respect to the weights: `-2 e(n) r(n)`.
pub fn gradient_of_cost(weights: &ApCoefficients, reg: &RegressorSet) -> Result<Vec<f64>> {
    let e = prediction_error(weights, reg)?;
    Ok(reg.residual.iter().map(|r| -2.0 * e * r).collect())
}

fn check_dims(weights: &ApCoefficients, reg: &RegressorSet) -> Result<()> {
    if weights.k_max() != reg.len() {
        return Err(Error::invalid(format!(
            "{} weights but {} regressors",
            weights.k_max(),
            reg.len()
        )));
    }
    Ok(())
}

/// Step size multiplying `e(n) r(n)` for the given rule.
fn gain(rule: StepRule, reg: &RegressorSet) -> f64 {
    match rule {
        StepRule::Aap { mu } => 2.0 * mu,
        StepRule::Naap { rho, epsilon } => {
            let denom = reg.residual_energy() + epsilon;
            if denom > 0.0 {
                rho / denom
            } else {
                0.0
            }
        }
    }
}

/// Applies `w += gain * e * r`, returning `e`. Does not check for divergence.
pub fn apply_update(weights: &mut ApCoefficients, reg: &RegressorSet, gain: f64) -> Result<f64> {
    let e = prediction_error(weights, reg)?;
    let scale = gain * e;
    for (w, r) in weights.weights_mut().iter_mut().zip(&reg.residual) {
        *w += scale * r;
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub error: f64,
    pub delay: f64,
}

/// Running state of an adaptive all-pass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct NaapState {
    weights: ApCoefficients,
    rule: StepRule,
    last_error: f64,
    last_delay_estimate: f64,
    sample_index: usize,
    scratch: Vec<f64>,
}

impl NaapState {
    /// Zero initial weights, i.e. an initial delay estimate of 0.
    pub fn new(k_max: usize, rule: StepRule) -> Result<Self> {
        Self::with_weights(ApCoefficients::zeros(k_max)?, rule)
    }

    pub fn with_weights(weights: ApCoefficients, rule: StepRule) -> Result<Self> {
        let delay = delay_from_coefficients(&weights).unwrap_or(0.0);
        Ok(Self {
            scratch: weights.weights().to_vec(),
            weights,
            rule,
            last_error: 0.0,
            last_delay_estimate: delay,
            sample_index: 0,
        })
    }

    pub fn weights(&self) -> &ApCoefficients {
        &self.weights
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    pub fn last_error(&self) -> f64 {
        self.last_error
    }

    pub fn delay_estimate(&self) -> f64 {
        self.last_delay_estimate
    }

    /// Number of accepted updates.
    pub fn sample_index(&self) -> usize {
        self.sample_index
    }

    /// One update under whichever rule the state carries.
    ///
    /// A step that would leave non-finite weights or `||w||_inf > 1e6` is
    /// rejected with [`Error::Divergence`] and the state is left untouched.
    pub fn step(&mut self, reg: &RegressorSet) -> Result<StepOutput> {
        check_dims(&self.weights, reg)?;
        let g = gain(self.rule, reg);
        let e = reg.desired - dot(self.weights.weights(), &reg.residual);
        let scale = g * e;
        let mut bad = !e.is_finite();
        for ((s, w), r) in self
            .scratch
            .iter_mut()
            .zip(self.weights.weights())
            .zip(&reg.residual)
        {
            *s = w + scale * r;
            bad |= !s.is_finite() || s.abs() > DIVERGENCE_LIMIT;
        }
        if bad {
            return Err(Error::Divergence {
                index: self.sample_index,
            });
        }
        self.weights.weights_mut().copy_from_slice(&self.scratch);
        if let Ok(d) = delay_from_coefficients(&self.weights) {
            self.last_delay_estimate = d;
        }
        self.last_error = e;
        self.sample_index += 1;
        Ok(StepOutput {
            error: e,
            delay: self.last_delay_estimate,
        })
    }

    pub fn aap_step(&mut self, reg: &RegressorSet) -> Result<StepOutput> {
        match self.rule {
            StepRule::Aap { .. } => self.step(reg),
            StepRule::Naap { .. } => Err(Error::invalid("aap_step called on a NAAP state")),
        }
    }

    pub fn naap_step(&mut self, reg: &RegressorSet) -> Result<StepOutput> {
        match self.rule {
            StepRule::Naap { .. } => self.step(reg),
            StepRule::Aap { .. } => Err(Error::invalid("naap_step called on an AAP state")),
        }
    }
}

/// Upper limit `1 / (3 tr[R])` on the AAP learning rate.
pub fn stability_bound(trace_r: f64) -> Result<f64> {
    if !(trace_r > 0.0 && trace_r.is_finite()) {
        return Err(Error::invalid(format!(
            "residual energy must be positive, got {trace_r}"
        )));
    }
    Ok(1.0 / (3.0 * trace_r))
}

/// Time-averaged residual energy `mean ||r(n)||^2` over a window of regressors.
pub fn estimate_trace_r(window: &[RegressorSet]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::invalid("empty regressor window"));
    }
    Ok(window
        .iter()
        .map(RegressorSet::residual_energy)
        .sum::<f64>()
        / window.len() as f64)
}

/// Steady-state misadjustment `mu tr[R] / (1 - mu tr[R])`.
pub fn misadjustment(mu: f64, trace_r: f64) -> Result<f64> {
    let x = mu * trace_r;
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!(
            "mu * tr[R] = {x} is outside [0, 1)"
        )));
    }
    Ok(x / (1.0 - x))
}

/// `||w - a||_2` against known optimal weights.
pub fn weight_error_norm(weights: &ApCoefficients, optimal: &ApCoefficients) -> Result<f64> {
    if weights.k_max() != optimal.k_max() {
        return Err(Error::invalid("weight vectors differ in length"));
    }
    Ok(weights
        .weights()
        .iter()
        .zip(optimal.weights())
        .map(|(w, a)| (w - a) * (w - a))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceDiagnostics {
    pub trace_r: f64,
    pub mu_max: f64,
    pub misadjustment: f64,
    /// Minimum MSE, i.e. the noise power entering the error.
    pub mse_floor: f64,
    pub weight_error_norm: Option<f64>,
}

impl ConvergenceDiagnostics {
    pub fn compute(mu: f64, trace_r: f64, mse_floor: f64) -> Result<Self> {
        Ok(Self {
            trace_r,
            mu_max: stability_bound(trace_r)?,
            misadjustment: misadjustment(mu, trace_r)?,
            mse_floor,
            weight_error_norm: None,
        })
    }

    /// Predicted steady-state MSE `xi_min (1 + M)`.
    pub fn steady_state_mse(&self) -> f64 {
        self.mse_floor * (1.0 + self.misadjustment)
    }
}

/// Sliding-window average of the residual energy.
#[derive(Debug, Clone)]
pub struct TraceREstimator {
    window: VecDeque<f64>,
    capacity: usize,
}

impl Default for TraceREstimator {
    fn default() -> Self {
        Self::new(TRACE_R_WINDOW)
    }
}

impl TraceREstimator {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            window: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, reg: &RegressorSet) {
        let energy = reg.residual_energy();
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(energy);
    }

    pub fn estimate(&self) -> Option<f64> {
        if self.window.is_empty() {
            None
        } else {
            Some(self.window.iter().sum::<f64>() / self.window.len() as f64)
        }
    }
}
