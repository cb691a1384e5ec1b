//! All-pass / FIR-ratio delay model.
//!
//! A delay is modelled as an all-pass filter `P(e^{jw}) / P(e^{-jw})` with a
//! forward FIR `p = [1, a_1, .., a_K]`. Filtering the delayed stream with the
//! time-reversed `p` must match filtering the reference stream with `p`, which
//! rearranges (with `a_0 = 1`) into the linear predictor
//!
//! ```text
//! s2(n) - s1(n) = r(n)^T a,   r(n) = [s1(n-1) - s2(n+1), .., s1(n-K) - s2(n+K)]
//! ```
//!
//! and the delay is read directly from the coefficients as
//! `tau = 2 * sum(k a_k) / sum(a_k)` over `k = 0..=K`.

use crate::csv::fmt_num;
use crate::error::{Error, Result};

/// Default guard on `|1 + sum(w)|` below which no delay is read out.
pub const DEFAULT_DENOMINATOR_GUARD: f64 = 1e-9;

/// Coefficients `a_1..a_K` (or their running estimates); `a_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ApCoefficients {
    weights: Vec<f64>,
}

impl ApCoefficients {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("at least one coefficient is required"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self { weights })
    }

    pub fn zeros(k_max: usize) -> Result<Self> {
        Self::new(vec![0.0; k_max])
    }

    /// Exact all-pass coefficients for an integer delay `tau0 <= k_max`:
    /// `a_{tau0} = 1` and all others zero (all zero for `tau0 = 0`).
    pub fn canonical(k_max: usize, tau0: usize) -> Result<Self> {
        if tau0 > k_max {
            return Err(Error::invalid(format!(
                "delay {tau0} exceeds k_max {k_max}"
            )));
        }
        let mut w = vec![0.0; k_max];
        if tau0 >= 1 {
            w[tau0 - 1] = 1.0;
        }
        Self::new(w)
    }

    pub fn k_max(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// `1 + sum(w_k)`, the zero-frequency gain of the forward filter.
    pub fn normalization_sum(&self) -> f64 {
        1.0 + self.weights.iter().sum::<f64>()
    }

    pub fn csv_header(k_max: usize) -> String {
        (1..=k_max)
            .map(|k| format!("w{k}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.weights
            .iter()
            .map(|w| fmt_num(*w))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Regressors for one sample of the linear predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSet {
    /// `[s1(n-1), .., s1(n-K)]`
    pub x_minus: Vec<f64>,
    /// `[s2(n+1), .., s2(n+K)]`
    pub x_plus: Vec<f64>,
    /// `x_minus - x_plus`
    pub residual: Vec<f64>,
    /// `s2(n) - s1(n)`
    pub desired: f64,
}

impl RegressorSet {
    pub fn from_parts(x_minus: Vec<f64>, x_plus: Vec<f64>, desired: f64) -> Result<Self> {
        if x_minus.len() != x_plus.len() {
            return Err(Error::invalid(format!(
                "backward vector has {} entries, forward vector {}",
                x_minus.len(),
                x_plus.len()
            )));
        }
        let residual = x_minus.iter().zip(&x_plus).map(|(a, b)| a - b).collect();
        Ok(Self {
            x_minus,
            x_plus,
            residual,
            desired,
        })
    }

    /// A regressor with a prescribed residual (the forward vector is taken as zero).
    pub fn from_residual(residual: Vec<f64>, desired: f64) -> Self {
        Self {
            x_plus: vec![0.0; residual.len()],
            x_minus: residual.clone(),
            residual,
            desired,
        }
    }

    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// `||r||^2`, the instantaneous residual energy.
    pub fn residual_energy(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum()
    }

    /// Rebuilds in place for sample `n`; see [`build_regressors`].
    pub fn refill(&mut self, sensor1: &[f64], sensor2: &[f64], n: usize) -> Result<()> {
        let k = self.x_minus.len();
        check_window(sensor1.len(), sensor2.len(), n, k)?;
        for i in 0..k {
            let back = sensor1[n - 1 - i];
            let fwd = sensor2[n + 1 + i];
            self.x_minus[i] = back;
            self.x_plus[i] = fwd;
            self.residual[i] = back - fwd;
        }
        self.desired = sensor2[n] - sensor1[n];
        Ok(())
    }

    pub(crate) fn with_order(k_max: usize) -> Self {
        Self {
            x_minus: vec![0.0; k_max],
            x_plus: vec![0.0; k_max],
            residual: vec![0.0; k_max],
            desired: 0.0,
        }
    }
}

fn check_window(len1: usize, len2: usize, n: usize, k_max: usize) -> Result<()> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if n < k_max || n >= len1 {
        return Err(Error::OutOfBounds {
            index: n,
            reason: format!(
                "backward vector needs {k_max} past samples of sensor 1 (length {len1})"
            ),
        });
    }
    if n + k_max >= len2 {
        return Err(Error::OutOfBounds {
            index: n,
            reason: format!(
                "forward vector needs {k_max} future samples of sensor 2 (length {len2})"
            ),
        });
    }
    Ok(())
}

/// Regressors at sample `n`. Requires `k_max <= n` and `n + k_max < len(sensor2)`:
/// the forward vector imposes a `k_max`-sample lookahead on the estimator.
pub fn build_regressors(
    sensor1: &[f64],
    sensor2: &[f64],
    n: usize,
    k_max: usize,
) -> Result<RegressorSet> {
    check_window(sensor1.len(), sensor2.len(), n, k_max)?;
    let mut reg = RegressorSet::with_order(k_max);
    reg.refill(sensor1, sensor2, n)?;
    Ok(reg)
}

/// Direct delay read-out `2 * sum(k w_k) / (1 + sum(w_k))` with the default guard.
pub fn delay_from_coefficients(coeffs: &ApCoefficients) -> Result<f64> {
    delay_from_coefficients_guarded(coeffs, DEFAULT_DENOMINATOR_GUARD)
}

pub fn delay_from_coefficients_guarded(coeffs: &ApCoefficients, guard: f64) -> Result<f64> {
    let sum = coeffs.normalization_sum();
    if sum.abs() <= guard {
        return Err(Error::DegenerateCoefficients { sum, guard });
    }
    let moment: f64 = coeffs
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| (i + 1) as f64 * w)
        .sum();
    Ok(2.0 * moment / sum)
}

/// Filter output `y(n) = r(n)^T w`.
pub fn predict_output(coeffs: &ApCoefficients, reg: &RegressorSet) -> Result<f64> {
    if coeffs.k_max() != reg.len() {
        return Err(Error::invalid(format!(
            "{} coefficients but {} regressors",
            coeffs.k_max(),
            reg.len()
        )));
    }
    Ok(dot(coeffs.weights(), &reg.residual))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
