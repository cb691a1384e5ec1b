use crate::allpass::RegressorSet;
use crate::baselines::{sensor1_window, EtdeState, SunState};
use crate::error::{Error, Result};
use crate::harness::config::{Algorithm, ExperimentConfig};
use crate::naap::{NaapState, StepOutput, StepRule};
use crate::seed::derive_seed;
use crate::signal::{make_sensor_pair, SensorPair};

/// Per-sample record of one estimator run over one realization.
///
/// Entry `i` of every sequence belongs to sample `start + i`. The estimators
/// need `K` samples of history and `K` of lookahead, so a complete run covers
/// `[K, record_length - K)`. A divergent run stops at the offending sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub start: usize,
    pub errors: Vec<f64>,
    pub delays: Vec<f64>,
    /// Row-major `len x weight_width` weight trajectory, when recorded.
    pub weights: Option<Vec<f64>>,
    pub weight_width: usize,
    /// Sample index at which the divergence detector fired.
    pub divergence: Option<usize>,
    pub noise_variance: f64,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    /// Sample index one past the last recorded entry.
    pub fn end(&self) -> usize {
        self.start + self.len()
    }

    /// Squared error `J(n) = e(n)^2`.
    pub fn squared_errors(&self) -> Vec<f64> {
        self.errors.iter().map(|e| e * e).collect()
    }

    /// Weights recorded after the update at sample `start + i`.
    pub fn weights_at(&self, i: usize) -> Option<&[f64]> {
        let w = self.weights.as_ref()?;
        w.get(i * self.weight_width..(i + 1) * self.weight_width)
    }
}

enum Estimator {
    AllPass(NaapState, RegressorSet),
    Etde(EtdeState),
    Sun(SunState),
}

impl Estimator {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let k = config.k_max;
        Ok(match config.algorithm {
            Algorithm::Naap => Estimator::AllPass(
                NaapState::new(k, StepRule::naap(config.rate, config.epsilon())?)?,
                RegressorSet::with_order(k),
            ),
            Algorithm::Aap => Estimator::AllPass(
                NaapState::new(k, StepRule::aap(config.rate)?)?,
                RegressorSet::with_order(k),
            ),
            Algorithm::Etde => {
                Estimator::Etde(EtdeState::with_delay(config.rate, k, k as f64 / 2.0)?)
            }
            Algorithm::Sun => Estimator::Sun(SunState::new(config.rate, k)?),
        })
    }

    fn weight_width(&self) -> usize {
        match self {
            Estimator::AllPass(s, _) => s.weights().k_max(),
            Estimator::Etde(_) => 0,
            Estimator::Sun(s) => s.weights().len(),
        }
    }

    fn step(&mut self, pair: &SensorPair, n: usize) -> Result<StepOutput> {
        let s1 = pair.sensor1.samples();
        let s2 = pair.sensor2.samples();
        match self {
            Estimator::AllPass(state, reg) => {
                reg.refill(s1, s2, n)?;
                state.step(reg).map_err(|e| match e {
                    Error::Divergence { .. } => Error::Divergence { index: n },
                    other => other,
                })
            }
            Estimator::Etde(state) => {
                let p = state.half_width();
                state.step(sensor1_window(s1, n, p)?, s2[n], n)
            }
            Estimator::Sun(state) => {
                let p = state.half_width();
                state.step(sensor1_window(s1, n, p)?, s2[n], n)
            }
        }
    }

    fn weights(&self) -> &[f64] {
        match self {
            Estimator::AllPass(s, _) => s.weights().weights(),
            Estimator::Etde(_) => &[],
            Estimator::Sun(s) => s.weights(),
        }
    }
}

/// Seed of realization `index` under `base_seed`.
pub fn realization_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(base_seed, index as u64)
}

/// Generates realization `index` of `config` and runs its estimator over it.
pub fn run_realization(config: &ExperimentConfig, index: usize) -> Result<RunTrace> {
    config.validate()?;
    let pair = make_sensor_pair(
        config.record_length,
        config.bandwidth,
        config.profile()?,
        config.snr_db,
        realization_seed(config.base_seed, index),
    )?;
    run_on_pair(config, &pair)
}

/// Runs the configured estimator over an existing sensor pair.
pub fn run_on_pair(config: &ExperimentConfig, pair: &SensorPair) -> Result<RunTrace> {
    let len = pair.sensor1.len();
    if pair.sensor2.len() != len {
        return Err(Error::invalid("sensor streams differ in length"));
    }
    let k = config.k_max;
    if len <= 2 * k {
        return Err(Error::invalid(format!(
            "record of length {len} too short for k_max {k}"
        )));
    }
    let mut est = Estimator::new(config)?;
    let width = est.weight_width();
    let (start, end) = (k, len - k);
    let cap = end - start;
    let mut trace = RunTrace {
        algorithm: config.algorithm,
        start,
        errors: Vec::with_capacity(cap),
        delays: Vec::with_capacity(cap),
        weights: (config.record_weights && width > 0).then(|| Vec::with_capacity(cap * width)),
        weight_width: width,
        divergence: None,
        noise_variance: pair.noise_variance,
    };
    for n in start..end {
        match est.step(pair, n) {
            Ok(out) => {
                trace.errors.push(out.error);
                trace.delays.push(out.delay);
                if let Some(w) = trace.weights.as_mut() {
                    w.extend_from_slice(est.weights());
                }
            }
            Err(Error::Divergence { .. }) => {
                trace.divergence = Some(n);
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(trace)
}
