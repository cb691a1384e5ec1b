use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::{DelayProfile, DelayStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Naap,
    Aap,
    Etde,
    Sun,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Naap,
        Algorithm::Aap,
        Algorithm::Etde,
        Algorithm::Sun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naap => "naap",
            Algorithm::Aap => "aap",
            Algorithm::Etde => "etde",
            Algorithm::Sun => "sun",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown algorithm `{s}`")))
    }
}

/// Ground-truth delay scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Constant,
    /// Steps of +0.75 then -1.50 samples.
    Small,
    /// Steps of +2.50 then -5.00 samples.
    Large,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Constant => "constant",
            Scenario::Small => "small",
            Scenario::Large => "large",
        }
    }

    /// Delay increments applied at the two step indices.
    pub fn step_changes(self) -> Option<(f64, f64)> {
        match self {
            Scenario::Constant => None,
            Scenario::Small => Some((0.75, -1.50)),
            Scenario::Large => Some((2.50, -5.00)),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(Scenario::Constant),
            "small" => Ok(Scenario::Small),
            "large" => Ok(Scenario::Large),
            _ => Err(Error::Parse(format!("unknown scenario `{s}`"))),
        }
    }
}

/// One Monte Carlo experiment. Every field has a default; see [`ExperimentConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Filter order `K`; also the half-width `P` of the baseline windows.
    pub k_max: usize,
    /// `rho` for NAAP, `mu` otherwise.
    pub rate: f64,
    /// NAAP regulariser; `None` means `1e-6 * K`.
    pub epsilon: Option<f64>,
    pub record_length: usize,
    pub bandwidth: f64,
    /// Per-stream SNR; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub scenario: Scenario,
    /// Constant delay, or the initial delay of a step scenario.
    pub delay: f64,
    pub step1_index: usize,
    pub step2_index: usize,
    pub n_realizations: usize,
    pub base_seed: u64,
    /// Samples excluded from the start of time-averaged metrics.
    pub burn_in: usize,
    /// Samples excluded from both record edges in every metric.
    pub edge_trim: usize,
    pub record_weights: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Naap,
            k_max: 7,
            rate: 0.01,
            epsilon: None,
            record_length: 6000,
            bandwidth: FRAC_PI_2,
            snr_db: 20.0,
            scenario: Scenario::Small,
            delay: 3.85,
            step1_index: 2000,
            step2_index: 4000,
            n_realizations: 100,
            base_seed: 1,
            burn_in: 500,
            edge_trim: 64,
            record_weights: false,
        }
    }
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 16] = [
        "algorithm",
        "k_max",
        "rate",
        "epsilon",
        "record_length",
        "bandwidth",
        "snr_db",
        "scenario",
        "delay",
        "step1_index",
        "step2_index",
        "n_realizations",
        "base_seed",
        "burn_in",
        "edge_trim",
        "record_weights",
    ];

    pub fn profile(&self) -> Result<DelayProfile> {
        let profile = match self.scenario.step_changes() {
            None => DelayProfile::constant(self.delay, self.record_length),
            Some((first, second)) => DelayProfile::piecewise(
                self.delay,
                vec![
                    DelayStep {
                        index: self.step1_index,
                        delay: self.delay + first,
                    },
                    DelayStep {
                        index: self.step2_index,
                        delay: self.delay + first + second,
                    },
                ],
                self.record_length,
            ),
        };
        profile.map_err(|e| match e {
            Error::InvalidArgument(msg) if self.scenario == Scenario::Constant => {
                Error::invalid(format!("delay/record_length: {msg}"))
            }
            Error::InvalidArgument(msg) => {
                Error::invalid(format!("step1_index/step2_index/record_length: {msg}"))
            }
            other => other,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
            .unwrap_or_else(|| crate::naap::default_epsilon(self.k_max))
    }

    /// Half-open sample range `[from, to)` used by time-averaged metrics.
    pub fn metric_window(&self) -> (usize, usize) {
        (
            self.burn_in.max(self.edge_trim),
            self.record_length.saturating_sub(self.edge_trim),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid(format!(
                "rate must be positive, got {}",
                self.rate
            )));
        }
        if self.algorithm == Algorithm::Naap && self.rate >= 1.0 / 3.0 {
            return Err(Error::invalid(format!(
                "rate (rho) must satisfy 0 < rho < 1/3 for naap, got {}",
                self.rate
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid(format!(
                    "epsilon must be positive, got {eps}"
                )));
            }
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations must be at least 1"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth <= std::f64::consts::PI) {
            return Err(Error::invalid(format!(
                "bandwidth must lie in (0, pi], got {}",
                self.bandwidth
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!(
                "snr_db {} is not usable",
                self.snr_db
            )));
        }
        if self.record_length <= 2 * self.k_max + 1 {
            return Err(Error::invalid(format!(
                "record_length {} too short for k_max {}",
                self.record_length, self.k_max
            )));
        }
        if self.scenario != Scenario::Constant && self.step1_index >= self.step2_index {
            return Err(Error::invalid("step1_index must precede step2_index"));
        }
        let (from, to) = self.metric_window();
        if from >= to {
            return Err(Error::invalid(format!(
                "metric window [{from}, {to}) is empty; reduce burn_in or edge_trim"
            )));
        }
        self.profile()?
            .validate_for(self.k_max)
            .map_err(|e| match e {
                Error::InvalidArgument(msg) => {
                    Error::invalid(format!("delay/scenario incompatible with k_max: {msg}"))
                }
                other => other,
            })
    }

    /// Sets one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad =
            |what: &str| Error::Parse(format!("invalid value `{value}` for key `{key}` ({what})"));
        match key.trim() {
            "algorithm" => self.algorithm = value.parse()?,
            "k_max" => self.k_max = value.parse().map_err(|_| bad("integer"))?,
            "rate" => self.rate = parse_real(value).ok_or_else(|| bad("number"))?,
            "epsilon" => {
                self.epsilon = if value.eq_ignore_ascii_case("default") {
                    None
                } else {
                    Some(parse_real(value).ok_or_else(|| bad("number or `default`"))?)
                }
            }
            "record_length" => self.record_length = value.parse().map_err(|_| bad("integer"))?,
            "bandwidth" => self.bandwidth = parse_real(value).ok_or_else(|| bad("number"))?,
            "snr_db" => self.snr_db = parse_real(value).ok_or_else(|| bad("number or `inf`"))?,
            "scenario" => self.scenario = value.parse()?,
            "delay" => self.delay = parse_real(value).ok_or_else(|| bad("number"))?,
            "step1_index" => self.step1_index = value.parse().map_err(|_| bad("integer"))?,
            "step2_index" => self.step2_index = value.parse().map_err(|_| bad("integer"))?,
            "n_realizations" => self.n_realizations = value.parse().map_err(|_| bad("integer"))?,
            "base_seed" => self.base_seed = value.parse().map_err(|_| bad("integer"))?,
            "burn_in" => self.burn_in = value.parse().map_err(|_| bad("integer"))?,
            "edge_trim" => self.edge_trim = value.parse().map_err(|_| bad("integer"))?,
            "record_weights" => {
                self.record_weights = value.parse().map_err(|_| bad("true/false"))?
            }
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_key_values(text)?;
        Ok(cfg)
    }

    /// Value of `key` as written by [`ExperimentConfig::to_key_values`].
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "algorithm" => self.algorithm.to_string(),
            "k_max" => self.k_max.to_string(),
            "rate" => fmt_real(self.rate),
            "epsilon" => self.epsilon.map_or_else(|| "default".to_string(), fmt_real),
            "record_length" => self.record_length.to_string(),
            "bandwidth" => fmt_real(self.bandwidth),
            "snr_db" => fmt_real(self.snr_db),
            "scenario" => self.scenario.to_string(),
            "delay" => fmt_real(self.delay),
            "step1_index" => self.step1_index.to_string(),
            "step2_index" => self.step2_index.to_string(),
            "n_realizations" => self.n_realizations.to_string(),
            "base_seed" => self.base_seed.to_string(),
            "burn_in" => self.burn_in.to_string(),
            "edge_trim" => self.edge_trim.to_string(),
            "record_weights" => self.record_weights.to_string(),
            _ => return None,
        })
    }

    /// Every key, one `key = value` per line, in [`ExperimentConfig::KEYS`] order.
    pub fn to_key_values(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k} = {}\n", self.get(k).unwrap_or_default()))
            .collect()
    }
}

fn parse_real(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        other => other.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Shortest representation that parses back to the same value.
fn fmt_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}
