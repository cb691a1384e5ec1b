use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::run::{run_realization, RunTrace};
use crate::signal::DelayProfile;

/// A per-sample curve whose first entry belongs to sample `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub start: usize,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn end(&self) -> usize {
        self.start + self.values.len()
    }

    pub fn at(&self, n: usize) -> Option<f64> {
        n.checked_sub(self.start)
            .and_then(|i| self.values.get(i).copied())
    }
}

/// Pointwise `|tau_hat(n) - tau(n)|` for one trace.
pub fn made_curve(trace: &RunTrace, profile: &DelayProfile) -> Result<Curve> {
    if trace.end() > profile.len() {
        return Err(Error::invalid(format!(
            "trace reaches sample {} but profile has {} samples",
            trace.end(),
            profile.len()
        )));
    }
    let truth = profile.delays();
    Ok(Curve {
        start: trace.start,
        values: trace
            .delays
            .iter()
            .zip(&truth[trace.start..])
            .map(|(est, tau)| (est - tau).abs())
            .collect(),
    })
}

/// Ensemble average of [`made_curve`] over equally long traces, in order.
pub fn ensemble_made_curve(traces: &[&RunTrace], profile: &DelayProfile) -> Result<Curve> {
    let curves = traces
        .iter()
        .map(|t| made_curve(t, profile))
        .collect::<Result<Vec<_>>>()?;
    average_curves(&curves)
}

fn average_curves(curves: &[Curve]) -> Result<Curve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("no curves to average"))?;
    if curves
        .iter()
        .any(|c| c.start != first.start || c.values.len() != first.values.len())
    {
        return Err(Error::invalid("curves are misaligned"));
    }
    let mut acc = vec![0.0; first.values.len()];
    for c in curves {
        for (a, v) in acc.iter_mut().zip(&c.values) {
            *a += v;
        }
    }
    let n = curves.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(Curve {
        start: first.start,
        values: acc,
    })
}

/// Mean of `curve` over samples `[from, to)`.
pub fn time_avg_made(curve: &Curve, from: usize, to: usize) -> Result<f64> {
    if from < curve.start || to > curve.end() || from >= to {
        return Err(Error::invalid(format!(
            "window [{from}, {to}) is not inside curve samples [{}, {})",
            curve.start,
            curve.end()
        )));
    }
    let slice = &curve.values[from - curve.start..to - curve.start];
    Ok(slice.iter().sum::<f64>() / slice.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub config: ExperimentConfig,
    /// Ensemble-average squared error.
    pub mse: Curve,
    /// Ensemble-average absolute delay error.
    pub made: Curve,
    /// Ensemble-average delay estimate.
    pub delay_mean: Curve,
    /// Row-major `len x weight_width` ensemble mean and SD of the weights.
    pub weight_mean: Option<Vec<f64>>,
    pub weight_sd: Option<Vec<f64>>,
    pub weight_width: usize,
    pub time_avg_made: f64,
    pub instability_fraction: f64,
    pub realizations_used: usize,
    pub realizations_diverged: usize,
}

impl CampaignSummary {
    /// Ensemble-mean weights at sample `n`.
    pub fn weight_mean_at(&self, n: usize) -> Option<&[f64]> {
        slice_row(
            self.weight_mean.as_ref()?,
            self.made.start,
            self.weight_width,
            n,
        )
    }

    pub fn weight_sd_at(&self, n: usize) -> Option<&[f64]> {
        slice_row(
            self.weight_sd.as_ref()?,
            self.made.start,
            self.weight_width,
            n,
        )
    }
}

fn slice_row(data: &[f64], start: usize, width: usize, n: usize) -> Option<&[f64]> {
    let i = n.checked_sub(start)?;
    data.get(i * width..(i + 1) * width)
}

/// Runs every realization (in parallel) and aggregates in ascending index order.
pub fn run_campaign(config: &ExperimentConfig) -> Result<CampaignSummary> {
    config.validate()?;
    let traces = (0..config.n_realizations)
        .into_par_iter()
        .map(|i| run_realization(config, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(config, &traces)
}

/// Aggregates traces produced for `config`. Divergent traces only count
/// towards the instability fraction.
pub fn summarize(config: &ExperimentConfig, traces: &[RunTrace]) -> Result<CampaignSummary> {
    if traces.is_empty() {
        return Err(Error::invalid("no traces to summarize"));
    }
    let profile = config.profile()?;
    let used: Vec<&RunTrace> = traces.iter().filter(|t| !t.diverged()).collect();
    let diverged = traces.len() - used.len();
    if used.is_empty() {
        return Err(Error::CampaignFailed {
            realizations: traces.len(),
        });
    }
    let made = ensemble_made_curve(&used, &profile)?;
    let mse = average_curves(
        &used
            .iter()
            .map(|t| Curve {
                start: t.start,
                values: t.squared_errors(),
            })
            .collect::<Vec<_>>(),
    )?;
    let delay_mean = average_curves(
        &used
            .iter()
            .map(|t| Curve {
                start: t.start,
                values: t.delays.clone(),
            })
            .collect::<Vec<_>>(),
    )?;
    let width = used[0].weight_width;
    let (weight_mean, weight_sd) = if used.iter().all(|t| t.weights.is_some()) && width > 0 {
        let (m, s) = weight_moments(&used);
        (Some(m), Some(s))
    } else {
        (None, None)
    };
    let (from, to) = config.metric_window();
    let from = from.max(made.start);
    let to = to.min(made.end());
    Ok(CampaignSummary {
        config: config.clone(),
        time_avg_made: time_avg_made(&made, from, to)?,
        mse,
        made,
        delay_mean,
        weight_mean,
        weight_sd,
        weight_width: width,
        instability_fraction: diverged as f64 / traces.len() as f64,
        realizations_used: used.len(),
        realizations_diverged: diverged,
    })
}

fn weight_moments(traces: &[&RunTrace]) -> (Vec<f64>, Vec<f64>) {
    let len = traces[0].weights.as_ref().map_or(0, Vec::len);
    let n = traces.len() as f64;
    let mut mean = vec![0.0; len];
    for t in traces {
        for (m, w) in mean.iter_mut().zip(t.weights.iter().flatten()) {
            *m += w;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; len];
    for t in traces {
        for ((v, w), m) in var.iter_mut().zip(t.weights.iter().flatten()).zip(&mean) {
            *v += (w - m) * (w - m);
        }
    }
    let denom = if traces.len() > 1 { n - 1.0 } else { 1.0 };
    let sd = var.into_iter().map(|v| (v / denom).sqrt()).collect();
    (mean, sd)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub rate: f64,
    /// `None` when every realization diverged.
    pub time_avg_made: Option<f64>,
    pub instability_fraction: f64,
    pub unstable: bool,
}

/// Fraction of divergent realizations above which a rate is marked unstable.
pub const UNSTABLE_FRACTION: f64 = 0.5;

/// One campaign per rate (ascending, positive).
pub fn learning_rate_sweep(config: &ExperimentConfig, rates: &[f64]) -> Result<Vec<SweepPoint>> {
    if rates.is_empty() {
        return Err(Error::invalid("no learning rates given"));
    }
    if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("learning rates must be positive"));
    }
    if rates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("learning rates must be strictly ascending"));
    }
    rates
        .iter()
        .map(|&rate| {
            let cfg = ExperimentConfig {
                rate,
                ..config.clone()
            };
            match run_campaign(&cfg) {
                Ok(s) => Ok(SweepPoint {
                    rate,
                    time_avg_made: Some(s.time_avg_made),
                    instability_fraction: s.instability_fraction,
                    unstable: s.instability_fraction > UNSTABLE_FRACTION,
                }),
                Err(Error::CampaignFailed { .. }) => Ok(SweepPoint {
                    rate,
                    time_avg_made: None,
                    instability_fraction: 1.0,
                    unstable: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
