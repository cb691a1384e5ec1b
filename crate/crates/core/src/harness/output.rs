//! CSV and metadata writers for harness results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::csv::fmt_num;
use crate::error::Result;
use crate::harness::campaign::{CampaignSummary, SweepPoint};
use crate::harness::config::{Algorithm, ExperimentConfig};
use crate::harness::run::RunTrace;

pub const META_FILE: &str = "campaign.meta";
pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const TRACE_FILE: &str = "trace.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Resolved config as `key = value` lines; `notes` become leading `#` comments.
pub fn write_meta<W: Write>(mut w: W, config: &ExperimentConfig, notes: &[String]) -> Result<()> {
    for note in notes {
        writeln!(w, "# {note}")?;
    }
    w.write_all(config.to_key_values().as_bytes())?;
    Ok(())
}

/// Per-step trace rows.
///
/// All-pass runs use `n,e,tau_hat,w1..wK`; baseline runs use
/// `n,e,tau_hat,algorithm`.
pub fn write_trace<W: Write>(mut w: W, trace: &RunTrace) -> Result<()> {
    let allpass = matches!(trace.algorithm, Algorithm::Naap | Algorithm::Aap);
    if allpass {
        write!(w, "n,e,tau_hat")?;
        for k in 1..=trace.weight_width {
            write!(w, ",w{k}")?;
        }
        writeln!(w)?;
    } else {
        writeln!(w, "n,e,tau_hat,algorithm")?;
    }
    for i in 0..trace.len() {
        write!(
            w,
            "{},{},{}",
            trace.start + i,
            fmt_num(trace.errors[i]),
            fmt_num(trace.delays[i])
        )?;
        if allpass {
            match trace.weights_at(i) {
                Some(ws) => {
                    for v in ws {
                        write!(w, ",{}", fmt_num(*v))?;
                    }
                }
                None => {
                    for _ in 0..trace.weight_width {
                        write!(w, ",")?;
                    }
                }
            }
        } else {
            write!(w, ",{}", trace.algorithm)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `n,tau,tau_hat_mean,mse,made[,w_mean_k,w_sd_k...]`
pub fn write_curves<W: Write>(mut w: W, summary: &CampaignSummary) -> Result<()> {
    let weights = summary.weight_mean.is_some() && summary.weight_sd.is_some();
    let truth = summary.config.profile()?;
    write!(w, "n,tau,tau_hat_mean,mse,made")?;
    if weights {
        for k in 1..=summary.weight_width {
            write!(w, ",w_mean_{k},w_sd_{k}")?;
        }
    }
    writeln!(w)?;
    for (i, (mse, made)) in summary
        .mse
        .values
        .iter()
        .zip(&summary.made.values)
        .enumerate()
    {
        let n = summary.made.start + i;
        let tau_hat = summary.delay_mean.at(n).unwrap_or(f64::NAN);
        write!(
            w,
            "{n},{},{},{},{}",
            fmt_num(truth.delay_at(n)),
            fmt_num(tau_hat),
            fmt_num(*mse),
            fmt_num(*made)
        )?;
        if weights {
            if let (Some(m), Some(s)) = (summary.weight_mean_at(n), summary.weight_sd_at(n)) {
                for (a, b) in m.iter().zip(s) {
                    write!(w, ",{},{}", fmt_num(*a), fmt_num(*b))?;
                }
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str =
    "algorithm,rate,snr_db,scenario,time_avg_made,instability_fraction";

pub fn summary_row(summary: &CampaignSummary) -> String {
    let c = &summary.config;
    format!(
        "{},{},{},{},{},{}",
        c.algorithm,
        fmt_num(c.rate),
        fmt_snr(c.snr_db),
        c.scenario,
        fmt_num(summary.time_avg_made),
        fmt_num(summary.instability_fraction)
    )
}

fn fmt_snr(snr: f64) -> String {
    if snr.is_finite() {
        fmt_num(snr)
    } else {
        "none".into()
    }
}

pub fn write_summary<W: Write>(mut w: W, summaries: &[CampaignSummary]) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(w, "{}", summary_row(s))?;
    }
    Ok(())
}

/// `rate,time_avg_made,unstable`; the MADE field is empty when no realization survived.
pub fn write_sweep<W: Write>(mut w: W, points: &[SweepPoint]) -> Result<()> {
    writeln!(w, "rate,time_avg_made,unstable")?;
    for p in points {
        writeln!(
            w,
            "{},{},{}",
            fmt_num(p.rate),
            p.time_avg_made.map(fmt_num).unwrap_or_default(),
            p.unstable
        )?;
    }
    Ok(())
}

/// Writes `campaign.meta`, `curves.csv` and `summary.csv` into `dir`.
pub fn write_campaign_dir(dir: &Path, summary: &CampaignSummary, notes: &[String]) -> Result<()> {
    let mut meta = create(&dir.join(META_FILE))?;
    write_meta(&mut meta, &summary.config, notes)?;
    meta.flush()?;
    let mut curves = create(&dir.join(CURVES_FILE))?;
    write_curves(&mut curves, summary)?;
    curves.flush()?;
    let mut s = create(&dir.join(SUMMARY_FILE))?;
    write_summary(&mut s, std::slice::from_ref(summary))?;
    s.flush()?;
    Ok(())
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
