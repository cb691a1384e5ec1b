//! `tvd`: synthetic delay-estimation experiments from the command line.
//!
//! Exit status: 0 on success, 1 on I/O or other runtime errors, 2 on
//! configuration errors, 3 when a campaign loses every realization.

mod charts;
mod reproduce;
mod svg;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tvd_core::csv::parse_num;
use tvd_core::harness::output::{
    write_campaign_dir, write_file, write_meta, write_sweep, META_FILE, SWEEP_FILE, TRACE_FILE,
};
use tvd_core::harness::{
    learning_rate_sweep, made_curve, realization_seed, run_campaign, run_realization,
    time_avg_made, Algorithm, ExperimentConfig,
};
use tvd_core::signal::make_sensor_pair;
use tvd_core::Error;

use crate::reproduce::Target;

#[derive(Parser, Debug)]
#[command(
    name = "tvd",
    version,
    about = "Time-varying delay estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one synthetic sensor pair and its delay profile.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Realization index whose seed is used.
        #[arg(long, default_value_t = 0)]
        realization: usize,
        /// Also write little-endian binary streams.
        #[arg(long)]
        binary: bool,
        #[arg(long, default_value = "tvd-out")]
        out: PathBuf,
    },
    /// Run one realization and write its per-sample trace.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        realization: usize,
        #[arg(long, default_value = "tvd-out")]
        out: PathBuf,
    },
    /// Run a Monte Carlo campaign and write ensemble curves.
    Campaign {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "tvd-out")]
        out: PathBuf,
        /// Also write an SVG line chart per curve.
        #[arg(long)]
        svg: bool,
    },
    /// Time-averaged MADE over a list of learning rates.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated ascending rates; defaults to a grid for the algorithm.
        #[arg(long, value_delimiter = ',')]
        rates: Vec<String>,
        #[arg(long, default_value = "tvd-out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Regenerate one of the reference figures or tables.
    Reproduce {
        #[arg(long, value_enum)]
        target: Target,
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to `results/<target>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
}

/// Experiment settings: defaults, then `--config`, then the named flags, then `--set`.
#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// `key = value` file, e.g. a `campaign.meta` from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// naap, aap, etde or sun.
    #[arg(long)]
    algorithm: Option<String>,
    /// rho for naap, mu otherwise.
    #[arg(long)]
    rate: Option<String>,
    /// Per-stream SNR in dB, or `inf`.
    #[arg(long)]
    snr_db: Option<String>,
    /// constant, small or large.
    #[arg(long)]
    scenario: Option<String>,
    /// Constant delay, or the initial delay of a step scenario.
    #[arg(long)]
    delay: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    /// Record length in samples.
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    /// Base seed.
    #[arg(long)]
    seed: Option<String>,
    /// Any config key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// A config together with the keys the user supplied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub explicit: BTreeSet<String>,
}

impl ConfigArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 9] {
        [
            ("algorithm", &self.algorithm),
            ("rate", &self.rate),
            ("snr_db", &self.snr_db),
            ("scenario", &self.scenario),
            ("delay", &self.delay),
            ("k_max", &self.k_max),
            ("record_length", &self.length),
            ("n_realizations", &self.realizations),
            ("base_seed", &self.seed),
        ]
    }

    fn resolve(&self) -> Result<Resolved, Failure> {
        let mut config = ExperimentConfig::default();
        let mut explicit = BTreeSet::new();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::Config(format!("config: cannot read {}: {e}", path.display()))
            })?;
            config.apply_key_values(&text).map_err(Failure::config)?;
            explicit.extend(keys_in(&text));
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                config.set(key, v).map_err(Failure::config)?;
                explicit.insert(key.to_string());
            }
        }
        for item in &self.set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
            config.set(key, value).map_err(Failure::config)?;
            explicit.insert(key.trim().to_string());
        }
        Ok(Resolved { config, explicit })
    }
}

fn keys_in(text: &str) -> impl Iterator<Item = String> + '_ {
    text.lines().filter_map(|l| {
        let line = l.split('#').next()?.trim();
        line.split_once('=').map(|(k, _)| k.trim().to_string())
    })
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Campaign(String),
    Runtime(String),
}

impl Failure {
    pub fn config(e: Error) -> Self {
        Failure::Config(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Campaign(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CampaignFailed { .. } => Failure::Campaign(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Campaign(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn validated(resolved: &Resolved) -> Result<ExperimentConfig, Failure> {
    resolved.config.validate().map_err(Failure::config)?;
    Ok(resolved.config.clone())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TVD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Failure::Config(format!(
            "TVD_THREADS must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn generate(
    resolved: &Resolved,
    realization: usize,
    binary: bool,
    out: &Path,
) -> Result<(), Failure> {
    // Estimator and metric keys do not matter here, so skip the full validation.
    let cfg = resolved.config.clone();
    let seed = realization_seed(cfg.base_seed, realization);
    let profile = cfg.profile().map_err(Failure::config)?;
    let pair = make_sensor_pair(cfg.record_length, cfg.bandwidth, profile, cfg.snr_db, seed)
        .map_err(Failure::config)?;
    fs::create_dir_all(out)?;
    pair.sensor1.save_csv(out.join("sensor1.csv"))?;
    pair.sensor2.save_csv(out.join("sensor2.csv"))?;
    pair.profile.save_csv(out.join("delay.csv"))?;
    if binary {
        pair.sensor1.save_binary(out.join("sensor1.bin"))?;
        pair.sensor2.save_binary(out.join("sensor2.bin"))?;
    }
    let notes = vec![
        format!("realization {realization}, seed {seed}"),
        format!("noise_variance {:e}", pair.noise_variance),
    ];
    write_file(&out.join(META_FILE), |w| write_meta(w, &cfg, &notes))?;
    println!(
        "wrote {} samples per stream to {}",
        cfg.record_length,
        out.display()
    );
    Ok(())
}

fn run(resolved: &Resolved, realization: usize, out: &Path) -> Result<(), Failure> {
    let cfg = validated(resolved)?;
    let trace = run_realization(&cfg, realization)?;
    let notes = vec![format!(
        "single realization {realization}, seed {}",
        realization_seed(cfg.base_seed, realization)
    )];
    write_file(&out.join(META_FILE), |w| write_meta(w, &cfg, &notes))?;
    write_file(&out.join(TRACE_FILE), |w| {
        tvd_core::harness::output::write_trace(w, &trace)
    })?;
    if let Some(n) = trace.divergence {
        return Err(Failure::Campaign(format!(
            "realization {realization} diverged at sample {n}; partial trace written"
        )));
    }
    let made = made_curve(&trace, &cfg.profile()?)?;
    let (from, to) = cfg.metric_window();
    let avg = time_avg_made(&made, from.max(made.start), to.min(made.end()))?;
    println!(
        "{} rate {}: time-averaged MADE {avg:.6}",
        cfg.algorithm, cfg.rate
    );
    Ok(())
}

fn campaign(resolved: &Resolved, out: &Path, svg: bool) -> Result<(), Failure> {
    let cfg = validated(resolved)?;
    let summary = run_campaign(&cfg)?;
    write_campaign_dir(out, &summary, &[])?;
    if svg {
        charts::campaign_charts(out, &summary)?;
    }
    println!(
        "{} rate {} ({} scenario, {} dB): time-averaged MADE {:.6}, {}/{} diverged",
        cfg.algorithm,
        cfg.rate,
        cfg.scenario,
        cfg.snr_db,
        summary.time_avg_made,
        summary.realizations_diverged,
        cfg.n_realizations
    );
    Ok(())
}

/// Learning-rate grid used when `--rates` is absent.
pub fn default_rates(algorithm: Algorithm) -> &'static [f64] {
    match algorithm {
        Algorithm::Naap => &[0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3],
        Algorithm::Aap => &[1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2],
        Algorithm::Etde => &[0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
        Algorithm::Sun => &[0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128],
    }
}

fn sweep(resolved: &Resolved, rates: &[String], out: &Path, svg: bool) -> Result<(), Failure> {
    let cfg = validated(resolved)?;
    let rates: Vec<f64> = if rates.is_empty() {
        default_rates(cfg.algorithm).to_vec()
    } else {
        rates
            .iter()
            .map(|r| {
                parse_num(r.trim())
                    .map_err(|_| Failure::Config(format!("rates: `{r}` is not a number")))
            })
            .collect::<Result<_, _>>()?
    };
    for &rate in &rates {
        ExperimentConfig {
            rate,
            ..cfg.clone()
        }
        .validate()
        .map_err(Failure::config)?;
    }
    let points = learning_rate_sweep(&cfg, &rates).map_err(|e| match e {
        Error::InvalidArgument(m) => Failure::Config(format!("rates: {m}")),
        other => other.into(),
    })?;
    let notes = vec![format!(
        "sweep over rates {}; the rate key below is unused",
        rates
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )];
    write_file(&out.join(META_FILE), |w| write_meta(w, &cfg, &notes))?;
    write_file(&out.join(SWEEP_FILE), |w| write_sweep(w, &points))?;
    if svg {
        let chart = charts::sweep_chart(cfg.algorithm, &points);
        write_text(&out.join("sweep.svg"), &chart.render())?;
    }
    for p in &points {
        let made = p
            .time_avg_made
            .map_or("-".to_string(), |m| format!("{m:.6}"));
        println!(
            "rate {:<8} MADE {made:<10} {}",
            p.rate,
            if p.unstable { "unstable" } else { "" }
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Generate {
            config,
            realization,
            binary,
            out,
        } => generate(&config.resolve()?, realization, binary, &out),
        Command::Run {
            config,
            realization,
            out,
        } => run(&config.resolve()?, realization, &out),
        Command::Campaign { config, out, svg } => campaign(&config.resolve()?, &out, svg),
        Command::Sweep {
            config,
            rates,
            out,
            svg,
        } => sweep(&config.resolve()?, &rates, &out, svg),
        Command::Reproduce {
            target,
            config,
            out,
            svg,
        } => {
            let out = out.unwrap_or_else(|| Path::new("results").join(target.name()));
            reproduce::reproduce(target, &config.resolve()?, &out, svg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tvd: {e}");
            ExitCode::from(e.code())
        }
    }
}
