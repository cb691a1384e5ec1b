//! One-command regeneration of the reference figures and tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;

use tvd_core::csv::fmt_num;
use tvd_core::harness::output::{
    summary_row, write_campaign_dir, write_file, write_meta, write_sweep, META_FILE, SUMMARY_FILE,
    SUMMARY_HEADER,
};
use tvd_core::harness::{
    learning_rate_sweep, run_campaign, Algorithm, CampaignSummary, Curve, ExperimentConfig,
    Scenario,
};
use tvd_core::Error;

use crate::charts;
use crate::{default_rates, write_text, Failure, Resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Fig1,
    Fig2,
    Fig3,
    Table1,
    #[value(name = "sweep_small")]
    SweepSmall,
    #[value(name = "sweep_large")]
    SweepLarge,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Fig1 => "fig1",
            Target::Fig2 => "fig2",
            Target::Fig3 => "fig3",
            Target::Table1 => "table1",
            Target::SweepSmall => "sweep_small",
            Target::SweepLarge => "sweep_large",
        }
    }

    fn description(self) -> &'static str {
        match self {
            Target::Fig1 => "Average evolution of the NAAP filter weights for K=3 and a constant delay of 2 samples.",
            Target::Fig2 => "Convergence (MSE and mean absolute delay error) of NAAP, ETDE and Sun for a constant delay of 5.85 samples.",
            Target::Fig3 => "Average delay estimate and mean absolute delay error in the large step scenario at 20 dB.",
            Target::Table1 => "Time-averaged mean absolute delay error for 3 algorithms x 2 step scenarios x 4 SNRs.",
            Target::SweepSmall => "Time-averaged mean absolute delay error against learning rate, small step scenario.",
            Target::SweepLarge => "Time-averaged mean absolute delay error against learning rate, large step scenario.",
        }
    }
}

type Pairs = &'static [(&'static str, &'static str)];

/// Parameters a target pins, states, defaults itself, or varies across its campaigns.
struct Plan {
    /// Always applied; user values for these keys are ignored.
    fixed: Pairs,
    /// Applied unless the user set the key.
    stated: Pairs,
    /// Target-specific choices for unstated keys, applied unless the user set the key.
    defaults: Pairs,
    /// Key and a description of the values the target iterates over.
    varied: Pairs,
}

const HALF_PI: &str = "1.5707963267948966";
const STATED: Pairs = &[("n_realizations", "100"), ("bandwidth", HALF_PI)];
const RUNS_FIG2: [(Algorithm, f64); 3] = [
    (Algorithm::Naap, 0.08),
    (Algorithm::Etde, 0.04),
    (Algorithm::Sun, 0.02),
];
const RUNS_FIG3: [(Algorithm, f64); 3] = [
    (Algorithm::Naap, 0.01),
    (Algorithm::Etde, 0.02),
    (Algorithm::Sun, 0.008),
];
const SNRS: [f64; 4] = [5.0, 10.0, 20.0, 30.0];
const COMPARED: [Algorithm; 3] = [Algorithm::Naap, Algorithm::Etde, Algorithm::Sun];

fn plan(target: Target) -> Plan {
    let varied_rates: Pairs = &[
        ("algorithm", "naap, etde, sun"),
        ("rate", "naap 0.01, etde 0.02, sun 0.008"),
    ];
    let swept: Pairs = &[
        ("algorithm", "naap, etde, sun"),
        ("rate", "per-algorithm grid, see the sweep CSVs"),
    ];
    match target {
        Target::Fig1 => Plan {
            fixed: &[
                ("algorithm", "naap"),
                ("k_max", "3"),
                ("scenario", "constant"),
                ("delay", "2"),
                ("record_weights", "true"),
            ],
            stated: STATED,
            defaults: &[("rate", "0.01"), ("snr_db", "30")],
            varied: &[],
        },
        Target::Fig2 => Plan {
            fixed: &[("k_max", "7"), ("scenario", "constant"), ("delay", "5.85")],
            stated: STATED,
            defaults: &[],
            varied: &[
                ("algorithm", "naap, etde, sun"),
                ("rate", "naap 0.08, etde 0.04, sun 0.02"),
            ],
        },
        Target::Fig3 => Plan {
            fixed: &[
                ("k_max", "7"),
                ("scenario", "large"),
                ("delay", "3.85"),
                ("snr_db", "20"),
            ],
            stated: STATED,
            defaults: &[],
            varied: varied_rates,
        },
        Target::Table1 => Plan {
            fixed: &[("k_max", "7"), ("delay", "3.85")],
            stated: STATED,
            defaults: &[],
            varied: &[
                ("algorithm", "naap, etde, sun"),
                ("rate", "naap 0.01, etde 0.02, sun 0.008"),
                ("scenario", "small, large"),
                ("snr_db", "5, 10, 20, 30"),
            ],
        },
        Target::SweepSmall => Plan {
            fixed: &[("k_max", "7"), ("scenario", "small"), ("delay", "3.85")],
            stated: STATED,
            defaults: &[],
            varied: swept,
        },
        Target::SweepLarge => Plan {
            fixed: &[("k_max", "7"), ("scenario", "large"), ("delay", "3.85")],
            stated: STATED,
            defaults: &[],
            varied: swept,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Fixed { ignored_user: bool },
    Stated,
    StatedOverridden,
    TargetDefault,
    HarnessDefault,
    User,
    Varied(&'static str),
}

impl Source {
    fn label(&self) -> String {
        match self {
            Source::Fixed {
                ignored_user: false,
            } => "fixed by target".into(),
            Source::Fixed { ignored_user: true } => "fixed by target (user value ignored)".into(),
            Source::Stated => "stated".into(),
            Source::StatedOverridden => "stated value overridden by user".into(),
            Source::TargetDefault => "defaulted (target choice)".into(),
            Source::HarnessDefault => "defaulted (harness)".into(),
            Source::User => "user".into(),
            Source::Varied(d) => format!("varied: {d}"),
        }
    }

    fn defaulted(&self) -> bool {
        matches!(self, Source::TargetDefault | Source::HarnessDefault)
    }
}

fn set(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), Failure> {
    cfg.set(key, value)
        .map_err(|e| Failure::Runtime(e.to_string()))
}

/// Base config of a target and where each of its values came from.
fn resolve(
    plan: &Plan,
    user: &Resolved,
) -> Result<(ExperimentConfig, BTreeMap<&'static str, Source>), Failure> {
    let mut cfg = user.config.clone();
    let explicit = |k: &str| user.explicit.contains(k);
    let mut sources: BTreeMap<&'static str, Source> = ExperimentConfig::KEYS
        .iter()
        .map(|&k| {
            (
                k,
                if explicit(k) {
                    Source::User
                } else {
                    Source::HarnessDefault
                },
            )
        })
        .collect();
    for &(k, v) in plan.defaults {
        if !explicit(k) {
            set(&mut cfg, k, v)?;
            sources.insert(k, Source::TargetDefault);
        }
    }
    for &(k, v) in plan.stated {
        if explicit(k) {
            sources.insert(k, Source::StatedOverridden);
        } else {
            set(&mut cfg, k, v)?;
            sources.insert(k, Source::Stated);
        }
    }
    for &(k, v) in plan.fixed {
        set(&mut cfg, k, v)?;
        sources.insert(
            k,
            Source::Fixed {
                ignored_user: explicit(k),
            },
        );
    }
    for &(k, d) in plan.varied {
        sources.insert(k, Source::Varied(d));
    }
    Ok((cfg, sources))
}

fn readme(
    target: Target,
    cfg: &ExperimentConfig,
    sources: &BTreeMap<&str, Source>,
    files: &[(&str, &str)],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n\n{}\n", target.name(), target.description());
    let _ = writeln!(
        s,
        "## Parameters\n\n| key | value | source |\n|---|---|---|"
    );
    for &k in &ExperimentConfig::KEYS {
        let src = &sources[k];
        let value = match src {
            Source::Varied(_) => "-".to_string(),
            _ => cfg.get(k).unwrap_or_default(),
        };
        let _ = writeln!(s, "| {k} | {value} | {} |", src.label());
    }
    let defaulted: Vec<String> = ExperimentConfig::KEYS
        .iter()
        .filter(|k| sources[**k].defaulted())
        .map(|k| format!("- {k} = {}", cfg.get(k).unwrap_or_default()))
        .collect();
    let _ = writeln!(s, "\n## Defaulted parameters\n");
    if defaulted.is_empty() {
        let _ = writeln!(s, "None.");
    } else {
        let _ = writeln!(s, "{}", defaulted.join("\n"));
    }
    let _ = writeln!(s, "\n## Estimator settings\n");
    let _ = writeln!(
        s,
        "- NAAP regulariser epsilon: {} (1e-6 * K unless set)",
        fmt_num(cfg.epsilon())
    );
    let _ = writeln!(s, "- ETDE initial delay: K/2");
    let _ = writeln!(s, "- Sun initial weights: zero");
    let _ = writeln!(s, "- NAAP/AAP initial weights: zero");
    let _ = writeln!(s, "\n## Files\n");
    for (name, what) in files {
        let _ = writeln!(s, "- `{name}`: {what}");
    }
    s
}

fn campaign(cfg: &ExperimentConfig) -> Result<CampaignSummary, Failure> {
    cfg.validate().map_err(Failure::config)?;
    let s = run_campaign(cfg).map_err(|e| match e {
        Error::CampaignFailed { .. } => Failure::Campaign(format!(
            "{} rate {} ({} scenario, {} dB): {e}",
            cfg.algorithm, cfg.rate, cfg.scenario, cfg.snr_db
        )),
        other => other.into(),
    })?;
    println!(
        "{:<5} rate {:<6} {:<8} {:>4} dB  MADE {:.4}  diverged {}/{}",
        cfg.algorithm.name(),
        cfg.rate,
        cfg.scenario.name(),
        cfg.snr_db,
        s.time_avg_made,
        s.realizations_diverged,
        cfg.n_realizations
    );
    Ok(s)
}

fn with(cfg: &ExperimentConfig, algorithm: Algorithm, rate: f64) -> ExperimentConfig {
    ExperimentConfig {
        algorithm,
        rate,
        ..cfg.clone()
    }
}

/// `n[,tau],<alg>...` with one column per campaign.
fn write_combined(
    path: &Path,
    runs: &[CampaignSummary],
    pick: fn(&CampaignSummary) -> &Curve,
    with_truth: bool,
) -> Result<(), Failure> {
    let first = pick(&runs[0]);
    let truth = runs[0].config.profile()?;
    write_file(path, |w| {
        write!(w, "n")?;
        if with_truth {
            write!(w, ",tau")?;
        }
        for r in runs {
            write!(w, ",{}", r.config.algorithm)?;
        }
        writeln!(w)?;
        for n in first.start..first.end() {
            write!(w, "{n}")?;
            if with_truth {
                write!(w, ",{}", fmt_num(truth.delay_at(n)))?;
            }
            for r in runs {
                let v = pick(r).at(n).map(fmt_num).unwrap_or_default();
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(())
}

fn note(target: Target) -> Vec<String> {
    vec![format!("reproduce target {}", target.name())]
}

fn fig1(cfg: &ExperimentConfig, out: &Path, svg: bool) -> Result<(), Failure> {
    let s = campaign(cfg)?;
    write_campaign_dir(out, &s, &note(Target::Fig1))?;
    write_file(&out.join("weights.csv"), |w| {
        write!(w, "n")?;
        for k in 1..=s.weight_width {
            write!(w, ",w_mean_{k}")?;
        }
        for k in 1..=s.weight_width {
            write!(w, ",w_sd_{k}")?;
        }
        writeln!(w)?;
        for n in s.made.start..s.made.end() {
            write!(w, "{n}")?;
            for v in s
                .weight_mean_at(n)
                .into_iter()
                .flatten()
                .chain(s.weight_sd_at(n).into_iter().flatten())
            {
                write!(w, ",{}", fmt_num(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    if let Some(last) = s.weight_mean_at(s.made.end() - 1) {
        let shown: Vec<String> = last.iter().map(|v| format!("{v:.4}")).collect();
        println!("final mean weights: [{}]", shown.join(", "));
    }
    if svg {
        if let Some(c) = charts::weights_chart(&s) {
            write_text(&out.join("weights.svg"), &c.render())?;
        }
    }
    Ok(())
}

fn comparison(
    target: Target,
    cfg: &ExperimentConfig,
    runs: &[(Algorithm, f64)],
    out: &Path,
    svg: bool,
) -> Result<Vec<CampaignSummary>, Failure> {
    let mut done = Vec::new();
    for &(alg, rate) in runs {
        let s = campaign(&with(cfg, alg, rate))?;
        write_campaign_dir(&out.join(alg.name()), &s, &note(target))?;
        done.push(s);
    }
    write_combined(&out.join("made.csv"), &done, |s| &s.made, false)?;
    if svg {
        let c = charts::compare("Mean absolute delay error", "MADE (samples)", &done, |s| {
            &s.made
        });
        write_text(&out.join("made.svg"), &c.render())?;
    }
    Ok(done)
}

fn fig2(cfg: &ExperimentConfig, out: &Path, svg: bool) -> Result<(), Failure> {
    let runs = comparison(Target::Fig2, cfg, &RUNS_FIG2, out, svg)?;
    write_combined(&out.join("mse.csv"), &runs, |s| &s.mse, false)?;
    if svg {
        let c = charts::compare("Mean square error", "MSE", &runs, |s| &s.mse);
        write_text(&out.join("mse.svg"), &c.render())?;
    }
    Ok(())
}

fn fig3(cfg: &ExperimentConfig, out: &Path, svg: bool) -> Result<(), Failure> {
    let runs = comparison(Target::Fig3, cfg, &RUNS_FIG3, out, svg)?;
    write_combined(&out.join("delay.csv"), &runs, |s| &s.delay_mean, true)?;
    if svg {
        let c = charts::compare_delay("Average delay estimate", &runs)?;
        write_text(&out.join("delay.svg"), &c.render())?;
    }
    Ok(())
}

fn table1(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let mut rows = Vec::new();
    let mut grid: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
    for (si, scenario) in [Scenario::Small, Scenario::Large].into_iter().enumerate() {
        for (ai, &(alg, rate)) in RUNS_FIG3.iter().enumerate() {
            for snr_db in SNRS {
                let c = ExperimentConfig {
                    scenario,
                    snr_db,
                    ..with(cfg, alg, rate)
                };
                let (row, cell) = match campaign(&c) {
                    Ok(s) => (summary_row(&s), fmt_num(s.time_avg_made)),
                    Err(Failure::Campaign(m)) => {
                        eprintln!("tvd: {m}");
                        (
                            format!(
                                "{alg},{},{},{scenario},,{}",
                                fmt_num(rate),
                                fmt_num(snr_db),
                                fmt_num(1.0)
                            ),
                            String::new(),
                        )
                    }
                    Err(e) => return Err(e),
                };
                rows.push(row);
                grid.entry((si, ai)).or_default().push(cell);
            }
        }
    }
    write_meta_only(cfg, out, Target::Table1)?;
    write_file(&out.join(SUMMARY_FILE), |w| {
        writeln!(w, "{SUMMARY_HEADER}")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })?;
    write_file(&out.join("table.csv"), |w| {
        writeln!(w, "scenario,algorithm,snr_5db,snr_10db,snr_20db,snr_30db")?;
        for ((si, ai), cells) in &grid {
            let scenario = [Scenario::Small, Scenario::Large][*si];
            writeln!(w, "{scenario},{},{}", COMPARED[*ai], cells.join(","))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn write_meta_only(cfg: &ExperimentConfig, out: &Path, target: Target) -> Result<(), Failure> {
    let mut notes = note(target);
    notes.push(
        "base configuration; algorithm, rate and other varied keys are set per campaign".into(),
    );
    write_file(&out.join(META_FILE), |w| write_meta(w, cfg, &notes))?;
    Ok(())
}

fn sweeps(target: Target, cfg: &ExperimentConfig, out: &Path, svg: bool) -> Result<(), Failure> {
    write_meta_only(cfg, out, target)?;
    for alg in COMPARED {
        let c = with(cfg, alg, default_rates(alg)[0]);
        c.validate().map_err(Failure::config)?;
        let points = learning_rate_sweep(&c, default_rates(alg))?;
        for p in &points {
            let made = p.time_avg_made.map_or("-".into(), |m| format!("{m:.4}"));
            println!(
                "{:<5} rate {:<6} MADE {made:<8} {}",
                alg.name(),
                p.rate,
                if p.unstable { "unstable" } else { "" }
            );
        }
        write_file(&out.join(format!("{alg}_sweep.csv")), |w| {
            write_sweep(w, &points)
        })?;
        if svg {
            write_text(
                &out.join(format!("{alg}_sweep.svg")),
                &charts::sweep_chart(alg, &points).render(),
            )?;
        }
    }
    Ok(())
}

fn files(target: Target, svg: bool) -> Vec<(&'static str, &'static str)> {
    let campaign_dirs =
        "`naap/`, `etde/`, `sun/`: per-algorithm campaign.meta, curves.csv, summary.csv";
    let mut f = match target {
        Target::Fig1 => vec![
            (
                "weights.csv",
                "n, ensemble-mean weights w_mean_k and their SDs w_sd_k",
            ),
            (
                "curves.csv",
                "n, tau, tau_hat_mean, mse, made and the weight columns",
            ),
            ("summary.csv", "time-averaged MADE and instability fraction"),
            (
                "campaign.meta",
                "resolved configuration, usable with --config",
            ),
        ],
        Target::Fig2 => vec![
            ("mse.csv", "n and ensemble MSE per algorithm"),
            ("made.csv", "n and mean absolute delay error per algorithm"),
            ("naap/ etde/ sun/", campaign_dirs),
        ],
        Target::Fig3 => vec![
            (
                "delay.csv",
                "n, true delay and ensemble-mean delay estimate per algorithm",
            ),
            ("made.csv", "n and mean absolute delay error per algorithm"),
            ("naap/ etde/ sun/", campaign_dirs),
        ],
        Target::Table1 => vec![
            (
                "table.csv",
                "time-averaged MADE, one row per scenario and algorithm, one column per SNR",
            ),
            (
                "summary.csv",
                "the same grid in long form with instability fractions",
            ),
            ("campaign.meta", "base configuration"),
        ],
        Target::SweepSmall | Target::SweepLarge => vec![
            (
                "naap_sweep.csv, etde_sweep.csv, sun_sweep.csv",
                "rate, time_avg_made, unstable (more than half of the realizations diverged)",
            ),
            ("campaign.meta", "base configuration"),
        ],
    };
    if svg {
        f.push(("*.svg", "line charts of the CSV curves"));
    }
    f
}

pub fn reproduce(target: Target, user: &Resolved, out: &Path, svg: bool) -> Result<(), Failure> {
    let (cfg, sources) = resolve(&plan(target), user)?;
    cfg.validate().map_err(Failure::config)?;
    std::fs::create_dir_all(out)?;
    write_text(
        &out.join("README"),
        &readme(target, &cfg, &sources, &files(target, svg)),
    )?;
    match target {
        Target::Fig1 => fig1(&cfg, out, svg),
        Target::Fig2 => fig2(&cfg, out, svg),
        Target::Fig3 => fig3(&cfg, out, svg),
        Target::Table1 => table1(&cfg, out),
        Target::SweepSmall | Target::SweepLarge => sweeps(target, &cfg, out, svg),
    }?;
    println!("wrote {}", out.display());
    Ok(())
}
