use std::path::Path;

use tvd_core::harness::{Algorithm, CampaignSummary, Curve, SweepPoint};

use crate::svg::{Chart, Series};
use crate::{write_text, Failure};

fn points(curve: &Curve) -> Vec<(f64, f64)> {
    curve
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| ((curve.start + i) as f64, *v))
        .collect()
}

fn truth_points(summary: &CampaignSummary) -> Result<Vec<(f64, f64)>, Failure> {
    let profile = summary.config.profile()?;
    let c = &summary.delay_mean;
    Ok((c.start..c.end())
        .map(|n| (n as f64, profile.delay_at(n)))
        .collect())
}

fn chart(title: &str, y_label: &str, series: Vec<Series>) -> Chart {
    Chart {
        title: title.into(),
        x_label: "sample n".into(),
        y_label: y_label.into(),
        log_x: false,
        series,
    }
}

/// Overlay of one curve across several campaigns, labelled by algorithm.
pub fn compare(
    title: &str,
    y_label: &str,
    runs: &[CampaignSummary],
    pick: fn(&CampaignSummary) -> &Curve,
) -> Chart {
    let series = runs
        .iter()
        .map(|s| Series::new(s.config.algorithm.name(), points(pick(s))))
        .collect();
    chart(title, y_label, series)
}

/// Mean delay estimates of several campaigns over the true delay.
pub fn compare_delay(title: &str, runs: &[CampaignSummary]) -> Result<Chart, Failure> {
    let mut c = compare(title, "delay (samples)", runs, |s| &s.delay_mean);
    if let Some(first) = runs.first() {
        c.series
            .insert(0, Series::new("true", truth_points(first)?));
    }
    Ok(c)
}

/// Ensemble-mean weight trajectories, with mean +/- 2 SD bands when available.
pub fn weights_chart(summary: &CampaignSummary) -> Option<Chart> {
    let start = summary.made.start;
    let len = summary.made.values.len();
    summary.weight_mean.as_ref()?;
    let mut series = Vec::new();
    for k in 0..summary.weight_width {
        let row = |n: usize, sign: f64| {
            let m = summary.weight_mean_at(n).map_or(f64::NAN, |w| w[k]);
            let s = summary.weight_sd_at(n).map_or(0.0, |w| w[k]);
            (n as f64, m + sign * 2.0 * s)
        };
        series.push(Series::new(
            format!("w{}", k + 1),
            (start..start + len).map(|n| row(n, 0.0)).collect(),
        ));
        if summary.weight_sd.is_some() {
            series.push(Series::new(
                format!("w{} +2sd", k + 1),
                (start..start + len).map(|n| row(n, 1.0)).collect(),
            ));
            series.push(Series::new(
                format!("w{} -2sd", k + 1),
                (start..start + len).map(|n| row(n, -1.0)).collect(),
            ));
        }
    }
    Some(chart("Average filter weights", "weight", series))
}

/// `made.svg`, `mse.svg`, `delay.svg` and, with recorded weights, `weights.svg`.
pub fn campaign_charts(dir: &Path, summary: &CampaignSummary) -> Result<(), Failure> {
    let runs = std::slice::from_ref(summary);
    write_text(
        &dir.join("made.svg"),
        &compare("Mean absolute delay error", "MADE (samples)", runs, |s| {
            &s.made
        })
        .render(),
    )?;
    write_text(
        &dir.join("mse.svg"),
        &compare("Mean square error", "MSE", runs, |s| &s.mse).render(),
    )?;
    let delay = compare_delay("Average delay estimate", runs)?;
    write_text(&dir.join("delay.svg"), &delay.render())?;
    if let Some(c) = weights_chart(summary) {
        write_text(&dir.join("weights.svg"), &c.render())?;
    }
    Ok(())
}

/// Time-averaged MADE against rate on a log axis; unstable rates get a `*` marker.
pub fn sweep_chart(algorithm: Algorithm, points: &[SweepPoint]) -> Chart {
    let mut s = Series::new(
        algorithm.name(),
        points
            .iter()
            .map(|p| (p.rate, p.time_avg_made.unwrap_or(f64::NAN)))
            .collect(),
    );
    // An all-divergent rate has no MADE; put its marker at the last finite value.
    let mut last = None;
    for p in points {
        if let Some(m) = p.time_avg_made {
            last = Some(m);
        }
        if p.unstable {
            if let Some(y) = p.time_avg_made.or(last) {
                s.markers.push((p.rate, y));
            }
        }
    }
    Chart {
        title: format!("Learning-rate sweep: {algorithm}"),
        x_label: "learning rate".into(),
        y_label: "time-averaged MADE (samples)".into(),
        log_x: true,
        series: vec![s],
    }
}
