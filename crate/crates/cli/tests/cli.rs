use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tvd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvd"))
        .args(args)
        .current_dir(dir)
        .env_remove("TVD_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = tvd(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

/// Header plus rows, every row with the header's field count.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "{r:?}");
    }
    (header, rows)
}

#[test]
fn naap_rate_bound_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tvd(&["run", "--algorithm", "naap", "--rate", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rate"), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.meta"), "rate = 0.01\nstep_size = 3\n").unwrap();
    for (args, key) in [
        (vec!["reproduce", "--target", "fig9"], "fig9"),
        (
            vec!["campaign", "--set", "learning_rate=0.1"],
            "learning_rate",
        ),
        (vec!["campaign", "--scenario", "huge"], "huge"),
        (vec!["campaign", "--config", "bad.meta"], "step_size"),
        (vec!["campaign", "--config", "missing.meta"], "missing.meta"),
        (vec!["campaign", "--set", "burn_in=6000"], "burn_in"),
        (vec!["sweep", "--rates", "0.02,0.01"], "rates"),
        (vec!["sweep", "--rates", "0.1,0.5"], "rate"),
    ] {
        let out = tvd(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(key), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tvd"))
        .args(["campaign", "--realizations", "1"])
        .current_dir(dir.path())
        .env("TVD_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("TVD_THREADS"));
}

#[test]
fn all_divergent_campaign_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = tvd(
        &[
            "campaign",
            "--algorithm",
            "sun",
            "--rate",
            "5",
            "--realizations",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn meta_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "campaign",
            "--algorithm",
            "etde",
            "--rate",
            "0.03",
            "--scenario",
            "large",
            "--snr-db",
            "10",
            "--realizations",
            "6",
            "--seed",
            "42",
            "--set",
            "record_weights=true",
            "--out",
            "a",
        ],
        d,
    );
    ok(
        &["campaign", "--config", "a/campaign.meta", "--out", "b"],
        d,
    );
    for f in ["campaign.meta", "curves.csv", "summary.csv"] {
        assert_eq!(read(d.join("a").join(f)), read(d.join("b").join(f)), "{f}");
    }
    let meta = read(d.join("a/campaign.meta"));
    for line in [
        "algorithm = etde",
        "rate = 0.03",
        "scenario = large",
        "snr_db = 10",
        "base_seed = 42",
    ] {
        assert!(meta.contains(line), "{line}");
    }
    let (header, rows) = csv_rows(&read(d.join("a/curves.csv")));
    assert_eq!(header, ["n", "tau", "tau_hat_mean", "mse", "made"]);
    assert_eq!(rows.len(), 6000 - 14);
}

#[test]
fn campaign_output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_tvd"))
            .args(["campaign", "--realizations", "7", "--out", threads])
            .current_dir(dir.path())
            .env("TVD_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        read(dir.path().join("1/curves.csv")),
        read(dir.path().join("3/curves.csv"))
    );
}

#[test]
fn generate_writes_streams_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "generate",
            "--length",
            "800",
            "--scenario",
            "constant",
            "--delay",
            "2.5",
            "--binary",
            "--out",
            "g",
        ],
        d,
    );
    for f in ["sensor1.csv", "sensor2.csv"] {
        let (header, rows) = csv_rows(&read(d.join("g").join(f)));
        assert_eq!(header, ["value"]);
        assert_eq!(rows.len(), 800);
    }
    let (header, rows) = csv_rows(&read(d.join("g/delay.csv")));
    assert_eq!(header, ["index", "delay"]);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 2.5));
    assert_eq!(
        fs::metadata(d.join("g/sensor1.bin")).unwrap().len(),
        8 + 8 * 800
    );
    assert!(read(d.join("g/campaign.meta")).contains("# noise_variance"));
}

#[test]
fn run_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(
        &["run", "--algorithm", "sun", "--rate", "0.008", "--out", "r"],
        d,
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("time-averaged MADE"));
    let (header, rows) = csv_rows(&read(d.join("r/trace.csv")));
    assert_eq!(header, ["n", "e", "tau_hat", "algorithm"]);
    assert_eq!(rows[0][0], "7");
    assert_eq!(rows.len(), 6000 - 14);
}

#[test]
fn sweep_marks_unstable_rates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "sweep",
            "--algorithm",
            "sun",
            "--rates",
            "0.004,0.5",
            "--realizations",
            "4",
            "--svg",
            "--out",
            "s",
        ],
        d,
    );
    let (header, rows) = csv_rows(&read(d.join("s/sweep.csv")));
    assert_eq!(header, ["rate", "time_avg_made", "unstable"]);
    assert_eq!(rows[0][2], "false");
    assert!(rows[0][1].parse::<f64>().unwrap() < 1.0);
    assert_eq!(rows[1][2], "true");
    assert!(read(d.join("s/sweep.svg")).contains("<svg"));
}

#[test]
fn fig1_emits_weight_trajectories_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(
            &[
                "reproduce",
                "--target",
                "fig1",
                "--realizations",
                "10",
                "--svg",
                "--out",
                out,
            ],
            d,
        );
    }
    for f in [
        "weights.csv",
        "curves.csv",
        "summary.csv",
        "campaign.meta",
        "README",
        "weights.svg",
    ] {
        assert_eq!(read(d.join("a").join(f)), read(d.join("b").join(f)), "{f}");
    }
    let (header, rows) = csv_rows(&read(d.join("a/weights.csv")));
    assert_eq!(
        header,
        ["n", "w_mean_1", "w_mean_2", "w_mean_3", "w_sd_1", "w_sd_2", "w_sd_3"]
    );
    let last: Vec<f64> = rows.last().unwrap()[1..4]
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    for (w, want) in last.iter().zip([0.0, 1.0, 0.0]) {
        assert!((w - want).abs() < 0.05, "{last:?}");
    }
    let readme = read(d.join("a/README"));
    let defaulted = readme.split("## Defaulted parameters").nth(1).unwrap();
    assert!(defaulted.contains("snr_db = 30"));
    assert!(defaulted.contains("record_length = 6000"));
    assert!(readme.contains("| n_realizations | 10 | stated value overridden by user |"));
    assert!(readme.contains("| k_max | 3 | fixed by target |"));
}

#[test]
fn fig3_etde_loses_the_large_step() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "reproduce",
            "--target",
            "fig3",
            "--realizations",
            "20",
            "--out",
            "f3",
        ],
        d,
    );
    let (header, rows) = csv_rows(&read(d.join("f3/delay.csv")));
    assert_eq!(header, ["n", "tau", "naap", "etde", "sun"]);
    let err = |col: usize| {
        let seg: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| (5000..5900).contains(&r[0].parse::<usize>().unwrap()))
            .collect();
        seg.iter()
            .map(|r| (r[col].parse::<f64>().unwrap() - r[1].parse::<f64>().unwrap()).abs())
            .sum::<f64>()
            / seg.len() as f64
    };
    assert!(err(2) < 0.5, "naap {}", err(2));
    assert!(err(3) > 2.0, "etde {}", err(3));
    assert!(err(4) < 0.5, "sun {}", err(4));
    for alg in ["naap", "etde", "sun"] {
        assert!(d.join("f3").join(alg).join("campaign.meta").exists());
    }
    csv_rows(&read(d.join("f3/made.csv")));
}

#[test]
fn fig2_writes_combined_curves() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "reproduce",
            "--target",
            "fig2",
            "--realizations",
            "5",
            "--svg",
            "--out",
            "f2",
        ],
        d,
    );
    for f in ["mse.csv", "made.csv"] {
        let (header, rows) = csv_rows(&read(d.join("f2").join(f)));
        assert_eq!(header, ["n", "naap", "etde", "sun"]);
        assert_eq!(rows.len(), 6000 - 14);
    }
    let meta = read(d.join("f2/sun/campaign.meta"));
    assert!(meta.contains("rate = 0.02") && meta.contains("delay = 5.85"));
    assert!(d.join("f2/mse.svg").exists() && d.join("f2/made.svg").exists());
}

#[test]
fn table1_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "reproduce",
            "--target",
            "table1",
            "--realizations",
            "3",
            "--out",
            "t",
        ],
        d,
    );
    let (header, rows) = csv_rows(&read(d.join("t/table.csv")));
    assert_eq!(
        header,
        [
            "scenario",
            "algorithm",
            "snr_5db",
            "snr_10db",
            "snr_20db",
            "snr_30db"
        ]
    );
    let keys: Vec<String> = rows.iter().map(|r| format!("{}/{}", r[0], r[1])).collect();
    assert_eq!(
        keys,
        [
            "small/naap",
            "small/etde",
            "small/sun",
            "large/naap",
            "large/etde",
            "large/sun"
        ]
    );
    let (_, long) = csv_rows(&read(d.join("t/summary.csv")));
    assert_eq!(long.len(), 24);
    assert!(read(d.join("t/README")).contains("| scenario | - | varied: small, large |"));
}

#[test]
fn sweep_targets_write_three_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "reproduce",
            "--target",
            "sweep_small",
            "--realizations",
            "3",
            "--svg",
            "--out",
            "s",
        ],
        d,
    );
    for alg in ["naap", "etde", "sun"] {
        let (header, rows) = csv_rows(&read(d.join("s").join(format!("{alg}_sweep.csv"))));
        assert_eq!(header, ["rate", "time_avg_made", "unstable"]);
        assert!(rows.len() >= 6);
        assert!(d.join("s").join(format!("{alg}_sweep.svg")).exists());
    }
    let (_, sun) = csv_rows(&read(d.join("s/sun_sweep.csv")));
    assert_eq!(sun.last().unwrap()[2], "true");
}

#[test]
fn campaign_svg_charts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "campaign",
            "--realizations",
            "3",
            "--set",
            "record_weights=true",
            "--svg",
            "--out",
            "c",
        ],
        d,
    );
    for f in ["made.svg", "mse.svg", "delay.svg", "weights.svg"] {
        let svg = read(d.join("c").join(f));
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"), "{f}");
    }
}
