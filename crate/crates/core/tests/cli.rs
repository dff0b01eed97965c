use std::path::Path;
use std::process::{Command, Output};

fn msis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msis"))
        .args(args)
        .env_remove("MSIS_SEED")
        .output()
        .unwrap()
}

fn small_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    let text = format!(
        "family = custom\nexperiment_id = flat/exit\nepsilon = 0.5\ndelta = 0.1\nn_paths = 2000\n\
         estimators = theta0\nslow = linear\nmode = exit\nx0 = 0\nx_minus = -0.5\nx_plus = 0.5\ndt = 1e-3\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn preset_prints_a_parseable_config() {
    let out = msis(&[
        "preset",
        "--table",
        "1",
        "--row",
        "3",
        "--scale-n",
        "1e-3",
        "--seed",
        "5",
        "--print-config",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let spec = multiscale_is::parse_config(&text).unwrap();
    assert_eq!(
        (spec.epsilon, spec.delta, spec.n_paths, spec.master_seed),
        (0.063, 0.016, 10_000, 5)
    );
}

#[test]
fn over_budget_runs_exit_with_code_two() {
    let out = msis(&["preset", "--table", "1", "--row", "7", "--scale-n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing to run"));
}

#[test]
fn bad_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "colour = blue\n");
    let out = msis(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 13"));
}

#[test]
fn run_writes_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let csv = dir.path().join("out.csv");
    let plot = dir.path().join("plot.csv");
    let out = msis(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--workers",
        "2",
        "--out",
        csv.to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = multiscale_is::experiment::read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].n, 2000);
    let plot_text = std::fs::read_to_string(&plot).unwrap();
    assert!(plot_text
        .starts_with("group,experiment_id,epsilon,estimator,re_mean,mean\nflat,flat/exit,"));

    let merged = dir.path().join("merged.csv");
    let out = msis(&[
        "plot",
        csv.to_str().unwrap(),
        csv.to_str().unwrap(),
        "--plot-data",
        merged.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&merged).unwrap().lines().count(), 3);
}

#[test]
fn seed_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let run = |env_seed: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_msis"));
        cmd.args(["run", "--config", cfg.to_str().unwrap()]);
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        match env_seed {
            Some(s) => cmd.env("MSIS_SEED", s),
            None => cmd.env_remove("MSIS_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        text.lines()
            .last()
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(run(Some("41"), None), "41");
    assert_eq!(run(Some("41"), Some("42")), "42");
}
