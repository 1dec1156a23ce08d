use std::path::Path;
use std::process::{Command, Output};

fn ucal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucal")).args(args).output().expect("binary runs")
}

fn ucal_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucal"))
        .args(args)
        .env("UCAL_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn ftl_alternating_row() {
    let o = ucal(&[
        "run", "--forecaster", "ftl", "--adversary", "alternating", "--loss", "vshaped", "--K", "2", "--T", "10000",
        "--trials", "1", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "experiment,forecaster,adversary,loss,K,T,trial,seed,regret");
    assert_eq!(lines[1], "run,ftl,alternating,vshaped,2,10000,0,1,2500");
    assert_eq!(lines.len(), 2);
}

#[test]
fn static_mean_has_zero_regret() {
    let o = ucal(&[
        "run", "--forecaster", "static:0.5,0.5", "--adversary", "alternating", "--loss", "squared", "--K", "2", "--T",
        "100", "--trials", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let regret: f64 = out.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(regret.abs() < 1e-9);
}

#[test]
fn missing_k_is_usage_error() {
    let o = ucal(&["run", "--forecaster", "ftl", "--adversary", "alternating", "--loss", "vshaped", "--T", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--K"));
}

#[test]
fn unknown_components_are_usage_errors() {
    for (f, a, l) in [("hedge", "iid", "vshaped"), ("ftl", "chaos", "vshaped"), ("ftl", "iid", "log")] {
        let o = ucal(&["run", "--forecaster", f, "--adversary", a, "--loss", l, "--K", "2", "--T", "10"]);
        assert_eq!(o.status.code(), Some(2), "{f} {a} {l}");
    }
    assert_eq!(ucal(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_fails() {
    let o = ucal(&[
        "run", "--forecaster", "ftl", "--adversary", "iid", "--loss", "vshaped", "--K", "2", "--T", "10", "--output",
        "/nonexistent-dir/out.csv",
    ]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn csv_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "run".to_string(),
            "--forecaster=ftpl".into(),
            "--adversary=iid".into(),
            "--loss=vshaped,squared:0.5,spherical,tsallis:1.5".into(),
            "--K=3".into(),
            "--T=300".into(),
            "--trials=24".into(),
            "--seed=7".into(),
            format!("--output={}", p.display()),
        ]
    };
    let run = |p: &Path, threads: &str| {
        let args = args(p);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = ucal_env(&refs, threads);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("pucal="));
    };
    run(&a, "1");
    run(&b, "4");
    let body = read(&a);
    assert_eq!(body, read(&b));
    assert_eq!(body.lines().count(), 1 + 24 * 4);
    // rows sorted by (trial, loss)
    let trials: Vec<usize> = body.lines().skip(1).map(|l| l.split(',').nth(6).unwrap().parse().unwrap()).collect();
    assert!(trials.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("seq.txt"), "1 2 2 1 1 2").unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(
        &cfg,
        "experiment = demo\nforecaster = ftl\nadversary = fixed:seq.txt\nloss = vshaped\nK = 2\nT = 6\nseed = 3\n",
    )
    .unwrap();
    let o = ucal(&["run", "--config", cfg.to_str().unwrap(), "--T", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().starts_with("demo,ftl,fixed,vshaped,2,4,0,3,"));

    let o = ucal(&["run", "--config", cfg.to_str().unwrap(), "--T", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_emits_every_horizon() {
    let o = ucal(&[
        "sweep", "--forecaster", "ftpl", "--adversary", "iid", "--loss", "vshaped", "--K", "2", "--T", "256", "--t-min",
        "32", "--trials", "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut horizons: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(5).unwrap()).collect();
    horizons.dedup();
    assert_eq!(horizons, ["32", "64", "128", "256"]);
}

#[test]
fn minimax_values() {
    let o = ucal(&["minimax", "--T", "1", "--mode", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("dp value 0.5\n") && out.contains("closed value 0.5\n"), "{out}");

    assert_eq!(ucal(&["minimax", "--T", "512", "--mode", "both"]).status.code(), Some(0));
    assert_eq!(ucal(&["minimax", "--T", "1000000", "--mode", "closed", "--check-bounds"]).status.code(), Some(0));
    assert_eq!(ucal(&["minimax", "--T", "5000", "--mode", "dp"]).status.code(), Some(2));
}

#[test]
fn minimax_sandwich_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sandwich.csv");
    let o = ucal(&["minimax", "--T", "100", "--mode", "closed", "--check-bounds", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let body = read(&path);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("r,u_r,v_r,a_r,upper_bound,lower_bound"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][3], 0.01);
    for row in &rows {
        assert!(row[5] <= row[3] && row[3] <= row[4] + 1e-12);
    }
}

#[test]
fn validate_losses() {
    let o = ucal(&["validate", "--loss", "tsallis", "--alpha", "1.5", "--K", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = ucal(&["validate", "--loss", "spherical", "--K", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let g: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("lipschitz estimate "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(g <= 2.0, "{g}");

    assert_eq!(ucal(&["validate", "--loss", "tsallis", "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(ucal(&["validate", "--loss", "entropy"]).status.code(), Some(2));
    assert_eq!(ucal(&["validate", "--loss", "squared", "--scale", "0.5", "--K", "2"]).status.code(), Some(0));
}
