//! Subcommand implementations. Each returns `Ok(true)` on success and
//! `Ok(false)` when a check it ran failed.

use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use ucal::engine::{run_trials, CalibrationEstimate, TrialRegrets};
use ucal::losses::{check_hessian_growth, validate_loss, ValidationConfig};
use ucal::minimax::{self, a_lower_bound, a_upper_bound, MAX_DP_HORIZON};
use ucal::report::{fmt_float, RegretRow, REGRET_CSV_HEADER, SANDWICH_CSV_HEADER};
use ucal::{LossKind, ProperLoss, RngStream};

use crate::config::{usage, ExperimentConfig};

/// Writes to `path`, or to stdout when no path is given.
fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

/// Summary lines go to stdout, unless stdout already carries the CSV.
fn summary(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn write_rows(out: &mut dyn Write, cfg: &ExperimentConfig, horizon: usize, trials: &TrialRegrets) -> io::Result<()> {
    for (trial, row) in trials.regrets.iter().enumerate() {
        for (loss, &regret) in trials.loss_ids.iter().zip(row) {
            let line = RegretRow {
                experiment: cfg.experiment.clone(),
                forecaster: cfg.forecaster.name(),
                adversary: cfg.adversary.name(),
                loss: loss.clone(),
                k: cfg.k,
                horizon,
                trial,
                seed: cfg.seed,
                regret,
            };
            writeln!(out, "{}", line.to_csv())?;
        }
    }
    Ok(())
}

fn summary_line(horizon: usize, est: &CalibrationEstimate) -> String {
    format!(
        "T={horizon} trials={} pucal={} ucal={} std_error={} worst_loss={}",
        est.trials,
        fmt_float(est.pucal),
        fmt_float(est.ucal),
        fmt_float(est.std_error),
        est.worst_loss().loss_id
    )
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    cfg.check_sequence_length(cfg.horizon)?;
    let trials = run_trials(&cfg.forecaster, &cfg.adversary, &cfg.losses, cfg.horizon, cfg.trials, cfg.seed)?;
    let mut out = open_output(cfg.output.as_deref())?;
    writeln!(out, "{REGRET_CSV_HEADER}")?;
    write_rows(&mut *out, cfg, cfg.horizon, &trials)?;
    out.flush()?;
    drop(out);
    let est = CalibrationEstimate::from_trials(&trials);
    summary(cfg.output.is_some(), &summary_line(cfg.horizon, &est));
    Ok(true)
}

/// Horizons `t_min, t_min * factor, ...` below `t_max`, then `t_max` itself.
pub fn geometric_grid(t_min: usize, t_max: usize, factor: f64) -> anyhow::Result<Vec<usize>> {
    if t_min < 1 || t_min > t_max {
        return Err(usage(format!("need 1 <= t-min <= T, got t-min={t_min}, T={t_max}")));
    }
    if factor.is_nan() || factor <= 1.0 {
        return Err(usage(format!("sweep factor must exceed 1, got {factor}")));
    }
    let mut grid = Vec::new();
    let mut t = t_min as f64;
    while (t.round() as usize) < t_max {
        let r = t.round() as usize;
        if grid.last() != Some(&r) {
            grid.push(r);
        }
        t *= factor;
    }
    grid.push(t_max);
    Ok(grid)
}

pub fn sweep(cfg: &ExperimentConfig, t_min: usize, factor: f64) -> anyhow::Result<bool> {
    let grid = geometric_grid(t_min, cfg.horizon, factor)?;
    cfg.check_sequence_length(cfg.horizon)?;
    let mut out = open_output(cfg.output.as_deref())?;
    writeln!(out, "{REGRET_CSV_HEADER}")?;
    let mut lines = Vec::new();
    for &t in &grid {
        let trials = run_trials(&cfg.forecaster, &cfg.adversary, &cfg.losses, t, cfg.trials, cfg.seed)?;
        write_rows(&mut *out, cfg, t, &trials)?;
        lines.push(summary_line(t, &CalibrationEstimate::from_trials(&trials)));
    }
    out.flush()?;
    drop(out);
    for line in lines {
        summary(cfg.output.is_some(), &line);
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MinimaxMode {
    Dp,
    Closed,
    Both,
}

pub fn minimax(horizon: usize, mode: MinimaxMode, check_bounds: bool, output: Option<&Path>) -> anyhow::Result<bool> {
    let wants_dp = mode != MinimaxMode::Closed;
    if horizon < 1 {
        return Err(usage("T must be at least 1"));
    }
    if wants_dp && horizon > MAX_DP_HORIZON {
        return Err(usage(format!("dp mode supports T <= {MAX_DP_HORIZON}; use --mode closed")));
    }
    if check_bounds && horizon < 2 {
        return Err(usage("--check-bounds needs T >= 2"));
    }
    let mut ok = true;

    let dp = if wants_dp {
        let tab = minimax::dp_value(horizon)?;
        println!("dp value {}", fmt_float(tab.value));
        if !tab.branches.only_middle() || tab.max_abs_gap > 2.0 + 1e-9 {
            println!(
                "FAIL recurrence left the middle branch: {:?}, max gap {}",
                tab.branches,
                fmt_float(tab.max_abs_gap)
            );
            ok = false;
        }
        Some(tab.value)
    } else {
        None
    };

    let closed = if mode != MinimaxMode::Dp || output.is_some() {
        let cf = minimax::closed_form(horizon)?;
        if mode != MinimaxMode::Dp {
            println!("closed value {}", fmt_float(cf.value));
        }
        Some(cf)
    } else {
        None
    };

    if let (Some(dp), Some(cf)) = (dp, closed.as_ref()) {
        let gap = (dp - cf.value).abs();
        if gap > 1e-8 {
            println!("FAIL dp and closed form disagree by {}", fmt_float(gap));
            ok = false;
        }
    }

    if check_bounds {
        let chk = minimax::check_a_bounds(horizon)?;
        let holds = chk.holds(1e-12);
        println!(
            "{} a_r bounds: upper violation {}, lower violation {}, value {} >= {}",
            if holds { "ok" } else { "FAIL" },
            fmt_float(chk.max_upper_violation),
            fmt_float(chk.max_lower_violation),
            fmt_float(chk.value),
            fmt_float(chk.value_lower_bound)
        );
        ok &= holds;
    }

    if let (Some(path), Some(cf)) = (output, closed.as_ref()) {
        let mut out = open_output(Some(path))?;
        writeln!(out, "{SANDWICH_CSV_HEADER}")?;
        for r in 0..horizon {
            writeln!(
                out,
                "{r},{},{},{},{},{}",
                fmt_float(cf.u[r]),
                fmt_float(cf.v[r]),
                fmt_float(cf.a[r]),
                fmt_float(a_upper_bound(horizon, r)),
                fmt_float(a_lower_bound(horizon, r))
            )?;
        }
        out.flush()?;
    }
    Ok(ok)
}

pub struct ValidateRequest {
    pub loss: String,
    pub alpha: Option<f64>,
    pub scale: Option<f64>,
    pub k: usize,
    pub seed: u64,
}

fn resolve_loss(req: &ValidateRequest) -> anyhow::Result<ProperLoss> {
    let map = |r: ucal::Result<ProperLoss>| r.map_err(|e| usage(e.to_string()));
    match req.loss.as_str() {
        "tsallis" => {
            let alpha = req.alpha.ok_or_else(|| usage("tsallis needs --alpha"))?;
            map(ProperLoss::tsallis(req.k, alpha))
        }
        "squared" => map(ProperLoss::squared(req.k, req.scale.unwrap_or(1.0))),
        spec => crate::config::parse_loss(spec, req.k),
    }
}

pub fn validate(req: &ValidateRequest) -> anyhow::Result<bool> {
    if req.k < 2 {
        return Err(usage(format!("K must be at least 2, got {}", req.k)));
    }
    let loss = resolve_loss(req)?;
    let cfg = ValidationConfig::default();
    let mut rng = RngStream::new(req.seed, 0);
    let report = validate_loss(&loss, &cfg, &mut rng);

    println!("loss {} K={}", loss.label(), req.k);
    let proper = report.properness_violations == 0;
    println!(
        "{} properness: {} violations over {} pairs (max {})",
        if proper { "ok" } else { "FAIL" },
        report.properness_violations,
        report.pairs_checked,
        fmt_float(report.max_violation)
    );
    let concave = report.concavity_violations == 0;
    println!(
        "{} concavity: {} midpoint violations",
        if concave { "ok" } else { "FAIL" },
        report.concavity_violations
    );
    let (lo, hi) = loss.nominal_range();
    let tol = cfg.tol;
    let bounded = report.range_min >= lo - tol && report.range_max <= hi + tol;
    println!(
        "{} range: observed [{}, {}] within [{}, {}] over {} points",
        if bounded { "ok" } else { "FAIL" },
        fmt_float(report.range_min),
        fmt_float(report.range_max),
        fmt_float(lo),
        fmt_float(hi),
        report.points_checked
    );
    if let Some(g) = report.lipschitz_estimate {
        println!("lipschitz estimate {}", fmt_float(g));
    }

    let mut hessian = true;
    if let LossKind::Tsallis { alpha } = loss.kind() {
        let alpha = *alpha;
        if alpha <= 2.0 {
            let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
            hessian = check_hessian_growth(alpha, &grid, alpha * (alpha - 1.0))?;
            println!("{} hessian growth with c = alpha(alpha-1)", if hessian { "ok" } else { "FAIL" });
        } else {
            println!("hessian growth check skipped (alpha > 2)");
        }
    }
    Ok(proper && concave && bounded && hessian)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid() {
        assert_eq!(geometric_grid(16, 128, 2.0).unwrap(), vec![16, 32, 64, 128]);
        assert_eq!(geometric_grid(10, 100, 3.0).unwrap(), vec![10, 30, 90, 100]);
        assert_eq!(geometric_grid(5, 5, 2.0).unwrap(), vec![5]);
        assert_eq!(geometric_grid(1, 3, 1.1).unwrap(), vec![1, 2, 3]);
        assert!(geometric_grid(0, 5, 2.0).is_err());
        assert!(geometric_grid(8, 4, 2.0).is_err());
        assert!(geometric_grid(2, 4, 1.0).is_err());
    }
}
