//! Forecasting protocol, regret accounting and Monte-Carlo calibration estimates.
//!
//! Regret is always measured against the mean forecaster `beta = n_T / T`,
//! which minimizes the cumulative loss of every proper loss at once; no
//! numerical minimization is involved.

use rayon::prelude::*;

use crate::adversaries::Adversary;
use crate::error::{Error, Result};
use crate::forecasters::{Forecaster, ForecasterKind};
use crate::losses::{ProperLoss, UnivariateForm};
use crate::simplex::{mean_of_counts, CountVector, Outcome, RngStream, SimplexPoint};

/// Record of one played game.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub k: usize,
    pub horizon: usize,
    pub forecasts: Vec<SimplexPoint>,
    pub outcomes: Vec<Outcome>,
    pub final_counts: CountVector,
}

impl Transcript {
    /// Builds a transcript from externally produced forecasts and outcomes.
    pub fn from_parts(forecasts: Vec<SimplexPoint>, outcomes: Vec<Outcome>, k: usize) -> Result<Self> {
        if forecasts.len() != outcomes.len() {
            return Err(Error::param(format!(
                "{} forecasts but {} outcomes",
                forecasts.len(),
                outcomes.len()
            )));
        }
        if let Some(p) = forecasts.iter().find(|p| p.k() != k) {
            return Err(Error::DimensionMismatch { expected: k, actual: p.k() });
        }
        let final_counts = CountVector::from_outcomes(k, &outcomes)?;
        Ok(Self { k, horizon: outcomes.len(), forecasts, outcomes, final_counts })
    }

    /// The benchmark `beta`, the empirical mean of the outcomes.
    pub fn benchmark(&self) -> Result<SimplexPoint> {
        mean_of_counts(&self.final_counts)
    }
}

/// Plays `horizon` rounds of `forecaster` against `adversary`.
///
/// Each round the forecast is fixed before the outcome is drawn, then the
/// outcome is revealed to the forecaster. Both players draw from `rng`.
pub fn run_game(
    forecaster: &ForecasterKind,
    adversary: &Adversary,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<Transcript> {
    let k = adversary.k();
    let mut state = Forecaster::new(forecaster.clone(), k, horizon)?;
    let mut forecasts = Vec::with_capacity(horizon);
    let mut outcomes = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let p = state.predict(rng);
        let y = adversary.next_outcome(t, &forecasts, rng)?;
        state.observe(y)?;
        forecasts.push(p);
        outcomes.push(y);
    }
    Ok(Transcript { k, horizon, forecasts, outcomes, final_counts: state.counts().clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretRecord {
    pub loss_id: String,
    pub algorithm_cost: f64,
    pub benchmark_cost: f64,
    /// `algorithm_cost - benchmark_cost`.
    pub regret: f64,
}

/// Regret of the transcript's forecasts under `loss`.
pub fn regret<L: UnivariateForm + ?Sized>(tr: &Transcript, loss: &L, loss_id: &str) -> Result<RegretRecord> {
    if loss.k() != tr.k {
        return Err(Error::DimensionMismatch { expected: tr.k, actual: loss.k() });
    }
    let algorithm_cost: f64 = tr.forecasts.iter().zip(&tr.outcomes).map(|(p, &y)| loss.bivariate(p, y)).sum();
    let beta = tr.benchmark()?;
    let benchmark_cost: f64 = (0..tr.k)
        .map(|i| tr.final_counts.get(i) as f64 * loss.bivariate(&beta, Outcome::from_index(i)))
        .sum();
    Ok(RegretRecord {
        loss_id: loss_id.to_string(),
        algorithm_cost,
        benchmark_cost,
        regret: algorithm_cost - benchmark_cost,
    })
}

/// [`regret`] for one of the shipped losses, labelled with its own id.
pub fn loss_regret(tr: &Transcript, loss: &ProperLoss) -> Result<RegretRecord> {
    regret(tr, loss, &loss.label())
}

/// Per-trial regrets, `regrets[trial][loss]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRegrets {
    pub loss_ids: Vec<String>,
    pub regrets: Vec<Vec<f64>>,
}

/// Plays `trials` independent games; trial `i` uses `RngStream::new(base_seed, i)`.
///
/// Trials run on the current rayon pool; results are in trial order no matter
/// how the work was scheduled.
pub fn run_trials(
    forecaster: &ForecasterKind,
    adversary: &Adversary,
    losses: &[ProperLoss],
    horizon: usize,
    trials: usize,
    base_seed: u64,
) -> Result<TrialRegrets> {
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    if losses.is_empty() {
        return Err(Error::param("need at least one loss"));
    }
    if let Some(l) = losses.iter().find(|l| l.k() != adversary.k()) {
        return Err(Error::DimensionMismatch { expected: adversary.k(), actual: l.k() });
    }
    let regrets = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::new(base_seed, trial as u64);
            let tr = run_game(forecaster, adversary, horizon, &mut rng)?;
            losses.iter().map(|l| loss_regret(&tr, l).map(|r| r.regret)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialRegrets { loss_ids: losses.iter().map(|l| l.label()).collect(), regrets })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSummary {
    pub loss_id: String,
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimates of PUCal (`max_l mean Reg_l`) and UCal
/// (`mean max_l Reg_l`) over a finite loss family.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationEstimate {
    pub pucal: f64,
    pub ucal: f64,
    pub per_loss: Vec<LossSummary>,
    pub trials: usize,
    /// Standard error of the per-trial supremum.
    pub std_error: f64,
}

impl CalibrationEstimate {
    pub fn from_trials(t: &TrialRegrets) -> Self {
        let n = t.regrets.len();
        let per_loss: Vec<LossSummary> = t
            .loss_ids
            .iter()
            .enumerate()
            .map(|(j, id)| {
                let column: Vec<f64> = t.regrets.iter().map(|row| row[j]).collect();
                let (mean, std_error) = mean_and_std_error(&column);
                LossSummary { loss_id: id.clone(), mean, std_error }
            })
            .collect();
        let sups: Vec<f64> = t.regrets.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let (ucal, std_error) = mean_and_std_error(&sups);
        let pucal = per_loss.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max);
        Self { pucal, ucal, per_loss, trials: n, std_error }
    }

    pub fn per_loss_mean(&self) -> std::collections::BTreeMap<String, f64> {
        self.per_loss.iter().map(|s| (s.loss_id.clone(), s.mean)).collect()
    }

    /// The PUCal maximizer's summary.
    pub fn worst_loss(&self) -> &LossSummary {
        self.per_loss
            .iter()
            .max_by(|a, b| a.mean.total_cmp(&b.mean))
            .expect("estimate has at least one loss")
    }
}

/// Sample mean and standard error of the mean (0 for a single sample).
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn estimate_calibration(
    forecaster: &ForecasterKind,
    adversary: &Adversary,
    losses: &[ProperLoss],
    horizon: usize,
    trials: usize,
    base_seed: u64,
) -> Result<CalibrationEstimate> {
    let t = run_trials(forecaster, adversary, losses, horizon, trials, base_seed)?;
    Ok(CalibrationEstimate::from_trials(&t))
}

/// The cover `{0, eps, 2 eps, ..., 1}` of the mixture weight interval.
pub fn mixture_grid(eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param(format!("grid spacing must lie in (0, 1], got {eps}")));
    }
    let inv = 1.0 / eps;
    let steps = if (inv - inv.round()).abs() < 1e-9 { inv.round() } else { inv.ceil() } as usize;
    let mut grid: Vec<f64> = (0..steps).map(|j| j as f64 * eps).collect();
    grid.push(1.0);
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSup {
    /// `max` of `Reg_{l_alpha}` over the grid.
    pub grid_sup: f64,
    /// Supremum over all of `[0, 1]`, attained at an endpoint.
    pub exact_sup: f64,
    /// Grid weight attaining `grid_sup`.
    pub argmax_weight: f64,
}

/// Supremum of the regret over the family `alpha l1 + (1 - alpha) l2`.
///
/// Regret is affine in the loss (the benchmark `beta` does not depend on it),
/// so `Reg_{l_alpha} = alpha Reg_{l1} + (1 - alpha) Reg_{l2}` and each grid
/// point costs O(1) after the two endpoint regrets are known.
pub fn sup_regret_mixture(tr: &Transcript, first: &ProperLoss, second: &ProperLoss, eps: f64) -> Result<MixtureSup> {
    let grid = mixture_grid(eps)?;
    let r1 = loss_regret(tr, first)?.regret;
    let r2 = loss_regret(tr, second)?.regret;
    let (argmax_weight, grid_sup) = grid
        .iter()
        .map(|&a| (a, a * r1 + (1.0 - a) * r2))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(MixtureSup { grid_sup, exact_sup: r1.max(r2), argmax_weight })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighProbCheck {
    pub threshold: f64,
    pub exceeding: usize,
    pub fraction_exceeding: f64,
    /// `delta + 3 sqrt(delta (1 - delta) / trials)`.
    pub allowed_fraction: f64,
}

impl HighProbCheck {
    pub fn passes(&self) -> bool {
        self.fraction_exceeding <= self.allowed_fraction
    }
}

/// Fraction of trials whose regret exceeds `4 sqrt(KT) + sqrt(2T ln(1/delta))`.
pub fn check_high_prob_bound(regrets: &[f64], k: usize, horizon: usize, delta: f64) -> Result<HighProbCheck> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1], got {delta}")));
    }
    if regrets.is_empty() {
        return Err(Error::param("no regrets to check"));
    }
    let threshold = bounds::high_probability(k, horizon, delta);
    let exceeding = regrets.iter().filter(|&&r| r > threshold).count();
    let n = regrets.len() as f64;
    Ok(HighProbCheck {
        threshold,
        exceeding,
        fraction_exceeding: exceeding as f64 / n,
        allowed_fraction: delta + 3.0 * (delta * (1.0 - delta) / n).sqrt(),
    })
}

/// `E|Bin(T, p) - Tp|`, summed over the full pmf.
///
/// The pmf is built by walking outward from the mode with the ratio
/// `P(k+1)/P(k) = (T-k)/(k+1) * p/(1-p)` and normalizing at the end, which
/// never overflows and loses no mass to underflow that matters.
pub fn exact_binomial_mad(horizon: u64, p: f64) -> Result<f64> {
    if horizon < 1 {
        return Err(Error::param("T must be at least 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("p must lie in (0, 1), got {p}")));
    }
    let n = horizon;
    let mean = n as f64 * p;
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n);

    let mut mass = 1.0;
    let mut weighted = (mode as f64 - mean).abs();
    let mut w = 1.0;
    for k in mode..n {
        w *= (n - k) as f64 / (k + 1) as f64 * odds;
        if w == 0.0 {
            break;
        }
        mass += w;
        weighted += w * ((k + 1) as f64 - mean).abs();
    }
    w = 1.0;
    for k in (1..=mode).rev() {
        w *= k as f64 / (n - k + 1) as f64 / odds;
        if w == 0.0 {
            break;
        }
        mass += w;
        weighted += w * ((k - 1) as f64 - mean).abs();
    }
    Ok(weighted / mass)
}

/// Closed-form regret bounds, natural logarithms throughout.
pub mod bounds {
    /// Expected regret of FTPL with geometric noise: `4 sqrt(KT)`.
    pub fn ftpl_expected(k: usize, horizon: usize) -> f64 {
        4.0 * ((k * horizon) as f64).sqrt()
    }

    /// `4 sqrt(KT) + sqrt(2T ln(1/delta))`, holding with probability `1 - delta`.
    pub fn high_probability(k: usize, horizon: usize, delta: f64) -> f64 {
        ftpl_expected(k, horizon) + (2.0 * horizon as f64 * (1.0 / delta).ln()).sqrt()
    }

    /// UCal over a finite family of `family_size` losses:
    /// `2 + 4 sqrt(KT) + sqrt(2T ln(T |family|))`.
    pub fn finite_family_ucal(k: usize, horizon: usize, family_size: usize) -> f64 {
        let t = horizon as f64;
        2.0 + ftpl_expected(k, horizon) + (2.0 * t * (t * family_size as f64).ln()).sqrt()
    }

    /// UCal over a family with `eps`-covering number `cover_size`:
    /// `2 + 4 eps T + 4 sqrt(KT) + sqrt(2T ln(T M))`.
    pub fn covered_family_ucal(k: usize, horizon: usize, eps: f64, cover_size: f64) -> f64 {
        let t = horizon as f64;
        2.0 + 4.0 * eps * t + ftpl_expected(k, horizon) + (2.0 * t * (t * cover_size).ln()).sqrt()
    }

    /// FTL on a `G`-Lipschitz proper loss: `2 + 2G ln T`.
    pub fn ftl_lipschitz(g: f64, horizon: usize) -> f64 {
        2.0 + 2.0 * g * (horizon as f64).ln()
    }

    /// FTL on a decomposable loss with Hessian-growth constant `beta`:
    /// `2K + (K+1) beta (1 + ln T)`.
    pub fn ftl_decomposable(k: usize, horizon: usize, beta: f64) -> f64 {
        let k = k as f64;
        2.0 * k + (k + 1.0) * beta * (1.0 + (horizon as f64).ln())
    }

    /// `beta = K c alpha (alpha - 1)` for the Tsallis loss with normalizer `c`.
    pub fn tsallis_beta(k: usize, alpha: f64, scale: f64) -> f64 {
        k as f64 * scale * alpha * (alpha - 1.0)
    }

    /// `sqrt(T/8)`, the Khintchine lower bound on `E|Bin(T, 1/2) - T/2|`.
    pub fn khintchine_lower(horizon: u64) -> f64 {
        (horizon as f64 / 8.0).sqrt()
    }
}
