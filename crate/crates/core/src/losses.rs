//! Proper losses built from concave univariate forms.
//!
//! A proper loss is determined by its univariate form `f(p) = E_{y~p} l(p, y)`
//! and a subgradient rule `g_p`: the bivariate loss is
//! `l(p, y) = f(p) + <g_p, e_y - p>`. The [`UnivariateForm`] trait captures
//! exactly that pair, so user-supplied forms get the bivariate evaluation and
//! all validators for free. [`ProperLoss`] ships the concrete families used in
//! the experiments: squared (Brier), spherical, V-shaped, Tsallis and affine
//! mixtures of those.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::simplex::{
    random_face_point, random_simplex_point, simplex_mesh, Outcome, RngStream, SimplexPoint,
};

/// A concave function on the simplex together with a subgradient selection.
pub trait UnivariateForm {
    /// Number of outcomes.
    fn k(&self) -> usize;

    fn univariate(&self, p: &SimplexPoint) -> f64;

    fn subgradient(&self, p: &SimplexPoint) -> Vec<f64>;

    /// `f(p) + <g_p, e_y - p>`.
    fn bivariate(&self, p: &SimplexPoint, y: Outcome) -> f64 {
        let g = self.subgradient(p);
        let inner: f64 = g.iter().zip(p.probs()).map(|(gi, pi)| gi * pi).sum();
        self.univariate(p) + g[y.index()] - inner
    }

    /// `sum_i truth_i * l(report, e_i)`: expected loss of reporting `report`
    /// when the outcome is drawn from `truth`.
    fn expected_loss(&self, truth: &SimplexPoint, report: &SimplexPoint) -> f64 {
        (0..self.k())
            .map(|i| truth.get(i) * self.bivariate(report, Outcome::from_index(i)))
            .sum()
    }
}

/// The loss families shipped with the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    /// `scale * ||p - e_y||^2`, univariate `scale * (1 - ||p||^2)`.
    Squared { scale: f64 },
    /// `-p_y / ||p||`, univariate `-||p||`.
    Spherical,
    /// Univariate `-1/2 sum_i |p_i - 1/K|`.
    VShaped,
    /// Univariate `-(1/alpha) sum_i p_i^alpha`, `alpha > 1`.
    Tsallis { alpha: f64 },
    /// `weight * first + (1 - weight) * second`.
    Mixture { first: Box<ProperLoss>, second: Box<ProperLoss>, weight: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProperLoss {
    kind: LossKind,
    k: usize,
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::param(format!("K must be at least 2, got {k}")));
    }
    Ok(())
}

/// `sign(x)` with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl ProperLoss {
    pub fn squared(k: usize, scale: f64) -> Result<Self> {
        check_k(k)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(format!("squared-loss scale must be positive, got {scale}")));
        }
        Ok(Self { kind: LossKind::Squared { scale }, k })
    }

    pub fn spherical(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Self { kind: LossKind::Spherical, k })
    }

    pub fn vshaped(k: usize) -> Result<Self> {
        check_k(k)?;
        Ok(Self { kind: LossKind::VShaped, k })
    }

    pub fn tsallis(k: usize, alpha: f64) -> Result<Self> {
        check_k(k)?;
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::param(format!("Tsallis alpha must exceed 1, got {alpha}")));
        }
        Ok(Self { kind: LossKind::Tsallis { alpha }, k })
    }

    pub fn mixture(first: ProperLoss, second: ProperLoss, weight: f64) -> Result<Self> {
        if first.k != second.k {
            return Err(Error::DimensionMismatch { expected: first.k, actual: second.k });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::param(format!("mixture weight must lie in [0, 1], got {weight}")));
        }
        let k = first.k;
        Ok(Self {
            kind: LossKind::Mixture { first: Box::new(first), second: Box::new(second), weight },
            k,
        })
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    /// Tsallis normalizer `c = 1/alpha`, keeping the bivariate form in [-1, 1].
    pub fn tsallis_scale(alpha: f64) -> f64 {
        1.0 / alpha
    }

    /// Range the bivariate form is guaranteed to stay in.
    ///
    /// Everything is in [-1, 1] except squared losses with `scale > 1/2`
    /// (scale 1 lives in [0, 2]).
    pub fn nominal_range(&self) -> (f64, f64) {
        match &self.kind {
            LossKind::Squared { scale } => (0.0, 2.0 * scale),
            LossKind::Mixture { first, second, weight } => {
                let (a0, a1) = first.nominal_range();
                let (b0, b1) = second.nominal_range();
                (weight * a0 + (1.0 - weight) * b0, weight * a1 + (1.0 - weight) * b1)
            }
            _ => (-1.0, 1.0),
        }
    }

    /// True when the bivariate form may leave [-1, 1].
    pub fn exceeds_unit_range(&self) -> bool {
        let (lo, hi) = self.nominal_range();
        lo < -1.0 || hi > 1.0
    }

    /// Short identifier used in CSV output, e.g. `tsallis:1.5`.
    pub fn label(&self) -> String {
        match &self.kind {
            LossKind::Squared { scale } => format!("squared:{scale}"),
            LossKind::Spherical => "spherical".into(),
            LossKind::VShaped => "vshaped".into(),
            LossKind::Tsallis { alpha } => format!("tsallis:{alpha}"),
            LossKind::Mixture { first, second, weight } => {
                format!("mixture:{weight}:{}/{}", first.label(), second.label())
            }
        }
    }
}

impl fmt::Display for ProperLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl UnivariateForm for ProperLoss {
    fn k(&self) -> usize {
        self.k
    }

    fn univariate(&self, p: &SimplexPoint) -> f64 {
        let probs = p.probs();
        match &self.kind {
            LossKind::Squared { scale } => {
                scale * (1.0 - probs.iter().map(|x| x * x).sum::<f64>())
            }
            LossKind::Spherical => -p.norm(),
            LossKind::VShaped => {
                let c = 1.0 / self.k as f64;
                -0.5 * probs.iter().map(|x| (x - c).abs()).sum::<f64>()
            }
            LossKind::Tsallis { alpha } => {
                -Self::tsallis_scale(*alpha) * probs.iter().map(|x| x.powf(*alpha)).sum::<f64>()
            }
            LossKind::Mixture { first, second, weight } => {
                weight * first.univariate(p) + (1.0 - weight) * second.univariate(p)
            }
        }
    }

    fn subgradient(&self, p: &SimplexPoint) -> Vec<f64> {
        let probs = p.probs();
        match &self.kind {
            LossKind::Squared { scale } => probs.iter().map(|x| -2.0 * scale * x).collect(),
            LossKind::Spherical => {
                let n = p.norm();
                probs.iter().map(|x| -x / n).collect()
            }
            LossKind::VShaped => {
                let c = 1.0 / self.k as f64;
                probs.iter().map(|x| -0.5 * sign(x - c)).collect()
            }
            LossKind::Tsallis { alpha } => {
                // alpha * p^(alpha-1) is finite (zero) at p = 0 since alpha > 1.
                let s = Self::tsallis_scale(*alpha);
                probs.iter().map(|x| -s * alpha * x.powf(alpha - 1.0)).collect()
            }
            LossKind::Mixture { first, second, weight } => first
                .subgradient(p)
                .into_iter()
                .zip(second.subgradient(p))
                .map(|(a, b)| weight * a + (1.0 - weight) * b)
                .collect(),
        }
    }

    fn bivariate(&self, p: &SimplexPoint, y: Outcome) -> f64 {
        match &self.kind {
            // affine in the components, evaluated term by term
            LossKind::Mixture { first, second, weight } => {
                weight * first.bivariate(p, y) + (1.0 - weight) * second.bivariate(p, y)
            }
            _ => {
                let g = self.subgradient(p);
                let inner: f64 = g.iter().zip(p.probs()).map(|(gi, pi)| gi * pi).sum();
                self.univariate(p) + g[y.index()] - inner
            }
        }
    }
}

/// Outcome of running the numerical validators on one loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValidationReport {
    pub pairs_checked: usize,
    pub properness_violations: usize,
    /// Largest amount by which properness failed (0 when it never did).
    pub max_violation: f64,
    pub concavity_violations: usize,
    pub points_checked: usize,
    pub range_min: f64,
    pub range_max: f64,
    pub lipschitz_estimate: Option<f64>,
}

impl LossValidationReport {
    fn empty() -> Self {
        Self {
            pairs_checked: 0,
            properness_violations: 0,
            max_violation: 0.0,
            concavity_violations: 0,
            points_checked: 0,
            range_min: f64::INFINITY,
            range_max: f64::NEG_INFINITY,
            lipschitz_estimate: None,
        }
    }

    fn absorb_range<L: UnivariateForm + ?Sized>(&mut self, loss: &L, p: &SimplexPoint) {
        for i in 0..loss.k() {
            let v = loss.bivariate(p, Outcome::from_index(i));
            self.range_min = self.range_min.min(v);
            self.range_max = self.range_max.max(v);
        }
        self.points_checked += 1;
    }

    /// True when `|l(p, y)| <= 1 + tol` on every evaluated point.
    pub fn within_unit_range(&self, tol: f64) -> bool {
        self.range_min >= -1.0 - tol && self.range_max <= 1.0 + tol
    }
}

/// Checks `E_{y~p} l(p, y) <= E_{y~p} l(p', y) + tol` for every pair `(p, p')`.
///
/// Violations are counted, never raised. The range fields cover the bivariate
/// values seen at both points of every pair.
pub fn check_proper<L: UnivariateForm + ?Sized>(
    loss: &L,
    pairs: &[(SimplexPoint, SimplexPoint)],
    tol: f64,
) -> LossValidationReport {
    let mut report = LossValidationReport::empty();
    for (p, q) in pairs {
        let honest = loss.expected_loss(p, p);
        let misreport = loss.expected_loss(p, q);
        let slack = honest - misreport;
        if slack > tol {
            report.properness_violations += 1;
            report.max_violation = report.max_violation.max(slack);
        }
        report.pairs_checked += 1;
        report.absorb_range(loss, p);
        report.absorb_range(loss, q);
    }
    report
}

/// Midpoint concavity: counts pairs with `f((p+q)/2) < (f(p) + f(q))/2 - tol`.
pub fn check_concavity<L: UnivariateForm + ?Sized>(
    loss: &L,
    pairs: &[(SimplexPoint, SimplexPoint)],
    tol: f64,
) -> usize {
    pairs
        .iter()
        .filter(|(p, q)| {
            let mid = p.lerp(q, 0.5);
            loss.univariate(&mid) < 0.5 * (loss.univariate(p) + loss.univariate(q)) - tol
        })
        .count()
}

/// Checks the Hessian growth condition `|f''(p)| <= c * max(1/p, 1/(1-p))`
/// for the unscaled Tsallis coordinate `f(p) = -p^alpha` on every grid point.
pub fn check_hessian_growth(alpha: f64, grid: &[f64], c: f64) -> Result<bool> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::param(format!("Hessian growth check needs alpha in (1, 2], got {alpha}")));
    }
    if let Some(&bad) = grid.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::BoundaryPoint(bad));
    }
    Ok(grid.iter().all(|&p| {
        let second = alpha * (alpha - 1.0) * p.powf(alpha - 2.0);
        second <= c * (1.0 / p).max(1.0 / (1.0 - p))
    }))
}

/// `max_y |l(p, y) - l(q, y)| / ||p - q||`; infinite when `p == q`.
pub fn lipschitz_ratio<L: UnivariateForm + ?Sized>(loss: &L, p: &SimplexPoint, q: &SimplexPoint) -> f64 {
    let d = p.distance(q);
    let diff = (0..loss.k())
        .map(|i| {
            let y = Outcome::from_index(i);
            (loss.bivariate(p, y) - loss.bivariate(q, y)).abs()
        })
        .fold(0.0, f64::max);
    diff / d
}

/// Sampled lower estimate of the Lipschitz constant `G`.
///
/// Each sample pairs a random point `p` with `q = (1-s) p + s r` for another
/// random point `r` and a log-uniform step `s` in `[1e-9, 1]`, so both distant
/// and nearly coincident pairs are probed.
pub fn estimate_lipschitz<L: UnivariateForm + ?Sized>(loss: &L, samples: usize, rng: &mut RngStream) -> f64 {
    let k = loss.k();
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let p = if i % 4 == 3 { random_face_point(k, rng) } else { random_simplex_point(k, rng) };
        let r = random_simplex_point(k, rng);
        let s = 10f64.powf(-9.0 * rng.random::<f64>());
        let q = p.lerp(&r, s);
        if p.distance(&q) == 0.0 {
            continue;
        }
        best = best.max(lipschitz_ratio(loss, &p, &q));
    }
    best
}

/// Sample sizes for [`validate_loss`].
#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub properness_pairs: usize,
    pub range_points: usize,
    /// Mesh resolution used for `K <= mesh_max_k`.
    pub mesh_resolution: u64,
    pub mesh_max_k: usize,
    pub lipschitz_samples: usize,
    pub tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            properness_pairs: 10_000,
            range_points: 10_000,
            mesh_resolution: 50,
            mesh_max_k: 3,
            lipschitz_samples: 10_000,
            tol: 1e-9,
        }
    }
}

/// Random pairs used by the properness and concavity checks. A quarter of the
/// points come from random faces so that boundary forecasts are exercised.
pub fn random_pairs(k: usize, n: usize, rng: &mut RngStream) -> Vec<(SimplexPoint, SimplexPoint)> {
    let draw = |i: usize, rng: &mut RngStream| {
        if i.is_multiple_of(4) {
            random_face_point(k, rng)
        } else {
            random_simplex_point(k, rng)
        }
    };
    (0..n).map(|i| (draw(i, rng), draw(i + 1, rng))).collect()
}

/// Runs properness, concavity, range and Lipschitz checks on `loss`.
pub fn validate_loss<L: UnivariateForm + ?Sized>(
    loss: &L,
    cfg: &ValidationConfig,
    rng: &mut RngStream,
) -> LossValidationReport {
    let k = loss.k();
    let pairs = random_pairs(k, cfg.properness_pairs, rng);
    let mut report = check_proper(loss, &pairs, cfg.tol);
    report.concavity_violations = check_concavity(loss, &pairs, cfg.tol);

    if k <= cfg.mesh_max_k {
        for p in simplex_mesh(k, cfg.mesh_resolution) {
            report.absorb_range(loss, &p);
        }
    }
    for i in 0..cfg.range_points {
        let p = if i % 4 == 0 { random_face_point(k, rng) } else { random_simplex_point(k, rng) };
        report.absorb_range(loss, &p);
    }
    report.lipschitz_estimate = Some(estimate_lipschitz(loss, cfg.lipschitz_samples, rng));
    report
}
