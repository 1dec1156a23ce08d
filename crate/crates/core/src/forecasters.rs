//! Online forecasters.
//!
//! All forecasters are "mean of counts" rules: FTL averages the observed
//! outcomes, FTPL averages observed plus hallucinated outcomes. The
//! hallucinated counts are geometric with parameter `q = min(1, sqrt(K/T))`
//! (support `{1, 2, ...}`) or, for the older baseline, uniform on
//! `{0, ..., floor(sqrt(T))}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::simplex::{CountVector, Outcome, RngStream, SimplexPoint};

#[derive(Debug, Clone, PartialEq)]
pub enum ForecasterKind {
    /// Follow the leader: the running mean of past outcomes.
    Ftl,
    /// Follow the perturbed leader with geometric hallucinated counts.
    FtplGeometric,
    /// Follow the perturbed leader with uniform hallucinated counts.
    FtplUniform,
    /// Always forecasts the same point.
    Static(SimplexPoint),
}

impl ForecasterKind {
    pub fn name(&self) -> String {
        match self {
            ForecasterKind::Ftl => "ftl".into(),
            ForecasterKind::FtplGeometric => "ftpl".into(),
            ForecasterKind::FtplUniform => "ftpl-uniform".into(),
            ForecasterKind::Static(p) => {
                let parts: Vec<String> = p.probs().iter().map(|x| x.to_string()).collect();
                format!("static:{}", parts.join(";"))
            }
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, ForecasterKind::FtplGeometric | ForecasterKind::FtplUniform)
    }
}

/// Forecaster state: the rule, the outcome counts `n_{t-1}` and the round `t`.
#[derive(Debug, Clone)]
pub struct Forecaster {
    kind: ForecasterKind,
    horizon: usize,
    counts: CountVector,
    round: usize,
}

impl Forecaster {
    pub fn new(kind: ForecasterKind, k: usize, horizon: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::param(format!("K must be at least 2, got {k}")));
        }
        if horizon < 1 {
            return Err(Error::param("horizon T must be at least 1"));
        }
        if let ForecasterKind::Static(p) = &kind {
            if p.k() != k {
                return Err(Error::DimensionMismatch { expected: k, actual: p.k() });
            }
        }
        Ok(Self { kind, horizon, counts: CountVector::zeros(k), round: 1 })
    }

    pub fn kind(&self) -> &ForecasterKind {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.counts.k()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Current 1-based round.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn counts(&self) -> &CountVector {
        &self.counts
    }

    /// Geometric noise parameter `min(1, sqrt(K/T))`.
    pub fn geometric_parameter(&self) -> f64 {
        (self.k() as f64 / self.horizon as f64).sqrt().min(1.0)
    }

    /// Forecast for the current round. Only the FTPL variants draw from `rng`,
    /// and they draw fresh noise on every call.
    pub fn predict(&self, rng: &mut RngStream) -> SimplexPoint {
        let k = self.k();
        match &self.kind {
            ForecasterKind::Ftl => {
                if self.counts.total() == 0 {
                    SimplexPoint::uniform(k)
                } else {
                    SimplexPoint::from_weights(self.counts.counts())
                }
            }
            ForecasterKind::FtplGeometric => {
                let q = self.geometric_parameter();
                let perturbed: Vec<u64> = self
                    .counts
                    .counts()
                    .iter()
                    .map(|&n| n + geometric_unchecked(q, rng))
                    .collect();
                SimplexPoint::from_weights(&perturbed)
            }
            ForecasterKind::FtplUniform => {
                let top = (self.horizon as f64).sqrt().floor() as u64;
                let perturbed: Vec<u64> =
                    self.counts.counts().iter().map(|&n| n + rng.random_range(0..=top)).collect();
                if perturbed.iter().all(|&y| y == 0) {
                    SimplexPoint::uniform(k)
                } else {
                    SimplexPoint::from_weights(&perturbed)
                }
            }
            ForecasterKind::Static(p) => p.clone(),
        }
    }

    /// Reveals the outcome of the current round and advances to the next one.
    pub fn observe(&mut self, y: Outcome) -> Result<()> {
        if self.round > self.horizon {
            return Err(Error::HorizonExceeded { round: self.round, horizon: self.horizon });
        }
        self.counts.record(y)?;
        self.round += 1;
        Ok(())
    }
}

/// Draws from the geometric distribution on `{1, 2, ...}` with success
/// probability `q`, `P(m = k) = q (1 - q)^(k - 1)`, by inverse transform.
pub fn sample_geometric(q: f64, rng: &mut RngStream) -> Result<u64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param(format!("geometric parameter must lie in (0, 1], got {q}")));
    }
    Ok(geometric_unchecked(q, rng))
}

fn geometric_unchecked(q: f64, rng: &mut RngStream) -> u64 {
    if q >= 1.0 {
        return 1;
    }
    let u = rng.open01();
    let m = (u.ln() / (-q).ln_1p()).ceil();
    if m < 1.0 {
        1
    } else if m >= u64::MAX as f64 {
        u64::MAX
    } else {
        m as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(i: usize) -> Outcome {
        Outcome::from_index(i)
    }

    #[test]
    fn ftl_mean_of_counts() {
        let mut f = Forecaster::new(ForecasterKind::Ftl, 2, 10).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert_eq!(f.predict(&mut rng).probs(), &[0.5, 0.5]);
        for y in [0, 0, 1, 0] {
            f.observe(o(y)).unwrap();
        }
        assert_eq!(f.round(), 5);
        assert_eq!(f.predict(&mut rng).probs(), &[0.75, 0.25]);
    }

    #[test]
    fn ftpl_clipped_noise_is_deterministic() {
        // T <= K forces q = 1 and m = 1 for every coordinate.
        let f = Forecaster::new(ForecasterKind::FtplGeometric, 3, 2).unwrap();
        assert_eq!(f.geometric_parameter(), 1.0);
        let mut rng = RngStream::new(9, 9);
        let p = f.predict(&mut rng);
        for x in p.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn geometric_noise_mean() {
        // E[m] = 1/q = sqrt(T/K); standard deviation sqrt(1-q)/q.
        let q = (2.0f64 / 10_000.0).sqrt();
        let mut rng = RngStream::new(42, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_geometric(q, &mut rng).unwrap() as f64).sum::<f64>() / n as f64;
        let se = (1.0 - q).sqrt() / q / (n as f64).sqrt();
        assert!((mean - 1.0 / q).abs() < 3.0 * se, "mean {mean}, expected {}", 1.0 / q);
    }

    #[test]
    fn geometric_pmf_at_one() {
        let mut rng = RngStream::new(3, 1);
        let n = 1_000_000;
        let ones = (0..n).filter(|_| sample_geometric(0.5, &mut rng).unwrap() == 1).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.002, "{freq}");
    }

    #[test]
    fn geometric_mean_tenth() {
        let mut rng = RngStream::new(3, 2);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_geometric(0.1, &mut rng).unwrap() as f64).sum::<f64>() / n as f64;
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn geometric_parameter_errors() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(sample_geometric(1.0, &mut rng).unwrap(), 1);
        assert!(sample_geometric(0.0, &mut rng).is_err());
        assert!(sample_geometric(1.5, &mut rng).is_err());
        assert!(sample_geometric(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn observe_counts_and_horizon() {
        let mut f = Forecaster::new(ForecasterKind::Ftl, 2, 4).unwrap();
        for y in [0, 0, 0, 1] {
            f.observe(o(y)).unwrap();
        }
        assert_eq!(f.counts().counts(), &[3, 1]);
        assert_eq!(f.observe(o(1)), Err(Error::HorizonExceeded { round: 5, horizon: 4 }));
        assert_eq!(f.counts().counts(), &[3, 1]);

        let t = 7;
        let mut g = Forecaster::new(ForecasterKind::Ftl, 3, t).unwrap();
        for _ in 0..t {
            g.observe(o(0)).unwrap();
        }
        assert_eq!(g.counts().counts(), &[t as u64, 0, 0]);
    }

    #[test]
    fn ftpl_same_stream_same_forecast() {
        let mut f = Forecaster::new(ForecasterKind::FtplGeometric, 3, 1000).unwrap();
        for y in [0, 1, 2, 2] {
            f.observe(o(y)).unwrap();
        }
        let a = f.predict(&mut RngStream::new(1, 5));
        let b = f.predict(&mut RngStream::new(1, 5));
        assert_eq!(a, b);
        let mut rng = RngStream::new(1, 6);
        let c = f.predict(&mut rng);
        let d = f.predict(&mut rng);
        assert_ne!(c, d);
    }

    #[test]
    fn ftpl_uniform_fallback_and_validity() {
        // T = 1 gives noise range {0, 1}; all-zero draws fall back to uniform.
        let f = Forecaster::new(ForecasterKind::FtplUniform, 2, 1).unwrap();
        let mut rng = RngStream::new(2, 0);
        for _ in 0..100 {
            let p = f.predict(&mut rng);
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn static_dimension_checked() {
        let p = SimplexPoint::uniform(3);
        assert!(Forecaster::new(ForecasterKind::Static(p), 2, 10).is_err());
    }
}
