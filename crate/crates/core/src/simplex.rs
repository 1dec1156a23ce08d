//! Simplex geometry, outcome encoding and count accumulation.
//!
//! Everything a forecaster or loss touches is expressed in terms of three
//! small value types: a [`SimplexPoint`] (the forecast), an [`Outcome`]
//! (a one-hot basis vector stored as its index) and a [`CountVector`]
//! (how often each outcome has been seen). [`RngStream`] is the seeded
//! random source every randomized component draws from.

use std::fmt;

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default tolerance for the simplex invariants.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A probability vector over `K` outcomes.
///
/// Entries are non-negative and sum to one within [`SIMPLEX_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Checks `v` against the simplex invariants and renormalizes it by its sum.
    pub fn new(v: Vec<f64>, tol: f64) -> Result<Self> {
        validate_simplex(v, tol)
    }

    /// The barycenter `(1/K, ..., 1/K)`.
    pub fn uniform(k: usize) -> Self {
        assert!(k >= 1, "uniform point needs K >= 1");
        Self { probs: vec![1.0 / k as f64; k] }
    }

    /// The vertex `e_index`.
    pub fn vertex(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::OutcomeOutOfRange { index, k });
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// `weights / sum(weights)` for non-negative integer weights with a positive sum.
    pub(crate) fn from_weights(weights: &[u64]) -> Self {
        let total: u64 = weights.iter().sum();
        debug_assert!(total > 0);
        let total = total as f64;
        Self { probs: weights.iter().map(|&w| w as f64 / total).collect() }
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn norm(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    /// Euclidean distance to another point of the same dimension.
    pub fn distance(&self, other: &SimplexPoint) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `(1 - s) * self + s * other`.
    pub fn lerp(&self, other: &SimplexPoint, s: f64) -> SimplexPoint {
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect();
        SimplexPoint { probs }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl fmt::Display for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.probs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Validates a raw vector as a point of the simplex.
///
/// Entries below zero by no more than `tol` are clamped to zero; the result is
/// divided by its sum.
pub fn validate_simplex(v: Vec<f64>, tol: f64) -> Result<SimplexPoint> {
    if v.is_empty() {
        return Err(Error::InvalidSimplex("empty vector".into()));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidSimplex(format!("non-finite entry {bad}")));
    }
    if let Some((i, &x)) = v.iter().enumerate().find(|(_, &x)| x < -tol) {
        return Err(Error::InvalidSimplex(format!("entry {i} is negative ({x})")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidSimplex(format!("entries sum to {sum}, not 1")));
    }
    let clamped: Vec<f64> = v.into_iter().map(|x| x.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    Ok(SimplexPoint { probs: clamped.into_iter().map(|x| x / sum).collect() })
}

/// One-hot outcome `e_{index+1}`, stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome(usize);

impl Outcome {
    pub fn new(index: usize, k: usize) -> Result<Self> {
        if index >= k {
            return Err(Error::OutcomeOutOfRange { index, k });
        }
        Ok(Outcome(index))
    }

    /// Builds an outcome without a range check; callers guarantee `index < K`.
    pub(crate) fn from_index(index: usize) -> Self {
        Outcome(index)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub(crate) fn check(self, k: usize) -> Result<Self> {
        Outcome::new(self.0, k)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e_{}", self.0 + 1)
    }
}

/// Per-outcome occurrence counts `n_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn zeros(k: usize) -> Self {
        Self { counts: vec![0; k], total: 0 }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn from_outcomes(k: usize, outcomes: &[Outcome]) -> Result<Self> {
        let mut c = Self::zeros(k);
        for &y in outcomes {
            c.record(y)?;
        }
        Ok(c)
    }

    pub fn record(&mut self, y: Outcome) -> Result<()> {
        let y = y.check(self.counts.len())?;
        self.counts[y.index()] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// The mean forecaster `n / |n|`, i.e. the empirical average of the outcomes.
pub fn mean_of_counts(c: &CountVector) -> Result<SimplexPoint> {
    if c.total == 0 {
        return Err(Error::EmptyHistory);
    }
    Ok(SimplexPoint::from_weights(&c.counts))
}

/// Seeded random stream identified by `(seed, stream_id)`.
///
/// Identical pairs reproduce identical draw sequences; distinct `stream_id`s
/// under one seed are independent ChaCha streams, so Monte-Carlo trial `i`
/// uses `RngStream::new(base_seed, i)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Uniform (flat Dirichlet) draw from the simplex.
pub fn random_simplex_point(k: usize, rng: &mut RngStream) -> SimplexPoint {
    let raw: Vec<f64> = (0..k).map(|_| -rng.open01().ln()).collect();
    let sum: f64 = raw.iter().sum();
    SimplexPoint::from_vec_unchecked(raw.into_iter().map(|x| x / sum).collect())
}

/// Uniform draw from a random face of the simplex: each coordinate is zeroed
/// with probability 1/2 (at least one survives). Exercises boundary behaviour
/// that flat Dirichlet draws almost never reach.
pub fn random_face_point(k: usize, rng: &mut RngStream) -> SimplexPoint {
    let keep = rng.random_range(0..k);
    let raw: Vec<f64> = (0..k)
        .map(|i| {
            if i == keep || rng.random_bool(0.5) {
                -rng.open01().ln()
            } else {
                0.0
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    SimplexPoint::from_vec_unchecked(raw.into_iter().map(|x| x / sum).collect())
}

/// All points of the simplex whose coordinates are multiples of `1/resolution`.
pub fn simplex_mesh(k: usize, resolution: u64) -> Vec<SimplexPoint> {
    fn fill(k: usize, left: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if prefix.len() + 1 == k {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            fill(k, left - c, prefix, out);
            prefix.pop();
        }
    }
    assert!(k >= 1 && resolution >= 1);
    let mut raw = Vec::new();
    fill(k, resolution, &mut Vec::with_capacity(k), &mut raw);
    raw.iter().map(|w| SimplexPoint::from_weights(w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    #[test]
    fn mean_of_counts_examples() {
        let p = mean_of_counts(&CountVector::from_counts(vec![3, 1])).unwrap();
        assert_eq!(p.probs(), &[0.75, 0.25]);
        let p = mean_of_counts(&CountVector::from_counts(vec![0, 5])).unwrap();
        assert_eq!(p.probs(), &[0.0, 1.0]);
        let p = mean_of_counts(&CountVector::from_counts(vec![2, 2, 2])).unwrap();
        for x in p.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_of_empty_history_fails() {
        assert_eq!(mean_of_counts(&CountVector::zeros(3)), Err(Error::EmptyHistory));
    }

    #[test]
    fn validate_simplex_examples() {
        assert!(validate_simplex(vec![0.5, 0.5], 1e-12).is_ok());
        assert!(matches!(validate_simplex(vec![0.7, 0.4], 1e-12), Err(Error::InvalidSimplex(_))));
        assert!(matches!(validate_simplex(vec![-0.1, 1.1], 1e-12), Err(Error::InvalidSimplex(_))));
        assert!(validate_simplex(vec![], 1e-12).is_err());
        assert!(validate_simplex(vec![f64::NAN, 1.0], 1e-12).is_err());
    }

    #[test]
    fn validate_clamps_tiny_negatives() {
        let p = validate_simplex(vec![-1e-14, 1.0 + 1e-14], 1e-12).unwrap();
        assert_eq!(p.get(0), 0.0);
        assert_eq!(p.probs().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn outcome_range() {
        assert!(Outcome::new(2, 3).is_ok());
        assert_eq!(Outcome::new(3, 3), Err(Error::OutcomeOutOfRange { index: 3, k: 3 }));
        let mut c = CountVector::zeros(2);
        assert!(c.record(Outcome::from_index(5)).is_err());
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn rng_stream_reproducible() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..16).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn mesh_size_and_validity() {
        // C(50 + 2, 2) points for K = 3.
        let mesh = simplex_mesh(3, 50);
        assert_eq!(mesh.len(), 1326);
        for p in &mesh {
            assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_points_are_valid() {
        let mut rng = RngStream::new(1, 0);
        for k in 2..7 {
            for _ in 0..200 {
                for p in [random_simplex_point(k, &mut rng), random_face_point(k, &mut rng)] {
                    assert!(p.probs().iter().all(|&x| x >= 0.0));
                    assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn running_mean_matches_counts(k in 2usize..6, raw in prop::collection::vec(0usize..100, 1..200)) {
            let outcomes: Vec<Outcome> = raw.iter().map(|&i| Outcome::new(i % k, k).unwrap()).collect();
            let counts = CountVector::from_outcomes(k, &outcomes).unwrap();
            let mean = mean_of_counts(&counts).unwrap();

            // running average of one-hot vectors, accumulated incrementally
            let mut avg = vec![0.0; k];
            for (t, y) in outcomes.iter().enumerate() {
                let w = 1.0 / (t + 1) as f64;
                for (i, a) in avg.iter_mut().enumerate() {
                    let e = if i == y.index() { 1.0 } else { 0.0 };
                    *a += w * (e - *a);
                }
            }
            prop_assert_eq!(counts.total() as usize, outcomes.len());
            prop_assert!((mean.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (i, a) in avg.iter().enumerate() {
                prop_assert!(mean.get(i) >= 0.0);
                prop_assert!((mean.get(i) - a).abs() < 1e-12);
            }
        }
    }
}
