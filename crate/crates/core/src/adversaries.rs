//! Outcome-sequence generators.

use rand::Rng;

use crate::error::{Error, Result};
use crate::losses::{ProperLoss, UnivariateForm};
use crate::simplex::{Outcome, RngStream, SimplexPoint};

#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryKind {
    /// A predetermined sequence; round `t` plays `sequence[t - 1]`.
    Fixed(Vec<Outcome>),
    /// Outcomes i.i.d. uniform over all `K` classes.
    IidUniform,
    /// `e_1` on odd rounds, `e_2` on even rounds.
    Alternating,
    /// Plays the outcome maximizing the loss of the previous forecast.
    GreedyAdaptive(ProperLoss),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adversary {
    kind: AdversaryKind,
    k: usize,
}

impl Adversary {
    pub fn new(kind: AdversaryKind, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::param(format!("K must be at least 2, got {k}")));
        }
        match &kind {
            AdversaryKind::Fixed(seq) => {
                for &y in seq {
                    Outcome::new(y.index(), k)?;
                }
            }
            AdversaryKind::GreedyAdaptive(loss) if loss.k() != k => {
                return Err(Error::DimensionMismatch { expected: k, actual: loss.k() });
            }
            _ => {}
        }
        Ok(Self { kind, k })
    }

    pub fn kind(&self) -> &AdversaryKind {
        &self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Oblivious adversaries never look at past forecasts.
    pub fn is_oblivious(&self) -> bool {
        !matches!(self.kind, AdversaryKind::GreedyAdaptive(_))
    }

    pub fn name(&self) -> String {
        match &self.kind {
            AdversaryKind::Fixed(_) => "fixed".into(),
            AdversaryKind::IidUniform => "iid".into(),
            AdversaryKind::Alternating => "alternating".into(),
            AdversaryKind::GreedyAdaptive(loss) => format!("greedy:{}", loss.label()),
        }
    }

    /// Outcome for round `t` (1-based). `past_forecasts` holds `p_1..p_{t-1}`
    /// and is read only by [`AdversaryKind::GreedyAdaptive`].
    pub fn next_outcome(&self, t: usize, past_forecasts: &[SimplexPoint], rng: &mut RngStream) -> Result<Outcome> {
        if t == 0 {
            return Err(Error::param("rounds are 1-based"));
        }
        match &self.kind {
            AdversaryKind::Fixed(seq) => seq
                .get(t - 1)
                .copied()
                .ok_or(Error::SequenceExhausted { round: t, len: seq.len() }),
            AdversaryKind::IidUniform => Ok(Outcome::from_index(rng.random_range(0..self.k))),
            AdversaryKind::Alternating => Ok(Outcome::from_index(if t % 2 == 1 { 0 } else { 1 })),
            AdversaryKind::GreedyAdaptive(loss) => {
                let proxy = past_forecasts.last().cloned().unwrap_or_else(|| SimplexPoint::uniform(self.k));
                let mut best = 0;
                let mut best_value = f64::NEG_INFINITY;
                for i in 0..self.k {
                    let v = loss.bivariate(&proxy, Outcome::from_index(i));
                    // strict comparison keeps the lowest index on ties
                    if v > best_value {
                        best = i;
                        best_value = v;
                    }
                }
                Ok(Outcome::from_index(best))
            }
        }
    }
}

/// Parses whitespace-separated 1-based outcome indices.
pub fn parse_outcome_sequence(text: &str, k: usize) -> Result<Vec<Outcome>> {
    text.split_whitespace()
        .map(|tok| {
            let idx: usize = tok
                .parse()
                .map_err(|_| Error::Parse(format!("not an outcome index: {tok:?}")))?;
            if idx == 0 {
                return Err(Error::Parse("outcome indices are 1-based".into()));
            }
            Outcome::new(idx - 1, k)
        })
        .collect()
}

/// Reads a fixed sequence from a plain-text file (see [`parse_outcome_sequence`]).
pub fn load_outcome_sequence(path: &std::path::Path, k: usize) -> Result<Vec<Outcome>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_outcome_sequence(&text, k)
}
