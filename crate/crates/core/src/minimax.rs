//! Exact minimax regret of the two-outcome game under squared loss.
//!
//! The loss here is the unscaled `|p - e_y|^2`. `V_{n1,n2,r}` is the optimal
//! remaining regret with outcome counts `(n1, n2)` and `r` rounds left, so
//! `n1 + n2 + r = T` and the game value is `V_{0,0,T}`.
//!
//! The table is filled from the terminal layer
//! `V_{n,T-n,0} = 2n(n - T)/T` with the three-branch recurrence
//!
//! ```text
//! d = V1 - V2,  V1 = V_{n1+1,n2,r-1},  V2 = V_{n1,n2+1,r-1}
//! V = V2                          if d < -2
//! V = d^2/8 + (V1 + V2)/2 + 1/2   if -2 <= d <= 2
//! V = V1                          if d > 2
//! ```
//!
//! Only the middle branch is ever expected to fire; [`MinimaxTable`] counts
//! the branches so callers can check that instead of assuming it.
//!
//! The closed form tracks `u_{r+1} = u_r + (u_r + 1/T)^2` and
//! `v_{r+1} = u_r/2 + v_r + (r+1)/T - 1/2` from `u_0 = v_0 = 0`, with
//! `V_{n1,n2,r} = ((n1 - n2)^2 / 2) u_r - 2 n1 n2 / T + v_r`.

use crate::error::{Error, Result};

pub const MAX_DP_HORIZON: usize = 4096;

/// How often each branch of the recurrence was taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchCounts {
    pub lower: u64,
    pub middle: u64,
    pub upper: u64,
}

impl BranchCounts {
    pub fn only_middle(&self) -> bool {
        self.lower == 0 && self.upper == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxTable {
    pub horizon: usize,
    /// `V_{0,0,T}`.
    pub value: f64,
    /// Largest `|V1 - V2|` seen while filling the table.
    pub max_abs_gap: f64,
    pub branches: BranchCounts,
    /// `layers[r][n1] = V_{n1, T-r-n1, r}`; kept only by [`dp_table`].
    layers: Option<Vec<Vec<f64>>>,
}

impl MinimaxTable {
    /// `V_{n1,n2,r}`, if the full table was kept and the state is valid.
    pub fn entry(&self, n1: usize, n2: usize, r: usize) -> Option<f64> {
        if n1 + n2 + r != self.horizon {
            return None;
        }
        self.layers.as_ref().map(|l| l[r][n1])
    }

    pub fn has_layers(&self) -> bool {
        self.layers.is_some()
    }
}

fn check_dp_horizon(horizon: usize) -> Result<()> {
    if !(1..=MAX_DP_HORIZON).contains(&horizon) {
        return Err(Error::HorizonOutOfRange { horizon, min: 1, max: MAX_DP_HORIZON });
    }
    Ok(())
}

fn terminal_layer(horizon: usize) -> Vec<f64> {
    let t = horizon as f64;
    (0..=horizon).map(|n| 2.0 * n as f64 * (n as f64 - t) / t).collect()
}

/// One backward step: from layer `r - 1` (length `m + 1`) to layer `r` (length `m`).
fn step(prev: &[f64], gap: &mut f64, branches: &mut BranchCounts) -> Vec<f64> {
    (0..prev.len() - 1)
        .map(|n1| {
            let v1 = prev[n1 + 1];
            let v2 = prev[n1];
            let d = v1 - v2;
            *gap = gap.max(d.abs());
            if d < -2.0 {
                branches.lower += 1;
                v2
            } else if d > 2.0 {
                branches.upper += 1;
                v1
            } else {
                branches.middle += 1;
                d * d / 8.0 + (v1 + v2) / 2.0 + 0.5
            }
        })
        .collect()
}

fn solve(horizon: usize, keep: bool) -> Result<MinimaxTable> {
    check_dp_horizon(horizon)?;
    let mut gap = 0.0f64;
    let mut branches = BranchCounts::default();
    let mut layer = terminal_layer(horizon);
    let mut kept = keep.then(|| Vec::with_capacity(horizon + 1));
    for _ in 1..=horizon {
        let next = step(&layer, &mut gap, &mut branches);
        let prev = std::mem::replace(&mut layer, next);
        if let Some(k) = kept.as_mut() {
            k.push(prev);
        }
    }
    let value = layer[0];
    if let Some(k) = kept.as_mut() {
        k.push(layer);
    }
    Ok(MinimaxTable { horizon, value, max_abs_gap: gap, branches, layers: kept })
}

/// Game value by backward induction, keeping two live layers.
pub fn dp_value(horizon: usize) -> Result<MinimaxTable> {
    solve(horizon, false)
}

/// Like [`dp_value`] but keeps every layer for entrywise inspection.
pub fn dp_table(horizon: usize) -> Result<MinimaxTable> {
    solve(horizon, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSequences {
    pub horizon: usize,
    /// `u_0..=u_T`.
    pub u: Vec<f64>,
    /// `v_0..=v_T`.
    pub v: Vec<f64>,
    /// `a_0..a_{T-1}`, `a_r = u_r + 1/T`.
    pub a: Vec<f64>,
    /// `v_T`.
    pub value: f64,
}

impl ClosedFormSequences {
    /// `((n1 - n2)^2 / 2) u_r - 2 n1 n2 / T + v_r`.
    pub fn structural_value(&self, n1: usize, n2: usize, r: usize) -> f64 {
        let d = n1 as f64 - n2 as f64;
        d * d / 2.0 * self.u[r] - 2.0 * n1 as f64 * n2 as f64 / self.horizon as f64 + self.v[r]
    }
}

/// Steps `(u_r, v_r)` forward.
///
/// Summing `(r+1)/T - 1/2` term by term cancels badly for large `T`, so `v_r`
/// is carried as `half_sum_u + r(r + 1 - T)/(2T)`: the running half-sum of
/// `u` plus the exact partial sum of those terms. Both pieces satisfy the
/// recurrence, so their sum does too.
struct Sequences {
    horizon: usize,
    inv: f64,
    r: usize,
    u: f64,
    half_sum_u: f64,
}

impl Sequences {
    fn new(horizon: usize) -> Self {
        Self { horizon, inv: 1.0 / horizon as f64, r: 0, u: 0.0, half_sum_u: 0.0 }
    }

    fn v(&self) -> f64 {
        let r = self.r as f64;
        self.half_sum_u + r * (r + 1.0 - self.horizon as f64) / (2.0 * self.horizon as f64)
    }

    fn a(&self) -> f64 {
        self.u + self.inv
    }

    fn advance(&mut self) {
        let a = self.a();
        self.half_sum_u += self.u / 2.0;
        self.u += a * a;
        self.r += 1;
    }
}

pub fn closed_form(horizon: usize) -> Result<ClosedFormSequences> {
    if horizon < 1 {
        return Err(Error::HorizonOutOfRange { horizon, min: 1, max: usize::MAX });
    }
    let mut u = Vec::with_capacity(horizon + 1);
    let mut v = Vec::with_capacity(horizon + 1);
    let mut a = Vec::with_capacity(horizon);
    let mut seq = Sequences::new(horizon);
    for _ in 0..horizon {
        u.push(seq.u);
        v.push(seq.v());
        a.push(seq.a());
        seq.advance();
    }
    u.push(seq.u);
    let value = seq.v();
    v.push(value);
    Ok(ClosedFormSequences { horizon, u, v, a, value })
}

/// `1/(T - r)`.
pub fn a_upper_bound(horizon: usize, r: usize) -> f64 {
    1.0 / (horizon - r) as f64
}

/// `1/(T - r + ln T)`.
pub fn a_lower_bound(horizon: usize, r: usize) -> f64 {
    1.0 / ((horizon - r) as f64 + (horizon as f64).ln())
}

/// `(1/2) ln(T/(ln T + 1) + 1)`.
pub fn value_lower_bound(horizon: usize) -> f64 {
    let t = horizon as f64;
    0.5 * (t / (t.ln() + 1.0) + 1.0).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ABoundsCheck {
    /// `max_r (a_r - 1/(T - r))^+`.
    pub max_upper_violation: f64,
    /// `max_r (1/(T - r + ln T) - a_r)^+`.
    pub max_lower_violation: f64,
    pub value: f64,
    pub value_lower_bound: f64,
}

impl ABoundsCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_upper_violation <= tol
            && self.max_lower_violation <= tol
            && self.value >= self.value_lower_bound - tol
    }
}

/// Checks `1/(T - r + ln T) <= a_r <= 1/(T - r)` for every `r < T` in O(1) memory.
pub fn check_a_bounds(horizon: usize) -> Result<ABoundsCheck> {
    if horizon < 2 {
        return Err(Error::HorizonOutOfRange { horizon, min: 2, max: usize::MAX });
    }
    let mut seq = Sequences::new(horizon);
    let (mut up, mut low) = (0.0f64, 0.0f64);
    for r in 0..horizon {
        let ar = seq.a();
        up = up.max(ar - a_upper_bound(horizon, r));
        low = low.max(a_lower_bound(horizon, r) - ar);
        seq.advance();
    }
    Ok(ABoundsCheck {
        max_upper_violation: up,
        max_lower_violation: low,
        value: seq.v(),
        value_lower_bound: value_lower_bound(horizon),
    })
}

/// The adversary's optimal probability of `e_1` in a state whose successor
/// values are `v1` (after `e_1`) and `v2` (after `e_2`).
pub fn optimal_q(v1: f64, v2: f64) -> f64 {
    ((v1 - v2 + 2.0) / 4.0).clamp(0.0, 1.0)
}
