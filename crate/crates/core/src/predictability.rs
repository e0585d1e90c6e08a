//! Predictability bounds from entropy, and the data-sufficiency analysis.
//!
//! For a process with entropy rate `S` over `N` locations, the probability
//! of correctly predicting the next location is bounded above by the root
//! `Pi` of
//!
//! ```text
//! S = H_b(Pi) + (1 - Pi) * log2(N - 1)
//! ```
//!
//! on the branch `Pi in [1/N, 1]`, where the left-hand side decreases
//! strictly from `log2(N)` to 0. The relation admits a second root below
//! `1/N`; the upper bound is the larger one, since guessing the mode of a
//! uniform distribution already achieves `1/N`. Substituting the random or
//! uncorrelated entropy for `S` yields the hypothetical bounds for a
//! preference-free or order-free version of the same trajectory.
//!
//! Entropies above `log2(N)` (possible for the match-length estimate on
//! short sequences) are clamped to the boundary solution `1/N` and flagged,
//! so affected users can be counted downstream.

use thiserror::Error;

use crate::infotheory::{match_lengths, EntropyError, EntropyProfile};
use crate::trajectory::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum PredictabilityError {
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("entropy must be a non-negative number, got {0}")]
    InvalidEntropy(f64),
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
    #[error("step must be at least 1")]
    ZeroStep,
    #[error("trajectory of length {length} is shorter than 2*step = {min}")]
    TooShortForConvergence { length: usize, min: usize },
    #[error("no convergence curves supplied")]
    NoCurves,
    #[error("convergence curves do not share one length grid")]
    GridMismatch,
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

/// Binary entropy `-p log2 p - (1-p) log2 (1-p)`, zero at the endpoints.
pub fn binary_entropy(p: f64) -> Result<f64, PredictabilityError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PredictabilityError::ProbabilityOutOfRange(p));
    }
    Ok(binary_entropy_unchecked(p))
}

fn binary_entropy_unchecked(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Result of inverting the entropy/predictability relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoSolution {
    pub probability: f64,
    /// Set when the input entropy exceeded `log2(N)` and the boundary
    /// solution `1/N` was returned instead.
    pub clamped: bool,
}

/// Solve `H_b(Pi) + (1 - Pi) log2(N - 1) = s` for the unique `Pi` in
/// `[1/N, 1]` by bisection (200 iterations, 1e-12 bracket tolerance;
/// residual comfortably below 1e-9).
///
/// Special cases: `n = 1` and `s = 0` give exactly 1; `s >= log2(n)` gives
/// exactly `1/n`, flagged as clamped when strictly above.
pub fn solve_fano(s_bits: f64, n: usize) -> Result<FanoSolution, PredictabilityError> {
    if !s_bits.is_finite() || s_bits < 0.0 {
        return Err(PredictabilityError::InvalidEntropy(s_bits));
    }
    if n == 0 {
        return Err(PredictabilityError::EmptyAlphabet);
    }
    if n == 1 {
        return Ok(FanoSolution {
            probability: 1.0,
            clamped: s_bits > 0.0,
        });
    }
    if s_bits == 0.0 {
        return Ok(FanoSolution {
            probability: 1.0,
            clamped: false,
        });
    }
    let log2_n = (n as f64).log2();
    if s_bits >= log2_n {
        return Ok(FanoSolution {
            probability: 1.0 / n as f64,
            clamped: s_bits > log2_n,
        });
    }
    let log2_n_minus_1 = (n as f64 - 1.0).log2();
    let residual = |pi: f64| binary_entropy_unchecked(pi) + (1.0 - pi) * log2_n_minus_1 - s_bits;
    let mut lo = 1.0 / n as f64; // residual > 0 here (lhs = log2 n at 1/n)
    let mut hi = 1.0; // residual < 0 here (lhs = 0)
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FanoSolution {
        probability: 0.5 * (lo + hi),
        clamped: false,
    })
}

/// The predictability triple for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictabilityProfile {
    pub pi_rand: f64,
    pub pi_unc: f64,
    pub pi_max: f64,
    pub n_symbols: usize,
    pub length: usize,
    /// True when any input entropy exceeded `log2(N)` and was clamped.
    pub clamped: bool,
}

/// Invert the Fano relation for all three entropies of a profile.
///
/// `pi_rand` is exactly `1/N` by construction, since the random entropy
/// sits on the clamp boundary.
pub fn predictability_profile(
    profile: &EntropyProfile,
) -> Result<PredictabilityProfile, PredictabilityError> {
    let rand = solve_fano(profile.s_rand, profile.n_symbols)?;
    let unc = solve_fano(profile.s_unc, profile.n_symbols)?;
    let max = solve_fano(profile.s_rate, profile.n_symbols)?;
    Ok(PredictabilityProfile {
        pi_rand: rand.probability,
        pi_unc: unc.probability,
        pi_max: max.probability,
        n_symbols: profile.n_symbols,
        length: profile.length,
        clamped: rand.clamped || unc.clamped || max.clamped,
    })
}

/// Absolute change in the maximum-predictability estimate as a trajectory
/// is extended, evaluated on a grid of prefix lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    lengths: Vec<usize>,
    deltas: Vec<f64>,
}

impl ConvergenceCurve {
    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

/// Maximum predictability of the first `length` symbols, with the alphabet
/// recomputed on the prefix. A length-1 prefix has a single location and
/// is perfectly predictable.
fn prefix_pi_max(
    lambdas: &crate::infotheory::MatchLengthVector,
    distinct_at: &[usize],
    length: usize,
) -> f64 {
    if length < 2 {
        return 1.0;
    }
    let sum = lambdas.prefix_sum(length);
    let s = length as f64 * (length as f64).log2() / sum as f64;
    solve_fano(s, distinct_at[length - 1])
        .expect("non-negative entropy and positive alphabet")
        .probability
}

/// Track `|Pi_max(l') - Pi_max(l' - step)|` over the grid of multiples of
/// `step` from `2*step` up to the trajectory length.
pub fn convergence_curve(
    trajectory: &Trajectory,
    step: usize,
) -> Result<ConvergenceCurve, PredictabilityError> {
    if step == 0 {
        return Err(PredictabilityError::ZeroStep);
    }
    let length = trajectory.len();
    if length < 2 * step {
        return Err(PredictabilityError::TooShortForConvergence {
            length,
            min: 2 * step,
        });
    }
    let symbols = trajectory.symbols();
    let lambdas = match_lengths(symbols);
    let mut seen = std::collections::HashSet::new();
    let mut distinct_at = Vec::with_capacity(length);
    for &s in symbols {
        seen.insert(s);
        distinct_at.push(seen.len());
    }

    let mut lengths = Vec::new();
    let mut deltas = Vec::new();
    let mut previous = prefix_pi_max(&lambdas, &distinct_at, step);
    for grid_length in (2 * step..=length).step_by(step) {
        let current = prefix_pi_max(&lambdas, &distinct_at, grid_length);
        lengths.push(grid_length);
        deltas.push((current - previous).abs());
        previous = current;
    }
    Ok(ConvergenceCurve { lengths, deltas })
}

/// Outcome of the minimum-sufficient-length search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinLengthResult {
    Reached(usize),
    NotReached,
}

/// Smallest grid length at which the cross-user mean delta drops to the
/// threshold. All curves must share one length grid.
pub fn min_sufficient_length(
    curves: &[ConvergenceCurve],
    threshold: f64,
) -> Result<MinLengthResult, PredictabilityError> {
    let first = curves.first().ok_or(PredictabilityError::NoCurves)?;
    if curves.iter().any(|c| c.lengths != first.lengths) {
        return Err(PredictabilityError::GridMismatch);
    }
    let users = curves.len() as f64;
    for (idx, &length) in first.lengths.iter().enumerate() {
        let mean: f64 = curves.iter().map(|c| c.deltas[idx]).sum::<f64>() / users;
        if mean <= threshold {
            return Ok(MinLengthResult::Reached(length));
        }
    }
    Ok(MinLengthResult::NotReached)
}
