//! Entropy measures for a trajectory.
//!
//! Three per-trajectory quantities are computed, all in bits:
//!
//! - **random entropy** `log2(N)`: uncertainty if every visited location
//!   were equally likely — the maximum for an alphabet of size `N`.
//! - **uncorrelated entropy**: Shannon entropy of the empirical visit
//!   frequencies; sensitive to location preferences, blind to order.
//! - **entropy rate**: a match-length estimate of the per-symbol
//!   uncertainty of the generating process, accounting for temporal
//!   correlations of every range. The estimate is
//!   `S = l * log2(l) / sum(Lambda_i)`, where `Lambda_i` is one plus the
//!   length of the longest substring starting at `i` that already occurred
//!   fully inside the strict past `x_1..x_{i-1}`. It converges to the true
//!   entropy rate as the sequence grows.
//!
//! The gap between uncorrelated entropy and the entropy rate is the
//! uncertainty reduction attributable to repeated visitation patterns —
//! the routineness signal the rest of the crate is built around.
//!
//! Block entropy over sliding windows is provided as a diagnostic for the
//! same phenomenon at a fixed pattern length.
//!
//! Entropies are accumulated over sorted count multisets, so results are
//! bit-identical under any relabeling of symbol ids.

use std::collections::HashMap;

use thiserror::Error;

use crate::sam::SuffixAutomaton;
use crate::trajectory::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("entropy is undefined for an empty trajectory")]
    EmptyTrajectory,
    #[error("entropy rate needs at least 2 symbols, got {0}")]
    InsufficientLength(usize),
    #[error("block length {length} out of range 0..={max}")]
    BlockLengthOutOfRange { length: usize, max: usize },
}

/// The entropy triple for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyProfile {
    /// `log2(N)`, bits.
    pub s_rand: f64,
    /// Shannon entropy of visit frequencies, bits.
    pub s_unc: f64,
    /// Match-length entropy-rate estimate, bits per symbol.
    pub s_rate: f64,
    pub n_symbols: usize,
    pub length: usize,
}

/// Per-position match lengths `Lambda_1..Lambda_l`.
///
/// Invariants: `Lambda_1 = 1` and `1 <= Lambda_i <= l - i + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchLengthVector {
    lambdas: Vec<u64>,
}

impl MatchLengthVector {
    pub fn lambdas(&self) -> &[u64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn sum(&self) -> u64 {
        self.lambdas.iter().sum()
    }

    /// `sum(Lambda)` recomputed as if the sequence were truncated to its
    /// first `length` symbols. Match lengths depend only on the past, so
    /// the full vector determines every prefix's vector by capping at the
    /// shorter remaining window.
    pub fn prefix_sum(&self, length: usize) -> u64 {
        debug_assert!(length <= self.lambdas.len());
        self.lambdas[..length]
            .iter()
            .enumerate()
            .map(|(i, &lambda)| lambda.min((length - i) as u64 + 1))
            .sum()
    }
}

/// Shannon entropy in bits of a count multiset.
///
/// Computed as `log2(T) - sum(c * log2(c)) / T` over ascending counts;
/// the summation order is fixed by sorting, never by map iteration.
fn entropy_of_counts(counts: &mut [u64]) -> f64 {
    counts.sort_unstable();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total_f = total as f64;
    let weighted: f64 = counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            c * c.log2()
        })
        .sum();
    (total_f.log2() - weighted / total_f).max(0.0)
}

/// Maximum entropy `log2(N)` for the trajectory's alphabet.
pub fn random_entropy(trajectory: &Trajectory) -> Result<f64, EntropyError> {
    if trajectory.is_empty() {
        return Err(EntropyError::EmptyTrajectory);
    }
    Ok((trajectory.alphabet_size() as f64).log2())
}

/// Shannon entropy of the empirical visit-frequency distribution.
pub fn uncorrelated_entropy(trajectory: &Trajectory) -> Result<f64, EntropyError> {
    if trajectory.is_empty() {
        return Err(EntropyError::EmptyTrajectory);
    }
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &s in trajectory.symbols() {
        *counts.entry(s).or_insert(0) += 1;
    }
    let mut counts: Vec<u64> = counts.into_values().collect();
    Ok(entropy_of_counts(&mut counts))
}

/// Shannon entropy of the empirical distribution over the `l - L + 1`
/// overlapping length-`L` windows. `L = 0` is defined as 0 bits and
/// `L = 1` equals [`uncorrelated_entropy`].
pub fn block_entropy(trajectory: &Trajectory, block_length: usize) -> Result<f64, EntropyError> {
    if trajectory.is_empty() {
        return Err(EntropyError::EmptyTrajectory);
    }
    if block_length == 0 {
        return Ok(0.0);
    }
    let symbols = trajectory.symbols();
    if block_length > symbols.len() {
        return Err(EntropyError::BlockLengthOutOfRange {
            length: block_length,
            max: symbols.len(),
        });
    }
    let mut counts: HashMap<&[u32], u64> = HashMap::new();
    for window in symbols.windows(block_length) {
        *counts.entry(window).or_insert(0) += 1;
    }
    let mut counts: Vec<u64> = counts.into_values().collect();
    Ok(entropy_of_counts(&mut counts))
}

/// Match lengths against the strict past for every position.
///
/// `Lambda_i` is one plus the length of the longest contiguous substring
/// starting at position `i` that also appears as a contiguous substring
/// within `x_1..x_{i-1}`; the window is capped at the end of the sequence.
pub fn match_lengths(symbols: &[u32]) -> MatchLengthVector {
    let matches = SuffixAutomaton::longest_past_matches(symbols);
    MatchLengthVector {
        lambdas: matches.iter().map(|&m| m as u64 + 1).collect(),
    }
}

/// Entropy-rate estimate `l * log2(l) / sum(Lambda)` for a symbol slice.
pub fn lz_entropy_rate_of(symbols: &[u32]) -> Result<f64, EntropyError> {
    let length = symbols.len();
    if length < 2 {
        return Err(EntropyError::InsufficientLength(length));
    }
    let sum = match_lengths(symbols).sum();
    Ok(length as f64 * (length as f64).log2() / sum as f64)
}

/// Entropy-rate estimate for a trajectory.
pub fn lz_entropy_rate(trajectory: &Trajectory) -> Result<f64, EntropyError> {
    lz_entropy_rate_of(trajectory.symbols())
}

/// All three entropy measures for one trajectory. Needs `l >= 2`.
pub fn entropy_profile(trajectory: &Trajectory) -> Result<EntropyProfile, EntropyError> {
    Ok(EntropyProfile {
        s_rand: random_entropy(trajectory)?,
        s_unc: uncorrelated_entropy(trajectory)?,
        s_rate: lz_entropy_rate(trajectory)?,
        n_symbols: trajectory.alphabet_size(),
        length: trajectory.len(),
    })
}

/// Reference implementation of [`match_lengths`] by exhaustive substring
/// search. Quadratic and worse; exists so the fast path can be checked
/// against something independently simple.
pub fn match_lengths_naive(symbols: &[u32]) -> MatchLengthVector {
    let n = symbols.len();
    let mut lambdas = Vec::with_capacity(n);
    for i in 0..n {
        let past = &symbols[..i];
        let mut m = 0usize;
        while i + m < n && m < i {
            let window = &symbols[i..=i + m];
            let found = past
                .windows(window.len())
                .any(|candidate| candidate == window);
            if found {
                m += 1;
            } else {
                break;
            }
        }
        lambdas.push(m as u64 + 1);
    }
    MatchLengthVector { lambdas }
}
