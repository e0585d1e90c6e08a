//! Seeded synthetic users with known ground-truth entropy rates.
//!
//! A first-order Markov chain over `k` states has the closed-form entropy
//! rate `h = -sum_i pi_i sum_j P_ij log2 P_ij` with `pi` its stationary
//! distribution, which makes such chains exact oracles for validating the
//! match-length estimator end to end: generate a realization, push it
//! through the ingest/trajectory/estimation pipeline, and compare against
//! the closed form.
//!
//! [`synth_events`] renders generated symbols back into visit events
//! (domain `d<k>`, per-visit url suffix, category bucket `c<k mod 5>`,
//! exponentially distributed dwell times, back-to-back timestamps), so
//! synthetic data flows through exactly the same pipeline as real logs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::ingest::VisitEvent;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("transition matrix must be square, row {row} has {got} entries for {k} states")]
    NotSquare { row: usize, got: usize, k: usize },
    #[error("transition matrix needs at least one state")]
    Empty,
    #[error("row {row} sums to {sum}, not 1")]
    BadRowSum { row: usize, sum: f64 },
    #[error("negative probability at row {row}, column {column}")]
    NegativeEntry { row: usize, column: usize },
    #[error("initial distribution sums to {sum}, not 1")]
    BadInitial { sum: f64 },
    #[error("initial distribution has {got} entries for {k} states")]
    InitialSizeMismatch { got: usize, k: usize },
    #[error("chain is reducible: some state pair is mutually unreachable, so no unique stationary distribution exists")]
    Reducible,
    #[error("stationary solve failed: matrix is numerically singular")]
    SingularSystem,
    #[error("{0}")]
    InvalidParameter(String),
}

/// Row-stochastic transition matrix plus an initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    transition: Vec<Vec<f64>>,
    initial: Vec<f64>,
    k: usize,
}

impl MarkovModel {
    /// Validates shape, non-negativity, and row sums within 1e-12.
    pub fn new(transition: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self, SynthError> {
        let k = transition.len();
        if k == 0 {
            return Err(SynthError::Empty);
        }
        for (row_idx, row) in transition.iter().enumerate() {
            if row.len() != k {
                return Err(SynthError::NotSquare {
                    row: row_idx,
                    got: row.len(),
                    k,
                });
            }
            for (col_idx, &p) in row.iter().enumerate() {
                if p < 0.0 || !p.is_finite() {
                    return Err(SynthError::NegativeEntry {
                        row: row_idx,
                        column: col_idx,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(SynthError::BadRowSum { row: row_idx, sum });
            }
        }
        if initial.len() != k {
            return Err(SynthError::InitialSizeMismatch {
                got: initial.len(),
                k,
            });
        }
        if initial.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(SynthError::BadInitial {
                sum: initial.iter().sum(),
            });
        }
        let initial_sum: f64 = initial.iter().sum();
        if (initial_sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(SynthError::BadInitial { sum: initial_sum });
        }
        Ok(MarkovModel {
            transition,
            initial,
            k,
        })
    }

    /// Uniform initial distribution convenience.
    pub fn with_uniform_initial(transition: Vec<Vec<f64>>) -> Result<Self, SynthError> {
        let k = transition.len();
        Self::new(transition, vec![1.0 / k as f64; k.max(1)])
    }

    /// All rows identical and uniform: an i.i.d. uniform source.
    pub fn uniform_iid(k: usize) -> Result<Self, SynthError> {
        if k == 0 {
            return Err(SynthError::Empty);
        }
        Self::with_uniform_initial(vec![vec![1.0 / k as f64; k]; k])
    }

    /// An i.i.d. source with rank popularity `p(i) proportional to
    /// (i+1)^-exponent`; exponent 0 is the uniform source.
    pub fn iid_zipf(k: usize, exponent: f64) -> Result<Self, SynthError> {
        if k == 0 {
            return Err(SynthError::Empty);
        }
        if exponent < 0.0 || !exponent.is_finite() {
            return Err(SynthError::InvalidParameter(format!(
                "zipf exponent must be a non-negative number, got {exponent}"
            )));
        }
        let mut weights: Vec<f64> = (0..k).map(|i| (i as f64 + 1.0).powf(-exponent)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        // renormalize residual rounding into the largest weight
        let drift: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += drift;
        Self::new(vec![weights.clone(); k], weights)
    }

    /// Self-loop augmentation: `w * I + (1 - w) * P`, with the same initial
    /// distribution. Raises dwell heaviness without touching the jump
    /// structure.
    pub fn mix_with_identity(&self, weight: f64) -> Result<Self, SynthError> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(SynthError::InvalidParameter(format!(
                "identity mix weight must lie in [0, 1], got {weight}"
            )));
        }
        let transition = self
            .transition
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &p)| {
                        let identity = if i == j { 1.0 } else { 0.0 };
                        weight * identity + (1.0 - weight) * p
                    })
                    .collect::<Vec<f64>>()
            })
            .map(|mut row| {
                let sum: f64 = row.iter().sum();
                let pivot = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                row[pivot] += 1.0 - sum;
                row
            })
            .collect();
        Self::new(transition, self.initial.clone())
    }

    pub fn state_count(&self) -> usize {
        self.k
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// True when every state can reach every other along positive-probability
    /// edges.
    pub fn is_irreducible(&self) -> bool {
        reachable_from(&self.transition, 0).iter().all(|&r| r) && {
            let transposed: Vec<Vec<f64>> = (0..self.k)
                .map(|j| (0..self.k).map(|i| self.transition[i][j]).collect())
                .collect();
            reachable_from(&transposed, 0).iter().all(|&r| r)
        }
    }
}

fn reachable_from(adjacency: &[Vec<f64>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(state) = stack.pop() {
        for (next, &p) in adjacency[state].iter().enumerate() {
            if p > 0.0 && !seen[next] {
                seen[next] = true;
                stack.push(next);
            }
        }
    }
    seen
}

/// Stationary distribution of an irreducible chain, by a dense linear solve
/// of `pi P = pi` with one equation replaced by the normalization row.
#[allow(clippy::needless_range_loop)]
pub fn stationary_distribution(model: &MarkovModel) -> Result<Vec<f64>, SynthError> {
    if !model.is_irreducible() {
        return Err(SynthError::Reducible);
    }
    let k = model.k;
    if k == 1 {
        return Ok(vec![1.0]);
    }
    // (P^T - I) pi = 0 with the last equation swapped for sum(pi) = 1.
    let mut matrix = vec![vec![0.0f64; k]; k];
    let mut rhs = vec![0.0f64; k];
    for i in 0..k {
        for j in 0..k {
            matrix[i][j] = model.transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        matrix[k - 1][j] = 1.0;
    }
    rhs[k - 1] = 1.0;

    // Gaussian elimination with partial pivoting.
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| matrix[a][col].abs().total_cmp(&matrix[b][col].abs()))
            .expect("non-empty range");
        if matrix[pivot][col].abs() < 1e-14 {
            return Err(SynthError::SingularSystem);
        }
        matrix.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..k {
            let factor = matrix[row][col] / matrix[col][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..k {
                matrix[row][j] -= factor * matrix[col][j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut pi = vec![0.0f64; k];
    for row in (0..k).rev() {
        let mut value = rhs[row];
        for j in row + 1..k {
            value -= matrix[row][j] * pi[j];
        }
        pi[row] = value / matrix[row][row];
    }
    for p in &mut pi {
        if *p < 0.0 && *p > -1e-12 {
            *p = 0.0;
        }
    }
    Ok(pi)
}

/// Closed-form entropy rate `-sum_i pi_i sum_j P_ij log2 P_ij` in bits per
/// symbol. Errors on reducible chains.
pub fn markov_entropy_rate(model: &MarkovModel) -> Result<f64, SynthError> {
    let pi = stationary_distribution(model)?;
    let mut rate = 0.0;
    for (i, row) in model.transition.iter().enumerate() {
        if pi[i] <= 0.0 {
            continue;
        }
        for &p in row {
            if p > 0.0 {
                rate -= pi[i] * p * p.log2();
            }
        }
    }
    Ok(rate.max(0.0))
}

/// Draw a length-`n` realization; deterministic for a given seed. The first
/// state comes from the initial distribution.
pub fn markov_generate(model: &MarkovModel, n: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |distribution: &[f64]| -> u32 {
        let roll: f64 = rng.random();
        let mut cumulative = 0.0;
        for (state, &p) in distribution.iter().enumerate() {
            cumulative += p;
            if roll < cumulative {
                return state as u32;
            }
        }
        distribution.len() as u32 - 1
    };
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut state = draw(&model.initial);
    out.push(state);
    for _ in 1..n {
        state = draw(&model.transition[state as usize]);
        out.push(state);
    }
    out
}

/// Recipe for one synthetic user.
#[derive(Debug, Clone)]
pub struct SyntheticUserSpec {
    pub user_id: String,
    pub model: MarkovModel,
    pub dwell_mean_seconds: f64,
    pub visit_count: usize,
    pub seed: u64,
    /// When set, generation ignores the chain's transition structure and
    /// draws i.i.d. from a Zipf popularity law over the same states.
    pub zipf_exponent: Option<f64>,
}

impl SyntheticUserSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.visit_count == 0 {
            return Err(SynthError::InvalidParameter(
                "visit_count must be at least 1".into(),
            ));
        }
        if self.dwell_mean_seconds.is_nan() || self.dwell_mean_seconds <= 0.0 {
            return Err(SynthError::InvalidParameter(format!(
                "dwell_mean_seconds must be positive, got {}",
                self.dwell_mean_seconds
            )));
        }
        Ok(())
    }

    /// The model actually generated from: the configured chain, or the
    /// i.i.d. Zipf source over the same state count.
    pub fn effective_model(&self) -> Result<MarkovModel, SynthError> {
        match self.zipf_exponent {
            Some(exponent) => MarkovModel::iid_zipf(self.model.state_count(), exponent),
            None => Ok(self.model.clone()),
        }
    }
}

/// Base epoch for synthetic timestamps.
const SYNTH_EPOCH: i64 = 1_600_000_000;

/// Render a synthetic user into visit events in the ingest data model.
///
/// One event per generated symbol; dwell times are exponential with the
/// configured mean, rounded to whole seconds and floored at one second so
/// streams stay strictly ordered; timestamps are back-to-back.
pub fn synth_events(spec: &SyntheticUserSpec) -> Result<Vec<VisitEvent>, SynthError> {
    spec.validate()?;
    let model = spec.effective_model()?;
    let symbols = markov_generate(&model, spec.visit_count, spec.seed);
    // dwell stream is seeded separately so symbol draws stay comparable
    // across dwell settings
    let mut dwell_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0xd6e8_feb8_6659_fd93);
    let exponential = Exp::new(1.0 / spec.dwell_mean_seconds)
        .map_err(|e| SynthError::InvalidParameter(format!("bad dwell mean: {e}")))?;
    let mut events = Vec::with_capacity(symbols.len());
    let mut clock = SYNTH_EPOCH;
    for (index, &symbol) in symbols.iter().enumerate() {
        let dwell = exponential.sample(&mut dwell_rng).round().max(1.0) as u64;
        let domain = format!("d{symbol}");
        events.push(VisitEvent {
            user_id: spec.user_id.clone(),
            start_time: clock,
            active_seconds: dwell,
            url: format!("{domain}/v{index}"),
            domain,
            category: format!("c{}", symbol % 5),
        });
        clock += dwell as i64;
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_two_state() -> MarkovModel {
        MarkovModel::with_uniform_initial(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()
    }

    #[test]
    fn model_validation_rejects_bad_rows() {
        assert!(matches!(
            MarkovModel::with_uniform_initial(vec![vec![0.5, 0.4], vec![0.5, 0.5]]),
            Err(SynthError::BadRowSum { row: 0, .. })
        ));
        assert!(matches!(
            MarkovModel::with_uniform_initial(vec![vec![1.5, -0.5], vec![0.5, 0.5]]),
            Err(SynthError::NegativeEntry { row: 0, column: 1 })
        ));
        assert!(matches!(
            MarkovModel::with_uniform_initial(vec![vec![1.0]; 2]),
            Err(SynthError::NotSquare { .. })
        ));
    }

    #[test]
    fn deterministic_cycle_generates_repeating_pattern() {
        let cycle = MarkovModel::new(
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let symbols = markov_generate(&cycle, 9, 5);
        assert_eq!(symbols, vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn absorbing_start_gives_constant_sequence() {
        let absorbing =
            MarkovModel::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![1.0, 0.0]).unwrap();
        let symbols = markov_generate(&absorbing, 50, 3);
        assert!(symbols.iter().all(|&s| s == 0));
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let model = symmetric_two_state();
        assert_eq!(
            markov_generate(&model, 1000, 9),
            markov_generate(&model, 1000, 9)
        );
        assert_ne!(
            markov_generate(&model, 1000, 9),
            markov_generate(&model, 1000, 10)
        );
    }

    #[test]
    fn empirical_transition_frequencies_match_the_matrix() {
        let model = symmetric_two_state();
        let symbols = markov_generate(&model, 100_000, 11);
        let mut counts = [[0u64; 2]; 2];
        for pair in symbols.windows(2) {
            counts[pair[0] as usize][pair[1] as usize] += 1;
        }
        for (from, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            for (to, &count) in row.iter().enumerate() {
                let freq = count as f64 / total as f64;
                assert!(
                    (freq - model.transition()[from][to]).abs() < 0.01,
                    "P[{from}][{to}] empirical {freq}"
                );
            }
        }
    }

    #[test]
    fn permutation_matrix_has_zero_entropy_rate() {
        let cycle = MarkovModel::with_uniform_initial(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(markov_entropy_rate(&cycle).unwrap(), 0.0);
    }

    #[test]
    fn uniform_iid_rows_have_log2_k_entropy_rate() {
        let model = MarkovModel::uniform_iid(4).unwrap();
        assert!((markov_entropy_rate(&model).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_chain_entropy_rate_is_binary_entropy_of_flip() {
        // pi = (1/2, 1/2); h = H_b(0.1), cross-checked to 1e-9
        let h = markov_entropy_rate(&symmetric_two_state()).unwrap();
        assert!((h - 0.4689955935892812).abs() < 1e-9);
        let pi = stationary_distribution(&symmetric_two_state()).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let disconnected =
            MarkovModel::with_uniform_initial(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            markov_entropy_rate(&disconnected).unwrap_err(),
            SynthError::Reducible
        );
    }

    #[test]
    fn stationary_distribution_residual_is_tiny() {
        let model = MarkovModel::with_uniform_initial(vec![
            vec![0.2, 0.5, 0.3],
            vec![0.6, 0.1, 0.3],
            vec![0.25, 0.25, 0.5],
        ])
        .unwrap();
        let pi = stationary_distribution(&model).unwrap();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..3 {
            let projected: f64 = (0..3).map(|i| pi[i] * model.transition()[i][j]).sum();
            assert!(
                (projected - pi[j]).abs() <= 1e-10,
                "residual at state {j}: {}",
                (projected - pi[j]).abs()
            );
        }
    }

    #[test]
    fn zipf_zero_exponent_is_uniform() {
        let model = MarkovModel::iid_zipf(4, 0.0).unwrap();
        for p in model.initial() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        assert!((markov_entropy_rate(&model).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mix_with_identity_adds_self_loops() {
        let base = MarkovModel::with_uniform_initial(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let sticky = base.mix_with_identity(0.8).unwrap();
        assert!((sticky.transition()[0][0] - 0.8).abs() < 1e-12);
        assert!((sticky.transition()[0][1] - 0.2).abs() < 1e-12);
    }

    fn spec(visits: usize, dwell: f64, seed: u64) -> SyntheticUserSpec {
        SyntheticUserSpec {
            user_id: "synthetic".into(),
            model: symmetric_two_state(),
            dwell_mean_seconds: dwell,
            visit_count: visits,
            seed,
            zipf_exponent: None,
        }
    }

    #[test]
    fn single_visit_spec_yields_single_event() {
        let events = synth_events(&spec(1, 30.0, 1)).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].start_time, SYNTH_EPOCH);
    }

    #[test]
    fn dwell_sample_mean_is_close_to_configured_mean() {
        let events = synth_events(&spec(10_000, 30.0, 42)).unwrap();
        let mean = events.iter().map(|e| e.active_seconds as f64).sum::<f64>() / 10_000.0;
        assert!(
            (mean - 30.0).abs() < 1.5,
            "sample mean dwell {mean} drifted from 30"
        );
    }

    #[test]
    fn events_are_back_to_back_and_deterministic() {
        let events = synth_events(&spec(500, 20.0, 7)).unwrap();
        for pair in events.windows(2) {
            assert_eq!(pair[0].end_time(), pair[1].start_time);
        }
        assert_eq!(events, synth_events(&spec(500, 20.0, 7)).unwrap());
    }

    #[test]
    fn category_buckets_domains_mod_five() {
        let model = MarkovModel::uniform_iid(8).unwrap();
        let events = synth_events(&SyntheticUserSpec {
            user_id: "u".into(),
            model,
            dwell_mean_seconds: 10.0,
            visit_count: 400,
            seed: 3,
            zipf_exponent: None,
        })
        .unwrap();
        for event in &events {
            let state: u32 = event.domain[1..].parse().unwrap();
            assert_eq!(event.category, format!("c{}", state % 5));
            assert!(event.url.starts_with(&event.domain));
        }
    }

    #[test]
    fn cycle_through_events_is_recovered_by_the_sequential_builder() {
        use crate::ingest::{SpatialResolution, SymbolTable};
        use crate::trajectory::build_sequential_nonstationary;
        let cycle = MarkovModel::new(
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let events = synth_events(&SyntheticUserSpec {
            user_id: "u".into(),
            model: cycle,
            dwell_mean_seconds: 40.0,
            visit_count: 12,
            seed: 2,
            zipf_exponent: None,
        })
        .unwrap();
        let mut table = SymbolTable::new();
        let seq = build_sequential_nonstationary(&events, SpatialResolution::Domain, &mut table);
        let expected: Vec<u32> = (0..12).map(|i| i % 3).collect();
        assert_eq!(seq.symbols(), expected);
    }
}
