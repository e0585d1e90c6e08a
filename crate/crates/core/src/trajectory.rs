//! Construction of the three trajectory types from one user's event stream.
//!
//! A trajectory is a finite sequence of location symbols. Three builders are
//! provided:
//!
//! - **stationary**: one symbol per non-empty time bin of width `delta_t`,
//!   the bin's duration-dominant location. Encodes dwell time.
//! - **binned non-stationary**: the stationary series with repetitive
//!   adjacent locations removed.
//! - **sequential non-stationary**: the raw visit order with repetitive
//!   adjacent locations removed. Independent of `delta_t`.
//!
//! Bins are anchored at the user's first event and a visit contributes to a
//! bin the number of active seconds overlapping it. Ties for the dominant
//! location are broken by a deterministic generator keyed on
//! (seed, user, bin index), so identical inputs give bit-identical output on
//! every run.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{resolve_location, SpatialResolution, SymbolTable, VisitEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrajectoryKind {
    Stationary,
    BinnedNonStationary,
    SequentialNonStationary,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 3] = [
        TrajectoryKind::Stationary,
        TrajectoryKind::BinnedNonStationary,
        TrajectoryKind::SequentialNonStationary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryKind::Stationary => "stat",
            TrajectoryKind::BinnedNonStationary => "bin-nonstat",
            TrajectoryKind::SequentialNonStationary => "seq-nonstat",
        }
    }
}

impl FromStr for TrajectoryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stat" => Ok(TrajectoryKind::Stationary),
            "bin-nonstat" => Ok(TrajectoryKind::BinnedNonStationary),
            "seq-nonstat" => Ok(TrajectoryKind::SequentialNonStationary),
            other => Err(format!(
                "unknown trajectory kind {other:?}; expected stat, bin-nonstat or seq-nonstat"
            )),
        }
    }
}

impl std::fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A finite symbol sequence together with its construction parameters.
///
/// The alphabet size always equals the number of distinct symbols actually
/// present in the sequence; it is computed at construction. An empty
/// trajectory is legal and reports `is_empty()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    symbols: Vec<u32>,
    alphabet_size: usize,
    pub kind: TrajectoryKind,
    /// Bin width used during construction; `None` for sequential
    /// non-stationary trajectories, which do not depend on it.
    pub delta_t_seconds: Option<u64>,
    pub resolution: SpatialResolution,
}

impl Trajectory {
    pub fn new(
        symbols: Vec<u32>,
        kind: TrajectoryKind,
        delta_t_seconds: Option<u64>,
        resolution: SpatialResolution,
    ) -> Self {
        let mut distinct: Vec<u32> = symbols.clone();
        distinct.sort_unstable();
        distinct.dedup();
        Trajectory {
            symbols,
            alphabet_size: distinct.len(),
            kind,
            delta_t_seconds,
            resolution,
        }
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of distinct symbols present in the sequence.
    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// A trajectory over the first `n` symbols, same construction metadata.
    pub fn prefix(&self, n: usize) -> Trajectory {
        Trajectory::new(
            self.symbols[..n.min(self.symbols.len())].to_vec(),
            self.kind,
            self.delta_t_seconds,
            self.resolution,
        )
    }
}

/// Time-binning parameters for stationary trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinningConfig {
    /// Bin width in seconds; must be positive.
    pub delta_t_seconds: u64,
    /// Seed for the tie-break generator.
    pub tie_break_seed: u64,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig {
            delta_t_seconds: 60,
            tie_break_seed: 0,
        }
    }
}

/// Collapse maximal runs of equal adjacent symbols to single symbols.
pub fn compress_adjacent(symbols: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(symbols.len());
    for &s in symbols {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

/// Build the stationary trajectory: the duration-dominant location of each
/// non-empty `delta_t` bin, bins anchored at the first event's start.
///
/// Events must be one user's sorted, non-overlapping stream (the ingest
/// contract). Panics if `cfg.delta_t_seconds` is zero.
pub fn build_stationary(
    events: &[VisitEvent],
    cfg: &BinningConfig,
    resolution: SpatialResolution,
    table: &mut SymbolTable,
) -> Trajectory {
    assert!(cfg.delta_t_seconds > 0, "delta_t_seconds must be positive");
    let delta_t = cfg.delta_t_seconds as i64;
    let symbols = if events.is_empty() {
        Vec::new()
    } else {
        let anchor = events[0].start_time;
        let user = events[0].user_id.as_str();
        // bin index -> symbol -> overlapped active seconds
        let mut bins: BTreeMap<i64, BTreeMap<u32, u64>> = BTreeMap::new();
        for event in events {
            if event.active_seconds == 0 {
                continue;
            }
            let symbol = resolve_location(event, resolution, table);
            let end = event.end_time();
            let mut bin = (event.start_time - anchor).div_euclid(delta_t);
            loop {
                let bin_start = anchor + bin * delta_t;
                if bin_start >= end {
                    break;
                }
                let bin_end = bin_start + delta_t;
                let overlap = end.min(bin_end) - event.start_time.max(bin_start);
                if overlap > 0 {
                    *bins.entry(bin).or_default().entry(symbol).or_insert(0) += overlap as u64;
                }
                bin += 1;
            }
        }
        let mut out = Vec::with_capacity(bins.len());
        for (bin, contributions) in &bins {
            let best = *contributions.values().max().expect("non-empty bin");
            let tied: Vec<u32> = contributions
                .iter()
                .filter(|(_, &secs)| secs == best)
                .map(|(&sym, _)| sym)
                .collect();
            if tied.len() == 1 {
                out.push(tied[0]);
            } else {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(tie_break_key(cfg.tie_break_seed, user, *bin));
                out.push(tied[rng.random_range(0..tied.len())]);
            }
        }
        out
    };
    Trajectory::new(
        symbols,
        TrajectoryKind::Stationary,
        Some(cfg.delta_t_seconds),
        resolution,
    )
}

/// Build the binned non-stationary trajectory: the stationary series with
/// adjacent duplicates removed.
pub fn build_binned_nonstationary(
    events: &[VisitEvent],
    cfg: &BinningConfig,
    resolution: SpatialResolution,
    table: &mut SymbolTable,
) -> Trajectory {
    let stationary = build_stationary(events, cfg, resolution, table);
    Trajectory::new(
        compress_adjacent(stationary.symbols()),
        TrajectoryKind::BinnedNonStationary,
        Some(cfg.delta_t_seconds),
        resolution,
    )
}

/// Build the sequential non-stationary trajectory: raw visit order mapped to
/// symbols, then adjacent duplicates removed. Zero-duration visits count.
pub fn build_sequential_nonstationary(
    events: &[VisitEvent],
    resolution: SpatialResolution,
    table: &mut SymbolTable,
) -> Trajectory {
    let raw: Vec<u32> = events
        .iter()
        .map(|e| resolve_location(e, resolution, table))
        .collect();
    Trajectory::new(
        compress_adjacent(&raw),
        TrajectoryKind::SequentialNonStationary,
        None,
        resolution,
    )
}

/// FNV-1a over (seed, user, bin); stable across platforms and releases.
fn tie_break_key(seed: u64, user: &str, bin: i64) -> u64 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut hash = OFFSET;
    let mut eat = |byte: u8| {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(PRIME);
    };
    for b in seed.to_le_bytes() {
        eat(b);
    }
    for b in user.as_bytes() {
        eat(*b);
    }
    eat(0xff);
    for b in bin.to_le_bytes() {
        eat(b);
    }
    hash
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("dump line {line}: {message}")]
    BadDumpLine { line: u64, message: String },
}

/// Write one user's trajectory in the dump format:
/// `user_id<TAB>kind<TAB>N<TAB>space-separated symbol ids`.
pub fn write_dump_line<W: std::io::Write>(
    writer: &mut W,
    user_id: &str,
    trajectory: &Trajectory,
) -> std::io::Result<()> {
    let ids: Vec<String> = trajectory.symbols().iter().map(u32::to_string).collect();
    writeln!(
        writer,
        "{}\t{}\t{}\t{}",
        user_id,
        trajectory.kind,
        trajectory.alphabet_size(),
        ids.join(" ")
    )
}

/// Parse one dump line back into (user id, kind, symbols); the recorded
/// alphabet size is validated against the symbols.
pub fn parse_dump_line(
    text: &str,
    line: u64,
) -> Result<(String, TrajectoryKind, Vec<u32>), TrajectoryError> {
    let bad = |message: String| TrajectoryError::BadDumpLine { line, message };
    let fields: Vec<&str> = text.trim_end_matches('\n').split('\t').collect();
    if fields.len() != 4 {
        return Err(bad(format!(
            "expected 4 tab-separated fields, got {}",
            fields.len()
        )));
    }
    let kind = TrajectoryKind::from_str(fields[1]).map_err(bad)?;
    let n: usize = fields[2]
        .parse()
        .map_err(|e| bad(format!("bad alphabet size: {e}")))?;
    let symbols: Vec<u32> = if fields[3].is_empty() {
        Vec::new()
    } else {
        fields[3]
            .split(' ')
            .map(|tok| tok.parse().map_err(|e| bad(format!("bad symbol id: {e}"))))
            .collect::<Result<_, _>>()?
    };
    let mut distinct = symbols.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != n {
        return Err(bad(format!(
            "alphabet size {n} does not match {} distinct symbols",
            distinct.len()
        )));
    }
    Ok((fields[0].to_owned(), kind, symbols))
}
