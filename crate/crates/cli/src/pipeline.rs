//! The per-user analysis pipeline behind `analyze`.
//!
//! For every user that passes the minimum-length gate, one report row per
//! requested trajectory kind carries the trajectory dimensions, the entropy
//! triple, and the predictability triple. Users failing the gate are listed
//! with the reason; every input user lands in exactly one of the two lists.
//!
//! The gate is evaluated on the binned non-stationary trajectory, the
//! shortest of the three, at the run's base bin width and resolution, and
//! an excluded user is excluded from every kind.

use std::collections::BTreeMap;

use rayon::prelude::*;

use webtrails::infotheory::entropy_profile;
use webtrails::ingest::{SpatialResolution, SymbolTable, VisitEvent};
use webtrails::predictability::predictability_profile;
use webtrails::trajectory::{
    build_binned_nonstationary, build_sequential_nonstationary, build_stationary, BinningConfig,
    Trajectory, TrajectoryKind,
};

use crate::config::{CliError, RunConfig};

/// One (user, trajectory kind) report row.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRow {
    pub user_id: String,
    pub kind: TrajectoryKind,
    pub resolution: SpatialResolution,
    /// Empty for the sequential kind, which does not depend on binning.
    pub delta_t_seconds: Option<u64>,
    pub length: usize,
    pub n_symbols: usize,
    pub s_rand: f64,
    pub s_unc: f64,
    pub s_rate: f64,
    pub pi_rand: f64,
    pub pi_unc: f64,
    pub pi_max: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub user_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineReport {
    pub rows: Vec<UserRow>,
    pub exclusions: Vec<Exclusion>,
    pub total_users: usize,
}

/// Run a closure on a bounded worker pool (0 = default pool size).
pub fn with_pool<R: Send>(threads: usize, work: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("worker pool")
            .install(work)
    }
}

/// Build one user's trajectory of the given kind.
pub fn build_trajectory(
    events: &[VisitEvent],
    kind: TrajectoryKind,
    delta_t_seconds: u64,
    resolution: SpatialResolution,
    seed: u64,
) -> Trajectory {
    let cfg = BinningConfig {
        delta_t_seconds,
        tie_break_seed: seed,
    };
    let mut table = SymbolTable::new();
    match kind {
        TrajectoryKind::Stationary => build_stationary(events, &cfg, resolution, &mut table),
        TrajectoryKind::BinnedNonStationary => {
            build_binned_nonstationary(events, &cfg, resolution, &mut table)
        }
        TrajectoryKind::SequentialNonStationary => {
            build_sequential_nonstationary(events, resolution, &mut table)
        }
    }
}

fn row_for(user_id: &str, trajectory: &Trajectory) -> Result<UserRow, String> {
    let entropy = entropy_profile(trajectory).map_err(|e| e.to_string())?;
    let predictability = predictability_profile(&entropy).map_err(|e| e.to_string())?;
    Ok(UserRow {
        user_id: user_id.to_owned(),
        kind: trajectory.kind,
        resolution: trajectory.resolution,
        delta_t_seconds: trajectory.delta_t_seconds,
        length: trajectory.len(),
        n_symbols: trajectory.alphabet_size(),
        s_rand: entropy.s_rand,
        s_unc: entropy.s_unc,
        s_rate: entropy.s_rate,
        pi_rand: predictability.pi_rand,
        pi_unc: predictability.pi_unc,
        pi_max: predictability.pi_max,
        clamped: predictability.clamped,
    })
}

enum UserOutcome {
    Included(Vec<UserRow>),
    Excluded(Exclusion),
}

fn analyze_one(
    user_id: &str,
    events: &[VisitEvent],
    cfg: &RunConfig,
    delta_t_seconds: u64,
    resolution: SpatialResolution,
    apply_gate: bool,
) -> UserOutcome {
    let exclude = |reason: String| {
        UserOutcome::Excluded(Exclusion {
            user_id: user_id.to_owned(),
            reason,
        })
    };
    let gate_trajectory = build_trajectory(
        events,
        TrajectoryKind::BinnedNonStationary,
        delta_t_seconds,
        resolution,
        cfg.seed,
    );
    if apply_gate && gate_trajectory.len() < cfg.min_length {
        return exclude(format!(
            "bin-nonstat length {} below minimum {}",
            gate_trajectory.len(),
            cfg.min_length
        ));
    }
    let mut rows = Vec::with_capacity(cfg.kinds.len());
    for &kind in &cfg.kinds {
        let trajectory = if kind == TrajectoryKind::BinnedNonStationary {
            gate_trajectory.clone()
        } else {
            build_trajectory(events, kind, delta_t_seconds, resolution, cfg.seed)
        };
        match row_for(user_id, &trajectory) {
            Ok(row) => rows.push(row),
            Err(reason) => return exclude(format!("{kind}: {reason}")),
        }
    }
    UserOutcome::Included(rows)
}

/// Analyze all users at the run's base bin width and resolution, applying
/// the minimum-length gate. Deterministic: users are processed in id order
/// and results reassembled in that order regardless of worker count.
pub fn analyze_users(users: &BTreeMap<String, Vec<VisitEvent>>, cfg: &RunConfig) -> PipelineReport {
    analyze_users_at(users, cfg, cfg.delta_t_seconds, cfg.resolution, true)
}

/// Analysis with an explicit grid point; used by the sweeps, which gate the
/// population once at the base configuration and never re-gate.
pub fn analyze_users_at(
    users: &BTreeMap<String, Vec<VisitEvent>>,
    cfg: &RunConfig,
    delta_t_seconds: u64,
    resolution: SpatialResolution,
    apply_gate: bool,
) -> PipelineReport {
    let entries: Vec<(&String, &Vec<VisitEvent>)> = users.iter().collect();
    let outcomes: Vec<UserOutcome> = with_pool(cfg.threads, || {
        entries
            .par_iter()
            .map(|(user_id, events)| {
                analyze_one(
                    user_id,
                    events,
                    cfg,
                    delta_t_seconds,
                    resolution,
                    apply_gate,
                )
            })
            .collect()
    });
    let mut report = PipelineReport {
        total_users: users.len(),
        ..PipelineReport::default()
    };
    for outcome in outcomes {
        match outcome {
            UserOutcome::Included(rows) => report.rows.extend(rows),
            UserOutcome::Excluded(exclusion) => report.exclusions.push(exclusion),
        }
    }
    report
}

/// Parse the input file and run the gated analysis.
pub fn run_pipeline(
    cfg: &RunConfig,
) -> Result<(BTreeMap<String, Vec<VisitEvent>>, PipelineReport), CliError> {
    cfg.validate()?;
    let users = webtrails::ingest::parse_events_path(&cfg.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", cfg.input.display())))?;
    let report = analyze_users(&users, cfg);
    Ok((users, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn visit(user: &str, start: i64, active: u64, domain: &str) -> VisitEvent {
        VisitEvent {
            user_id: user.into(),
            start_time: start,
            active_seconds: active,
            url: format!("{domain}/p"),
            domain: domain.into(),
            category: "c".into(),
        }
    }

    fn config(min_length: usize) -> RunConfig {
        RunConfig {
            min_length,
            ..RunConfig::default()
        }
    }

    #[test]
    fn every_user_lands_in_exactly_one_list() {
        let mut users = BTreeMap::new();
        // alternates between two domains every minute: passes a small gate
        let active: Vec<VisitEvent> = (0..40)
            .map(|i| visit("active", i * 60, 50, if i % 2 == 0 { "a" } else { "b" }))
            .collect();
        users.insert("active".to_string(), active);
        users.insert("sparse".to_string(), vec![visit("sparse", 0, 30, "a")]);
        let report = analyze_users(&users, &config(5));
        assert_eq!(report.total_users, 2);
        assert_eq!(report.exclusions.len(), 1);
        assert_eq!(report.exclusions[0].user_id, "sparse");
        assert!(report.exclusions[0].reason.contains("below minimum 5"));
        let row_users: std::collections::BTreeSet<&str> =
            report.rows.iter().map(|r| r.user_id.as_str()).collect();
        assert_eq!(row_users.len(), 1);
        assert!(row_users.contains("active"));
        assert_eq!(report.rows.len(), 3);
    }

    #[test]
    fn rows_carry_kind_specific_metadata() {
        let mut users = BTreeMap::new();
        let events: Vec<VisitEvent> = (0..30)
            .map(|i| visit("u", i * 90, 80, if i % 3 == 0 { "a" } else { "b" }))
            .collect();
        users.insert("u".to_string(), events);
        let report = analyze_users(&users, &config(2));
        let by_kind: BTreeMap<TrajectoryKind, &UserRow> =
            report.rows.iter().map(|r| (r.kind, r)).collect();
        assert_eq!(by_kind.len(), 3);
        assert_eq!(
            by_kind[&TrajectoryKind::Stationary].delta_t_seconds,
            Some(60)
        );
        assert_eq!(
            by_kind[&TrajectoryKind::SequentialNonStationary].delta_t_seconds,
            None
        );
        for row in &report.rows {
            assert!(row.pi_max >= row.pi_rand - 1e-12);
            assert!((row.pi_rand - 1.0 / row.n_symbols as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut users = BTreeMap::new();
        for u in 0..12 {
            let events: Vec<VisitEvent> = (0..60)
                .map(|i| {
                    visit(
                        &format!("user{u}"),
                        i * 45,
                        40,
                        if (i + u) % 2 == 0 { "a" } else { "b" },
                    )
                })
                .collect();
            users.insert(format!("user{u}"), events);
        }
        let single = analyze_users(
            &users,
            &RunConfig {
                threads: 1,
                min_length: 4,
                ..RunConfig::default()
            },
        );
        let many = analyze_users(
            &users,
            &RunConfig {
                threads: 8,
                min_length: 4,
                ..RunConfig::default()
            },
        );
        assert_eq!(single.rows, many.rows);
        assert_eq!(single.exclusions, many.exclusions);
    }
}
