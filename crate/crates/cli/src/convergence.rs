//! The data-sufficiency analysis behind `converge`.
//!
//! Prefix predictability is tracked on each user's binned non-stationary
//! trajectory — the shortest of the three kinds, hence the one that gates
//! data sufficiency. To give every user the same length grid, all curves
//! are truncated to the shortest participating trajectory before the
//! cross-user mean and quantile band are taken.

use std::collections::BTreeMap;

use rayon::prelude::*;

use webtrails::ingest::VisitEvent;
use webtrails::predictability::{
    convergence_curve, min_sufficient_length, ConvergenceCurve, MinLengthResult,
};
use webtrails::trajectory::TrajectoryKind;

use crate::config::{CliError, RunConfig};
use crate::pipeline::{build_trajectory, with_pool};

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub length: usize,
    pub mean_delta: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub min_sufficient: MinLengthResult,
    pub users_analyzed: usize,
    pub users_skipped: usize,
    pub common_length: usize,
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let position = q * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    let weight = position - lower as f64;
    sorted[lower] * (1.0 - weight) + sorted[upper] * weight
}

pub fn run_convergence(
    users: &BTreeMap<String, Vec<VisitEvent>>,
    cfg: &RunConfig,
) -> Result<ConvergenceReport, CliError> {
    cfg.validate()?;
    let trajectories: Vec<_> = with_pool(cfg.threads, || {
        users
            .par_iter()
            .map(|(_, events)| {
                build_trajectory(
                    events,
                    TrajectoryKind::BinnedNonStationary,
                    cfg.delta_t_seconds,
                    cfg.resolution,
                    cfg.seed,
                )
            })
            .collect()
    });
    let eligible: Vec<_> = trajectories
        .iter()
        .filter(|t| t.len() >= 2 * cfg.step)
        .collect();
    let users_skipped = trajectories.len() - eligible.len();
    if eligible.is_empty() {
        return Err(CliError::Input(format!(
            "no user has a bin-nonstat trajectory of at least 2*step = {} symbols",
            2 * cfg.step
        )));
    }
    let common_length = eligible.iter().map(|t| t.len()).min().expect("non-empty");

    let curves: Vec<ConvergenceCurve> = with_pool(cfg.threads, || {
        eligible
            .par_iter()
            .map(|trajectory| {
                convergence_curve(&trajectory.prefix(common_length), cfg.step)
                    .expect("length checked against 2*step")
            })
            .collect()
    });

    let grid = curves[0].lengths().to_vec();
    let mut rows = Vec::with_capacity(grid.len());
    for (idx, &length) in grid.iter().enumerate() {
        let mut deltas: Vec<f64> = curves.iter().map(|c| c.deltas()[idx]).collect();
        deltas.sort_by(f64::total_cmp);
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        rows.push(ConvergenceRow {
            length,
            mean_delta: mean,
            q05: quantile(&deltas, 0.05),
            q95: quantile(&deltas, 0.95),
        });
    }
    let min_sufficient = min_sufficient_length(&curves, cfg.threshold)
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(ConvergenceReport {
        rows,
        min_sufficient,
        users_analyzed: curves.len(),
        users_skipped,
        common_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates_linearly() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&values, 0.0), 1.0);
        assert_eq!(quantile(&values, 1.0), 5.0);
        assert_eq!(quantile(&values, 0.5), 3.0);
        assert!((quantile(&values, 0.05) - 1.2).abs() < 1e-12);
        assert!((quantile(&values, 0.95) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn quickly_settling_users_converge_at_the_first_grid_point() {
        let mut users = BTreeMap::new();
        for u in 0..3 {
            // one long visit per minute to a single domain, then one to a second
            // domain, alternating: bin-nonstat stays short but above 2*step
            let events: Vec<VisitEvent> = (0..30)
                .map(|i| VisitEvent {
                    user_id: format!("u{u}"),
                    start_time: i * 60,
                    active_seconds: 50,
                    url: "a/p".into(),
                    domain: if i % 2 == 0 { "a".into() } else { "b".into() },
                    category: "c".into(),
                })
                .collect();
            users.insert(format!("u{u}"), events);
        }
        let cfg = RunConfig {
            threshold: 0.5,
            ..RunConfig::default()
        };
        let report = run_convergence(&users, &cfg).unwrap();
        assert_eq!(report.users_analyzed, 3);
        assert_eq!(report.min_sufficient, MinLengthResult::Reached(2));
        assert_eq!(report.rows[0].length, 2);
    }

    #[test]
    fn unattainable_threshold_reports_not_reached() {
        use webtrails::synth::{synth_events, MarkovModel, SyntheticUserSpec};
        let mut users = BTreeMap::new();
        for seed in 0..5u64 {
            let user_id = format!("noisy{seed}");
            let events = synth_events(&SyntheticUserSpec {
                user_id: user_id.clone(),
                model: MarkovModel::uniform_iid(4).unwrap(),
                dwell_mean_seconds: 40.0,
                visit_count: 150,
                seed,
                zipf_exponent: None,
            })
            .unwrap();
            users.insert(user_id, events);
        }
        let cfg = RunConfig {
            threshold: 0.0,
            ..RunConfig::default()
        };
        let report = run_convergence(&users, &cfg).unwrap();
        assert_eq!(report.min_sufficient, MinLengthResult::NotReached);
    }
}
