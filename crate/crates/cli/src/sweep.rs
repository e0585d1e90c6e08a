//! Design-decision sweeps behind `sweep --dimension {temporal|spatial}`.
//!
//! The population is gated once at the base configuration; each grid point
//! then recomputes every included user's trajectories and profiles with the
//! bin width (temporal) or location resolution (spatial) swapped in, and
//! reports the ensemble mean with a 95% confidence interval per measure.

use std::collections::BTreeMap;

use webtrails::ingest::{SpatialResolution, VisitEvent};
use webtrails::stats::mean_ci;
use webtrails::trajectory::TrajectoryKind;

use crate::config::{CliError, RunConfig, SweepDimension};
use crate::pipeline::{analyze_users, analyze_users_at, UserRow};

pub const SWEEP_MEASURES: [&str; 6] = ["s_rand", "s_unc", "s_rate", "pi_rand", "pi_unc", "pi_max"];

#[derive(Debug, Clone)]
pub struct MeasureSummary {
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Grid coordinate: seconds for the temporal axis, resolution name for
    /// the spatial one.
    pub grid_value: String,
    pub kind: TrajectoryKind,
    pub n_users: usize,
    /// One summary per entry of [`SWEEP_MEASURES`], in order.
    pub measures: Vec<MeasureSummary>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub dimension: SweepDimension,
    pub rows: Vec<SweepRow>,
    pub users_included: usize,
    pub users_excluded: usize,
}

fn measure_values(rows: &[&UserRow]) -> [Vec<f64>; 6] {
    let mut values: [Vec<f64>; 6] = Default::default();
    for row in rows {
        values[0].push(row.s_rand);
        values[1].push(row.s_unc);
        values[2].push(row.s_rate);
        values[3].push(row.pi_rand);
        values[4].push(row.pi_unc);
        values[5].push(row.pi_max);
    }
    values
}

fn summarize(
    grid_value: String,
    kind: TrajectoryKind,
    rows: &[&UserRow],
) -> Result<SweepRow, CliError> {
    if rows.len() < 2 {
        return Err(CliError::Input(format!(
            "grid point {grid_value}: need at least 2 users with {kind} rows to form a confidence interval, got {}",
            rows.len()
        )));
    }
    let measures = measure_values(rows)
        .iter()
        .map(|values| {
            let (mean, ci_lower, ci_upper) =
                mean_ci(values, 0.95).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(MeasureSummary {
                mean,
                ci_lower,
                ci_upper,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SweepRow {
        grid_value,
        kind,
        n_users: rows.len(),
        measures,
    })
}

pub fn run_sweep(
    users: &BTreeMap<String, Vec<VisitEvent>>,
    cfg: &RunConfig,
    dimension: SweepDimension,
) -> Result<SweepReport, CliError> {
    cfg.validate()?;
    // Gate once at the base configuration, keep that population fixed
    // across the whole grid.
    let base = analyze_users(users, cfg);
    let included: BTreeMap<String, Vec<VisitEvent>> = users
        .iter()
        .filter(|(user_id, _)| base.exclusions.iter().all(|e| &e.user_id != *user_id))
        .map(|(user_id, events)| (user_id.clone(), events.clone()))
        .collect();
    if included.is_empty() {
        return Err(CliError::Input(
            "no user passes the minimum-length gate; nothing to sweep".into(),
        ));
    }

    let grid: Vec<(String, u64, SpatialResolution)> = match dimension {
        SweepDimension::Temporal => cfg
            .temporal_grid_seconds
            .iter()
            .map(|&dt| (dt.to_string(), dt, cfg.resolution))
            .collect(),
        SweepDimension::Spatial => cfg
            .spatial_grid
            .iter()
            .map(|&res| (res.as_str().to_owned(), cfg.delta_t_seconds, res))
            .collect(),
    };

    let mut rows = Vec::new();
    for (grid_value, delta_t, resolution) in grid {
        let point = analyze_users_at(&included, cfg, delta_t, resolution, false);
        for &kind in &cfg.kinds {
            let kind_rows: Vec<&UserRow> = point.rows.iter().filter(|r| r.kind == kind).collect();
            rows.push(summarize(grid_value.clone(), kind, &kind_rows)?);
        }
    }
    Ok(SweepReport {
        dimension,
        rows,
        users_included: included.len(),
        users_excluded: base.exclusions.len(),
    })
}
