//! Plot-ready tabular outputs and the machine-readable run summary.
//!
//! Column layouts are fixed and documented in `docs/output-schema.md`.
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use webtrails::ingest::VisitEvent;
use webtrails::predictability::MinLengthResult;
use webtrails::trajectory::{write_dump_line, Trajectory};

use crate::compare::CompareReport;
use crate::config::{CliError, RunConfig};
use crate::convergence::ConvergenceReport;
use crate::pipeline::PipelineReport;
use crate::sweep::{SweepReport, SWEEP_MEASURES};

pub const REPORT_FILE: &str = "report.csv";
pub const EXCLUSIONS_FILE: &str = "exclusions.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const COMPARISONS_FILE: &str = "comparisons.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.tsv";

fn create(dir: &Path, name: &str) -> Result<(PathBuf, std::fs::File), CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = std::fs::File::create(&path)?;
    Ok((path, file))
}

fn float(value: f64) -> String {
    format!("{value}")
}

pub fn write_report_csv(dir: &Path, report: &PipelineReport) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, REPORT_FILE)?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "user_id",
        "kind",
        "resolution",
        "delta_t_seconds",
        "length",
        "n_symbols",
        "s_rand",
        "s_unc",
        "s_rate",
        "pi_rand",
        "pi_unc",
        "pi_max",
        "clamped",
    ])?;
    for row in &report.rows {
        writer.write_record([
            row.user_id.as_str(),
            row.kind.as_str(),
            row.resolution.as_str(),
            &row.delta_t_seconds
                .map(|v| v.to_string())
                .unwrap_or_default(),
            &row.length.to_string(),
            &row.n_symbols.to_string(),
            &float(row.s_rand),
            &float(row.s_unc),
            &float(row.s_rate),
            &float(row.pi_rand),
            &float(row.pi_unc),
            &float(row.pi_max),
            if row.clamped { "true" } else { "false" },
        ])?;
    }
    writer.flush()?;
    Ok(path)
}

pub fn write_exclusions_csv(dir: &Path, report: &PipelineReport) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, EXCLUSIONS_FILE)?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(["user_id", "reason"])?;
    for exclusion in &report.exclusions {
        writer.write_record([exclusion.user_id.as_str(), exclusion.reason.as_str()])?;
    }
    writer.flush()?;
    Ok(path)
}

pub fn write_sweep_csv(dir: &Path, report: &SweepReport) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, SWEEP_FILE)?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header = vec![
        "dimension".to_string(),
        "grid_value".to_string(),
        "kind".to_string(),
        "n_users".to_string(),
    ];
    for measure in SWEEP_MEASURES {
        header.push(format!("{measure}_mean"));
        header.push(format!("{measure}_ci_lower"));
        header.push(format!("{measure}_ci_upper"));
    }
    writer.write_record(&header)?;
    let dimension = match report.dimension {
        crate::config::SweepDimension::Temporal => "temporal",
        crate::config::SweepDimension::Spatial => "spatial",
    };
    for row in &report.rows {
        let mut record = vec![
            dimension.to_string(),
            row.grid_value.clone(),
            row.kind.as_str().to_string(),
            row.n_users.to_string(),
        ];
        for measure in &row.measures {
            record.push(float(measure.mean));
            record.push(float(measure.ci_lower));
            record.push(float(measure.ci_upper));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(path)
}

pub fn write_convergence_csv(dir: &Path, report: &ConvergenceReport) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, CONVERGENCE_FILE)?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(["length", "mean_delta", "q05", "q95"])?;
    for row in &report.rows {
        writer.write_record([
            row.length.to_string(),
            float(row.mean_delta),
            float(row.q05),
            float(row.q95),
        ])?;
    }
    writer.flush()?;
    Ok(path)
}

pub fn write_comparisons_csv(dir: &Path, report: &CompareReport) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, COMPARISONS_FILE)?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "kind",
        "group_a",
        "group_b",
        "n_a",
        "n_b",
        "ks_statistic",
        "p_value",
        "cliffs_delta",
        "alpha_adjusted",
        "significant",
    ])?;
    for row in &report.rows {
        let comparison = &row.comparison;
        writer.write_record([
            row.kind.as_str(),
            comparison.group_a.as_str(),
            comparison.group_b.as_str(),
            &row.n_a.to_string(),
            &row.n_b.to_string(),
            &float(comparison.ks_statistic),
            &float(comparison.p_value),
            &float(comparison.cliffs_delta),
            &float(comparison.alpha_adjusted),
            if comparison.significant {
                "true"
            } else {
                "false"
            },
        ])?;
    }
    writer.flush()?;
    Ok(path)
}

/// One dump line per (user, kind), users in id order.
pub fn write_trajectories_tsv(
    dir: &Path,
    trajectories: &BTreeMap<String, Vec<Trajectory>>,
) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, TRAJECTORIES_FILE)?;
    let mut writer = std::io::BufWriter::new(file);
    for (user_id, list) in trajectories {
        for trajectory in list {
            write_dump_line(&mut writer, user_id, trajectory)?;
        }
    }
    writer.flush()?;
    Ok(path)
}

/// Write generated events in the exact ingest CSV format.
pub fn write_events_csv(path: &Path, events: &[VisitEvent]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::File::create(path)?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record([
        "user_id",
        "timestamp",
        "url",
        "domain",
        "category",
        "active_seconds",
    ])?;
    for event in events {
        writer.write_record([
            event.user_id.as_str(),
            &event.start_time.to_string(),
            event.url.as_str(),
            event.domain.as_str(),
            event.category.as_str(),
            &event.active_seconds.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config: RunConfig,
    pub counts: BTreeMap<String, u64>,
    pub timings_ms: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_sufficient_length: Option<String>,
}

impl RunSummary {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunSummary {
            command: command.to_owned(),
            config: config.clone(),
            counts: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            warnings: Vec::new(),
            min_sufficient_length: None,
        }
    }

    pub fn count(&mut self, name: &str, value: u64) -> &mut Self {
        self.counts.insert(name.to_owned(), value);
        self
    }

    pub fn timing(&mut self, name: &str, elapsed: std::time::Duration) -> &mut Self {
        self.timings_ms
            .insert(name.to_owned(), elapsed.as_millis() as u64);
        self
    }

    pub fn min_length(&mut self, result: MinLengthResult) -> &mut Self {
        self.min_sufficient_length = Some(match result {
            MinLengthResult::Reached(length) => length.to_string(),
            MinLengthResult::NotReached => "not-reached".to_owned(),
        });
        self
    }
}

pub fn write_summary_json(dir: &Path, summary: &RunSummary) -> Result<PathBuf, CliError> {
    let (path, mut file) = create(dir, SUMMARY_FILE)?;
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Input(format!("summary serialization: {e}")))?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(path)
}
