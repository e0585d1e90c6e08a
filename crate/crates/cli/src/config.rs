//! Run configuration and the error-to-exit-code mapping.

use std::path::PathBuf;

use serde::Serialize;

use webtrails::ingest::{IngestError, SpatialResolution};
use webtrails::trajectory::TrajectoryKind;

/// Errors surfaced by the command-line front-end. Configuration problems
/// exit with code 2, input problems with code 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "config error: {message}"),
            CliError::Input(message) => write!(f, "input error: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 1,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(error: IngestError) -> Self {
        CliError::Input(error.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(error: std::io::Error) -> Self {
        CliError::Input(error.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(error: csv::Error) -> Self {
        CliError::Input(error.to_string())
    }
}

/// The 18-point bin-width grid from 15 seconds to 15 minutes.
pub fn default_temporal_grid() -> Vec<u64> {
    vec![
        15, 30, 45, 60, 120, 180, 240, 300, 360, 420, 480, 540, 600, 660, 720, 780, 840, 900,
    ]
}

pub fn default_spatial_grid() -> Vec<SpatialResolution> {
    vec![
        SpatialResolution::Url,
        SpatialResolution::Domain,
        SpatialResolution::Category,
    ]
}

/// Everything a run needs; echoed verbatim into the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    #[serde(serialize_with = "serialize_resolution")]
    pub resolution: SpatialResolution,
    pub delta_t_seconds: u64,
    #[serde(serialize_with = "serialize_kinds")]
    pub kinds: Vec<TrajectoryKind>,
    /// Users whose binned non-stationary trajectory is shorter than this
    /// are excluded from analysis, with the reason reported.
    pub min_length: usize,
    pub seed: u64,
    pub step: usize,
    pub threshold: f64,
    pub alpha: f64,
    pub temporal_grid_seconds: Vec<u64>,
    #[serde(serialize_with = "serialize_resolutions")]
    pub spatial_grid: Vec<SpatialResolution>,
    /// Worker threads; 0 uses the default pool size.
    pub threads: usize,
}

fn serialize_resolution<S: serde::Serializer>(
    value: &SpatialResolution,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(value.as_str())
}

fn serialize_resolutions<S: serde::Serializer>(
    values: &[SpatialResolution],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(SpatialResolution::as_str))
}

fn serialize_kinds<S: serde::Serializer>(
    values: &[TrajectoryKind],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(values.iter().map(TrajectoryKind::as_str))
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            out_dir: PathBuf::new(),
            resolution: SpatialResolution::Domain,
            delta_t_seconds: 60,
            kinds: TrajectoryKind::ALL.to_vec(),
            min_length: 100,
            seed: 0,
            step: 1,
            threshold: 0.01,
            alpha: 0.05,
            temporal_grid_seconds: default_temporal_grid(),
            spatial_grid: default_spatial_grid(),
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.delta_t_seconds == 0 {
            return Err(CliError::Config("--delta-t must be at least 1".into()));
        }
        if self.kinds.is_empty() {
            return Err(CliError::Config(
                "--kinds must name at least one trajectory kind".into(),
            ));
        }
        if self.min_length < 2 {
            return Err(CliError::Config("--min-length must be at least 2".into()));
        }
        if self.step == 0 {
            return Err(CliError::Config("--step must be at least 1".into()));
        }
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(CliError::Config(format!(
                "--threshold must be a non-negative number, got {}",
                self.threshold
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(CliError::Config(format!(
                "--alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.temporal_grid_seconds.is_empty() {
            return Err(CliError::Config("temporal grid must be non-empty".into()));
        }
        if self.temporal_grid_seconds.contains(&0) {
            return Err(CliError::Config(
                "temporal grid entries must be positive".into(),
            ));
        }
        if self.spatial_grid.is_empty() {
            return Err(CliError::Config("spatial grid must be non-empty".into()));
        }
        Ok(())
    }
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDimension {
    Temporal,
    Spatial,
}

impl std::str::FromStr for SweepDimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "temporal" => Ok(SweepDimension::Temporal),
            "spatial" => Ok(SweepDimension::Spatial),
            other => Err(format!(
                "unknown sweep dimension {other:?}; expected temporal or spatial"
            )),
        }
    }
}
