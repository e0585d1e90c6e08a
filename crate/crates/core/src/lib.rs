//! Routineness and predictability-limit estimation for discrete visitation
//! trajectories built from timestamped event logs.
//!
//! The pipeline: [`ingest`] parses visit logs into per-user event streams;
//! [`trajectory`] turns a stream into stationary and non-stationary symbol
//! sequences at a chosen temporal and spatial resolution; [`infotheory`]
//! computes the entropy triple of a sequence; [`predictability`] inverts
//! Fano's inequality into predictability upper bounds and runs the
//! data-sufficiency analysis; [`stats`] compares user groups; [`synth`]
//! generates seeded users with known entropy rates to validate the whole
//! chain against closed forms.

#![forbid(unsafe_code)]

pub mod infotheory;
pub mod ingest;
pub mod predictability;
mod sam;
pub mod stats;
pub mod synth;
pub mod trajectory;

pub use infotheory::{entropy_profile, EntropyProfile};
pub use ingest::{SpatialResolution, SymbolTable, VisitEvent};
pub use predictability::{predictability_profile, PredictabilityProfile};
pub use trajectory::{BinningConfig, Trajectory, TrajectoryKind};
