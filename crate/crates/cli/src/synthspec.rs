//! Synthetic-ensemble spec files behind `synth --spec <file>`.
//!
//! The spec is a JSON document describing users to generate:
//!
//! ```json
//! {
//!   "users": [
//!     {
//!       "user_id": "sticky",
//!       "replicas": 100,
//!       "visit_count": 3000,
//!       "dwell_mean_seconds": 45.0,
//!       "seed": 7,
//!       "states": 6,
//!       "cycle_weight": 0.75,
//!       "self_loop_weight": 0.8
//!     }
//!   ]
//! }
//! ```
//!
//! A user entry either carries an explicit `transition` matrix (with an
//! optional `initial` distribution) or asks for a built chain over
//! `states` states: `zipf_exponent` gives an i.i.d. popularity-skew
//! source, `cycle_weight` a forward cycle with the remaining mass spread
//! over the other states, neither a uniform i.i.d. source. An optional
//! `self_loop_weight` mixes the chain with the identity to raise dwell
//! heaviness. `replicas` clones the entry with consecutive seeds and
//! numbered user ids.

use std::path::Path;

use serde::Deserialize;

use webtrails::ingest::VisitEvent;
use webtrails::synth::{synth_events, MarkovModel, SyntheticUserSpec};

use crate::config::CliError;

#[derive(Debug, Deserialize)]
struct SynthFile {
    users: Vec<SynthUserEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthUserEntry {
    user_id: String,
    #[serde(default = "default_replicas")]
    replicas: usize,
    visit_count: usize,
    dwell_mean_seconds: f64,
    seed: u64,
    #[serde(default)]
    transition: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    initial: Option<Vec<f64>>,
    #[serde(default)]
    states: Option<usize>,
    #[serde(default)]
    zipf_exponent: Option<f64>,
    #[serde(default)]
    cycle_weight: Option<f64>,
    #[serde(default)]
    self_loop_weight: Option<f64>,
}

fn default_replicas() -> usize {
    1
}

/// A forward cycle over `states` states carrying `weight` of each row, the
/// remaining mass spread uniformly over the other non-successor states.
pub fn cycle_chain(states: usize, weight: f64) -> Result<MarkovModel, CliError> {
    if states < 2 {
        return Err(CliError::Input(
            "cycle chains need at least 2 states".into(),
        ));
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(CliError::Input(format!(
            "cycle_weight must lie in [0, 1], got {weight}"
        )));
    }
    let rest = (1.0 - weight) / (states - 1) as f64;
    let rows: Vec<Vec<f64>> = (0..states)
        .map(|i| {
            (0..states)
                .map(|j| if j == (i + 1) % states { weight } else { rest })
                .collect()
        })
        .collect();
    MarkovModel::with_uniform_initial(rows).map_err(|e| CliError::Input(e.to_string()))
}

fn build_model(entry: &SynthUserEntry) -> Result<MarkovModel, CliError> {
    let base = match (&entry.transition, entry.states) {
        (Some(transition), _) => {
            let model = match &entry.initial {
                Some(initial) => MarkovModel::new(transition.clone(), initial.clone()),
                None => MarkovModel::with_uniform_initial(transition.clone()),
            };
            model.map_err(|e| CliError::Input(format!("user {:?}: {e}", entry.user_id)))?
        }
        (None, Some(states)) => {
            if let Some(exponent) = entry.zipf_exponent {
                MarkovModel::iid_zipf(states, exponent)
                    .map_err(|e| CliError::Input(format!("user {:?}: {e}", entry.user_id)))?
            } else if let Some(weight) = entry.cycle_weight {
                cycle_chain(states, weight)?
            } else {
                MarkovModel::uniform_iid(states)
                    .map_err(|e| CliError::Input(format!("user {:?}: {e}", entry.user_id)))?
            }
        }
        (None, None) => {
            return Err(CliError::Input(format!(
                "user {:?}: give either a transition matrix or a state count",
                entry.user_id
            )))
        }
    };
    match entry.self_loop_weight {
        Some(weight) => base
            .mix_with_identity(weight)
            .map_err(|e| CliError::Input(format!("user {:?}: {e}", entry.user_id))),
        None => Ok(base),
    }
}

/// Expand a spec file into concrete per-user generation recipes.
pub fn load_specs(path: &Path) -> Result<Vec<SyntheticUserSpec>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file: SynthFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if file.users.is_empty() {
        return Err(CliError::Input(format!(
            "{}: spec lists no users",
            path.display()
        )));
    }
    let mut specs = Vec::new();
    for entry in &file.users {
        if entry.replicas == 0 {
            return Err(CliError::Input(format!(
                "user {:?}: replicas must be at least 1",
                entry.user_id
            )));
        }
        let model = build_model(entry)?;
        for replica in 0..entry.replicas {
            let user_id = if entry.replicas == 1 {
                entry.user_id.clone()
            } else {
                format!("{}-{replica:04}", entry.user_id)
            };
            specs.push(SyntheticUserSpec {
                user_id,
                model: model.clone(),
                dwell_mean_seconds: entry.dwell_mean_seconds,
                visit_count: entry.visit_count,
                seed: entry.seed.wrapping_add(replica as u64),
                zipf_exponent: None,
            });
        }
    }
    Ok(specs)
}

/// Generate all events for the expanded specs.
pub fn generate_events(specs: &[SyntheticUserSpec]) -> Result<Vec<VisitEvent>, CliError> {
    let mut events = Vec::new();
    for spec in specs {
        events.extend(
            synth_events(spec)
                .map_err(|e| CliError::Input(format!("user {:?}: {e}", spec.user_id)))?,
        );
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn load_from_text(text: &str) -> Result<Vec<SyntheticUserSpec>, CliError> {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        load_specs(file.path())
    }

    #[test]
    fn replicas_expand_with_consecutive_seeds() {
        let specs = load_from_text(
            r#"{"users": [{"user_id": "e", "replicas": 3, "visit_count": 10,
                 "dwell_mean_seconds": 30.0, "seed": 5, "states": 4}]}"#,
        )
        .unwrap();
        assert_eq!(specs.len(), 3);
        assert_eq!(specs[0].user_id, "e-0000");
        assert_eq!(specs[2].user_id, "e-0002");
        assert_eq!(specs[0].seed, 5);
        assert_eq!(specs[2].seed, 7);
    }

    #[test]
    fn explicit_transition_matrices_are_validated() {
        let error = load_from_text(
            r#"{"users": [{"user_id": "bad", "visit_count": 10,
                 "dwell_mean_seconds": 30.0, "seed": 1,
                 "transition": [[0.5, 0.4], [0.5, 0.5]]}]}"#,
        )
        .unwrap_err();
        assert_eq!(error.exit_code(), 1);
        assert!(error.to_string().contains("sums to"));
    }

    #[test]
    fn missing_model_description_is_an_input_error() {
        let error = load_from_text(
            r#"{"users": [{"user_id": "x", "visit_count": 10,
                 "dwell_mean_seconds": 30.0, "seed": 1}]}"#,
        )
        .unwrap_err();
        assert!(error
            .to_string()
            .contains("transition matrix or a state count"));
    }

    #[test]
    fn cycle_chain_rows_are_stochastic() {
        let model = cycle_chain(5, 0.75).unwrap();
        for row in model.transition() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((model.transition()[1][2] - 0.75).abs() < 1e-12);
    }
}
