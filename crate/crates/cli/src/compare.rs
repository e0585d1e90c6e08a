//! Pairwise group comparisons behind `compare --groups <file>`.
//!
//! The grouping file maps user ids to group labels. For every pair of
//! groups and every requested trajectory kind, the maximum-predictability
//! distributions are compared with the two-sample KS test and Cliff's
//! delta, at a Bonferroni-adjusted significance level over the actual
//! number of group pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use webtrails::ingest::VisitEvent;
use webtrails::stats::{bonferroni, cliffs_delta, ks_two_sample, GroupComparison};
use webtrails::trajectory::TrajectoryKind;

use crate::config::{CliError, RunConfig};
use crate::pipeline::analyze_users;

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub kind: TrajectoryKind,
    pub n_a: usize,
    pub n_b: usize,
    pub comparison: GroupComparison,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub n_pairs: usize,
    pub alpha_adjusted: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct GroupRecord {
    user_id: String,
    group: String,
}

/// Parse a `user_id,group` CSV into an id -> label map.
pub fn parse_groups(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut groups = BTreeMap::new();
    for record in reader.deserialize::<GroupRecord>() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        groups.insert(record.user_id, record.group);
    }
    if groups.is_empty() {
        return Err(CliError::Input(format!(
            "{}: grouping file names no users",
            path.display()
        )));
    }
    Ok(groups)
}

pub fn run_compare(
    users: &BTreeMap<String, Vec<VisitEvent>>,
    cfg: &RunConfig,
    groups: &BTreeMap<String, String>,
) -> Result<CompareReport, CliError> {
    cfg.validate()?;
    let report = analyze_users(users, cfg);
    let mut warnings = Vec::new();

    // pi_max per (kind, user), in deterministic user order
    let mut by_group: BTreeMap<&str, BTreeMap<TrajectoryKind, Vec<f64>>> = BTreeMap::new();
    let mut seen_users: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for row in &report.rows {
        seen_users.insert(&row.user_id);
        if let Some(label) = groups.get(&row.user_id) {
            by_group
                .entry(label)
                .or_default()
                .entry(row.kind)
                .or_default()
                .push(row.pi_max);
        }
    }
    for user_id in groups.keys() {
        if !seen_users.contains(user_id.as_str()) {
            warnings.push(format!(
                "user {user_id:?} from the grouping file has no analysis rows (unknown or excluded)"
            ));
        }
    }

    let labels: Vec<&str> = by_group.keys().copied().collect();
    if labels.len() < 2 {
        return Err(CliError::Input(format!(
            "need at least 2 groups with analyzed users, got {}",
            labels.len()
        )));
    }
    for (label, kinds) in &by_group {
        let smallest = kinds.values().map(Vec::len).min().unwrap_or(0);
        if smallest < 2 {
            return Err(CliError::Input(format!(
                "group {label:?} has fewer than 2 analyzed users"
            )));
        }
    }

    let n_pairs = labels.len() * (labels.len() - 1) / 2;
    let alpha_adjusted = bonferroni(cfg.alpha, n_pairs);
    let mut rows = Vec::new();
    for (i, &group_a) in labels.iter().enumerate() {
        for &group_b in &labels[i + 1..] {
            for &kind in &cfg.kinds {
                let a = &by_group[group_a][&kind];
                let b = &by_group[group_b][&kind];
                let (ks_statistic, p_value) =
                    ks_two_sample(a, b).map_err(|e| CliError::Input(e.to_string()))?;
                let delta = cliffs_delta(a, b).map_err(|e| CliError::Input(e.to_string()))?;
                rows.push(CompareRow {
                    kind,
                    n_a: a.len(),
                    n_b: b.len(),
                    comparison: GroupComparison {
                        group_a: group_a.to_owned(),
                        group_b: group_b.to_owned(),
                        ks_statistic,
                        p_value,
                        cliffs_delta: delta,
                        alpha_adjusted,
                        significant: p_value < alpha_adjusted,
                    },
                });
            }
        }
    }
    Ok(CompareReport {
        rows,
        n_pairs,
        alpha_adjusted,
        warnings,
    })
}
