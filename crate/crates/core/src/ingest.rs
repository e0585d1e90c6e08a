//! Parsing and normalization of raw visit logs.
//!
//! Input is a flat columnar file with one visit per row. Two encodings are
//! accepted: comma-separated with a header row, and line-delimited JSON
//! records carrying the same six field names. Rows need not be sorted; the
//! parser groups events per user and orders each group by start time.
//!
//! Within one user's stream, visits must not overlap in time. Every
//! downstream builder relies on that, so overlap is a hard error rather
//! than something we silently clip.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// One timestamped visit record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitEvent {
    pub user_id: String,
    /// Epoch seconds, UTC.
    pub start_time: i64,
    pub active_seconds: u64,
    pub url: String,
    pub domain: String,
    pub category: String,
}

impl VisitEvent {
    /// Exclusive end of the active interval `[start_time, end_time)`.
    pub fn end_time(&self) -> i64 {
        self.start_time + self.active_seconds as i64
    }
}

/// Hierarchy level at which locations are identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpatialResolution {
    Url,
    Domain,
    Category,
}

impl SpatialResolution {
    pub fn location<'a>(&self, event: &'a VisitEvent) -> &'a str {
        match self {
            SpatialResolution::Url => &event.url,
            SpatialResolution::Domain => &event.domain,
            SpatialResolution::Category => &event.category,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SpatialResolution::Url => "url",
            SpatialResolution::Domain => "domain",
            SpatialResolution::Category => "category",
        }
    }
}

impl std::str::FromStr for SpatialResolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "url" => Ok(SpatialResolution::Url),
            "domain" => Ok(SpatialResolution::Domain),
            "category" => Ok(SpatialResolution::Category),
            other => Err(format!(
                "unknown resolution {other:?}; expected url, domain or category"
            )),
        }
    }
}

impl std::fmt::Display for SpatialResolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bijective map between raw location strings and dense symbol ids.
///
/// Scope is one (user, resolution) pair; ids run `0..N-1` in order of first
/// appearance, so `N` equals the number of distinct locations interned.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    ids: std::collections::HashMap<String, u32>,
    names: Vec<String>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `location`, allocating the next dense id on first
    /// sight. Idempotent for identical strings.
    pub fn intern(&mut self, location: &str) -> u32 {
        if let Some(&id) = self.ids.get(location) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(location.to_owned(), id);
        self.names.push(location.to_owned());
        id
    }

    pub fn id_of(&self, location: &str) -> Option<u32> {
        self.ids.get(location).copied()
    }

    pub fn name_of(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Map an event to its symbol id at the given resolution.
pub fn resolve_location(
    event: &VisitEvent,
    resolution: SpatialResolution,
    table: &mut SymbolTable,
) -> u32 {
    table.intern(resolution.location(event))
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("line {line}: field {field:?} is empty")]
    EmptyField { line: u64, field: &'static str },
    #[error("user {user:?}: overlapping visits starting at {first_start} and {second_start}")]
    OverlappingVisits {
        user: String,
        first_start: i64,
        second_start: i64,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// On-disk encodings understood by [`parse_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    JsonLines,
}

impl InputFormat {
    /// Picks the format from a file extension; anything that is not a
    /// line-delimited-record extension is treated as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => InputFormat::JsonLines,
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    user_id: String,
    timestamp: i64,
    url: String,
    domain: String,
    category: String,
    active_seconds: u64,
}

fn normalize(record: RawRecord, line: u64) -> Result<VisitEvent, IngestError> {
    let user_id = record.user_id.trim().to_owned();
    let url = record.url.trim().to_owned();
    let domain = record.domain.trim().to_owned();
    let category = record.category.trim().to_owned();
    for (field, value) in [
        ("user_id", &user_id),
        ("url", &url),
        ("domain", &domain),
        ("category", &category),
    ] {
        if value.is_empty() {
            return Err(IngestError::EmptyField { line, field });
        }
    }
    Ok(VisitEvent {
        user_id,
        start_time: record.timestamp,
        active_seconds: record.active_seconds,
        url,
        domain,
        category,
    })
}

/// Parse a visit log into per-user, time-ordered event streams.
///
/// Events are grouped by `user_id` and sorted by start time (with the full
/// record as tie-breaker, so the result does not depend on input row order).
/// Zero-duration events are retained. Overlapping visits within one user
/// are rejected.
pub fn parse_events<R: Read>(
    reader: R,
    format: InputFormat,
) -> Result<BTreeMap<String, Vec<VisitEvent>>, IngestError> {
    let mut users: BTreeMap<String, Vec<VisitEvent>> = BTreeMap::new();
    match format {
        InputFormat::Csv => {
            let mut csv_reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .from_reader(reader);
            let mut record = csv::StringRecord::new();
            let headers = csv_reader.headers().map_err(csv_error)?.clone();
            loop {
                match csv_reader.read_record(&mut record) {
                    Ok(false) => break,
                    Ok(true) => {
                        let line = record.position().map_or(0, |p| p.line());
                        let raw: RawRecord = record.deserialize(Some(&headers)).map_err(|e| {
                            IngestError::MalformedRow {
                                line,
                                message: trim_csv_message(&e),
                            }
                        })?;
                        let event = normalize(raw, line)?;
                        users.entry(event.user_id.clone()).or_default().push(event);
                    }
                    Err(e) => return Err(csv_error(e)),
                }
            }
        }
        InputFormat::JsonLines => {
            for (idx, line_result) in BufReader::new(reader).lines().enumerate() {
                let line_no = idx as u64 + 1;
                let text = line_result?;
                if text.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord =
                    serde_json::from_str(&text).map_err(|e| IngestError::MalformedRow {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                let event = normalize(raw, line_no)?;
                users.entry(event.user_id.clone()).or_default().push(event);
            }
        }
    }

    for (user, events) in users.iter_mut() {
        events.sort_by(|a, b| {
            (
                a.start_time,
                a.active_seconds,
                &a.url,
                &a.domain,
                &a.category,
            )
                .cmp(&(
                    b.start_time,
                    b.active_seconds,
                    &b.url,
                    &b.domain,
                    &b.category,
                ))
        });
        check_overlaps(user, events)?;
    }
    Ok(users)
}

/// Parse a visit log from a file, picking the encoding from the extension.
pub fn parse_events_path(path: &Path) -> Result<BTreeMap<String, Vec<VisitEvent>>, IngestError> {
    let file = std::fs::File::open(path)?;
    parse_events(BufReader::new(file), InputFormat::from_path(path))
}

/// Rejects any pair of positive-duration visits with intersecting active
/// intervals. Zero-duration visits occupy an empty interval and can never
/// overlap anything.
fn check_overlaps(user: &str, sorted: &[VisitEvent]) -> Result<(), IngestError> {
    let mut covering_start = 0i64;
    let mut covering_end = i64::MIN;
    for event in sorted {
        if event.active_seconds == 0 {
            continue;
        }
        if event.start_time < covering_end {
            return Err(IngestError::OverlappingVisits {
                user: user.to_owned(),
                first_start: covering_start,
                second_start: event.start_time,
            });
        }
        covering_start = event.start_time;
        covering_end = event.end_time();
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::MalformedRow {
        line,
        message: trim_csv_message(&e),
    }
}

/// csv's Display duplicates the position; keep just the cause.
fn trim_csv_message(e: &impl std::fmt::Display) -> String {
    let text = e.to_string();
    match text.rsplit_once(": ") {
        Some((_, tail)) if !tail.is_empty() => tail.to_owned(),
        _ => text,
    }
}
