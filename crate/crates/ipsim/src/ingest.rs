//! Trace ingestion: parse external allocation records into the normalized
//! three-column CSV the replay agent consumes (`tenant,start_seconds,
//! end_seconds`), plus an adapter that maps cluster job datasets onto
//! allocation events through a configurable column layout.

use crate::time::SimTime;
use crate::types::TenantId;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

/// Longest accepted input line; anything bigger is malformed.
pub const MAX_LINE_BYTES: usize = 4096;

/// One replayable allocation: the tenant holds an IP over [start, end).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationEvent {
    pub tenant: TenantId,
    pub start: SimTime,
    pub end: SimTime,
}

/// A job row pulled out of an external dataset before validation.
#[derive(Clone, Debug, Default)]
pub struct RawJobRecord {
    pub user: String,
    pub start: Option<u64>,
    pub end: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("read error: {0}")]
    Stream(#[from] std::io::Error),
    #[error(
        "{bad} of {total} lines malformed ({rate:.2}%), above the {limit:.2}% limit; first: line {first_line}: {first_message}"
    )]
    TooManyErrors {
        bad: u64,
        total: u64,
        rate: f64,
        limit: f64,
        first_line: u64,
        first_message: String,
    },
}

/// Parsed trace plus per-line diagnostics.
#[derive(Debug)]
pub struct ParsedTrace {
    pub events: Vec<AllocationEvent>,
    pub tenant_count: u64,
    pub line_errors: Vec<LineError>,
    pub lines_read: u64,
    /// Records dropped by validation that is not a per-line syntax error
    /// (horizon, missing or inverted timestamps).
    pub records_dropped: u64,
}

impl ParsedTrace {
    pub fn max_concurrency(&self) -> u64 {
        max_concurrency(&self.events)
    }
}

/// Column layout for external job datasets. Indices are zero-based; times
/// are divided by `time_divisor` to reach whole seconds.
#[derive(Clone, Copy, Debug)]
pub struct ColumnMap {
    pub user: usize,
    pub start: usize,
    pub end: usize,
    pub time_divisor: u64,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            user: 0,
            start: 1,
            end: 2,
            time_divisor: 1,
        }
    }
}

/// Parse the normalized three-column trace format. A header line is
/// tolerated. Lines that fail to parse are reported individually; the whole
/// file is rejected when more than `max_error_rate` of its lines are bad.
pub fn parse_allocation_csv(
    reader: impl BufRead,
    max_error_rate: f64,
) -> Result<ParsedTrace, IngestError> {
    let (raw, line_errors, lines_read) = parse_trace_rows(reader)?;
    check_error_rate(&line_errors, lines_read, max_error_rate)?;
    let (events, tenant_count) = normalize_events(raw);
    Ok(ParsedTrace {
        events,
        tenant_count,
        line_errors,
        lines_read,
        records_dropped: 0,
    })
}

/// Parse several trace files into one pool. With more than one input each
/// tenant is namespaced by its file label (`label/user`), so identically
/// named users in different source clusters stay distinct. The error budget
/// applies across all files together.
pub fn parse_many_allocation_csv(
    inputs: Vec<(String, Box<dyn BufRead>)>,
    max_error_rate: f64,
) -> Result<ParsedTrace, IngestError> {
    let prefix_tenants = inputs.len() > 1;
    let mut raw = Vec::new();
    let mut line_errors = Vec::new();
    let mut lines_read = 0u64;
    for (label, reader) in inputs {
        let (rows, errors, lines) = parse_trace_rows(reader)?;
        if prefix_tenants {
            raw.extend(
                rows.into_iter()
                    .map(|(user, s, e)| (format!("{label}/{user}"), s, e)),
            );
            line_errors.extend(errors.into_iter().map(|e| LineError {
                line: e.line,
                message: format!("{label}: {}", e.message),
            }));
        } else {
            raw.extend(rows);
            line_errors.extend(errors);
        }
        lines_read += lines;
    }
    check_error_rate(&line_errors, lines_read, max_error_rate)?;
    let (events, tenant_count) = normalize_events(raw);
    Ok(ParsedTrace {
        events,
        tenant_count,
        line_errors,
        lines_read,
        records_dropped: 0,
    })
}

type TraceRows = (Vec<(String, u64, u64)>, Vec<LineError>, u64);

fn parse_trace_rows(reader: impl BufRead) -> Result<TraceRows, IngestError> {
    let mut raw = Vec::new();
    let mut line_errors = Vec::new();
    let mut lines_read = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        lines_read += 1;
        if line.is_empty() {
            continue;
        }
        if line_no == 1 && looks_like_header(&line) {
            continue;
        }
        match parse_trace_line(&line) {
            Ok(rec) => raw.push(rec),
            Err(message) => line_errors.push(LineError {
                line: line_no,
                message,
            }),
        }
    }
    Ok((raw, line_errors, lines_read))
}

fn looks_like_header(line: &str) -> bool {
    let mut fields = line.split(',');
    let second = fields.nth(1).unwrap_or("");
    second.trim().parse::<f64>().is_err()
}

fn parse_trace_line(line: &str) -> Result<(String, u64, u64), String> {
    if line.len() > MAX_LINE_BYTES {
        return Err(format!("line exceeds {MAX_LINE_BYTES} bytes"));
    }
    let mut fields = line.split(',');
    let tenant = fields.next().unwrap_or("").trim();
    let start = fields.next().ok_or("missing start field")?.trim();
    let end = fields.next().ok_or("missing end field")?.trim();
    if fields.next().is_some() {
        return Err("too many fields".into());
    }
    if tenant.is_empty() {
        return Err("empty tenant".into());
    }
    let start = parse_seconds(start, 1)?;
    let end = parse_seconds(end, 1)?;
    if end <= start {
        return Err(format!("end ({end}) must be after start ({start})"));
    }
    Ok((tenant.to_string(), start, end))
}

/// Parse a timestamp field, truncating to whole seconds after applying the
/// divisor. Negative and non-finite values are malformed.
fn parse_seconds(field: &str, divisor: u64) -> Result<u64, String> {
    let v: f64 = field
        .parse()
        .map_err(|_| format!("non-numeric time {field:?}"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("invalid time {field:?}"));
    }
    Ok((v / divisor as f64) as u64)
}

/// Parse an external job dataset with an arbitrary column layout into raw
/// job records. Syntax errors are reported per line under the same error
/// budget as the normalized format.
pub fn parse_jobs_csv(
    reader: impl BufRead,
    map: ColumnMap,
    max_error_rate: f64,
) -> Result<(Vec<RawJobRecord>, Vec<LineError>, u64), IngestError> {
    let needed = map.user.max(map.start).max(map.end) + 1;
    let mut records = Vec::new();
    let mut line_errors = Vec::new();
    let mut lines_read = 0u64;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx as u64 + 1;
        lines_read += 1;
        if line.is_empty() {
            continue;
        }
        if line.len() > MAX_LINE_BYTES {
            line_errors.push(LineError {
                line: line_no,
                message: format!("line exceeds {MAX_LINE_BYTES} bytes"),
            });
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < needed {
            if line_no == 1 {
                continue; // tolerate a short header
            }
            line_errors.push(LineError {
                line: line_no,
                message: format!("expected at least {needed} fields, got {}", fields.len()),
            });
            continue;
        }
        if line_no == 1 && fields[map.start].trim().parse::<f64>().is_err() {
            continue; // header
        }
        let user = fields[map.user].trim().to_string();
        if user.is_empty() {
            line_errors.push(LineError {
                line: line_no,
                message: "empty user".into(),
            });
            continue;
        }
        // Missing timestamps are recorded as None and dropped later; they
        // are data gaps, not syntax errors.
        let start = parse_seconds_opt(fields[map.start].trim(), map.time_divisor);
        let end = parse_seconds_opt(fields[map.end].trim(), map.time_divisor);
        records.push(RawJobRecord { user, start, end });
    }
    check_error_rate(&line_errors, lines_read, max_error_rate)?;
    Ok((records, line_errors, lines_read))
}

fn parse_seconds_opt(field: &str, divisor: u64) -> Option<u64> {
    if field.is_empty() {
        return None;
    }
    parse_seconds(field, divisor).ok()
}

fn check_error_rate(errors: &[LineError], total: u64, limit: f64) -> Result<(), IngestError> {
    if errors.is_empty() || total == 0 {
        return Ok(());
    }
    let rate = errors.len() as f64 / total as f64;
    if rate > limit {
        let first = &errors[0];
        return Err(IngestError::TooManyErrors {
            bad: errors.len() as u64,
            total,
            rate: rate * 100.0,
            limit: limit * 100.0,
            first_line: first.line,
            first_message: first.message.clone(),
        });
    }
    Ok(())
}

/// Map validated job records onto allocation events: drop jobs with missing
/// or inverted timestamps and jobs extending past the horizon, then
/// normalize. Users become dense tenant ids.
pub fn jobs_to_allocations(records: Vec<RawJobRecord>, horizon_days: u64) -> ParsedTrace {
    let mut dropped = 0u64;
    let mut valid: Vec<(String, u64, u64)> = Vec::with_capacity(records.len());
    let min_start = records.iter().filter_map(|r| r.start).min().unwrap_or(0);
    let horizon_end = min_start.saturating_add(horizon_days * crate::time::DAY_SECONDS);
    let lines = records.len() as u64;
    for rec in records {
        match (rec.start, rec.end) {
            (Some(start), Some(end)) if end > start && end <= horizon_end => {
                valid.push((rec.user, start, end));
            }
            _ => dropped += 1,
        }
    }
    let (events, tenant_count) = normalize_events(valid);
    ParsedTrace {
        events,
        tenant_count,
        line_errors: Vec::new(),
        lines_read: lines,
        records_dropped: dropped,
    }
}

/// Sort by start time, rebase so the earliest start is zero, and intern
/// tenant names to dense ids in order of first appearance after sorting.
/// The sort is stable on (start, end) alone: tenant names stay out of the
/// ordering so renaming them to interned ids cannot reorder ties, which is
/// what makes re-ingesting a written trace reproduce it byte for byte.
fn normalize_events(mut raw: Vec<(String, u64, u64)>) -> (Vec<AllocationEvent>, u64) {
    raw.sort_by_key(|r| (r.1, r.2));
    let base = raw.first().map(|r| r.1).unwrap_or(0);
    let mut ids: HashMap<String, u64> = HashMap::new();
    let mut events = Vec::with_capacity(raw.len());
    for (user, start, end) in raw {
        let next = ids.len() as u64;
        let id = *ids.entry(user).or_insert(next);
        events.push(AllocationEvent {
            tenant: TenantId(id),
            start: SimTime(start - base),
            end: SimTime(end - base),
        });
    }
    let tenants = ids.len() as u64;
    (events, tenants)
}

/// Largest number of simultaneously held IPs implied by the events.
pub fn max_concurrency(events: &[AllocationEvent]) -> u64 {
    let mut edges: Vec<(u64, i64)> = Vec::with_capacity(events.len() * 2);
    for e in events {
        edges.push((e.start.seconds(), 1));
        edges.push((e.end.seconds(), -1));
    }
    edges.sort();
    let mut level = 0i64;
    let mut peak = 0i64;
    for (_, d) in edges {
        level += d;
        peak = peak.max(level);
    }
    peak as u64
}

/// Serialize events in the normalized format.
pub fn write_trace_csv(
    events: &[AllocationEvent],
    out: &mut impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "tenant,start_seconds,end_seconds")?;
    for e in events {
        writeln!(
            out,
            "{},{},{}",
            e.tenant.0,
            e.start.seconds(),
            e.end.seconds()
        )?;
    }
    Ok(())
}

/// Open a trace file, transparently decompressing `.gz` inputs.
pub fn open_trace_reader(path: &Path) -> Result<Box<dyn BufRead>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(flate2::read::GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Convenience wrapper: open, parse, summarize.
pub fn load_trace(path: &Path, max_error_rate: f64) -> Result<ParsedTrace, IngestError> {
    let reader = open_trace_reader(path)?;
    parse_allocation_csv(reader, max_error_rate)
}
