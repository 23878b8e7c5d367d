//! Run-log ingestion: JSONL or CSV records of validation loss over training.
//!
//! Every record carries `schema: 1`. A record without `checkpoint_index`
//! marks the end of a run after `epoch` full passes, so
//! `tokens_consumed = epoch * budget_tokens`. Checkpoint `i` (1..=5) of epoch
//! `e` sits at `budget_tokens * (5 (e - 1) + i) / 5`; checkpoint 5 coincides
//! with the end of its epoch.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::codecs::Representation;
use crate::frontier::{Coverage, Trajectory};
use crate::scaling::RunObservation;

pub const SCHEMA_VERSION: u32 = 1;
pub const CHECKPOINTS_PER_EPOCH: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLogRecord {
    pub schema: u32,
    pub run_id: String,
    pub representation: Representation,
    #[serde(rename = "P")]
    pub p: u64,
    pub budget_tokens: u64,
    pub epoch: u32,
    pub tokens_consumed: u64,
    pub val_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_index: Option<u8>,
    #[serde(default)]
    pub wall_metadata: serde_json::Map<String, serde_json::Value>,
}

impl RunLogRecord {
    pub fn is_multi_epoch(&self) -> bool {
        self.epoch > 1
    }

    /// Tokens this record should have consumed given its position.
    pub fn expected_tokens(&self) -> Option<u64> {
        let e = u64::from(self.epoch);
        match self.checkpoint_index {
            None => self.budget_tokens.checked_mul(e),
            Some(i) => {
                let steps = CHECKPOINTS_PER_EPOCH * (e - 1) + u64::from(i);
                let scaled = u128::from(self.budget_tokens) * u128::from(steps);
                (scaled % u128::from(CHECKPOINTS_PER_EPOCH) == 0)
                    .then(|| (scaled / u128::from(CHECKPOINTS_PER_EPOCH)) as u64)
            }
        }
    }

    pub fn compute(&self) -> f64 {
        self.p as f64 * self.tokens_consumed as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Parse,
    Schema,
    Range,
    Inconsistent,
    Duplicate,
}

/// A rejected record and where it came from (1-based line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordDiagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("no valid records ({} rejected)", .0.len())]
    NoValidRecords(Vec<RecordDiagnostic>),
    #[error("cannot read run log: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedRuns {
    /// Accepted records with their line numbers, in file order.
    pub records: Vec<(usize, RunLogRecord)>,
    pub diagnostics: Vec<RecordDiagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl LogFormat {
    /// JSONL when the first non-blank byte is `{`, CSV otherwise.
    pub fn sniff(bytes: &[u8]) -> LogFormat {
        match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'{') => LogFormat::Jsonl,
            _ => LogFormat::Csv,
        }
    }
}

#[derive(Deserialize)]
struct CsvRow {
    schema: Option<u32>,
    run_id: String,
    representation: String,
    #[serde(rename = "P")]
    p: u64,
    budget_tokens: u64,
    epoch: u32,
    tokens_consumed: u64,
    val_loss: f64,
    checkpoint_index: Option<u8>,
}

fn check(rec: &RunLogRecord) -> Result<(), (DiagnosticKind, String)> {
    if rec.schema != SCHEMA_VERSION {
        return Err((DiagnosticKind::Schema, format!("unsupported schema {}", rec.schema)));
    }
    if rec.run_id.is_empty() {
        return Err((DiagnosticKind::Range, "empty run_id".into()));
    }
    if rec.p == 0 || rec.budget_tokens == 0 || rec.tokens_consumed == 0 {
        return Err((
            DiagnosticKind::Range,
            "P, budget_tokens and tokens_consumed must be positive".into(),
        ));
    }
    if rec.epoch == 0 {
        return Err((DiagnosticKind::Range, "epoch must be >= 1".into()));
    }
    if !(rec.val_loss > 0.0 && rec.val_loss.is_finite()) {
        return Err((
            DiagnosticKind::Range,
            format!("val_loss {} is not a positive number", rec.val_loss),
        ));
    }
    if let Some(i) = rec.checkpoint_index {
        if !(1..=CHECKPOINTS_PER_EPOCH as u8).contains(&i) {
            return Err((DiagnosticKind::Range, format!("checkpoint_index {i} outside 1..=5")));
        }
    }
    match rec.expected_tokens() {
        Some(t) if t == rec.tokens_consumed => Ok(()),
        expected => Err((
            DiagnosticKind::Inconsistent,
            format!(
                "tokens_consumed {} does not match epoch {} x budget {}{} (expected {})",
                rec.tokens_consumed,
                rec.epoch,
                rec.budget_tokens,
                rec.checkpoint_index
                    .map_or(String::new(), |i| format!(" at checkpoint {i}")),
                expected.map_or("a whole token count".to_string(), |t| t.to_string())
            ),
        )),
    }
}

fn parse_jsonl(bytes: &[u8]) -> Vec<(usize, Result<RunLogRecord, String>)> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .filter(|(_, l)| !l.iter().all(u8::is_ascii_whitespace))
        .map(|(i, l)| {
            let rec = std::str::from_utf8(l)
                .map_err(|e| format!("not UTF-8: {e}"))
                .and_then(|s| serde_json::from_str::<RunLogRecord>(s).map_err(|e| e.to_string()));
            (i + 1, rec)
        })
        .collect()
}

fn parse_csv(bytes: &[u8]) -> Vec<(usize, Result<RunLogRecord, String>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let mut out = Vec::new();
    if let Err(e) = reader.headers() {
        out.push((1, Err(format!("bad header: {e}"))));
        return out;
    }
    let headers = reader.headers().expect("checked above").clone();
    let mut raw = csv::StringRecord::new();
    loop {
        let line = reader.position().line() as usize + 1;
        match reader.read_record(&mut raw) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                out.push((line, Err(e.to_string())));
                continue;
            }
        }
        let line = raw.position().map_or(line, |p| p.line() as usize);
        let rec = raw
            .deserialize::<CsvRow>(Some(&headers))
            .map_err(|e| e.to_string())
            .and_then(|r| {
                let representation = r.representation.parse::<Representation>().map_err(|e| e.to_string())?;
                Ok(RunLogRecord {
                    schema: r.schema.unwrap_or(SCHEMA_VERSION),
                    run_id: r.run_id,
                    representation,
                    p: r.p,
                    budget_tokens: r.budget_tokens,
                    epoch: r.epoch,
                    tokens_consumed: r.tokens_consumed,
                    val_loss: r.val_loss,
                    checkpoint_index: r.checkpoint_index,
                    wall_metadata: Default::default(),
                })
            });
        out.push((line, rec));
    }
    out
}

/// Parses and validates a run log. Rejected records become diagnostics;
/// the call fails only when nothing survives.
pub fn load_runs_bytes(bytes: &[u8]) -> Result<LoadedRuns, LoadError> {
    let parsed = match LogFormat::sniff(bytes) {
        LogFormat::Jsonl => parse_jsonl(bytes),
        LogFormat::Csv => parse_csv(bytes),
    };
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen: HashMap<(String, Option<u8>, u32), usize> = HashMap::new();
    for (line, rec) in parsed {
        let rec = match rec {
            Ok(r) => r,
            Err(message) => {
                diagnostics.push(RecordDiagnostic {
                    line,
                    kind: DiagnosticKind::Parse,
                    message,
                });
                continue;
            }
        };
        if let Err((kind, message)) = check(&rec) {
            diagnostics.push(RecordDiagnostic { line, kind, message });
            continue;
        }
        // checkpoints repeat across epochs, so the epoch is part of the key
        let key = (
            rec.run_id.clone(),
            rec.checkpoint_index,
            rec.checkpoint_index.map_or(0, |_| rec.epoch),
        );
        if let Some(&first) = seen.get(&key) {
            diagnostics.push(RecordDiagnostic {
                line,
                kind: DiagnosticKind::Duplicate,
                message: format!("duplicate of line {first} (run {})", rec.run_id),
            });
            continue;
        }
        seen.insert(key, line);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(LoadError::NoValidRecords(diagnostics));
    }
    Ok(LoadedRuns { records, diagnostics })
}

pub fn load_runs(path: &std::path::Path) -> Result<LoadedRuns, LoadError> {
    let bytes = std::fs::read(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    load_runs_bytes(&bytes)
}

impl LoadedRuns {
    pub fn representations(&self) -> Vec<Representation> {
        let mut r: Vec<Representation> = self.records.iter().map(|(_, r)| r.representation).collect();
        r.sort();
        r.dedup();
        r
    }

    /// End-of-run records as fit observations.
    pub fn observations(&self, repr: Representation) -> Vec<RunObservation> {
        self.records
            .iter()
            .filter(|(_, r)| r.representation == repr && r.checkpoint_index.is_none())
            .map(|(_, r)| RunObservation {
                representation: r.representation,
                p: r.p as f64,
                d: r.tokens_consumed as f64,
                budget: r.budget_tokens as f64,
                epoch: r.epoch,
                loss: r.val_loss,
                source_run_id: r.run_id.clone(),
            })
            .collect()
    }

    /// Per-run (compute, loss) curves from every record of the run.
    pub fn trajectories(&self, repr: Representation) -> Vec<Trajectory<f64>> {
        let mut runs: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for (_, r) in self.records.iter().filter(|(_, r)| r.representation == repr) {
            runs.entry(&r.run_id).or_default().push((r.compute(), r.val_loss));
        }
        runs.into_iter()
            .map(|(id, points)| Trajectory {
                run_id: id.to_string(),
                points,
            })
            .collect()
    }

    /// Token span of single-epoch end-of-run records.
    pub fn coverage(&self, repr: Representation) -> Option<Coverage> {
        let d: Vec<f64> = self
            .observations(repr)
            .iter()
            .filter(|o| !o.is_multi_epoch())
            .map(|o| o.d)
            .collect();
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (!d.is_empty()).then_some(Coverage { d_min: lo, d_max: hi })
    }

    /// Compute span `P * D` of the single-epoch grid.
    pub fn compute_span(&self, repr: Representation) -> Option<(f64, f64)> {
        let c: Vec<f64> = self
            .observations(repr)
            .iter()
            .filter(|o| !o.is_multi_epoch())
            .map(|o| o.p * o.d)
            .collect();
        (!c.is_empty()).then(|| {
            (
                c.iter().copied().fold(f64::INFINITY, f64::min),
                c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            )
        })
    }
}
