//! Measurement-record files: `#`-prefixed metadata lines followed by a CSV
//! table `family,k,success_count,total_shots`.
//!
//! ```text
//! # poe-record v1
//! # kind: cross_state
//! # n_max: 3
//! # shots: 1000
//! # states: 00;+0
//! # scale: forward=1;reverse=1
//! family,k,success_count,total_shots
//! forward,0,250,1000
//! ...
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{PoeError, Result};
use crate::poe::{Family, PoeRecord, RecordKind, RecordMetadata};

const MAGIC: &str = "poe-record v1";

#[derive(Debug, Deserialize)]
struct Row {
    family: String,
    k: usize,
    success_count: u64,
    total_shots: u64,
}

fn kind_name(kind: RecordKind) -> &'static str {
    match kind {
        RecordKind::Recurrence => "recurrence",
        RecordKind::CrossState => "cross_state",
        RecordKind::Subsystem => "subsystem",
    }
}

fn parse_kind(s: &str) -> Result<RecordKind> {
    match s {
        "recurrence" => Ok(RecordKind::Recurrence),
        "cross_state" => Ok(RecordKind::CrossState),
        "subsystem" => Ok(RecordKind::Subsystem),
        other => Err(PoeError::InvalidRecord(format!("unknown record kind '{other}'"))),
    }
}

/// Serializes the raw counts of a sampled record.
pub fn to_record_string(rec: &PoeRecord) -> Result<String> {
    if rec.shots == 0 {
        return Err(PoeError::InvalidRecord("exact records have no counts to export".into()));
    }
    let mut out = format!(
        "# {MAGIC}\n# kind: {}\n# n_max: {}\n# shots: {}\n# states: {}\n",
        kind_name(rec.kind),
        rec.n_max,
        rec.shots,
        rec.metadata.states.join(";")
    );
    let scales: Vec<String> = rec
        .families
        .iter()
        .map(|f| format!("{}={}", f.label, f.scale))
        .collect();
    out.push_str(&format!("# scale: {}\n", scales.join(";")));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["family", "k", "success_count", "total_shots"])?;
    for f in &rec.families {
        let counts = f.successes.as_ref().ok_or_else(|| {
            PoeError::InvalidRecord(format!("family '{}' has no counts", f.label))
        })?;
        for (k, s) in counts.iter().enumerate() {
            w.write_record([f.label.clone(), k.to_string(), s.to_string(), rec.shots.to_string()])?;
        }
    }
    let table = w
        .into_inner()
        .map_err(|e| PoeError::InvalidRecord(format!("csv buffer: {e}")))?;
    out.push_str(&String::from_utf8_lossy(&table));
    Ok(out)
}

/// Parses a record file and rebuilds the record with the same arithmetic used
/// for simulated data.
pub fn parse_record(text: &str) -> Result<PoeRecord> {
    let mut meta: BTreeMap<String, String> = BTreeMap::new();
    let mut body = String::new();
    let mut saw_magic = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if rest == MAGIC {
                saw_magic = true;
            } else if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if !saw_magic {
        return Err(PoeError::InvalidRecord(format!("missing '# {MAGIC}' header")));
    }
    let field = |key: &str| {
        meta.get(key)
            .ok_or_else(|| PoeError::InvalidRecord(format!("missing '# {key}:' header")))
    };
    let kind = parse_kind(field("kind")?)?;
    let n_max: usize = field("n_max")?
        .parse()
        .map_err(|_| PoeError::InvalidRecord("n_max is not an integer".into()))?;
    let shots: u64 = field("shots")?
        .parse()
        .map_err(|_| PoeError::InvalidRecord("shots is not an integer".into()))?;
    let states: Vec<String> = meta
        .get("states")
        .map(|s| s.split(';').filter(|x| !x.is_empty()).map(String::from).collect())
        .unwrap_or_default();
    let mut scales: BTreeMap<String, f64> = BTreeMap::new();
    if let Some(s) = meta.get("scale") {
        for item in s.split(';').filter(|x| !x.is_empty()) {
            let (label, value) = item
                .split_once('=')
                .ok_or_else(|| PoeError::InvalidRecord(format!("bad scale entry '{item}'")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| PoeError::InvalidRecord(format!("bad scale value '{value}'")))?;
            scales.insert(label.to_string(), value);
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    for row in reader.deserialize() {
        let row: Row = row?;
        if row.total_shots != shots {
            return Err(PoeError::InvalidRecord(format!(
                "row {}/{} has {} shots, header says {shots}",
                row.family, row.k, row.total_shots
            )));
        }
        if row.success_count > row.total_shots {
            return Err(PoeError::InvalidRecord(format!(
                "row {}/{}: {} successes exceed {} shots",
                row.family, row.k, row.success_count, row.total_shots
            )));
        }
        let entry = counts.entry(row.family.clone()).or_insert_with(|| {
            order.push(row.family.clone());
            Vec::new()
        });
        if row.k != entry.len() {
            return Err(PoeError::InvalidRecord(format!(
                "family '{}': expected k = {}, found k = {} (k must be contiguous from 0)",
                row.family,
                entry.len(),
                row.k
            )));
        }
        entry.push(row.success_count);
    }
    let families = order
        .iter()
        .map(|label| {
            let c = counts.remove(label).unwrap_or_default();
            if c.len() != n_max + 1 {
                return Err(PoeError::InvalidRecord(format!(
                    "family '{label}' has {} points, expected n_max + 1 = {}",
                    c.len(),
                    n_max + 1
                )));
            }
            Family::from_counts(label.clone(), c, shots, scales.get(label).copied().unwrap_or(1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    PoeRecord::from_families(
        kind,
        shots,
        families,
        RecordMetadata {
            states,
            ..RecordMetadata::default()
        },
    )
}

pub fn ingest(path: &Path) -> Result<PoeRecord> {
    parse_record(&std::fs::read_to_string(path)?)
}
