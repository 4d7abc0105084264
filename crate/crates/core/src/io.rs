//! CSV inputs and atomic file output.
//!
//! | file          | header                                   |
//! |---------------|------------------------------------------|
//! | survey        | `respondent_id,control_id,score`         |
//! | ratings       | `control_id,probability,impact`          |
//! | applicability | `control_id,applicable,justification`    |
//! | measurements  | `control_id,level`                       |
//!
//! All files are UTF-8, comma separated, with a mandatory header row.
//! Line numbers in errors count the header as line 1.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::catalog::{parse_control_id, ControlId};
use crate::importance::SurveyResponse;
use crate::minimums::{ApplicabilityMap, MaturityLevel, RiskGrade, RiskRating};

#[derive(Debug, Error)]
#[error("{file}: row {line}: {reason}")]
pub struct InputError {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

/// Survey rows together with the file line of each response.
#[derive(Debug, Clone, Default)]
pub struct SurveyRows {
    pub responses: Vec<SurveyResponse>,
    pub lines: Vec<u64>,
}

impl SurveyRows {
    /// File line of the `row`-th response (1-based).
    pub fn line_of(&self, row: usize) -> u64 {
        self.lines.get(row.wrapping_sub(1)).copied().unwrap_or(0)
    }
}

struct Table {
    file: String,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn err(&self, line: u64, reason: impl Into<String>) -> InputError {
        InputError {
            file: self.file.clone(),
            line,
            reason: reason.into(),
        }
    }
}

fn read_table<R: Read>(file: &str, mut reader: R, header: &[&str]) -> Result<Table, InputError> {
    let err = |line, reason: String| InputError {
        file: file.to_string(),
        line,
        reason,
    };
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| err(0, e.to_string()))?;
    // csv does not count blank lines, so derive line numbers from offsets.
    let line_at = |pos: Option<&csv::Position>| -> u64 {
        pos.map(|p| {
            let mut end = (p.byte() as usize).min(bytes.len());
            while end < bytes.len() && matches!(bytes[end], b'\r' | b'\n') {
                end += 1;
            }
            1 + bytes[..end].iter().filter(|&&b| b == b'\n').count() as u64
        })
        .unwrap_or(0)
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let found = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let found: Vec<&str> = found.iter().collect();
    if found != header {
        return Err(err(
            1,
            format!(
                "expected header {:?}, found {:?}",
                header.join(","),
                found.join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(line_at(e.position()), e.to_string()))?;
        let line = line_at(rec.position());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec));
    }
    Ok(Table {
        file: file.to_string(),
        rows,
    })
}

fn control(table: &Table, line: u64, text: &str) -> Result<ControlId, InputError> {
    parse_control_id(text).map_err(|e| table.err(line, e.to_string()))
}

pub fn read_survey<R: Read>(file: &str, reader: R) -> Result<SurveyRows, InputError> {
    let t = read_table(file, reader, &["respondent_id", "control_id", "score"])?;
    let mut out = SurveyRows::default();
    for (line, rec) in &t.rows {
        let respondent = &rec[0];
        if respondent.is_empty() {
            return Err(t.err(*line, "empty respondent_id"));
        }
        let id = control(&t, *line, &rec[1])?;
        let score: u8 = rec[2]
            .parse()
            .map_err(|_| t.err(*line, format!("score {:?} is not an integer 1-5", &rec[2])))?;
        out.responses
            .push(SurveyResponse::new(respondent, id, score));
        out.lines.push(*line);
    }
    Ok(out)
}

pub fn read_ratings<R: Read>(
    file: &str,
    reader: R,
) -> Result<BTreeMap<ControlId, RiskRating>, InputError> {
    let t = read_table(file, reader, &["control_id", "probability", "impact"])?;
    let mut out = BTreeMap::new();
    for (line, rec) in &t.rows {
        let id = control(&t, *line, &rec[0])?;
        let grade = |s: &str| -> Result<RiskGrade, InputError> {
            s.parse()
                .map_err(|e: crate::minimums::MinimumsError| t.err(*line, e.to_string()))
        };
        let rating = RiskRating {
            probability: grade(&rec[1])?,
            impact: grade(&rec[2])?,
        };
        if out.insert(id, rating).is_some() {
            return Err(t.err(*line, format!("duplicate rating for {id}")));
        }
    }
    Ok(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "y" | "1" => Some(true),
        "false" | "no" | "n" | "0" => Some(false),
        _ => None,
    }
}

/// Controls not listed are applicable.
pub fn read_applicability<R: Read>(file: &str, reader: R) -> Result<ApplicabilityMap, InputError> {
    let t = read_table(file, reader, &["control_id", "applicable", "justification"])?;
    let mut seen = BTreeSet::new();
    let mut map = ApplicabilityMap::all_applicable();
    for (line, rec) in &t.rows {
        let id = control(&t, *line, &rec[0])?;
        if !seen.insert(id) {
            return Err(t.err(*line, format!("duplicate row for {id}")));
        }
        let applicable = parse_bool(&rec[1])
            .ok_or_else(|| t.err(*line, format!("applicable {:?} is not true/false", &rec[1])))?;
        if !applicable {
            map = map
                .mark_not_applicable(id, &rec[2])
                .map_err(|e| t.err(*line, e.to_string()))?;
        }
    }
    Ok(map)
}

pub fn read_measurements<R: Read>(
    file: &str,
    reader: R,
) -> Result<Vec<(ControlId, MaturityLevel)>, InputError> {
    let t = read_table(file, reader, &["control_id", "level"])?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, rec) in &t.rows {
        let id = control(&t, *line, &rec[0])?;
        if !seen.insert(id) {
            return Err(t.err(*line, format!("duplicate measurement for {id}")));
        }
        let level = rec[1]
            .parse::<u8>()
            .ok()
            .and_then(|v| MaturityLevel::try_from(v).ok())
            .ok_or_else(|| t.err(*line, format!("level {:?} is not an integer 0-5", &rec[1])))?;
        out.push((id, level));
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> Result<String, crate::Error> {
    std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn open(path: &Path) -> Result<std::fs::File, crate::Error> {
    std::fs::File::open(path).map_err(|source| crate::Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `contents` to a temporary file beside `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), crate::Error> {
    let io_err = |source| crate::Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
