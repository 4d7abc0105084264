//! Likert importance responses and the per-control average database.
//!
//! Each control accumulates an exact `(sum, count)` pair; averages are never
//! stored rounded, so stage boundaries and ties are decided on exact values.
//! New survey batches merge into an existing database, which is how the
//! shared database is recalculated as answers arrive.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ControlCatalog, ControlId};
use crate::format::{self, VersionError};
use crate::mean::Mean;

pub const MIN_SCORE: u8 = 1;
pub const MAX_SCORE: u8 = 5;

const SHIPPED_IMPORTANCE: &str = include_str!("../data/default_importance.json");

#[derive(Debug, Error)]
pub enum ImportanceError {
    #[error("row {row}: control {control} is not in the catalog")]
    UnknownControl { row: usize, control: ControlId },
    #[error("row {row}: score {score} outside the Likert range 1-5")]
    ScoreOutOfRange { row: usize, score: u8 },
    #[error("row {row}: respondent {respondent:?} already scored {control}")]
    DuplicateResponse {
        row: usize,
        respondent: String,
        control: ControlId,
    },
    #[error(
        "row {row}: respondent {respondent:?} is already in the database (use replace to resubmit)"
    )]
    DuplicateRespondent { row: usize, respondent: String },
    #[error("row {row}: empty respondent id")]
    EmptyRespondent { row: usize },
    #[error("no importance responses for {0}")]
    NoData(ControlId),
    #[error("inconsistent totals for {control}: sum {sum} over {count} responses")]
    InconsistentTotals {
        control: ControlId,
        sum: u64,
        count: u64,
    },
    #[error("malformed importance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Version(#[from] VersionError),
}

impl ImportanceError {
    /// 1-based position of the offending response, when there is one.
    pub fn row(&self) -> Option<usize> {
        match self {
            ImportanceError::UnknownControl { row, .. }
            | ImportanceError::ScoreOutOfRange { row, .. }
            | ImportanceError::DuplicateResponse { row, .. }
            | ImportanceError::DuplicateRespondent { row, .. }
            | ImportanceError::EmptyRespondent { row } => Some(*row),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub respondent_id: String,
    pub control_id: ControlId,
    pub score: u8,
}

impl SurveyResponse {
    pub fn new(respondent_id: impl Into<String>, control_id: ControlId, score: u8) -> Self {
        Self {
            respondent_id: respondent_id.into(),
            control_id,
            score,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreTotal {
    pub sum: u64,
    pub count: u64,
}

/// A respondent that did not score every catalog control.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessWarning {
    pub respondent: String,
    pub missing: Vec<ControlId>,
}

/// Database plus the completeness warnings raised while building it.
#[derive(Debug, Clone)]
pub struct Ingest {
    pub database: ImportanceDatabase,
    pub warnings: Vec<CompletenessWarning>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TotalRow {
    control: ControlId,
    sum: u64,
    count: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ImportanceDocument {
    format_version: String,
    totals: Vec<TotalRow>,
    respondents: BTreeMap<String, BTreeMap<ControlId, u8>>,
}

/// Exact per-control score totals and the respondent registry.
///
/// The registry keeps each respondent's scores so a resubmission can replace
/// them. Seed totals without respondent detail (the shipped default) are
/// allowed: they count toward averages but cannot be replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportanceDatabase {
    totals: BTreeMap<ControlId, ScoreTotal>,
    respondents: BTreeMap<String, BTreeMap<ControlId, u8>>,
}

impl ImportanceDatabase {
    /// Zero responses recorded for every control of `catalog`.
    pub fn empty(catalog: &ControlCatalog) -> Self {
        Self {
            totals: catalog
                .ids()
                .into_iter()
                .map(|id| (id, ScoreTotal::default()))
                .collect(),
            respondents: BTreeMap::new(),
        }
    }

    /// Importance totals bundled with the crate. They are synthetic seed
    /// totals that reproduce the published default stage memberships.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_IMPORTANCE).expect("bundled importance database is valid")
    }

    pub fn total(&self, id: &ControlId) -> ScoreTotal {
        self.totals.get(id).copied().unwrap_or_default()
    }

    pub fn totals(&self) -> &BTreeMap<ControlId, ScoreTotal> {
        &self.totals
    }

    pub fn respondents(&self) -> impl Iterator<Item = &str> + '_ {
        self.respondents.keys().map(String::as_str)
    }

    pub fn has_respondent(&self, respondent: &str) -> bool {
        self.respondents.contains_key(respondent)
    }

    /// Exact average; fails with [`ImportanceError::NoData`] without responses.
    pub fn control_average(&self, id: &ControlId) -> Result<Mean, ImportanceError> {
        let t = self.total(id);
        Mean::new(t.sum, t.count).ok_or(ImportanceError::NoData(*id))
    }

    /// Averages of every control with at least one response.
    pub fn averages(&self) -> BTreeMap<ControlId, Mean> {
        self.totals
            .iter()
            .filter_map(|(id, t)| Mean::new(t.sum, t.count).map(|m| (*id, m)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        format::to_pretty_json(&ImportanceDocument {
            format_version: format::FORMAT_VERSION.to_string(),
            totals: self
                .totals
                .iter()
                .map(|(c, t)| TotalRow {
                    control: *c,
                    sum: t.sum,
                    count: t.count,
                })
                .collect(),
            respondents: self.respondents.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ImportanceError> {
        let doc: ImportanceDocument = serde_json::from_str(text)?;
        format::check_version(&doc.format_version)?;
        let mut totals = BTreeMap::new();
        for row in doc.totals {
            let within =
                row.sum >= row.count * MIN_SCORE as u64 && row.sum <= row.count * MAX_SCORE as u64;
            if !within {
                return Err(ImportanceError::InconsistentTotals {
                    control: row.control,
                    sum: row.sum,
                    count: row.count,
                });
            }
            totals.insert(
                row.control,
                ScoreTotal {
                    sum: row.sum,
                    count: row.count,
                },
            );
        }
        let db = Self {
            totals,
            respondents: doc.respondents,
        };
        db.check_registry()?;
        Ok(db)
    }

    // Registered scores must fit inside the totals they contributed to.
    fn check_registry(&self) -> Result<(), ImportanceError> {
        let mut seen: BTreeMap<ControlId, ScoreTotal> = BTreeMap::new();
        for scores in self.respondents.values() {
            for (c, s) in scores {
                let e = seen.entry(*c).or_default();
                e.sum += *s as u64;
                e.count += 1;
            }
        }
        for (c, s) in seen {
            let t = self.total(&c);
            if !self.totals.contains_key(&c) || s.count > t.count || s.sum > t.sum {
                return Err(ImportanceError::InconsistentTotals {
                    control: c,
                    sum: t.sum,
                    count: t.count,
                });
            }
        }
        Ok(())
    }
}

/// Builds a fresh database from one batch of responses.
pub fn ingest_responses(
    responses: &[SurveyResponse],
    catalog: &ControlCatalog,
) -> Result<Ingest, ImportanceError> {
    merge_responses(
        &ImportanceDatabase::empty(catalog),
        responses,
        catalog,
        false,
    )
}

/// Adds a batch to `db`, returning the new database.
///
/// Respondents already present are rejected unless `replace` is set, in which
/// case their previous scores are withdrawn first. Merging an empty batch
/// returns `db` unchanged.
pub fn merge_responses(
    db: &ImportanceDatabase,
    new: &[SurveyResponse],
    catalog: &ControlCatalog,
    replace: bool,
) -> Result<Ingest, ImportanceError> {
    let mut batch: BTreeMap<&str, BTreeMap<ControlId, u8>> = BTreeMap::new();
    for (i, r) in new.iter().enumerate() {
        let row = i + 1;
        if r.respondent_id.trim().is_empty() {
            return Err(ImportanceError::EmptyRespondent { row });
        }
        if !catalog.contains(&r.control_id) {
            return Err(ImportanceError::UnknownControl {
                row,
                control: r.control_id,
            });
        }
        if !(MIN_SCORE..=MAX_SCORE).contains(&r.score) {
            return Err(ImportanceError::ScoreOutOfRange {
                row,
                score: r.score,
            });
        }
        if db.has_respondent(&r.respondent_id) && !replace {
            return Err(ImportanceError::DuplicateRespondent {
                row,
                respondent: r.respondent_id.clone(),
            });
        }
        let scores = batch.entry(r.respondent_id.as_str()).or_default();
        if scores.insert(r.control_id, r.score).is_some() {
            return Err(ImportanceError::DuplicateResponse {
                row,
                respondent: r.respondent_id.clone(),
                control: r.control_id,
            });
        }
    }

    let mut out = db.clone();
    for id in catalog.ids() {
        out.totals.entry(id).or_default();
    }
    let mut warnings = Vec::new();
    for (respondent, scores) in batch {
        if let Some(previous) = out.respondents.remove(respondent) {
            for (c, s) in previous {
                let t = out.totals.get_mut(&c).expect("registered control");
                t.sum -= s as u64;
                t.count -= 1;
            }
        }
        for (c, s) in &scores {
            let t = out.totals.get_mut(c).expect("catalog control");
            t.sum += *s as u64;
            t.count += 1;
        }
        let missing: Vec<ControlId> = catalog
            .ids()
            .into_iter()
            .filter(|c| !scores.contains_key(c))
            .collect();
        if !missing.is_empty() {
            warnings.push(CompletenessWarning {
                respondent: respondent.to_string(),
                missing,
            });
        }
        out.respondents.insert(respondent.to_string(), scores);
    }
    Ok(Ingest {
        database: out,
        warnings,
    })
}

/// Respondent ids in a batch, for callers that split files.
pub fn respondent_set(responses: &[SurveyResponse]) -> BTreeSet<&str> {
    responses.iter().map(|r| r.respondent_id.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ControlId {
        s.parse().unwrap()
    }

    fn cat() -> ControlCatalog {
        ControlCatalog::shipped()
    }

    #[test]
    fn single_and_pair_averages() {
        let c = cat();
        let one = ingest_responses(&[SurveyResponse::new("r1", id("A.5.1.1"), 4)], &c).unwrap();
        assert_eq!(
            one.database
                .control_average(&id("A.5.1.1"))
                .unwrap()
                .to_two_decimals(),
            "4.00"
        );
        let two = ingest_responses(
            &[
                SurveyResponse::new("r1", id("A.5.1.1"), 3),
                SurveyResponse::new("r2", id("A.5.1.1"), 4),
            ],
            &c,
        )
        .unwrap();
        assert_eq!(
            two.database
                .control_average(&id("A.5.1.1"))
                .unwrap()
                .to_two_decimals(),
            "3.50"
        );
    }

    #[test]
    fn zero_responses_recorded_and_no_data() {
        let c = cat();
        let ing = ingest_responses(&[SurveyResponse::new("r1", id("A.5.1.1"), 4)], &c).unwrap();
        assert_eq!(ing.database.totals().len(), 114);
        assert_eq!(ing.database.total(&id("A.6.1.1")), ScoreTotal::default());
        assert!(matches!(
            ing.database.control_average(&id("A.6.1.1")),
            Err(ImportanceError::NoData(_))
        ));
        assert_eq!(ing.warnings.len(), 1);
        assert_eq!(ing.warnings[0].missing.len(), 113);
    }

    #[test]
    fn rejects_bad_rows() {
        let c = cat();
        let err = ingest_responses(
            &[
                SurveyResponse::new("r1", id("A.5.1.1"), 4),
                SurveyResponse::new("r1", id("A.5.1.2"), 6),
            ],
            &c,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ImportanceError::ScoreOutOfRange { row: 2, score: 6 }
        ));

        let err = ingest_responses(
            &[
                SurveyResponse::new("r1", id("A.5.1.1"), 4),
                SurveyResponse::new("r1", id("A.5.1.1"), 3),
            ],
            &c,
        )
        .unwrap_err();
        assert_eq!(err.row(), Some(2));

        let small = ControlCatalog::new(
            vec![c.controls()[0].clone()],
            crate::catalog::DependencyGraph::default(),
        )
        .unwrap();
        let err =
            ingest_responses(&[SurveyResponse::new("r1", id("A.18.2.3"), 3)], &small).unwrap_err();
        assert!(matches!(
            err,
            ImportanceError::UnknownControl { row: 1, .. }
        ));
    }

    #[test]
    fn merge_adds_and_empty_is_identity() {
        let c = cat();
        let db = ingest_responses(&[SurveyResponse::new("r1", id("A.5.1.1"), 4)], &c)
            .unwrap()
            .database;
        assert_eq!(merge_responses(&db, &[], &c, false).unwrap().database, db);
        let merged = merge_responses(
            &db,
            &[SurveyResponse::new("r2", id("A.5.1.1"), 2)],
            &c,
            false,
        )
        .unwrap()
        .database;
        assert_eq!(
            merged.control_average(&id("A.5.1.1")).unwrap(),
            Mean::new(3, 1).unwrap()
        );
    }

    #[test]
    fn resubmission_needs_replace() {
        let c = cat();
        let db = ingest_responses(&[SurveyResponse::new("r1", id("A.5.1.1"), 4)], &c)
            .unwrap()
            .database;
        let again = [SurveyResponse::new("r1", id("A.5.1.1"), 2)];
        assert!(matches!(
            merge_responses(&db, &again, &c, false),
            Err(ImportanceError::DuplicateRespondent { row: 1, .. })
        ));
        let replaced = merge_responses(&db, &again, &c, true).unwrap().database;
        assert_eq!(
            replaced.total(&id("A.5.1.1")),
            ScoreTotal { sum: 2, count: 1 }
        );
    }

    #[test]
    fn shipped_database_loads() {
        let db = ImportanceDatabase::shipped();
        assert_eq!(db.averages().len(), 114);
        assert!(db.totals().values().all(|t| t.count == 157));
    }

    #[test]
    fn rejects_impossible_totals() {
        let text = r#"{"format_version":"1","totals":[{"control":"A.5.1.1","sum":30,"count":2}],"respondents":{}}"#;
        assert!(matches!(
            ImportanceDatabase::from_json(text),
            Err(ImportanceError::InconsistentTotals { .. })
        ));
    }
}
