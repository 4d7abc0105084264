//! Maturity scale, risk matrix and the per-control minimum-level database.
//!
//! Minimum levels come either from a fixed floor applied to every applicable
//! control or from a probability x impact matrix: each grade weighs 1 (low),
//! 2 (medium) or 3 (high) and the required level is their sum, capped at 5.
//! A sum of 6 still requires level 5 but flags the control as a priority.
//! Controls marked not applicable carry level 0, a written justification,
//! and take no part in staging or evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ControlCatalog, ControlId};
use crate::format::{self, VersionError};

#[derive(Debug, Error)]
pub enum MinimumsError {
    #[error("maturity level {0} outside 0-5")]
    LevelOutOfRange(u64),
    #[error("fixed minimum level must be 1-5, got {0}")]
    FixedLevelOutOfRange(u8),
    #[error("unknown risk grade {0:?} (expected low, medium or high)")]
    UnknownGrade(String),
    #[error("empty justification for not-applicable control {0}")]
    EmptyJustification(ControlId),
    #[error("control {0} is not in the catalog")]
    UnknownControl(ControlId),
    #[error("missing risk rating for applicable controls: {}", join_ids(.0))]
    MissingRatings(Vec<ControlId>),
    #[error("malformed minimum-level document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Version(#[from] VersionError),
}

pub(crate) fn join_ids(ids: &[ControlId]) -> String {
    ids.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// COBIT process maturity, 0 (non-existent) to 5 (optimized).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum MaturityLevel {
    NonExistent = 0,
    Initial = 1,
    Repeatable = 2,
    Defined = 3,
    Managed = 4,
    Optimized = 5,
}

impl MaturityLevel {
    pub const ALL: [MaturityLevel; 6] = [
        MaturityLevel::NonExistent,
        MaturityLevel::Initial,
        MaturityLevel::Repeatable,
        MaturityLevel::Defined,
        MaturityLevel::Managed,
        MaturityLevel::Optimized,
    ];

    pub fn value(self) -> u8 {
        self as u8
    }

    /// Full COBIT name, e.g. "Repeatable but Intuitive".
    pub fn name(self) -> &'static str {
        match self {
            MaturityLevel::NonExistent => "Non-existent",
            MaturityLevel::Initial => "Initial/Ad Hoc",
            MaturityLevel::Repeatable => "Repeatable but Intuitive",
            MaturityLevel::Defined => "Defined Process",
            MaturityLevel::Managed => "Managed and Measurable",
            MaturityLevel::Optimized => "Optimized",
        }
    }

    /// One-word name used in label lines, e.g. "Defined".
    pub fn short_name(self) -> &'static str {
        match self {
            MaturityLevel::NonExistent => "Non-existent",
            MaturityLevel::Initial => "Initial",
            MaturityLevel::Repeatable => "Repeatable",
            MaturityLevel::Defined => "Defined",
            MaturityLevel::Managed => "Managed",
            MaturityLevel::Optimized => "Optimized",
        }
    }
}

impl TryFrom<u8> for MaturityLevel {
    type Error = MinimumsError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        MaturityLevel::ALL
            .get(v as usize)
            .copied()
            .ok_or(MinimumsError::LevelOutOfRange(v.into()))
    }
}

impl From<MaturityLevel> for u8 {
    fn from(l: MaturityLevel) -> u8 {
        l.value()
    }
}

impl fmt::Display for MaturityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskGrade {
    Low,
    Medium,
    High,
}

impl RiskGrade {
    pub const ALL: [RiskGrade; 3] = [RiskGrade::Low, RiskGrade::Medium, RiskGrade::High];

    pub fn weight(self) -> u8 {
        match self {
            RiskGrade::Low => 1,
            RiskGrade::Medium => 2,
            RiskGrade::High => 3,
        }
    }
}

impl FromStr for RiskGrade {
    type Err = MinimumsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(RiskGrade::Low),
            "medium" => Ok(RiskGrade::Medium),
            "high" => Ok(RiskGrade::High),
            _ => Err(MinimumsError::UnknownGrade(s.to_string())),
        }
    }
}

impl fmt::Display for RiskGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskGrade::Low => "low",
            RiskGrade::Medium => "medium",
            RiskGrade::High => "high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskRating {
    pub probability: RiskGrade,
    pub impact: RiskGrade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimumRequirement {
    pub required_level: MaturityLevel,
    pub priority: bool,
    /// Probability weight plus impact weight; absent for fixed floors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_score: Option<u8>,
}

impl MinimumRequirement {
    pub fn fixed(level: MaturityLevel) -> Self {
        Self {
            required_level: level,
            priority: false,
            raw_score: None,
        }
    }
}

/// Looks up the risk matrix. Symmetric in its arguments.
pub fn risk_minimum(probability: RiskGrade, impact: RiskGrade) -> MinimumRequirement {
    let raw = probability.weight() + impact.weight();
    let required = MaturityLevel::try_from(raw.min(5)).expect("2..=5");
    MinimumRequirement {
        required_level: required,
        priority: raw == 6,
        raw_score: Some(raw),
    }
}

/// Controls excluded from the assessment, with their justifications.
/// Anything not listed is applicable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplicabilityMap {
    not_applicable: BTreeMap<ControlId, String>,
}

impl ApplicabilityMap {
    pub fn all_applicable() -> Self {
        Self::default()
    }

    /// Excludes `id`. The justification is kept for the report.
    pub fn mark_not_applicable(
        mut self,
        id: ControlId,
        justification: &str,
    ) -> Result<Self, MinimumsError> {
        let text = justification.trim();
        if text.is_empty() {
            return Err(MinimumsError::EmptyJustification(id));
        }
        self.not_applicable.insert(id, text.to_string());
        Ok(self)
    }

    pub fn mark_applicable(mut self, id: ControlId) -> Self {
        self.not_applicable.remove(&id);
        self
    }

    pub fn is_applicable(&self, id: &ControlId) -> bool {
        !self.not_applicable.contains_key(id)
    }

    pub fn justification(&self, id: &ControlId) -> Option<&str> {
        self.not_applicable.get(id).map(String::as_str)
    }

    pub fn excluded(&self) -> &BTreeMap<ControlId, String> {
        &self.not_applicable
    }

    pub fn excluded_ids(&self) -> BTreeSet<ControlId> {
        self.not_applicable.keys().copied().collect()
    }

    /// Checks every excluded id against the catalog and every justification
    /// for content (deserialized maps bypass [`Self::mark_not_applicable`]).
    pub fn validate(&self, catalog: &ControlCatalog) -> Result<(), MinimumsError> {
        for (id, text) in &self.not_applicable {
            if !catalog.contains(id) {
                return Err(MinimumsError::UnknownControl(*id));
            }
            if text.trim().is_empty() {
                return Err(MinimumsError::EmptyJustification(*id));
            }
        }
        Ok(())
    }

    /// Applicable controls of `catalog`, ascending.
    pub fn applicable_in(&self, catalog: &ControlCatalog) -> BTreeSet<ControlId> {
        catalog
            .ids()
            .into_iter()
            .filter(|id| self.is_applicable(id))
            .collect()
    }
}

/// How minimum levels are chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinimumMode {
    /// Same floor for every applicable control.
    Fixed(MaturityLevel),
    /// Risk-matrix lookup per control.
    Risk(BTreeMap<ControlId, RiskRating>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModeTag {
    Fixed { level: MaturityLevel },
    Risk,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedControl {
    pub control: ControlId,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RequirementRow {
    control: ControlId,
    #[serde(flatten)]
    requirement: MinimumRequirement,
}

#[derive(Debug, Serialize, Deserialize)]
struct MinimumDocument {
    format_version: String,
    mode: ModeTag,
    requirements: Vec<RequirementRow>,
    excluded: Vec<ExcludedControl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimumLevelDatabase {
    mode: ModeTag,
    requirements: BTreeMap<ControlId, MinimumRequirement>,
    excluded: BTreeMap<ControlId, String>,
}

impl MinimumLevelDatabase {
    pub fn mode(&self) -> ModeTag {
        self.mode
    }

    /// Requirement of an applicable control.
    pub fn requirement(&self, id: &ControlId) -> Option<&MinimumRequirement> {
        self.requirements.get(id)
    }

    /// Required level; 0 for excluded controls.
    pub fn required_level(&self, id: &ControlId) -> Option<MaturityLevel> {
        if self.excluded.contains_key(id) {
            Some(MaturityLevel::NonExistent)
        } else {
            self.requirements.get(id).map(|r| r.required_level)
        }
    }

    pub fn is_excluded(&self, id: &ControlId) -> bool {
        self.excluded.contains_key(id)
    }

    pub fn requirements(&self) -> &BTreeMap<ControlId, MinimumRequirement> {
        &self.requirements
    }

    pub fn excluded(&self) -> &BTreeMap<ControlId, String> {
        &self.excluded
    }

    pub fn priority_controls(&self) -> Vec<ControlId> {
        self.requirements
            .iter()
            .filter(|(_, r)| r.priority)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn to_json(&self) -> String {
        format::to_pretty_json(&MinimumDocument {
            format_version: format::FORMAT_VERSION.to_string(),
            mode: self.mode,
            requirements: self
                .requirements
                .iter()
                .map(|(c, r)| RequirementRow {
                    control: *c,
                    requirement: *r,
                })
                .collect(),
            excluded: self
                .excluded
                .iter()
                .map(|(c, j)| ExcludedControl {
                    control: *c,
                    justification: j.clone(),
                })
                .collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, MinimumsError> {
        let doc: MinimumDocument = serde_json::from_str(text)?;
        format::check_version(&doc.format_version)?;
        let mut excluded = BTreeMap::new();
        for e in doc.excluded {
            if e.justification.trim().is_empty() {
                return Err(MinimumsError::EmptyJustification(e.control));
            }
            excluded.insert(e.control, e.justification);
        }
        Ok(Self {
            mode: doc.mode,
            requirements: doc
                .requirements
                .into_iter()
                .map(|r| (r.control, r.requirement))
                .collect(),
            excluded,
        })
    }
}

/// Builds the minimum-level database for every catalog control.
///
/// Fixed mode requires a level of 1-5. Risk mode requires a rating for every
/// applicable control; ratings of excluded controls are ignored.
pub fn build_minimum_db(
    mode: &MinimumMode,
    applicability: &ApplicabilityMap,
    catalog: &ControlCatalog,
) -> Result<MinimumLevelDatabase, MinimumsError> {
    applicability.validate(catalog)?;
    let applicable = applicability.applicable_in(catalog);
    let requirements: BTreeMap<ControlId, MinimumRequirement> = match mode {
        MinimumMode::Fixed(level) => {
            if *level == MaturityLevel::NonExistent {
                return Err(MinimumsError::FixedLevelOutOfRange(level.value()));
            }
            applicable
                .iter()
                .map(|id| (*id, MinimumRequirement::fixed(*level)))
                .collect()
        }
        MinimumMode::Risk(ratings) => {
            if let Some(unknown) = ratings.keys().find(|id| !catalog.contains(id)) {
                return Err(MinimumsError::UnknownControl(*unknown));
            }
            let missing: Vec<ControlId> = applicable
                .iter()
                .filter(|id| !ratings.contains_key(id))
                .copied()
                .collect();
            if !missing.is_empty() {
                return Err(MinimumsError::MissingRatings(missing));
            }
            applicable
                .iter()
                .map(|id| {
                    let r = ratings[id];
                    (*id, risk_minimum(r.probability, r.impact))
                })
                .collect()
        }
    };
    Ok(MinimumLevelDatabase {
        mode: match mode {
            MinimumMode::Fixed(level) => ModeTag::Fixed { level: *level },
            MinimumMode::Risk(_) => ModeTag::Risk,
        },
        requirements,
        excluded: applicability.excluded().clone(),
    })
}
