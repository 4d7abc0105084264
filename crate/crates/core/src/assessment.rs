//! Gated staged evaluation of measured control levels.
//!
//! Every stage reports its average over its applicable controls and whether
//! all of them meet their minimums. The label stage is the highest stage such
//! that it and every earlier stage are complete. Stages past the label are
//! still measured and reported.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ControlId;
use crate::mean::Mean;
use crate::minimums::{join_ids, ApplicabilityMap, MaturityLevel, MinimumLevelDatabase};
use crate::staging::{Stage, StagePlan};

/// Default gap, in levels, between a later-stage control and an earlier-stage
/// failing control before a misallocation finding is raised.
pub const DEFAULT_MISALLOCATION_THRESHOLD: u8 = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssessmentError {
    #[error("no measurement for applicable controls: {}", join_ids(.0))]
    MissingMeasurements(Vec<ControlId>),
    #[error("measurements given for excluded controls: {}", join_ids(.0))]
    MeasurementForExcluded(Vec<ControlId>),
    #[error("measurements given for controls outside the stage plan: {}", join_ids(.0))]
    UnknownControls(Vec<ControlId>),
    #[error("no minimum level for planned controls: {}", join_ids(.0))]
    MissingRequirements(Vec<ControlId>),
    #[error("duplicate measurement for {0}")]
    DuplicateMeasurement(ControlId),
    #[error("no applicable measurements")]
    Empty,
}

/// Measured maturity level of each applicable control.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSet {
    levels: BTreeMap<ControlId, MaturityLevel>,
}

impl MeasurementSet {
    pub fn new(levels: BTreeMap<ControlId, MaturityLevel>) -> Self {
        Self { levels }
    }

    /// Builds a set from raw rows, dropping rows of not-applicable controls.
    /// Returns the set and the dropped ids.
    pub fn from_rows<I: IntoIterator<Item = (ControlId, MaturityLevel)>>(
        rows: I,
        applicability: &ApplicabilityMap,
    ) -> Result<(Self, Vec<ControlId>), AssessmentError> {
        let mut levels = BTreeMap::new();
        let mut dropped = Vec::new();
        for (c, l) in rows {
            if levels.contains_key(&c) || dropped.contains(&c) {
                return Err(AssessmentError::DuplicateMeasurement(c));
            }
            if applicability.is_applicable(&c) {
                levels.insert(c, l);
            } else {
                dropped.push(c);
            }
        }
        Ok((Self { levels }, dropped))
    }

    pub fn level(&self, id: &ControlId) -> Option<MaturityLevel> {
        self.levels.get(id).copied()
    }

    pub fn levels(&self) -> &BTreeMap<ControlId, MaturityLevel> {
        &self.levels
    }

    pub fn set(&mut self, id: ControlId, level: MaturityLevel) {
        self.levels.insert(id, level);
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// A control below its minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailingControl {
    pub control: ControlId,
    pub measured: MaturityLevel,
    pub required: MaturityLevel,
    pub priority: bool,
}

/// Every planned control with its measurement and minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlOutcome {
    pub control: ControlId,
    pub stage: Stage,
    pub measured: MaturityLevel,
    pub required: MaturityLevel,
    pub priority: bool,
}

impl ControlOutcome {
    pub fn meets_minimum(&self) -> bool {
        self.measured >= self.required
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: Stage,
    /// `None` for a stage without applicable controls.
    pub average: Option<Mean>,
    pub complete: bool,
    pub failing: Vec<FailingControl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessmentResult {
    pub stages: Vec<StageResult>,
    pub label_stage: Stage,
    pub label_level: Option<Mean>,
    /// Set only when the Essential stage itself is incomplete.
    pub label_incomplete: bool,
    pub naive_average: Mean,
    pub priority_gaps: Vec<FailingControl>,
    pub controls: Vec<ControlOutcome>,
}

impl AssessmentResult {
    pub fn stage(&self, stage: Stage) -> &StageResult {
        &self.stages[stage.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub control: ControlId,
    pub stage: Stage,
    pub measured: MaturityLevel,
    pub required: MaturityLevel,
    pub priority: bool,
}

/// A later, less important stage holding a control well above a failing
/// control of an earlier stage. Heuristic: the threshold is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisallocationFinding {
    pub later_stage: Stage,
    pub earlier_stage: Stage,
    pub later_control: ControlId,
    pub later_level: MaturityLevel,
    pub earlier_control: ControlId,
    pub earlier_level: MaturityLevel,
}

/// Evaluates measured levels against a stage plan and its minimums.
pub fn evaluate(
    plan: &StagePlan,
    mins: &MinimumLevelDatabase,
    measurements: &MeasurementSet,
) -> Result<AssessmentResult, AssessmentError> {
    let excluded: Vec<ControlId> = measurements
        .levels
        .keys()
        .filter(|c| plan.excluded().contains(c) || mins.is_excluded(c))
        .copied()
        .collect();
    if !excluded.is_empty() {
        return Err(AssessmentError::MeasurementForExcluded(excluded));
    }
    let unknown: Vec<ControlId> = measurements
        .levels
        .keys()
        .filter(|c| plan.stage_of(c).is_none())
        .copied()
        .collect();
    if !unknown.is_empty() {
        return Err(AssessmentError::UnknownControls(unknown));
    }
    let missing: Vec<ControlId> = plan
        .assignments()
        .keys()
        .filter(|c| measurements.level(c).is_none())
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(AssessmentError::MissingMeasurements(missing));
    }
    let no_requirement: Vec<ControlId> = plan
        .assignments()
        .keys()
        .filter(|c| mins.requirement(c).is_none())
        .copied()
        .collect();
    if !no_requirement.is_empty() {
        return Err(AssessmentError::MissingRequirements(no_requirement));
    }

    let controls: Vec<ControlOutcome> = plan
        .assignments()
        .iter()
        .map(|(c, a)| {
            let req = mins.requirement(c).expect("checked above");
            ControlOutcome {
                control: *c,
                stage: a.stage,
                measured: measurements.level(c).expect("checked above"),
                required: req.required_level,
                priority: req.priority,
            }
        })
        .collect();

    let stages: Vec<StageResult> = Stage::ALL
        .iter()
        .map(|&stage| {
            let members: Vec<&ControlOutcome> =
                controls.iter().filter(|o| o.stage == stage).collect();
            let failing: Vec<FailingControl> = members
                .iter()
                .filter(|o| !o.meets_minimum())
                .map(|o| FailingControl {
                    control: o.control,
                    measured: o.measured,
                    required: o.required,
                    priority: o.priority,
                })
                .collect();
            StageResult {
                stage,
                average: Mean::of(members.iter().map(|o| o.measured.value() as u64)),
                complete: failing.is_empty(),
                failing,
            }
        })
        .collect();

    // Highest populated stage reached through an unbroken run of complete stages.
    let mut label = None;
    for s in &stages {
        if !s.complete {
            break;
        }
        if s.average.is_some() {
            label = Some(s.stage);
        }
    }
    let label_incomplete = !stages[0].complete;
    let label_stage = label.unwrap_or(Stage::Essential);

    let naive = naive_average(measurements)?;
    let priority_gaps = stages
        .iter()
        .flat_map(|s| s.failing.iter().filter(|f| f.priority).copied())
        .collect();

    Ok(AssessmentResult {
        label_level: stages[label_stage.index()].average,
        stages,
        label_stage,
        label_incomplete,
        naive_average: naive,
        priority_gaps,
        controls,
    })
}

/// Plain mean of every measured level.
pub fn naive_average(measurements: &MeasurementSet) -> Result<Mean, AssessmentError> {
    Mean::of(measurements.levels.values().map(|l| l.value() as u64)).ok_or(AssessmentError::Empty)
}

/// All failing controls, ordered by stage, then priority first, then id.
pub fn gap_analysis(result: &AssessmentResult) -> Vec<Gap> {
    let mut gaps: Vec<Gap> = result
        .stages
        .iter()
        .flat_map(|s| {
            s.failing.iter().map(move |f| Gap {
                control: f.control,
                stage: s.stage,
                measured: f.measured,
                required: f.required,
                priority: f.priority,
            })
        })
        .collect();
    gaps.sort_by_key(|g| (g.stage, !g.priority, g.control));
    gaps
}

/// [`misallocation_findings_with`] at the default threshold.
pub fn misallocation_findings(result: &AssessmentResult) -> Vec<MisallocationFinding> {
    misallocation_findings_with(result, DEFAULT_MISALLOCATION_THRESHOLD)
}

/// One finding per (earlier, later) stage pair where the best-measured
/// later-stage control beats the worst failing earlier-stage control by at
/// least `threshold` levels.
pub fn misallocation_findings_with(
    result: &AssessmentResult,
    threshold: u8,
) -> Vec<MisallocationFinding> {
    let mut best: BTreeMap<Stage, (MaturityLevel, ControlId)> = BTreeMap::new();
    for o in &result.controls {
        let e = best.entry(o.stage).or_insert((o.measured, o.control));
        // highest level, smallest id among equals
        if o.measured > e.0 || (o.measured == e.0 && o.control < e.1) {
            *e = (o.measured, o.control);
        }
    }
    let mut findings = Vec::new();
    for earlier in &result.stages {
        let Some(worst) = earlier
            .failing
            .iter()
            .min_by_key(|f| (f.measured, f.control))
        else {
            continue;
        };
        for later in Stage::ALL.iter().filter(|s| **s > earlier.stage) {
            let Some(&(level, control)) = best.get(later) else {
                continue;
            };
            if level.value() >= worst.measured.value() + threshold {
                findings.push(MisallocationFinding {
                    later_stage: *later,
                    earlier_stage: earlier.stage,
                    later_control: control,
                    later_level: level,
                    earlier_control: worst.control,
                    earlier_level: worst.measured,
                });
            }
        }
    }
    findings
}
