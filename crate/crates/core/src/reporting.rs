//! Evaluation and stakeholder report, and the three-way mode comparison.
//!
//! A report is a plain data document ([`ReportDocument`]) rendered either as
//! JSON or as fixed-layout text. Rendering reads no clock; the run timestamp
//! is part of the input.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{
    evaluate, naive_average, AssessmentError, AssessmentResult, ControlOutcome, Gap,
    MeasurementSet, MisallocationFinding,
};
use crate::catalog::ControlId;
use crate::format::{self, VersionError};
use crate::mean::Mean;
use crate::minimums::{
    join_ids, ApplicabilityMap, ExcludedControl, MaturityLevel, MinimumLevelDatabase,
};
use crate::staging::{Stage, StageDelta, StagePlan};

#[derive(Debug, Error)]
pub enum ReportingError {
    #[error("applicability differs between modes for: {}", join_ids(.0))]
    InconsistentApplicability(Vec<ControlId>),
    #[error("stage plans cover different control sets: {}", join_ids(.0))]
    MismatchedPlans(Vec<ControlId>),
    #[error("{mode} mode: {source}")]
    Evaluation {
        mode: RunMode,
        #[source]
        source: AssessmentError,
    },
    #[error("malformed report document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Version(#[from] VersionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    /// Shared default stage database with a fixed minimum level.
    Model,
    /// Company-local importance survey with risk-derived minimums.
    Independent,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Model => "model",
            RunMode::Independent => "independent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Structured,
    HumanReadable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub company: String,
    pub timestamp: Option<String>,
    pub mode: RunMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: Stage,
    pub average: Option<Mean>,
    pub average_display: Option<String>,
    pub complete: bool,
    pub control_count: usize,
    pub failing_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub stage: Stage,
    pub level: Option<Mean>,
    pub level_display: Option<String>,
    pub level_name: Option<String>,
    pub incomplete: bool,
    pub line: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaiveRow {
    pub level: Mean,
    pub level_display: String,
    pub level_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityRow {
    pub control: ControlId,
    pub stage: Stage,
    pub measured: MaturityLevel,
    pub required: MaturityLevel,
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisallocationSection {
    pub heuristic: bool,
    pub threshold: u8,
    pub findings: Vec<MisallocationFinding>,
}

/// Everything the report shows, plus the per-control rows needed to
/// recompute every average and the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format_version: String,
    pub header: ReportHeader,
    pub stages: Vec<StageRow>,
    pub label: LabelRow,
    pub naive: NaiveRow,
    pub gaps: Vec<Gap>,
    pub priority: Vec<PriorityRow>,
    pub misallocation: MisallocationSection,
    pub not_applicable: Vec<ExcludedControl>,
    pub plan_deltas: Option<Vec<StageDelta>>,
    pub controls: Vec<ControlOutcome>,
}

/// Inputs of one evaluation run.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub header: &'a ReportHeader,
    pub result: &'a AssessmentResult,
    pub gaps: &'a [Gap],
    pub findings: &'a [MisallocationFinding],
    pub misallocation_threshold: u8,
    pub applicability: &'a ApplicabilityMap,
    /// Stage-plan changes against the default database (independent runs).
    pub deltas: Option<&'a [StageDelta]>,
}

fn level_name(mean: &Mean) -> &'static str {
    let floor = mean.floor().min(5) as u8;
    MaturityLevel::try_from(floor)
        .expect("clamped to 0-5")
        .short_name()
}

/// `"<Stage> Stage, Maturity Level <x.xx> (<Level name>)"`.
pub fn label_line(stage: Stage, level: Option<&Mean>) -> String {
    match level {
        Some(m) => format!(
            "{stage} Stage, Maturity Level {} ({})",
            m.to_two_decimals(),
            level_name(m)
        ),
        None => format!("{stage} Stage, Maturity Level n/a"),
    }
}

impl ReportDocument {
    pub fn build(input: &ReportInput<'_>) -> Self {
        let r = input.result;
        let stages = r
            .stages
            .iter()
            .map(|s| StageRow {
                stage: s.stage,
                average: s.average,
                average_display: s.average.map(|m| m.to_two_decimals()),
                complete: s.complete,
                control_count: r.controls.iter().filter(|c| c.stage == s.stage).count(),
                failing_count: s.failing.len(),
            })
            .collect();
        let priority = r
            .controls
            .iter()
            .filter(|c| c.priority)
            .map(|c| PriorityRow {
                control: c.control,
                stage: c.stage,
                measured: c.measured,
                required: c.required,
                met: c.meets_minimum(),
            })
            .collect();
        Self {
            format_version: format::FORMAT_VERSION.to_string(),
            header: input.header.clone(),
            stages,
            label: LabelRow {
                stage: r.label_stage,
                level: r.label_level,
                level_display: r.label_level.map(|m| m.to_two_decimals()),
                level_name: r.label_level.map(|m| level_name(&m).to_string()),
                incomplete: r.label_incomplete,
                line: label_line(r.label_stage, r.label_level.as_ref()),
            },
            naive: NaiveRow {
                level: r.naive_average,
                level_display: r.naive_average.to_two_decimals(),
                level_name: level_name(&r.naive_average).to_string(),
            },
            gaps: input.gaps.to_vec(),
            priority,
            misallocation: MisallocationSection {
                heuristic: true,
                threshold: input.misallocation_threshold,
                findings: input.findings.to_vec(),
            },
            not_applicable: input
                .applicability
                .excluded()
                .iter()
                .map(|(c, j)| ExcludedControl {
                    control: *c,
                    justification: j.clone(),
                })
                .collect(),
            plan_deltas: input.deltas.map(<[StageDelta]>::to_vec),
            controls: r.controls.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        format::to_pretty_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportingError> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        format::check_version(&doc.format_version)?;
        Ok(doc)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Structured => self.to_json(),
            ReportFormat::HumanReadable => self.to_text(),
        }
    }

    /// Plain text with a fixed section and column order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "EVALUATION AND STAKEHOLDERS COMMUNICATION REPORT");
        let _ = writeln!(w, "Company: {}", self.header.company);
        let _ = writeln!(
            w,
            "Timestamp: {}",
            self.header.timestamp.as_deref().unwrap_or("unspecified")
        );
        let _ = writeln!(w, "Mode: {}", self.header.mode);
        let _ = writeln!(w);
        let _ = writeln!(w, "STAGES");
        let _ = writeln!(
            w,
            "{:<14}{:>9}{:>10}{:>10}{:>10}",
            "Stage", "Controls", "Average", "Complete", "Failing"
        );
        for s in &self.stages {
            let _ = writeln!(
                w,
                "{:<14}{:>9}{:>10}{:>10}{:>10}",
                s.stage.name(),
                s.control_count,
                s.average_display.as_deref().unwrap_or("n/a"),
                if s.complete { "yes" } else { "no" },
                s.failing_count
            );
        }
        let _ = writeln!(w);
        let _ = writeln!(w, "LABEL");
        let _ = writeln!(w, "{}", self.label.line);
        if self.label.incomplete {
            let _ = writeln!(w, "Essential stage not yet complete.");
        }
        let _ = writeln!(
            w,
            "Naive average of all controls: {} ({})",
            self.naive.level_display, self.naive.level_name
        );
        let _ = writeln!(w);
        let _ = writeln!(w, "GAPS ({})", self.gaps.len());
        for g in &self.gaps {
            let _ = writeln!(
                w,
                "  {:<14}{:<11}measured {}  required {}{}",
                g.stage.name(),
                g.control.to_string(),
                g.measured,
                g.required,
                if g.priority { "  PRIORITY" } else { "" }
            );
        }
        let _ = writeln!(w);
        let _ = writeln!(w, "PRIORITY CONTROLS ({})", self.priority.len());
        for p in &self.priority {
            let _ = writeln!(
                w,
                "  {:<14}{:<11}measured {}  required {}  {}",
                p.stage.name(),
                p.control.to_string(),
                p.measured,
                p.required,
                if p.met { "met" } else { "NOT MET" }
            );
        }
        let _ = writeln!(w);
        let _ = writeln!(
            w,
            "MISALLOCATION FINDINGS ({}; heuristic, threshold {} levels)",
            self.misallocation.findings.len(),
            self.misallocation.threshold
        );
        for f in &self.misallocation.findings {
            let _ = writeln!(
                w,
                "  {} {} at level {} while {} {} is at level {}",
                f.later_stage,
                f.later_control,
                f.later_level,
                f.earlier_stage,
                f.earlier_control,
                f.earlier_level
            );
        }
        let _ = writeln!(w);
        let _ = writeln!(w, "NOT APPLICABLE CONTROLS ({})", self.not_applicable.len());
        for n in &self.not_applicable {
            let _ = writeln!(w, "  {:<11}{}", n.control.to_string(), n.justification);
        }
        if let Some(deltas) = &self.plan_deltas {
            let _ = writeln!(w);
            let _ = writeln!(
                w,
                "STAGE PLAN CHANGES VS DEFAULT DATABASE ({})",
                deltas.len()
            );
            for d in deltas {
                let _ = writeln!(
                    w,
                    "  {:<11}{:<14}-> {}",
                    d.control.to_string(),
                    d.from,
                    d.to
                );
            }
        }
        out
    }
}

/// Builds and serializes a report in one step.
pub fn render_report(input: &ReportInput<'_>, format: ReportFormat) -> String {
    ReportDocument::build(input).render(format)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub stage: Stage,
    pub level: Option<Mean>,
    pub incomplete: bool,
}

impl LabelSummary {
    fn of(r: &AssessmentResult) -> Self {
        Self {
            stage: r.label_stage,
            level: r.label_level,
            incomplete: r.label_incomplete,
        }
    }

    pub fn line(&self) -> String {
        label_line(self.stage, self.level.as_ref())
    }
}

/// The same measurements seen three ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub independent: LabelSummary,
    pub model: LabelSummary,
    pub naive: Mean,
}

impl fmt::Display for ModeComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "independent: {}", self.independent.line())?;
        writeln!(f, "model:       {}", self.model.line())?;
        writeln!(
            f,
            "naive:       Maturity Level {} ({})",
            self.naive.to_two_decimals(),
            level_name(&self.naive)
        )
    }
}

/// Evaluates the measurements under the default plan with the model
/// minimums, under the company plan with the independent minimums, and as a
/// plain average.
///
/// The company plan's exclusions apply to both modes; both minimum databases
/// must exclude exactly the same controls.
pub fn compare_modes(
    default_plan: &StagePlan,
    company_plan: &StagePlan,
    mins_model: &MinimumLevelDatabase,
    mins_independent: &MinimumLevelDatabase,
    measurements: &MeasurementSet,
) -> Result<ModeComparison, ReportingError> {
    let du = default_plan.universe();
    let cu = company_plan.universe();
    if du != cu {
        return Err(ReportingError::MismatchedPlans(
            du.symmetric_difference(&cu).copied().collect(),
        ));
    }
    let excluded = company_plan.excluded().clone();
    let mut inconsistent: BTreeSet<ControlId> = BTreeSet::new();
    for other in [
        mins_model
            .excluded()
            .keys()
            .copied()
            .collect::<BTreeSet<_>>(),
        mins_independent.excluded().keys().copied().collect(),
    ] {
        inconsistent.extend(excluded.symmetric_difference(&other));
    }
    inconsistent.extend(default_plan.excluded().difference(&excluded));
    if !inconsistent.is_empty() {
        return Err(ReportingError::InconsistentApplicability(
            inconsistent.into_iter().collect(),
        ));
    }

    let mut applicability = ApplicabilityMap::all_applicable();
    for (c, j) in mins_independent.excluded() {
        applicability = applicability
            .mark_not_applicable(*c, j)
            .expect("validated justification");
    }
    let model_plan = default_plan.with_exclusions(&applicability);

    let independent = evaluate(company_plan, mins_independent, measurements).map_err(|source| {
        ReportingError::Evaluation {
            mode: RunMode::Independent,
            source,
        }
    })?;
    let model = evaluate(&model_plan, mins_model, measurements).map_err(|source| {
        ReportingError::Evaluation {
            mode: RunMode::Model,
            source,
        }
    })?;
    let naive = naive_average(measurements).map_err(|source| ReportingError::Evaluation {
        mode: RunMode::Independent,
        source,
    })?;
    Ok(ModeComparison {
        independent: LabelSummary::of(&independent),
        model: LabelSummary::of(&model),
        naive,
    })
}
