//! Staged information-security maturity planning and assessment.
//!
//! The crate turns stakeholder importance surveys over the ISO/IEC 27001
//! Annex A controls into a four-stage implementation plan, derives a minimum
//! maturity level for every control (a fixed floor or a probability x impact
//! risk matrix), and evaluates measured control levels with gated stage
//! advancement: a company only reaches a stage once every applicable control
//! of that stage and of all earlier stages meets its minimum.
//!
//! The pipeline, module by module:
//!
//! 1. [`catalog`] - the 114 controls and their prerequisite graph.
//! 2. [`importance`] - Likert responses aggregated into exact averages.
//! 3. [`staging`] - quartile partition, tie absorption, prerequisite
//!    promotion and plan diffs.
//! 4. [`minimums`] - maturity scale, risk matrix, applicability.
//! 5. [`assessment`] - gated evaluation, gaps, misallocation findings.
//! 6. [`reporting`] - the stakeholder report and the mode comparison.
//! 7. [`cli`] and [`io`] - command-line front end and file formats.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod assessment;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod format;
pub mod importance;
pub mod io;
pub mod mean;
pub mod minimums;
pub mod reporting;
pub mod staging;

pub use assessment::{
    evaluate, gap_analysis, misallocation_findings, misallocation_findings_with, naive_average,
    AssessmentResult, Gap, MeasurementSet, MisallocationFinding, StageResult,
};
pub use catalog::{parse_control_id, Control, ControlCatalog, ControlId, DependencyGraph};
pub use error::Error;
pub use importance::{ImportanceDatabase, SurveyResponse};
pub use mean::Mean;
pub use minimums::{
    build_minimum_db, risk_minimum, ApplicabilityMap, MaturityLevel, MinimumLevelDatabase,
    MinimumMode, MinimumRequirement, RiskGrade,
};
pub use reporting::{compare_modes, render_report, ModeComparison, ReportDocument, RunMode};
pub use staging::{
    build_stage_plan, diff_stage_plans, partition_quartiles, promote_prerequisites, Boundaries,
    Stage, StageDelta, StagePlan,
};
