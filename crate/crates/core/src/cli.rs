//! Command-line front end.
//!
//! ```text
//! isms-maturity import-survey <survey.csv> --out <db.json> [--merge-into <db.json> [--replace]]
//! isms-maturity stage-plan build --importance <db.json|default> [--applicability <a.csv>] --out <plan.json>
//! isms-maturity stage-plan diff <plan.json|default> <plan.json|default> [--out <deltas.json>]
//! isms-maturity minimums build --mode fixed:<n>|risk [--ratings <r.csv>] [--applicability <a.csv>] --out <mins.json>
//! isms-maturity assess --mode model|independent --measurements <m.csv> [...]
//! isms-maturity report <report.json> [--format text|json] [--out <file>]
//! isms-maturity compare-modes --survey <s.csv> --ratings <r.csv> --measurements <m.csv> [...]
//! ```
//!
//! Exit status: 0 success, 1 invalid input, 2 inputs that do not fit
//! together, 64 usage error. Outputs are written atomically.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assessment::{
    evaluate, gap_analysis, misallocation_findings_with, MeasurementSet,
    DEFAULT_MISALLOCATION_THRESHOLD,
};
use crate::catalog::ControlCatalog;
use crate::error::{Error, EXIT_USAGE};
use crate::importance::{merge_responses, ImportanceDatabase, ImportanceError};
use crate::io::{self, InputError};
use crate::minimums::{
    build_minimum_db, ApplicabilityMap, MaturityLevel, MinimumLevelDatabase, MinimumMode,
};
use crate::reporting::{
    compare_modes, ModeComparison, ReportDocument, ReportFormat, ReportHeader, ReportInput, RunMode,
};
use crate::staging::{build_stage_plan, diff_stage_plans, StageDelta, StagePlan};

/// Keyword accepted wherever a shipped default file can stand in for a path.
pub const DEFAULT_KEYWORD: &str = "default";

#[derive(Debug, Parser)]
#[command(
    name = "isms-maturity",
    version,
    about = "Staged information-security maturity planning and assessment"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Aggregate a Likert survey CSV into an importance database.
    ImportSurvey(ImportSurveyArgs),
    /// Build or compare stage plans.
    StagePlan {
        #[command(subcommand)]
        action: StagePlanCommand,
    },
    /// Build minimum-level databases.
    Minimums {
        #[command(subcommand)]
        action: MinimumsCommand,
    },
    /// Evaluate measured control levels and produce the report.
    Assess(AssessArgs),
    /// Re-render a structured report.
    Report(ReportArgs),
    /// Compare independent, model and naive results for one measurement set.
    CompareModes(CompareArgs),
}

#[derive(Debug, Args)]
struct CatalogArg {
    /// Catalog document; the bundled 114-control catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ImportSurveyArgs {
    survey: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Existing database to merge the new responses into.
    #[arg(long)]
    merge_into: Option<PathBuf>,
    /// Let respondents already in the database resubmit.
    #[arg(long, requires = "merge_into")]
    replace: bool,
    #[command(flatten)]
    catalog: CatalogArg,
}

#[derive(Debug, Subcommand)]
enum StagePlanCommand {
    Build {
        /// Importance database, or `default` for the bundled one.
        #[arg(long)]
        importance: String,
        #[arg(long)]
        applicability: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        catalog: CatalogArg,
    },
    Diff {
        /// Stage plan, or `default` for the bundled database.
        from: String,
        to: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum MinimumsCommand {
    Build {
        /// `fixed:<level>` or `risk`.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long)]
        applicability: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        catalog: CatalogArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Model,
    Independent,
}

#[derive(Debug, Args)]
struct AssessArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    applicability: Option<PathBuf>,
    /// Company importance survey (independent mode only).
    #[arg(long)]
    survey: Option<PathBuf>,
    /// Risk ratings for risk-derived minimums.
    #[arg(long, conflicts_with = "fixed_level")]
    ratings: Option<PathBuf>,
    /// Fixed minimum level for every applicable control.
    #[arg(long)]
    fixed_level: Option<u8>,
    #[arg(long, default_value = "unnamed")]
    company: String,
    /// Recorded verbatim in the report header.
    #[arg(long)]
    timestamp: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MISALLOCATION_THRESHOLD)]
    threshold: u8,
    /// Structured (JSON) report output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Human-readable report output; printed to stdout when omitted.
    #[arg(long)]
    text: Option<PathBuf>,
    #[command(flatten)]
    catalog: CatalogArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct ReportArgs {
    report: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    survey: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long)]
    applicability: Option<PathBuf>,
    /// Fixed minimum used by the model mode.
    #[arg(long, default_value_t = 3)]
    model_level: u8,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    catalog: CatalogArg,
}

/// Where minimum levels come from in an assessment run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinimumSource {
    Fixed(u8),
    Ratings(PathBuf),
}

/// Everything an `assess` run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: RunMode,
    pub catalog: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub minimums: MinimumSource,
    pub applicability: Option<PathBuf>,
    pub measurements: PathBuf,
    pub report_json: Option<PathBuf>,
    pub report_text: Option<PathBuf>,
    pub misallocation_threshold: u8,
    pub company: String,
    pub timestamp: Option<String>,
}

impl RunConfig {
    /// Model mode uses the bundled stage database and so forbids a survey;
    /// independent mode needs one.
    pub fn validate(&self) -> Result<(), Error> {
        match (self.mode, &self.survey) {
            (RunMode::Model, Some(_)) => Err(Error::Usage(
                "model mode uses the default stage database; --survey is not allowed".into(),
            )),
            (RunMode::Independent, None) => {
                Err(Error::Usage("independent mode requires --survey".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Parses arguments and runs one subcommand, returning the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(stdout, "{rendered}");
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        EXIT_USAGE
                    } else {
                        0
                    }
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Error> {
    match cmd {
        Command::ImportSurvey(a) => import_survey(a, stdout, stderr),
        Command::StagePlan { action } => match action {
            StagePlanCommand::Build {
                importance,
                applicability,
                out,
                catalog,
            } => {
                let cat = load_catalog(catalog.catalog.as_deref())?;
                let app = load_applicability(applicability.as_deref(), &cat)?;
                let db = load_importance(&importance)?;
                let plan = build_stage_plan(&db, &cat, &app).map_err(|source| Error::Staging {
                    context: importance.clone(),
                    source,
                })?;
                io::write_atomic(&out, &plan.to_json())?;
                let [e, i, a, f] = plan.sizes();
                let _ = writeln!(
                    stdout,
                    "stage sizes: Essential {e}, Intermediate {i}, Advanced {a}, Full {f}; {} excluded, {} promoted",
                    plan.excluded().len(),
                    plan.promoted().len()
                );
                Ok(())
            }
            StagePlanCommand::Diff { from, to, out } => {
                let a = load_plan(&from)?;
                let b = load_plan(&to)?;
                let deltas = diff_stage_plans(&a, &b).map_err(|source| Error::Staging {
                    context: format!("{from} vs {to}"),
                    source,
                })?;
                for d in &deltas {
                    let _ = writeln!(
                        stdout,
                        "{:<11}{:<14}-> {}",
                        d.control.to_string(),
                        d.from,
                        d.to
                    );
                }
                let _ = writeln!(stdout, "{} deltas", deltas.len());
                if let Some(out) = out {
                    io::write_atomic(&out, &deltas_json(&deltas))?;
                }
                Ok(())
            }
        },
        Command::Minimums {
            action:
                MinimumsCommand::Build {
                    mode,
                    ratings,
                    applicability,
                    out,
                    catalog,
                },
        } => {
            let cat = load_catalog(catalog.catalog.as_deref())?;
            let app = load_applicability(applicability.as_deref(), &cat)?;
            let source = parse_minimum_mode(&mode, ratings)?;
            let db = build_minimums(&source, &app, &cat)?;
            io::write_atomic(&out, &db.to_json())?;
            let _ = writeln!(
                stdout,
                "{} requirements, {} excluded, {} priority",
                db.requirements().len(),
                db.excluded().len(),
                db.priority_controls().len()
            );
            Ok(())
        }
        Command::Assess(a) => {
            let cfg = RunConfig {
                mode: match a.mode {
                    ModeArg::Model => RunMode::Model,
                    ModeArg::Independent => RunMode::Independent,
                },
                catalog: a.catalog.catalog,
                survey: a.survey,
                minimums: match (a.ratings, a.fixed_level) {
                    (Some(r), _) => MinimumSource::Ratings(r),
                    (None, Some(l)) => MinimumSource::Fixed(l),
                    (None, None) => MinimumSource::Fixed(3),
                },
                applicability: a.applicability,
                measurements: a.measurements,
                report_json: a.out,
                report_text: a.text,
                misallocation_threshold: a.threshold,
                company: a.company,
                timestamp: a.timestamp,
            };
            let report = run_assessment(&cfg, stderr)?;
            let text = report.to_text();
            if let Some(p) = &cfg.report_json {
                io::write_atomic(p, &report.to_json())?;
            }
            match &cfg.report_text {
                Some(p) => {
                    io::write_atomic(p, &text)?;
                    let _ = writeln!(stdout, "{}", report.label.line);
                }
                None => {
                    let _ = write!(stdout, "{text}");
                }
            }
            Ok(())
        }
        Command::Report(a) => {
            let doc = ReportDocument::from_json(&io::read_text(&a.report)?)?;
            let rendered = doc.render(match a.format {
                FormatArg::Text => ReportFormat::HumanReadable,
                FormatArg::Json => ReportFormat::Structured,
            });
            match a.out {
                Some(p) => io::write_atomic(&p, &rendered)?,
                None => {
                    let _ = write!(stdout, "{rendered}");
                }
            }
            Ok(())
        }
        Command::CompareModes(a) => {
            let cat = load_catalog(a.catalog.catalog.as_deref())?;
            let app = load_applicability(a.applicability.as_deref(), &cat)?;
            let cmp = run_comparison(
                &cat,
                &app,
                &a.survey,
                &a.ratings,
                &a.measurements,
                a.model_level,
                stderr,
            )?;
            let _ = write!(stdout, "{cmp}");
            if let Some(p) = a.out {
                io::write_atomic(&p, &crate::format::to_pretty_json(&cmp))?;
            }
            Ok(())
        }
    }
}

fn import_survey(
    a: ImportSurveyArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Error> {
    let cat = load_catalog(a.catalog.catalog.as_deref())?;
    let base = match &a.merge_into {
        Some(p) => load_importance(&p.to_string_lossy())?,
        None => ImportanceDatabase::empty(&cat),
    };
    let db = ingest_survey_file(&a.survey, &base, &cat, a.replace, stderr)?;
    io::write_atomic(&a.out, &db.to_json())?;
    let with_data = db.totals().values().filter(|t| t.count > 0).count();
    let _ = writeln!(
        stdout,
        "{} respondents, {} of {} controls with responses",
        db.respondents().count(),
        with_data,
        cat.len()
    );
    Ok(())
}

/// Reads a survey CSV and merges it into `base`. Completeness warnings go to
/// `warn`; row errors name the file line.
pub fn ingest_survey_file(
    path: &Path,
    base: &ImportanceDatabase,
    catalog: &ControlCatalog,
    replace: bool,
    warn: &mut dyn Write,
) -> Result<ImportanceDatabase, Error> {
    let file = path.display().to_string();
    let rows = io::read_survey(&file, io::open(path)?)?;
    let ingest =
        merge_responses(base, &rows.responses, catalog, replace).map_err(|e| match e.row() {
            Some(row) => {
                let prefix = format!("row {row}: ");
                let msg = e.to_string();
                Error::Input(InputError {
                    file: file.clone(),
                    line: rows.line_of(row),
                    reason: msg.strip_prefix(&prefix).unwrap_or(&msg).to_string(),
                })
            }
            None => Error::Importance {
                context: file.clone(),
                source: e,
            },
        })?;
    for w in &ingest.warnings {
        let _ = writeln!(
            warn,
            "warning: {file}: respondent {:?} left {} controls unscored",
            w.respondent,
            w.missing.len()
        );
    }
    Ok(ingest.database)
}

fn parse_minimum_mode(mode: &str, ratings: Option<PathBuf>) -> Result<MinimumSource, Error> {
    if mode == "risk" {
        return ratings
            .map(MinimumSource::Ratings)
            .ok_or_else(|| Error::Usage("--mode risk requires --ratings".into()));
    }
    if let Some(level) = mode.strip_prefix("fixed:") {
        if ratings.is_some() {
            return Err(Error::Usage("--ratings only applies to --mode risk".into()));
        }
        return level
            .parse::<u8>()
            .map(MinimumSource::Fixed)
            .map_err(|_| Error::Usage(format!("invalid fixed level {level:?}")));
    }
    Err(Error::Usage(format!(
        "--mode must be fixed:<level> or risk, got {mode:?}"
    )))
}

/// Builds the minimum-level database for a run.
pub fn build_minimums(
    source: &MinimumSource,
    applicability: &ApplicabilityMap,
    catalog: &ControlCatalog,
) -> Result<MinimumLevelDatabase, Error> {
    let (mode, context) = match source {
        MinimumSource::Fixed(level) => {
            let lvl = MaturityLevel::try_from(*level).map_err(|source| Error::Minimums {
                context: "fixed level".into(),
                source,
            })?;
            (MinimumMode::Fixed(lvl), format!("fixed:{level}"))
        }
        MinimumSource::Ratings(path) => {
            let file = path.display().to_string();
            let ratings = io::read_ratings(&file, io::open(path)?)?;
            (MinimumMode::Risk(ratings), file)
        }
    };
    build_minimum_db(&mode, applicability, catalog)
        .map_err(|source| Error::Minimums { context, source })
}

pub fn load_catalog(path: Option<&Path>) -> Result<ControlCatalog, Error> {
    match path {
        None => Ok(ControlCatalog::shipped()),
        Some(p) => ControlCatalog::from_json(&io::read_text(p)?).map_err(|source| Error::Catalog {
            context: p.display().to_string(),
            source,
        }),
    }
}

pub fn load_applicability(
    path: Option<&Path>,
    catalog: &ControlCatalog,
) -> Result<ApplicabilityMap, Error> {
    let Some(p) = path else {
        return Ok(ApplicabilityMap::all_applicable());
    };
    let file = p.display().to_string();
    let map = io::read_applicability(&file, io::open(p)?)?;
    map.validate(catalog).map_err(|source| Error::Minimums {
        context: file,
        source,
    })?;
    Ok(map)
}

/// Loads an importance database; `default` selects the bundled one.
pub fn load_importance(arg: &str) -> Result<ImportanceDatabase, Error> {
    if arg == DEFAULT_KEYWORD {
        return Ok(ImportanceDatabase::shipped());
    }
    let text = io::read_text(Path::new(arg))?;
    ImportanceDatabase::from_json(&text).map_err(|source: ImportanceError| Error::Importance {
        context: arg.to_string(),
        source,
    })
}

/// Loads a stage plan; `default` selects the bundled stage database.
pub fn load_plan(arg: &str) -> Result<StagePlan, Error> {
    if arg == DEFAULT_KEYWORD {
        return Ok(StagePlan::shipped_default());
    }
    StagePlan::from_json(&io::read_text(Path::new(arg))?).map_err(|source| Error::Staging {
        context: arg.to_string(),
        source,
    })
}

fn load_measurements(
    path: &Path,
    applicability: &ApplicabilityMap,
    warn: &mut dyn Write,
) -> Result<MeasurementSet, Error> {
    let file = path.display().to_string();
    let rows = io::read_measurements(&file, io::open(path)?)?;
    let (set, dropped) = MeasurementSet::from_rows(rows, applicability)?;
    if !dropped.is_empty() {
        let _ = writeln!(
            warn,
            "warning: {file}: ignored measurements of {} not-applicable controls",
            dropped.len()
        );
    }
    Ok(set)
}

fn deltas_json(deltas: &[StageDelta]) -> String {
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        format_version: &'a str,
        deltas: &'a [StageDelta],
    }
    crate::format::to_pretty_json(&Doc {
        format_version: crate::format::FORMAT_VERSION,
        deltas,
    })
}

/// The whole `assess` pipeline: plan, minimums, evaluation, report.
pub fn run_assessment(cfg: &RunConfig, warn: &mut dyn Write) -> Result<ReportDocument, Error> {
    cfg.validate()?;
    let cat = load_catalog(cfg.catalog.as_deref())?;
    let app = load_applicability(cfg.applicability.as_deref(), &cat)?;
    let default_plan = StagePlan::shipped_default().with_exclusions(&app);
    let (plan, deltas) = match (cfg.mode, &cfg.survey) {
        (RunMode::Independent, Some(survey)) => {
            let db =
                ingest_survey_file(survey, &ImportanceDatabase::empty(&cat), &cat, false, warn)?;
            let plan = build_stage_plan(&db, &cat, &app).map_err(|source| Error::Staging {
                context: survey.display().to_string(),
                source,
            })?;
            let deltas =
                diff_stage_plans(&StagePlan::shipped_default(), &plan).map_err(|source| {
                    Error::Staging {
                        context: "default database".into(),
                        source,
                    }
                })?;
            (plan, Some(deltas))
        }
        _ => (default_plan, None),
    };
    let mins = build_minimums(&cfg.minimums, &app, &cat)?;
    let measurements = load_measurements(&cfg.measurements, &app, warn)?;
    let result = evaluate(&plan, &mins, &measurements)?;
    let gaps = gap_analysis(&result);
    let findings = misallocation_findings_with(&result, cfg.misallocation_threshold);
    let header = ReportHeader {
        company: cfg.company.clone(),
        timestamp: cfg.timestamp.clone(),
        mode: cfg.mode,
    };
    Ok(ReportDocument::build(&ReportInput {
        header: &header,
        result: &result,
        gaps: &gaps,
        findings: &findings,
        misallocation_threshold: cfg.misallocation_threshold,
        applicability: &app,
        deltas: deltas.as_deref(),
    }))
}

fn run_comparison(
    cat: &ControlCatalog,
    app: &ApplicabilityMap,
    survey: &Path,
    ratings: &Path,
    measurements: &Path,
    model_level: u8,
    warn: &mut dyn Write,
) -> Result<ModeComparison, Error> {
    let db = ingest_survey_file(survey, &ImportanceDatabase::empty(cat), cat, false, warn)?;
    let company_plan = build_stage_plan(&db, cat, app).map_err(|source| Error::Staging {
        context: survey.display().to_string(),
        source,
    })?;
    let mins_model = build_minimums(&MinimumSource::Fixed(model_level), app, cat)?;
    let mins_independent =
        build_minimums(&MinimumSource::Ratings(ratings.to_path_buf()), app, cat)?;
    let m = load_measurements(measurements, app, warn)?;
    Ok(compare_modes(
        &StagePlan::shipped_default(),
        &company_plan,
        &mins_model,
        &mins_independent,
        &m,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_parsing() {
        assert_eq!(
            parse_minimum_mode("fixed:3", None).unwrap(),
            MinimumSource::Fixed(3)
        );
        assert!(matches!(
            parse_minimum_mode("risk", None),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            parse_minimum_mode("fixed:x", None),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            parse_minimum_mode("other", None),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn run_config_survey_rules() {
        let mut cfg = RunConfig {
            mode: RunMode::Model,
            catalog: None,
            survey: Some("s.csv".into()),
            minimums: MinimumSource::Fixed(3),
            applicability: None,
            measurements: "m.csv".into(),
            report_json: None,
            report_text: None,
            misallocation_threshold: 2,
            company: "x".into(),
            timestamp: None,
        };
        assert_eq!(cfg.validate().unwrap_err().exit_code(), EXIT_USAGE);
        cfg.mode = RunMode::Independent;
        assert!(cfg.validate().is_ok());
        cfg.survey = None;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn usage_errors_exit_64() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["isms-maturity", "frobnicate"], &mut out, &mut err), 64);
        assert_eq!(run(["isms-maturity", "--help"], &mut out, &mut err), 0);
    }
}
