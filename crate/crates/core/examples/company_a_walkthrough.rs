//! The Company A case end to end, through the same pipeline the `assess`
//! subcommand uses: survey, stage plan, risk minimums, evaluation, report.
//!
//!     cargo run --example company_a_walkthrough [-- --json]

use std::path::Path;

use isms_maturity::cli::{run_assessment, MinimumSource, RunConfig};
use isms_maturity::RunMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/company_a");
    let config = RunConfig {
        mode: RunMode::Independent,
        catalog: None,
        survey: Some(data.join("survey.csv")),
        minimums: MinimumSource::Ratings(data.join("ratings.csv")),
        applicability: Some(data.join("applicability.csv")),
        measurements: data.join("measurements.csv"),
        report_json: None,
        report_text: None,
        misallocation_threshold: 2,
        company: "Company A".into(),
        timestamp: Some("2026-01-01T00:00:00Z".into()),
    };
    let report = run_assessment(&config, &mut std::io::stderr())?;
    if std::env::args().any(|a| a == "--json") {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}
