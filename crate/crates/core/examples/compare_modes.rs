//! One set of measurements read three ways: the company's own stage plan and
//! risk minimums, the default plan with a fixed floor of 3, and the plain
//! average that ignores stages.
//!
//!     cargo run --example compare_modes

use std::path::Path;

use isms_maturity::cli::{build_minimums, ingest_survey_file, load_applicability, MinimumSource};
use isms_maturity::io::read_measurements;
use isms_maturity::{
    build_stage_plan, compare_modes, ControlCatalog, ImportanceDatabase, MeasurementSet, StagePlan,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/company_a");
    let catalog = ControlCatalog::shipped();
    let applicability = load_applicability(Some(&data.join("applicability.csv")), &catalog)?;

    let db = ingest_survey_file(
        &data.join("survey.csv"),
        &ImportanceDatabase::empty(&catalog),
        &catalog,
        false,
        &mut std::io::stderr(),
    )?;
    let company_plan = build_stage_plan(&db, &catalog, &applicability)?;
    let model_mins = build_minimums(&MinimumSource::Fixed(3), &applicability, &catalog)?;
    let own_mins = build_minimums(
        &MinimumSource::Ratings(data.join("ratings.csv")),
        &applicability,
        &catalog,
    )?;
    let rows = read_measurements(
        "measurements.csv",
        std::fs::read(data.join("measurements.csv"))?.as_slice(),
    )?;
    let (measurements, _) = MeasurementSet::from_rows(rows, &applicability)?;

    let cmp = compare_modes(
        &StagePlan::shipped_default(),
        &company_plan,
        &model_mins,
        &own_mins,
        &measurements,
    )?;
    print!("{cmp}");
    Ok(())
}
