//! Turn a stakeholder survey into a four-stage plan, show tie absorption and
//! prerequisite promotion, and diff the result against the default database.
//!
//!     cargo run --example survey_to_stage_plan

use std::path::Path;

use isms_maturity::importance::ingest_responses;
use isms_maturity::io::{read_applicability, read_survey};
use isms_maturity::staging::Provenance;
use isms_maturity::{build_stage_plan, diff_stage_plans, ControlCatalog, Stage, StagePlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/company_a");
    let catalog = ControlCatalog::shipped();

    let survey = std::fs::read_to_string(data.join("survey.csv"))?;
    let rows = read_survey("survey.csv", survey.as_bytes())?;
    let ingest = ingest_responses(&rows.responses, &catalog)?;
    let db = ingest.database;
    println!(
        "{} responses from {} respondents ({} incomplete)",
        rows.responses.len(),
        db.respondents().count(),
        ingest.warnings.len()
    );

    let app_text = std::fs::read_to_string(data.join("applicability.csv"))?;
    let applicability = read_applicability("applicability.csv", app_text.as_bytes())?;

    let mut ranked: Vec<_> = db
        .averages()
        .into_iter()
        .filter(|(c, _)| applicability.is_applicable(c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    println!("five most important applicable controls:");
    for (c, avg) in ranked.iter().take(5) {
        println!("  {c:<10} {avg}");
    }

    let plan = build_stage_plan(&db, &catalog, &applicability)?;
    let targets = plan.boundaries().unwrap().targets();
    println!(
        "\ncut targets {targets:?} over {} applicable controls",
        targets[3]
    );
    for stage in Stage::ALL {
        println!(
            "  {:<13} {:>3} controls",
            stage.name(),
            plan.members(stage).len()
        );
    }
    // Essential overshoots its target when the controls straddling the cut
    // share an average.
    let essential = plan.members(Stage::Essential);
    let cut = db.control_average(&ranked[targets[0] - 1].0)?;
    let tied: Vec<String> = essential
        .iter()
        .filter(|c| db.control_average(c).unwrap() == cut)
        .map(|c| c.to_string())
        .collect();
    println!("tied at the Essential cut ({cut}): {}", tied.join(", "));

    let promoted: Vec<_> = plan
        .assignments()
        .iter()
        .filter(|(_, a)| a.provenance == Provenance::Promoted)
        .map(|(c, _)| c.to_string())
        .collect();
    println!(
        "promoted prerequisites: {}",
        if promoted.is_empty() {
            "none".into()
        } else {
            promoted.join(", ")
        }
    );

    println!("\nchanges against the default database:");
    for d in diff_stage_plans(&StagePlan::shipped_default(), &plan)? {
        println!("  {:<10} {:<13} -> {}", d.control, d.from, d.to);
    }
    Ok(())
}
