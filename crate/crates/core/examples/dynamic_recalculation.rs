//! The plan is recomputed whenever its inputs change: new respondents, a
//! resubmitted survey, a control declared not applicable, or a new
//! prerequisite edge. Each change is shown as a diff against the previous plan.
//!
//!     cargo run --example dynamic_recalculation

use std::path::Path;

use isms_maturity::catalog::Edge;
use isms_maturity::importance::{ingest_responses, merge_responses};
use isms_maturity::io::read_survey;
use isms_maturity::{
    build_stage_plan, diff_stage_plans, ApplicabilityMap, ControlCatalog, ControlId, StagePlan,
    SurveyResponse,
};

fn show(title: &str, before: &StagePlan, after: &StagePlan) {
    let deltas = diff_stage_plans(before, after).expect("same control set");
    println!(
        "{title}: sizes {:?}, {} changes",
        after.sizes(),
        deltas.len()
    );
    for d in deltas {
        println!("    {:<10} {:<13} -> {}", d.control, d.from, d.to);
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/company_a");
    let catalog = ControlCatalog::shipped();
    let rows = read_survey(
        "survey.csv",
        std::fs::read(data.join("survey.csv"))?.as_slice(),
    )?;
    let all = ApplicabilityMap::all_applicable();

    // Start with the first five respondents, then add the last two.
    let (early, late): (Vec<_>, Vec<_>) = rows
        .responses
        .iter()
        .cloned()
        .partition(|r| r.respondent_id.as_str() <= "employee-5");
    let db = ingest_responses(&early, &catalog)?.database;
    let plan = build_stage_plan(&db, &catalog, &all)?;
    println!("five respondents: sizes {:?}", plan.sizes());

    let db = merge_responses(&db, &late, &catalog, false)?.database;
    let next = build_stage_plan(&db, &catalog, &all)?;
    show("seven respondents", &plan, &next);
    let plan = next;

    // employee-3 now thinks logging matters most; the old answers are
    // withdrawn rather than counted twice.
    let resubmission: Vec<SurveyResponse> = catalog
        .ids()
        .into_iter()
        .map(|c| {
            let score = if c.section() == 12 { 5 } else { 1 };
            SurveyResponse::new("employee-3", c, score)
        })
        .collect();
    let db = merge_responses(&db, &resubmission, &catalog, true)?.database;
    let next = build_stage_plan(&db, &catalog, &all)?;
    show("employee-3 resubmits", &plan, &next);
    let plan = next;

    let id = |s: &str| -> ControlId { s.parse().unwrap() };
    let applicability = all
        .clone()
        .mark_not_applicable(id("A.14.2.7"), "Software development is not outsourced")?;
    let next = build_stage_plan(&db, &catalog, &applicability)?;
    show("A.14.2.7 not applicable", &plan, &next);
    let plan = next;

    // A prerequisite in a later stage than its dependent is pulled forward.
    let essential = plan.members(isms_maturity::Stage::Essential)[0];
    let full = plan.members(isms_maturity::Stage::Full)[0];
    let mut graph = catalog.dependencies().clone();
    graph.insert(Edge::new(full, essential));
    let extended = ControlCatalog::new(catalog.controls().to_vec(), graph)?;
    let next = build_stage_plan(&db, &extended, &applicability)?;
    show(&format!("new edge {full} -> {essential}"), &plan, &next);
    let promoted: Vec<String> = next.promoted().iter().map(|c| c.to_string()).collect();
    println!("    promoted: {}", promoted.join(", "));
    Ok(())
}
