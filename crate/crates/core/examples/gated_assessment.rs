//! Gated stage advancement on a hand-built plan: a company only reaches a
//! stage once every control of it and of all earlier stages meets its minimum.
//!
//!     cargo run --example gated_assessment

use std::collections::BTreeSet;

use isms_maturity::catalog::Control;
use isms_maturity::{
    evaluate, gap_analysis, misallocation_findings, ApplicabilityMap, ControlCatalog, ControlId,
    DependencyGraph, MaturityLevel, MeasurementSet, MinimumMode, Stage, StagePlan,
};

fn level(v: u8) -> MaturityLevel {
    MaturityLevel::try_from(v).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ids: Vec<ControlId> = [
        "A.5.1.1", "A.9.2.1", "A.12.3.1", "A.16.1.1", "A.17.1.1", "A.18.1.1",
    ]
    .iter()
    .map(|s| s.parse())
    .collect::<Result<_, _>>()?;
    let stages = [
        Stage::Essential,
        Stage::Essential,
        Stage::Intermediate,
        Stage::Intermediate,
        Stage::Advanced,
        Stage::Full,
    ];
    let catalog = ControlCatalog::new(
        ids.iter()
            .map(|id| Control {
                id: *id,
                title: String::new(),
                section_name: String::new(),
                objective_text: String::new(),
            })
            .collect(),
        DependencyGraph::default(),
    )?;
    let plan = StagePlan::from_memberships(ids.iter().copied().zip(stages), BTreeSet::new())?;
    let mins = isms_maturity::build_minimum_db(
        &MinimumMode::Fixed(level(3)),
        &ApplicabilityMap::all_applicable(),
        &catalog,
    )?;

    let scenarios: [(&str, [u8; 6]); 4] = [
        ("everything at 3", [3, 3, 3, 3, 3, 3]),
        ("one Intermediate gap", [4, 4, 2, 5, 5, 5]),
        ("Essential gap", [2, 5, 5, 5, 5, 5]),
        ("all but Full", [4, 3, 3, 4, 3, 1]),
    ];
    for (name, levels) in scenarios {
        let m = MeasurementSet::new(ids.iter().copied().zip(levels.map(level)).collect());
        let r = evaluate(&plan, &mins, &m)?;
        println!("{name}:");
        for s in &r.stages {
            println!(
                "  {:<13} avg {:>4}  {}",
                s.stage.name(),
                s.average
                    .map(|a| a.to_string())
                    .unwrap_or_else(|| "-".into()),
                if s.complete { "complete" } else { "incomplete" }
            );
        }
        println!(
            "  label: {} {}{}  (naive {})",
            r.label_stage.name(),
            r.label_level.map(|a| a.to_string()).unwrap_or_default(),
            if r.label_incomplete {
                ", Essential incomplete"
            } else {
                ""
            },
            r.naive_average
        );
        for g in gap_analysis(&r) {
            println!(
                "  gap {} measured {} required {}",
                g.control,
                g.measured.value(),
                g.required.value()
            );
        }
        for f in misallocation_findings(&r) {
            println!(
                "  effort hint: {} {} at {} while {} {} is at {}",
                f.later_stage.name(),
                f.later_control,
                f.later_level.value(),
                f.earlier_stage.name(),
                f.earlier_control,
                f.earlier_level.value()
            );
        }
    }
    Ok(())
}
