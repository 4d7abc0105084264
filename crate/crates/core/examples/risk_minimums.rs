//! Minimum maturity levels: the probability x impact matrix, a fixed floor,
//! and how not-applicable controls drop out.
//!
//!     cargo run --example risk_minimums

use std::path::Path;

use isms_maturity::io::{read_applicability, read_ratings};
use isms_maturity::minimums::{MinimumsError, RiskRating};
use isms_maturity::{
    build_minimum_db, risk_minimum, ApplicabilityMap, ControlCatalog, MaturityLevel, MinimumMode,
    RiskGrade,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("required level (probability down, impact across):");
    println!("{:>8} {:>7} {:>7} {:>7}", "", "low", "medium", "high");
    for p in RiskGrade::ALL {
        let cells: Vec<String> = RiskGrade::ALL
            .iter()
            .map(|&i| {
                let r = risk_minimum(p, i);
                format!(
                    "{}{}",
                    r.required_level.value(),
                    if r.priority { "*" } else { "" }
                )
            })
            .collect();
        println!(
            "{:>8} {:>7} {:>7} {:>7}",
            p.to_string(),
            cells[0],
            cells[1],
            cells[2]
        );
    }
    println!("(* priority control)\n");

    for level in MaturityLevel::ALL {
        println!(
            "  {} {:<13} {}",
            level.value(),
            level.short_name(),
            level.name()
        );
    }

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/company_a");
    let catalog = ControlCatalog::shipped();
    let ratings = read_ratings(
        "ratings.csv",
        std::fs::read(data.join("ratings.csv"))?.as_slice(),
    )?;
    let applicability = read_applicability(
        "applicability.csv",
        std::fs::read(data.join("applicability.csv"))?.as_slice(),
    )?;

    let risk = build_minimum_db(&MinimumMode::Risk(ratings), &applicability, &catalog)?;
    let mut histogram = [0usize; 6];
    for r in risk.requirements().values() {
        histogram[r.required_level.value() as usize] += 1;
    }
    println!(
        "\nrisk-derived minimums over {} applicable controls:",
        risk.requirements().len()
    );
    for (level, n) in histogram.iter().enumerate().filter(|(_, n)| **n > 0) {
        println!("  level {level}: {n}");
    }
    for c in risk.priority_controls() {
        println!("priority control: {c}");
    }
    for (c, why) in risk.excluded() {
        println!("excluded {c}: {why}");
    }

    let fixed = build_minimum_db(
        &MinimumMode::Fixed(MaturityLevel::Defined),
        &ApplicabilityMap::all_applicable(),
        &catalog,
    )?;
    println!(
        "\nfixed floor: {} controls at level 3",
        fixed.requirements().len()
    );

    // A missing rating is reported with every affected control at once.
    let mut partial = std::collections::BTreeMap::new();
    partial.insert(
        "A.5.1.1".parse()?,
        RiskRating {
            probability: RiskGrade::High,
            impact: RiskGrade::High,
        },
    );
    match build_minimum_db(
        &MinimumMode::Risk(partial),
        &ApplicabilityMap::all_applicable(),
        &catalog,
    ) {
        Err(MinimumsError::MissingRatings(missing)) => {
            println!(
                "partial ratings rejected: {} controls lack a rating",
                missing.len()
            )
        }
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
