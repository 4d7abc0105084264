mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use isms_maturity::assessment::AssessmentError;
use isms_maturity::minimums::RiskRating;
use isms_maturity::{
    build_minimum_db, evaluate, gap_analysis, misallocation_findings_with, naive_average,
    ApplicabilityMap, AssessmentResult, ControlCatalog, ControlId, MaturityLevel, Mean,
    MeasurementSet, MinimumLevelDatabase, MinimumMode, RiskGrade, Stage, StagePlan,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lvl(v: u8) -> MaturityLevel {
    MaturityLevel::try_from(v).unwrap()
}

fn grade(i: u8) -> RiskGrade {
    RiskGrade::ALL[i as usize]
}

/// A small universe over a synthetic catalog.
struct Case {
    plan: StagePlan,
    mins: MinimumLevelDatabase,
    levels: MeasurementSet,
}

fn case(stages: &[usize], grades: &[(u8, u8)], measured: &[u8]) -> Case {
    let n = stages.len();
    let cat = synthetic_catalog(n, &[]);
    let ids = synthetic_ids(n);
    let plan = StagePlan::from_memberships(
        ids.iter()
            .zip(stages)
            .map(|(c, &s)| (*c, Stage::from_index(s).unwrap())),
        BTreeSet::new(),
    )
    .unwrap();
    let ratings: BTreeMap<ControlId, RiskRating> = ids
        .iter()
        .zip(grades)
        .map(|(c, &(p, i))| {
            (
                *c,
                RiskRating {
                    probability: grade(p),
                    impact: grade(i),
                },
            )
        })
        .collect();
    let mins = build_minimum_db(
        &MinimumMode::Risk(ratings),
        &ApplicabilityMap::all_applicable(),
        &cat,
    )
    .unwrap();
    let levels = MeasurementSet::new(
        ids.iter()
            .zip(measured)
            .map(|(c, &m)| (*c, lvl(m)))
            .collect(),
    );
    Case { plan, mins, levels }
}

/// Label by trying every stage: the highest populated stage such that it and
/// all earlier stages have no control below its minimum.
fn oracle_label(c: &Case) -> (Stage, Option<Mean>) {
    let meets = |s: Stage| {
        c.plan
            .members(s)
            .iter()
            .all(|id| c.levels.level(id).unwrap() >= c.mins.required_level(id).unwrap())
    };
    let avg = |s: Stage| {
        Mean::of(
            c.plan
                .members(s)
                .iter()
                .map(|id| c.levels.level(id).unwrap().value() as u64),
        )
    };
    let mut best = Stage::Essential;
    for s in Stage::ALL {
        let reachable = Stage::ALL.iter().filter(|t| **t <= s).all(|t| meets(*t));
        if reachable && !c.plan.members(s).is_empty() {
            best = s;
        }
    }
    (best, avg(best))
}

fn run(c: &Case) -> AssessmentResult {
    evaluate(&c.plan, &c.mins, &c.levels).unwrap()
}

#[test]
fn label_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5000 {
        let n = rng.gen_range(1..=8);
        let stages: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let grades: Vec<(u8, u8)> = (0..n)
            .map(|_| (rng.gen_range(0..3), rng.gen_range(0..3)))
            .collect();
        let measured: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=5)).collect();
        let c = case(&stages, &grades, &measured);
        let r = run(&c);
        let (stage, level) = oracle_label(&c);
        assert_eq!(
            (r.label_stage, r.label_level),
            (stage, level),
            "{stages:?} {measured:?}"
        );
        assert_eq!(r.label_incomplete, !r.stages[0].complete);
        let ones = Mean::of(measured.iter().map(|&m| m as u64)).unwrap();
        assert_eq!(r.naive_average, ones);
    }
}

#[test]
fn empty_stages_are_vacuously_complete() {
    // Essential and Full populated, middle stages empty
    let c = case(&[0, 3], &[(0, 0), (0, 0)], &[2, 4]);
    let r = run(&c);
    assert_eq!(r.label_stage, Stage::Full);
    assert_eq!(r.stage(Stage::Intermediate).average, None);
    assert!(r.stage(Stage::Intermediate).complete);
    assert_eq!(r.label_level, Mean::new(4, 1));
}

#[test]
fn failing_essential_still_labels_essential_but_flags_it() {
    let c = case(&[0, 1], &[(2, 2), (0, 0)], &[3, 5]);
    let r = run(&c);
    assert_eq!(r.label_stage, Stage::Essential);
    assert!(r.label_incomplete);
    assert_eq!(r.priority_gaps.len(), 1);
}

#[test]
fn gaps_sorted_by_stage_then_priority() {
    // two Advanced gaps, one priority; one Essential gap
    let c = case(
        &[2, 2, 0, 2],
        &[(0, 1), (2, 2), (1, 1), (0, 0)],
        &[1, 1, 1, 5],
    );
    let r = run(&c);
    let gaps = gap_analysis(&r);
    let ids = synthetic_ids(4);
    assert_eq!(
        gaps.iter().map(|g| g.control).collect::<Vec<_>>(),
        vec![ids[2], ids[1], ids[0]]
    );
    assert!(gaps[1].priority);
}

#[test]
fn misallocation_threshold_is_configurable() {
    // Essential fails at level 1; Full sits at 4
    let c = case(&[0, 3], &[(1, 1), (0, 0)], &[1, 4]);
    let r = run(&c);
    assert_eq!(misallocation_findings_with(&r, 2).len(), 1);
    assert_eq!(misallocation_findings_with(&r, 3).len(), 1);
    assert_eq!(misallocation_findings_with(&r, 4).len(), 0);
    let f = misallocation_findings_with(&r, 2)[0];
    assert_eq!(
        (f.earlier_stage, f.later_stage),
        (Stage::Essential, Stage::Full)
    );
}

#[test]
fn evaluation_rejects_incomplete_or_foreign_measurements() {
    let c = case(&[0, 1], &[(0, 0), (0, 0)], &[2, 2]);
    let mut partial = c.levels.clone();
    let extra = id("A.18.2.3");
    partial.set(extra, lvl(3));
    assert!(matches!(
        evaluate(&c.plan, &c.mins, &partial),
        Err(AssessmentError::UnknownControls(_))
    ));
    let one = MeasurementSet::new(
        c.levels
            .levels()
            .iter()
            .take(1)
            .map(|(k, v)| (*k, *v))
            .collect(),
    );
    assert!(matches!(
        evaluate(&c.plan, &c.mins, &one),
        Err(AssessmentError::MissingMeasurements(_))
    ));
}

/// Shipped default plan, random ratings, random measurements.
fn random_full(rng: &mut ChaCha8Rng) -> (StagePlan, MinimumLevelDatabase, MeasurementSet) {
    let cat = ControlCatalog::shipped();
    let ratings = cat
        .ids()
        .into_iter()
        .map(|c| {
            (
                c,
                RiskRating {
                    probability: grade(rng.gen_range(0..3)),
                    impact: grade(rng.gen_range(0..3)),
                },
            )
        })
        .collect();
    let mins = build_minimum_db(
        &MinimumMode::Risk(ratings),
        &ApplicabilityMap::all_applicable(),
        &cat,
    )
    .unwrap();
    let floor = rng.gen_range(0..=4);
    let levels = MeasurementSet::new(
        cat.ids()
            .into_iter()
            .map(|c| (c, lvl(rng.gen_range(floor..=5))))
            .collect(),
    );
    (StagePlan::shipped_default(), mins, levels)
}

#[test]
fn raising_one_level_never_lowers_the_label() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..300 {
        let (plan, mins, mut levels) = random_full(&mut rng);
        let before = evaluate(&plan, &mins, &levels).unwrap();
        let ids: Vec<ControlId> = levels.levels().keys().copied().collect();
        let target = ids[rng.gen_range(0..ids.len())];
        let old = levels.level(&target).unwrap().value();
        if old == 5 {
            continue;
        }
        levels.set(target, lvl(rng.gen_range(old + 1..=5)));
        let after = evaluate(&plan, &mins, &levels).unwrap();
        assert!(after.label_stage >= before.label_stage);
        if after.label_stage == before.label_stage {
            assert!(after.label_level >= before.label_level);
        }
        for (a, b) in after.stages.iter().zip(&before.stages) {
            assert!(a.complete || !b.complete);
        }
        assert!(after.naive_average > before.naive_average);
    }
}

#[test]
fn naive_average_can_rank_opposite_to_the_label() {
    let cat = ControlCatalog::shipped();
    let plan = StagePlan::shipped_default();
    let mins = build_minimum_db(
        &MinimumMode::Fixed(MaturityLevel::Defined),
        &ApplicabilityMap::all_applicable(),
        &cat,
    )
    .unwrap();
    let even = MeasurementSet::new(cat.ids().into_iter().map(|c| (c, lvl(3))).collect());
    let mut lopsided = even.clone();
    for c in plan.members(Stage::Full) {
        lopsided.set(c, lvl(5));
    }
    lopsided.set(plan.members(Stage::Essential)[0], lvl(2));
    let a = evaluate(&plan, &mins, &lopsided).unwrap();
    let b = evaluate(&plan, &mins, &even).unwrap();
    assert!(naive_average(&lopsided).unwrap() > naive_average(&even).unwrap());
    assert!(a.label_stage < b.label_stage);
    assert_eq!(b.label_stage, Stage::Full);
}

#[test]
fn exclusions_are_neutral() {
    let cat = ControlCatalog::shipped();
    let excluded = [id("A.14.2.1"), id("A.14.2.6"), id("A.7.1.1")];
    let mut app = ApplicabilityMap::all_applicable();
    for c in excluded {
        app = app.mark_not_applicable(c, "not used here").unwrap();
    }
    let plan = StagePlan::shipped_default().with_exclusions(&app);
    let mins = build_minimum_db(&MinimumMode::Fixed(MaturityLevel::Defined), &app, &cat).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let base: Vec<(ControlId, MaturityLevel)> = cat
        .ids()
        .into_iter()
        .map(|c| (c, lvl(rng.gen_range(2..=5))))
        .collect();
    let mut results = Vec::new();
    for forced in [0u8, 5] {
        let rows = base.iter().map(|&(c, l)| {
            (
                c,
                if excluded.contains(&c) {
                    lvl(forced)
                } else {
                    l
                },
            )
        });
        let (set, dropped) = MeasurementSet::from_rows(rows, &app).unwrap();
        assert_eq!(dropped.len(), 3);
        results.push(evaluate(&plan, &mins, &set).unwrap());
    }
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0].controls.len(), 111);
    // measuring an excluded control directly is an error
    let mut direct = MeasurementSet::new(base.iter().copied().collect());
    direct.set(excluded[0], lvl(1));
    assert!(matches!(
        evaluate(&plan, &mins, &direct),
        Err(AssessmentError::MeasurementForExcluded(_))
    ));
}

proptest! {
    #[test]
    fn lifting_every_control_to_its_minimum_reaches_full(
        grades in proptest::collection::vec((0u8..3, 0u8..3), 1..9),
        stages in proptest::collection::vec(0usize..4, 9),
    ) {
        let n = grades.len();
        let stages = &stages[..n];
        let c0 = case(stages, &grades, &vec![0; n]);
        let measured: Vec<u8> = synthetic_ids(n)
            .iter()
            .map(|c| c0.mins.required_level(c).unwrap().value())
            .collect();
        let c = case(stages, &grades, &measured);
        let r = run(&c);
        let top = Stage::ALL.iter().rev().find(|s| !c.plan.members(**s).is_empty()).copied().unwrap();
        prop_assert_eq!(r.label_stage, top);
        prop_assert!(r.stages.iter().all(|s| s.complete));
        prop_assert!(gap_analysis(&r).is_empty());
    }
}
