#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use isms_maturity::cli::{run_assessment, MinimumSource, RunConfig};
use isms_maturity::{
    Control, ControlCatalog, ControlId, DependencyGraph, Mean, ReportDocument, RunMode, Stage,
};
use rand::Rng;

pub const DEFAULT_ESSENTIAL: &str = "A.5.1.1 A.6.1.1 A.6.1.5 A.6.2.2 A.7.1.1 A.7.2.1 A.8.1.2 A.8.1.3 A.8.2.1 A.8.2.3 A.9.1.2 A.9.2.1 A.9.2.3 A.9.2.4 A.9.2.5 A.9.4.2 A.9.4.4 A.11.1.5 A.11.2.4 A.11.2.5 A.11.2.6 A.11.2.7 A.12.5.1 A.12.6.2 A.13.1.3 A.15.1.3 A.18.1.1 A.18.1.2 A.18.1.3 A.18.1.4 A.18.1.5";
pub const DEFAULT_INTERMEDIATE: &str = "A.5.1.2 A.6.1.2 A.6.2.1 A.7.2.2 A.8.1.1 A.8.3.1 A.9.2.6 A.9.4.3 A.11.1.3 A.11.2.2 A.11.2.3 A.12.1.3 A.12.1.4 A.12.2.1 A.13.1.1 A.13.2.1 A.13.2.3 A.14.1.1 A.14.2.6 A.15.1.1 A.16.1.1 A.16.1.2 A.16.1.4 A.16.1.5 A.16.1.7 A.17.1.1 A.18.2.2";
pub const DEFAULT_ADVANCED: &str = "A.7.2.3 A.8.1.4 A.8.2.2 A.9.1.1 A.9.3.1 A.9.4.1 A.9.4.5 A.11.1.1 A.11.1.2 A.11.2.1 A.11.2.9 A.12.1.1 A.12.1.2 A.12.3.1 A.12.4.1 A.12.6.1 A.12.7.1 A.13.1.2 A.13.2.4 A.14.1.2 A.14.1.3 A.14.2.5 A.14.2.9 A.15.1.2 A.15.2.1 A.16.1.3 A.17.2.1 A.18.2.1 A.18.2.3";
pub const DEFAULT_FULL: &str = "A.6.1.3 A.6.1.4 A.7.1.2 A.7.3.1 A.8.3.2 A.8.3.3 A.9.2.2 A.10.1.1 A.10.1.2 A.11.1.4 A.11.1.6 A.11.2.8 A.12.4.2 A.12.4.3 A.12.4.4 A.13.2.2 A.14.2.1 A.14.2.2 A.14.2.3 A.14.2.4 A.14.2.7 A.14.2.8 A.14.3.1 A.15.2.2 A.16.1.6 A.17.1.2 A.17.1.3";

pub fn id(s: &str) -> ControlId {
    s.parse().unwrap()
}

pub fn ids(list: &str) -> Vec<ControlId> {
    list.split_whitespace().map(id).collect()
}

/// The reference stage memberships of the default database.
pub fn default_memberships() -> BTreeMap<ControlId, Stage> {
    let mut m = BTreeMap::new();
    for (list, stage) in [
        (DEFAULT_ESSENTIAL, Stage::Essential),
        (DEFAULT_INTERMEDIATE, Stage::Intermediate),
        (DEFAULT_ADVANCED, Stage::Advanced),
        (DEFAULT_FULL, Stage::Full),
    ] {
        for c in ids(list) {
            assert!(m.insert(c, stage).is_none(), "{c} listed twice");
        }
    }
    m
}

/// `n` distinct synthetic control ids, ascending.
pub fn synthetic_ids(n: usize) -> Vec<ControlId> {
    let mut v: Vec<ControlId> = (0..n)
        .map(|i| ControlId::new(5 + (i % 14) as u8, 1, 1 + (i / 14) as u8).unwrap())
        .collect();
    v.sort();
    v
}

pub fn synthetic_catalog(n: usize, edges: &[(usize, usize)]) -> ControlCatalog {
    let list = synthetic_ids(n);
    let controls = list
        .iter()
        .map(|c| Control {
            id: *c,
            title: format!("control {c}"),
            section_name: "synthetic".into(),
            objective_text: "synthetic".into(),
        })
        .collect();
    let graph = DependencyGraph::new(
        edges
            .iter()
            .map(|&(p, d)| isms_maturity::catalog::Edge::new(list[p], list[d])),
    );
    ControlCatalog::new(controls, graph).unwrap()
}

/// Stage index per position from a direct reading of the tie rule:
/// a cut moves forward past every control equal to the one before it.
pub fn tie_oracle(avgs_sorted: &[Mean], targets: [usize; 4]) -> Vec<usize> {
    let n = avgs_sorted.len();
    let cuts: Vec<usize> = targets[..3]
        .iter()
        .map(|&b| {
            if b == 0 {
                return 0;
            }
            (b..=n)
                .find(|&j| j == n || avgs_sorted[j] != avgs_sorted[b - 1])
                .unwrap()
        })
        .collect();
    (0..n)
        .map(|i| cuts.iter().filter(|&&c| i >= c).count())
        .collect()
}

/// Random DAG over `n` nodes: edges only go from lower to higher index of a
/// random permutation.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                edges.push((perm[a], perm[b]));
            }
        }
    }
    edges
}

/// Promotion by repeated relaxation until nothing changes.
pub fn naive_fixpoint(stages: &[usize], edges: &[(usize, usize)]) -> Vec<usize> {
    let mut s = stages.to_vec();
    loop {
        let mut changed = false;
        for &(p, d) in edges {
            if s[p] > s[d] {
                s[p] = s[d];
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn company_a(file: &str) -> PathBuf {
    data_dir().join("company_a").join(file)
}

pub fn company_a_config(mode: RunMode) -> RunConfig {
    RunConfig {
        mode,
        catalog: None,
        survey: (mode == RunMode::Independent).then(|| company_a("survey.csv")),
        minimums: match mode {
            RunMode::Independent => MinimumSource::Ratings(company_a("ratings.csv")),
            RunMode::Model => MinimumSource::Fixed(3),
        },
        applicability: Some(company_a("applicability.csv")),
        measurements: company_a("measurements.csv"),
        report_json: None,
        report_text: None,
        misallocation_threshold: 2,
        company: "Company A".into(),
        timestamp: Some("2026-01-01T00:00:00Z".into()),
    }
}

pub fn company_a_report(mode: RunMode) -> ReportDocument {
    run_assessment(&company_a_config(mode), &mut std::io::sink()).unwrap()
}

/// `metric -> (sum, count, average text)` from the spreadsheet oracle.
pub fn oracle() -> BTreeMap<String, (u64, u64, String)> {
    let text = std::fs::read_to_string(company_a("oracle.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[0].to_string(),
                (
                    f[1].parse().unwrap(),
                    f[2].parse().unwrap(),
                    f[3].to_string(),
                ),
            )
        })
        .collect()
}

pub fn set(list: &[ControlId]) -> BTreeSet<ControlId> {
    list.iter().copied().collect()
}
