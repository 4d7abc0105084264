//! Stage plans: quartile partition, tie absorption, prerequisite promotion.
//!
//! Applicable controls are sorted by descending average importance (ascending
//! id among equals) and cut at four cumulative targets. For `n` controls the
//! default targets are `ceil(k * n / 4)`, which gives 29/28/29/28 for the full
//! catalog of 114.
//!
//! When the control at a cut position has the same average as the controls
//! right after it, the whole tie group joins the earlier stage. Later targets
//! keep their original positions; a stage whose target was already consumed
//! by an absorbed tie is left empty.
//!
//! The illustrative tie in the original method description (positions 27-30
//! tied against a target of 29) quotes a stage of 31 controls. Applying the
//! rule as stated gives 30; this module implements the rule.
//!
//! After partitioning, a prerequisite sitting in a later stage than one of its
//! dependents is moved up to the dependent's stage. The result is the unique
//! fixpoint where each control's stage is the minimum of its own partitioned
//! stage and the final stages of everything reachable from it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ControlCatalog, ControlId, DependencyGraph};
use crate::format::{self, VersionError};
use crate::importance::ImportanceDatabase;
use crate::mean::Mean;
use crate::minimums::{join_ids, ApplicabilityMap, MinimumsError};

const SHIPPED_PLAN: &str = include_str!("../data/default_plan.json");

#[derive(Debug, Error)]
pub enum StagingError {
    #[error("no controls to partition")]
    Empty,
    #[error("boundaries {0:?} must be four non-decreasing cumulative targets")]
    BadBoundaries(Vec<usize>),
    #[error("boundary target {target} exceeds the {count} controls to partition")]
    BoundaryExceedsCount { target: usize, count: usize },
    #[error("last boundary {last} must equal the control count {count}")]
    BoundaryShort { last: usize, count: usize },
    #[error("dependency graph among planned controls contains a cycle")]
    CyclicDependencies,
    #[error("applicable controls without importance responses: {}", join_ids(.0))]
    MissingResponses(Vec<ControlId>),
    #[error("stage plans cover different control sets (only in one plan: {})", join_ids(.0))]
    MismatchedCatalogs(Vec<ControlId>),
    #[error("control {0} is both assigned and excluded")]
    AssignedAndExcluded(ControlId),
    #[error(transparent)]
    Applicability(#[from] MinimumsError),
    #[error("malformed stage plan document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Version(#[from] VersionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Essential,
    Intermediate,
    Advanced,
    Full,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Essential,
        Stage::Intermediate,
        Stage::Advanced,
        Stage::Full,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stage> {
        Stage::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Essential => "Essential",
            Stage::Intermediate => "Intermediate",
            Stage::Advanced => "Advanced",
            Stage::Full => "Full",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Where a control sits in a plan, for diffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Placement {
    Stage(Stage),
    Excluded,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Stage(s) => f.pad(s.name()),
            Placement::Excluded => f.pad("Excluded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Partitioned,
    Promoted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub stage: Stage,
    pub provenance: Provenance,
}

/// Four cumulative position targets; the last equals the control count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Boundaries([usize; 4]);

impl Boundaries {
    pub fn new(targets: [usize; 4]) -> Result<Self, StagingError> {
        if targets.windows(2).any(|w| w[0] > w[1]) {
            return Err(StagingError::BadBoundaries(targets.to_vec()));
        }
        Ok(Self(targets))
    }

    /// `ceil(k * n / 4)` for `k = 1..=4`.
    pub fn quartiles(n: usize) -> Self {
        Self([1, 2, 3, 4].map(|k| (k * n).div_ceil(4)))
    }

    pub fn targets(&self) -> [usize; 4] {
        self.0
    }

    fn check_against(&self, count: usize) -> Result<(), StagingError> {
        if let Some(&target) = self.0.iter().find(|&&t| t > count) {
            return Err(StagingError::BoundaryExceedsCount { target, count });
        }
        if self.0[3] != count {
            return Err(StagingError::BoundaryShort {
                last: self.0[3],
                count,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Boundaries {
    type Error = StagingError;

    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        let arr: [usize; 4] = v
            .clone()
            .try_into()
            .map_err(|_| StagingError::BadBoundaries(v))?;
        Boundaries::new(arr)
    }
}

impl From<Boundaries> for Vec<usize> {
    fn from(b: Boundaries) -> Vec<usize> {
        b.0.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDelta {
    pub control: ControlId,
    pub from: Placement,
    pub to: Placement,
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRow {
    control: ControlId,
    stage: Stage,
    provenance: Provenance,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanDocument {
    format_version: String,
    boundaries: Option<Boundaries>,
    assignments: Vec<AssignmentRow>,
    excluded: Vec<ControlId>,
}

/// Assignment of every applicable control to one stage, plus the controls
/// excluded as not applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    boundaries: Option<Boundaries>,
    assignments: BTreeMap<ControlId, Assignment>,
    excluded: BTreeSet<ControlId>,
}

impl StagePlan {
    /// A plan from explicit memberships, all marked partitioned.
    pub fn from_memberships<I: IntoIterator<Item = (ControlId, Stage)>>(
        memberships: I,
        excluded: BTreeSet<ControlId>,
    ) -> Result<Self, StagingError> {
        let assignments: BTreeMap<ControlId, Assignment> = memberships
            .into_iter()
            .map(|(c, stage)| {
                (
                    c,
                    Assignment {
                        stage,
                        provenance: Provenance::Partitioned,
                    },
                )
            })
            .collect();
        if let Some(c) = excluded.iter().find(|c| assignments.contains_key(c)) {
            return Err(StagingError::AssignedAndExcluded(*c));
        }
        Ok(Self {
            boundaries: None,
            assignments,
            excluded,
        })
    }

    /// The default stage database bundled with the crate (31/27/29/27).
    pub fn shipped_default() -> Self {
        Self::from_json(SHIPPED_PLAN).expect("bundled stage plan is valid")
    }

    pub fn boundaries(&self) -> Option<Boundaries> {
        self.boundaries
    }

    pub fn assignments(&self) -> &BTreeMap<ControlId, Assignment> {
        &self.assignments
    }

    pub fn excluded(&self) -> &BTreeSet<ControlId> {
        &self.excluded
    }

    pub fn stage_of(&self, id: &ControlId) -> Option<Stage> {
        self.assignments.get(id).map(|a| a.stage)
    }

    pub fn placement(&self, id: &ControlId) -> Option<Placement> {
        if self.excluded.contains(id) {
            Some(Placement::Excluded)
        } else {
            self.stage_of(id).map(Placement::Stage)
        }
    }

    pub fn members(&self, stage: Stage) -> Vec<ControlId> {
        self.assignments
            .iter()
            .filter(|(_, a)| a.stage == stage)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn sizes(&self) -> [usize; 4] {
        let mut sizes = [0; 4];
        for a in self.assignments.values() {
            sizes[a.stage.index()] += 1;
        }
        sizes
    }

    pub fn promoted(&self) -> Vec<ControlId> {
        self.assignments
            .iter()
            .filter(|(_, a)| a.provenance == Provenance::Promoted)
            .map(|(c, _)| *c)
            .collect()
    }

    /// Assigned and excluded controls together.
    pub fn universe(&self) -> BTreeSet<ControlId> {
        self.assignments
            .keys()
            .chain(self.excluded.iter())
            .copied()
            .collect()
    }

    /// Moves every control that is not applicable into the excluded set.
    pub fn with_exclusions(&self, applicability: &ApplicabilityMap) -> Self {
        let mut out = self.clone();
        out.assignments
            .retain(|c, _| applicability.is_applicable(c));
        out.excluded.extend(
            self.assignments
                .keys()
                .filter(|c| !applicability.is_applicable(c)),
        );
        out
    }

    pub fn to_json(&self) -> String {
        format::to_pretty_json(&PlanDocument {
            format_version: format::FORMAT_VERSION.to_string(),
            boundaries: self.boundaries,
            assignments: self
                .assignments
                .iter()
                .map(|(c, a)| AssignmentRow {
                    control: *c,
                    stage: a.stage,
                    provenance: a.provenance,
                })
                .collect(),
            excluded: self.excluded.iter().copied().collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, StagingError> {
        let doc: PlanDocument = serde_json::from_str(text)?;
        format::check_version(&doc.format_version)?;
        let mut assignments = BTreeMap::new();
        for row in doc.assignments {
            assignments.insert(
                row.control,
                Assignment {
                    stage: row.stage,
                    provenance: row.provenance,
                },
            );
        }
        let excluded: BTreeSet<ControlId> = doc.excluded.into_iter().collect();
        if let Some(c) = excluded.iter().find(|c| assignments.contains_key(c)) {
            return Err(StagingError::AssignedAndExcluded(*c));
        }
        Ok(Self {
            boundaries: doc.boundaries,
            assignments,
            excluded,
        })
    }
}

/// Splits controls into the four stages by descending average.
pub fn partition_quartiles(
    averages: &BTreeMap<ControlId, Mean>,
    boundaries: &Boundaries,
) -> Result<StagePlan, StagingError> {
    if averages.is_empty() {
        return Err(StagingError::Empty);
    }
    let n = averages.len();
    boundaries.check_against(n)?;

    let mut order: Vec<(ControlId, Mean)> = averages.iter().map(|(c, m)| (*c, *m)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut assignments = BTreeMap::new();
    let mut pos = 0;
    for (stage, &target) in Stage::ALL.iter().zip(boundaries.targets().iter()) {
        if pos >= target {
            continue;
        }
        let mut end = target;
        let at_cut = order[target - 1].1;
        while end < n && order[end].1 == at_cut {
            end += 1;
        }
        for (c, _) in &order[pos..end] {
            assignments.insert(
                *c,
                Assignment {
                    stage: *stage,
                    provenance: Provenance::Partitioned,
                },
            );
        }
        pos = end;
    }
    debug_assert_eq!(pos, n);
    Ok(StagePlan {
        boundaries: Some(*boundaries),
        assignments,
        excluded: BTreeSet::new(),
    })
}

/// Moves prerequisites up to the stage of their earliest dependent.
///
/// Edges touching a control outside the plan's assignments are ignored.
/// Controls whose stage changes are marked [`Provenance::Promoted`]; nothing
/// ever moves to a later stage.
pub fn promote_prerequisites(
    plan: &StagePlan,
    graph: &DependencyGraph,
) -> Result<StagePlan, StagingError> {
    let nodes: BTreeSet<ControlId> = plan.assignments.keys().copied().collect();
    let order = graph
        .topological_order(&nodes)
        .ok_or(StagingError::CyclicDependencies)?;
    let dependents = graph.adjacency(&nodes);

    let mut out = plan.clone();
    // Dependents come later in topological order, so walking it backwards
    // finalises every dependent before its prerequisites.
    for c in order.iter().rev() {
        let earliest = dependents[c].iter().map(|d| out.assignments[d].stage).min();
        let a = out.assignments.get_mut(c).unwrap();
        if let Some(target) = earliest {
            if target < a.stage {
                a.stage = target;
                a.provenance = Provenance::Promoted;
            }
        }
    }
    Ok(out)
}

/// Excludes non-applicable controls, partitions the rest with the default
/// quartile targets and promotes prerequisites.
pub fn build_stage_plan(
    db: &ImportanceDatabase,
    catalog: &ControlCatalog,
    applicability: &ApplicabilityMap,
) -> Result<StagePlan, StagingError> {
    let n = applicability.applicable_in(catalog).len();
    build_stage_plan_with(db, catalog, applicability, &Boundaries::quartiles(n))
}

/// [`build_stage_plan`] with explicit boundaries.
pub fn build_stage_plan_with(
    db: &ImportanceDatabase,
    catalog: &ControlCatalog,
    applicability: &ApplicabilityMap,
    boundaries: &Boundaries,
) -> Result<StagePlan, StagingError> {
    applicability.validate(catalog)?;
    let applicable = applicability.applicable_in(catalog);
    let mut averages = BTreeMap::new();
    let mut missing = Vec::new();
    for id in &applicable {
        match db.control_average(id) {
            Ok(m) => {
                averages.insert(*id, m);
            }
            Err(_) => missing.push(*id),
        }
    }
    if !missing.is_empty() {
        return Err(StagingError::MissingResponses(missing));
    }
    let partitioned = partition_quartiles(&averages, boundaries)?;
    let mut plan = promote_prerequisites(&partitioned, catalog.dependencies())?;
    plan.excluded = applicability.excluded_ids();
    Ok(plan)
}

/// One delta per control whose stage or exclusion differs, sorted by id.
pub fn diff_stage_plans(a: &StagePlan, b: &StagePlan) -> Result<Vec<StageDelta>, StagingError> {
    let ua = a.universe();
    let ub = b.universe();
    if ua != ub {
        let only: Vec<ControlId> = ua.symmetric_difference(&ub).copied().collect();
        return Err(StagingError::MismatchedCatalogs(only));
    }
    Ok(ua
        .into_iter()
        .filter_map(|c| {
            let from = a.placement(&c)?;
            let to = b.placement(&c)?;
            (from != to).then_some(StageDelta {
                control: c,
                from,
                to,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Edge;

    fn id(s: &str) -> ControlId {
        s.parse().unwrap()
    }

    fn plan_of(pairs: &[(&str, Stage)]) -> StagePlan {
        StagePlan::from_memberships(pairs.iter().map(|(c, s)| (id(c), *s)), BTreeSet::new())
            .unwrap()
    }

    #[test]
    fn quartile_targets() {
        assert_eq!(Boundaries::quartiles(114).targets(), [29, 57, 86, 114]);
        assert_eq!(Boundaries::quartiles(111).targets(), [28, 56, 84, 111]);
        assert_eq!(Boundaries::quartiles(4).targets(), [1, 2, 3, 4]);
        assert_eq!(Boundaries::quartiles(1).targets(), [1, 1, 1, 1]);
    }

    #[test]
    fn minimal_partition() {
        let avgs: BTreeMap<_, _> = [
            ("A.5.1.1", 1),
            ("A.5.1.2", 4),
            ("A.6.1.1", 2),
            ("A.6.1.2", 3),
        ]
        .iter()
        .map(|(c, v)| (id(c), Mean::new(*v, 1).unwrap()))
        .collect();
        let plan = partition_quartiles(&avgs, &Boundaries::new([1, 2, 3, 4]).unwrap()).unwrap();
        assert_eq!(plan.sizes(), [1, 1, 1, 1]);
        assert_eq!(plan.stage_of(&id("A.5.1.2")), Some(Stage::Essential));
        assert_eq!(plan.stage_of(&id("A.5.1.1")), Some(Stage::Full));
    }

    #[test]
    fn boundary_errors() {
        let avgs: BTreeMap<_, _> = [(id("A.5.1.1"), Mean::new(3, 1).unwrap())].into();
        assert!(matches!(
            partition_quartiles(&BTreeMap::new(), &Boundaries::quartiles(0)),
            Err(StagingError::Empty)
        ));
        assert!(matches!(
            partition_quartiles(&avgs, &Boundaries::new([1, 2, 3, 4]).unwrap()),
            Err(StagingError::BoundaryExceedsCount {
                target: 2,
                count: 1
            })
        ));
        assert!(Boundaries::new([3, 2, 3, 4]).is_err());
    }

    #[test]
    fn total_tie_lands_in_essential() {
        let avgs: BTreeMap<_, _> = ControlCatalog::shipped()
            .ids()
            .into_iter()
            .map(|c| (c, Mean::new(3, 1).unwrap()))
            .collect();
        let plan = partition_quartiles(&avgs, &Boundaries::quartiles(114)).unwrap();
        assert_eq!(plan.sizes(), [114, 0, 0, 0]);
    }

    #[test]
    fn promotes_single_prerequisite() {
        let plan = plan_of(&[
            ("A.5.1.1", Stage::Advanced),
            ("A.5.1.2", Stage::Intermediate),
        ]);
        let g = DependencyGraph::new([Edge::new(id("A.5.1.1"), id("A.5.1.2"))]);
        let out = promote_prerequisites(&plan, &g).unwrap();
        assert_eq!(out.stage_of(&id("A.5.1.1")), Some(Stage::Intermediate));
        assert_eq!(out.promoted(), vec![id("A.5.1.1")]);
    }

    #[test]
    fn promotion_leaves_satisfied_edges() {
        let plan = plan_of(&[
            ("A.5.1.1", Stage::Intermediate),
            ("A.5.1.2", Stage::Intermediate),
        ]);
        let g = DependencyGraph::new([Edge::new(id("A.5.1.1"), id("A.5.1.2"))]);
        assert_eq!(promote_prerequisites(&plan, &g).unwrap(), plan);
    }

    #[test]
    fn promotion_follows_chains() {
        let plan = plan_of(&[
            ("A.5.1.1", Stage::Full),
            ("A.5.1.2", Stage::Advanced),
            ("A.6.1.1", Stage::Essential),
        ]);
        let g = DependencyGraph::new([
            Edge::new(id("A.5.1.1"), id("A.5.1.2")),
            Edge::new(id("A.5.1.2"), id("A.6.1.1")),
        ]);
        let out = promote_prerequisites(&plan, &g).unwrap();
        assert_eq!(out.sizes(), [3, 0, 0, 0]);
    }

    #[test]
    fn promotion_rejects_cycles() {
        let plan = plan_of(&[("A.5.1.1", Stage::Full), ("A.5.1.2", Stage::Advanced)]);
        let g = DependencyGraph::new([
            Edge::new(id("A.5.1.1"), id("A.5.1.2")),
            Edge::new(id("A.5.1.2"), id("A.5.1.1")),
        ]);
        assert!(matches!(
            promote_prerequisites(&plan, &g),
            Err(StagingError::CyclicDependencies)
        ));
    }

    #[test]
    fn diff_identity_and_mismatch() {
        let a = plan_of(&[("A.5.1.1", Stage::Full)]);
        assert!(diff_stage_plans(&a, &a).unwrap().is_empty());
        let b = plan_of(&[("A.5.1.2", Stage::Full)]);
        assert!(matches!(
            diff_stage_plans(&a, &b),
            Err(StagingError::MismatchedCatalogs(_))
        ));
    }

    #[test]
    fn shipped_default_sizes() {
        let plan = StagePlan::shipped_default();
        assert_eq!(plan.sizes(), [31, 27, 29, 27]);
        assert_eq!(plan.stage_of(&id("A.15.2.2")), Some(Stage::Full));
    }
}
