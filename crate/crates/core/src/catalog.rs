//! Control universe and prerequisite graph.
//!
//! Controls are identified by their Annex A numbering, `A.section.objective.control`.
//! The catalog shipped with the crate holds all 114 controls of sections 5-18
//! and a single prerequisite edge, `A.5.1.1 -> A.5.1.2` (the policy must exist
//! before it can be reviewed). Further edges are data: add them to a catalog
//! document and load it with [`ControlCatalog::from_json`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::format::{self, VersionError};

pub const MIN_SECTION: u8 = 5;
pub const MAX_SECTION: u8 = 18;

const SHIPPED_CATALOG: &str = include_str!("../data/catalog.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("invalid control id {text:?}: bad token {token:?} ({reason})")]
    ParseId {
        text: String,
        token: String,
        reason: &'static str,
    },
    #[error("malformed catalog document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Version(#[from] VersionError),
    #[error("duplicate control id {0}")]
    DuplicateId(ControlId),
    #[error("dependency {0} is a self-edge")]
    SelfEdge(Edge),
    #[error("dependency {edge} references unknown control {unknown}")]
    UnknownEndpoint { edge: Edge, unknown: ControlId },
    #[error("dependency cycle: {}", render_cycle(.0))]
    Cycle(Vec<ControlId>),
}

fn render_cycle(cycle: &[ControlId]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(ToString::to_string).collect();
    if let Some(first) = cycle.first() {
        parts.push(first.to_string());
    }
    parts.join(" -> ")
}

/// Annex A control number. Orders lexicographically on
/// `(section, objective, control)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ControlId {
    section: u8,
    objective: u8,
    control: u8,
}

impl ControlId {
    pub fn new(section: u8, objective: u8, control: u8) -> Result<Self, CatalogError> {
        let text = format!("A.{section}.{objective}.{control}");
        if !(MIN_SECTION..=MAX_SECTION).contains(&section) {
            return Err(CatalogError::ParseId {
                token: section.to_string(),
                text,
                reason: "section outside 5-18",
            });
        }
        if objective == 0 || control == 0 {
            return Err(CatalogError::ParseId {
                token: "0".to_string(),
                text,
                reason: "numbering starts at 1",
            });
        }
        Ok(Self {
            section,
            objective,
            control,
        })
    }

    pub fn section(&self) -> u8 {
        self.section
    }

    pub fn objective(&self) -> u8 {
        self.objective
    }

    pub fn control(&self) -> u8 {
        self.control
    }
}

/// Parses `"A.5.1.1"` or `"5.1.1"`; the output always renders as `"A.s.o.c"`.
///
/// The compact `"A5.1.1"` spelling is accepted too.
pub fn parse_control_id(text: &str) -> Result<ControlId, CatalogError> {
    let err = |token: &str, reason| CatalogError::ParseId {
        text: text.to_string(),
        token: token.to_string(),
        reason,
    };
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err("", "empty control id"));
    }
    let body = match trimmed.strip_prefix(['A', 'a']) {
        Some(rest) => rest.strip_prefix('.').unwrap_or(rest),
        None => trimmed,
    };
    let tokens: Vec<&str> = body.split('.').collect();
    if tokens.len() != 3 {
        return Err(err(body, "expected section.objective.control"));
    }
    let mut nums = [0u8; 3];
    for (slot, token) in nums.iter_mut().zip(&tokens) {
        let tok = token.trim();
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(token, "not a number"));
        }
        *slot = tok.parse().map_err(|_| err(token, "number too large"))?;
    }
    if !(MIN_SECTION..=MAX_SECTION).contains(&nums[0]) {
        return Err(err(tokens[0], "section outside 5-18"));
    }
    if nums[1] == 0 {
        return Err(err(tokens[1], "numbering starts at 1"));
    }
    if nums[2] == 0 {
        return Err(err(tokens[2], "numbering starts at 1"));
    }
    Ok(ControlId {
        section: nums[0],
        objective: nums[1],
        control: nums[2],
    })
}

impl FromStr for ControlId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_control_id(s)
    }
}

impl fmt::Display for ControlId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!(
            "A.{}.{}.{}",
            self.section, self.objective, self.control
        ))
    }
}

impl Serialize for ControlId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControlId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_control_id(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Control {
    pub id: ControlId,
    pub title: String,
    pub section_name: String,
    pub objective_text: String,
}

/// `prerequisite` must be in place before `dependent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub prerequisite: ControlId,
    pub dependent: ControlId,
}

impl Edge {
    pub fn new(prerequisite: ControlId, dependent: ControlId) -> Self {
        Self {
            prerequisite,
            dependent,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.prerequisite, self.dependent)
    }
}

/// One problem found by [`DependencyGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    SelfEdge(Edge),
    UnknownEndpoint {
        edge: Edge,
        unknown: ControlId,
    },
    /// Controls along one cycle, in edge order; the last links back to the first.
    Cycle(Vec<ControlId>),
}

impl Finding {
    fn into_error(self) -> CatalogError {
        match self {
            Finding::SelfEdge(e) => CatalogError::SelfEdge(e),
            Finding::UnknownEndpoint { edge, unknown } => {
                CatalogError::UnknownEndpoint { edge, unknown }
            }
            Finding::Cycle(c) => CatalogError::Cycle(c),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::SelfEdge(e) => write!(f, "self-edge {e}"),
            Finding::UnknownEndpoint { edge, unknown } => {
                write!(f, "unknown endpoint {unknown} in {edge}")
            }
            Finding::Cycle(c) => write!(f, "cycle {}", render_cycle(c)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    edges: BTreeSet<Edge>,
}

impl DependencyGraph {
    pub fn new<I: IntoIterator<Item = Edge>>(edges: I) -> Self {
        Self {
            edges: edges.into_iter().collect(),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn insert(&mut self, edge: Edge) -> bool {
        self.edges.insert(edge)
    }

    /// Dependents of each prerequisite, restricted to `nodes`.
    pub(crate) fn adjacency(
        &self,
        nodes: &BTreeSet<ControlId>,
    ) -> BTreeMap<ControlId, Vec<ControlId>> {
        let mut adj: BTreeMap<ControlId, Vec<ControlId>> =
            nodes.iter().map(|n| (*n, Vec::new())).collect();
        for e in &self.edges {
            if e.prerequisite != e.dependent
                && nodes.contains(&e.prerequisite)
                && nodes.contains(&e.dependent)
            {
                adj.get_mut(&e.prerequisite).unwrap().push(e.dependent);
            }
        }
        adj
    }

    /// Checks the graph against a set of known control ids.
    ///
    /// One finding per self-edge, per unknown endpoint, and per strongly
    /// connected component that contains a cycle.
    pub fn validate(&self, known: &BTreeSet<ControlId>) -> ValidationReport {
        let mut findings = Vec::new();
        for e in &self.edges {
            if e.prerequisite == e.dependent {
                findings.push(Finding::SelfEdge(*e));
            }
            for id in [e.prerequisite, e.dependent] {
                if !known.contains(&id) {
                    findings.push(Finding::UnknownEndpoint {
                        edge: *e,
                        unknown: id,
                    });
                }
            }
        }
        let nodes: BTreeSet<ControlId> = self
            .edges
            .iter()
            .flat_map(|e| [e.prerequisite, e.dependent])
            .collect();
        let adj = self.adjacency(&nodes);
        for component in strongly_connected(&adj) {
            if component.len() > 1 {
                findings.push(Finding::Cycle(cycle_through(&component, &adj)));
            }
        }
        ValidationReport { findings }
    }

    /// Topological order of `nodes` (prerequisites first), ties broken by
    /// ascending id. `None` if the edges among `nodes` contain a cycle.
    pub fn topological_order(&self, nodes: &BTreeSet<ControlId>) -> Option<Vec<ControlId>> {
        let adj = self.adjacency(nodes);
        let mut indegree: BTreeMap<ControlId, usize> = nodes.iter().map(|n| (*n, 0)).collect();
        for targets in adj.values() {
            for t in targets {
                *indegree.get_mut(t).unwrap() += 1;
            }
        }
        let mut ready: BTreeSet<ControlId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(next) = ready.pop_first() {
            order.push(next);
            for t in &adj[&next] {
                let d = indegree.get_mut(t).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(*t);
                }
            }
        }
        (order.len() == nodes.len()).then_some(order)
    }
}

// Tarjan's algorithm, iterative. Components come out sorted by smallest member.
fn strongly_connected(adj: &BTreeMap<ControlId, Vec<ControlId>>) -> Vec<Vec<ControlId>> {
    let mut index: BTreeMap<ControlId, usize> = BTreeMap::new();
    let mut low: BTreeMap<ControlId, usize> = BTreeMap::new();
    let mut on_stack = BTreeSet::new();
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;

    for &root in adj.keys() {
        if index.contains_key(&root) {
            continue;
        }
        let mut work: Vec<(ControlId, usize)> = vec![(root, 0)];
        index.insert(root, counter);
        low.insert(root, counter);
        counter += 1;
        stack.push(root);
        on_stack.insert(root);

        while let Some(&mut (node, ref mut next)) = work.last_mut() {
            if let Some(&child) = adj[&node].get(*next) {
                *next += 1;
                if let std::collections::btree_map::Entry::Vacant(e) = index.entry(child) {
                    e.insert(counter);
                    low.insert(child, counter);
                    counter += 1;
                    stack.push(child);
                    on_stack.insert(child);
                    work.push((child, 0));
                } else if on_stack.contains(&child) {
                    let l = low[&node].min(index[&child]);
                    low.insert(node, l);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    let l = low[&parent].min(low[&node]);
                    low.insert(parent, l);
                }
                if low[&node] == index[&node] {
                    let mut component = Vec::new();
                    while let Some(member) = stack.pop() {
                        on_stack.remove(&member);
                        component.push(member);
                        if member == node {
                            break;
                        }
                    }
                    component.sort();
                    components.push(component);
                }
            }
        }
    }
    components.sort();
    components
}

// Shortest cycle through the smallest member of a non-trivial component.
fn cycle_through(
    component: &[ControlId],
    adj: &BTreeMap<ControlId, Vec<ControlId>>,
) -> Vec<ControlId> {
    let members: BTreeSet<ControlId> = component.iter().copied().collect();
    let start = component[0];
    let mut parent: BTreeMap<ControlId, ControlId> = BTreeMap::new();
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        for &next in &adj[&node] {
            if !members.contains(&next) {
                continue;
            }
            if next == start {
                let mut path = vec![node];
                let mut cur = node;
                while cur != start {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return path;
            }
            if next != start && !parent.contains_key(&next) {
                parent.insert(next, node);
                queue.push_back(next);
            }
        }
    }
    component.to_vec()
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogDocument {
    format_version: String,
    controls: Vec<Control>,
    dependencies: Vec<Edge>,
}

/// Immutable, validated control catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlCatalog {
    controls: Vec<Control>,
    index: BTreeMap<ControlId, usize>,
    dependencies: DependencyGraph,
}

impl ControlCatalog {
    /// Builds a catalog, rejecting duplicate ids and any dependency finding.
    pub fn new(
        controls: Vec<Control>,
        dependencies: DependencyGraph,
    ) -> Result<Self, CatalogError> {
        let mut index = BTreeMap::new();
        for (pos, c) in controls.iter().enumerate() {
            if index.insert(c.id, pos).is_some() {
                return Err(CatalogError::DuplicateId(c.id));
            }
        }
        let catalog = Self {
            controls,
            index,
            dependencies,
        };
        if let Some(first) = catalog.validate_dependencies().findings.into_iter().next() {
            return Err(first.into_error());
        }
        Ok(catalog)
    }

    /// The 114-control catalog bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_CATALOG).expect("bundled catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let doc: CatalogDocument = serde_json::from_str(text)?;
        format::check_version(&doc.format_version)?;
        Self::new(doc.controls, DependencyGraph::new(doc.dependencies))
    }

    pub fn to_json(&self) -> String {
        format::to_pretty_json(&CatalogDocument {
            format_version: format::FORMAT_VERSION.to_string(),
            controls: self.controls.clone(),
            dependencies: self.dependencies.edges().copied().collect(),
        })
    }

    pub fn validate_dependencies(&self) -> ValidationReport {
        self.dependencies.validate(&self.ids())
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    pub fn get(&self, id: &ControlId) -> Option<&Control> {
        self.index.get(id).map(|&i| &self.controls[i])
    }

    pub fn contains(&self, id: &ControlId) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> BTreeSet<ControlId> {
        self.index.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn dependencies(&self) -> &DependencyGraph {
        &self.dependencies
    }

    /// Every control, prerequisites before dependents, ties by id.
    pub fn topological_order(&self) -> Vec<ControlId> {
        self.dependencies
            .topological_order(&self.ids())
            .expect("validated catalogs are acyclic")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ControlId {
        s.parse().unwrap()
    }

    #[test]
    fn parses_both_spellings() {
        assert_eq!(id("A.5.1.1"), ControlId::new(5, 1, 1).unwrap());
        assert_eq!(id("12.3.1"), ControlId::new(12, 3, 1).unwrap());
        assert_eq!(id("A7.1.1").to_string(), "A.7.1.1");
        assert_eq!(id("15.2.2").to_string(), "A.15.2.2");
    }

    #[test]
    fn rejects_out_of_range_section() {
        match parse_control_id("A.4.9.9") {
            Err(CatalogError::ParseId { token, .. }) => assert_eq!(token, "4"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_control_id("A.19.1.1").is_err());
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "", "A.", "A.5.1", "A.5.x.1", "5.1.1.1", "A.5.1.0", "A.5.-1.1",
        ] {
            assert!(parse_control_id(bad).is_err(), "{bad} should fail");
        }
        match parse_control_id("A.5.x.1") {
            Err(CatalogError::ParseId { token, .. }) => assert_eq!(token, "x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ids_order_numerically() {
        assert!(id("A.5.1.2") < id("A.6.1.1"));
        assert!(id("A.9.4.5") < id("A.10.1.1"));
        assert!(id("A.11.2.9") < id("A.11.2.10"));
    }

    #[test]
    fn shipped_catalog_shape() {
        let cat = ControlCatalog::shipped();
        assert_eq!(cat.len(), 114);
        let sections: BTreeSet<u8> = cat.controls().iter().map(|c| c.id.section()).collect();
        assert_eq!(sections, (5..=18).collect());
        let objectives: BTreeSet<(u8, u8)> = cat
            .controls()
            .iter()
            .map(|c| (c.id.section(), c.id.objective()))
            .collect();
        assert_eq!(objectives.len(), 35);
        let edges: Vec<_> = cat.dependencies().edges().copied().collect();
        assert_eq!(edges, vec![Edge::new(id("A.5.1.1"), id("A.5.1.2"))]);
        assert!(cat.validate_dependencies().is_clean());
        assert_eq!(
            cat.get(&id("A.12.3.1")).unwrap().title,
            "Information backup"
        );
    }

    #[test]
    fn topological_order_puts_prerequisites_first() {
        let known: BTreeSet<_> = ["A.5.1.1", "A.5.1.2", "A.6.1.1"].map(id).into();
        let g = DependencyGraph::new([
            Edge::new(id("A.6.1.1"), id("A.5.1.1")),
            Edge::new(id("A.5.1.2"), id("A.5.1.1")),
        ]);
        assert_eq!(
            g.topological_order(&known).unwrap(),
            vec![id("A.5.1.2"), id("A.6.1.1"), id("A.5.1.1")]
        );
    }
}
