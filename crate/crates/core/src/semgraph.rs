//! Semantic graphs and their task-relevant / perceptual induced subgraphs.
//!
//! A graph is a set of nodes, each carrying a hierarchy level and a set of
//! relevance tags, plus unlabeled ordered relations between distinct nodes.
//! A node is "related to" a task when its tags intersect the task's label
//! set; subgraphs are induced on that node selection.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Lowest hierarchy level.
pub const MIN_LEVEL: u8 = 1;
/// Highest hierarchy level.
pub const MAX_LEVEL: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticNode {
    pub id: String,
    pub label: String,
    pub level: u8,
    pub tags: BTreeSet<String>,
}

impl SemanticNode {
    pub fn new<I, S>(id: &str, label: &str, level: u8, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SemanticNode {
            id: id.into(),
            label: label.into(),
            level,
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }

    fn is_selected_by(&self, labels: &BTreeSet<String>) -> bool {
        self.tags.iter().any(|t| labels.contains(t))
    }
}

/// One reason a graph fails its invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNode(String),
    LevelOutOfRange { id: String, level: u8 },
    UnknownEndpoint(String),
    SelfLoop(String),
    DuplicateRelation(String, String),
    /// Reported by strict parsers for fields they dropped.
    UnknownField(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode(id) => write!(f, "duplicate node id {id}"),
            Violation::LevelOutOfRange { id, level } => write!(
                f,
                "node {id} has level {level} outside {MIN_LEVEL}..={MAX_LEVEL}"
            ),
            Violation::UnknownEndpoint(id) => write!(f, "relation references unknown node {id}"),
            Violation::SelfLoop(id) => write!(f, "self-loop on {id}"),
            Violation::DuplicateRelation(a, b) => write!(f, "duplicate relation ({a}, {b})"),
            Violation::UnknownField(path) => write!(f, "unknown field {path} ignored"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("invalid semantic graph: {} violation(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("narrow task must have exactly one objective label, got {0}")]
    NarrowArity(usize),
    #[error("general task must have at least one objective label")]
    EmptyGeneral,
}

/// A semantic graph `G = (S, R)`.
///
/// Construction does not validate, so that malformed input can still be
/// represented and reported by [`validate_graph`]. Use
/// [`SemanticGraph::try_new`] to get a graph that is known to be valid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticGraph {
    nodes: Vec<SemanticNode>,
    relations: Vec<(String, String)>,
}

impl SemanticGraph {
    pub fn new(nodes: Vec<SemanticNode>, relations: Vec<(String, String)>) -> Self {
        SemanticGraph { nodes, relations }
    }

    pub fn try_new(
        nodes: Vec<SemanticNode>,
        relations: Vec<(String, String)>,
    ) -> Result<Self, GraphError> {
        let g = SemanticGraph::new(nodes, relations);
        g.ensure_valid()?;
        Ok(g)
    }

    pub fn nodes(&self) -> &[SemanticNode] {
        &self.nodes
    }

    pub fn relations(&self) -> &[(String, String)] {
        &self.relations
    }

    pub fn node(&self, id: &str) -> Option<&SemanticNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Every tag carried by any node.
    pub fn all_tags(&self) -> BTreeSet<String> {
        self.nodes.iter().flat_map(|n| n.tags.iter().cloned()).collect()
    }

    fn ensure_valid(&self) -> Result<(), GraphError> {
        let v = validate_graph(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(GraphError::Invalid(v))
        }
    }
}

/// Checks every graph invariant; an empty list means the graph is valid.
pub fn validate_graph(g: &SemanticGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for n in &g.nodes {
        if !ids.insert(n.id.as_str()) {
            out.push(Violation::DuplicateNode(n.id.clone()));
        }
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&n.level) {
            out.push(Violation::LevelOutOfRange {
                id: n.id.clone(),
                level: n.level,
            });
        }
    }
    let mut seen = BTreeSet::new();
    for (a, b) in &g.relations {
        for end in [a, b] {
            if !ids.contains(end.as_str()) {
                out.push(Violation::UnknownEndpoint(end.clone()));
            }
        }
        if a == b {
            out.push(Violation::SelfLoop(a.clone()));
        }
        if !seen.insert((a.as_str(), b.as_str())) {
            out.push(Violation::DuplicateRelation(a.clone(), b.clone()));
        }
    }
    out
}

/// Subgraph induced on the nodes whose tags intersect `labels`.
///
/// Node and relation order follow the parent graph.
pub fn induce_subgraph(
    g: &SemanticGraph,
    labels: &BTreeSet<String>,
) -> Result<SemanticGraph, GraphError> {
    g.ensure_valid()?;
    let nodes: Vec<SemanticNode> = g
        .nodes
        .iter()
        .filter(|n| n.is_selected_by(labels))
        .cloned()
        .collect();
    let kept: BTreeSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    let relations = g
        .relations
        .iter()
        .filter(|(a, b)| kept.contains(a.as_str()) && kept.contains(b.as_str()))
        .cloned()
        .collect();
    Ok(SemanticGraph { nodes, relations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// A single predefined objective (task-oriented communication).
    Narrow,
    /// A set of objectives decided before transmission.
    General,
}

/// Task description as label predicates over node tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    kind: TaskKind,
    objective_labels: BTreeSet<String>,
    perceptual_labels: BTreeSet<String>,
}

impl TaskSpec {
    pub fn new(
        kind: TaskKind,
        objective_labels: BTreeSet<String>,
        perceptual_labels: BTreeSet<String>,
    ) -> Result<Self, GraphError> {
        match kind {
            TaskKind::Narrow if objective_labels.len() != 1 => {
                return Err(GraphError::NarrowArity(objective_labels.len()))
            }
            TaskKind::General if objective_labels.is_empty() => {
                return Err(GraphError::EmptyGeneral)
            }
            _ => {}
        }
        Ok(TaskSpec {
            kind,
            objective_labels,
            perceptual_labels,
        })
    }

    pub fn narrow(objective: &str) -> Self {
        TaskSpec {
            kind: TaskKind::Narrow,
            objective_labels: [String::from(objective)].into_iter().collect(),
            perceptual_labels: BTreeSet::new(),
        }
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn objective_labels(&self) -> &BTreeSet<String> {
        &self.objective_labels
    }

    pub fn perceptual_labels(&self) -> &BTreeSet<String> {
        &self.perceptual_labels
    }
}

/// Task-relevant subgraph (`G_TOSC` for narrow tasks, `G_GSC` for general ones).
pub fn task_subgraph(g: &SemanticGraph, t: &TaskSpec) -> Result<SemanticGraph, GraphError> {
    induce_subgraph(g, &t.objective_labels)
}

/// Perceptual subgraph `G*_GSC`. Empty when the task has no perceptual labels.
pub fn perceptual_subgraph(g: &SemanticGraph, t: &TaskSpec) -> Result<SemanticGraph, GraphError> {
    induce_subgraph(g, &t.perceptual_labels)
}
