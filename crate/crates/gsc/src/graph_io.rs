//! JSON files holding semantic graphs:
//! `{"nodes": [{"id", "label", "level", "tags"}], "relations": [[from, to]]}`.
//!
//! Unknown keys are dropped and reported as [`Violation::UnknownField`].

use std::collections::BTreeSet;

use gsc_core::semgraph::{validate_graph, SemanticGraph, SemanticNode, Violation};
use serde_json::{json, Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum GraphIoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {reason}")]
    Schema { path: String, reason: String },
}

/// A parsed graph with everything wrong with it.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDocument {
    pub graph: SemanticGraph,
    pub violations: Vec<Violation>,
}

fn schema(path: &str, reason: &str) -> GraphIoError {
    GraphIoError::Schema {
        path: path.to_string(),
        reason: reason.to_string(),
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, GraphIoError> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn string(v: Option<&Value>, path: &str) -> Result<String, GraphIoError> {
    v.and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| schema(path, "expected a string"))
}

fn note_unknown(obj: &Map<String, Value>, known: &[&str], path: &str, out: &mut Vec<Violation>) {
    for k in obj.keys() {
        if !known.contains(&k.as_str()) {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            out.push(Violation::UnknownField(p));
        }
    }
}

pub fn parse_graph(text: &str) -> Result<GraphDocument, GraphIoError> {
    let root: Value = serde_json::from_str(text)?;
    let root = object(&root, "$")?;
    let mut unknown = Vec::new();
    note_unknown(root, &["nodes", "relations"], "", &mut unknown);

    let mut nodes = Vec::new();
    let raw_nodes = root
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("nodes", "expected an array"))?;
    for (i, n) in raw_nodes.iter().enumerate() {
        let path = format!("nodes[{i}]");
        let obj = object(n, &path)?;
        note_unknown(obj, &["id", "label", "level", "tags"], &path, &mut unknown);
        let id = string(obj.get("id"), &format!("{path}.id"))?;
        let label = match obj.get("label") {
            None => String::new(),
            v => string(v, &format!("{path}.label"))?,
        };
        let level = obj
            .get("level")
            .and_then(Value::as_u64)
            .ok_or_else(|| schema(&format!("{path}.level"), "expected a non-negative integer"))?;
        let tags = match obj.get("tags") {
            None => BTreeSet::new(),
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(j, t)| string(Some(t), &format!("{path}.tags[{j}]")))
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(schema(&format!("{path}.tags"), "expected an array of strings")),
        };
        nodes.push(SemanticNode {
            id,
            label,
            level: u8::try_from(level).unwrap_or(u8::MAX),
            tags,
        });
    }

    let mut relations = Vec::new();
    if let Some(rel) = root.get("relations") {
        let rel = rel.as_array().ok_or_else(|| schema("relations", "expected an array"))?;
        for (i, r) in rel.iter().enumerate() {
            let path = format!("relations[{i}]");
            match r.as_array().map(Vec::as_slice) {
                Some([a, b]) => relations.push((
                    string(Some(a), &format!("{path}[0]"))?,
                    string(Some(b), &format!("{path}[1]"))?,
                )),
                _ => return Err(schema(&path, "expected a [from, to] pair")),
            }
        }
    }

    let graph = SemanticGraph::new(nodes, relations);
    let mut violations = validate_graph(&graph);
    violations.extend(unknown);
    Ok(GraphDocument { graph, violations })
}

pub fn graph_to_json(g: &SemanticGraph) -> String {
    let nodes: Vec<Value> = g
        .nodes()
        .iter()
        .map(|n| json!({"id": n.id, "label": n.label, "level": n.level, "tags": n.tags}))
        .collect();
    let relations: Vec<Value> = g.relations().iter().map(|(a, b)| json!([a, b])).collect();
    serde_json::to_string_pretty(&json!({"nodes": nodes, "relations": relations})).expect("graph serializes")
}
