//! JSON model files:
//! `{"num_variables": d, "root": id, "nodes": [{"id", "type", ...}]}`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SpnGraph, SpnNode};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct SpnFile {
    num_variables: usize,
    root: u64,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum NodeRecord {
    Sum {
        id: u64,
        children: Vec<u64>,
        weights: Vec<f64>,
    },
    Product {
        id: u64,
        children: Vec<u64>,
    },
    Leaf {
        id: u64,
        variable: usize,
        p: f64,
    },
}

impl NodeRecord {
    fn id(&self) -> u64 {
        match self {
            NodeRecord::Sum { id, .. } | NodeRecord::Product { id, .. } | NodeRecord::Leaf { id, .. } => *id,
        }
    }
}

impl SpnGraph {
    /// Parses a model file and rejects anything that is not a valid SPN.
    /// Node ids in error messages are the ids used in the file.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpnFile = serde_json::from_str(text)?;
        let mut index = HashMap::with_capacity(file.nodes.len());
        for (i, rec) in file.nodes.iter().enumerate() {
            if index.insert(rec.id(), i).is_some() {
                return Err(Error::Malformed(format!("duplicate node id {}", rec.id())));
            }
        }
        let ids: Vec<u64> = file.nodes.iter().map(NodeRecord::id).collect();
        let resolve = |owner: u64, child: u64| {
            index.get(&child).copied().ok_or_else(|| {
                Error::Malformed(format!("node {owner} references missing child {child}"))
            })
        };
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for rec in &file.nodes {
            nodes.push(match rec {
                NodeRecord::Sum { id, children, weights } => {
                    if children.len() != weights.len() {
                        return Err(Error::Malformed(format!(
                            "sum node {id} has {} children but {} weights",
                            children.len(),
                            weights.len()
                        )));
                    }
                    let children = children
                        .iter()
                        .zip(weights)
                        .map(|(&c, &w)| Ok((resolve(*id, c)?, w)))
                        .collect::<Result<Vec<_>>>()?;
                    SpnNode::Sum { children }
                }
                NodeRecord::Product { id, children } => SpnNode::Product {
                    children: children
                        .iter()
                        .map(|&c| resolve(*id, c))
                        .collect::<Result<_>>()?,
                },
                NodeRecord::Leaf { variable, p, .. } => SpnNode::Leaf {
                    variable: *variable,
                    p: *p,
                },
            });
        }
        let root = index
            .get(&file.root)
            .copied()
            .ok_or_else(|| Error::Malformed(format!("root {} is not a node id", file.root)))?;
        let graph = SpnGraph::new(file.num_variables, root, nodes).map_err(|e| rename_nodes(e, &ids))?;
        graph.ensure_valid().map_err(|e| rename_nodes(e, &ids))?;
        Ok(graph)
    }

    /// Serializes with node ids equal to positions in [`SpnGraph::nodes`].
    pub fn to_json(&self) -> String {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let id = i as u64;
                match node {
                    SpnNode::Sum { children } => NodeRecord::Sum {
                        id,
                        children: children.iter().map(|&(c, _)| c as u64).collect(),
                        weights: children.iter().map(|&(_, w)| w).collect(),
                    },
                    SpnNode::Product { children } => NodeRecord::Product {
                        id,
                        children: children.iter().map(|&c| c as u64).collect(),
                    },
                    SpnNode::Leaf { variable, p } => NodeRecord::Leaf {
                        id,
                        variable: *variable,
                        p: *p,
                    },
                }
            })
            .collect();
        let file = SpnFile {
            num_variables: self.num_variables,
            root: self.root as u64,
            nodes,
        };
        serde_json::to_string_pretty(&file).expect("SPN serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Maps internal node positions back to file ids in diagnostics.
fn rename_nodes(err: Error, ids: &[u64]) -> Error {
    let id = |n: usize| ids.get(n).copied().unwrap_or(n as u64) as usize;
    match err {
        Error::Cycle(n) => Error::Cycle(id(n)),
        Error::DanglingChild { node, child } => Error::DanglingChild {
            node: id(node),
            child,
        },
        Error::VariableOutOfRange {
            node,
            variable,
            num_variables,
        } => Error::VariableOutOfRange {
            node: id(node),
            variable,
            num_variables,
        },
        Error::InvalidSpn(mut report) => {
            for v in &mut report.violations {
                v.node = id(v.node);
            }
            Error::InvalidSpn(report)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::two_component_mixture;
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let spn = two_component_mixture();
        let text = spn.to_json();
        let back = SpnGraph::from_json(&text).unwrap();
        assert_eq!(back.nodes(), spn.nodes());
        assert_eq!(back.root(), spn.root());
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn arbitrary_ids_are_remapped() {
        let text = r#"{"num_variables": 1, "root": 10, "nodes": [
            {"id": 10, "type": "sum", "children": [7, 3], "weights": [0.25, 0.75]},
            {"id": 7, "type": "leaf", "variable": 0, "p": 0.9},
            {"id": 3, "type": "leaf", "variable": 0, "p": 0.1}
        ]}"#;
        let spn = SpnGraph::from_json(text).unwrap();
        assert!((spn.probability(&[1]).unwrap() - (0.25 * 0.9 + 0.75 * 0.1)).abs() < 1e-15);
    }

    #[test]
    fn invalid_models_rejected_with_file_ids() {
        let incomplete = r#"{"num_variables": 2, "root": 5, "nodes": [
            {"id": 5, "type": "sum", "children": [1, 2], "weights": [0.5, 0.5]},
            {"id": 1, "type": "leaf", "variable": 0, "p": 0.5},
            {"id": 2, "type": "leaf", "variable": 1, "p": 0.5}
        ]}"#;
        match SpnGraph::from_json(incomplete) {
            Err(Error::InvalidSpn(report)) => assert_eq!(report.violations[0].node, 5),
            other => panic!("expected invalid SPN, got {other:?}"),
        }

        let mismatched = r#"{"num_variables": 1, "root": 0, "nodes": [
            {"id": 0, "type": "sum", "children": [1], "weights": [0.5, 0.5]},
            {"id": 1, "type": "leaf", "variable": 0, "p": 0.5}
        ]}"#;
        assert!(matches!(SpnGraph::from_json(mismatched), Err(Error::Malformed(_))));

        let missing = r#"{"num_variables": 1, "root": 0, "nodes": [
            {"id": 0, "type": "product", "children": [4]}
        ]}"#;
        assert!(SpnGraph::from_json(missing).is_err());

        // syntax errors carry a line number
        let broken = "{\n\"num_variables\": 1,\n\"root\": 0\n\"nodes\": []}";
        let msg = SpnGraph::from_json(broken).unwrap_err().to_string();
        assert!(msg.contains("line 4"), "{msg}");
    }
}
