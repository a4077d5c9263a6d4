//! Simulator asset database: the directed graph of entities, properties,
//! behaviors, states, and sensors that bounds what scenario expansion may
//! propose.
//!
//! Edges read "`from` is a property/behavior/state option of `to`", so a
//! siren attaches to an ambulance as `(siren -> ambulance)` and each siren
//! state attaches to the siren as `(siren.on -> siren)`. Entities sit at the
//! top (only incoming edges), states at the bottom (one outgoing edge to
//! their property, nothing below them).

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssetDbError {
    #[error("failed to read asset db {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse asset db {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("asset db invariant violated at node '{node}': {reason}")]
    Invalid { node: String, reason: String },
    #[error("unknown property '{0}'")]
    UnknownProperty(String),
}

/// What role a node plays in the database graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssetKind {
    EntityAgent,
    EntityObject,
    Property,
    Behavior,
    State,
    Sensor,
}

impl AssetKind {
    pub fn is_entity(self) -> bool {
        matches!(self, AssetKind::EntityAgent | AssetKind::EntityObject)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetNode {
    pub id: String,
    pub kind: AssetKind,
    pub display_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetEdge {
    pub from: String,
    pub to: String,
}

/// On-disk shape of an `.assetdb` file: a `nodes` section and an `edges`
/// section.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct AssetDbFile {
    nodes: Vec<AssetNode>,
    edges: Vec<AssetEdge>,
}

/// Validated asset database. Immutable after load; share freely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssetDatabase {
    nodes: BTreeMap<String, AssetNode>,
    edges: BTreeSet<(String, String)>,
}

impl AssetDatabase {
    /// Builds and validates a database from parts.
    pub fn new(
        nodes: Vec<AssetNode>,
        edges: Vec<(String, String)>,
    ) -> Result<Self, AssetDbError> {
        let mut node_map = BTreeMap::new();
        for node in nodes {
            if node_map.contains_key(&node.id) {
                return Err(AssetDbError::Invalid {
                    node: node.id,
                    reason: "duplicate node id".into(),
                });
            }
            node_map.insert(node.id.clone(), node);
        }
        let db = AssetDatabase {
            nodes: node_map,
            edges: edges.into_iter().collect(),
        };
        db.validate()?;
        Ok(db)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AssetDbError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| AssetDbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: AssetDbFile =
            serde_json::from_str(&text).map_err(|source| AssetDbError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        Self::new(
            file.nodes,
            file.edges.into_iter().map(|e| (e.from, e.to)).collect(),
        )
    }

    /// Serializes back to the `.assetdb` file format.
    pub fn to_json(&self) -> String {
        let file = AssetDbFile {
            nodes: self.nodes.values().cloned().collect(),
            edges: self
                .edges
                .iter()
                .map(|(from, to)| AssetEdge {
                    from: from.clone(),
                    to: to.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("asset db serializes")
    }

    fn validate(&self) -> Result<(), AssetDbError> {
        for (from, to) in &self.edges {
            for end in [from, to] {
                if !self.nodes.contains_key(end) {
                    return Err(AssetDbError::Invalid {
                        node: end.clone(),
                        reason: format!("edge ({from} -> {to}) references a missing node"),
                    });
                }
            }
        }
        for node in self.nodes.values() {
            let out = self.edges.iter().filter(|(f, _)| f == &node.id).count();
            let incoming = self.edges.iter().filter(|(_, t)| t == &node.id).count();
            match node.kind {
                AssetKind::EntityAgent | AssetKind::EntityObject => {
                    if out > 0 {
                        return Err(AssetDbError::Invalid {
                            node: node.id.clone(),
                            reason: "entity nodes may only have incoming edges".into(),
                        });
                    }
                }
                AssetKind::Property => {
                    if out == 0 {
                        return Err(AssetDbError::Invalid {
                            node: node.id.clone(),
                            reason: "property node must attach to at least one target".into(),
                        });
                    }
                }
                AssetKind::State => {
                    // States are leaves: one edge up to their property and
                    // nothing hanging off them.
                    if out != 1 {
                        return Err(AssetDbError::Invalid {
                            node: node.id.clone(),
                            reason: format!(
                                "state node must attach to exactly one property, has {out}"
                            ),
                        });
                    }
                    if incoming > 0 {
                        return Err(AssetDbError::Invalid {
                            node: node.id.clone(),
                            reason: "state nodes may not have incoming edges".into(),
                        });
                    }
                    let (_, target) = self
                        .edges
                        .iter()
                        .find(|(f, _)| f == &node.id)
                        .expect("outgoing edge exists");
                    if self.nodes[target].kind != AssetKind::Property {
                        return Err(AssetDbError::Invalid {
                            node: node.id.clone(),
                            reason: format!("state attaches to non-property '{target}'"),
                        });
                    }
                }
                AssetKind::Behavior | AssetKind::Sensor => {}
            }
        }
        self.check_acyclic()?;
        Ok(())
    }

    fn check_acyclic(&self) -> Result<(), AssetDbError> {
        // Kahn's algorithm; leftover nodes sit on a cycle.
        let mut indeg: BTreeMap<&str, usize> =
            self.nodes.keys().map(|id| (id.as_str(), 0)).collect();
        for (_, to) in &self.edges {
            *indeg.get_mut(to.as_str()).expect("validated endpoint") += 1;
        }
        let mut queue: Vec<&str> = indeg
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut seen = 0usize;
        while let Some(id) = queue.pop() {
            seen += 1;
            for (from, to) in &self.edges {
                if from == id {
                    let d = indeg.get_mut(to.as_str()).expect("endpoint");
                    *d -= 1;
                    if *d == 0 {
                        queue.push(to);
                    }
                }
            }
        }
        if seen != self.nodes.len() {
            let on_cycle = indeg
                .iter()
                .find(|(_, d)| **d > 0)
                .map(|(id, _)| id.to_string())
                .unwrap_or_default();
            return Err(AssetDbError::Invalid {
                node: on_cycle,
                reason: "asset graph contains a cycle".into(),
            });
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&AssetNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AssetNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &(String, String)> {
        self.edges.iter()
    }

    /// All entity nodes (agents and objects), sorted by id.
    pub fn list_entities(&self) -> Vec<&AssetNode> {
        self.nodes
            .values()
            .filter(|n| n.kind.is_entity())
            .collect()
    }

    /// State options of a property, sorted by display name. Empty means the
    /// property takes oracle-supplied free-text values.
    pub fn property_states(&self, property_id: &str) -> Result<Vec<String>, AssetDbError> {
        match self.nodes.get(property_id) {
            Some(node) if node.kind == AssetKind::Property => {}
            _ => return Err(AssetDbError::UnknownProperty(property_id.to_string())),
        }
        let mut states: Vec<String> = self
            .edges
            .iter()
            .filter(|(_, to)| to == property_id)
            .filter_map(|(from, _)| self.nodes.get(from))
            .filter(|n| n.kind == AssetKind::State)
            .map(|n| n.display_name.clone())
            .collect();
        states.sort();
        Ok(states)
    }

    /// Nodes of `kind` that attach directly to `target_id`, sorted by id.
    pub fn attached(&self, target_id: &str, kind: AssetKind) -> Vec<&AssetNode> {
        let mut nodes: Vec<&AssetNode> = self
            .edges
            .iter()
            .filter(|(_, to)| to == target_id)
            .filter_map(|(from, _)| self.nodes.get(from))
            .filter(|n| n.kind == kind)
            .collect();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        nodes
    }

    /// Behavior options of an entity, sorted by id.
    pub fn behaviors_of(&self, entity_id: &str) -> Vec<&AssetNode> {
        self.attached(entity_id, AssetKind::Behavior)
    }

    /// Property nodes of an entity or behavior, sorted by id.
    pub fn properties_of(&self, target_id: &str) -> Vec<&AssetNode> {
        self.attached(target_id, AssetKind::Property)
    }
}
