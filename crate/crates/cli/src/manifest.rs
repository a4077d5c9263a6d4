//! Artifact manifest: every pipeline output linked to the content hashes of
//! its inputs. Reruns with identical inputs and seeds produce identical
//! manifests.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use regen_core::hash::content_hash;

use crate::commands::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub hash: String,
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(seed: u64) -> Self {
        Manifest {
            seed,
            inputs: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    /// Hashes an input file and records it.
    pub fn hash_input(&mut self, label: &str, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))?;
        let hash = content_hash(&bytes);
        self.inputs.insert(label.to_string(), hash.clone());
        Ok(hash)
    }

    /// Records a non-file input (e.g. the behavior string) by value hash.
    pub fn note_input(&mut self, label: &str, value: &str) -> String {
        let hash = content_hash(value.as_bytes());
        self.inputs.insert(label.to_string(), hash.clone());
        hash
    }

    /// Hashes a written artifact and appends a manifest entry with its
    /// input hashes. Returns the artifact's own hash for chaining.
    pub fn add_artifact(
        &mut self,
        root: &Path,
        path: &Path,
        inputs: &[(&str, String)],
    ) -> Result<String, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("read {}: {e}", path.display())))?;
        let hash = content_hash(&bytes);
        let rel = path
            .strip_prefix(root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/");
        self.artifacts.push(ManifestEntry {
            path: rel,
            hash: hash.clone(),
            inputs: inputs
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        });
        Ok(hash)
    }

    pub fn to_json(&self) -> String {
        let mut sorted = self.clone();
        sorted.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        serde_json::to_string_pretty(&sorted).expect("manifest serializes")
    }
}
