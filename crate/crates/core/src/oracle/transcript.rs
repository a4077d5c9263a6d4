//! Scripted-transcript backend: deterministic offline replay of recorded
//! oracle exchanges.
//!
//! Each record stores the template id, the variable map, and the response
//! text. Lookup hashes the rendered prompt, so a replay only matches when
//! the bytes a caller would send are identical to what was recorded.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::path::Path;

use super::templates::{render_prompt, TemplateId};
use super::OracleError;
use crate::hash::content_hash;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub template_id: TemplateId,
    pub vars: BTreeMap<String, String>,
    pub response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub records: Vec<TranscriptRecord>,
}

/// Loaded transcript indexed by rendered-prompt hash.
#[derive(Debug, Clone)]
pub struct Transcript {
    by_hash: HashMap<String, String>,
    len: usize,
}

/// Key for one exchange: template id plus rendered prompt bytes.
pub fn request_key(template_id: TemplateId, prompt: &str) -> String {
    content_hash(format!("{}\x1f{prompt}", template_id.as_str()).as_bytes())
}

impl Transcript {
    pub fn from_records(records: Vec<TranscriptRecord>) -> Result<Self, OracleError> {
        let len = records.len();
        let mut by_hash = HashMap::with_capacity(len);
        for record in records {
            let prompt = render_prompt(record.template_id, &record.vars)?;
            let key = request_key(record.template_id, &prompt);
            if by_hash.insert(key, record.response).is_some() {
                return Err(OracleError::DuplicateTranscriptRecord {
                    template_id: record.template_id.as_str().to_string(),
                });
            }
        }
        Ok(Transcript { by_hash, len })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| OracleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: TranscriptFile =
            serde_json::from_str(&text).map_err(|source| OracleError::TranscriptParse {
                path: path.display().to_string(),
                source,
            })?;
        Self::from_records(file.records)
    }

    pub fn lookup(&self, template_id: TemplateId, prompt: &str) -> Result<&str, OracleError> {
        let key = request_key(template_id, prompt);
        self.by_hash
            .get(&key)
            .map(String::as_str)
            .ok_or(OracleError::TranscriptMiss {
                template_id: template_id.as_str().to_string(),
                request_hash: key,
            })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Records exchanges while delegating to a programmatic responder; used by
/// fixture generation to author transcripts that match the pipeline's real
/// prompts byte-for-byte.
#[derive(Default)]
pub struct TranscriptRecorder {
    pub records: std::sync::Mutex<Vec<TranscriptRecord>>,
}

impl TranscriptRecorder {
    pub fn record(&self, template_id: TemplateId, vars: &BTreeMap<String, String>, response: &str) {
        self.records.lock().unwrap().push(TranscriptRecord {
            template_id,
            vars: vars.clone(),
            response: response.to_string(),
        });
    }

    pub fn into_file(self) -> TranscriptFile {
        TranscriptFile {
            records: self.records.into_inner().unwrap(),
        }
    }
}
