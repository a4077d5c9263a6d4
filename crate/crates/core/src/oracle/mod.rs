//! Uniform interface to the language-model oracle.
//!
//! Two backends sit behind one `query` call: a remote chat endpoint and a
//! scripted transcript replayer. Callers cannot tell them apart when the
//! transcript matches what the remote would have said, which is what makes
//! the whole expansion pipeline reproducible offline.

pub mod parse;
pub mod templates;
pub mod transcript;

mod remote;

pub use parse::{extract_answer_block, parse_answer, AnswerPayload, AnswerSchema};
pub use remote::RemoteConfig;
pub use templates::{render_candidate_values, render_prompt, render_string_list, TemplateId};
pub use transcript::{Transcript, TranscriptFile, TranscriptRecord, TranscriptRecorder};

use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("template '{template_id}' has no binding for variable '{variable}'")]
    MissingVariable {
        template_id: String,
        variable: String,
    },
    #[error("response has no <Answer>...</Answer> block")]
    NoAnswerBlock,
    #[error("malformed answer line: '{0}'")]
    MalformedLine(String),
    #[error("transcript miss for template '{template_id}' (request hash {request_hash})")]
    TranscriptMiss {
        template_id: String,
        request_hash: String,
    },
    #[error("transcript contains duplicate record for template '{template_id}'")]
    DuplicateTranscriptRecord { template_id: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse transcript {path}: {source}")]
    TranscriptParse {
        path: String,
        source: serde_json::Error,
    },
    #[error("oracle transport failure: {0}")]
    Transport(String),
    #[error("remote oracle not configured: {0}")]
    RemoteConfig(String),
}

/// Decoding parameters sent with every remote request. Both default to 0 so
/// replies are as deterministic as the provider allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoding {
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding {
            temperature: 0.0,
            top_p: 0.0,
        }
    }
}

/// One oracle call: a template plus its variable bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRequest {
    pub template_id: TemplateId,
    pub vars: BTreeMap<String, String>,
}

impl OracleRequest {
    pub fn new(template_id: TemplateId, vars: BTreeMap<String, String>) -> Self {
        OracleRequest { template_id, vars }
    }

    pub fn rendered(&self) -> Result<String, OracleError> {
        render_prompt(self.template_id, &self.vars)
    }

    pub fn request_hash(&self) -> Result<String, OracleError> {
        Ok(transcript::request_key(self.template_id, &self.rendered()?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResponse {
    pub raw: String,
}

/// Wire-level transport for the remote backend, injectable for tests.
pub trait Transport: Send + Sync {
    fn send(&self, prompt: &str, decoding: &Decoding) -> Result<String, OracleError>;
}

enum Backend {
    Scripted(Transcript),
    Remote(Arc<dyn Transport>),
}

/// Shareable handle to a configured oracle backend.
#[derive(Clone)]
pub struct OracleHandle {
    backend: Arc<Backend>,
    pub decoding: Decoding,
}

impl OracleHandle {
    /// Scripted backend: replays a recorded transcript and never touches the
    /// network.
    pub fn scripted(transcript: Transcript) -> Self {
        OracleHandle {
            backend: Arc::new(Backend::Scripted(transcript)),
            decoding: Decoding::default(),
        }
    }

    pub fn scripted_from_path(path: impl AsRef<std::path::Path>) -> Result<Self, OracleError> {
        Ok(Self::scripted(Transcript::load(path)?))
    }

    /// Remote backend over the given transport (usually [`RemoteConfig`]).
    pub fn remote(transport: Arc<dyn Transport>) -> Self {
        OracleHandle {
            backend: Arc::new(Backend::Remote(transport)),
            decoding: Decoding::default(),
        }
    }

    /// Remote backend configured from `REGEN_ORACLE_URL`,
    /// `REGEN_ORACLE_MODEL`, and `REGEN_ORACLE_KEY`.
    pub fn remote_from_env() -> Result<Self, OracleError> {
        Ok(Self::remote(Arc::new(RemoteConfig::from_env()?)))
    }

    pub fn is_scripted(&self) -> bool {
        matches!(*self.backend, Backend::Scripted(_))
    }

    /// Sends one request and returns the raw response text.
    ///
    /// Remote transport errors are retried up to 3 attempts with exponential
    /// backoff; parse-level problems are never retried (they indicate a
    /// prompt/model mismatch, not transience).
    pub fn query(&self, request: &OracleRequest) -> Result<OracleResponse, OracleError> {
        let prompt = request.rendered()?;
        match &*self.backend {
            Backend::Scripted(transcript) => {
                let raw = transcript.lookup(request.template_id, &prompt)?;
                Ok(OracleResponse {
                    raw: raw.to_string(),
                })
            }
            Backend::Remote(transport) => {
                let mut delay = std::time::Duration::from_millis(100);
                let mut last_err = None;
                for attempt in 0..3 {
                    if attempt > 0 {
                        std::thread::sleep(delay);
                        delay *= 4;
                    }
                    match transport.send(&prompt, &self.decoding) {
                        Ok(raw) => return Ok(OracleResponse { raw }),
                        Err(err) => last_err = Some(err),
                    }
                }
                Err(last_err.expect("at least one attempt"))
            }
        }
    }

    /// Query then parse in one step.
    pub fn query_parsed(
        &self,
        request: &OracleRequest,
        schema: AnswerSchema,
    ) -> Result<AnswerPayload, OracleError> {
        let response = self.query(request)?;
        parse_answer(&response.raw, schema)
    }
}

/// Anything that can answer an [`OracleRequest`]. The pipeline is written
/// against this trait so tests and fixture generation can drop in
/// programmatic responders.
pub trait QueryOracle: Sync {
    fn call(&self, request: &OracleRequest) -> Result<OracleResponse, OracleError>;
}

impl QueryOracle for OracleHandle {
    fn call(&self, request: &OracleRequest) -> Result<OracleResponse, OracleError> {
        self.query(request)
    }
}

/// Closure-backed oracle for tests and transcript authoring.
pub struct FnOracle<F>(pub F);

impl<F> QueryOracle for FnOracle<F>
where
    F: Fn(&OracleRequest) -> Result<String, OracleError> + Sync,
{
    fn call(&self, request: &OracleRequest) -> Result<OracleResponse, OracleError> {
        (self.0)(request).map(|raw| OracleResponse { raw })
    }
}

/// Wraps an oracle and records every exchange, so generated transcripts
/// match the pipeline's real prompts byte-for-byte.
pub struct RecordingOracle<'a> {
    pub inner: &'a dyn QueryOracle,
    pub recorder: &'a TranscriptRecorder,
}

impl QueryOracle for RecordingOracle<'_> {
    fn call(&self, request: &OracleRequest) -> Result<OracleResponse, OracleError> {
        let response = self.inner.call(request)?;
        self.recorder
            .record(request.template_id, &request.vars, &response.raw);
        Ok(response)
    }
}
