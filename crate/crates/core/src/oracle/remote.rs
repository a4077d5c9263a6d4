//! Chat-completion transport over HTTP(S).

use super::{Decoding, OracleError, Transport};

/// Remote endpoint configuration, usually read from the environment:
/// `REGEN_ORACLE_URL`, `REGEN_ORACLE_MODEL`, `REGEN_ORACLE_KEY` (key
/// optional for unauthenticated endpoints).
#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
}

impl RemoteConfig {
    pub fn from_env() -> Result<Self, OracleError> {
        let endpoint = std::env::var("REGEN_ORACLE_URL")
            .map_err(|_| OracleError::RemoteConfig("REGEN_ORACLE_URL unset".into()))?;
        let model = std::env::var("REGEN_ORACLE_MODEL")
            .map_err(|_| OracleError::RemoteConfig("REGEN_ORACLE_MODEL unset".into()))?;
        let api_key = std::env::var("REGEN_ORACLE_KEY").ok();
        Ok(RemoteConfig {
            endpoint,
            model,
            api_key,
        })
    }
}

impl Transport for RemoteConfig {
    fn send(&self, prompt: &str, decoding: &Decoding) -> Result<String, OracleError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": decoding.temperature,
            "top_p": decoding.top_p,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = ureq::post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                OracleError::Transport("response missing choices[0].message.content".into())
            })
    }
}
