//! Chat-completions style HTTP backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{JudgeBackend, JudgeError, JudgeRequest};

/// Environment variable holding the API token. Secrets are never read from
/// flags or config files.
pub const API_KEY_ENV: &str = "FIGJUDGE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Header carrying the token, e.g. `Authorization` or `api-key`.
    #[serde(default = "default_auth_header")]
    pub auth_header: String,
    /// Prefix placed before the token in the header value.
    #[serde(default = "default_auth_scheme")]
    pub auth_scheme: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_auth_header() -> String {
    "Authorization".into()
}

fn default_auth_scheme() -> String {
    "Bearer ".into()
}

fn default_timeout_secs() -> u64 {
    120
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            auth_header: default_auth_header(),
            auth_scheme: default_auth_scheme(),
            timeout_secs: default_timeout_secs(),
        }
    }
}

pub struct RemoteBackend {
    id: String,
    config: RemoteConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl RemoteBackend {
    /// Reads the token from [`API_KEY_ENV`]; without it requests go out
    /// unauthenticated (useful for local endpoints).
    pub fn from_env(config: RemoteConfig) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        if key.is_none() {
            log::warn!("{API_KEY_ENV} is not set; sending requests without credentials");
        }
        Self::with_key(config, key)
    }

    pub fn with_key(config: RemoteConfig, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            id: format!("remote:{}", config.model),
            config,
            api_key,
            agent,
        }
    }

    /// JSON body sent for a request.
    pub fn body(&self, request: &JudgeRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "max_tokens": request.params.max_new_tokens,
        })
    }
}

impl JudgeBackend for RemoteBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, request: &JudgeRequest) -> Result<String, JudgeError> {
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header(&self.config.auth_header, &format!("{}{key}", self.config.auth_scheme));
        }
        let response = call
            .send_json(self.body(request))
            .map_err(|e| JudgeError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(JudgeError::AuthRejected { status }),
            408 | 429 | 500..=599 => return Err(JudgeError::Transient(format!("HTTP {status}"))),
            _ => {
                let body = response.into_body().read_to_string().unwrap_or_default();
                return Err(JudgeError::BackendRefused { status, body });
            }
        }
        let body: Value = response
            .into_body()
            .read_json()
            .map_err(|e| JudgeError::Transient(format!("unreadable response body: {e}")))?;
        // A well-formed reply without text is data, not an error.
        Ok(body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string())
    }
}
