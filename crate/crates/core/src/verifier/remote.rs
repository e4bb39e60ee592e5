use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CriticError;

/// Environment variable holding a bearer token for the remote critic. Its
/// value is sent as an `Authorization` header and never logged or stored.
pub const API_KEY_ENV: &str = "EVOSTEER_CRITIC_API_KEY";

fn default_timeout() -> f64 {
    30.0
}

fn default_temperature() -> f64 {
    0.2
}

fn default_max_tokens() -> u32 {
    1000
}

/// HTTP critic speaking the `/objective` and `/reflect` JSON contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteCritic {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

impl RemoteCritic {
    pub fn new(endpoint: &str) -> Self {
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            timeout_secs: default_timeout(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout_secs = timeout.as_secs_f64();
        self
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), CriticError> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(CriticError::Config("timeout must be positive".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(CriticError::Config("temperature must be nonnegative".into()));
        }
        if self.max_tokens == 0 {
            return Err(CriticError::Config("max_tokens must be positive".into()));
        }
        if !self.endpoint.starts_with("http://") && !self.endpoint.starts_with("https://") {
            return Err(CriticError::Config(format!(
                "endpoint {:?} is not an http(s) URL",
                self.endpoint
            )));
        }
        Ok(())
    }

    /// POST a JSON body and return the response text of a 2xx answer.
    pub(crate) fn post<T: Serialize>(&self, path: &str, body: &T) -> Result<String, CriticError> {
        self.validate()?;
        let url = format!("{}{path}", self.endpoint.trim_end_matches('/'));
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(&url).header("Content-Type", "application/json");
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
        }
        let map_err = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => CriticError::Timeout {
                url: url.clone(),
                after: self.timeout(),
            },
            other => CriticError::Transport(other.to_string()),
        };
        let mut resp = req.send_json(body).map_err(map_err)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_err)?;
        if !(200..300).contains(&status) {
            return Err(CriticError::Http {
                status,
                body: text.chars().take(256).collect(),
            });
        }
        Ok(text)
    }
}
