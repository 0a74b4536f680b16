//! Text-generation endpoint access with caching and request coalescing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::OnceCell;

use super::prompt::ExplanationPrompt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("no text-generation endpoint configured")]
    NotConfigured,
    #[error("request failed: {0}")]
    Transport(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("endpoint answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("response has no text: {0}")]
    Format(String),
}

/// Anything that turns a prompt into text.
#[async_trait]
pub trait TextGenerator: Send + Sync {
    async fn generate(&self, prompt: &str) -> Result<String, GenerationError>;
}

/// Endpoint settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    /// Full chat-completions URL.
    pub url: Option<String>,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    pub cache_ttl: Duration,
    /// Never call the endpoint.
    pub fallback_only: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            url: None,
            api_key: None,
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            max_tokens: 1200,
            timeout: Duration::from_secs(20),
            cache_ttl: Duration::from_secs(3600),
            fallback_only: false,
        }
    }
}

impl ExplainConfig {
    /// Reads `CARDIOPREV_LLM_URL`, `CARDIOPREV_LLM_API_KEY`,
    /// `CARDIOPREV_LLM_MODEL`, `CARDIOPREV_LLM_TIMEOUT_MS`,
    /// `CARDIOPREV_LLM_MAX_TOKENS`, `CARDIOPREV_LLM_CACHE_TTL_SECS` and
    /// `CARDIOPREV_LLM_FALLBACK_ONLY`.
    pub fn from_env() -> Self {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Self {
        let mut c = Self::default();
        let non_empty = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        c.url = non_empty("CARDIOPREV_LLM_URL");
        c.api_key = non_empty("CARDIOPREV_LLM_API_KEY");
        if let Some(m) = non_empty("CARDIOPREV_LLM_MODEL") {
            c.model = m;
        }
        if let Some(ms) = non_empty("CARDIOPREV_LLM_TIMEOUT_MS").and_then(|v| v.parse().ok()) {
            c.timeout = Duration::from_millis(ms);
        }
        if let Some(n) = non_empty("CARDIOPREV_LLM_MAX_TOKENS").and_then(|v| v.parse().ok()) {
            c.max_tokens = n;
        }
        if let Some(s) = non_empty("CARDIOPREV_LLM_CACHE_TTL_SECS").and_then(|v| v.parse().ok()) {
            c.cache_ttl = Duration::from_secs(s);
        }
        c.fallback_only = non_empty("CARDIOPREV_LLM_FALLBACK_ONLY")
            .is_some_and(|v| matches!(v.to_ascii_lowercase().as_str(), "1" | "true" | "yes"));
        c
    }

    pub fn is_enabled(&self) -> bool {
        !self.fallback_only && self.url.is_some()
    }
}

/// Client for chat-completions style endpoints: a role-tagged message
/// list in, `choices[0].message.content` out.
pub struct HttpGenerator {
    http: reqwest::Client,
    config: ExplainConfig,
}

impl HttpGenerator {
    pub fn new(config: ExplainConfig) -> Result<Self, GenerationError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GenerationError::Transport(e.to_string()))?;
        Ok(Self { http, config })
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Option<Message>,
    text: Option<String>,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

#[async_trait]
impl TextGenerator for HttpGenerator {
    async fn generate(&self, prompt: &str) -> Result<String, GenerationError> {
        let url = self
            .config
            .url
            .as_deref()
            .ok_or(GenerationError::NotConfigured)?;
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "messages": [
                {"role": "system", "content": "You explain cardiovascular risk factors to lay people."},
                {"role": "user", "content": prompt}
            ]
        });
        let mut req = self.http.post(url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                GenerationError::Timeout(self.config.timeout)
            } else {
                GenerationError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp
            .text()
            .await
            .map_err(|e| GenerationError::Transport(e.to_string()))?;
        if !status.is_success() {
            let body: String = text.chars().take(200).collect();
            return Err(GenerationError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| GenerationError::Format(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.and_then(|m| m.content).or(c.text))
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| GenerationError::Format("no choices[0].message.content".into()))
    }
}

type Slot = Arc<OnceCell<Result<String, GenerationError>>>;

/// Wraps a generator with a TTL cache keyed by prompt text. Concurrent
/// requests for the same prompt share one call. Failures are not cached.
pub struct CachedGenerator {
    inner: Arc<dyn TextGenerator>,
    ttl: Duration,
    slots: Mutex<HashMap<String, (Instant, Slot)>>,
}

impl CachedGenerator {
    pub fn new(inner: Arc<dyn TextGenerator>, ttl: Duration) -> Self {
        Self {
            inner,
            ttl,
            slots: Mutex::new(HashMap::new()),
        }
    }

    /// Generates, consulting the cache unless `bypass` is set.
    pub async fn generate(
        &self,
        prompt: &ExplanationPrompt,
        bypass: bool,
    ) -> Result<String, GenerationError> {
        let text = prompt.text();
        if bypass {
            return self.inner.generate(&text).await;
        }
        let slot = {
            let mut slots = self.slots.lock().unwrap();
            let now = Instant::now();
            slots.retain(|_, (at, _)| now.duration_since(*at) < self.ttl);
            slots
                .entry(text.clone())
                .or_insert_with(|| (now, Arc::new(OnceCell::new())))
                .1
                .clone()
        };
        let result = slot
            .get_or_init(|| self.inner.generate(&text))
            .await
            .clone();
        if result.is_err() {
            let mut slots = self.slots.lock().unwrap();
            if slots.get(&text).is_some_and(|(_, s)| Arc::ptr_eq(s, &slot)) {
                slots.remove(&text);
            }
        }
        result
    }

    pub fn cached_prompts(&self) -> usize {
        self.slots.lock().unwrap().len()
    }
}
