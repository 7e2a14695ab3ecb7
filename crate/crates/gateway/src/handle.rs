use std::env;
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crate::cache::{cache_key, ResponseCache};
use crate::documents::StructuredDocument;
use crate::error::GatewayError;
use crate::http::{ChatMessage, ChatRequest, HttpTransport};
use crate::mock::{MockError, MockTransport, ScriptEntry, TranscriptEntry};
use crate::ratelimit::{InFlight, RateLimiter};
use crate::template::{Fills, PromptTemplate, TemplateId};

pub const ENV_API_BASE: &str = "EERD_API_BASE";
pub const ENV_API_KEY: &str = "EERD_API_KEY";
pub const ENV_MODEL_GUIDE: &str = "EERD_MODEL_GUIDE";
pub const ENV_MODEL_BASE: &str = "EERD_MODEL_BASE";

/// Which pipeline model a handle stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelRole {
    /// Guide model that audits, polishes and judges.
    Guide,
    /// Base model producing initial reasoning and feedback.
    Base,
    /// Model after reasoning alignment.
    ReasoningAligned,
    /// Model after feedback alignment.
    FeedbackAligned,
}

#[derive(Clone)]
enum Backend {
    Http(Arc<HttpTransport>),
    Mock(Arc<MockTransport>),
}

/// A configured model endpoint. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct ModelHandle {
    pub endpoint: String,
    pub model_id: String,
    pub role: ModelRole,
    temperature: f64,
    pub max_retries: u32,
    pub timeout: Duration,
    backoff: Duration,
    backend: Backend,
    cache: Option<Arc<ResponseCache>>,
    limiter: Option<Arc<RateLimiter>>,
    in_flight: Arc<InFlight>,
}

impl fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelHandle")
            .field("endpoint", &self.endpoint)
            .field("model_id", &self.model_id)
            .field("role", &self.role)
            .field("temperature", &self.temperature)
            .field("max_retries", &self.max_retries)
            .finish_non_exhaustive()
    }
}

impl ModelHandle {
    pub fn http(
        endpoint: impl Into<String>,
        model_id: impl Into<String>,
        api_key: Option<String>,
        role: ModelRole,
    ) -> Self {
        let endpoint = endpoint.into();
        let timeout = Duration::from_secs(120);
        let transport = HttpTransport::new(&endpoint, api_key, timeout);
        Self {
            endpoint,
            model_id: model_id.into(),
            role,
            temperature: 0.0,
            max_retries: 3,
            timeout,
            backoff: Duration::from_millis(500),
            backend: Backend::Http(Arc::new(transport)),
            cache: Some(Arc::new(ResponseCache::in_memory())),
            limiter: Some(Arc::new(RateLimiter::per_minute(
                RateLimiter::DEFAULT_PER_MINUTE,
            ))),
            in_flight: Arc::new(InFlight::new(4)),
        }
    }

    /// Builds a handle from `EERD_API_BASE`, `EERD_API_KEY` and the model
    /// variable for `role`. Aligned models fall back to `EERD_MODEL_BASE`.
    pub fn from_env(role: ModelRole) -> Result<Self, GatewayError> {
        let base = env::var(ENV_API_BASE)
            .map_err(|_| GatewayError::Config(format!("{ENV_API_BASE} is not set")))?;
        let key = env::var(ENV_API_KEY).ok();
        let var = match role {
            ModelRole::Guide => ENV_MODEL_GUIDE,
            _ => ENV_MODEL_BASE,
        };
        let model = env::var(var).map_err(|_| GatewayError::Config(format!("{var} is not set")))?;
        Ok(Self::http(base, model, key, role))
    }

    /// A handle that replays `script` instead of calling the network.
    pub fn mock_script(script: Vec<ScriptEntry>) -> Self {
        Self {
            endpoint: "mock://".into(),
            model_id: "mock".into(),
            role: ModelRole::Guide,
            temperature: 0.0,
            max_retries: 0,
            timeout: Duration::from_secs(1),
            backoff: Duration::ZERO,
            backend: Backend::Mock(Arc::new(MockTransport::new(script))),
            cache: None,
            limiter: None,
            in_flight: Arc::new(InFlight::new(64)),
        }
    }

    pub fn with_role(mut self, role: ModelRole) -> Self {
        self.role = role;
        self
    }

    pub fn with_model_id(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Result<Self, GatewayError> {
        if !(0.0..=2.0).contains(&t) {
            return Err(GatewayError::Config(format!("temperature {t} outside [0, 2]")));
        }
        self.temperature = t;
        Ok(self)
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    pub fn with_cache(mut self, cache: Arc<ResponseCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn with_rate_limit(mut self, per_minute: u32) -> Self {
        self.limiter = Some(Arc::new(RateLimiter::per_minute(per_minute)));
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.in_flight = Arc::new(InFlight::new(n));
        self
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_deref()
    }

    /// Calls recorded by a mock backend; empty for HTTP handles.
    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        match &self.backend {
            Backend::Mock(m) => m.transcript(),
            Backend::Http(_) => Vec::new(),
        }
    }

    pub fn dump_transcript(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(&self.transcript())?;
        std::fs::write(path, json)
    }

    /// Fills `template` and returns the model's text.
    pub fn complete(&self, template: &PromptTemplate, fills: &Fills) -> Result<String, GatewayError> {
        let prompt = template.fill(fills)?;
        self.complete_prompt(template.id, &prompt)
    }

    /// Sends an already-filled prompt. Responses at temperature 0 are cached.
    pub fn complete_prompt(&self, template: TemplateId, prompt: &str) -> Result<String, GatewayError> {
        let key = (self.temperature == 0.0 && self.cache.is_some())
            .then(|| cache_key(template, prompt, &self.model_id, self.temperature));
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(hit) = cache.get(key)? {
                return Ok(hit.response);
            }
        }
        let text = self.send_with_retries(template, prompt)?;
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            cache.put(key, &text)?;
        }
        Ok(text)
    }

    fn send_with_retries(&self, template: TemplateId, prompt: &str) -> Result<String, GatewayError> {
        let attempts = self.max_retries + 1;
        let mut last = (None, String::new());
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.backoff.saturating_mul(1u32 << (attempt - 1).min(16));
                if !delay.is_zero() {
                    thread::sleep(delay);
                }
            }
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            let _slot = self.in_flight.enter();
            match &self.backend {
                Backend::Mock(m) => match m.send(template, prompt) {
                    Ok(text) => return Ok(text),
                    Err(MockError::Exhausted) => return Err(GatewayError::ScriptExhausted { template }),
                    Err(MockError::Status(s)) => last = (Some(s), format!("mock status {s}")),
                },
                Backend::Http(h) => {
                    let req = ChatRequest {
                        model: &self.model_id,
                        messages: vec![ChatMessage {
                            role: "user",
                            content: prompt,
                        }],
                        temperature: self.temperature,
                    };
                    match h.send(&req) {
                        Ok(text) => return Ok(text),
                        Err(f) => last = (f.status, f.message),
                    }
                }
            }
            log::warn!(
                "{template} call to {} failed (attempt {}/{attempts}): {}",
                self.model_id,
                attempt + 1,
                last.1
            );
        }
        Err(GatewayError::Request {
            status: last.0,
            attempts,
            message: last.1,
        })
    }

    /// Like [`complete`](Self::complete) but parses the answer as `T`. A
    /// parse failure triggers exactly one repair re-prompt that appends a
    /// format reminder; a second failure is returned with both payloads.
    pub fn complete_structured<T: StructuredDocument>(
        &self,
        template: &PromptTemplate,
        fills: &Fills,
    ) -> Result<T, GatewayError> {
        let prompt = template.fill(fills)?;
        let first = self.complete_prompt(template.id, &prompt)?;
        let first_err = match T::parse(&first) {
            Ok(doc) => return Ok(doc),
            Err(e) => e,
        };
        log::warn!("{} output unparseable ({first_err}); issuing repair prompt", T::SCHEMA_ID);
        let repair_prompt = format!("{prompt}\n\n{}", T::format_reminder());
        let second = self.complete_prompt(template.id, &repair_prompt)?;
        T::parse(&second).map_err(|reason| GatewayError::MalformedOutput {
            schema: T::SCHEMA_ID,
            reason,
            first_raw: first,
            repair_raw: second,
        })
    }
}
