//! Model gateway: prompt templates, a chat-completion client with retries,
//! rate limiting and a content-addressed response cache, plus a scriptable
//! mock backend for deterministic runs.

pub mod cache;
pub mod documents;
mod error;
mod handle;
mod http;
pub mod mock;
mod ratelimit;
pub mod template;

pub use cache::{CacheEntry, ResponseCache};
pub use documents::StructuredDocument;
pub use error::GatewayError;
pub use handle::{ModelHandle, ModelRole, ENV_API_BASE, ENV_API_KEY, ENV_MODEL_BASE, ENV_MODEL_GUIDE};
pub use http::{ChatMessage, ChatRequest, HttpTransport};
pub use mock::{Matcher, MockResponse, ScriptEntry, TranscriptEntry};
pub use ratelimit::{InFlight, RateLimiter};
pub use template::{fills, Fills, Placeholder, PromptTemplate, TemplateId};
