use thiserror::Error;

use crate::template::TemplateId;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("template `{template}` is missing a fill for `{missing}`")]
    Template { template: TemplateId, missing: String },

    #[error("request failed after {attempts} attempt(s) (status {status:?}): {message}")]
    Request {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },

    #[error("mock script exhausted on `{template}` call")]
    ScriptExhausted { template: TemplateId },

    #[error("malformed `{schema}` output after repair: {reason}")]
    MalformedOutput {
        schema: &'static str,
        reason: String,
        first_raw: String,
        repair_raw: String,
    },

    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("cache i/o: {0}")]
    Cache(#[from] std::io::Error),
}

impl GatewayError {
    /// Raw payloads retained by a [`GatewayError::MalformedOutput`].
    pub fn raw_payloads(&self) -> Option<(&str, &str)> {
        match self {
            GatewayError::MalformedOutput {
                first_raw,
                repair_raw,
                ..
            } => Some((first_raw, repair_raw)),
            _ => None,
        }
    }
}
