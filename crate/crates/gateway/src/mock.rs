//! Scriptable stand-in for a chat-completion endpoint.
//!
//! A script is an ordered list of `(matcher, response)` entries. Each call
//! consumes the first unconsumed entry whose matcher accepts it; entries
//! flagged `repeat` are never consumed. Every call is appended to a
//! transcript so tests can assert on what was sent.

use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::template::TemplateId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    Any,
    Template(TemplateId),
    Contains(String),
}

impl Matcher {
    fn accepts(&self, template: TemplateId, prompt: &str) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::Template(t) => *t == template,
            Matcher::Contains(s) => prompt.contains(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockResponse {
    Text(String),
    /// Returns the filled prompt unchanged.
    Echo,
    /// Simulates a transport failure with the given HTTP status.
    Fail(u16),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match", default = "any")]
    pub matcher: Matcher,
    pub response: MockResponse,
    #[serde(default)]
    pub repeat: bool,
}

fn any() -> Matcher {
    Matcher::Any
}

impl ScriptEntry {
    pub fn new(matcher: Matcher, response: MockResponse) -> Self {
        Self {
            matcher,
            response,
            repeat: false,
        }
    }

    pub fn text(matcher: Matcher, text: impl Into<String>) -> Self {
        Self::new(matcher, MockResponse::Text(text.into()))
    }

    pub fn repeating(mut self) -> Self {
        self.repeat = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub template: TemplateId,
    pub prompt: String,
    pub outcome: Result<String, String>,
}

#[derive(Debug)]
pub(crate) enum MockError {
    Exhausted,
    Status(u16),
}

#[derive(Debug, Default)]
pub struct MockTransport {
    entries: Mutex<Vec<(ScriptEntry, bool)>>,
    transcript: Mutex<Vec<TranscriptEntry>>,
}

impl MockTransport {
    pub fn new(script: Vec<ScriptEntry>) -> Self {
        Self {
            entries: Mutex::new(script.into_iter().map(|e| (e, false)).collect()),
            transcript: Mutex::default(),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Vec<ScriptEntry>> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub(crate) fn send(&self, template: TemplateId, prompt: &str) -> Result<String, MockError> {
        let outcome = {
            let mut entries = self.entries.lock().expect("script lock");
            let slot = entries
                .iter_mut()
                .find(|(e, used)| !*used && e.matcher.accepts(template, prompt));
            match slot {
                None => Err(MockError::Exhausted),
                Some((entry, used)) => {
                    if !entry.repeat {
                        *used = true;
                    }
                    match &entry.response {
                        MockResponse::Text(t) => Ok(t.clone()),
                        MockResponse::Echo => Ok(prompt.to_string()),
                        MockResponse::Fail(status) => Err(MockError::Status(*status)),
                    }
                }
            }
        };
        self.transcript.lock().expect("transcript lock").push(TranscriptEntry {
            template,
            prompt: prompt.to_string(),
            outcome: match &outcome {
                Ok(t) => Ok(t.clone()),
                Err(MockError::Exhausted) => Err("script exhausted".into()),
                Err(MockError::Status(s)) => Err(format!("status {s}")),
            },
        });
        outcome
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript.lock().expect("transcript lock").clone()
    }

    pub fn remaining(&self) -> usize {
        self.entries
            .lock()
            .expect("script lock")
            .iter()
            .filter(|(e, used)| !*used && !e.repeat)
            .count()
    }
}
