//! Inline claim markup:
//! `[[claim cat=<code> focal=<name> polarity=<err|ok>]]text[[/claim]]`.
//! A focal containing spaces is written in double quotes.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::category::MistakeCategory;
use crate::oracle::{Finding, Polarity};

const OPEN: &str = "[[claim";
const CLOSE: &str = "[[/claim]]";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarkupError {
    #[error("claim opened at byte {0} is never closed")]
    Unclosed(usize),
    #[error("closing tag at byte {0} has no opening tag")]
    UnexpectedClose(usize),
    #[error("claim at byte {0} is nested inside another claim")]
    Nested(usize),
    #[error("claim at byte {offset}: {detail}")]
    BadAttribute { offset: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub category: MistakeCategory,
    pub focal: String,
    pub polarity: Polarity,
    /// Byte range of the whole tagged segment, tags included.
    pub span: Range<usize>,
    /// Byte range of the enclosed sentence.
    pub body: Range<usize>,
}

impl Claim {
    pub fn to_finding(&self, text: &str) -> Finding {
        let sentence = text.get(self.body.clone()).unwrap_or_default().trim();
        Finding {
            category: self.category,
            focal: self.focal.clone(),
            polarity: self.polarity,
            explanation: sentence.to_string(),
            evidence: String::new(),
        }
    }
}

fn parse_attrs(raw: &str, offset: usize) -> Result<(MistakeCategory, String, Polarity), MarkupError> {
    let bad = |detail: String| MarkupError::BadAttribute { offset, detail };
    let (mut cat, mut focal, mut pol) = (None, None, None);
    let mut rest = raw.trim_start();
    while !rest.is_empty() {
        let eq = rest.find('=').ok_or_else(|| bad(format!("expected key=value in `{raw}`")))?;
        let key = rest[..eq].trim();
        rest = &rest[eq + 1..];
        let value;
        if let Some(stripped) = rest.strip_prefix('"') {
            let end = stripped.find('"').ok_or_else(|| bad("unterminated quote".into()))?;
            value = &stripped[..end];
            rest = stripped[end + 1..].trim_start();
        } else {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            value = &rest[..end];
            rest = rest[end..].trim_start();
        }
        match key {
            "cat" => cat = Some(value.parse::<MistakeCategory>().map_err(|e| bad(e.to_string()))?),
            "focal" => focal = Some(value.to_string()),
            "polarity" => {
                pol = Some(match value {
                    "err" => Polarity::ErrorFound,
                    "ok" => Polarity::ConfirmedCorrect,
                    other => return Err(bad(format!("polarity must be err or ok, not `{other}`"))),
                })
            }
            other => return Err(bad(format!("unknown attribute `{other}`"))),
        }
    }
    match (cat, focal, pol) {
        (Some(c), Some(f), Some(p)) if !f.is_empty() => Ok((c, f, p)),
        _ => Err(bad("cat, focal and polarity are all required".into())),
    }
}

/// Exact, pure extraction of tagged claims in text order.
pub fn extract_tagged(text: &str) -> Result<Vec<Claim>, MarkupError> {
    let mut claims = Vec::new();
    let mut at = 0;
    loop {
        let next_open = text[at..].find(OPEN).map(|i| at + i);
        let next_close = text[at..].find(CLOSE).map(|i| at + i);
        let start = match (next_open, next_close) {
            (None, None) => break,
            (None, Some(c)) => return Err(MarkupError::UnexpectedClose(c)),
            (Some(o), Some(c)) if c < o => return Err(MarkupError::UnexpectedClose(c)),
            (Some(o), _) => o,
        };
        let head_end = text[start..]
            .find("]]")
            .map(|i| start + i)
            .ok_or(MarkupError::Unclosed(start))?;
        let (category, focal, polarity) = parse_attrs(&text[start + OPEN.len()..head_end], start)?;
        let body_start = head_end + 2;
        let close = text[body_start..]
            .find(CLOSE)
            .map(|i| body_start + i)
            .ok_or(MarkupError::Unclosed(start))?;
        if let Some(inner) = text[body_start..close].find(OPEN) {
            return Err(MarkupError::Nested(body_start + inner));
        }
        let end = close + CLOSE.len();
        claims.push(Claim {
            category,
            focal,
            polarity,
            span: start..end,
            body: body_start..close,
        });
        at = end;
    }
    if claims.is_empty() && !text.trim().is_empty() {
        log::warn!("text carries no claim markup; no claims extracted");
    }
    Ok(claims)
}

/// Tagged sentence for one claim.
pub fn tag(category: MistakeCategory, focal: &str, polarity: Polarity, sentence: &str) -> String {
    let focal = if focal.contains(char::is_whitespace) {
        format!("\"{focal}\"")
    } else {
        focal.to_string()
    };
    let pol = match polarity {
        Polarity::ErrorFound => "err",
        Polarity::ConfirmedCorrect => "ok",
    };
    format!("[[claim cat={} focal={focal} polarity={pol}]]{sentence}[[/claim]]", category.code())
}

/// Text with all markup removed, as a reader would see it.
pub fn strip_markup(text: &str) -> String {
    match extract_tagged(text) {
        Ok(claims) => {
            let mut out = String::with_capacity(text.len());
            let mut at = 0;
            for c in &claims {
                out.push_str(&text[at..c.span.start]);
                out.push_str(&text[c.body.clone()]);
                at = c.span.end;
            }
            out.push_str(&text[at..]);
            out
        }
        Err(_) => text.to_string(),
    }
}
