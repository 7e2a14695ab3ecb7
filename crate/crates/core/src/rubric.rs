//! Per-schema rubric packages: problem statements with rubrics, probing
//! questions and the schema elements each statement covers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{name_key, EerdSchema};

#[derive(Debug, thiserror::Error)]
pub enum RubricError {
    #[error("rubric document is not well-formed: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("rubric package has no problem statements")]
    Empty,
    #[error("statement {index} has no rubrics")]
    NoRubrics { index: usize },
    #[error("statement {index} anchors `{name}`, which the schema does not declare")]
    UnresolvedAnchor { index: usize, name: String },
    #[error("statement {index} mentions no declared entity or relationship")]
    NoAnchors { index: usize },
    #[error("`{0}` is neither an entity nor a relationship of this schema")]
    UnknownFocal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemStatement {
    pub description: String,
    pub rubrics: Vec<String>,
    #[serde(default)]
    pub questions: Vec<String>,
    /// Canonical schema names this statement covers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RubricDocument {
    #[serde(rename = "problem-statements")]
    problem_statements: Vec<ProblemStatement>,
}

/// Immutable after [`load_rubrics`]. Carries enough of the schema topology
/// to resolve participants without the schema itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RubricPackage {
    pub schema_name: String,
    pub statements: Vec<ProblemStatement>,
    entities: BTreeMap<String, String>,
    relationships: BTreeMap<String, (String, Vec<String>)>,
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whole-word, case-insensitive occurrence of `needle` in `hay`. Both
/// arguments must already be normalized with [`name_key`].
fn mentions(hay: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let mut from = 0;
    while let Some(off) = hay[from..].find(needle) {
        let start = from + off;
        let end = start + needle.len();
        let before_ok = hay[..start].chars().next_back().is_none_or(|c| !is_word(c));
        let after_ok = hay[end..].chars().next().is_none_or(|c| !is_word(c));
        if before_ok && after_ok {
            return true;
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    false
}

/// Parses a rubric document and resolves anchors against `schema`.
/// Statements without an explicit `anchors` array are anchored to every
/// declared entity or relationship their description names as a whole word.
pub fn load_rubrics(text: &str, schema: &EerdSchema) -> Result<RubricPackage, RubricError> {
    let doc: RubricDocument = serde_json::from_str(text)?;
    if doc.problem_statements.is_empty() {
        return Err(RubricError::Empty);
    }
    let entities: BTreeMap<_, _> = schema
        .entities
        .iter()
        .map(|e| (name_key(&e.name), e.name.clone()))
        .collect();
    let relationships: BTreeMap<_, _> = schema
        .relationships
        .iter()
        .map(|r| {
            let parts = r.participants.iter().map(|p| name_key(&p.entity)).collect();
            (name_key(&r.name), (r.name.clone(), parts))
        })
        .collect();
    let declared: Vec<(String, &str)> = schema
        .entities
        .iter()
        .map(|e| (name_key(&e.name), e.name.as_str()))
        .chain(schema.relationships.iter().map(|r| (name_key(&r.name), r.name.as_str())))
        .collect();

    let mut statements = Vec::with_capacity(doc.problem_statements.len());
    for (index, mut st) in doc.problem_statements.into_iter().enumerate() {
        if st.rubrics.is_empty() {
            return Err(RubricError::NoRubrics { index });
        }
        if st.anchors.is_empty() {
            let desc = name_key(&st.description);
            st.anchors = declared
                .iter()
                .filter(|(k, _)| mentions(&desc, k))
                .map(|(_, n)| n.to_string())
                .collect();
        } else {
            let mut resolved = Vec::with_capacity(st.anchors.len());
            for a in &st.anchors {
                let k = name_key(a);
                let canonical = declared
                    .iter()
                    .find(|(dk, _)| *dk == k)
                    .ok_or_else(|| RubricError::UnresolvedAnchor { index, name: a.clone() })?;
                if !resolved.iter().any(|r: &String| name_key(r) == k) {
                    resolved.push(canonical.1.to_string());
                }
            }
            st.anchors = resolved;
        }
        if st.anchors.is_empty() {
            return Err(RubricError::NoAnchors { index });
        }
        statements.push(st);
    }
    Ok(RubricPackage {
        schema_name: schema.name.clone(),
        statements,
        entities,
        relationships,
    })
}

impl RubricPackage {
    fn is_anchored_to(st: &ProblemStatement, key: &str) -> bool {
        st.anchors.iter().any(|a| name_key(a) == key)
    }

    /// Statements anchored to `focal`, plus, for a relationship focal,
    /// statements anchored to one of its participants that do not anchor
    /// some other relationship. Document order, no duplicates.
    pub fn relevant_statements(&self, focal: &str) -> Result<Vec<&ProblemStatement>, RubricError> {
        let key = name_key(focal);
        let participants: &[String] = match self.relationships.get(&key) {
            Some((_, parts)) => parts,
            None if self.entities.contains_key(&key) => &[],
            None => return Err(RubricError::UnknownFocal(focal.to_string())),
        };
        Ok(self
            .statements
            .iter()
            .filter(|st| {
                if Self::is_anchored_to(st, &key) {
                    return true;
                }
                let via_participant = participants.iter().any(|p| Self::is_anchored_to(st, p));
                let other_relationship = st.anchors.iter().any(|a| {
                    let k = name_key(a);
                    k != key && self.relationships.contains_key(&k)
                });
                via_participant && !other_relationship
            })
            .collect())
    }

    /// Union of [`relevant_statements`](Self::relevant_statements) over
    /// several focals, in document order. Unknown focals contribute nothing.
    pub fn relevant_for<'a>(&self, focals: impl IntoIterator<Item = &'a str>) -> Vec<&ProblemStatement> {
        let mut keep = vec![false; self.statements.len()];
        for focal in focals {
            for st in self.relevant_statements(focal).unwrap_or_default() {
                if let Some(i) = self.statements.iter().position(|s| std::ptr::eq(s, st)) {
                    keep[i] = true;
                }
            }
        }
        self.statements.iter().zip(keep).filter(|(_, k)| *k).map(|(s, _)| s).collect()
    }

    /// Whether `name` is an entity or relationship some statement anchors.
    pub fn is_anchored(&self, name: &str) -> bool {
        let key = name_key(name);
        self.statements.iter().any(|st| Self::is_anchored_to(st, &key))
    }

    /// Position of the first statement anchored to `name`.
    pub fn first_statement_for(&self, name: &str) -> Option<usize> {
        let key = name_key(name);
        self.statements.iter().position(|st| Self::is_anchored_to(st, &key))
    }

    /// Serializes back to the `problem-statements` document form with
    /// resolved anchors made explicit.
    pub fn to_document(&self) -> String {
        serde_json::json!({ "problem-statements": self.statements }).to_string()
    }
}

/// Plain-text rendering of statements for prompt slots that sit inside a
/// quoted string. Double quotes become single quotes.
pub fn render_statements(statements: &[&ProblemStatement]) -> String {
    statements
        .iter()
        .map(|st| {
            let mut s = st.description.trim().to_string();
            for r in &st.rubrics {
                s.push(' ');
                s.push_str(r.trim());
            }
            s
        })
        .collect::<Vec<_>>()
        .join(" ")
        .replace('"', "'")
}
