use std::collections::HashSet;

use serde_json::Value;
use thiserror::Error;

use super::{name_key, Attribute, AttributeKind, EerdSchema};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown field `{path}`")]
    UnknownField { path: String },
    #[error("`{name}` referenced by {context} is not a declared entity")]
    Reference { name: String, context: String },
    #[error("invariant `{rule}` violated by {element}")]
    Invariant { rule: &'static str, element: String },
}

/// Unknown fields are rejected in `Strict` mode and reported as warnings in
/// `Lenient` mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub schema: EerdSchema,
    pub warnings: Vec<String>,
}

pub fn parse_schema(text: &str) -> Result<EerdSchema, ParseError> {
    parse_schema_with(text, ParseMode::Strict).map(|p| p.schema)
}

pub fn parse_schema_with(text: &str, mode: ParseMode) -> Result<Parsed, ParseError> {
    let syntax = |e: serde_json::Error| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let value: Value = serde_json::from_str(text).map_err(syntax)?;
    let mut unknown = Vec::new();
    collect_unknown(&value, Shape::Schema, "", &mut unknown);
    let warnings = match (mode, unknown.first()) {
        (ParseMode::Strict, Some(first)) => {
            return Err(ParseError::UnknownField { path: first.clone() })
        }
        _ => unknown
            .into_iter()
            .map(|p| format!("ignored unknown field `{p}`"))
            .collect(),
    };
    let schema: EerdSchema = serde_json::from_str(text).map_err(syntax)?;
    schema.check_invariants()?;
    Ok(Parsed { schema, warnings })
}

/// Canonical pretty-printed document. Field order is fixed by the type
/// definitions, so equal schemas serialize to identical bytes.
pub fn serialize_schema(schema: &EerdSchema) -> String {
    serde_json::to_string_pretty(schema).expect("schema serialization is infallible")
}

#[derive(Clone, Copy)]
enum Shape {
    Schema,
    Entity,
    Attribute,
    Relationship,
    Participant,
    Specialization,
    Union,
}

impl Shape {
    fn fields(self) -> &'static [&'static str] {
        match self {
            Shape::Schema => &["name", "entities", "relationships", "specializations", "unions"],
            Shape::Entity => &["name", "kind", "attributes"],
            Shape::Attribute => &["name", "kind", "key_role", "components"],
            Shape::Relationship => &["name", "kind", "participants", "attributes"],
            Shape::Participant => &["entity", "cardinality", "participation"],
            Shape::Specialization => &["supertype", "subtypes", "completeness", "disjointness"],
            Shape::Union => &["category", "supertypes", "participation"],
        }
    }

    fn child(self, field: &str) -> Option<Shape> {
        match (self, field) {
            (Shape::Schema, "entities") => Some(Shape::Entity),
            (Shape::Schema, "relationships") => Some(Shape::Relationship),
            (Shape::Schema, "specializations") => Some(Shape::Specialization),
            (Shape::Schema, "unions") => Some(Shape::Union),
            (Shape::Entity | Shape::Relationship, "attributes") => Some(Shape::Attribute),
            (Shape::Attribute, "components") => Some(Shape::Attribute),
            (Shape::Relationship, "participants") => Some(Shape::Participant),
            _ => None,
        }
    }
}

fn collect_unknown(value: &Value, shape: Shape, path: &str, out: &mut Vec<String>) {
    let Value::Object(map) = value else { return };
    for (key, v) in map {
        let here = if path.is_empty() {
            key.clone()
        } else {
            format!("{path}.{key}")
        };
        if !shape.fields().contains(&key.as_str()) {
            out.push(here);
            continue;
        }
        if let (Some(child), Value::Array(items)) = (shape.child(key), v) {
            for (i, item) in items.iter().enumerate() {
                collect_unknown(item, child, &format!("{here}[{i}]"), out);
            }
        }
    }
}

fn invariant(rule: &'static str, element: impl Into<String>) -> ParseError {
    ParseError::Invariant {
        rule,
        element: element.into(),
    }
}

fn check_attributes(owner: &str, attrs: &[Attribute]) -> Result<(), ParseError> {
    let mut seen = HashSet::new();
    for a in attrs {
        let where_ = format!("{owner}.{}", a.name);
        if name_key(&a.name).is_empty() {
            return Err(invariant("non-empty-name", where_));
        }
        if !seen.insert(name_key(&a.name)) {
            return Err(invariant("unique-attribute-name", where_));
        }
        match (a.kind, a.components.len()) {
            (AttributeKind::Composite, n) if n < 2 => {
                return Err(invariant("composite-has-two-components", where_))
            }
            (AttributeKind::Composite, _) => check_attributes(&where_, &a.components)?,
            (_, 0) => {}
            (_, _) => return Err(invariant("components-only-on-composite", where_)),
        }
    }
    Ok(())
}

impl EerdSchema {
    /// Checks the invariants every parsed schema satisfies.
    pub fn check_invariants(&self) -> Result<(), ParseError> {
        let mut names = HashSet::new();
        for e in &self.entities {
            if name_key(&e.name).is_empty() {
                return Err(invariant("non-empty-name", "entity"));
            }
            if !names.insert(name_key(&e.name)) {
                return Err(invariant("unique-element-name", format!("entity {}", e.name)));
            }
            check_attributes(&e.name, &e.attributes)?;
        }
        let declared = |name: &str, context: String| {
            if self.entity(name).is_some() {
                Ok(())
            } else {
                Err(ParseError::Reference {
                    name: name.to_string(),
                    context,
                })
            }
        };
        for r in &self.relationships {
            if name_key(&r.name).is_empty() {
                return Err(invariant("non-empty-name", "relationship"));
            }
            if !names.insert(name_key(&r.name)) {
                return Err(invariant(
                    "unique-element-name",
                    format!("relationship {}", r.name),
                ));
            }
            if !(2..=3).contains(&r.participants.len()) {
                return Err(invariant(
                    "binary-or-ternary",
                    format!("relationship {}", r.name),
                ));
            }
            for p in &r.participants {
                declared(&p.entity, format!("relationship {}", r.name))?;
            }
            check_attributes(&r.name, &r.attributes)?;
        }
        for s in &self.specializations {
            let ctx = format!("specialization of {}", s.supertype);
            declared(&s.supertype, ctx.clone())?;
            if s.subtypes.is_empty() {
                return Err(invariant("specialization-has-subtype", ctx));
            }
            let mut seen = HashSet::from([name_key(&s.supertype)]);
            for sub in &s.subtypes {
                declared(sub, ctx.clone())?;
                if !seen.insert(name_key(sub)) {
                    return Err(invariant("distinct-subtypes", ctx));
                }
            }
        }
        for u in &self.unions {
            let ctx = format!("union {}", u.category);
            declared(&u.category, ctx.clone())?;
            if u.supertypes.len() < 2 {
                return Err(invariant("union-has-two-supertypes", ctx));
            }
            let mut seen = HashSet::from([name_key(&u.category)]);
            for sup in &u.supertypes {
                declared(sup, ctx.clone())?;
                if !seen.insert(name_key(sup)) {
                    return Err(invariant("distinct-supertypes", ctx));
                }
            }
        }
        Ok(())
    }
}
