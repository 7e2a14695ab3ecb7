//! In-memory EERD schema: entities, attributes, relationships,
//! specializations and union categories.
//!
//! Parsing enforces only what a document needs to be *resolvable*
//! (unique names, resolving references, arity, composite shape). Semantic
//! rules such as "a strong entity has a key" are reported by
//! [`validate_structure`] instead, because deliberately mistaken variants
//! must still parse.

mod parse;
mod render;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use parse::{parse_schema, parse_schema_with, serialize_schema, ParseError, ParseMode, Parsed};
pub use render::{render_element, render_entity, render_schema, render_relationship, render_specialization, render_union};
pub use validate::{validate_structure, StructureViolation, ViolationRule};

/// Normalized lookup key for identifiers: escapes dropped, whitespace
/// collapsed, lower-cased. `Test\_Log` and `test_log` compare equal.
pub fn name_key(name: &str) -> String {
    let cleaned = name.replace('\\', "");
    cleaned
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

pub fn same_name(a: &str, b: &str) -> bool {
    name_key(a) == name_key(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    #[default]
    Simple,
    Composite,
    Multivalued,
    Derived,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyRole {
    #[default]
    None,
    Key,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationshipKind {
    Identifying,
    NonIdentifying,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cardinality {
    #[serde(rename = "1")]
    One,
    N,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Participation {
    Total,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Total,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disjointness {
    Disjoint,
    Overlapping,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(default)]
    pub kind: AttributeKind,
    #[serde(default)]
    pub key_role: KeyRole,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Attribute>,
}

impl Attribute {
    pub fn simple(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Simple,
            key_role: KeyRole::None,
            components: Vec::new(),
        }
    }

    pub fn key(name: impl Into<String>) -> Self {
        Self {
            key_role: KeyRole::Key,
            ..Self::simple(name)
        }
    }

    pub fn partial_key(name: impl Into<String>) -> Self {
        Self {
            key_role: KeyRole::Partial,
            ..Self::simple(name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub kind: EntityKind,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
}

impl Entity {
    pub fn has_key(&self) -> bool {
        self.attributes.iter().any(|a| a.key_role == KeyRole::Key)
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| same_name(&a.name, name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub entity: String,
    pub cardinality: Cardinality,
    pub participation: Participation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub name: String,
    pub kind: RelationshipKind,
    pub participants: Vec<Participant>,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
}

impl Relationship {
    pub fn is_ternary(&self) -> bool {
        self.participants.len() == 3
    }

    pub fn involves(&self, entity: &str) -> bool {
        self.participants.iter().any(|p| same_name(&p.entity, entity))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Specialization {
    pub supertype: String,
    pub subtypes: Vec<String>,
    pub completeness: Completeness,
    pub disjointness: Disjointness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionCategory {
    pub category: String,
    pub supertypes: Vec<String>,
    pub participation: Participation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EerdSchema {
    pub name: String,
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub relationships: Vec<Relationship>,
    #[serde(default)]
    pub specializations: Vec<Specialization>,
    #[serde(default)]
    pub unions: Vec<UnionCategory>,
}

/// What a focal identifier resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementRef<'a> {
    Entity(&'a Entity),
    Relationship(&'a Relationship),
}

impl EerdSchema {
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            entities: Vec::new(),
            relationships: Vec::new(),
            specializations: Vec::new(),
            unions: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relationships.is_empty()
    }

    pub fn entity(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| same_name(&e.name, name))
    }

    pub fn relationship(&self, name: &str) -> Option<&Relationship> {
        self.relationships.iter().find(|r| same_name(&r.name, name))
    }

    pub fn element(&self, name: &str) -> Option<ElementRef<'_>> {
        self.entity(name)
            .map(ElementRef::Entity)
            .or_else(|| self.relationship(name).map(ElementRef::Relationship))
    }

    pub fn has_ternary(&self) -> bool {
        self.relationships.iter().any(Relationship::is_ternary)
    }

    pub fn entity_names(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.name.as_str())
    }

    pub fn relationship_names(&self) -> impl Iterator<Item = &str> {
        self.relationships.iter().map(|r| r.name.as_str())
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Strong => "strong",
            EntityKind::Weak => "weak",
        })
    }
}

impl fmt::Display for RelationshipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelationshipKind::Identifying => "identifying",
            RelationshipKind::NonIdentifying => "non_identifying",
        })
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cardinality::One => "1",
            Cardinality::N => "N",
            Cardinality::M => "M",
        })
    }
}

impl fmt::Display for Participation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Participation::Total => "total",
            Participation::Partial => "partial",
        })
    }
}

impl fmt::Display for Completeness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Completeness::Total => "total",
            Completeness::Partial => "partial",
        })
    }
}

impl fmt::Display for Disjointness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Disjointness::Disjoint => "disjoint",
            Disjointness::Overlapping => "overlapping",
        })
    }
}
