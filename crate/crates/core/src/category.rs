//! The eleven mistake categories and their stable string codes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MistakeCategory {
    KeyAttribute,
    TotalParticipation,
    TernaryRelationship,
    SpecializationUnion,
    Cardinality,
    RelationshipParticipants,
    AttributeType,
    Attribute,
    EntityType,
    InvalidRelationship,
    RelationshipType,
}

impl MistakeCategory {
    /// Table row order.
    pub const ALL: [MistakeCategory; 11] = [
        MistakeCategory::KeyAttribute,
        MistakeCategory::TotalParticipation,
        MistakeCategory::TernaryRelationship,
        MistakeCategory::SpecializationUnion,
        MistakeCategory::Cardinality,
        MistakeCategory::RelationshipParticipants,
        MistakeCategory::AttributeType,
        MistakeCategory::Attribute,
        MistakeCategory::EntityType,
        MistakeCategory::InvalidRelationship,
        MistakeCategory::RelationshipType,
    ];

    /// Diff precedence, highest first. When one edit disturbs several
    /// aspects of an element only the highest-ranked category is reported.
    pub const PRECEDENCE: [MistakeCategory; 11] = [
        MistakeCategory::EntityType,
        MistakeCategory::KeyAttribute,
        MistakeCategory::RelationshipType,
        MistakeCategory::TernaryRelationship,
        MistakeCategory::RelationshipParticipants,
        MistakeCategory::Cardinality,
        MistakeCategory::TotalParticipation,
        MistakeCategory::SpecializationUnion,
        MistakeCategory::AttributeType,
        MistakeCategory::Attribute,
        MistakeCategory::InvalidRelationship,
    ];

    pub fn code(self) -> &'static str {
        match self {
            MistakeCategory::KeyAttribute => "key_attribute",
            MistakeCategory::TotalParticipation => "total_participation",
            MistakeCategory::TernaryRelationship => "ternary_relationship",
            MistakeCategory::SpecializationUnion => "specialization_union",
            MistakeCategory::Cardinality => "cardinality",
            MistakeCategory::RelationshipParticipants => "relationship_participants",
            MistakeCategory::AttributeType => "attribute_type",
            MistakeCategory::Attribute => "attribute",
            MistakeCategory::EntityType => "entity_type",
            MistakeCategory::InvalidRelationship => "invalid_relationship",
            MistakeCategory::RelationshipType => "relationship_type",
        }
    }

    /// Human-readable row label.
    pub fn label(self) -> &'static str {
        match self {
            MistakeCategory::KeyAttribute => "Key Attribute",
            MistakeCategory::TotalParticipation => "Total Participation",
            MistakeCategory::TernaryRelationship => "Ternary Relationship",
            MistakeCategory::SpecializationUnion => "Specialization/Union",
            MistakeCategory::Cardinality => "Cardinality",
            MistakeCategory::RelationshipParticipants => "Relationship Participants",
            MistakeCategory::AttributeType => "Attribute Type",
            MistakeCategory::Attribute => "Attribute",
            MistakeCategory::EntityType => "Entity Type",
            MistakeCategory::InvalidRelationship => "Invalid Relationship",
            MistakeCategory::RelationshipType => "Relationship Type",
        }
    }

    /// Lower index wins.
    pub fn precedence(self) -> usize {
        Self::PRECEDENCE.iter().position(|c| *c == self).unwrap_or(usize::MAX)
    }

    /// Best-effort category for free text, such as a judge's claim phrase.
    /// Falls back to `invalid_relationship` when no cue matches.
    pub fn classify_text(text: &str) -> MistakeCategory {
        let t = text.to_lowercase();
        let has = |cues: &[&str]| cues.iter().any(|c| t.contains(c));
        if let Ok(c) = t.trim().parse() {
            return c;
        }
        if has(&["weak entity", "strong entity", "entity type"]) {
            MistakeCategory::EntityType
        } else if has(&["key"]) {
            MistakeCategory::KeyAttribute
        } else if has(&["identifying"]) {
            MistakeCategory::RelationshipType
        } else if has(&["ternary"]) {
            MistakeCategory::TernaryRelationship
        } else if has(&["participant", "connects", "between"]) {
            MistakeCategory::RelationshipParticipants
        } else if has(&["cardinality", "1:n", "m:n", "one-to-many", "many-to-many", "many to many"]) {
            MistakeCategory::Cardinality
        } else if has(&["participation", "totally", "partial"]) {
            MistakeCategory::TotalParticipation
        } else if has(&["specialization", "union", "subtype", "supertype", "disjoint", "overlapping"]) {
            MistakeCategory::SpecializationUnion
        } else if has(&["multivalued", "composite", "derived", "simple attribute"]) {
            MistakeCategory::AttributeType
        } else if has(&["attribute"]) {
            MistakeCategory::Attribute
        } else {
            MistakeCategory::InvalidRelationship
        }
    }
}

impl fmt::Display for MistakeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mistake category `{0}`")]
pub struct UnknownCategory(pub String);

impl FromStr for MistakeCategory {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace([' ', '-', '/'], "_");
        Self::ALL
            .into_iter()
            .find(|c| c.code() == norm)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}
