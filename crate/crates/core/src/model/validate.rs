use std::fmt;

use serde::{Deserialize, Serialize};

use super::{same_name, EerdSchema, EntityKind, KeyRole, Participation, RelationshipKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationRule {
    MissingKey,
    WeakEntityHasKey,
    PartialKeyOnStrong,
    WeakWithoutIdentifying,
    WeakEntityTotalParticipation,
    IdentifyingBetweenStrong,
    IdentifyingWithoutOwner,
    DanglingReference,
}

impl ViolationRule {
    pub fn code(self) -> &'static str {
        match self {
            ViolationRule::MissingKey => "missing-key",
            ViolationRule::WeakEntityHasKey => "weak-entity-has-key",
            ViolationRule::PartialKeyOnStrong => "partial-key-on-strong",
            ViolationRule::WeakWithoutIdentifying => "weak-without-identifying",
            ViolationRule::WeakEntityTotalParticipation => "weak-entity-total-participation",
            ViolationRule::IdentifyingBetweenStrong => "identifying-between-strong",
            ViolationRule::IdentifyingWithoutOwner => "identifying-without-owner",
            ViolationRule::DanglingReference => "dangling-reference",
        }
    }
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureViolation {
    pub rule: ViolationRule,
    pub element: String,
    pub detail: String,
}

/// Subtypes and union categories take their identity from their
/// supertypes and need no key of their own.
fn inherits_identity(schema: &EerdSchema, name: &str) -> bool {
    schema
        .specializations
        .iter()
        .any(|s| s.subtypes.iter().any(|t| same_name(t, name)))
        || schema.unions.iter().any(|u| same_name(&u.category, name))
}

/// Every violation of the built-in structural rule set, in declaration
/// order. An empty list means the schema is structurally sound.
pub fn validate_structure(schema: &EerdSchema) -> Vec<StructureViolation> {
    let mut out = Vec::new();
    let mut push = |rule, element: &str, detail: String| {
        out.push(StructureViolation {
            rule,
            element: element.to_string(),
            detail,
        })
    };

    for e in &schema.entities {
        let keys = e.attributes.iter().filter(|a| a.key_role == KeyRole::Key);
        let partials = e.attributes.iter().filter(|a| a.key_role == KeyRole::Partial);
        match e.kind {
            EntityKind::Strong => {
                if !e.has_key() && !inherits_identity(schema, &e.name) {
                    push(ViolationRule::MissingKey, &e.name, format!("strong entity {} has no key attribute", e.name));
                }
                for a in partials {
                    push(
                        ViolationRule::PartialKeyOnStrong,
                        &e.name,
                        format!("{} is a partial key on strong entity {}", a.name, e.name),
                    );
                }
            }
            EntityKind::Weak => {
                for a in keys {
                    push(
                        ViolationRule::WeakEntityHasKey,
                        &e.name,
                        format!("weak entity {} declares key {}", e.name, a.name),
                    );
                }
                let identifying: Vec<_> = schema
                    .relationships
                    .iter()
                    .filter(|r| r.kind == RelationshipKind::Identifying && r.involves(&e.name))
                    .collect();
                if identifying.is_empty() {
                    push(
                        ViolationRule::WeakWithoutIdentifying,
                        &e.name,
                        format!("weak entity {} has no identifying relationship", e.name),
                    );
                }
                for r in identifying {
                    let partial = r
                        .participants
                        .iter()
                        .filter(|p| same_name(&p.entity, &e.name))
                        .any(|p| p.participation == Participation::Partial);
                    if partial {
                        push(
                            ViolationRule::WeakEntityTotalParticipation,
                            &e.name,
                            format!("weak entity {} participates partially in identifying {}", e.name, r.name),
                        );
                    }
                }
            }
        }
    }

    for r in &schema.relationships {
        let mut has_weak = false;
        let mut has_strong = false;
        for p in &r.participants {
            match schema.entity(&p.entity) {
                None => push(
                    ViolationRule::DanglingReference,
                    &r.name,
                    format!("relationship {} references undeclared {}", r.name, p.entity),
                ),
                Some(e) if e.kind == EntityKind::Weak => has_weak = true,
                Some(_) => has_strong = true,
            }
        }
        if r.kind == RelationshipKind::Identifying {
            if !has_weak && has_strong {
                push(
                    ViolationRule::IdentifyingBetweenStrong,
                    &r.name,
                    format!("identifying relationship {} has no weak participant", r.name),
                );
            }
            if has_weak && !has_strong {
                push(
                    ViolationRule::IdentifyingWithoutOwner,
                    &r.name,
                    format!("identifying relationship {} has no strong owner", r.name),
                );
            }
        }
    }

    for s in &schema.specializations {
        for name in std::iter::once(&s.supertype).chain(&s.subtypes) {
            if schema.entity(name).is_none() {
                push(
                    ViolationRule::DanglingReference,
                    &s.supertype,
                    format!("specialization of {} references undeclared {name}", s.supertype),
                );
            }
        }
    }
    for u in &schema.unions {
        for name in std::iter::once(&u.category).chain(&u.supertypes) {
            if schema.entity(name).is_none() {
                push(
                    ViolationRule::DanglingReference,
                    &u.category,
                    format!("union {} references undeclared {name}", u.category),
                );
            }
        }
    }
    out
}
