//! One-line textual renderings of schema elements, used in mistake records
//! and finding evidence.

use super::{
    same_name, Attribute, AttributeKind, EerdSchema, Entity, KeyRole, Relationship, Specialization,
    UnionCategory,
};

fn render_attribute(a: &Attribute) -> String {
    let mut s = match a.kind {
        AttributeKind::Simple => a.name.clone(),
        AttributeKind::Multivalued => format!("{{{}}}", a.name),
        AttributeKind::Derived => format!("/{}", a.name),
        AttributeKind::Composite => format!(
            "{}({})",
            a.name,
            a.components.iter().map(render_attribute).collect::<Vec<_>>().join(", ")
        ),
    };
    match a.key_role {
        KeyRole::None => {}
        KeyRole::Key => s.push_str(" (key)"),
        KeyRole::Partial => s.push_str(" (partial key)"),
    }
    s
}

fn render_attributes(attrs: &[Attribute]) -> String {
    attrs.iter().map(render_attribute).collect::<Vec<_>>().join(", ")
}

pub fn render_entity(e: &Entity) -> String {
    format!("entity {} [{}]: {}", e.name, e.kind, render_attributes(&e.attributes))
}

pub fn render_relationship(r: &Relationship) -> String {
    let parts = r
        .participants
        .iter()
        .map(|p| format!("{} ({}, {})", p.entity, p.cardinality, p.participation))
        .collect::<Vec<_>>()
        .join(", ");
    let mut s = format!("relationship {} [{}]: {}", r.name, r.kind, parts);
    if !r.attributes.is_empty() {
        s.push_str("; attributes: ");
        s.push_str(&render_attributes(&r.attributes));
    }
    s
}

pub fn render_specialization(s: &Specialization) -> String {
    format!(
        "specialization {} -> {{{}}} [{}, {}]",
        s.supertype,
        s.subtypes.join(", "),
        s.completeness,
        s.disjointness
    )
}

pub fn render_union(u: &UnionCategory) -> String {
    format!(
        "union {} = {{{}}} [{}]",
        u.category,
        u.supertypes.join(", "),
        u.participation
    )
}

/// Whole schema as one line per element joined by `; `, for prompt slots
/// that expect text rather than a nested document.
pub fn render_schema(schema: &EerdSchema) -> String {
    schema
        .entities
        .iter()
        .map(render_entity)
        .chain(schema.relationships.iter().map(render_relationship))
        .chain(schema.specializations.iter().map(render_specialization))
        .chain(schema.unions.iter().map(render_union))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Renders everything the schema declares about `focal`: the entity or
/// relationship itself plus any specialization or union it heads.
pub fn render_element(schema: &EerdSchema, focal: &str) -> Option<String> {
    let mut lines = Vec::new();
    if let Some(e) = schema.entity(focal) {
        lines.push(render_entity(e));
    }
    if let Some(r) = schema.relationship(focal) {
        lines.push(render_relationship(r));
    }
    lines.extend(
        schema
            .specializations
            .iter()
            .filter(|s| same_name(&s.supertype, focal))
            .map(render_specialization),
    );
    lines.extend(
        schema
            .unions
            .iter()
            .filter(|u| same_name(&u.category, focal))
            .map(render_union),
    );
    (!lines.is_empty()).then(|| lines.join("; "))
}
