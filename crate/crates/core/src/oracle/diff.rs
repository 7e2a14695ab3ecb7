use std::collections::BTreeSet;

use crate::category::MistakeCategory as C;
use crate::model::{
    name_key, render_entity, render_relationship, render_specialization, render_union, Attribute,
    EerdSchema, Relationship, Specialization,
};
use crate::rubric::RubricPackage;

use super::Finding;

fn evidence(expected: &str, submitted: &str) -> String {
    format!("expected: {expected} | submitted: {submitted}")
}

fn components_key(a: &Attribute) -> BTreeSet<(String, String)> {
    a.components
        .iter()
        .map(|c| (name_key(&c.name), format!("{:?}/{:?}", c.kind, c.key_role)))
        .collect()
}

/// Attribute divergences of one owner, matched by name so declaration
/// order does not matter. Key roles are skipped when `check_keys` is false.
fn diff_attributes(owner: &str, reference: &[Attribute], submitted: &[Attribute], check_keys: bool, out: &mut Vec<Finding>) {
    let find = |list: &[Attribute], name: &str| list.iter().find(|a| name_key(&a.name) == name_key(name)).cloned();
    for r in reference {
        let Some(s) = find(submitted, &r.name) else {
            out.push(Finding::error(C::Attribute, owner, format!("attribute {} of {owner} is missing", r.name)));
            continue;
        };
        if check_keys && r.key_role != s.key_role {
            out.push(Finding::error(
                C::KeyAttribute,
                owner,
                format!("{} of {owner} should have key role {:?}, not {:?}", r.name, r.key_role, s.key_role),
            ));
        }
        if r.kind != s.kind {
            out.push(Finding::error(
                C::AttributeType,
                owner,
                format!("{} of {owner} should be {:?}, not {:?}", r.name, r.kind, s.kind),
            ));
        } else if components_key(r) != components_key(&s) {
            out.push(Finding::error(C::Attribute, owner, format!("components of {} in {owner} differ", r.name)));
        }
    }
    for s in submitted {
        if find(reference, &s.name).is_none() {
            out.push(Finding::error(C::Attribute, owner, format!("attribute {} of {owner} is not expected", s.name)));
        }
    }
}

fn diff_relationship(r: &Relationship, s: &Relationship, out: &mut Vec<Finding>) {
    let name = r.name.as_str();
    let ev = evidence(&render_relationship(r), &render_relationship(s));
    let push = |out: &mut Vec<Finding>, cat, msg: String| {
        let mut f = Finding::error(cat, name, msg);
        f.evidence = ev.clone();
        out.push(f);
    };
    if r.kind != s.kind {
        push(out, C::RelationshipType, format!("{name} should be {}, not {}", r.kind, s.kind));
    }
    if r.participants.len() != s.participants.len() {
        push(
            out,
            C::TernaryRelationship,
            format!("{name} should relate {} entities, not {}", r.participants.len(), s.participants.len()),
        );
    } else {
        let changed: Vec<usize> = (0..r.participants.len())
            .filter(|&i| name_key(&r.participants[i].entity) != name_key(&s.participants[i].entity))
            .collect();
        if changed.len() >= 2 {
            push(out, C::InvalidRelationship, format!("{name} relates the wrong entities"));
        } else if let [i] = changed[..] {
            push(
                out,
                C::RelationshipParticipants,
                format!("{name} should involve {}, not {}", r.participants[i].entity, s.participants[i].entity),
            );
        }
        for (i, (rp, sp)) in r.participants.iter().zip(&s.participants).enumerate() {
            if changed.contains(&i) {
                continue;
            }
            if rp.cardinality != sp.cardinality {
                push(
                    out,
                    C::Cardinality,
                    format!("{} in {name} should have cardinality {}, not {}", rp.entity, rp.cardinality, sp.cardinality),
                );
            }
            if rp.participation != sp.participation {
                push(
                    out,
                    C::TotalParticipation,
                    format!("{} should participate {} in {name}, not {}", rp.entity, rp.participation, sp.participation),
                );
            }
        }
    }
    diff_attributes(name, &r.attributes, &s.attributes, true, out);
}

fn spec_key(s: &Specialization) -> (String, BTreeSet<String>) {
    (name_key(&s.supertype), s.subtypes.iter().map(|t| name_key(t)).collect())
}

/// Structural divergences of `submitted` from `reference`, one error finding
/// each, followed by a confirmation for every rubric-anchored element the
/// errors leave untouched. Output order follows the reference declaration
/// order, then elements only present in the submission.
pub fn diff_schemas(reference: &EerdSchema, submitted: &EerdSchema, rubrics: &RubricPackage) -> Vec<Finding> {
    let mut out = Vec::new();

    for r in &reference.entities {
        match submitted.entity(&r.name) {
            None => out.push(Finding::error(C::EntityType, &r.name, format!("entity {} is missing", r.name))),
            Some(s) => {
                let before = out.len();
                let kind_differs = r.kind != s.kind;
                if kind_differs {
                    out.push(Finding::error(
                        C::EntityType,
                        &r.name,
                        format!("{} should be a {} entity, not {}", r.name, r.kind, s.kind),
                    ));
                }
                diff_attributes(&r.name, &r.attributes, &s.attributes, !kind_differs, &mut out);
                let ev = evidence(&render_entity(r), &render_entity(s));
                for f in &mut out[before..] {
                    f.evidence = ev.clone();
                }
            }
        }
    }
    for s in &submitted.entities {
        if reference.entity(&s.name).is_none() {
            out.push(Finding::error(C::EntityType, &s.name, format!("entity {} is not expected", s.name)));
        }
    }

    for r in &reference.relationships {
        match submitted.relationship(&r.name) {
            None => out.push(Finding::error(C::InvalidRelationship, &r.name, format!("relationship {} is missing", r.name))),
            Some(s) => diff_relationship(r, s, &mut out),
        }
    }
    for s in &submitted.relationships {
        if reference.relationship(&s.name).is_none() {
            out.push(Finding::error(
                C::InvalidRelationship,
                &s.name,
                format!("relationship {} is not expected", s.name),
            ));
        }
    }

    for r in &reference.specializations {
        let key = spec_key(r);
        let focal = r.supertype.as_str();
        match submitted.specializations.iter().find(|s| spec_key(s) == key) {
            None => out.push(Finding::error(
                C::SpecializationUnion,
                focal,
                format!("specialization of {focal} into {} is missing", r.subtypes.join(", ")),
            )),
            Some(s) => {
                let ev = evidence(&render_specialization(r), &render_specialization(s));
                if r.completeness != s.completeness {
                    let mut f = Finding::error(
                        C::SpecializationUnion,
                        focal,
                        format!("specialization of {focal} should be {}, not {}", r.completeness, s.completeness),
                    );
                    f.evidence = ev.clone();
                    out.push(f);
                }
                if r.disjointness != s.disjointness {
                    let mut f = Finding::error(
                        C::SpecializationUnion,
                        focal,
                        format!("specialization of {focal} should be {}, not {}", r.disjointness, s.disjointness),
                    );
                    f.evidence = ev;
                    out.push(f);
                }
            }
        }
    }
    for s in &submitted.specializations {
        if !reference.specializations.iter().any(|r| spec_key(r) == spec_key(s)) {
            out.push(Finding::error(
                C::SpecializationUnion,
                &s.supertype,
                format!("specialization of {} into {} is not expected", s.supertype, s.subtypes.join(", ")),
            ));
        }
    }

    for r in &reference.unions {
        let focal = r.category.as_str();
        match submitted.unions.iter().find(|u| name_key(&u.category) == name_key(focal)) {
            None => out.push(Finding::error(C::SpecializationUnion, focal, format!("union {focal} is missing"))),
            Some(s) => {
                let ev = evidence(&render_union(r), &render_union(s));
                let rs: BTreeSet<_> = r.supertypes.iter().map(|t| name_key(t)).collect();
                let ss: BTreeSet<_> = s.supertypes.iter().map(|t| name_key(t)).collect();
                if rs != ss {
                    let mut f = Finding::error(
                        C::SpecializationUnion,
                        focal,
                        format!("union {focal} should include {}", r.supertypes.join(", ")),
                    );
                    f.evidence = ev.clone();
                    out.push(f);
                }
                if r.participation != s.participation {
                    let mut f = Finding::error(
                        C::SpecializationUnion,
                        focal,
                        format!("union {focal} participation should be {}, not {}", r.participation, s.participation),
                    );
                    f.evidence = ev;
                    out.push(f);
                }
            }
        }
    }
    for s in &submitted.unions {
        if !reference.unions.iter().any(|r| name_key(&r.category) == name_key(&s.category)) {
            out.push(Finding::error(C::SpecializationUnion, &s.category, format!("union {} is not expected", s.category)));
        }
    }

    let flagged: BTreeSet<String> = out.iter().map(|f| name_key(&f.focal)).collect();
    for e in &reference.entities {
        if rubrics.is_anchored(&e.name) && !flagged.contains(&name_key(&e.name)) {
            out.push(Finding::confirmed(C::EntityType, &e.name, format!("{} is correctly modeled as a {} entity", e.name, e.kind)));
        }
    }
    for r in &reference.relationships {
        if rubrics.is_anchored(&r.name) && !flagged.contains(&name_key(&r.name)) {
            out.push(Finding::confirmed(
                C::RelationshipType,
                &r.name,
                format!("{} is correctly modeled as {}", r.name, r.kind),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::MistakeCategory;
    use crate::fixtures;
    use crate::model::{Cardinality, Participation};

    fn errors(f: &[Finding]) -> Vec<(MistakeCategory, String)> {
        f.iter().filter(|f| f.is_error()).map(|f| (f.category, f.focal.clone())).collect()
    }

    #[test]
    fn identical_schemas_only_confirm() {
        let h = fixtures::hospital_schema();
        let pkg = fixtures::hospital_rubrics();
        let f = diff_schemas(&h, &h, &pkg);
        assert!(errors(&f).is_empty());
        assert_eq!(f.len(), 6);
    }

    #[test]
    fn participation_flip_is_one_finding() {
        let h = fixtures::hospital_schema();
        let mut s = h.clone();
        s.relationships[0].participants[1].participation = Participation::Partial;
        let f = diff_schemas(&h, &s, &fixtures::hospital_rubrics());
        assert_eq!(errors(&f), vec![(MistakeCategory::TotalParticipation, "test_log".to_string())]);
        assert!(f[0].evidence.contains("test (N, total)"));
    }

    #[test]
    fn entity_kind_flip_suppresses_key_findings() {
        let h = fixtures::schema("company");
        let mut s = h.clone();
        s.entities[3].kind = crate::model::EntityKind::Strong;
        s.entities[3].attributes[0].key_role = crate::model::KeyRole::Key;
        let f = diff_schemas(&h, &s, &fixtures::rubrics("company"));
        assert_eq!(errors(&f), vec![(MistakeCategory::EntityType, "DEPENDENT".to_string())]);
    }

    #[test]
    fn participant_changes() {
        let h = fixtures::hospital_schema();
        let rub = fixtures::hospital_rubrics();
        let mut one = h.clone();
        one.relationships[0].participants[0].entity = "doctors".into();
        one.relationships[0].participants[0].cardinality = Cardinality::One;
        assert_eq!(
            errors(&diff_schemas(&h, &one, &rub)),
            vec![(MistakeCategory::RelationshipParticipants, "test_log".to_string())]
        );
        let mut two = h.clone();
        two.relationships[0].participants[0].entity = "doctors".into();
        two.relationships[0].participants[1].entity = "patients".into();
        assert_eq!(
            errors(&diff_schemas(&h, &two, &rub)),
            vec![(MistakeCategory::InvalidRelationship, "test_log".to_string())]
        );
    }

    #[test]
    fn attribute_order_is_ignored() {
        let h = fixtures::hospital_schema();
        let mut s = h.clone();
        s.entities[0].attributes.reverse();
        assert!(errors(&diff_schemas(&h, &s, &fixtures::hospital_rubrics())).is_empty());
    }
}
