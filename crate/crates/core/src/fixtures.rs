//! Bundled reference schemas, rubric packages and the progressive
//! hospital variants.

use crate::category::MistakeCategory;
use crate::forge::{MistakeRecord, Split};
use crate::model::{parse_schema, render_element, EerdSchema};
use crate::rubric::{load_rubrics, RubricPackage};

/// Names of the bundled schemas. `hospital` is the held-out test schema.
pub const SCHEMAS: [&str; 4] = ["company", "university", "airport", "hospital"];

pub fn schema_text(name: &str) -> &'static str {
    match name {
        "company" => include_str!("../fixtures/company.schema.json"),
        "university" => include_str!("../fixtures/university.schema.json"),
        "airport" => include_str!("../fixtures/airport.schema.json"),
        "hospital" => include_str!("../fixtures/hospital.schema.json"),
        other => panic!("no bundled schema named {other}"),
    }
}

pub fn rubric_text(name: &str) -> &'static str {
    match name {
        "company" => include_str!("../fixtures/company.rubrics.json"),
        "university" => include_str!("../fixtures/university.rubrics.json"),
        "airport" => include_str!("../fixtures/airport.rubrics.json"),
        "hospital" => include_str!("../fixtures/hospital.rubrics.json"),
        other => panic!("no bundled rubrics named {other}"),
    }
}

pub fn split_of(name: &str) -> Split {
    if name == "hospital" {
        Split::Test
    } else {
        Split::Train
    }
}

/// Panics if a bundled fixture fails to parse; the unit tests guard that.
pub fn schema(name: &str) -> EerdSchema {
    parse_schema(schema_text(name)).expect("bundled schema parses")
}

pub fn rubrics(name: &str) -> RubricPackage {
    load_rubrics(rubric_text(name), &schema(name)).expect("bundled rubrics load")
}

pub fn hospital_schema() -> EerdSchema {
    schema("hospital")
}

pub fn hospital_rubrics() -> RubricPackage {
    rubrics("hospital")
}

const PROGRESSION: [&str; 5] = [
    include_str!("../fixtures/hospital_mistake0.schema.json"),
    include_str!("../fixtures/hospital_mistake1.schema.json"),
    include_str!("../fixtures/hospital_mistake2.schema.json"),
    include_str!("../fixtures/hospital_mistake3.schema.json"),
    include_str!("../fixtures/hospital_mistake4.schema.json"),
];

/// Cumulative edits applied to `test_log` and its participants, one per step.
const STEPS: [(MistakeCategory, &str, &str); 4] = [
    (
        MistakeCategory::TotalParticipation,
        "test_log",
        "participation of test in test_log changed from total to partial",
    ),
    (MistakeCategory::KeyAttribute, "test", "test_id is no longer marked as the key of test"),
    (MistakeCategory::KeyAttribute, "patients", "ss is no longer marked as the key of patients"),
    (
        MistakeCategory::RelationshipType,
        "test_log",
        "test_log is marked identifying instead of non_identifying",
    ),
];

/// Hospital variants with 0 through 4 accumulated mistakes and their
/// ground truth.
pub fn hospital_progression() -> Vec<(EerdSchema, Vec<MistakeRecord>)> {
    let schemas: Vec<EerdSchema> = PROGRESSION
        .iter()
        .map(|t| parse_schema(t).expect("bundled variant parses"))
        .collect();
    (0..schemas.len())
        .map(|n| {
            let truth = STEPS[..n]
                .iter()
                .enumerate()
                .map(|(i, (cat, focal, desc))| MistakeRecord {
                    category: *cat,
                    focal: focal.to_string(),
                    original: render_element(&schemas[i], focal).unwrap_or_default(),
                    modified: render_element(&schemas[i + 1], focal).unwrap_or_default(),
                    description: desc.to_string(),
                })
                .collect();
            (schemas[n].clone(), truth)
        })
        .collect()
}
