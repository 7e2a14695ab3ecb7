use serde::{Deserialize, Serialize};

use crate::forge::MistakeRecord;
use crate::model::name_key;

use super::Finding;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Category and focal element must both agree.
    #[default]
    Strict,
    /// Category alone must agree; any focal within the variant counts.
    CategoryLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub findings: Vec<Finding>,
    pub matched: Vec<(MistakeRecord, Finding)>,
    pub missed: Vec<MistakeRecord>,
    pub hallucinated: Vec<Finding>,
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
}

fn same_site(f: &Finding, t: &MistakeRecord) -> bool {
    f.category == t.category && name_key(&f.focal) == name_key(&t.focal)
}

/// Pairs each truth record with at most one error finding. Compatibility
/// in either mode is an equivalence relation, so taking the first free
/// compatible finding per truth yields a maximum matching.
///
/// Unmatched error findings are hallucinated, as is any confirmation that
/// asserts correct exactly the (category, focal) a truth record says is wrong.
pub fn match_findings(findings: &[Finding], truth: &[MistakeRecord], mode: MatchMode) -> DiagnosticReport {
    let compatible = |f: &Finding, t: &MistakeRecord| match mode {
        MatchMode::Strict => same_site(f, t),
        MatchMode::CategoryLevel => f.category == t.category,
    };
    let mut used = vec![false; findings.len()];
    let mut matched = Vec::new();
    let mut missed = Vec::new();
    for t in truth {
        let hit = findings
            .iter()
            .enumerate()
            .position(|(i, f)| !used[i] && f.is_error() && compatible(f, t));
        match hit {
            Some(i) => {
                used[i] = true;
                matched.push((t.clone(), findings[i].clone()));
            }
            None => missed.push(t.clone()),
        }
    }
    let hallucinated: Vec<Finding> = findings
        .iter()
        .enumerate()
        .filter(|(i, f)| {
            if f.is_error() {
                !used[*i]
            } else {
                truth.iter().any(|t| same_site(f, t))
            }
        })
        .map(|(_, f)| f.clone())
        .collect();
    DiagnosticReport {
        findings: findings.to_vec(),
        tp: matched.len(),
        fn_: missed.len(),
        fp: hallucinated.len(),
        matched,
        missed,
        hallucinated,
    }
}
