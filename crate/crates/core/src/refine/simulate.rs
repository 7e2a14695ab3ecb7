use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::category::MistakeCategory;
use crate::forge::MistakenVariant;
use crate::model::{name_key, EerdSchema};
use crate::oracle::Polarity;
use crate::rubric::RubricPackage;

use super::editors::mistake_sentence;
use super::{tag, Trace, TraceKind};

/// Offline stand-in for the base model. Produces tagged traces that miss,
/// invent, confirm and repeat claims at the configured rates, in shuffled
/// order, deterministically per (seed, variant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatedBaseModel {
    pub seed: u64,
    pub miss_rate: f64,
    pub hallucination_rate: f64,
    pub confirm_rate: f64,
    pub repeat_rate: f64,
}

impl Default for SimulatedBaseModel {
    fn default() -> Self {
        SimulatedBaseModel {
            seed: 0,
            miss_rate: 0.3,
            hallucination_rate: 0.4,
            confirm_rate: 0.5,
            repeat_rate: 0.25,
        }
    }
}

impl SimulatedBaseModel {
    pub fn generate(&self, variant: &MistakenVariant, reference: &EerdSchema, rubrics: &RubricPackage, kind: TraceKind) -> Trace {
        let salt = match kind {
            TraceKind::Reasoning => 0x5eed_0001,
            TraceKind::Feedback => 0x5eed_0002,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ variant.seed.rotate_left(17) ^ variant.variant_id.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt,
        );
        let mut sentences = Vec::new();

        for m in &variant.mistakes {
            if !rng.random_bool(self.miss_rate.clamp(0.0, 1.0)) {
                sentences.push(tag(m.category, &m.focal, Polarity::ErrorFound, &mistake_sentence(m)));
            }
        }

        let flagged: Vec<String> = variant.mistakes.iter().map(|m| name_key(&m.focal)).collect();
        let elements: Vec<&str> = reference
            .entities
            .iter()
            .map(|e| e.name.as_str())
            .chain(reference.relationships.iter().map(|r| r.name.as_str()))
            .collect();

        if rng.random_bool(self.hallucination_rate.clamp(0.0, 1.0)) {
            let truth: Vec<(MistakeCategory, String)> =
                variant.mistakes.iter().map(|m| (m.category, name_key(&m.focal))).collect();
            for _ in 0..8 {
                let cat = *MistakeCategory::ALL.choose(&mut rng).expect("non-empty");
                let Some(&focal) = elements.choose(&mut rng) else { break };
                if !truth.contains(&(cat, name_key(focal))) {
                    let s = format!("{focal} seems to have a problem with {}.", cat.label().to_lowercase());
                    sentences.push(tag(cat, focal, Polarity::ErrorFound, &s));
                    break;
                }
            }
        }

        for e in &reference.entities {
            if rubrics.is_anchored(&e.name)
                && !flagged.contains(&name_key(&e.name))
                && rng.random_bool(self.confirm_rate.clamp(0.0, 1.0))
            {
                let s = format!("{} is correctly modeled as a {} entity.", e.name, e.kind);
                sentences.push(tag(MistakeCategory::EntityType, &e.name, Polarity::ConfirmedCorrect, &s));
            }
        }

        if !sentences.is_empty() && rng.random_bool(self.repeat_rate.clamp(0.0, 1.0)) {
            let again = sentences[rng.random_range(0..sentences.len())].clone();
            sentences.push(again);
        }
        sentences.shuffle(&mut rng);

        let lead = match kind {
            TraceKind::Reasoning => "Let me check the submission against the problem statements.",
            TraceKind::Feedback => "Feedback on your submission:",
        };
        let text = std::iter::once(lead.to_string()).chain(sentences).collect::<Vec<_>>().join(" ");
        Trace::tagged(text, kind).expect("generated markup is well-formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::forge::{generate_corpus, CorpusPlan};

    #[test]
    fn deterministic_and_well_formed() {
        let schema = fixtures::hospital_schema();
        let rubrics = fixtures::hospital_rubrics();
        let corpus = generate_corpus(&schema, &CorpusPlan::new(10, 10, 10, 0, 3)).unwrap();
        let sim = SimulatedBaseModel::default();
        let mut imperfect = 0;
        for v in &corpus {
            let a = sim.generate(v, &schema, &rubrics, TraceKind::Reasoning);
            assert_eq!(a, sim.generate(v, &schema, &rubrics, TraceKind::Reasoning));
            assert!(a.text.starts_with("Let me check"));
            let errs = a.claims.iter().filter(|c| c.polarity == Polarity::ErrorFound).count();
            if errs != v.mistakes.len() {
                imperfect += 1;
            }
        }
        assert!(imperfect > 5, "simulation should leave room for refinement");
    }
}
