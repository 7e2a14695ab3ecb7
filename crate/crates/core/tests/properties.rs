use std::collections::BTreeSet;

use proptest::prelude::*;

use eerd_core::category::MistakeCategory;
use eerd_core::fixtures;
use eerd_core::forge::{generate_corpus, CorpusPlan, MistakeRecord};
use eerd_core::model::{
    name_key, parse_schema, serialize_schema, Attribute, AttributeKind, Cardinality, Completeness, Disjointness,
    EerdSchema, Entity, EntityKind, KeyRole, Participant, Participation, Relationship, RelationshipKind,
    Specialization, UnionCategory,
};
use eerd_core::oracle::{diff_schemas, match_findings, summarize, Finding, MatchMode, Polarity};
use eerd_core::refine::{
    extract_tagged, factual_audit, strip_markup, structural_reward, style_polish, tag, AuditConfig, ClaimEditor,
    ItemContext, OracleScorer, PolishConfig, Scorer, Trace, TraceKind,
};

fn attribute(prefix: String) -> impl Strategy<Value = Attribute> {
    (0..4u8, 0..3u8, "[a-z\u{e9}\u{4e2d} ]{0,5}").prop_map(move |(kind, key, suffix)| {
        let name = format!("{prefix}{suffix}");
        let kind = [AttributeKind::Simple, AttributeKind::Composite, AttributeKind::Multivalued, AttributeKind::Derived][kind as usize];
        Attribute {
            components: if kind == AttributeKind::Composite {
                vec![Attribute::simple(format!("{name}_first")), Attribute::simple(format!("{name}_last"))]
            } else {
                vec![]
            },
            key_role: [KeyRole::None, KeyRole::Key, KeyRole::Partial][key as usize],
            kind,
            name,
        }
    })
}

fn attributes(owner: usize, max: usize) -> impl Strategy<Value = Vec<Attribute>> {
    (0..=max).prop_flat_map(move |n| (0..n).map(|i| attribute(format!("a{owner}_{i}"))).collect::<Vec<_>>())
}

fn participant(n_entities: usize) -> impl Strategy<Value = (usize, Cardinality, Participation)> {
    (
        0..n_entities,
        prop::sample::select(vec![Cardinality::One, Cardinality::N, Cardinality::M]),
        prop::sample::select(vec![Participation::Total, Participation::Partial]),
    )
}

prop_compose! {
    fn schema()(n in 3usize..7)(
        kinds in prop::collection::vec(any::<bool>(), n),
        attrs in (0..n).map(|i| attributes(i, 3)).collect::<Vec<_>>(),
        rels in prop::collection::vec((any::<bool>(), prop::collection::vec(participant(n), 2..=3), attributes(100, 2)), 0..5),
        spec in prop::option::of((any::<bool>(), any::<bool>())),
        union in prop::option::of(any::<bool>()),
        n in Just(n),
    ) -> EerdSchema {
        let entities: Vec<Entity> = (0..n)
            .map(|i| Entity {
                name: format!("E{i}"),
                kind: if kinds[i] { EntityKind::Strong } else { EntityKind::Weak },
                attributes: attrs[i].clone(),
            })
            .collect();
        let relationships = rels
            .into_iter()
            .enumerate()
            .filter_map(|(r, (ident, parts, attrs))| {
                let mut seen = BTreeSet::new();
                let participants: Vec<Participant> = parts
                    .into_iter()
                    .filter(|(e, _, _)| seen.insert(*e))
                    .map(|(e, cardinality, participation)| Participant { entity: format!("E{e}"), cardinality, participation })
                    .collect();
                (participants.len() >= 2).then(|| Relationship {
                    name: format!("R{r}"),
                    kind: if ident { RelationshipKind::Identifying } else { RelationshipKind::NonIdentifying },
                    participants,
                    attributes: attrs.into_iter().map(|mut a| { a.name = format!("r{r}_{}", a.name); a.components.iter_mut().for_each(|c| c.name = format!("r{r}_{}", c.name)); a }).collect(),
                })
            })
            .collect();
        EerdSchema {
            name: "generated".into(),
            entities,
            relationships,
            specializations: spec
                .map(|(total, disjoint)| Specialization {
                    supertype: "E0".into(),
                    subtypes: vec!["E1".into(), "E2".into()],
                    completeness: if total { Completeness::Total } else { Completeness::Partial },
                    disjointness: if disjoint { Disjointness::Disjoint } else { Disjointness::Overlapping },
                })
                .into_iter()
                .collect(),
            unions: union
                .map(|total| UnionCategory {
                    category: format!("E{}", n - 1),
                    supertypes: vec!["E0".into(), "E1".into()],
                    participation: if total { Participation::Total } else { Participation::Partial },
                })
                .into_iter()
                .collect(),
        }
    }
}

fn element_names(s: &EerdSchema) -> BTreeSet<String> {
    s.entities
        .iter()
        .map(|e| name_key(&e.name))
        .chain(s.relationships.iter().map(|r| name_key(&r.name)))
        .collect()
}

fn truth_sites(ms: &[MistakeRecord]) -> Vec<(MistakeCategory, String)> {
    let mut v: Vec<_> = ms.iter().map(|m| (m.category, name_key(&m.focal))).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn schema_text_round_trips(s in schema()) {
        let text = serialize_schema(&s);
        prop_assert_eq!(parse_schema(&text).unwrap(), s);
    }

    #[test]
    fn forged_variants_are_exact_and_deterministic(which in 0usize..4, k in 1u8..=3, seed in any::<u64>()) {
        let name = fixtures::SCHEMAS[which];
        let reference = fixtures::schema(name);
        let rubrics = fixtures::rubrics(name);
        let mut plan = CorpusPlan::new(0, 0, 0, 0, seed);
        plan.per_count.insert(k, 4);
        let corpus = generate_corpus(&reference, &plan).unwrap();
        prop_assert_eq!(&corpus, &generate_corpus(&reference, &plan).unwrap());
        for v in &corpus {
            prop_assert_eq!(v.mistakes.len(), k as usize);
            let cats: BTreeSet<_> = v.mistakes.iter().map(|m| m.category).collect();
            prop_assert_eq!(cats.len(), k as usize);
            prop_assert_eq!(parse_schema(&serialize_schema(&v.schema)).unwrap(), v.schema.clone());
            prop_assert!(element_names(&v.schema).is_subset(&element_names(&reference)));
            let errors: Vec<Finding> = diff_schemas(&reference, &v.schema, &rubrics).into_iter().filter(Finding::is_error).collect();
            let mut found: Vec<_> = errors.iter().map(|f| (f.category, name_key(&f.focal))).collect();
            found.sort();
            prop_assert_eq!(found, truth_sites(&v.mistakes));
        }
    }

    #[test]
    fn matching_accounts_for_every_item(
        truth in prop::collection::vec((0usize..11, 0usize..4), 0..6),
        found in prop::collection::vec((0usize..11, 0usize..4, any::<bool>()), 0..8),
    ) {
        let truth: Vec<MistakeRecord> = truth.into_iter().map(|(c, f)| MistakeRecord {
            category: MistakeCategory::ALL[c], focal: format!("X{f}"), original: String::new(), modified: String::new(), description: String::new(),
        }).collect();
        let findings: Vec<Finding> = found.into_iter().map(|(c, f, err)| {
            let mut x = Finding::error(MistakeCategory::ALL[c], format!("x{f}"), "");
            if !err { x.polarity = Polarity::ConfirmedCorrect; }
            x
        }).collect();
        let errors = findings.iter().filter(|f| f.is_error()).count();
        let strict = match_findings(&findings, &truth, MatchMode::Strict);
        let loose = match_findings(&findings, &truth, MatchMode::CategoryLevel);
        for r in [&strict, &loose] {
            prop_assert_eq!(r.tp + r.fn_, truth.len());
            prop_assert!(r.tp <= errors);
            prop_assert!(r.fp >= errors - r.tp);
            prop_assert_eq!((r.matched.len(), r.missed.len(), r.hallucinated.len()), (r.tp, r.fn_, r.fp));
        }
        prop_assert!(strict.tp <= loose.tp);
    }

    #[test]
    fn summary_ignores_report_order(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let reference = fixtures::hospital_schema();
        let rubrics = fixtures::hospital_rubrics();
        let corpus = generate_corpus(&reference, &CorpusPlan::new(4, 4, 4, 0, seed)).unwrap();
        let mut reports: Vec<_> = corpus.iter().enumerate().map(|(i, v)| {
            let mut f = diff_schemas(&reference, &v.schema, &rubrics);
            // Drop one finding from every third report so counts vary.
            if i % 3 == 0 && !f.is_empty() { f.remove(0); }
            match_findings(&f, &v.mistakes, MatchMode::Strict)
        }).collect();
        let a = summarize(&reports).unwrap();
        reports.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        prop_assert_eq!(a, summarize(&reports).unwrap());
    }

    #[test]
    fn markup_round_trips(items in prop::collection::vec((0usize..11, "[A-Za-z_][A-Za-z_ ]{0,8}[A-Za-z]", any::<bool>(), "[^\\[\\]]{0,20}"), 0..6)) {
        let mut text = String::from("lead.");
        for (c, focal, err, sentence) in &items {
            text.push(' ');
            let pol = if *err { Polarity::ErrorFound } else { Polarity::ConfirmedCorrect };
            text.push_str(&tag(MistakeCategory::ALL[*c], focal, pol, sentence));
        }
        let claims = extract_tagged(&text).unwrap();
        prop_assert_eq!(claims.len(), items.len());
        for (claim, (c, focal, _, sentence)) in claims.iter().zip(&items) {
            prop_assert_eq!(claim.category, MistakeCategory::ALL[*c]);
            prop_assert_eq!(&claim.focal, focal);
            prop_assert_eq!(&text[claim.body.clone()], sentence.as_str());
        }
        prop_assert!(!strip_markup(&text).contains("[[claim"));
    }

    #[test]
    fn refinement_never_degrades(seed in any::<u64>(), fixes in 1usize..3) {
        let reference = fixtures::hospital_schema();
        let rubrics = fixtures::hospital_rubrics();
        let corpus = generate_corpus(&reference, &CorpusPlan::new(1, 1, 1, 0, seed)).unwrap();
        let sim = eerd_core::refine::SimulatedBaseModel { seed, ..Default::default() };
        let editor = ClaimEditor { fixes_per_call: fixes };
        for v in &corpus {
            let ctx = ItemContext { reference: &reference, submitted: &v.schema, rubrics: &rubrics, truth: &v.mistakes };
            let r0 = sim.generate(v, &reference, &rubrics, TraceKind::Reasoning);
            let f0 = OracleScorer.f1(&r0, &ctx).unwrap();
            let audit = factual_audit(&r0, &ctx, &editor, &OracleScorer, &AuditConfig::default()).unwrap();
            prop_assert!(audit.f1_history.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(audit.final_f1 >= f0);
            let polish = style_polish(&audit.final_trace, audit.f1_optimal, &ctx, &editor, &OracleScorer, &PolishConfig::default()).unwrap();
            prop_assert!(OracleScorer.f1(&polish.final_trace, &ctx).unwrap() >= audit.f1_optimal);
            prop_assert!(structural_reward(&polish.final_trace, &rubrics) >= structural_reward(&audit.final_trace, &rubrics));
            let t: Trace = Trace::tagged(polish.final_trace.text.clone(), TraceKind::Reasoning).unwrap();
            prop_assert_eq!(t.claims, polish.final_trace.claims.clone());
        }
    }
}
