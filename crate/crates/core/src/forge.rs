//! Seeded mistake injection. Each category has a deterministic mutation
//! operator that edits exactly one aspect of one existing element, so a
//! variant's ground truth is exact and the oracle diff recovers it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::category::MistakeCategory;
use crate::model::{
    name_key, parse_schema, render_element, render_specialization, render_union, serialize_schema,
    AttributeKind, Cardinality, Completeness, Disjointness, EerdSchema, EntityKind, KeyRole,
    ParseError, Participation, RelationshipKind,
};

#[derive(Debug, thiserror::Error)]
pub enum ForgeError {
    #[error("schema declares no entities or relationships")]
    EmptySchema,
    #[error("{0} does not apply to this schema")]
    NotApplicable(MistakeCategory),
    #[error("no unmutated site is left for {0}")]
    NoApplicableSite(MistakeCategory),
    #[error("plan cannot be realized: {0}")]
    PlanInfeasible(String),
    #[error("variant document is invalid: {0}")]
    Document(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MistakeRecord {
    #[serde(rename = "type")]
    pub category: MistakeCategory,
    pub focal: String,
    pub original: String,
    pub modified: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MistakenVariant {
    pub variant_id: u64,
    pub source_schema: String,
    pub schema: EerdSchema,
    pub mistakes: Vec<MistakeRecord>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusPlan {
    /// Number of variants per mistake count (1, 2 or 3).
    pub per_count: BTreeMap<u8, usize>,
    pub start_id: u64,
    pub seed: u64,
    /// Mistakes remembered by the balancing counter; 0 means the whole corpus.
    #[serde(default)]
    pub balance_window: usize,
}

impl CorpusPlan {
    pub fn new(one: usize, two: usize, three: usize, start_id: u64, seed: u64) -> Self {
        Self {
            per_count: BTreeMap::from([(1, one), (2, two), (3, three)]),
            start_id,
            seed,
            balance_window: 0,
        }
    }

    pub fn total(&self) -> usize {
        self.per_count.values().sum()
    }
}

pub fn applicable_categories(schema: &EerdSchema) -> Result<BTreeSet<MistakeCategory>, ForgeError> {
    if schema.is_empty() {
        return Err(ForgeError::EmptySchema);
    }
    Ok(MistakeCategory::ALL
        .into_iter()
        .filter(|c| match c {
            MistakeCategory::TernaryRelationship => schema.has_ternary(),
            MistakeCategory::SpecializationUnion => {
                !schema.specializations.is_empty() || !schema.unions.is_empty()
            }
            _ => true,
        })
        .collect())
}

/// Mutation sites already used within one variant. Keys are normalized.
#[derive(Debug, Default, Clone)]
pub struct Claims(BTreeSet<String>);

impl Claims {
    fn has(&self, key: &str) -> bool {
        self.0.contains(key)
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.0.range(prefix.to_string()..).next().is_some_and(|k| k.starts_with(prefix))
    }

    fn add(&mut self, keys: impl IntoIterator<Item = String>) {
        self.0.extend(keys);
    }
}

fn k(parts: &[&str]) -> String {
    parts.iter().map(|p| name_key(p)).collect::<Vec<_>>().join("\u{1f}")
}

fn pos_key(kind: &str, rel: &str, i: usize) -> String {
    format!("{}\u{1f}{i}", k(&[kind, rel]))
}

/// Where an attribute lives.
#[derive(Debug, Clone, Copy)]
enum Owner {
    Entity(usize),
    Relationship(usize),
}

#[derive(Debug, Clone)]
enum Edit {
    DropKey { entity: usize, attr: usize },
    FlipParticipation { rel: usize, pos: usize },
    DropTernaryParticipant { rel: usize, pos: usize },
    FlipCompleteness { spec: usize },
    FlipDisjointness { spec: usize },
    FlipUnionParticipation { union: usize },
    DropUnionSupertype { union: usize, member: usize },
    FlipCardinality { rel: usize, pos: usize },
    ReplaceParticipant { rel: usize, pos: usize, entity: String },
    FlipAttributeKind { owner: Owner, attr: usize },
    DeleteAttribute { owner: Owner, attr: usize },
    FlipEntityKind { entity: usize },
    Retarget { rel: usize, entities: Vec<String> },
    FlipRelationshipKind { rel: usize },
}

fn owner_name(s: &EerdSchema, o: Owner) -> &str {
    match o {
        Owner::Entity(i) => &s.entities[i].name,
        Owner::Relationship(i) => &s.relationships[i].name,
    }
}

fn owner_attrs(s: &EerdSchema, o: Owner) -> &[crate::model::Attribute] {
    match o {
        Owner::Entity(i) => &s.entities[i].attributes,
        Owner::Relationship(i) => &s.relationships[i].attributes,
    }
}

fn owners(s: &EerdSchema) -> impl Iterator<Item = Owner> {
    (0..s.entities.len())
        .map(Owner::Entity)
        .chain((0..s.relationships.len()).map(Owner::Relationship))
}

/// No edit has touched the relationship's shape or any of its positions.
fn positions_free(claims: &Claims, rel: &str) -> bool {
    !claims.has(&k(&["shape", rel]))
        && !["card", "part", "ent"]
            .iter()
            .any(|kind| claims.has_prefix(&format!("{}\u{1f}", k(&[kind, rel]))))
}

/// Eligible edits for `cat`, each with the claim keys it would take.
fn sites(s: &EerdSchema, cat: MistakeCategory, claims: &Claims) -> Vec<(Edit, Vec<String>)> {
    let mut out = Vec::new();
    match cat {
        MistakeCategory::KeyAttribute => {
            for (ei, e) in s.entities.iter().enumerate() {
                let keys = k(&["keys", &e.name]);
                if claims.has(&keys) {
                    continue;
                }
                for (ai, a) in e.attributes.iter().enumerate() {
                    let ak = k(&["attr", &e.name, &a.name]);
                    if a.key_role != KeyRole::None && !claims.has(&ak) {
                        out.push((Edit::DropKey { entity: ei, attr: ai }, vec![keys.clone(), ak]));
                    }
                }
            }
        }
        MistakeCategory::EntityType => {
            for (ei, e) in s.entities.iter().enumerate() {
                let (ek, keys) = (k(&["ekind", &e.name]), k(&["keys", &e.name]));
                if !claims.has(&ek) && !claims.has(&keys) {
                    out.push((Edit::FlipEntityKind { entity: ei }, vec![ek, keys]));
                }
            }
        }
        MistakeCategory::RelationshipType => {
            for (ri, r) in s.relationships.iter().enumerate() {
                let rk = k(&["rkind", &r.name]);
                if !claims.has(&rk) {
                    out.push((Edit::FlipRelationshipKind { rel: ri }, vec![rk]));
                }
            }
        }
        MistakeCategory::TotalParticipation | MistakeCategory::Cardinality => {
            let kind = if cat == MistakeCategory::Cardinality { "card" } else { "part" };
            for (ri, r) in s.relationships.iter().enumerate() {
                if claims.has(&k(&["shape", &r.name])) {
                    continue;
                }
                for pos in 0..r.participants.len() {
                    let own = pos_key(kind, &r.name, pos);
                    if claims.has(&own) || claims.has(&pos_key("ent", &r.name, pos)) {
                        continue;
                    }
                    let edit = if kind == "card" {
                        Edit::FlipCardinality { rel: ri, pos }
                    } else {
                        Edit::FlipParticipation { rel: ri, pos }
                    };
                    out.push((edit, vec![own]));
                }
            }
        }
        MistakeCategory::RelationshipParticipants => {
            for (ri, r) in s.relationships.iter().enumerate() {
                let ent_prefix = format!("{}\u{1f}", k(&["ent", &r.name]));
                if claims.has(&k(&["shape", &r.name])) || claims.has_prefix(&ent_prefix) {
                    continue;
                }
                for pos in 0..r.participants.len() {
                    if claims.has(&pos_key("card", &r.name, pos)) || claims.has(&pos_key("part", &r.name, pos)) {
                        continue;
                    }
                    for e in &s.entities {
                        if !r.involves(&e.name) {
                            out.push((
                                Edit::ReplaceParticipant { rel: ri, pos, entity: e.name.clone() },
                                vec![pos_key("ent", &r.name, pos)],
                            ));
                        }
                    }
                }
            }
        }
        MistakeCategory::InvalidRelationship => {
            let names: Vec<&str> = s.entity_names().collect();
            for (ri, r) in s.relationships.iter().enumerate() {
                if !positions_free(claims, &r.name) {
                    continue;
                }
                let orig: Vec<String> = r.participants.iter().map(|p| name_key(&p.entity)).collect();
                let orig_set: BTreeSet<&String> = orig.iter().collect();
                let mut targets = Vec::new();
                retargets(&names, &orig, &mut Vec::new(), &mut targets);
                for t in targets {
                    let set: BTreeSet<String> = t.iter().map(|n| name_key(n)).collect();
                    if set.iter().collect::<BTreeSet<_>>() != orig_set {
                        out.push((
                            Edit::Retarget { rel: ri, entities: t },
                            vec![k(&["shape", &r.name])],
                        ));
                    }
                }
            }
        }
        MistakeCategory::TernaryRelationship => {
            for (ri, r) in s.relationships.iter().enumerate() {
                if r.is_ternary() && positions_free(claims, &r.name) {
                    for pos in 0..3 {
                        out.push((Edit::DropTernaryParticipant { rel: ri, pos }, vec![k(&["shape", &r.name])]));
                    }
                }
            }
        }
        MistakeCategory::AttributeType | MistakeCategory::Attribute => {
            for o in owners(s) {
                let on = owner_name(s, o);
                for (ai, a) in owner_attrs(s, o).iter().enumerate() {
                    let ak = k(&["attr", on, &a.name]);
                    if claims.has(&ak) {
                        continue;
                    }
                    if cat == MistakeCategory::AttributeType && a.kind != AttributeKind::Composite {
                        out.push((Edit::FlipAttributeKind { owner: o, attr: ai }, vec![ak]));
                    } else if cat == MistakeCategory::Attribute && a.key_role == KeyRole::None {
                        out.push((Edit::DeleteAttribute { owner: o, attr: ai }, vec![ak]));
                    }
                }
            }
        }
        MistakeCategory::SpecializationUnion => {
            for (si, sp) in s.specializations.iter().enumerate() {
                let sk = k(&["spec", &sp.supertype]);
                if !claims.has(&sk) {
                    out.push((Edit::FlipCompleteness { spec: si }, vec![sk.clone()]));
                    out.push((Edit::FlipDisjointness { spec: si }, vec![sk]));
                }
            }
            for (ui, u) in s.unions.iter().enumerate() {
                let uk = k(&["union", &u.category]);
                if claims.has(&uk) {
                    continue;
                }
                out.push((Edit::FlipUnionParticipation { union: ui }, vec![uk.clone()]));
                if u.supertypes.len() >= 3 {
                    for member in 0..u.supertypes.len() {
                        out.push((Edit::DropUnionSupertype { union: ui, member }, vec![uk.clone()]));
                    }
                }
            }
        }
    }
    out
}

/// All assignments of distinct entities to positions where each position
/// differs from its original entity.
fn retargets(names: &[&str], orig: &[String], cur: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    if cur.len() == orig.len() {
        out.push(cur.clone());
        return;
    }
    let pos = cur.len();
    for n in names {
        let nk = name_key(n);
        if nk == orig[pos] || cur.iter().any(|c| name_key(c) == nk) {
            continue;
        }
        cur.push(n.to_string());
        retargets(names, orig, cur, out);
        cur.pop();
    }
}

fn flip_participation(p: Participation) -> Participation {
    match p {
        Participation::Total => Participation::Partial,
        Participation::Partial => Participation::Total,
    }
}

/// Applies `edit` in place and returns (category focal, description).
fn apply(s: &mut EerdSchema, edit: &Edit) -> (String, String) {
    match edit {
        Edit::DropKey { entity, attr } => {
            let e = &mut s.entities[*entity];
            let a = &mut e.attributes[*attr];
            let was = a.key_role;
            a.key_role = KeyRole::None;
            let role = if was == KeyRole::Partial { "partial key" } else { "key" };
            (e.name.clone(), format!("{} is no longer marked as the {role} of {}", a.name, e.name))
        }
        Edit::FlipEntityKind { entity } => {
            let e = &mut s.entities[*entity];
            let (to, from_role, to_role) = match e.kind {
                EntityKind::Strong => (EntityKind::Weak, KeyRole::Key, KeyRole::Partial),
                EntityKind::Weak => (EntityKind::Strong, KeyRole::Partial, KeyRole::Key),
            };
            let from = e.kind;
            e.kind = to;
            for a in &mut e.attributes {
                if a.key_role == from_role {
                    a.key_role = to_role;
                }
            }
            (e.name.clone(), format!("{} is modeled as a {to} entity instead of {from}", e.name))
        }
        Edit::FlipRelationshipKind { rel } => {
            let r = &mut s.relationships[*rel];
            let from = r.kind;
            r.kind = match from {
                RelationshipKind::Identifying => RelationshipKind::NonIdentifying,
                RelationshipKind::NonIdentifying => RelationshipKind::Identifying,
            };
            (r.name.clone(), format!("{} is marked {} instead of {from}", r.name, r.kind))
        }
        Edit::FlipParticipation { rel, pos } => {
            let r = &mut s.relationships[*rel];
            let p = &mut r.participants[*pos];
            let from = p.participation;
            p.participation = flip_participation(from);
            let msg = format!(
                "participation of {} in {} changed from {from} to {}",
                p.entity, r.name, p.participation
            );
            (r.name.clone(), msg)
        }
        Edit::FlipCardinality { rel, pos } => {
            let r = &mut s.relationships[*rel];
            let p = &mut r.participants[*pos];
            let from = p.cardinality;
            p.cardinality = match from {
                Cardinality::One => Cardinality::N,
                Cardinality::N | Cardinality::M => Cardinality::One,
            };
            let msg = format!(
                "cardinality of {} in {} changed from {from} to {}",
                p.entity, r.name, p.cardinality
            );
            (r.name.clone(), msg)
        }
        Edit::ReplaceParticipant { rel, pos, entity } => {
            let r = &mut s.relationships[*rel];
            let p = &mut r.participants[*pos];
            let msg = format!("{} connects {entity} where {} belongs", r.name, p.entity);
            p.entity = entity.clone();
            (r.name.clone(), msg)
        }
        Edit::Retarget { rel, entities } => {
            let r = &mut s.relationships[*rel];
            for (p, e) in r.participants.iter_mut().zip(entities) {
                p.entity = e.clone();
            }
            (r.name.clone(), format!("{} relates the wrong entities: {}", r.name, entities.join(", ")))
        }
        Edit::DropTernaryParticipant { rel, pos } => {
            let r = &mut s.relationships[*rel];
            let dropped = r.participants.remove(*pos);
            (r.name.clone(), format!("{} is modeled as binary, dropping {}", r.name, dropped.entity))
        }
        Edit::FlipAttributeKind { owner, attr } => {
            let name = owner_name(s, *owner).to_string();
            let a = match owner {
                Owner::Entity(i) => &mut s.entities[*i].attributes[*attr],
                Owner::Relationship(i) => &mut s.relationships[*i].attributes[*attr],
            };
            let from = a.kind;
            a.kind = match from {
                AttributeKind::Simple => AttributeKind::Multivalued,
                _ => AttributeKind::Simple,
            };
            let msg = format!("{} of {name} changed from {} to {}", a.name, kind_word(from), kind_word(a.kind));
            (name, msg)
        }
        Edit::DeleteAttribute { owner, attr } => {
            let name = owner_name(s, *owner).to_string();
            let attrs = match owner {
                Owner::Entity(i) => &mut s.entities[*i].attributes,
                Owner::Relationship(i) => &mut s.relationships[*i].attributes,
            };
            let a = attrs.remove(*attr);
            (name.clone(), format!("attribute {} is missing from {name}", a.name))
        }
        Edit::FlipCompleteness { spec } => {
            let sp = &mut s.specializations[*spec];
            let from = sp.completeness;
            sp.completeness = match from {
                Completeness::Total => Completeness::Partial,
                Completeness::Partial => Completeness::Total,
            };
            let msg = format!("specialization of {} changed from {from} to {}", sp.supertype, sp.completeness);
            (sp.supertype.clone(), msg)
        }
        Edit::FlipDisjointness { spec } => {
            let sp = &mut s.specializations[*spec];
            let from = sp.disjointness;
            sp.disjointness = match from {
                Disjointness::Disjoint => Disjointness::Overlapping,
                Disjointness::Overlapping => Disjointness::Disjoint,
            };
            let msg = format!("specialization of {} changed from {from} to {}", sp.supertype, sp.disjointness);
            (sp.supertype.clone(), msg)
        }
        Edit::FlipUnionParticipation { union } => {
            let u = &mut s.unions[*union];
            let from = u.participation;
            u.participation = flip_participation(from);
            let msg = format!("union {} participation changed from {from} to {}", u.category, u.participation);
            (u.category.clone(), msg)
        }
        Edit::DropUnionSupertype { union, member } => {
            let u = &mut s.unions[*union];
            let gone = u.supertypes.remove(*member);
            (u.category.clone(), format!("union {} no longer includes {gone}", u.category))
        }
    }
}

fn kind_word(k: AttributeKind) -> &'static str {
    match k {
        AttributeKind::Simple => "simple",
        AttributeKind::Composite => "composite",
        AttributeKind::Multivalued => "multivalued",
        AttributeKind::Derived => "derived",
    }
}

fn render_focal(s: &EerdSchema, cat: MistakeCategory, focal: &str) -> String {
    if cat == MistakeCategory::SpecializationUnion {
        let spec = s
            .specializations
            .iter()
            .filter(|sp| name_key(&sp.supertype) == name_key(focal))
            .map(render_specialization);
        let uni = s
            .unions
            .iter()
            .filter(|u| name_key(&u.category) == name_key(focal))
            .map(render_union);
        return spec.chain(uni).collect::<Vec<_>>().join("; ");
    }
    render_element(s, focal).unwrap_or_default()
}

/// One injection into `schema` that respects and extends `claims`. On
/// error neither the schema nor the claims are touched.
pub fn inject_with(
    schema: &mut EerdSchema,
    cat: MistakeCategory,
    rng: &mut impl Rng,
    claims: &mut Claims,
) -> Result<MistakeRecord, ForgeError> {
    let mut candidates = sites(schema, cat, claims);
    if candidates.is_empty() {
        return Err(ForgeError::NoApplicableSite(cat));
    }
    let (edit, keys) = candidates.swap_remove(rng.random_range(0..candidates.len()));
    let before = schema.clone();
    let (focal, description) = apply(schema, &edit);
    claims.add(keys);
    Ok(MistakeRecord {
        category: cat,
        original: render_focal(&before, cat, &focal),
        modified: render_focal(schema, cat, &focal),
        focal,
        description,
    })
}

/// Single injection with a fresh claim set, seeded from `seed`.
pub fn inject(
    schema: &EerdSchema,
    cat: MistakeCategory,
    seed: u64,
) -> Result<(EerdSchema, MistakeRecord), ForgeError> {
    if !applicable_categories(schema)?.contains(&cat) {
        return Err(ForgeError::NotApplicable(cat));
    }
    let mut out = schema.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rec = inject_with(&mut out, cat, &mut rng, &mut Claims::default())?;
    Ok((out, rec))
}

/// Category usage tracker that always offers the least-used categories
/// first. With a window, only the most recent mistakes count.
struct Balancer {
    counts: BTreeMap<MistakeCategory, usize>,
    recent: VecDeque<MistakeCategory>,
    window: usize,
}

impl Balancer {
    fn new(cats: &BTreeSet<MistakeCategory>, window: usize) -> Self {
        Self {
            counts: cats.iter().map(|c| (*c, 0)).collect(),
            recent: VecDeque::new(),
            window,
        }
    }

    fn order(&self, exclude: &[MistakeCategory], rng: &mut impl Rng) -> Vec<MistakeCategory> {
        let mut cats: Vec<_> = self.counts.keys().copied().filter(|c| !exclude.contains(c)).collect();
        cats.shuffle(rng);
        cats.sort_by_key(|c| self.counts[c]);
        cats
    }

    fn record(&mut self, cat: MistakeCategory) {
        *self.counts.get_mut(&cat).expect("tracked category") += 1;
        if self.window > 0 {
            self.recent.push_back(cat);
            if self.recent.len() > self.window {
                let old = self.recent.pop_front().expect("non-empty");
                *self.counts.get_mut(&old).expect("tracked category") -= 1;
            }
        }
    }
}

/// Generates `plan.total()` variants: all single-mistake variants first,
/// then doubles, then triples, with consecutive ids from `start_id`.
pub fn generate_corpus(schema: &EerdSchema, plan: &CorpusPlan) -> Result<Vec<MistakenVariant>, ForgeError> {
    let cats = applicable_categories(schema)?;
    if let Some(n) = plan.per_count.keys().find(|n| !(1..=3).contains(*n)) {
        return Err(ForgeError::PlanInfeasible(format!("{n} mistakes per variant is outside 1..=3")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut balance = Balancer::new(&cats, plan.balance_window);
    let mut out = Vec::with_capacity(plan.total());
    let mut id = plan.start_id;
    for (&count, &n) in &plan.per_count {
        if n > 0 && cats.len() < count as usize {
            return Err(ForgeError::PlanInfeasible(format!(
                "{count} distinct categories needed, {} applicable",
                cats.len()
            )));
        }
        for _ in 0..n {
            let seed = rng.next_u64();
            let mut vrng = ChaCha8Rng::seed_from_u64(seed);
            let mut variant = schema.clone();
            let mut claims = Claims::default();
            let mut mistakes: Vec<MistakeRecord> = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let used: Vec<_> = mistakes.iter().map(|m| m.category).collect();
                let rec = balance
                    .order(&used, &mut vrng)
                    .into_iter()
                    .find_map(|cat| inject_with(&mut variant, cat, &mut vrng, &mut claims).ok())
                    .ok_or_else(|| {
                        ForgeError::PlanInfeasible(format!("variant {id}: no category has a free site"))
                    })?;
                balance.record(rec.category);
                mistakes.push(rec);
            }
            out.push(MistakenVariant {
                variant_id: id,
                source_schema: schema.name.clone(),
                schema: variant,
                mistakes,
                seed,
            });
            id += 1;
        }
    }
    Ok(out)
}

/// On-disk form of a variant, using the generation prompt's field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantDocument {
    pub mistake_id: u64,
    pub focal_relation: String,
    pub description: String,
    pub mistakes: Vec<MistakeRecord>,
    pub mistaken_erd: String,
    pub source_schema: String,
    pub split: Split,
    pub seed: u64,
    pub num_mistakes: usize,
}

impl MistakenVariant {
    /// Distinct focal names in mistake order.
    pub fn focal_set(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.mistakes
            .iter()
            .filter(|m| seen.insert(name_key(&m.focal)))
            .map(|m| m.focal.as_str())
            .collect()
    }

    pub fn to_document(&self, split: Split) -> VariantDocument {
        VariantDocument {
            mistake_id: self.variant_id,
            focal_relation: self.focal_set().join("; "),
            description: self
                .mistakes
                .iter()
                .map(|m| m.description.as_str())
                .collect::<Vec<_>>()
                .join("; "),
            mistakes: self.mistakes.clone(),
            mistaken_erd: serialize_schema(&self.schema),
            source_schema: self.source_schema.clone(),
            split,
            seed: self.seed,
            num_mistakes: self.mistakes.len(),
        }
    }

    pub fn from_document(doc: &VariantDocument) -> Result<Self, ForgeError> {
        if doc.num_mistakes != doc.mistakes.len() {
            return Err(ForgeError::Document(format!(
                "variant {} declares {} mistakes but lists {}",
                doc.mistake_id,
                doc.num_mistakes,
                doc.mistakes.len()
            )));
        }
        Ok(Self {
            variant_id: doc.mistake_id,
            source_schema: doc.source_schema.clone(),
            schema: parse_schema(&doc.mistaken_erd)?,
            mistakes: doc.mistakes.clone(),
            seed: doc.seed,
        })
    }

    /// Semicolon-separated category codes, as the judge prompt expects.
    pub fn mistake_types(&self) -> String {
        self.mistakes.iter().map(|m| m.category.code()).collect::<Vec<_>>().join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub source_schema: String,
    pub source_sha256: String,
    pub split: Split,
    pub plan: CorpusPlan,
    pub seed: u64,
    pub count: usize,
    pub variant_ids: Vec<u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl CorpusManifest {
    pub fn new(schema: &EerdSchema, plan: &CorpusPlan, split: Split, variants: &[MistakenVariant]) -> Self {
        Self {
            source_schema: schema.name.clone(),
            source_sha256: sha256_hex(serialize_schema(schema).as_bytes()),
            split,
            plan: plan.clone(),
            seed: plan.seed,
            count: variants.len(),
            variant_ids: variants.iter().map(|v| v.variant_id).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{same_name, validate_structure};

    #[test]
    fn hospital_has_nine_categories() {
        let cats = applicable_categories(&fixtures::hospital_schema()).unwrap();
        assert_eq!(cats.len(), 9);
        assert!(!cats.contains(&MistakeCategory::TernaryRelationship));
        assert!(!cats.contains(&MistakeCategory::SpecializationUnion));
    }

    #[test]
    fn ternary_schema_includes_ternary() {
        let cats = applicable_categories(&fixtures::schema("university")).unwrap();
        assert!(cats.contains(&MistakeCategory::TernaryRelationship));
        assert_eq!(cats.len(), 11);
    }

    #[test]
    fn empty_schema_is_an_error() {
        assert!(matches!(
            applicable_categories(&EerdSchema::empty("x")),
            Err(ForgeError::EmptySchema)
        ));
    }

    #[test]
    fn inject_edits_one_element() {
        let h = fixtures::hospital_schema();
        for seed in 0..20 {
            let (v, rec) = inject(&h, MistakeCategory::TotalParticipation, seed).unwrap();
            assert_ne!(rec.original, rec.modified);
            assert!(h.relationship(&rec.focal).is_some());
            assert_ne!(v, h);
            let (v, rec) = inject(&h, MistakeCategory::RelationshipType, seed).unwrap();
            assert_eq!(v.relationship(&rec.focal).unwrap().kind, RelationshipKind::Identifying);
            let (v, rec) = inject(&h, MistakeCategory::KeyAttribute, seed).unwrap();
            assert!(!v.entity(&rec.focal).unwrap().has_key());
        }
    }

    #[test]
    fn some_seed_reproduces_the_hospital_progression_edits() {
        let h = fixtures::hospital_schema();
        let hit = |cat, focal: &str, check: &dyn Fn(&EerdSchema) -> bool| {
            (0..200).any(|seed| {
                let (v, rec) = inject(&h, cat, seed).unwrap();
                same_name(&rec.focal, focal) && check(&v)
            })
        };
        assert!(hit(MistakeCategory::TotalParticipation, "test_log", &|v| {
            v.relationship("test_log").unwrap().participants[1].participation == Participation::Partial
        }));
        assert!(hit(MistakeCategory::KeyAttribute, "test", &|v| {
            v.entity("test").unwrap().attribute("test_id").unwrap().key_role == KeyRole::None
        }));
    }

    #[test]
    fn not_applicable_and_exhausted() {
        let h = fixtures::hospital_schema();
        assert!(matches!(
            inject(&h, MistakeCategory::TernaryRelationship, 1),
            Err(ForgeError::NotApplicable(_))
        ));
        let mut s = h.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut claims = Claims::default();
        for _ in 0..3 {
            inject_with(&mut s, MistakeCategory::RelationshipType, &mut rng, &mut claims).unwrap();
        }
        assert!(matches!(
            inject_with(&mut s, MistakeCategory::RelationshipType, &mut rng, &mut claims),
            Err(ForgeError::NoApplicableSite(_))
        ));
    }

    #[test]
    fn one_shape_edit_per_relationship() {
        let u = fixtures::schema("university");
        for seed in 0..20 {
            let mut s = u.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut claims = Claims::default();
            inject_with(&mut s, MistakeCategory::TernaryRelationship, &mut rng, &mut claims).unwrap();
            // The only ternary is now binary and claimed, so no other
            // relationship-level edit may land on it.
            let teaches = s.relationships.iter().position(|r| r.name == "TEACHES").unwrap();
            for cat in [MistakeCategory::InvalidRelationship, MistakeCategory::RelationshipParticipants] {
                assert!(sites(&s, cat, &claims).iter().all(|(e, _)| !matches!(
                    e,
                    Edit::Retarget { rel, .. } | Edit::ReplaceParticipant { rel, .. } if *rel == teaches
                )));
            }
        }
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let h = fixtures::hospital_schema();
        let plan = CorpusPlan::new(50, 50, 50, 1, 7);
        let a = generate_corpus(&h, &plan).unwrap();
        assert_eq!(a.len(), 150);
        assert_eq!(a.iter().map(|v| v.mistakes.len()).sum::<usize>(), 300);
        assert!(a.windows(2).all(|w| w[1].variant_id == w[0].variant_id + 1));
        let b = generate_corpus(&h, &plan).unwrap();
        assert_eq!(a, b);
        for v in &a {
            let cats: BTreeSet<_> = v.mistakes.iter().map(|m| m.category).collect();
            assert_eq!(cats.len(), v.mistakes.len());
        }
    }

    #[test]
    fn corpus_is_balanced_within_ten_percent() {
        let h = fixtures::hospital_schema();
        let v = generate_corpus(&h, &CorpusPlan::new(50, 50, 50, 0, 3)).unwrap();
        let mut tally: BTreeMap<MistakeCategory, usize> = BTreeMap::new();
        for m in v.iter().flat_map(|v| &v.mistakes) {
            *tally.entry(m.category).or_default() += 1;
        }
        assert_eq!(tally.len(), 9);
        let ideal = 300.0 / 9.0;
        for (c, n) in tally {
            assert!((n as f64 - ideal).abs() <= 0.1 * ideal, "{c}: {n}");
        }
    }

    #[test]
    fn documents_round_trip() {
        let h = fixtures::hospital_schema();
        let v = generate_corpus(&h, &CorpusPlan::new(2, 2, 2, 10, 1)).unwrap();
        for var in &v {
            let doc = var.to_document(Split::Test);
            let json = serde_json::to_string(&doc).unwrap();
            assert!(json.contains("\"type\":"));
            let back: VariantDocument = serde_json::from_str(&json).unwrap();
            assert_eq!(&MistakenVariant::from_document(&back).unwrap(), var);
        }
    }

    #[test]
    fn fixtures_validate_clean() {
        for name in fixtures::SCHEMAS {
            let s = fixtures::schema(name);
            assert_eq!(validate_structure(&s), vec![], "{name}");
        }
    }
}
