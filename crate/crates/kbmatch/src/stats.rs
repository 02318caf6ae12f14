//! Relation and attribute statistics: support, discriminability, and their
//! harmonic-mean importance.
//!
//! These statistics replace any a-priori schema knowledge. Relations of high
//! importance select each entity's most telling neighbors; literal
//! attributes of high importance act as entity "names". Everything here is a
//! pure function of an immutable [`KnowledgeBase`] and safe to evaluate in
//! parallel per entity.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::kb::{AttrId, AttrValue, KnowledgeBase};

/// Importance of a relation inside one KB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationStats {
    /// `|instances(p)| / |E|^2`: how broadly the relation is used.
    pub support: f64,
    /// `|objects(p)| / |instances(p)|`: how many distinct targets it has.
    pub discriminability: f64,
    /// Harmonic mean of the two.
    pub importance: f64,
}

/// Importance of a literal attribute as a potential name attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NameAttributeStats {
    /// `|subjects(p)| / |E|`: the fraction of descriptions carrying it.
    pub support: f64,
    /// Distinct literal values over instances.
    pub distinct_value_ratio: f64,
    pub importance: f64,
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

/// Per-relation support, discriminability, and importance. Relations with no
/// instances never appear in the map.
pub fn relation_stats(kb: &KnowledgeBase) -> BTreeMap<AttrId, RelationStats> {
    let mut instances: HashMap<AttrId, HashSet<(u32, u32)>> = HashMap::new();
    for (i, desc) in kb.entities().iter().enumerate() {
        for (attr, value) in &desc.attributes {
            if let AttrValue::Ref(j) = value {
                instances.entry(*attr).or_default().insert((i as u32, *j));
            }
        }
    }
    let n = kb.len() as f64;
    instances
        .into_iter()
        .map(|(attr, pairs)| {
            let objects: HashSet<u32> = pairs.iter().map(|&(_, j)| j).collect();
            let support = pairs.len() as f64 / (n * n);
            let discriminability = objects.len() as f64 / pairs.len() as f64;
            let stats = RelationStats {
                support,
                discriminability,
                importance: harmonic(support, discriminability),
            };
            (attr, stats)
        })
        .collect()
}

/// Relation statistics of one KB together with the global importance order.
#[derive(Debug)]
pub struct KbStatistics {
    pub relations: BTreeMap<AttrId, RelationStats>,
    /// Relation ids sorted by descending importance, ties by attribute name.
    order: Vec<AttrId>,
    rank: HashMap<AttrId, u32>,
}

impl KbStatistics {
    pub fn compute(kb: &KnowledgeBase) -> KbStatistics {
        let relations = relation_stats(kb);
        let mut order: Vec<AttrId> = relations.keys().copied().collect();
        // Attribute ids are lex-ordered, so the id is the name tie-break.
        order.sort_by(|a, b| {
            let ia = relations[a].importance;
            let ib = relations[b].importance;
            ib.partial_cmp(&ia).unwrap().then(a.cmp(b))
        });
        let rank = order
            .iter()
            .enumerate()
            .map(|(r, &a)| (a, r as u32))
            .collect();
        KbStatistics {
            relations,
            order,
            rank,
        }
    }

    /// Global rank of a relation (0 = most important).
    pub fn rank_of(&self, attr: AttrId) -> Option<u32> {
        self.rank.get(&attr).copied()
    }

    pub fn importance_order(&self) -> &[AttrId] {
        &self.order
    }
}

/// The entity's relations sorted by descending KB-global importance,
/// truncated to `n`.
pub fn top_n_relations(
    kb: &KnowledgeBase,
    entity: u32,
    stats: &KbStatistics,
    n: usize,
) -> Vec<AttrId> {
    let mut rels: Vec<AttrId> = kb.entity(entity).relation_attrs().into_iter().collect();
    rels.sort_by_key(|a| stats.rank_of(*a).unwrap_or(u32::MAX));
    rels.truncate(n);
    rels
}

/// Neighbors of the entity reached through one of its top-`n` relations,
/// as a sorted deduplicated set.
pub fn top_n_neighbors(
    kb: &KnowledgeBase,
    entity: u32,
    stats: &KbStatistics,
    n: usize,
) -> Vec<u32> {
    let top: BTreeSet<AttrId> = top_n_relations(kb, entity, stats, n).into_iter().collect();
    let mut out: BTreeSet<u32> = BTreeSet::new();
    for (attr, value) in &kb.entity(entity).attributes {
        if let AttrValue::Ref(j) = value {
            if top.contains(attr) {
                out.insert(*j);
            }
        }
    }
    out.into_iter().collect()
}

/// Support and distinct-value ratio for every attribute that carries at
/// least one literal value.
pub fn name_attribute_stats(kb: &KnowledgeBase) -> BTreeMap<AttrId, NameAttributeStats> {
    let mut subjects: HashMap<AttrId, HashSet<u32>> = HashMap::new();
    let mut values: HashMap<AttrId, HashSet<&str>> = HashMap::new();
    let mut instances: HashMap<AttrId, usize> = HashMap::new();
    for (i, desc) in kb.entities().iter().enumerate() {
        for (attr, value) in &desc.attributes {
            if let AttrValue::Literal(text) = value {
                subjects.entry(*attr).or_default().insert(i as u32);
                values.entry(*attr).or_default().insert(text.as_str());
                *instances.entry(*attr).or_default() += 1;
            }
        }
    }
    let n = kb.len() as f64;
    subjects
        .into_iter()
        .map(|(attr, subs)| {
            let support = subs.len() as f64 / n;
            let distinct_value_ratio = values[&attr].len() as f64 / instances[&attr] as f64;
            let stats = NameAttributeStats {
                support,
                distinct_value_ratio,
                importance: harmonic(support, distinct_value_ratio),
            };
            (attr, stats)
        })
        .collect()
}

/// The global top-`k` literal attributes whose values act as entity names.
///
/// Ranked by the harmonic mean of subjects-based support and the
/// distinct-value ratio; with `support_only` the ranking uses support alone
/// (a deliberate configuration knob, since distinctiveness is the less
/// settled half of the ranking). Ties break on the attribute name.
pub fn top_k_name_attributes(kb: &KnowledgeBase, k: usize, support_only: bool) -> Vec<AttrId> {
    let stats = name_attribute_stats(kb);
    let mut attrs: Vec<AttrId> = stats.keys().copied().collect();
    attrs.sort_by(|a, b| {
        let score = |id: &AttrId| {
            if support_only {
                stats[id].support
            } else {
                stats[id].importance
            }
        };
        score(b).partial_cmp(&score(a)).unwrap().then(a.cmp(b))
    });
    attrs.truncate(k);
    attrs
}

/// All literal values of the entity under any of the name attributes.
pub fn names_of(kb: &KnowledgeBase, entity: u32, name_attrs: &[AttrId]) -> Vec<String> {
    let set: BTreeSet<AttrId> = name_attrs.iter().copied().collect();
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for (attr, value) in &kb.entity(entity).attributes {
        if let AttrValue::Literal(text) = value {
            if set.contains(attr) {
                names.insert(text);
            }
        }
    }
    names.into_iter().map(|s| s.to_string()).collect()
}
