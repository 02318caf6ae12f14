//! Entity descriptions, knowledge bases, triple ingestion, and the
//! token-based value similarity.
//!
//! A knowledge base is a duplicate-free collection of descriptions. Each
//! description is a URI plus a set of attribute-value pairs; a value is
//! either a literal string or a reference to another description of the same
//! KB (the attribute is then a *relation* and the target a *neighbor*).
//!
//! Construction is single-writer; once built, a [`KnowledgeBase`] is
//! immutable and safe to share across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use crate::error::{Error, Result};

/// Which of the two input KBs an entity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KbTag {
    Kb1,
    Kb2,
}

impl std::fmt::Display for KbTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KbTag::Kb1 => write!(f, "kb1"),
            KbTag::Kb2 => write!(f, "kb2"),
        }
    }
}

/// Interned attribute name. Ids are assigned in lexicographic name order, so
/// comparing ids is the same as comparing names.
pub type AttrId = u32;

/// Interned token. Ids are assigned in lexicographic token order.
pub type TokenId = u32;

/// An attribute value: a literal string or a resolved reference to another
/// entity of the same KB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrValue {
    Literal(String),
    Ref(u32),
}

/// A URI-identified set of attribute-value pairs.
#[derive(Debug, Clone)]
pub struct EntityDescription {
    pub id: String,
    pub attributes: Vec<(AttrId, AttrValue)>,
    /// Tokens over all literal values, sorted and deduplicated.
    token_ids: Vec<TokenId>,
}

impl EntityDescription {
    /// Sorted token ids over this entity's literal values.
    pub fn tokens(&self) -> &[TokenId] {
        &self.token_ids
    }

    /// Attribute ids used as relations, deduplicated.
    pub fn relation_attrs(&self) -> BTreeSet<AttrId> {
        self.attributes
            .iter()
            .filter_map(|(a, v)| match v {
                AttrValue::Ref(_) => Some(*a),
                AttrValue::Literal(_) => None,
            })
            .collect()
    }

    /// Entity indices reachable through any relation, deduplicated.
    pub fn neighbors(&self) -> BTreeSet<u32> {
        self.attributes
            .iter()
            .filter_map(|(_, v)| match v {
                AttrValue::Ref(t) => Some(*t),
                AttrValue::Literal(_) => None,
            })
            .collect()
    }
}

/// A duplicate-free collection of entity descriptions with an inverted token
/// index and an entity-frequency table.
///
/// Entity indices, attribute ids, and token ids are all assigned in
/// lexicographic order of the underlying strings, so numeric comparisons
/// double as the deterministic lexicographic tie-breaks used everywhere
/// downstream.
#[derive(Debug)]
pub struct KnowledgeBase {
    pub tag: KbTag,
    descriptions: Vec<EntityDescription>,
    id_lookup: HashMap<String, u32>,
    attr_names: Vec<String>,
    tokens: Vec<String>,
    token_lookup: HashMap<String, TokenId>,
    /// TokenId -> sorted entity indices containing the token. The posting
    /// length is the Entity Frequency of the token.
    token_index: Vec<Vec<u32>>,
    parse_errors: usize,
}

/// Splits a value into lowercased tokens on any non-alphanumeric character.
///
/// Numbers and dates are tokenized the same way as any other string. This is
/// the single tokenizer shared by blocking, similarity, and the baseline, so
/// block-derived weights agree with directly computed similarities.
pub fn tokenize(value: &str) -> impl Iterator<Item = String> + '_ {
    value
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

impl KnowledgeBase {
    /// Parses line-oriented triples: three tab-separated fields per line,
    /// the object either a double-quoted literal or a bare id token.
    ///
    /// An unquoted object becomes a relation iff it equals the id of some
    /// subject in the same stream; otherwise it is downgraded to a literal.
    /// Malformed lines are skipped and tallied, empty input yields an empty
    /// KB. Lines starting with `#` are comments.
    pub fn parse_triples<R: BufRead>(reader: R, tag: KbTag) -> Result<KnowledgeBase> {
        let mut raw: BTreeMap<String, Vec<(String, String, bool)>> = BTreeMap::new();
        let mut parse_errors = 0usize;

        for line in reader.lines() {
            let line = line.map_err(|e| Error::io("<triples>", e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (s, p, o) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
                (Some(s), Some(p), Some(o), None) if !s.is_empty() && !p.is_empty() => (s, p, o),
                _ => {
                    parse_errors += 1;
                    continue;
                }
            };
            let (object, quoted) = if o.len() >= 2 && o.starts_with('"') && o.ends_with('"') {
                (o[1..o.len() - 1].to_string(), true)
            } else if o.starts_with('"') || o.is_empty() {
                parse_errors += 1;
                continue;
            } else {
                (o.to_string(), false)
            };
            raw.entry(s.to_string())
                .or_default()
                .push((p.to_string(), object, quoted));
        }

        Ok(Self::from_raw(raw, parse_errors, tag))
    }

    /// Same as [`KnowledgeBase::parse_triples`] over an in-memory string.
    pub fn parse_triples_str(text: &str, tag: KbTag) -> Result<KnowledgeBase> {
        Self::parse_triples(text.as_bytes(), tag)
    }

    fn from_raw(
        raw: BTreeMap<String, Vec<(String, String, bool)>>,
        parse_errors: usize,
        tag: KbTag,
    ) -> KnowledgeBase {
        // BTreeMap iteration gives ids in lexicographic order.
        let id_lookup: HashMap<String, u32> = raw
            .keys()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();

        let mut attr_set: BTreeSet<&str> = BTreeSet::new();
        for triples in raw.values() {
            for (p, _, _) in triples {
                attr_set.insert(p);
            }
        }
        let attr_names: Vec<String> = attr_set.iter().map(|s| s.to_string()).collect();
        let attr_lookup: HashMap<&str, AttrId> = attr_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as AttrId))
            .collect();

        // Resolve values: a bare object that names a subject is a relation,
        // anything else (including dangling refs) is a literal.
        let mut descriptions: Vec<EntityDescription> = Vec::with_capacity(raw.len());
        let mut token_set: BTreeSet<String> = BTreeSet::new();
        for (id, triples) in &raw {
            let mut attributes: Vec<(AttrId, AttrValue)> = Vec::with_capacity(triples.len());
            for (p, o, quoted) in triples {
                let attr = attr_lookup[p.as_str()];
                let value = match (!quoted).then(|| id_lookup.get(o.as_str())).flatten() {
                    Some(&target) => AttrValue::Ref(target),
                    None => AttrValue::Literal(o.clone()),
                };
                attributes.push((attr, value));
            }
            // Set semantics: drop exact duplicate attribute-value pairs.
            attributes.sort_by(|a, b| (a.0, value_sort_key(&a.1)).cmp(&(b.0, value_sort_key(&b.1))));
            attributes.dedup();
            for (_, v) in &attributes {
                if let AttrValue::Literal(text) = v {
                    token_set.extend(tokenize(text));
                }
            }
            descriptions.push(EntityDescription {
                id: id.clone(),
                attributes,
                token_ids: Vec::new(),
            });
        }

        let tokens: Vec<String> = token_set.into_iter().collect();
        let token_lookup: HashMap<String, TokenId> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();

        let mut token_index: Vec<Vec<u32>> = vec![Vec::new(); tokens.len()];
        for (idx, desc) in descriptions.iter_mut().enumerate() {
            let mut ids: BTreeSet<TokenId> = BTreeSet::new();
            for (_, v) in &desc.attributes {
                if let AttrValue::Literal(text) = v {
                    ids.extend(tokenize(text).map(|t| token_lookup[&t]));
                }
            }
            desc.token_ids = ids.into_iter().collect();
            for &t in &desc.token_ids {
                token_index[t as usize].push(idx as u32);
            }
        }

        KnowledgeBase {
            tag,
            descriptions,
            id_lookup,
            attr_names,
            tokens,
            token_lookup,
            token_index,
            parse_errors,
        }
    }

    pub fn len(&self) -> usize {
        self.descriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    pub fn entity(&self, idx: u32) -> &EntityDescription {
        &self.descriptions[idx as usize]
    }

    pub fn entities(&self) -> &[EntityDescription] {
        &self.descriptions
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.id_lookup.get(id).copied()
    }

    pub fn attr_name(&self, attr: AttrId) -> &str {
        &self.attr_names[attr as usize]
    }

    pub fn attr_id(&self, name: &str) -> Option<AttrId> {
        self.attr_names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as AttrId)
    }

    pub fn attr_count(&self) -> usize {
        self.attr_names.len()
    }

    pub fn token_str(&self, token: TokenId) -> &str {
        &self.tokens[token as usize]
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.token_lookup.get(token).copied()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Sorted entity indices whose values contain the token.
    pub fn posting(&self, token: TokenId) -> &[u32] {
        &self.token_index[token as usize]
    }

    /// Entity Frequency: how many descriptions contain the token.
    pub fn ef(&self, token: TokenId) -> usize {
        self.token_index[token as usize].len()
    }

    /// Entity Frequency by token string; 0 when the token is not indexed.
    pub fn ef_of(&self, token: &str) -> usize {
        self.token_id(token).map_or(0, |t| self.ef(t))
    }

    /// Malformed input lines skipped while parsing.
    pub fn parse_errors(&self) -> usize {
        self.parse_errors
    }
}

fn value_sort_key(v: &AttrValue) -> (u8, &str, u32) {
    match v {
        AttrValue::Literal(s) => (0, s.as_str(), 0),
        AttrValue::Ref(t) => (1, "", *t),
    }
}

/// Token-overlap similarity weighted by inverse log EF product:
/// the sum over shared tokens `t` of `1 / log2(EF1(t) * EF2(t) + 1)`.
///
/// Unnormalized: any value in `[0, +inf)`, 0 iff no shared tokens, and at
/// most 1 per shared token (reached when the token is unique to both sides).
pub fn value_sim(kb_i: &KnowledgeBase, i: u32, kb_j: &KnowledgeBase, j: u32) -> f64 {
    let mut sum = 0.0;
    // Token ids are lex-ordered within each KB, so this walks shared tokens
    // in lexicographic order: the same summation order used when deriving
    // the weight from token blocks.
    for &t in kb_i.entity(i).tokens() {
        let Some(t_j) = kb_j.token_id(kb_i.token_str(t)) else {
            continue;
        };
        if kb_j.posting(t_j).binary_search(&j).is_ok() {
            let product = (kb_i.ef(t) * kb_j.ef(t_j)) as f64;
            sum += 1.0 / (product + 1.0).log2();
        }
    }
    sum
}

/// The gold set of matching entity pairs between two clean KBs.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    /// Sorted (KB1 index, KB2 index) pairs.
    pairs: Vec<(u32, u32)>,
    set: HashSet<(u32, u32)>,
    /// Lines whose ids did not resolve in the parsed KBs.
    pub unresolved: usize,
}

impl GroundTruth {
    /// Parses two tab-separated ids per line and resolves them against the
    /// KBs. Ids that do not resolve are skipped and tallied; an id occurring
    /// in more than one resolved pair is an error (clean-clean ground truth
    /// is one-to-one).
    pub fn parse<R: BufRead>(reader: R, kb1: &KnowledgeBase, kb2: &KnowledgeBase) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut unresolved = 0usize;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io("<ground truth>", e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            match (fields.next(), fields.next()) {
                (Some(a), Some(b)) => match (kb1.index_of(a), kb2.index_of(b)) {
                    (Some(i), Some(j)) => pairs.push((i, j)),
                    _ => unresolved += 1,
                },
                _ => unresolved += 1,
            }
        }
        Self::from_pairs(pairs, unresolved)
    }

    pub fn parse_str(text: &str, kb1: &KnowledgeBase, kb2: &KnowledgeBase) -> Result<Self> {
        Self::parse(text.as_bytes(), kb1, kb2)
    }

    fn from_pairs(mut pairs: Vec<(u32, u32)>, unresolved: usize) -> Result<Self> {
        pairs.sort_unstable();
        pairs.dedup();
        let mut seen1 = HashSet::new();
        let mut seen2 = HashSet::new();
        for &(i, j) in &pairs {
            if !seen1.insert(i) {
                return Err(Error::GroundTruth(format!("KB1 entity #{i} occurs twice")));
            }
            if !seen2.insert(j) {
                return Err(Error::GroundTruth(format!("KB2 entity #{j} occurs twice")));
            }
        }
        let set = pairs.iter().copied().collect();
        Ok(GroundTruth {
            pairs,
            set,
            unresolved,
        })
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (u32, u32)) -> bool {
        self.set.contains(&pair)
    }
}
