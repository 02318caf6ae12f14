//! Deterministic synthetic benchmark generators.
//!
//! Two families:
//!
//! - [`restaurant`]: a small two-KB benchmark shaped like the classic
//!   restaurant-linkage setting: 339 vs 2,256 entities, 89 gold pairs, 61 of
//!   them sharing an exact name and 22 also sharing a phone, plus city and
//!   cuisine entities reached through relations. Shared vocabulary is either
//!   pair-specific (tiny blocks carrying the match signal) or ubiquitous
//!   (huge blocks that block purging removes), so the expected block
//!   statistics and per-rule outcomes are known by construction.
//! - [`nearly_similar`]: a scalable benchmark whose gold pairs share only
//!   frequent-enough tokens, optionally capping every planted pair's value
//!   similarity below 1 so that value evidence alone cannot decide matches
//!   and neighbor evidence has to carry the rest.
//!
//! Everything is a pure function of the parameters: no RNG, byte-identical
//! output on every run.

// Entity ids and vocabulary are derived from loop indices, so index-driven
// loops are the natural shape here.
#![allow(clippy::needless_range_loop)]

use std::io::BufRead;

use crate::error::Result;
use crate::kb::{GroundTruth, KbTag, KnowledgeBase};

/// A generated pair of triple streams plus gold pairs.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub kb1: String,
    pub kb2: String,
    pub truth: String,
}

impl SynthDataset {
    pub fn parse(&self) -> Result<(KnowledgeBase, KnowledgeBase, GroundTruth)> {
        let kb1 = KnowledgeBase::parse_triples(self.kb1.as_bytes(), KbTag::Kb1)?;
        let kb2 = KnowledgeBase::parse_triples(self.kb2.as_bytes(), KbTag::Kb2)?;
        let truth = GroundTruth::parse(self.truth.as_bytes(), &kb1, &kb2)?;
        Ok((kb1, kb2, truth))
    }

    pub fn write_to(&self, dir: &std::path::Path) -> Result<()> {
        let write = |name: &str, text: &str| {
            std::fs::write(dir.join(name), text)
                .map_err(|e| crate::error::Error::io(dir.join(name), e))
        };
        write("kb1.tsv", &self.kb1)?;
        write("kb2.tsv", &self.kb2)?;
        write("truth.tsv", &self.truth)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

const SYLLABLES: [&str; 20] = [
    "ba", "ce", "di", "fo", "gu", "ha", "ke", "li", "mo", "nu", "pa", "re", "si", "to", "vu",
    "wa", "ye", "za", "cho", "ski",
];

/// Deterministic pronounceable word: namespace prefix plus base-20
/// syllables. Distinct prefixes guarantee disjoint vocabularies.
fn word(prefix: &str, mut idx: usize) -> String {
    let mut out = String::from(prefix);
    for _ in 0..4 {
        out.push_str(SYLLABLES[idx % SYLLABLES.len()]);
        idx /= SYLLABLES.len();
    }
    out
}

// ---------------------------------------------------------------------------
// Restaurant-shaped benchmark
// ---------------------------------------------------------------------------

const R_PAIRS: usize = 89;
const R_NAME_SHARED: usize = 61;
const R_PHONE_SHARED: usize = 22;
const R_KB1_EXTRA: usize = 225;
const R_KB2_EXTRA: usize = 2122;
const R_KB1_CITIES: usize = 10;
const R_KB2_CITIES: usize = 25;
const R_KB1_CUISINES: usize = 15;
const R_KB2_CUISINES: usize = 20;
const R_FLAVOR_TOKENS: usize = 240;
/// Every entity of either KB carries these words, so their blocks exceed
/// any sane comparison budget and purging must drop them.
const R_STOPWORDS: [&str; 3] = ["restaurant", "food", "place"];

/// Builds the restaurant-shaped benchmark: 339 + 2,256 entities, 89 gold
/// pairs.
pub fn restaurant() -> SynthDataset {
    let mut kb1 = String::new();
    let mut kb2 = String::new();
    let mut truth = String::new();

    let stop = R_STOPWORDS.join(" ");

    // Gold restaurants. Pair-specific vocabulary: two name words, one
    // street word, one street number; the first 61 share the exact name
    // string, the first 22 also the phone.
    for i in 0..R_PAIRS {
        let id1 = format!("r1_gold_{i:03}");
        let id2 = format!("r2_gold_{i:03}");
        let name_a = word("sh", 2 * i);
        let name_b = word("sh", 2 * i + 1);
        let street = word("st", i);
        let number = 1000 + i;

        let name1 = format!("{name_a} {name_b}");
        let name2 = if i < R_NAME_SHARED {
            name1.clone()
        } else {
            format!("{name_b} {name_a}")
        };
        let phone1;
        let phone2;
        if i < R_PHONE_SHARED {
            phone1 = format!("7{:06}", 100000 + i);
            phone2 = phone1.clone();
        } else {
            phone1 = format!("1{:06}", 210000 + i);
            phone2 = format!("2{:06}", 310000 + i);
        }

        push_restaurant(
            &mut kb1,
            &id1,
            &name1,
            &phone1,
            &format!("{number} {street} street"),
            &stop,
            &format!("r1_city_{:02}", i % R_KB1_CITIES),
            &format!("r1_cuisine_{:02}", i % R_KB1_CUISINES),
        );
        push_restaurant(
            &mut kb2,
            &id2,
            &name2,
            &phone2,
            &format!("{number} {street} avenue"),
            &stop,
            &format!("r2_city_{:02}", i % R_KB2_CITIES),
            &format!("r2_cuisine_{:02}", i % R_KB2_CUISINES),
        );
        truth.push_str(&format!("{id1}\t{id2}\n"));
    }

    // Flavor vocabulary: rare extra tokens shared between one gold KB1
    // entity and two KB2 entities, thickening the retained token blocks
    // without ever outweighing a gold pair's own evidence.
    let mut kb1_notes: Vec<Vec<String>> = vec![Vec::new(); R_PAIRS];
    let mut kb2_notes: Vec<Vec<String>> = vec![Vec::new(); R_KB2_EXTRA];
    for t in 0..R_FLAVOR_TOKENS {
        let w = word("fl", t);
        kb1_notes[t % R_PAIRS].push(w.clone());
        let first = (t * 13 + 1) % R_KB2_EXTRA;
        let mut second = (t * 29 + 7) % R_KB2_EXTRA;
        if second == first {
            second = (second + 1) % R_KB2_EXTRA;
        }
        kb2_notes[first].push(w.clone());
        kb2_notes[second].push(w);
    }
    for (i, words) in kb1_notes.iter().enumerate() {
        if !words.is_empty() {
            kb1.push_str(&format!("r1_gold_{i:03}\tnote\t\"{}\"\n", words.join(" ")));
        }
    }

    // Unmatched restaurants: KB-local vocabulary only (plus the purged
    // stopwords), odd street numbers in KB1 and even in KB2. A slice of
    // them shares one fixed address string per KB, pulling the address
    // attribute's distinct-value ratio below the name and phone attributes.
    for j in 0..R_KB1_EXTRA {
        let id = format!("r1_only_{j:04}");
        let addr = if j % 2 == 0 {
            "1 upplaza street".to_string()
        } else {
            format!("{} {} street", 5001 + 2 * j, word("kr", 600 + j))
        };
        push_restaurant(
            &mut kb1,
            &id,
            &format!("{} {}", word("kr", 2 * j), word("kr", 2 * j + 1)),
            &format!("1{:06}", 200000 + j),
            &addr,
            &stop,
            &format!("r1_city_{:02}", j % R_KB1_CITIES),
            &format!("r1_cuisine_{:02}", j % R_KB1_CUISINES),
        );
    }
    for j in 0..R_KB2_EXTRA {
        let id = format!("r2_only_{j:04}");
        let addr = if j % 3 == 0 {
            "2 downcentro avenue".to_string()
        } else {
            format!("{} {} avenue", 6000 + 2 * j, word("vl", 9000 + j))
        };
        push_restaurant(
            &mut kb2,
            &id,
            &format!("{} {}", word("vl", 2 * j), word("vl", 2 * j + 1)),
            &format!("2{:06}", 300000 + j),
            &addr,
            &stop,
            &format!("r2_city_{:02}", j % R_KB2_CITIES),
            &format!("r2_cuisine_{:02}", j % R_KB2_CUISINES),
        );
        if !kb2_notes[j].is_empty() {
            kb2.push_str(&format!("{id}\tnote\t\"{}\"\n", kb2_notes[j].join(" ")));
        }
    }

    // Cities and cuisines: relation targets with KB-local labels, so
    // neighbor evidence exists structurally but carries no cross-KB signal.
    for c in 0..R_KB1_CITIES {
        kb1.push_str(&format!("r1_city_{c:02}\tlabel\t\"{}\"\n", word("cta", c)));
        kb1.push_str(&format!("r1_city_{c:02}\ttype\t\"munidistrict west\"\n"));
    }
    for c in 0..R_KB2_CITIES {
        kb2.push_str(&format!("r2_city_{c:02}\tlabel\t\"{}\"\n", word("ctb", c)));
        kb2.push_str(&format!("r2_city_{c:02}\ttype\t\"urbanborough east\"\n"));
    }
    for c in 0..R_KB1_CUISINES {
        kb1.push_str(&format!("r1_cuisine_{c:02}\tlabel\t\"{}\"\n", word("cua", c)));
        kb1.push_str(&format!("r1_cuisine_{c:02}\ttype\t\"munidistrict west\"\n"));
    }
    for c in 0..R_KB2_CUISINES {
        kb2.push_str(&format!("r2_cuisine_{c:02}\tlabel\t\"{}\"\n", word("cub", c)));
        kb2.push_str(&format!("r2_cuisine_{c:02}\ttype\t\"urbanborough east\"\n"));
    }

    SynthDataset { kb1, kb2, truth }
}

#[allow(clippy::too_many_arguments)]
fn push_restaurant(
    out: &mut String,
    id: &str,
    name: &str,
    phone: &str,
    addr: &str,
    type_value: &str,
    city: &str,
    cuisine: &str,
) {
    out.push_str(&format!("{id}\tname\t\"{name}\"\n"));
    out.push_str(&format!("{id}\tphone\t\"{phone}\"\n"));
    out.push_str(&format!("{id}\taddr\t\"{addr}\"\n"));
    out.push_str(&format!("{id}\ttype\t\"{type_value}\"\n"));
    out.push_str(&format!("{id}\tin_city\t{city}\n"));
    out.push_str(&format!("{id}\tserves\t{cuisine}\n"));
}

// ---------------------------------------------------------------------------
// Nearly-similar benchmark
// ---------------------------------------------------------------------------

/// Parameters of the nearly-similar benchmark.
#[derive(Debug, Clone, Copy)]
pub struct NearlySimilarSpec {
    /// Gold pairs; rounded down to an even count.
    pub pairs: usize,
    /// Extra unmatched entities per KB.
    pub distractors: usize,
    /// Fraction of gold pairs sharing an exact name string.
    pub name_share: f64,
    /// Cap every gold pair's value similarity below 1 by spreading each
    /// shared token over two pairs (EF 2 x 2 per side). Without the cap the
    /// shared tokens are pair-unique and value similarity reaches 2.
    pub cap_value_sim: bool,
    /// Fraction of gold pairs that get a relation-less decoy in KB2 whose
    /// token overlap with the KB1 entity beats the true match's. Only
    /// meaningful under the cap; requires at least 4 distractors.
    pub decoy_share: f64,
}

impl NearlySimilarSpec {
    pub fn sized(pairs: usize) -> NearlySimilarSpec {
        NearlySimilarSpec {
            pairs,
            distractors: (pairs / 9).max(8),
            name_share: 0.4,
            cap_value_sim: true,
            decoy_share: 0.3,
        }
    }
}

/// Builds the nearly-similar benchmark.
///
/// Every gold pair shares one token from the `sa` pool and one from the
/// `sb` pool; under the cap each pool token covers two adjacent pairs,
/// staggered so no two pairs share both tokens. Entities link to the 1st,
/// 3rd, and 7th next gold entity of their own KB, giving aligned
/// neighborhoods whose betas feed the neighbor evidence.
///
/// A decoy carries the pair's `sa` token plus two extra tokens shared with
/// the KB1 entity (EF 2 x 4 each, weight 0.3155..), which lifts its value
/// similarity above the true match's while keeping it below 1: value-only
/// matching prefers the decoy, neighbor evidence prefers the match.
pub fn nearly_similar(spec: NearlySimilarSpec) -> SynthDataset {
    let pairs = spec.pairs & !1;
    assert!(pairs >= 10, "need at least 10 gold pairs");
    let named = (pairs as f64 * spec.name_share) as usize;
    let with_decoys = spec.cap_value_sim && spec.decoy_share > 0.0;
    if with_decoys {
        assert!(spec.distractors >= 4, "decoys need at least 4 distractors");
    }
    let decoyed = |p: usize| {
        if !with_decoys || p < named {
            return false;
        }
        // Bresenham-style selection: exactly floor(i * share) pairs chosen.
        let i = (p - named) as f64;
        ((i + 1.0) * spec.decoy_share).floor() > (i * spec.decoy_share).floor()
    };

    let mut kb1 = String::with_capacity(pairs * 200);
    let mut kb2 = String::with_capacity(pairs * 200);
    let mut truth = String::with_capacity(pairs * 20);

    // KB2 ids are permuted so that id order carries no signal about the
    // gold alignment; tie-breaks must not be able to solve the benchmark.
    let multiplier = {
        let mut m = 48271usize;
        while gcd(m, pairs) != 1 {
            m += 2;
        }
        m
    };
    let perm = |p: usize| (p * multiplier + 17) % pairs;

    // Extra tokens a KB1 entity owes to other pairs' decoys, and the noise
    // tokens spread over distractors to pin the extras' EF at 2 x 4.
    let mut kb1_extra: Vec<Vec<String>> = vec![Vec::new(); pairs];
    let mut kb2_noise: Vec<Vec<String>> = vec![Vec::new(); spec.distractors];
    let mut decoys = String::new();
    for p in 0..pairs {
        if !decoyed(p) {
            continue;
        }
        let x1 = word("xa", p);
        let x2 = word("xb", p);
        kb1_extra[p].push(x1.clone());
        kb1_extra[p].push(x2.clone());
        kb1_extra[(p + 5) % pairs].push(x1.clone());
        kb1_extra[(p + 11) % pairs].push(x2.clone());
        for (token, salt) in [(&x1, 7 * p), (&x2, 11 * p + 2)] {
            let mut taken: Vec<usize> = Vec::new();
            let mut d = salt % spec.distractors;
            while taken.len() < 3 {
                if !taken.contains(&d) {
                    taken.push(d);
                    kb2_noise[d].push(token.clone());
                }
                d = (d + 1) % spec.distractors;
            }
        }
        let tok_a = word("sa", p / 2);
        decoys.push_str(&format!("bd{p:06}\tname\t\"{tok_a} {x1} {x2}\"\n"));
        decoys.push_str(&format!(
            "bd{p:06}\tloc\t\"{} {}\"\n",
            word("kd", 2 * p),
            word("kd", 2 * p + 1)
        ));
    }

    for p in 0..pairs {
        let id1 = format!("a{p:06}");
        let id2 = format!("b{:06}", perm(p));
        let (tok_a, tok_b) = if spec.cap_value_sim {
            // Token q of pool a covers pairs 2q and 2q+1; pool b staggers
            // by one so partners differ.
            (word("sa", p / 2), word("sb", ((p + 1) % pairs) / 2))
        } else {
            (word("sa", p), word("sb", p))
        };
        let name1 = format!("{tok_a} {tok_b}");
        let name2 = if p < named {
            name1.clone()
        } else {
            format!("{tok_b} {tok_a} {}", word("vx", p))
        };
        kb1.push_str(&format!("{id1}\tname\t\"{name1}\"\n"));
        kb2.push_str(&format!("{id2}\tname\t\"{name2}\"\n"));
        if !kb1_extra[p].is_empty() {
            kb1.push_str(&format!("{id1}\tnote\t\"{}\"\n", kb1_extra[p].join(" ")));
        }
        kb1.push_str(&format!(
            "{id1}\tloc\t\"{} {}\"\n",
            word("ka", 2 * p),
            word("ka", 2 * p + 1)
        ));
        kb2.push_str(&format!(
            "{id2}\tloc\t\"{} {}\"\n",
            word("kb", 2 * p),
            word("kb", 2 * p + 1)
        ));
        for (rel, step) in [("rel0", 1usize), ("rel1", 3), ("rel2", 7)] {
            let q = (p + step) % pairs;
            kb1.push_str(&format!("{id1}\t{rel}\ta{q:06}\n"));
            kb2.push_str(&format!("{id2}\t{rel}\tb{:06}\n", perm(q)));
        }
        truth.push_str(&format!("{id1}\t{id2}\n"));
    }

    kb2.push_str(&decoys);
    for d in 0..spec.distractors {
        kb1.push_str(&format!(
            "ax{d:06}\tname\t\"{} {}\"\n",
            word("da", 2 * d),
            word("da", 2 * d + 1)
        ));
        kb2.push_str(&format!(
            "bx{d:06}\tname\t\"{} {}\"\n",
            word("db", 2 * d),
            word("db", 2 * d + 1)
        ));
        if !kb2_noise[d].is_empty() {
            kb2.push_str(&format!("bx{d:06}\tnote\t\"{}\"\n", kb2_noise[d].join(" ")));
        }
    }

    SynthDataset { kb1, kb2, truth }
}

/// Reads a whole file as a KB; a convenience for the CLI and tests.
pub fn load_kb(path: &std::path::Path, tag: KbTag) -> Result<KnowledgeBase> {
    let file = std::fs::File::open(path).map_err(|e| crate::error::Error::io(path, e))?;
    KnowledgeBase::parse_triples(std::io::BufReader::new(file), tag)
}

/// Reads a ground-truth file against two parsed KBs.
pub fn load_truth(
    path: &std::path::Path,
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
) -> Result<GroundTruth> {
    let file = std::fs::File::open(path).map_err(|e| crate::error::Error::io(path, e))?;
    let reader: Box<dyn BufRead> = Box::new(std::io::BufReader::new(file));
    GroundTruth::parse(reader, kb1, kb2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restaurant_has_expected_shape() {
        let data = restaurant();
        let (kb1, kb2, truth) = data.parse().unwrap();
        assert_eq!(kb1.len(), 339);
        assert_eq!(kb2.len(), 2256);
        assert_eq!(truth.len(), 89);
        assert_eq!(kb1.parse_errors(), 0);
        assert_eq!(kb2.parse_errors(), 0);
    }

    #[test]
    fn restaurant_is_deterministic() {
        let a = restaurant();
        let b = restaurant();
        assert_eq!(a.kb1, b.kb1);
        assert_eq!(a.kb2, b.kb2);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn nearly_similar_caps_value_similarity() {
        let data = nearly_similar(NearlySimilarSpec::sized(50));
        let (kb1, kb2, truth) = data.parse().unwrap();
        for &(i, j) in truth.pairs() {
            let sim = crate::kb::value_sim(&kb1, i, &kb2, j);
            assert!(sim < 1.0, "planted pair similarity {sim} reached 1");
            assert!(sim > 0.0);
        }
    }

    #[test]
    fn nearly_similar_uncapped_reaches_two() {
        let data = nearly_similar(NearlySimilarSpec {
            cap_value_sim: false,
            ..NearlySimilarSpec::sized(50)
        });
        let (kb1, kb2, truth) = data.parse().unwrap();
        let (i, j) = truth.pairs()[0];
        assert!((crate::kb::value_sim(&kb1, i, &kb2, j) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn word_namespaces_are_disjoint() {
        for i in 0..100 {
            assert_ne!(word("sa", i), word("sb", i));
            assert!(word("sa", i).starts_with("sa"));
        }
        // Different indices map to different words within a namespace.
        let mut seen = std::collections::HashSet::new();
        for i in 0..50_000 {
            assert!(seen.insert(word("sa", i)), "collision at {i}");
        }
    }
}
