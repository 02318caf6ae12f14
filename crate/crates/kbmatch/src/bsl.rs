//! The fine-tuned value-only baseline.
//!
//! Entities become token n-gram profiles under TF or TF-IDF weighting; all
//! pairs co-occurring in the (unpruned) name or token blocks are scored
//! with one of four similarity functions, and Unique Mapping Clustering
//! greedily assigns one-to-one matches above a threshold. The full grid of
//! n-gram size x weighting x similarity x threshold holds exactly 420 valid
//! configurations; neighbor evidence is deliberately ignored.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::blocking::BlockCollection;
use crate::error::{Error, Result};
use crate::eval::{score_pairs, EvalReport};
use crate::kb::{tokenize, AttrValue, GroundTruth, KnowledgeBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Weighting {
    Tf,
    TfIdf,
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Weighting::Tf => write!(f, "tf"),
            Weighting::TfIdf => write!(f, "tfidf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SimilarityFn {
    Cosine,
    Jaccard,
    GeneralizedJaccard,
    /// TF-IDF weighted overlap over shared grams; valid only with TF-IDF.
    Sigma,
}

impl std::fmt::Display for SimilarityFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimilarityFn::Cosine => write!(f, "cosine"),
            SimilarityFn::Jaccard => write!(f, "jaccard"),
            SimilarityFn::GeneralizedJaccard => write!(f, "generalized-jaccard"),
            SimilarityFn::Sigma => write!(f, "sigma"),
        }
    }
}

/// One cell of the baseline grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BslConfig {
    /// Token n-gram size, 1..=3.
    pub ngram: usize,
    pub weighting: Weighting,
    pub similarity: SimilarityFn,
    /// Unique-mapping cutoff in {0.00, 0.05, ..., 0.95}.
    pub threshold: f64,
}

impl BslConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.ngram) {
            return Err(Error::Parameter {
                name: "ngram",
                reason: format!("{} is outside 1..=3", self.ngram),
            });
        }
        if self.similarity == SimilarityFn::Sigma && self.weighting != Weighting::TfIdf {
            return Err(Error::Config(
                "sigma similarity applies exclusively to TF-IDF weights".to_string(),
            ));
        }
        Ok(())
    }
}

/// The full valid grid in canonical order: 3 n-gram sizes x 2 weightings x
/// 4 similarities x 20 thresholds, minus the 60 sigma-with-TF cells = 420.
pub fn config_grid() -> Vec<BslConfig> {
    let mut grid = Vec::with_capacity(420);
    for ngram in 1..=3 {
        for weighting in [Weighting::Tf, Weighting::TfIdf] {
            for similarity in [
                SimilarityFn::Cosine,
                SimilarityFn::Jaccard,
                SimilarityFn::GeneralizedJaccard,
                SimilarityFn::Sigma,
            ] {
                if similarity == SimilarityFn::Sigma && weighting != Weighting::TfIdf {
                    continue;
                }
                for step in 0..20 {
                    grid.push(BslConfig {
                        ngram,
                        weighting,
                        similarity,
                        threshold: step as f64 * 0.05,
                    });
                }
            }
        }
    }
    grid
}

/// A sparse weighted n-gram profile: (gram id, weight) sorted by gram id.
#[derive(Debug, Clone, Default)]
pub struct WeightedProfile {
    grams: Vec<(u32, f64)>,
    norm: f64,
    weight_sum: f64,
}

impl WeightedProfile {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }
}

/// Profiles for both KBs under one (n-gram, weighting) choice. IDF counts
/// treat every entity of either KB as one document.
#[derive(Debug)]
pub struct ProfileSet {
    pub kb1: Vec<WeightedProfile>,
    pub kb2: Vec<WeightedProfile>,
}

fn entity_grams(kb: &KnowledgeBase, entity: u32, n: usize) -> Vec<String> {
    let mut grams = Vec::new();
    for (_, value) in &kb.entity(entity).attributes {
        if let AttrValue::Literal(text) = value {
            let tokens: Vec<String> = tokenize(text).collect();
            if tokens.len() < n {
                continue;
            }
            for window in tokens.windows(n) {
                grams.push(window.join(" "));
            }
        }
    }
    grams
}

/// Builds TF or TF-IDF profiles for both KBs.
pub fn build_profiles(kb1: &KnowledgeBase, kb2: &KnowledgeBase, n: usize, weighting: Weighting) -> ProfileSet {
    // Intern grams across both KBs; ids only need to be consistent.
    let mut gram_ids: HashMap<String, u32> = HashMap::new();
    let mut document_frequency: Vec<u32> = Vec::new();
    let mut raw: Vec<Vec<Vec<(u32, u32)>>> = Vec::with_capacity(2);
    for kb in [kb1, kb2] {
        let mut kb_profiles = Vec::with_capacity(kb.len());
        for e in 0..kb.len() as u32 {
            let mut counts: HashMap<u32, u32> = HashMap::new();
            for gram in entity_grams(kb, e, n) {
                let next = gram_ids.len() as u32;
                let id = *gram_ids.entry(gram).or_insert(next);
                if id as usize == document_frequency.len() {
                    document_frequency.push(0);
                }
                *counts.entry(id).or_insert(0) += 1;
            }
            for &id in counts.keys() {
                document_frequency[id as usize] += 1;
            }
            let mut sorted: Vec<(u32, u32)> = counts.into_iter().collect();
            sorted.sort_unstable();
            kb_profiles.push(sorted);
        }
        raw.push(kb_profiles);
    }

    let documents = (kb1.len() + kb2.len()) as f64;
    let weigh = |counts: Vec<(u32, u32)>| {
        let total: u32 = counts.iter().map(|&(_, c)| c).sum();
        let grams: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(id, count)| {
                let tf = count as f64 / total as f64;
                let w = match weighting {
                    Weighting::Tf => tf,
                    Weighting::TfIdf => {
                        tf * (documents / document_frequency[id as usize] as f64).ln()
                    }
                };
                (id, w)
            })
            .collect();
        let norm = grams.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        let weight_sum = grams.iter().map(|(_, w)| w).sum();
        WeightedProfile {
            grams,
            norm,
            weight_sum,
        }
    };

    let kb2_raw = raw.pop().unwrap();
    let kb1_raw = raw.pop().unwrap();
    ProfileSet {
        kb1: kb1_raw.into_iter().map(weigh).collect(),
        kb2: kb2_raw.into_iter().map(weigh).collect(),
    }
}

/// The configured similarity of two profiles, normalized to [0, 1].
pub fn pair_similarity(p1: &WeightedProfile, p2: &WeightedProfile, sim: SimilarityFn) -> f64 {
    if p1.is_empty() || p2.is_empty() {
        return 0.0;
    }
    let mut dot = 0.0;
    let mut shared_weight = 0.0;
    let mut min_sum = 0.0;
    let mut max_sum = 0.0;
    let mut shared = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < p1.grams.len() && j < p2.grams.len() {
        let (g1, w1) = p1.grams[i];
        let (g2, w2) = p2.grams[j];
        match g1.cmp(&g2) {
            std::cmp::Ordering::Less => {
                max_sum += w1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                max_sum += w2;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                dot += w1 * w2;
                shared_weight += w1 + w2;
                min_sum += w1.min(w2);
                max_sum += w1.max(w2);
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    max_sum += p1.grams[i..].iter().map(|(_, w)| w).sum::<f64>();
    max_sum += p2.grams[j..].iter().map(|(_, w)| w).sum::<f64>();

    match sim {
        SimilarityFn::Cosine => {
            if p1.norm == 0.0 || p2.norm == 0.0 {
                0.0
            } else {
                (dot / (p1.norm * p2.norm)).min(1.0)
            }
        }
        SimilarityFn::Jaccard => {
            let union = p1.len() + p2.len() - shared;
            if union == 0 {
                0.0
            } else {
                shared as f64 / union as f64
            }
        }
        SimilarityFn::GeneralizedJaccard => {
            if max_sum == 0.0 {
                0.0
            } else {
                min_sum / max_sum
            }
        }
        SimilarityFn::Sigma => {
            let denominator = p1.weight_sum + p2.weight_sum;
            if denominator == 0.0 {
                0.0
            } else {
                shared_weight / denominator
            }
        }
    }
}

/// Distinct cross-KB pairs co-occurring in at least one block, sorted.
pub fn candidate_pairs(blocks: &BlockCollection) -> Vec<(u32, u32)> {
    let mut pairs: HashSet<(u32, u32)> = HashSet::new();
    for block in blocks.blocks() {
        for &i in &block.sub1 {
            for &j in &block.sub2 {
                pairs.insert((i, j));
            }
        }
    }
    let mut pairs: Vec<(u32, u32)> = pairs.into_iter().collect();
    pairs.sort_unstable();
    pairs
}

/// Greedy one-to-one assignment: pairs in decreasing similarity, a pair is
/// accepted when neither side is matched yet, and the sweep stops at the
/// first pair below the threshold. Ties break on the smaller pair so the
/// result is deterministic.
pub fn unique_mapping_clustering(
    scored: &[(f64, u32, u32)],
    threshold: f64,
) -> Vec<(u32, u32)> {
    let mut matched1: HashSet<u32> = HashSet::new();
    let mut matched2: HashSet<u32> = HashSet::new();
    let mut out = Vec::new();
    for &(score, e1, e2) in scored {
        if score < threshold {
            break;
        }
        if !matched1.contains(&e1) && !matched2.contains(&e2) {
            matched1.insert(e1);
            matched2.insert(e2);
            out.push((e1, e2));
        }
    }
    out.sort_unstable();
    out
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct GridEntry {
    pub config: BslConfig,
    pub report: EvalReport,
}

/// Grid search over all 420 configurations.
#[derive(Debug)]
pub struct GridSearch {
    /// In canonical grid order.
    pub entries: Vec<GridEntry>,
    best: usize,
}

impl GridSearch {
    pub fn best(&self) -> &GridEntry {
        &self.entries[self.best]
    }
}

/// Scores every candidate pair under each profile/similarity combination
/// once, then sweeps all thresholds through unique mapping clustering and
/// reports per-configuration metrics.
pub fn grid_search(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    blocks: &BlockCollection,
    truth: &GroundTruth,
) -> GridSearch {
    let pairs = candidate_pairs(blocks);
    let grid = config_grid();
    let mut entries: Vec<Option<GridEntry>> = vec![None; grid.len()];

    for ngram in 1..=3usize {
        for weighting in [Weighting::Tf, Weighting::TfIdf] {
            let profiles = build_profiles(kb1, kb2, ngram, weighting);
            for similarity in [
                SimilarityFn::Cosine,
                SimilarityFn::Jaccard,
                SimilarityFn::GeneralizedJaccard,
                SimilarityFn::Sigma,
            ] {
                if similarity == SimilarityFn::Sigma && weighting != Weighting::TfIdf {
                    continue;
                }
                let mut scored: Vec<(f64, u32, u32)> = pairs
                    .par_iter()
                    .map(|&(i, j)| {
                        let s = pair_similarity(
                            &profiles.kb1[i as usize],
                            &profiles.kb2[j as usize],
                            similarity,
                        );
                        (s, i, j)
                    })
                    .collect();
                scored.sort_by(|a, b| {
                    b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2)))
                });
                for (slot, config) in grid.iter().enumerate() {
                    if config.ngram == ngram
                        && config.weighting == weighting
                        && config.similarity == similarity
                    {
                        let matches = unique_mapping_clustering(&scored, config.threshold);
                        entries[slot] = Some(GridEntry {
                            config: *config,
                            report: score_pairs(&matches, truth),
                        });
                    }
                }
            }
        }
    }

    let entries: Vec<GridEntry> = entries.into_iter().map(Option::unwrap).collect();
    let best = entries
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.report
                .f1
                .partial_cmp(&b.report.f1)
                .unwrap()
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .unwrap();
    GridSearch { entries, best }
}
