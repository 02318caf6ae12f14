//! The pruned disjunctive blocking graph.
//!
//! Nodes are the entities of both KBs; each directed edge carries a label
//! (alpha, beta, gamma): alpha = 1 when the two entities form a 1x1 name
//! block, beta accumulates `1 / log2(|b1|*|b2| + 1)` over the token blocks
//! shared by the pair (recovering value similarity from block sizes), and
//! gamma distributes each beta over the in-neighbor pairs of its endpoints
//! (recovering neighbor similarity from the already-computed betas).
//!
//! Per node and per evidence type, only the K best candidates are retained,
//! which turns the undirected candidate graph into a directed one; the
//! matcher's reciprocity rule later exploits exactly this asymmetry. The
//! graph is never materialized as an edge list: every node stores its own
//! candidate lists, backed by the inverted block indices.
//!
//! Construction runs in three barriers, mirroring the staged data-parallel
//! layout: (name evidence | value evidence | top-neighbor extraction), then
//! neighbor evidence, then per-node pruning. Within a stage the work is
//! partitioned per entity and every per-entity accumulation iterates in a
//! fixed sorted order, so results are identical for any worker count.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::blocking::{Block, BlockCollection};
use crate::kb::{KbTag, KnowledgeBase};
use crate::stats::{top_n_neighbors, KbStatistics};

/// A candidate edge target with its evidence weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedCandidate {
    /// Entity index in the opposite KB.
    pub target: u32,
    pub weight: f64,
}

/// The retained out-edges of one node, split per evidence type.
#[derive(Debug, Clone, Default)]
pub struct NodeCandidates {
    /// Targets of alpha = 1 edges (1x1 name blocks), sorted.
    pub alpha: Vec<u32>,
    /// Top-K targets by beta, descending weight then ascending id.
    pub value: Vec<WeightedCandidate>,
    /// Top-K targets by gamma, descending weight then ascending id.
    pub neighbor: Vec<WeightedCandidate>,
    /// Sorted union of the above: the node's directed out-edges.
    targets: Vec<u32>,
}

impl NodeCandidates {
    /// Builds a node from its evidence lists, deriving the directed target
    /// union.
    pub fn new(
        alpha: Vec<u32>,
        value: Vec<WeightedCandidate>,
        neighbor: Vec<WeightedCandidate>,
    ) -> Self {
        let mut targets: Vec<u32> = alpha
            .iter()
            .copied()
            .chain(value.iter().map(|c| c.target))
            .chain(neighbor.iter().map(|c| c.target))
            .collect();
        targets.sort_unstable();
        targets.dedup();
        NodeCandidates {
            alpha,
            value,
            neighbor,
            targets,
        }
    }

    pub fn has_edge_to(&self, target: u32) -> bool {
        self.targets.binary_search(&target).is_ok()
    }

    pub fn out_degree(&self) -> usize {
        self.targets.len()
    }

    pub fn is_isolated(&self) -> bool {
        self.targets.is_empty()
    }
}

/// For every entity, the entities of the same KB that list it among their
/// top-N neighbors.
#[derive(Debug)]
pub struct TopInNeighbors {
    /// Per KB1 entity: its top-N neighbors (sorted).
    pub top_neighbors1: Vec<Vec<u32>>,
    pub top_neighbors2: Vec<Vec<u32>>,
    /// Per KB1 entity: who has it as a top neighbor (sorted).
    pub top_in1: Vec<Vec<u32>>,
    pub top_in2: Vec<Vec<u32>>,
}

/// The pruned, directed disjunctive blocking graph.
#[derive(Debug)]
pub struct BlockingGraph {
    pub side1: Vec<NodeCandidates>,
    pub side2: Vec<NodeCandidates>,
    pub k: usize,
}

impl BlockingGraph {
    pub fn node(&self, kb: KbTag, idx: u32) -> &NodeCandidates {
        match kb {
            KbTag::Kb1 => &self.side1[idx as usize],
            KbTag::Kb2 => &self.side2[idx as usize],
        }
    }

    /// True when the directed edge `from -> to` survived pruning under any
    /// evidence type.
    pub fn has_edge(&self, from_kb: KbTag, from: u32, to: u32) -> bool {
        self.node(from_kb, from).has_edge_to(to)
    }

    /// Both directed edges present.
    pub fn reciprocal(&self, e1: u32, e2: u32) -> bool {
        self.side1[e1 as usize].has_edge_to(e2) && self.side2[e2 as usize].has_edge_to(e1)
    }

    /// Line-oriented debug dump of every directed edge:
    /// `src  dst  alpha  beta  gamma`.
    pub fn dump_edges<W: std::io::Write>(
        &self,
        kb1: &KnowledgeBase,
        kb2: &KnowledgeBase,
        out: &mut W,
    ) -> std::io::Result<()> {
        let sides = [
            (&self.side1, kb1, kb2),
            (&self.side2, kb2, kb1),
        ];
        for (side, from_kb, to_kb) in sides {
            for (idx, node) in side.iter().enumerate() {
                for &t in &node.targets {
                    let alpha = u8::from(node.alpha.binary_search(&t).is_ok());
                    let beta = node
                        .value
                        .iter()
                        .find(|c| c.target == t)
                        .map_or(0.0, |c| c.weight);
                    let gamma = node
                        .neighbor
                        .iter()
                        .find(|c| c.target == t)
                        .map_or(0.0, |c| c.weight);
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}",
                        from_kb.entity(idx as u32).id,
                        to_kb.entity(t).id,
                        alpha,
                        beta,
                        gamma
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Name blocks holding exactly one comparison yield an alpha = 1 edge.
pub fn alpha_edges(name_blocks: &[Block]) -> Vec<(u32, u32)> {
    let mut pairs: Vec<(u32, u32)> = name_blocks
        .iter()
        .filter(|b| b.comparisons() == 1)
        .map(|b| (b.sub1[0], b.sub2[0]))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Per-node value candidates and the beta weights behind them.
#[derive(Debug)]
pub struct BetaWeights {
    /// Top-K candidates per KB1 entity.
    pub value1: Vec<Vec<WeightedCandidate>>,
    pub value2: Vec<Vec<WeightedCandidate>>,
    /// Per KB1 entity, every pair retained from either direction, sorted by
    /// target. Feeds the gamma stage.
    partners1: Vec<Vec<WeightedCandidate>>,
    partners2: Vec<Vec<WeightedCandidate>>,
}

impl BetaWeights {
    /// The beta weight of a retained pair, if any direction kept it.
    pub fn pair_weight(&self, e1: u32, e2: u32) -> Option<f64> {
        self.partners1[e1 as usize]
            .iter()
            .find(|c| c.target == e2)
            .map(|c| c.weight)
    }
}

fn top_k(mut candidates: Vec<WeightedCandidate>, k: usize) -> Vec<WeightedCandidate> {
    candidates.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap()
            .then(a.target.cmp(&b.target))
    });
    candidates.truncate(k);
    candidates
}

/// Accumulates beta over the purged token blocks and keeps the top-K
/// candidates per node, for both directions.
///
/// The weight of a pair is summed in ascending block order from both sides,
/// so the two directions agree bitwise and the result is independent of
/// worker count.
pub fn beta_weights(token_blocks: &[Block], n1: usize, n2: usize, k: usize) -> BetaWeights {
    let weights: Vec<f64> = token_blocks
        .iter()
        .map(|b| 1.0 / (b.comparisons() as f64 + 1.0).log2())
        .collect();

    // Which blocks contain each entity, in ascending block order.
    let mut blocks_of1: Vec<Vec<u32>> = vec![Vec::new(); n1];
    let mut blocks_of2: Vec<Vec<u32>> = vec![Vec::new(); n2];
    for (b_idx, block) in token_blocks.iter().enumerate() {
        for &e in &block.sub1 {
            blocks_of1[e as usize].push(b_idx as u32);
        }
        for &e in &block.sub2 {
            blocks_of2[e as usize].push(b_idx as u32);
        }
    }

    let accumulate = |own_blocks: &[u32], other_sub: fn(&Block) -> &[u32]| {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for &b in own_blocks {
            let w = weights[b as usize];
            for &other in other_sub(&token_blocks[b as usize]) {
                *acc.entry(other).or_insert(0.0) += w;
            }
        }
        acc.into_iter()
            .map(|(target, weight)| WeightedCandidate { target, weight })
            .collect::<Vec<_>>()
    };

    let value1: Vec<Vec<WeightedCandidate>> = blocks_of1
        .par_iter()
        .map(|blocks| top_k(accumulate(blocks, |b| &b.sub2), k))
        .collect();
    let value2: Vec<Vec<WeightedCandidate>> = blocks_of2
        .par_iter()
        .map(|blocks| top_k(accumulate(blocks, |b| &b.sub1), k))
        .collect();

    // Union of retained pairs from both directions, indexed from each side.
    let mut partners1: Vec<Vec<WeightedCandidate>> = value1.clone();
    for (e2, cands) in value2.iter().enumerate() {
        for c in cands {
            partners1[c.target as usize].push(WeightedCandidate {
                target: e2 as u32,
                weight: c.weight,
            });
        }
    }
    let mut partners2: Vec<Vec<WeightedCandidate>> = value2.clone();
    for (e1, cands) in value1.iter().enumerate() {
        for c in cands {
            partners2[c.target as usize].push(WeightedCandidate {
                target: e1 as u32,
                weight: c.weight,
            });
        }
    }
    let tidy = |lists: &mut Vec<Vec<WeightedCandidate>>| {
        for list in lists {
            list.sort_by_key(|c| c.target);
            list.dedup_by_key(|c| c.target);
        }
    };
    tidy(&mut partners1);
    tidy(&mut partners2);

    BetaWeights {
        value1,
        value2,
        partners1,
        partners2,
    }
}

/// Each entity's top-N neighbors and the reverse mapping.
pub fn top_in_neighbors(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    stats1: &KbStatistics,
    stats2: &KbStatistics,
    n: usize,
) -> TopInNeighbors {
    let top_neighbors1: Vec<Vec<u32>> = (0..kb1.len() as u32)
        .into_par_iter()
        .map(|e| top_n_neighbors(kb1, e, stats1, n))
        .collect();
    let top_neighbors2: Vec<Vec<u32>> = (0..kb2.len() as u32)
        .into_par_iter()
        .map(|e| top_n_neighbors(kb2, e, stats2, n))
        .collect();

    let reverse = |tops: &[Vec<u32>], len: usize| {
        let mut rev: Vec<Vec<u32>> = vec![Vec::new(); len];
        for (e, neighbors) in tops.iter().enumerate() {
            for &ne in neighbors {
                rev[ne as usize].push(e as u32);
            }
        }
        rev
    };
    let top_in1 = reverse(&top_neighbors1, kb1.len());
    let top_in2 = reverse(&top_neighbors2, kb2.len());
    TopInNeighbors {
        top_neighbors1,
        top_neighbors2,
        top_in1,
        top_in2,
    }
}

/// Distributes every retained beta over the in-neighbor pairs of its
/// endpoints and keeps the top-K gamma candidates per node.
///
/// For a pair (a, b), the accumulated gamma equals the sum of the retained
/// betas over `topNneighbors(a) x topNneighbors(b)`: the neighbor similarity
/// restricted to beta-surviving neighbor pairs. Each node gathers its own
/// gamma map by walking its top neighbors' beta partners, so every pair
/// contributes exactly once per direction and the iteration order is fixed.
pub fn gamma_weights(
    beta: &BetaWeights,
    tin: &TopInNeighbors,
    k: usize,
) -> (Vec<Vec<WeightedCandidate>>, Vec<Vec<WeightedCandidate>>) {
    let gather = |top_neighbors: &Vec<u32>,
                  partners: &[Vec<WeightedCandidate>],
                  top_in_other: &[Vec<u32>]| {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for &na in top_neighbors {
            for cand in &partners[na as usize] {
                for &b in &top_in_other[cand.target as usize] {
                    *acc.entry(b).or_insert(0.0) += cand.weight;
                }
            }
        }
        top_k(
            acc.into_iter()
                .map(|(target, weight)| WeightedCandidate { target, weight })
                .collect(),
            k,
        )
    };

    let neighbor1: Vec<Vec<WeightedCandidate>> = tin
        .top_neighbors1
        .par_iter()
        .map(|tops| gather(tops, &beta.partners1, &tin.top_in2))
        .collect();
    let neighbor2: Vec<Vec<WeightedCandidate>> = tin
        .top_neighbors2
        .par_iter()
        .map(|tops| gather(tops, &beta.partners2, &tin.top_in1))
        .collect();
    (neighbor1, neighbor2)
}

/// Builds the pruned graph: alpha edges from name blocks, beta from token
/// blocks, gamma from top in-neighbors, with per-node top-K retention per
/// evidence type.
pub fn build_graph(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    blocks: &BlockCollection,
    stats1: &KbStatistics,
    stats2: &KbStatistics,
    k: usize,
    n: usize,
) -> BlockingGraph {
    let alpha = alpha_edges(&blocks.name_blocks);
    let beta = beta_weights(&blocks.token_blocks, kb1.len(), kb2.len(), k);
    let tin = top_in_neighbors(kb1, kb2, stats1, stats2, n);
    let (neighbor1, neighbor2) = gamma_weights(&beta, &tin, k);
    assemble(kb1.len(), kb2.len(), &alpha, beta, neighbor1, neighbor2, k)
}

fn assemble(
    n1: usize,
    n2: usize,
    alpha: &[(u32, u32)],
    beta: BetaWeights,
    neighbor1: Vec<Vec<WeightedCandidate>>,
    neighbor2: Vec<Vec<WeightedCandidate>>,
    k: usize,
) -> BlockingGraph {
    let mut alpha1: Vec<Vec<u32>> = vec![Vec::new(); n1];
    let mut alpha2: Vec<Vec<u32>> = vec![Vec::new(); n2];
    for &(e1, e2) in alpha {
        alpha1[e1 as usize].push(e2);
        alpha2[e2 as usize].push(e1);
    }
    for list in alpha1.iter_mut().chain(alpha2.iter_mut()) {
        list.sort_unstable();
        list.dedup();
    }

    let build_side = |alphas: Vec<Vec<u32>>,
                      values: Vec<Vec<WeightedCandidate>>,
                      neighbors: Vec<Vec<WeightedCandidate>>| {
        alphas
            .into_iter()
            .zip(values)
            .zip(neighbors)
            .map(|((alpha, value), neighbor)| NodeCandidates::new(alpha, value, neighbor))
            .collect::<Vec<_>>()
    };

    BlockingGraph {
        side1: build_side(alpha1, beta.value1, neighbor1),
        side2: build_side(alpha2, beta.value2, neighbor2),
        k,
    }
}
