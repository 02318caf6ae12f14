//! The non-iterative four-rule matcher.
//!
//! Every rule makes one pass over the pruned graph, never revisiting
//! decisions:
//!
//! - R1 (names): every alpha = 1 edge is a match.
//! - R2 (values): each unmatched entity of the smaller KB matches its best
//!   value candidate when that beta is at least 1, i.e. when the pair shares
//!   one token unique to both KBs or several infrequent ones.
//! - R3 (rank aggregation): each remaining entity scores its candidates by
//!   normalized rank in the value- and neighbor-candidate lists, weighted
//!   theta vs 1 - theta, and matches its top-scored candidate. Order of
//!   candidates matters here, not absolute similarities.
//! - R4 (reciprocity): a proposed pair survives only if both directed edges
//!   exist in the pruned graph.
//!
//! Matched entities are excluded from later rules, and every id ends up in
//! at most one match. Collisions (two proposals claiming the same entity)
//! are resolved toward the higher evidence score, then the smaller id pair,
//! which keeps the output independent of worker count and input order.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::BlockingGraph;

/// Which rule produced a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum MatchRule {
    R1,
    R2,
    R3,
}

impl std::fmt::Display for MatchRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MatchRule::R1 => write!(f, "R1"),
            MatchRule::R2 => write!(f, "R2"),
            MatchRule::R3 => write!(f, "R3"),
        }
    }
}

/// A cross-KB match with rule provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub e1: u32,
    pub e2: u32,
    pub rule: MatchRule,
}

/// The final matches plus the proposals the reciprocity filter removed.
#[derive(Debug, Clone, Default)]
pub struct MatchSet {
    /// Sorted by (e1, e2); each entity occurs at most once.
    pub matches: Vec<Match>,
    /// Proposals dropped by R4.
    pub filtered: Vec<Match>,
}

impl MatchSet {
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.matches.iter().map(|m| (m.e1, m.e2))
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

/// Matcher parameters: `k` name attributes per KB, `K` candidates per node,
/// `N` top relations per entity, and the rank-aggregation trade-off `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatcherConfig {
    pub name_attrs: usize,
    pub candidates: usize,
    pub top_relations: usize,
    pub theta: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            name_attrs: 2,
            candidates: 15,
            top_relations: 3,
            theta: 0.6,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Parameter {
                name: "theta",
                reason: format!("{} is outside (0, 1)", self.theta),
            });
        }
        for (name, v) in [
            ("k", self.name_attrs),
            ("big-k", self.candidates),
            ("n", self.top_relations),
        ] {
            if v < 1 {
                return Err(Error::Parameter {
                    name,
                    reason: "must be at least 1".to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Which rules to run; ablations toggle individual rules off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleSet {
    pub r1: bool,
    pub r2: bool,
    pub r3: bool,
    pub r4: bool,
}

impl RuleSet {
    pub const ALL: RuleSet = RuleSet {
        r1: true,
        r2: true,
        r3: true,
        r4: true,
    };

    pub fn only(rule: MatchRule) -> RuleSet {
        RuleSet {
            r1: rule == MatchRule::R1,
            r2: rule == MatchRule::R2,
            r3: rule == MatchRule::R3,
            r4: false,
        }
    }

    pub fn without_r4() -> RuleSet {
        RuleSet {
            r4: false,
            ..RuleSet::ALL
        }
    }

    pub fn without_neighbors() -> RuleSet {
        RuleSet {
            r3: false,
            ..RuleSet::ALL
        }
    }
}

struct MatchState {
    matched1: Vec<bool>,
    matched2: Vec<bool>,
    matches: Vec<Match>,
}

impl MatchState {
    fn new(n1: usize, n2: usize) -> Self {
        MatchState {
            matched1: vec![false; n1],
            matched2: vec![false; n2],
            matches: Vec::new(),
        }
    }

    fn free(&self, e1: u32, e2: u32) -> bool {
        !self.matched1[e1 as usize] && !self.matched2[e2 as usize]
    }

    fn accept(&mut self, e1: u32, e2: u32, rule: MatchRule) {
        self.matched1[e1 as usize] = true;
        self.matched2[e2 as usize] = true;
        self.matches.push(Match { e1, e2, rule });
    }
}

/// Runs the selected rules over the pruned graph.
pub fn run_rules(graph: &BlockingGraph, rules: RuleSet, theta: f64) -> MatchSet {
    let n1 = graph.side1.len();
    let n2 = graph.side2.len();
    let mut state = MatchState::new(n1, n2);

    if rules.r1 {
        rule_r1(graph, &mut state);
    }
    if rules.r2 {
        rule_r2(graph, &mut state);
    }
    if rules.r3 {
        rule_r3(graph, theta, &mut state);
    }

    let mut matches = state.matches;
    matches.sort_by_key(|m| (m.e1, m.e2));

    let mut filtered = Vec::new();
    if rules.r4 {
        let (kept, dropped): (Vec<Match>, Vec<Match>) = matches
            .into_iter()
            .partition(|m| graph.reciprocal(m.e1, m.e2));
        matches = kept;
        filtered = dropped;
    }
    MatchSet { matches, filtered }
}

/// R1: every alpha edge yields a match. Pairs are visited in ascending id
/// order; an entity already claimed by an earlier alpha pair is skipped,
/// keeping the mapping one-to-one.
fn rule_r1(graph: &BlockingGraph, state: &mut MatchState) {
    for (e1, node) in graph.side1.iter().enumerate() {
        for &e2 in &node.alpha {
            if state.free(e1 as u32, e2) {
                state.accept(e1 as u32, e2, MatchRule::R1);
            }
        }
    }
}

/// R2: each unmatched entity of the smaller KB takes its top value
/// candidate; the pair is a match when beta >= 1.
fn rule_r2(graph: &BlockingGraph, state: &mut MatchState) {
    let kb1_smaller = graph.side1.len() <= graph.side2.len();
    // (weight, subject, target): subject is in the smaller KB.
    let proposals: Vec<(f64, u32, u32)> = if kb1_smaller {
        collect_r2(&graph.side1, &state.matched1, &state.matched2)
    } else {
        collect_r2(&graph.side2, &state.matched2, &state.matched1)
    };

    let mut proposals = proposals;
    proposals.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
    for (_, subject, target) in proposals {
        let (e1, e2) = if kb1_smaller {
            (subject, target)
        } else {
            (target, subject)
        };
        if state.free(e1, e2) {
            state.accept(e1, e2, MatchRule::R2);
        }
    }
}

fn collect_r2(
    side: &[crate::graph::NodeCandidates],
    matched_own: &[bool],
    matched_other: &[bool],
) -> Vec<(f64, u32, u32)> {
    side.par_iter()
        .enumerate()
        .filter_map(|(e, node)| {
            if matched_own[e] {
                return None;
            }
            let top = node.value.first()?;
            if top.weight >= 1.0 && !matched_other[top.target as usize] {
                Some((top.weight, e as u32, top.target))
            } else {
                None
            }
        })
        .collect()
}

/// R3: threshold-free rank aggregation over both candidate lists.
///
/// In a list of length L the best candidate scores L/L and the worst 1/L;
/// a candidate absent from a list contributes 0 for it. The aggregate is
/// `theta * value_rank + (1 - theta) * neighbor_rank`, and the node proposes
/// its best-scored still-unmatched candidate. Conflicting proposals resolve
/// toward the higher aggregate, then the smaller pair.
fn rule_r3(graph: &BlockingGraph, theta: f64, state: &mut MatchState) {
    let collect = |side: &[crate::graph::NodeCandidates],
                   matched_own: &[bool],
                   matched_other: &[bool]| {
        side.par_iter()
            .enumerate()
            .filter_map(|(e, node)| {
                if matched_own[e] {
                    return None;
                }
                best_candidate(node, theta, matched_other).map(|(t, score)| (score, e as u32, t))
            })
            .collect::<Vec<(f64, u32, u32)>>()
    };
    let from1 = collect(&graph.side1, &state.matched1, &state.matched2);
    let from2 = collect(&graph.side2, &state.matched2, &state.matched1);

    // Normalize to (score, e1, e2); a pair proposed from both sides keeps
    // its higher score.
    let mut proposals: Vec<(f64, u32, u32)> = from1;
    proposals.extend(from2.into_iter().map(|(s, e2, e1)| (s, e1, e2)));
    proposals.sort_by(|a, b| {
        (a.1, a.2)
            .cmp(&(b.1, b.2))
            .then(b.0.partial_cmp(&a.0).unwrap())
    });
    proposals.dedup_by_key(|p| (p.1, p.2));
    proposals.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));

    for (_, e1, e2) in proposals {
        if state.free(e1, e2) {
            state.accept(e1, e2, MatchRule::R3);
        }
    }
}

/// Scores one node's candidates and returns the best unmatched one.
/// Ranks are taken over the full stored lists, so an already-matched
/// candidate still occupies its rank position.
fn best_candidate(
    node: &crate::graph::NodeCandidates,
    theta: f64,
    matched_other: &[bool],
) -> Option<(u32, f64)> {
    if node.value.is_empty() && node.neighbor.is_empty() {
        return None;
    }
    let mut scores: Vec<(u32, f64)> = Vec::with_capacity(node.value.len() + node.neighbor.len());
    let len_v = node.value.len() as f64;
    for (pos, c) in node.value.iter().enumerate() {
        let rank = (node.value.len() - pos) as f64 / len_v;
        scores.push((c.target, theta * rank));
    }
    let len_n = node.neighbor.len() as f64;
    for (pos, c) in node.neighbor.iter().enumerate() {
        let rank = (node.neighbor.len() - pos) as f64 / len_n;
        match scores.iter_mut().find(|(t, _)| *t == c.target) {
            Some((_, s)) => *s += (1.0 - theta) * rank,
            None => scores.push((c.target, (1.0 - theta) * rank)),
        }
    }
    scores
        .into_iter()
        .filter(|&(t, _)| !matched_other[t as usize])
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
}
