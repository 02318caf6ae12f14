//! Precision/recall/F1 scoring against ground truth, with per-rule
//! attribution and rule ablations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::kb::GroundTruth;
use crate::matching::{MatchRule, MatchSet, RuleSet};
use crate::pipeline::Pipeline;

/// How many matches a rule proposed and how many were correct.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RuleBreakdown {
    pub proposed: usize,
    pub correct: usize,
}

/// Pairwise evaluation of a match set. Percentages carry full precision;
/// reports render them with two decimals.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub per_rule: BTreeMap<String, RuleBreakdown>,
    /// (stage, seconds), when the caller recorded timings.
    pub timings: Vec<(String, f64)>,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> EvalReport {
        let precision = if tp + fp > 0 {
            100.0 * tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            100.0 * tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            ..Default::default()
        }
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "precision {:>6.2}  recall {:>6.2}  F1 {:>6.2}   (tp {}, fp {}, fn {})",
            self.precision,
            self.recall,
            self.f1,
            self.true_positives,
            self.false_positives,
            self.false_negatives
        )?;
        for (rule, b) in &self.per_rule {
            writeln!(f, "  {rule}: {} proposed, {} correct", b.proposed, b.correct)?;
        }
        Ok(())
    }
}

/// Scores bare pairs, order-independent.
pub fn score_pairs(pairs: &[(u32, u32)], truth: &GroundTruth) -> EvalReport {
    let tp = pairs.iter().filter(|&&p| truth.contains(p)).count();
    let fp = pairs.len() - tp;
    let fn_ = truth.len() - tp;
    EvalReport::from_counts(tp, fp, fn_)
}

/// Scores a match set and attributes hits per rule.
pub fn score_matches(matches: &MatchSet, truth: &GroundTruth) -> EvalReport {
    let pairs: Vec<(u32, u32)> = matches.pairs().collect();
    let mut report = score_pairs(&pairs, truth);
    for m in &matches.matches {
        let entry = report.per_rule.entry(m.rule.to_string()).or_default();
        entry.proposed += 1;
        if truth.contains((m.e1, m.e2)) {
            entry.correct += 1;
        }
    }
    report
}

/// The standard ablation suite over one prepared pipeline: each rule alone,
/// the pipeline without the reciprocity filter, and the pipeline without
/// neighbor evidence. The `full` entry equals the regular pipeline output.
pub fn rule_ablation(pipeline: &Pipeline<'_>, truth: &GroundTruth) -> BTreeMap<String, EvalReport> {
    let variants: [(&str, RuleSet); 6] = [
        ("full", RuleSet::ALL),
        ("r1_only", RuleSet::only(MatchRule::R1)),
        ("r2_only", RuleSet::only(MatchRule::R2)),
        ("r3_only", RuleSet::only(MatchRule::R3)),
        ("no_r4", RuleSet::without_r4()),
        ("no_neighbors", RuleSet::without_neighbors()),
    ];
    variants
        .iter()
        .map(|(name, rules)| {
            let (matches, secs) = pipeline.match_with(*rules);
            let mut report = score_matches(&matches, truth);
            report.timings.push(("matching".to_string(), secs));
            (name.to_string(), report)
        })
        .collect()
}
