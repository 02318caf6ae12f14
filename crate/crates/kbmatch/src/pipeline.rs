//! End-to-end staging: statistics -> blocking -> graph -> matching.
//!
//! Stages run in dependency order with a barrier between them; within a
//! stage, work is data-parallel over entities. Every cross-worker merge is
//! either a per-entity computation or a sorted deterministic reduction, so
//! for a fixed input and configuration the match output is byte-identical
//! for any worker count.

use std::time::Instant;

use crate::blocking::{block_stats, build_blocks, BlockCollection, BlockStats};
use crate::error::Result;
use crate::graph::{build_graph, BlockingGraph};
use crate::kb::{AttrId, GroundTruth, KnowledgeBase};
use crate::matching::{run_rules, MatchSet, MatcherConfig, RuleSet};
use crate::stats::{top_k_name_attributes, KbStatistics};

/// Full run configuration for the resolution pipeline.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PipelineConfig {
    pub matcher: MatcherConfig,
    /// Token-block comparison budget as a fraction of |E1| * |E2|.
    pub purge_fraction: f64,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    /// Rank name attributes by support alone instead of the harmonic mean
    /// of support and distinctiveness.
    pub name_rank_support_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            matcher: MatcherConfig::default(),
            purge_fraction: 1e-2,
            workers: 0,
            name_rank_support_only: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.matcher.validate()?;
        if !(self.purge_fraction > 0.0 && self.purge_fraction <= 1.0) {
            return Err(crate::error::Error::Parameter {
                name: "purge-fraction",
                reason: format!("{} is outside (0, 1]", self.purge_fraction),
            });
        }
        Ok(())
    }
}

/// A prepared run: blocks and graph built once, rules applied on demand.
///
/// Keeping the graph around lets rule ablations reuse the expensive stages;
/// the full pipeline and an ablation over the same `Pipeline` see exactly
/// the same graph.
pub struct Pipeline<'a> {
    pub kb1: &'a KnowledgeBase,
    pub kb2: &'a KnowledgeBase,
    pub config: PipelineConfig,
    pub name_attrs1: Vec<AttrId>,
    pub name_attrs2: Vec<AttrId>,
    pub stats1: KbStatistics,
    pub stats2: KbStatistics,
    pub blocks: BlockCollection,
    pub graph: BlockingGraph,
    /// (stage, seconds) for the preparation stages.
    pub timings: Vec<(String, f64)>,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Pipeline<'a> {
    /// Builds statistics, blocks, and the pruned graph.
    pub fn prepare(
        kb1: &'a KnowledgeBase,
        kb2: &'a KnowledgeBase,
        config: PipelineConfig,
    ) -> Result<Pipeline<'a>> {
        config.validate()?;
        let pool = match config.workers {
            0 => None,
            n => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| crate::error::Error::Config(e.to_string()))?,
            ),
        };

        struct Prepared {
            stats1: KbStatistics,
            stats2: KbStatistics,
            name_attrs1: Vec<AttrId>,
            name_attrs2: Vec<AttrId>,
            blocks: BlockCollection,
            graph: BlockingGraph,
        }
        let build = || -> Result<(Vec<(String, f64)>, Prepared)> {
            let mut timings = Vec::new();

            let t = Instant::now();
            let stats1 = KbStatistics::compute(kb1);
            let stats2 = KbStatistics::compute(kb2);
            let name_attrs1 =
                top_k_name_attributes(kb1, config.matcher.name_attrs, config.name_rank_support_only);
            let name_attrs2 =
                top_k_name_attributes(kb2, config.matcher.name_attrs, config.name_rank_support_only);
            timings.push(("statistics".to_string(), t.elapsed().as_secs_f64()));

            let t = Instant::now();
            let blocks = build_blocks(
                kb1,
                kb2,
                &name_attrs1,
                &name_attrs2,
                config.purge_fraction,
            )?;
            timings.push(("blocking".to_string(), t.elapsed().as_secs_f64()));

            let t = Instant::now();
            let graph = build_graph(
                kb1,
                kb2,
                &blocks,
                &stats1,
                &stats2,
                config.matcher.candidates,
                config.matcher.top_relations,
            );
            timings.push(("graph".to_string(), t.elapsed().as_secs_f64()));

            Ok((
                timings,
                Prepared {
                    stats1,
                    stats2,
                    name_attrs1,
                    name_attrs2,
                    blocks,
                    graph,
                },
            ))
        };
        let (timings, prepared) = match &pool {
            Some(p) => p.install(build),
            None => build(),
        }?;

        Ok(Pipeline {
            kb1,
            kb2,
            config,
            name_attrs1: prepared.name_attrs1,
            name_attrs2: prepared.name_attrs2,
            stats1: prepared.stats1,
            stats2: prepared.stats2,
            blocks: prepared.blocks,
            graph: prepared.graph,
            timings,
            pool,
        })
    }

    /// Applies the selected rules; returns the match set and the matching
    /// wall time in seconds.
    pub fn match_with(&self, rules: RuleSet) -> (MatchSet, f64) {
        self.match_with_theta(rules, self.config.matcher.theta)
    }

    /// Same, with a theta override: theta only affects rank aggregation, so
    /// sweeps can reuse one prepared graph across all theta values.
    pub fn match_with_theta(&self, rules: RuleSet, theta: f64) -> (MatchSet, f64) {
        let graph = &self.graph;
        let work = || {
            let t = Instant::now();
            let matches = run_rules(graph, rules, theta);
            (matches, t.elapsed().as_secs_f64())
        };
        match &self.pool {
            Some(p) => p.install(work),
            None => work(),
        }
    }

    /// The full rule chain R1 -> R2 -> R3 -> R4.
    pub fn match_all(&self) -> (MatchSet, f64) {
        self.match_with(RuleSet::ALL)
    }

    /// Block statistics of this run's collection against ground truth.
    pub fn block_statistics(&self, truth: &GroundTruth) -> BlockStats {
        block_stats(&self.blocks, self.kb1, self.kb2, truth)
    }
}

/// One-shot convenience: prepare, match with all rules, and return the
/// match set plus per-stage timings (including "matching" and "total").
pub fn run_pipeline(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    config: PipelineConfig,
) -> Result<(MatchSet, Vec<(String, f64)>)> {
    let total = Instant::now();
    let pipeline = Pipeline::prepare(kb1, kb2, config)?;
    let (matches, matching_secs) = pipeline.match_all();
    let mut timings = pipeline.timings.clone();
    timings.push(("matching".to_string(), matching_secs));
    timings.push(("total".to_string(), total.elapsed().as_secs_f64()));
    Ok((matches, timings))
}
