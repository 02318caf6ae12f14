//! Acceptance suite: one test per gate, each printing a PASS/FAIL line.
//!
//! Heavy and timing-sensitive tests share a process-wide gate so wall-time
//! measurements never overlap with other work in this binary.

use std::collections::HashSet;
use std::sync::Mutex;
use std::time::Instant;

use kbmatch::bsl;
use kbmatch::eval::{rule_ablation, score_matches};
use kbmatch::graph::{beta_weights, build_graph, gamma_weights, top_in_neighbors};
use kbmatch::kb::{value_sim, GroundTruth, KbTag, KnowledgeBase};
use kbmatch::matching::{MatchSet, RuleSet};
use kbmatch::pipeline::{Pipeline, PipelineConfig};
use kbmatch::stats::KbStatistics;
use kbmatch::synth::{self, NearlySimilarSpec};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

static GATE: Mutex<()> = Mutex::new(());

fn gate() -> std::sync::MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|e| e.into_inner())
}

fn check(criterion: &str, ok: bool, detail: String) {
    if ok {
        println!("ACCEPTANCE PASS [{criterion}]: {detail}");
    } else {
        println!("ACCEPTANCE FAIL [{criterion}]: {detail}");
        panic!("{criterion}: {detail}");
    }
}

fn assert_unique_mapping(matches: &MatchSet) {
    let mut seen1 = HashSet::new();
    let mut seen2 = HashSet::new();
    for m in &matches.matches {
        assert!(seen1.insert(m.e1), "entity {} matched twice", m.e1);
        assert!(seen2.insert(m.e2), "entity {} matched twice", m.e2);
    }
}

fn restaurant_kbs() -> (KnowledgeBase, KnowledgeBase, GroundTruth) {
    synth::restaurant().parse().expect("restaurant benchmark")
}

#[test]
fn restaurant_end_to_end() {
    let _g = gate();
    let started = Instant::now();
    let (kb1, kb2, truth) = restaurant_kbs();
    let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
    let (matches, _) = pipeline.match_all();
    assert_unique_mapping(&matches);
    let report = score_matches(&matches, &truth);
    let elapsed = started.elapsed().as_secs_f64();
    check(
        "restaurant end-to-end",
        report.precision >= 98.0 && report.recall >= 98.0 && report.f1 >= 98.0 && elapsed < 120.0,
        format!(
            "P {:.2} R {:.2} F1 {:.2} (each >= 98) in {elapsed:.1}s (< 120s)",
            report.precision, report.recall, report.f1
        ),
    );
}

#[test]
fn restaurant_block_statistics() {
    let _g = gate();
    let (kb1, kb2, truth) = restaurant_kbs();
    let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
    let stats = pipeline.block_statistics(&truth);
    let name_ok = (75..=91).contains(&stats.name_blocks);
    let token_ok = (563..=687).contains(&stats.token_blocks);
    let recall_ok = stats.recall >= 99.0;
    check(
        "restaurant block statistics",
        name_ok && token_ok && recall_ok,
        format!(
            "|B_N| {} (83 +/- 10%), |B_T| {} (625 +/- 10%), blocking recall {:.2} (>= 99)",
            stats.name_blocks, stats.token_blocks, stats.recall
        ),
    );
}

#[test]
fn restaurant_rule_ablation() {
    let _g = gate();
    let (kb1, kb2, truth) = restaurant_kbs();
    let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
    let reports = rule_ablation(&pipeline, &truth);
    let r1 = reports["r1_only"].f1;
    let r2 = reports["r2_only"].f1;
    check(
        "restaurant rule ablation",
        (r1 - 81.33).abs() <= 3.0 && (r2 - 100.0).abs() <= 2.0,
        format!("R1-alone F1 {r1:.2} (81.33 +/- 3), R2-alone F1 {r2:.2} (100 +/- 2)"),
    );
}

/// Runs only when the dataset is present: place kb1.tsv, kb2.tsv, truth.tsv
/// under data/bbcmusic-dbpedia/ or point KBMATCH_BBC_DIR at them.
#[test]
fn bbcmusic_dbpedia_if_obtainable() {
    let _g = gate();
    let dir = std::env::var("KBMATCH_BBC_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|_| std::path::PathBuf::from("data/bbcmusic-dbpedia"));
    if !dir.join("kb1.tsv").exists() {
        println!(
            "ACCEPTANCE SKIP [bbcmusic-dbpedia]: dataset not present at {}",
            dir.display()
        );
        return;
    }
    let kb1 = synth::load_kb(&dir.join("kb1.tsv"), KbTag::Kb1).unwrap();
    let kb2 = synth::load_kb(&dir.join("kb2.tsv"), KbTag::Kb2).unwrap();
    let truth = synth::load_truth(&dir.join("truth.tsv"), &kb1, &kb2).unwrap();
    let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
    let reports = rule_ablation(&pipeline, &truth);
    let full = reports["full"].f1;
    let no_neighbors = reports["no_neighbors"].f1;
    check(
        "bbcmusic-dbpedia",
        (full - 89.97).abs() <= 3.0 && (no_neighbors - 87.25).abs() <= 3.0,
        format!("F1 {full:.2} (89.97 +/- 3), no-neighbors F1 {no_neighbors:.2} (87.25 +/- 3)"),
    );
}

/// Stand-in for the full-scale benchmarks: a 50k-per-side nearly-similar
/// dataset with planted matches whose value similarity stays below 1.
#[test]
fn synthetic_50k_pipeline_vs_baseline() {
    let _g = gate();
    let spec = NearlySimilarSpec {
        pairs: 45_000,
        distractors: 5_000,
        ..NearlySimilarSpec::sized(45_000)
    };
    let (kb1, kb2, truth) = synth::nearly_similar(spec).parse().unwrap();
    assert_eq!(kb1.len(), 50_000);
    assert!(kb2.len() >= 50_000);

    let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
    let (matches, _) = pipeline.match_all();
    assert_unique_mapping(&matches);
    let report = score_matches(&matches, &truth);

    let search = bsl::grid_search(&kb1, &kb2, &pipeline.blocks, &truth);
    let best = search.best();

    let r3_correct = report.per_rule.get("R3").map_or(0, |b| b.correct);
    let r3_share = r3_correct as f64 / report.true_positives.max(1) as f64;

    check(
        "synthetic 50k vs tuned baseline",
        report.f1 >= 0.95 * best.report.f1 && r3_share >= 0.20,
        format!(
            "pipeline F1 {:.2} vs best baseline F1 {:.2} (need >= 95% of it); \
             rank-aggregation rule carries {:.0}% of recall (need >= 20%)",
            report.f1,
            best.report.f1,
            100.0 * r3_share
        ),
    );
}

#[test]
fn property_metric_on_1000_random_triples() {
    let _g = gate();
    let mut rng = StdRng::seed_from_u64(20260810);
    let words = [
        "ash", "bay", "cedar", "dune", "elm", "fir", "glen", "holt", "iris", "jade", "kelp",
        "loam",
    ];
    let mut checked = 0usize;
    while checked < 1000 {
        let n = rng.gen_range(5..40);
        let mut text = String::new();
        for i in 0..n {
            let a = words[rng.gen_range(0..words.len())];
            let b = words[rng.gen_range(0..words.len())];
            let c = words[rng.gen_range(0..words.len())];
            text.push_str(&format!("e{i:02}\tname\t\"{a} {b} {c}\"\n"));
        }
        let kb = KnowledgeBase::parse_triples_str(&text, KbTag::Kb1).unwrap();
        let eps = 1e-9;
        for _ in 0..25 {
            let i = rng.gen_range(0..n) as u32;
            let j = rng.gen_range(0..n) as u32;
            let z = rng.gen_range(0..n) as u32;
            let sij = value_sim(&kb, i, &kb, j);
            assert!(sij >= 0.0);
            assert!((sij - value_sim(&kb, j, &kb, i)).abs() < eps, "symmetry");
            assert!(value_sim(&kb, i, &kb, i) + eps >= sij, "self-maximality");
            let sjz = value_sim(&kb, j, &kb, z);
            let siz = value_sim(&kb, i, &kb, z);
            let sjj = value_sim(&kb, j, &kb, j);
            assert!(sij + sjz <= siz + sjj + eps, "triangle-style bound");
            checked += 1;
        }
    }
    check(
        "value similarity metric properties",
        true,
        format!("{checked} random entity triples satisfied all four properties"),
    );
}

#[test]
fn property_gamma_equals_brute_force() {
    let _g = gate();
    let words = [
        "ash", "bay", "cedar", "dune", "elm", "fir", "glen", "holt", "iris", "jade",
    ];
    for seed in [1u64, 2, 3, 4, 5] {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut gen_kb = |prefix: &str, tag| {
            let mut text = String::new();
            for i in 0..20 {
                let a = words[rng.gen_range(0..words.len())];
                let b = words[rng.gen_range(0..words.len())];
                text.push_str(&format!("{prefix}{i:02}\tname\t\"{a} {b}\"\n"));
                for _ in 0..2 {
                    let j = rng.gen_range(0..20);
                    if j != i {
                        let rel = ["p", "q", "r"][rng.gen_range(0..3)];
                        text.push_str(&format!("{prefix}{i:02}\t{rel}\t{prefix}{j:02}\n"));
                    }
                }
            }
            KnowledgeBase::parse_triples_str(&text, tag).unwrap()
        };
        let kb1 = gen_kb("a", KbTag::Kb1);
        let kb2 = gen_kb("b", KbTag::Kb2);
        let stats1 = KbStatistics::compute(&kb1);
        let stats2 = KbStatistics::compute(&kb2);
        let blocks = kbmatch::blocking::token_blocking(&kb1, &kb2);
        // K large enough that nothing is pruned.
        let beta = beta_weights(&blocks, kb1.len(), kb2.len(), 10_000);
        let tin = top_in_neighbors(&kb1, &kb2, &stats1, &stats2, 3);
        let (gamma1, _) = gamma_weights(&beta, &tin, 10_000);
        for i in 0..20u32 {
            for j in 0..20u32 {
                let mut expected = 0.0;
                for &na in &tin.top_neighbors1[i as usize] {
                    for &nb in &tin.top_neighbors2[j as usize] {
                        expected += value_sim(&kb1, na, &kb2, nb);
                    }
                }
                let got = gamma1[i as usize]
                    .iter()
                    .find(|c| c.target == j)
                    .map_or(0.0, |c| c.weight);
                assert!(
                    (got - expected).abs() < 1e-9,
                    "seed {seed}: gamma({i},{j}) {got} vs {expected}"
                );
            }
        }
    }
    check(
        "gamma equals brute-force neighbor similarity",
        true,
        "all pairs of five 20-entity random KB pairs agree".to_string(),
    );
}

#[test]
fn property_pruned_out_degree_bounded() {
    let _g = gate();
    let (kb1, kb2, _) = restaurant_kbs();
    let stats1 = KbStatistics::compute(&kb1);
    let stats2 = KbStatistics::compute(&kb2);
    let attrs1 = kbmatch::stats::top_k_name_attributes(&kb1, 2, false);
    let attrs2 = kbmatch::stats::top_k_name_attributes(&kb2, 2, false);
    let mut worst = 0usize;
    for k in [1usize, 5, 15] {
        let blocks =
            kbmatch::blocking::build_blocks(&kb1, &kb2, &attrs1, &attrs2, 1e-2).unwrap();
        let graph = build_graph(&kb1, &kb2, &blocks, &stats1, &stats2, k, 3);
        for node in graph.side1.iter().chain(graph.side2.iter()) {
            assert!(node.value.len() <= k, "value candidates exceed K = {k}");
            assert!(node.neighbor.len() <= k, "neighbor candidates exceed K = {k}");
            worst = worst.max(node.value.len()).max(node.neighbor.len());
        }
    }
    check(
        "pruned out-degree bounded by K",
        true,
        format!("per-evidence out-degree <= K for K in {{1, 5, 15}} (worst seen {worst})"),
    );
}

#[test]
fn property_unique_mapping_on_every_run() {
    let _g = gate();
    let (kb1, kb2, _) = restaurant_kbs();
    let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
    for rules in [
        RuleSet::ALL,
        RuleSet::without_r4(),
        RuleSet::without_neighbors(),
    ] {
        let (matches, _) = pipeline.match_with(rules);
        assert_unique_mapping(&matches);
    }
    let (ns1, ns2, _) = synth::nearly_similar(NearlySimilarSpec::sized(500))
        .parse()
        .unwrap();
    let pipeline = Pipeline::prepare(&ns1, &ns2, PipelineConfig::default()).unwrap();
    let (matches, _) = pipeline.match_all();
    assert_unique_mapping(&matches);
    check(
        "unique mapping invariant",
        true,
        "no entity occurs twice in any produced match set".to_string(),
    );
}

#[test]
fn property_bsl_grid_cardinality() {
    let _g = gate();
    let grid = bsl::config_grid();
    let distinct: HashSet<String> = grid.iter().map(|c| format!("{c:?}")).collect();
    check(
        "baseline grid cardinality",
        grid.len() == 420 && distinct.len() == 420,
        format!("{} distinct valid configurations (need exactly 420)", grid.len()),
    );
}

#[test]
fn property_worker_count_invariance() {
    let _g = gate();
    let render = |kb1: &KnowledgeBase, kb2: &KnowledgeBase, matches: &MatchSet| -> Vec<u8> {
        let mut out = Vec::new();
        for m in &matches.matches {
            out.extend_from_slice(
                format!("{}\t{}\t{}\n", kb1.entity(m.e1).id, kb2.entity(m.e2).id, m.rule)
                    .as_bytes(),
            );
        }
        out
    };
    let datasets = vec![
        ("restaurant", synth::restaurant()),
        (
            "nearly-similar capped",
            synth::nearly_similar(NearlySimilarSpec::sized(2000)),
        ),
        (
            "nearly-similar uncapped",
            synth::nearly_similar(NearlySimilarSpec {
                cap_value_sim: false,
                ..NearlySimilarSpec::sized(2000)
            }),
        ),
    ];
    for (name, data) in datasets {
        let (kb1, kb2, _) = data.parse().unwrap();
        let mut outputs = Vec::new();
        for workers in [1usize, 8] {
            let config = PipelineConfig {
                workers,
                ..Default::default()
            };
            let pipeline = Pipeline::prepare(&kb1, &kb2, config).unwrap();
            let (matches, _) = pipeline.match_all();
            outputs.push(render(&kb1, &kb2, &matches));
        }
        assert_eq!(outputs[0], outputs[1], "{name}: output depends on workers");
    }
    check(
        "worker-count invariance",
        true,
        "1 vs 8 workers produce byte-identical matches on all test datasets".to_string(),
    );
}

fn scaling_dataset(entities: usize) -> (KnowledgeBase, KnowledgeBase, GroundTruth) {
    let spec = NearlySimilarSpec {
        pairs: entities * 9 / 10,
        distractors: entities / 10,
        ..NearlySimilarSpec::sized(entities * 9 / 10)
    };
    synth::nearly_similar(spec).parse().unwrap()
}

#[test]
fn scaling_matching_is_linear() {
    let _g = gate();
    let sizes = [10_000usize, 20_000, 40_000];
    let mut points = Vec::new();
    for &n in &sizes {
        let (kb1, kb2, _) = scaling_dataset(n);
        let pipeline = Pipeline::prepare(&kb1, &kb2, PipelineConfig::default()).unwrap();
        // Matching alone, fixed K. The work is deterministic, so the
        // minimum over repetitions is the noise-robust estimate.
        for _ in 0..2 {
            pipeline.match_all();
        }
        let best = (0..15)
            .map(|_| pipeline.match_all().1)
            .fold(f64::INFINITY, f64::min);
        points.push((n as f64, best));
    }
    let r2 = linear_fit_r2(&points);
    check(
        "matching-stage linear scaling",
        r2 >= 0.95,
        format!(
            "matching wall times {:?} ms over {sizes:?} entities, linear fit R^2 {r2:.4} (>= 0.95)",
            points
                .iter()
                .map(|&(_, t)| (t * 1000.0 * 10.0).round() / 10.0)
                .collect::<Vec<_>>()
        ),
    );
}

/// Resolution speedup from 1 to 8 workers on the 40k instance.
///
/// Demands at least 8 hardware threads to be attainable; on smaller hosts
/// the measured ceiling is the core count and this gate fails with the
/// diagnostic below rather than being weakened.
#[test]
fn scaling_worker_speedup() {
    let _g = gate();
    let (kb1, kb2, _) = scaling_dataset(40_000);
    let resolve = |workers: usize| -> f64 {
        let config = PipelineConfig {
            workers,
            ..Default::default()
        };
        (0..3)
            .map(|_| {
                let started = Instant::now();
                let pipeline = Pipeline::prepare(&kb1, &kb2, config).unwrap();
                let (matches, _) = pipeline.match_all();
                assert!(!matches.is_empty());
                started.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let t1 = resolve(1);
    let t8 = resolve(8);
    let speedup = t1 / t8;
    check(
        "worker speedup on 40k",
        speedup >= 3.0,
        format!(
            "1 worker {t1:.2}s, 8 workers {t8:.2}s, speedup {speedup:.2}x (need >= 3x; \
             this host exposes {} hardware threads)",
            std::thread::available_parallelism().map_or(0, |n| n.get())
        ),
    );
}

fn linear_fit_r2(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}
