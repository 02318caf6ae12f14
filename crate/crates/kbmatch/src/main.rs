//! Command-line entry point.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use kbmatch::bsl::grid_search;
use kbmatch::config::RunConfig;
use kbmatch::error::Error;
use kbmatch::eval::{rule_ablation, score_matches, EvalReport};
use kbmatch::kb::{GroundTruth, KbTag, KnowledgeBase};
use kbmatch::matching::MatchSet;
use kbmatch::pipeline::Pipeline;
use kbmatch::synth;
use kbmatch::Result;

#[derive(Parser)]
#[command(
    name = "kbmatch",
    about = "Schema-agnostic, non-iterative entity resolution between two knowledge bases",
    version
)]
struct Cli {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// KB1 triple file (subject<TAB>predicate<TAB>object, literals quoted).
    #[arg(long, global = true)]
    kb1: Option<PathBuf>,

    /// KB2 triple file.
    #[arg(long, global = true)]
    kb2: Option<PathBuf>,

    /// Ground truth file (two tab-separated ids per line).
    #[arg(long, global = true)]
    truth: Option<PathBuf>,

    /// Name attributes per KB.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Candidates kept per node and evidence type (K).
    #[arg(long = "big-k", global = true)]
    big_k: Option<usize>,

    /// Top relations per entity (N).
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Rank-aggregation trade-off between value and neighbor evidence.
    #[arg(long, global = true)]
    theta: Option<f64>,

    /// Token-block comparison budget as a fraction of |E1|*|E2|.
    #[arg(long = "purge-fraction", global = true)]
    purge_fraction: Option<f64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Rank name attributes by support alone.
    #[arg(long = "name-rank-support-only", global = true)]
    name_rank_support_only: bool,

    /// Also write the pruned graph as line-oriented records.
    #[arg(long = "dump-graph", global = true)]
    dump_graph: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write matches.tsv plus report.json.
    Match,
    /// Report block statistics against the ground truth.
    Blocks,
    /// Run the rule ablation suite (each rule alone, no-R4, no-neighbors).
    Ablate,
    /// Tune and evaluate the value-only baseline over its 420-cell grid.
    Bsl,
    /// Sensitivity sweep over the matcher parameters.
    Sweep {
        /// Evaluate the full cartesian grid instead of one-at-a-time.
        #[arg(long)]
        full: bool,
    },
    /// Generate a synthetic benchmark into the output directory.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        /// Gold pairs for the nearly-similar benchmark.
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Leave planted value similarities uncapped.
        #[arg(long)]
        uncapped: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// 339 + 2,256 entities, 89 gold pairs, known block statistics.
    Restaurant,
    /// Nearly-similar pairs whose value similarity stays below 1.
    NearlySimilar,
}

fn main() {
    // Die quietly when stdout closes early (e.g. piped into head).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e {
            Error::Config(_) | Error::Parameter { .. } => 2,
            _ => 1,
        };
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    apply_flags(&mut config, &cli);
    config.validate()?;
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;

    match cli.command {
        Command::Match => cmd_match(&config),
        Command::Blocks => cmd_blocks(&config),
        Command::Ablate => cmd_ablate(&config),
        Command::Bsl => cmd_bsl(&config),
        Command::Sweep { full } => cmd_sweep(&config, full),
        Command::Synth {
            kind,
            pairs,
            uncapped,
        } => cmd_synth(&config, kind, pairs, uncapped),
    }
}

fn apply_flags(config: &mut RunConfig, cli: &Cli) {
    if let Some(p) = &cli.kb1 {
        config.kb1 = Some(p.clone());
    }
    if let Some(p) = &cli.kb2 {
        config.kb2 = Some(p.clone());
    }
    if let Some(p) = &cli.truth {
        config.truth = Some(p.clone());
    }
    if let Some(p) = &cli.out {
        config.out = p.clone();
    }
    if let Some(v) = cli.k {
        config.pipeline.matcher.name_attrs = v;
    }
    if let Some(v) = cli.big_k {
        config.pipeline.matcher.candidates = v;
    }
    if let Some(v) = cli.n {
        config.pipeline.matcher.top_relations = v;
    }
    if let Some(v) = cli.theta {
        config.pipeline.matcher.theta = v;
    }
    if let Some(v) = cli.purge_fraction {
        config.pipeline.purge_fraction = v;
    }
    if let Some(v) = cli.workers {
        config.pipeline.workers = v;
    }
    if cli.name_rank_support_only {
        config.pipeline.name_rank_support_only = true;
    }
    if cli.dump_graph {
        config.dump_graph = true;
    }
}

fn load_inputs(config: &RunConfig) -> Result<(KnowledgeBase, KnowledgeBase)> {
    let kb1_path = config
        .kb1
        .as_ref()
        .ok_or_else(|| Error::Config("missing --kb1 (or kb1 = ... in the config file)".into()))?;
    let kb2_path = config
        .kb2
        .as_ref()
        .ok_or_else(|| Error::Config("missing --kb2 (or kb2 = ... in the config file)".into()))?;
    let kb1 = synth::load_kb(kb1_path, KbTag::Kb1)?;
    let kb2 = synth::load_kb(kb2_path, KbTag::Kb2)?;
    for kb in [&kb1, &kb2] {
        if kb.parse_errors() > 0 {
            eprintln!(
                "note: {} malformed lines skipped in {}",
                kb.parse_errors(),
                kb.tag
            );
        }
    }
    Ok((kb1, kb2))
}

fn load_truth(
    config: &RunConfig,
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
) -> Result<GroundTruth> {
    let path = config
        .truth
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --truth".into()))?;
    let truth = synth::load_truth(path, kb1, kb2)?;
    if truth.unresolved > 0 {
        eprintln!("note: {} ground-truth lines did not resolve", truth.unresolved);
    }
    Ok(truth)
}

fn write_matches(
    path: &PathBuf,
    matches: &MatchSet,
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
) -> Result<()> {
    let mut out = String::new();
    for m in &matches.matches {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            kb1.entity(m.e1).id,
            kb2.entity(m.e2).id,
            m.rule
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn print_timings(timings: &[(String, f64)]) {
    let total = timings
        .iter()
        .find(|(name, _)| name == "total")
        .map(|&(_, s)| s)
        .unwrap_or_else(|| timings.iter().map(|&(_, s)| s).sum());
    println!("stage timings:");
    for (name, secs) in timings {
        if name == "total" {
            continue;
        }
        println!("  {name:<12} {secs:>9.3}s  ({:.0}%)", 100.0 * secs / total.max(1e-9));
    }
    println!("  {:<12} {total:>9.3}s", "total");
}

fn cmd_match(config: &RunConfig) -> Result<()> {
    let total = Instant::now();
    let (kb1, kb2) = load_inputs(config)?;
    let parse_secs = total.elapsed().as_secs_f64();

    let pipeline = Pipeline::prepare(&kb1, &kb2, config.pipeline)?;
    let (matches, matching_secs) = pipeline.match_all();

    let mut timings = vec![("parse".to_string(), parse_secs)];
    timings.extend(pipeline.timings.clone());
    timings.push(("matching".to_string(), matching_secs));
    timings.push(("total".to_string(), total.elapsed().as_secs_f64()));

    write_matches(&config.out.join("matches.tsv"), &matches, &kb1, &kb2)?;

    let mut report = BTreeMap::<String, serde_json::Value>::new();
    report.insert(
        "config".into(),
        serde_json::to_value(config.pipeline).unwrap(),
    );
    report.insert("matches".into(), matches.len().into());
    report.insert(
        "filtered_by_reciprocity".into(),
        matches.filtered.len().into(),
    );
    if config.truth.is_some() {
        let truth = load_truth(config, &kb1, &kb2)?;
        let mut eval = score_matches(&matches, &truth);
        eval.timings = timings.clone();
        println!("{eval}");
        report.insert("metrics".into(), serde_json::to_value(&eval).unwrap());
        report.insert(
            "block_stats".into(),
            serde_json::to_value(pipeline.block_statistics(&truth)).unwrap(),
        );
    }
    report.insert("timings".into(), serde_json::to_value(&timings).unwrap());
    write_json(&config.out.join("report.json"), &report)?;

    if config.dump_graph {
        let path = config.out.join("graph.tsv");
        let mut file = std::io::BufWriter::new(
            std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?,
        );
        pipeline
            .graph
            .dump_edges(&kb1, &kb2, &mut file)
            .and_then(|()| file.flush())
            .map_err(|e| Error::io(&path, e))?;
    }

    println!("{} matches written to {}", matches.len(), config.out.display());
    print_timings(&timings);
    Ok(())
}

fn cmd_blocks(config: &RunConfig) -> Result<()> {
    let (kb1, kb2) = load_inputs(config)?;
    let pipeline = Pipeline::prepare(&kb1, &kb2, config.pipeline)?;
    let truth = load_truth(config, &kb1, &kb2)?;
    let stats = pipeline.block_statistics(&truth);
    println!("|B_N|  = {}", stats.name_blocks);
    println!("|B_T|  = {}", stats.token_blocks);
    println!("||B_N|| = {}", stats.name_comparisons);
    println!("||B_T|| = {}", stats.token_comparisons);
    println!("|E1|*|E2| = {}", stats.cartesian);
    println!("purged tokens = {}", stats.purged_tokens);
    println!(
        "precision {:.2}  recall {:.2}  F1 {:.2}",
        stats.precision, stats.recall, stats.f1
    );
    write_json(&config.out.join("blocks.json"), &stats)?;
    Ok(())
}

fn cmd_ablate(config: &RunConfig) -> Result<()> {
    let (kb1, kb2) = load_inputs(config)?;
    let truth = load_truth(config, &kb1, &kb2)?;
    let pipeline = Pipeline::prepare(&kb1, &kb2, config.pipeline)?;
    let reports = rule_ablation(&pipeline, &truth);
    for (name, report) in &reports {
        println!("{name:<14} {report}");
    }
    write_json(&config.out.join("ablation.json"), &reports)?;
    Ok(())
}

fn cmd_bsl(config: &RunConfig) -> Result<()> {
    let (kb1, kb2) = load_inputs(config)?;
    let truth = load_truth(config, &kb1, &kb2)?;
    // The baseline sees the same blocks, before graph pruning, and runs
    // under the same worker budget.
    let pipeline = Pipeline::prepare(&kb1, &kb2, config.pipeline)?;
    let run = || grid_search(&kb1, &kb2, &pipeline.blocks, &truth);
    let search = match config.pipeline.workers {
        0 => run(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run),
    };

    let path = config.out.join("bsl_grid.csv");
    let mut csv = String::from("ngram,weighting,similarity,threshold,precision,recall,f1\n");
    for entry in &search.entries {
        csv.push_str(&format!(
            "{},{},{},{:.2},{:.2},{:.2},{:.2}\n",
            entry.config.ngram,
            entry.config.weighting,
            entry.config.similarity,
            entry.config.threshold,
            entry.report.precision,
            entry.report.recall,
            entry.report.f1
        ));
    }
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    let best = search.best();
    println!(
        "best of {} configurations: n={} {} {} t={:.2}",
        search.entries.len(),
        best.config.ngram,
        best.config.weighting,
        best.config.similarity,
        best.config.threshold
    );
    println!("{}", best.report);
    write_json(&config.out.join("bsl_best.json"), best)?;
    Ok(())
}

const SWEEP_K: [usize; 5] = [1, 2, 3, 4, 5];
const SWEEP_BIG_K: [usize; 5] = [5, 10, 15, 20, 25];
const SWEEP_N: [usize; 5] = [1, 2, 3, 4, 5];
const SWEEP_THETA: [f64; 6] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

fn cmd_sweep(config: &RunConfig, full: bool) -> Result<()> {
    let (kb1, kb2) = load_inputs(config)?;
    let truth = load_truth(config, &kb1, &kb2)?;

    let mut rows: Vec<(String, usize, usize, usize, f64, EvalReport)> = Vec::new();
    let run_config = |varied: &str,
                          k: usize,
                          big_k: usize,
                          n: usize,
                          theta_values: &[f64],
                          rows: &mut Vec<(String, usize, usize, usize, f64, EvalReport)>|
     -> Result<()> {
        let mut pipeline_config = config.pipeline;
        pipeline_config.matcher.name_attrs = k;
        pipeline_config.matcher.candidates = big_k;
        pipeline_config.matcher.top_relations = n;
        // Theta only affects matching: reuse the prepared graph.
        let pipeline = Pipeline::prepare(&kb1, &kb2, pipeline_config)?;
        for &theta in theta_values {
            let (matches, _) = pipeline.match_with_theta(kbmatch::matching::RuleSet::ALL, theta);
            rows.push((
                varied.to_string(),
                k,
                big_k,
                n,
                theta,
                score_matches(&matches, &truth),
            ));
        }
        Ok(())
    };

    let defaults = config.pipeline.matcher;
    if full {
        for &k in &SWEEP_K {
            for &big_k in &SWEEP_BIG_K {
                for &n in &SWEEP_N {
                    run_config("grid", k, big_k, n, &SWEEP_THETA, &mut rows)?;
                }
            }
        }
    } else {
        for &k in &SWEEP_K {
            run_config("k", k, defaults.candidates, defaults.top_relations, &[defaults.theta], &mut rows)?;
        }
        for &big_k in &SWEEP_BIG_K {
            run_config("K", defaults.name_attrs, big_k, defaults.top_relations, &[defaults.theta], &mut rows)?;
        }
        for &n in &SWEEP_N {
            run_config("N", defaults.name_attrs, defaults.candidates, n, &[defaults.theta], &mut rows)?;
        }
        run_config("theta", defaults.name_attrs, defaults.candidates, defaults.top_relations, &SWEEP_THETA, &mut rows)?;
    }

    let path = config.out.join("sweep.csv");
    let mut csv = String::from("varied,k,K,N,theta,precision,recall,f1\n");
    for (varied, k, big_k, n, theta, report) in &rows {
        csv.push_str(&format!(
            "{varied},{k},{big_k},{n},{theta:.1},{:.2},{:.2},{:.2}\n",
            report.precision, report.recall, report.f1
        ));
        println!(
            "{varied:<6} k={k} K={big_k:<2} N={n} theta={theta:.1}  F1 {:.2}",
            report.f1
        );
    }
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    println!("{} configurations evaluated", rows.len());
    Ok(())
}

fn cmd_synth(config: &RunConfig, kind: SynthKind, pairs: usize, uncapped: bool) -> Result<()> {
    let dataset = match kind {
        SynthKind::Restaurant => synth::restaurant(),
        SynthKind::NearlySimilar => synth::nearly_similar(synth::NearlySimilarSpec {
            cap_value_sim: !uncapped,
            ..synth::NearlySimilarSpec::sized(pairs)
        }),
    };
    dataset.write_to(&config.out)?;
    println!(
        "wrote kb1.tsv, kb2.tsv, truth.tsv to {}",
        config.out.display()
    );
    Ok(())
}
