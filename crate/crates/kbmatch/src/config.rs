//! Run configuration: a flat key-value file with command-line overrides.
//!
//! Keys mirror the CLI flags: `kb1`, `kb2`, `truth`, `out`, `k`, `big-k`,
//! `n`, `theta`, `purge-fraction`, `workers`, `name-rank-support-only`,
//! `dump-graph`. Lines starting with `#` are comments. Flags win over file
//! values; file values win over defaults.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kb1: Option<PathBuf>,
    pub kb2: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub out: PathBuf,
    pub pipeline: PipelineConfig,
    pub dump_graph: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kb1: None,
            kb2: None,
            truth: None,
            out: PathBuf::from("out"),
            pipeline: PipelineConfig::default(),
            dump_graph: false,
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the key-value file, when given.
    pub fn load(file: Option<&Path>) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (line_no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!(
                        "{}:{}: expected key = value, got {line:?}",
                        path.display(),
                        line_no + 1
                    ))
                })?;
                config.set(key.trim(), value.trim())?;
            }
        }
        Ok(config)
    }

    /// Applies one key; shared by the file parser and flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: {v:?} is not an integer")))
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: {v:?} is not a number")))
        };
        let parse_bool = |v: &str| match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::Config(format!("{key}: {v:?} is not a boolean"))),
        };
        match key {
            "kb1" => self.kb1 = Some(PathBuf::from(value)),
            "kb2" => self.kb2 = Some(PathBuf::from(value)),
            "truth" => self.truth = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "k" => self.pipeline.matcher.name_attrs = parse_usize(value)?,
            "big-k" => self.pipeline.matcher.candidates = parse_usize(value)?,
            "n" => self.pipeline.matcher.top_relations = parse_usize(value)?,
            "theta" => self.pipeline.matcher.theta = parse_f64(value)?,
            "purge-fraction" => self.pipeline.purge_fraction = parse_f64(value)?,
            "workers" => self.pipeline.workers = parse_usize(value)?,
            "name-rank-support-only" => self.pipeline.name_rank_support_only = parse_bool(value)?,
            "dump-graph" => self.dump_graph = parse_bool(value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\nk = 3\ntheta = 0.5\nkb1 = /data/a.tsv\nworkers = 4\n",
        )
        .unwrap();
        let mut config = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(config.pipeline.matcher.name_attrs, 3);
        assert_eq!(config.pipeline.matcher.theta, 0.5);
        assert_eq!(config.pipeline.workers, 4);
        // Flag override wins.
        config.set("theta", "0.7").unwrap();
        assert_eq!(config.pipeline.matcher.theta, 0.7);
    }

    #[test]
    fn defaults_match_the_suggested_global_configuration() {
        let config = RunConfig::default();
        assert_eq!(config.pipeline.matcher.name_attrs, 2);
        assert_eq!(config.pipeline.matcher.candidates, 15);
        assert_eq!(config.pipeline.matcher.top_relations, 3);
        assert_eq!(config.pipeline.matcher.theta, 0.6);
        assert_eq!(config.pipeline.purge_fraction, 1e-2);
    }

    #[test]
    fn bad_lines_are_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "k == 2\n").unwrap();
        // "k == 2" parses as key "k", value "= 2": not an integer.
        assert!(RunConfig::load(Some(&path)).is_err());
        std::fs::write(&path, "unknown-key = 5\n").unwrap();
        assert!(RunConfig::load(Some(&path)).is_err());
        std::fs::write(&path, "theta 0.5\n").unwrap();
        assert!(RunConfig::load(Some(&path)).is_err());
        let mut config = RunConfig::default();
        assert!(config.set("theta", "abc").is_err());
    }
}
