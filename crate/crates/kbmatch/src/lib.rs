//! Schema-agnostic, non-iterative entity resolution for pairs of
//! heterogeneous knowledge bases.
//!
//! Given two duplicate-free knowledge bases (sets of URI-identified entity
//! descriptions), the engine finds cross-KB matches without schema alignment,
//! training data, or iterative similarity propagation:
//!
//! 1. [`kb`] ingests line-oriented triples and builds inverted token indices
//!    plus entity-frequency tables.
//! 2. [`stats`] ranks relations and attributes by support/discriminability so
//!    the most telling neighbors and "name" attributes are picked purely from
//!    data statistics.
//! 3. [`blocking`] forms name and token blocks and purges oversized blocks.
//! 4. [`graph`] assembles a pruned candidate graph whose directed edges carry
//!    name (alpha), value (beta), and neighbor (gamma) evidence.
//! 5. [`matching`] applies four fixed rules over the graph: name match,
//!    value match, rank-aggregation match, and a reciprocity filter.
//!
//! [`bsl`] holds a tuned value-only baseline (n-gram profiles, four
//! similarity functions, unique mapping clustering) and [`eval`] scores match
//! sets and rule ablations against ground truth.

pub mod blocking;
pub mod bsl;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod kb;
pub mod matching;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use kb::{EntityDescription, GroundTruth, KbTag, KnowledgeBase};
pub use matching::{MatchSet, MatcherConfig};
pub use pipeline::{run_pipeline, Pipeline};
