//! Post-hoc justification of product recommendations over heterogeneous
//! product graphs.
//!
//! The pipeline: load a [`ProductGraph`], score the recommended product's
//! attributes with [`relevance_scores`], then pick a diverse, relevant
//! subset with [`greedy_select`].

pub mod axioms;
pub mod baselines;
mod error;
pub mod eval;
pub mod graph;
pub mod ppr;
pub mod query;
pub mod relevance;
pub mod scorer;
pub mod scoring;
pub mod selector;

pub use error::{Error, Result, Source};
pub use graph::{load_graph, load_graph_files, GraphBuilder, NodeIdx, NodeKind, ProductGraph};
pub use ppr::{pagerank, ppr, ppr_delete, ppr_sink, Personalization, PprConfig, ScoreVector};
pub use query::Query;
pub use relevance::{attribute_relevance, feedback_relevance, normalize_over, relevance_scores, RelevanceResult};
pub use scorer::{AttributeScorer, RelevanceScorer};
pub use scoring::{Candidate, NormalizationBounds, Objective, ScoreBreakdown};
pub use selector::{greedy_select, JustificationSet, SelectedAttribute};
