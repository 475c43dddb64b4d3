//! A common interface over every per-attribute relevance model, so the
//! axiom and retrieval harnesses can grade them side by side.

use std::collections::BTreeMap;

use crate::baselines::{score_with, BaselineConfig, BaselineMethod, DEFAULT_EXPLOD_WEIGHT};
use crate::error::Result;
use crate::graph::ProductGraph;
use crate::query::DEFAULT_RHO;
use crate::relevance::relevance_scores;

pub type AttributeScores = BTreeMap<String, f64>;

pub trait AttributeScorer: Sync {
    fn name(&self) -> &str;

    /// Scores the attributes of `r` given feedback products `feedback`.
    fn score(
        &self,
        g: &ProductGraph,
        r: &str,
        feedback: &[String],
        cfg: &BaselineConfig,
    ) -> Result<AttributeScores>;
}

/// The normalized-PPR mixture relevance `R_r(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceScorer {
    pub rho: f64,
}

impl Default for RelevanceScorer {
    fn default() -> Self {
        RelevanceScorer { rho: DEFAULT_RHO }
    }
}

impl AttributeScorer for RelevanceScorer {
    fn name(&self) -> &str {
        "jrecs"
    }

    fn score(
        &self,
        g: &ProductGraph,
        r: &str,
        feedback: &[String],
        cfg: &BaselineConfig,
    ) -> Result<AttributeScores> {
        Ok(relevance_scores(g, r, feedback, self.rho, &cfg.ppr)?.per_attribute)
    }
}

impl AttributeScorer for BaselineMethod {
    fn name(&self) -> &str {
        BaselineMethod::name(self)
    }

    fn score(
        &self,
        g: &ProductGraph,
        r: &str,
        feedback: &[String],
        cfg: &BaselineConfig,
    ) -> Result<AttributeScores> {
        score_with(self, g, r, feedback, cfg)
    }
}

/// Wraps a closure (for example an external proximity model) as a scorer.
pub struct FnScorer<F> {
    name: String,
    f: F,
}

impl<F> FnScorer<F>
where
    F: Fn(&ProductGraph, &str, &[String]) -> Result<AttributeScores> + Sync,
{
    pub fn new<S: Into<String>>(name: S, f: F) -> Self {
        FnScorer { name: name.into(), f }
    }
}

impl<F> AttributeScorer for FnScorer<F>
where
    F: Fn(&ProductGraph, &str, &[String]) -> Result<AttributeScores> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn score(
        &self,
        g: &ProductGraph,
        r: &str,
        feedback: &[String],
        _cfg: &BaselineConfig,
    ) -> Result<AttributeScores> {
        (self.f)(g, r, feedback)
    }
}

/// Looks a scorer up by its command-line name.
pub fn scorer_by_name(name: &str) -> Option<Box<dyn AttributeScorer>> {
    scorer_with_params(name, DEFAULT_RHO, DEFAULT_EXPLOD_WEIGHT, DEFAULT_EXPLOD_WEIGHT)
}

/// Like [`scorer_by_name`], with `rho` for `jrecs` and the ExpLOD weights.
pub fn scorer_with_params(name: &str, rho: f64, alpha: f64, beta: f64) -> Option<Box<dyn AttributeScorer>> {
    if name == "jrecs" {
        return Some(Box::new(RelevanceScorer { rho }));
    }
    match BaselineMethod::from_name(name)? {
        BaselineMethod::ExpLod { .. } => Some(Box::new(BaselineMethod::ExpLod { alpha, beta })),
        m => Some(Box::new(m)),
    }
}

/// `jrecs` followed by every baseline.
pub fn builtin_scorers() -> Vec<Box<dyn AttributeScorer>> {
    let mut out: Vec<Box<dyn AttributeScorer>> = vec![Box::new(RelevanceScorer::default())];
    out.extend(BaselineMethod::all().into_iter().map(|m| Box::new(m) as Box<dyn AttributeScorer>));
    out
}

pub fn builtin_names() -> Vec<&'static str> {
    let mut out = vec!["jrecs"];
    out.extend(BaselineMethod::all().iter().map(BaselineMethod::name));
    out
}
