//! Greedy budgeted maximization of the justification score.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ProductGraph;
use crate::ppr::PprConfig;
use crate::query::Query;
use crate::relevance::{relevance_indexed, RelevanceResult};
use crate::scoring::{candidates_from_graph, Coverage, NormalizationBounds, Objective, ScoreBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedAttribute {
    pub id: String,
    pub type_label: String,
    pub topics: Vec<String>,
    pub relevance: f64,
    pub marginal_gain: f64,
    pub breakdown_after: ScoreBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JustificationSet {
    pub selected: Vec<SelectedAttribute>,
    pub query: Query,
    pub bounds: NormalizationBounds,
    pub relevance: RelevanceResult,
    /// False if any PPR solve hit `max_iterations`.
    pub converged: bool,
}

impl JustificationSet {
    pub fn ids(&self) -> Vec<&str> {
        self.selected.iter().map(|s| s.id.as_str()).collect()
    }

    /// Breakdown of the final set, if anything was selected.
    pub fn final_breakdown(&self) -> Option<&ScoreBreakdown> {
        self.selected.last().map(|s| &s.breakdown_after)
    }
}

/// Picks up to `budget` candidates by largest marginal gain. Candidates are
/// scanned in index order and only a strictly larger gain replaces the
/// incumbent, so ties go to the lowest index.
pub fn greedy_on(obj: &Objective, budget: usize) -> Vec<(usize, f64, ScoreBreakdown)> {
    let mut cov = Coverage::new(obj);
    let mut taken = vec![false; obj.len()];
    let mut out = Vec::new();
    while out.len() < budget.min(obj.bounds().budget) {
        let mut best: Option<(usize, f64)> = None;
        for a in 0..obj.len() {
            if taken[a] {
                continue;
            }
            let gain = cov.gain(a);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((a, gain));
            }
        }
        let Some((a, gain)) = best else { break };
        taken[a] = true;
        cov.add(a);
        out.push((a, gain, cov.breakdown()));
    }
    out
}

pub fn greedy_select(g: &ProductGraph, query: &Query, cfg: &PprConfig) -> Result<JustificationSet> {
    cfg.validate()?;
    query.validate(g)?;
    let r = g.resolve_product(&query.recommended)?;
    let mut feedback: Vec<&str> = query.feedback.iter().map(String::as_str).collect();
    feedback.sort_unstable();
    feedback.dedup();
    let feedback: Vec<usize> = feedback
        .into_iter()
        .map(|q| g.resolve_product(q))
        .collect::<Result<_>>()?;

    let relevance = relevance_indexed(g, r, &feedback, query.rho, cfg)?.into_result(g);
    let converged = relevance.converged;
    let ids: Vec<&str> = relevance.per_attribute.keys().map(String::as_str).collect();
    if ids.is_empty() {
        return Err(Error::NoAttributes(query.recommended.clone()));
    }
    let pool = candidates_from_graph(g, &ids, &relevance)?;
    let obj = Objective::new(pool, query.budget, query.lambda1, query.lambda2)?;

    let selected = greedy_on(&obj, query.budget)
        .into_iter()
        .map(|(a, gain, breakdown_after)| {
            let idx = g.resolve(obj.id(a)).expect("candidate comes from the graph");
            let kind = g.kind(idx);
            SelectedAttribute {
                id: obj.id(a).to_string(),
                type_label: kind.type_label().unwrap_or_default().to_string(),
                topics: kind.topics().map(|t| t.iter().cloned().collect()).unwrap_or_default(),
                relevance: obj.relevance(a),
                marginal_gain: gain,
                breakdown_after,
            }
        })
        .collect();

    Ok(JustificationSet {
        selected,
        query: query.clone(),
        bounds: *obj.bounds(),
        relevance,
        converged,
    })
}

/// `J(base + a) - J(base)` on graph attributes, with `base` evaluated in
/// the given order.
pub fn marginal_gain<S: AsRef<str>>(
    g: &ProductGraph,
    base: &[S],
    a: &str,
    bounds: &NormalizationBounds,
    relevance: &RelevanceResult,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    if base.iter().any(|b| b.as_ref() == a) {
        return Err(Error::AlreadySelected(a.to_string()));
    }
    let mut ids: Vec<&str> = base.iter().map(AsRef::as_ref).collect();
    ids.push(a);
    let pool = candidates_from_graph(g, &ids, relevance)?;
    let obj = Objective::with_bounds(pool, *bounds, lambda1, lambda2)?;
    let base_idx: Vec<usize> = (0..base.len()).collect();
    obj.marginal_gain(&base_idx, base.len())
}
