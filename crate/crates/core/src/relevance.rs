//! Attribute relevance from normalized PPR.
//!
//! For a recommended product `r` and feedback set `Q`:
//!
//! * feedback weight of `q`: PPR restarted at `r`, renormalized over `Q`;
//! * attribute relevance given `q`: PPR restarted at `q` with mass `1 - rho`
//!   and at `r` with mass `rho`, renormalized over the attributes of `r`;
//! * `R_r(a)` is the feedback-weighted mixture of those distributions.
//!
//! The `|Q| + 1` solves are independent and run as one batch.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{NodeIdx, ProductGraph};
use crate::ppr::{ppr_batch, ppr_indexed, PprConfig, ScoreVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceResult {
    /// `R_r(a)` for every attribute of `r`, keyed by attribute id.
    pub per_attribute: BTreeMap<String, f64>,
    /// `nPPR(q | r = 1)` for every distinct feedback product.
    pub feedback_weights: BTreeMap<String, f64>,
    /// True when some normalization hit an all-zero subset and fell back to
    /// the uniform distribution.
    pub fallback_used: bool,
    pub converged: bool,
}

impl RelevanceResult {
    pub fn get(&self, attribute: &str) -> Option<f64> {
        self.per_attribute.get(attribute).copied()
    }

    pub fn total(&self) -> f64 {
        self.per_attribute.values().sum()
    }
}

/// Restricts `scores` to `subset` and rescales to unit mass. Returns the
/// normalized values in subset order and whether the uniform fallback fired.
pub(crate) fn normalize_indexed(scores: &[f64], subset: &[NodeIdx]) -> (Vec<f64>, bool) {
    let total: f64 = subset.iter().map(|&i| scores[i]).sum();
    if total > 0.0 {
        (subset.iter().map(|&i| scores[i] / total).collect(), false)
    } else {
        let u = 1.0 / subset.len() as f64;
        (vec![u; subset.len()], true)
    }
}

pub fn normalize_over<S: AsRef<str>>(
    g: &ProductGraph,
    s: &ScoreVector,
    subset: &[S],
) -> Result<BTreeMap<String, f64>> {
    let idx = resolve_distinct(g, subset)?;
    if idx.is_empty() {
        return Err(Error::InvalidArgument("cannot normalize over an empty subset".into()));
    }
    let (values, _) = normalize_indexed(&s.scores, &idx);
    Ok(idx
        .iter()
        .zip(values)
        .map(|(&i, v)| (g.id(i).to_string(), v))
        .collect())
}

fn resolve_distinct<S: AsRef<str>>(g: &ProductGraph, ids: &[S]) -> Result<Vec<NodeIdx>> {
    let set: BTreeSet<&str> = ids.iter().map(AsRef::as_ref).collect();
    set.into_iter().map(|id| g.resolve(id)).collect()
}

fn resolve_feedback<S: AsRef<str>>(g: &ProductGraph, feedback: &[S]) -> Result<Vec<NodeIdx>> {
    let set: BTreeSet<&str> = feedback.iter().map(AsRef::as_ref).collect();
    if set.is_empty() {
        return Err(Error::InvalidQuery("feedback set is empty".into()));
    }
    set.into_iter().map(|id| g.resolve_product(id)).collect()
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidQuery(format!("rho must lie in [0, 1], got {rho}")));
    }
    Ok(())
}

fn two_point_restart(q: NodeIdx, r: NodeIdx, rho: f64) -> Vec<(NodeIdx, f64)> {
    if q == r {
        vec![(r, 1.0)]
    } else {
        vec![(q, 1.0 - rho), (r, rho)]
    }
}

struct Feedback {
    weights: Vec<f64>,
    fallback: bool,
    converged: bool,
}

fn feedback_indexed(
    g: &ProductGraph,
    r: NodeIdx,
    feedback: &[NodeIdx],
    cfg: &PprConfig,
) -> Feedback {
    feedback_from(ppr_indexed(g, &[(r, 1.0)], cfg), feedback)
}

fn feedback_from(s: ScoreVector, feedback: &[NodeIdx]) -> Feedback {
    let (weights, fallback) = normalize_indexed(&s.scores, feedback);
    Feedback {
        weights,
        fallback,
        converged: s.converged,
    }
}

/// `nPPR(q | r = 1)` over the distinct members of `feedback`.
pub fn feedback_relevance<S: AsRef<str>>(
    g: &ProductGraph,
    r: &str,
    feedback: &[S],
    cfg: &PprConfig,
) -> Result<BTreeMap<String, f64>> {
    cfg.validate()?;
    let r = g.resolve_product(r)?;
    let fb = resolve_feedback(g, feedback)?;
    let out = feedback_indexed(g, r, &fb, cfg);
    Ok(fb
        .iter()
        .zip(out.weights)
        .map(|(&q, w)| (g.id(q).to_string(), w))
        .collect())
}

/// `nPPR(a | q = 1 - rho, r = rho)` over the attributes of `r`.
pub fn attribute_relevance(
    g: &ProductGraph,
    r: &str,
    q: &str,
    rho: f64,
    cfg: &PprConfig,
) -> Result<BTreeMap<String, f64>> {
    cfg.validate()?;
    check_rho(rho)?;
    let ri = g.resolve_product(r)?;
    let qi = g.resolve_product(q)?;
    let attrs = g.attribute_indices_of(ri);
    if attrs.is_empty() {
        return Err(Error::NoAttributes(r.to_string()));
    }
    let s = ppr_indexed(g, &two_point_restart(qi, ri, rho), cfg);
    let (values, _) = normalize_indexed(&s.scores, &attrs);
    Ok(attrs
        .iter()
        .zip(values)
        .map(|(&a, v)| (g.id(a).to_string(), v))
        .collect())
}

/// Index-level relevance used by the selector: scores aligned with
/// `g.attribute_indices_of(r)`.
pub(crate) struct IndexedRelevance {
    pub attributes: Vec<NodeIdx>,
    pub scores: Vec<f64>,
    pub feedback: Vec<NodeIdx>,
    pub feedback_weights: Vec<f64>,
    pub fallback_used: bool,
    pub converged: bool,
}

pub(crate) fn relevance_indexed(
    g: &ProductGraph,
    r: NodeIdx,
    feedback: &[NodeIdx],
    rho: f64,
    cfg: &PprConfig,
) -> Result<IndexedRelevance> {
    let attributes = g.attribute_indices_of(r);
    if attributes.is_empty() {
        return Err(Error::NoAttributes(g.id(r).to_string()));
    }
    let mut restarts = vec![vec![(r, 1.0)]];
    restarts.extend(feedback.iter().map(|&q| two_point_restart(q, r, rho)));
    let mut solved = ppr_batch(g, &restarts, cfg).into_iter();
    let fb = feedback_from(solved.next().expect("one solve per restart"), feedback);
    let per_q: Vec<(Vec<f64>, bool, bool)> = solved
        .map(|s| {
            let (values, fallback) = normalize_indexed(&s.scores, &attributes);
            (values, fallback, s.converged)
        })
        .collect();

    let mut scores = vec![0.0; attributes.len()];
    let mut fallback_used = fb.fallback;
    let mut converged = fb.converged;
    for (w, (values, fallback, conv)) in fb.weights.iter().zip(&per_q) {
        fallback_used |= *fallback;
        converged &= *conv;
        for (acc, v) in scores.iter_mut().zip(values) {
            *acc += w * v;
        }
    }
    Ok(IndexedRelevance {
        attributes,
        scores,
        feedback: feedback.to_vec(),
        feedback_weights: fb.weights,
        fallback_used,
        converged,
    })
}

impl IndexedRelevance {
    pub(crate) fn into_result(self, g: &ProductGraph) -> RelevanceResult {
        RelevanceResult {
            per_attribute: self
                .attributes
                .iter()
                .zip(&self.scores)
                .map(|(&a, &s)| (g.id(a).to_string(), s))
                .collect(),
            feedback_weights: self
                .feedback
                .iter()
                .zip(&self.feedback_weights)
                .map(|(&q, &w)| (g.id(q).to_string(), w))
                .collect(),
            fallback_used: self.fallback_used,
            converged: self.converged,
        }
    }
}

/// `R_r(a) = sum_q nPPR(q | r = 1) * nPPR(a | q = 1 - rho, r = rho)`.
pub fn relevance_scores<S: AsRef<str>>(
    g: &ProductGraph,
    r: &str,
    feedback: &[S],
    rho: f64,
    cfg: &PprConfig,
) -> Result<RelevanceResult> {
    cfg.validate()?;
    check_rho(rho)?;
    let ri = g.resolve_product(r)?;
    let fb = resolve_feedback(g, feedback)?;
    Ok(relevance_indexed(g, ri, &fb, rho, cfg)?.into_result(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;
    use crate::ppr::{ppr, Personalization};

    fn fixture() -> ProductGraph {
        let nodes = "r\tP\nq1\tP\nq2\tP\np\tP\na1\tA\tgenre\na2\tA\tdirector\na3\tA\treview\nb\tA\tgenre\n";
        let edges = "r\ta1\nr\ta2\nr\ta3\nq1\ta1\nq2\ta2\np\ta3\np\tb\nq2\tb\n";
        load_graph(nodes, edges).unwrap()
    }

    #[test]
    fn normalize_arithmetic_and_fallback() {
        let g = load_graph("a\tP\nb\tP\nc\tP\nd\tP\n", "").unwrap();
        let s = ScoreVector {
            scores: vec![0.3, 0.1, 0.0, 0.0],
            converged: true,
            iterations_used: 0,
            residuals: vec![],
        };
        let m = normalize_over(&g, &s, &["a", "b"]).unwrap();
        assert!((m["a"] - 0.75).abs() < 1e-15 && (m["b"] - 0.25).abs() < 1e-15);
        let m = normalize_over(&g, &s, &["a"]).unwrap();
        assert_eq!(m["a"], 1.0);
        let zero = ScoreVector {
            scores: vec![0.0; 4],
            ..s.clone()
        };
        let m = normalize_over(&g, &zero, &["a", "b", "c", "d"]).unwrap();
        assert!(m.values().all(|&v| v == 0.25));
        assert!(normalize_over::<&str>(&g, &s, &[]).is_err());
    }

    #[test]
    fn singleton_feedback_weight_is_one() {
        let g = fixture();
        let w = feedback_relevance(&g, "r", &["q1"], &PprConfig::default()).unwrap();
        assert_eq!(w["q1"], 1.0);
    }

    #[test]
    fn rho_one_ignores_feedback_product() {
        let g = fixture();
        let cfg = PprConfig::default();
        let a = attribute_relevance(&g, "r", "q1", 1.0, &cfg).unwrap();
        let b = attribute_relevance(&g, "r", "q2", 1.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_attribute_maps_to_one() {
        let g = load_graph("r\tP\nq\tP\na\tA\tgenre\n", "r\ta\nq\ta\n").unwrap();
        let a = attribute_relevance(&g, "r", "q", 0.5, &PprConfig::default()).unwrap();
        assert_eq!(a["a"], 1.0);
    }

    #[test]
    fn attributeless_product_is_an_error() {
        let g = load_graph("r\tP\nq\tP\na\tA\tgenre\n", "r\tq\nq\ta\n").unwrap();
        assert!(matches!(
            attribute_relevance(&g, "r", "q", 0.5, &PprConfig::default()),
            Err(Error::NoAttributes(_))
        ));
        assert!(matches!(
            relevance_scores(&g, "r", &["q"], 0.5, &PprConfig::default()),
            Err(Error::NoAttributes(_))
        ));
    }

    #[test]
    fn single_feedback_equals_attribute_relevance() {
        let g = fixture();
        let cfg = PprConfig::default();
        let r = relevance_scores(&g, "r", &["q2"], 0.5, &cfg).unwrap();
        let a = attribute_relevance(&g, "r", "q2", 0.5, &cfg).unwrap();
        assert_eq!(r.per_attribute, a);
    }

    #[test]
    fn mixture_sums_to_one_and_keys_match() {
        let g = fixture();
        let cfg = PprConfig::default();
        let r = relevance_scores(&g, "r", &["q1", "q2", "p"], 0.5, &cfg).unwrap();
        assert!(!r.fallback_used);
        assert!((r.total() - 1.0).abs() < 1e-9);
        let keys: Vec<&str> = r.per_attribute.keys().map(String::as_str).collect();
        assert_eq!(keys, g.attributes_of("r").unwrap());
        assert!((r.feedback_weights.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn feedback_matches_manual_normalization() {
        let g = fixture();
        let cfg = PprConfig::default();
        let s = ppr(&g, &Personalization::single("r"), &cfg).unwrap();
        let q1 = s.score_of(&g, "q1").unwrap();
        let q2 = s.score_of(&g, "q2").unwrap();
        let w = feedback_relevance(&g, "r", &["q2", "q1"], &cfg).unwrap();
        assert!((w["q1"] - q1 / (q1 + q2)).abs() < 1e-15);
    }
}
