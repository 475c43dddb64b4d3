//! Comparison scorers for attribute relevance: ExpLOD edge counting,
//! meeting probability (AND / OR), BASSET gateway scores and plain
//! PageRank. All of them score the attributes of the recommended product.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeIdx, ProductGraph};
use crate::ppr::{pagerank, power_iteration, ppr_indexed, PprConfig, Removal};

pub const DEFAULT_EXPLOD_WEIGHT: f64 = 0.5;
/// Above this many candidates BASSET logs a cost warning.
pub const DEFAULT_BASSET_WARN_CANDIDATES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MpMode {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Source is the feedback product, target the recommendation.
    FeedbackToRecommended,
    RecommendedToFeedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GatewayMode {
    Sink,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BaselineMethod {
    ExpLod { alpha: f64, beta: f64 },
    Mp(MpMode),
    Basset { direction: Direction, mode: GatewayMode },
    PlainPageRank,
}

impl BaselineMethod {
    pub fn explod_default() -> Self {
        BaselineMethod::ExpLod {
            alpha: DEFAULT_EXPLOD_WEIGHT,
            beta: DEFAULT_EXPLOD_WEIGHT,
        }
    }

    /// Short name used on the command line and in tables.
    pub fn name(&self) -> &'static str {
        use Direction::*;
        use GatewayMode::*;
        match self {
            BaselineMethod::ExpLod { .. } => "explod",
            BaselineMethod::Mp(MpMode::And) => "mp-and",
            BaselineMethod::Mp(MpMode::Or) => "mp-or",
            BaselineMethod::Basset { direction: FeedbackToRecommended, mode: Sink } => "ba-qr-sink",
            BaselineMethod::Basset { direction: FeedbackToRecommended, mode: Delete } => "ba-qr-del",
            BaselineMethod::Basset { direction: RecommendedToFeedback, mode: Sink } => "ba-rq-sink",
            BaselineMethod::Basset { direction: RecommendedToFeedback, mode: Delete } => "ba-rq-del",
            BaselineMethod::PlainPageRank => "pagerank",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::all().into_iter().find(|m| m.name() == name)
    }

    /// Every baseline with default parameters.
    pub fn all() -> Vec<Self> {
        use Direction::*;
        use GatewayMode::*;
        vec![
            Self::explod_default(),
            BaselineMethod::Mp(MpMode::And),
            BaselineMethod::Mp(MpMode::Or),
            BaselineMethod::Basset { direction: FeedbackToRecommended, mode: Sink },
            BaselineMethod::Basset { direction: FeedbackToRecommended, mode: Delete },
            BaselineMethod::Basset { direction: RecommendedToFeedback, mode: Sink },
            BaselineMethod::Basset { direction: RecommendedToFeedback, mode: Delete },
            BaselineMethod::PlainPageRank,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub ppr: PprConfig,
    pub basset_warn_candidates: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            ppr: PprConfig::default(),
            basset_warn_candidates: DEFAULT_BASSET_WARN_CANDIDATES,
        }
    }
}

impl From<PprConfig> for BaselineConfig {
    fn from(ppr: PprConfig) -> Self {
        BaselineConfig {
            ppr,
            ..Default::default()
        }
    }
}

struct Resolved {
    r: NodeIdx,
    feedback: Vec<NodeIdx>,
    attributes: Vec<NodeIdx>,
}

fn resolve<S: AsRef<str>>(g: &ProductGraph, r: &str, feedback: &[S]) -> Result<Resolved> {
    let r = g.resolve_product(r)?;
    let set: BTreeSet<&str> = feedback.iter().map(AsRef::as_ref).collect();
    if set.is_empty() {
        return Err(Error::InvalidQuery("feedback set is empty".into()));
    }
    let feedback = set
        .into_iter()
        .map(|q| g.resolve_product(q))
        .collect::<Result<Vec<_>>>()?;
    Ok(Resolved {
        r,
        feedback,
        attributes: g.attribute_indices_of(r),
    })
}

fn keyed(g: &ProductGraph, attrs: &[NodeIdx], scores: Vec<f64>) -> BTreeMap<String, f64> {
    attrs
        .iter()
        .zip(scores)
        .map(|(&a, s)| (g.id(a).to_string(), s))
        .collect()
}

/// `(alpha * n(a, Q) / |Q| + beta * n(a, r)) * IDF(a)`, with `IDF(a)` the
/// reciprocal of the number of products carrying `a`.
pub fn explod_score<S: AsRef<str>>(
    g: &ProductGraph,
    r: &str,
    feedback: &[S],
    alpha: f64,
    beta: f64,
) -> Result<BTreeMap<String, f64>> {
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::InvalidConfig("ExpLOD weights must be non-negative".into()));
    }
    let res = resolve(g, r, feedback)?;
    let q_len = res.feedback.len() as f64;
    let mut out = BTreeMap::new();
    for &a in &res.attributes {
        let products: Vec<NodeIdx> = g.product_neighbors(a).collect();
        if products.is_empty() {
            log::warn!("ExpLOD: attribute `{}` describes no product, skipped", g.id(a));
            continue;
        }
        let n_q = res.feedback.iter().filter(|&&q| products.contains(&q)).count() as f64;
        let n_r = if products.contains(&res.r) { 1.0 } else { 0.0 };
        let idf = 1.0 / products.len() as f64;
        out.insert(g.id(a).to_string(), (alpha * n_q / q_len + beta * n_r) * idf);
    }
    Ok(out)
}

/// Meeting probability over `Q` and `r`: the product (AND) or noisy-or (OR)
/// of single-source PPR scores of each attribute.
pub fn mp_score<S: AsRef<str>>(
    g: &ProductGraph,
    r: &str,
    feedback: &[S],
    mode: MpMode,
    cfg: &PprConfig,
) -> Result<BTreeMap<String, f64>> {
    cfg.validate()?;
    let res = resolve(g, r, feedback)?;
    let mut sources = res.feedback.clone();
    if !sources.contains(&res.r) {
        sources.push(res.r);
    }
    let vectors: Vec<Vec<f64>> = sources
        .par_iter()
        .map(|&p| ppr_indexed(g, &[(p, 1.0)], cfg).scores)
        .collect();
    let scores = res
        .attributes
        .iter()
        .map(|&a| match mode {
            MpMode::And => vectors.iter().map(|v| v[a]).product(),
            MpMode::Or => 1.0 - vectors.iter().map(|v| 1.0 - v[a]).product::<f64>(),
        })
        .collect();
    Ok(keyed(g, &res.attributes, scores))
}

/// Drop in source-to-target PPR, summed over feedback products, when the
/// attribute is made a sink or deleted.
pub fn basset_score<S: AsRef<str>>(
    g: &ProductGraph,
    r: &str,
    feedback: &[S],
    direction: Direction,
    mode: GatewayMode,
    cfg: &BaselineConfig,
) -> Result<BTreeMap<String, f64>> {
    cfg.ppr.validate()?;
    let res = resolve(g, r, feedback)?;
    if res.attributes.len() > cfg.basset_warn_candidates {
        log::warn!(
            "BASSET on `{}`: {} candidates x {} feedback products perturbed solves",
            r,
            res.attributes.len(),
            res.feedback.len()
        );
    }
    let pairs: Vec<(NodeIdx, NodeIdx)> = res
        .feedback
        .iter()
        .map(|&q| match direction {
            Direction::FeedbackToRecommended => (q, res.r),
            Direction::RecommendedToFeedback => (res.r, q),
        })
        .collect();
    let baseline: Vec<f64> = pairs
        .iter()
        .map(|&(s, t)| ppr_indexed(g, &[(s, 1.0)], &cfg.ppr).scores[t])
        .collect();
    let removal = match mode {
        GatewayMode::Sink => Removal::Sink,
        GatewayMode::Delete => Removal::Delete,
    };
    let scores = res
        .attributes
        .par_iter()
        .map(|&a| {
            pairs
                .iter()
                .zip(&baseline)
                .map(|(&(s, t), &base)| {
                    let perturbed = power_iteration(g, &[(s, 1.0)], &[a], removal, &cfg.ppr);
                    base - perturbed.scores[t]
                })
                .sum()
        })
        .collect();
    Ok(keyed(g, &res.attributes, scores))
}

/// Uniform entry point for the axiom and evaluation harnesses. The result
/// is keyed by the attributes of `r`.
pub fn score_with<S: AsRef<str>>(
    method: &BaselineMethod,
    g: &ProductGraph,
    r: &str,
    feedback: &[S],
    cfg: &BaselineConfig,
) -> Result<BTreeMap<String, f64>> {
    match *method {
        BaselineMethod::ExpLod { alpha, beta } => explod_score(g, r, feedback, alpha, beta),
        BaselineMethod::Mp(mode) => mp_score(g, r, feedback, mode, &cfg.ppr),
        BaselineMethod::Basset { direction, mode } => basset_score(g, r, feedback, direction, mode, cfg),
        BaselineMethod::PlainPageRank => {
            let res = resolve(g, r, feedback)?;
            let pr = pagerank(g, &cfg.ppr)?;
            let scores = res.attributes.iter().map(|&a| pr.scores[a]).collect();
            Ok(keyed(g, &res.attributes, scores))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;
    use crate::ppr::{ppr, Personalization};

    #[test]
    fn explod_arithmetic() {
        let g = load_graph("r\tP\nq\tP\na\tA\tgenre\nb\tA\tgenre\n", "r\ta\nr\tb\nq\tb\n").unwrap();
        let s = explod_score(&g, "r", &["q"], 0.5, 0.5).unwrap();
        assert_eq!(s["a"], 0.5);
        assert_eq!(s["b"], (0.5 + 0.5) / 2.0);
    }

    #[test]
    fn explod_scores_lone_reviews_identically() {
        let g = load_graph(
            "r\tP\nq\tP\nrev1\tA\treview\nrev2\tA\treview\ng\tA\tgenre\n",
            "r\trev1\nr\trev2\nr\tg\nq\tg\n",
        )
        .unwrap();
        let s = explod_score(&g, "r", &["q"], 0.5, 0.5).unwrap();
        assert_eq!(s["rev1"], s["rev2"]);
    }

    #[test]
    fn mp_and_two_factor_product() {
        let g = load_graph("r\tP\nq\tP\np\tP\na\tA\tx\nb\tA\ty\n", "r\ta\nq\ta\nr\tb\np\tb\n").unwrap();
        let cfg = PprConfig::default();
        let s = mp_score(&g, "r", &["q"], MpMode::And, &cfg).unwrap();
        let pq = ppr(&g, &Personalization::single("q"), &cfg).unwrap();
        let pr = ppr(&g, &Personalization::single("r"), &cfg).unwrap();
        let want = pq.score_of(&g, "a").unwrap() * pr.score_of(&g, "a").unwrap();
        assert_eq!(s["a"], want);
    }

    #[test]
    fn mp_and_annihilates_unreachable() {
        let g = load_graph("r\tP\nq\tP\np\tP\na\tA\tx\nb\tA\ty\n", "r\ta\nr\tb\nq\tp\n").unwrap();
        let cfg = PprConfig::default();
        let s = mp_score(&g, "r", &["q"], MpMode::And, &cfg).unwrap();
        assert_eq!(s["a"], 0.0);
        let or = mp_score(&g, "r", &["q"], MpMode::Or, &cfg).unwrap();
        assert!(or["a"] > 0.0);
    }

    #[test]
    fn basset_cut_vertex_takes_full_drop() {
        let g = load_graph("r\tP\nq\tP\na\tA\tx\n", "r\ta\nq\ta\n").unwrap();
        let cfg = BaselineConfig::default();
        let s = basset_score(&g, "r", &["q"], Direction::FeedbackToRecommended, GatewayMode::Sink, &cfg).unwrap();
        let base = ppr(&g, &Personalization::single("q"), &cfg.ppr).unwrap().score_of(&g, "r").unwrap();
        assert!((s["a"] - base).abs() < 1e-9);
    }

    #[test]
    fn basset_off_path_attribute_scores_zero() {
        // b hangs off p, which is disconnected from the q-r component.
        let g = load_graph(
            "r\tP\nq\tP\np\tP\na\tA\tx\nb\tA\tx\n",
            "r\ta\nq\ta\np\tb\nr\tb\n",
        )
        .unwrap();
        let cfg = BaselineConfig::default();
        let s = basset_score(&g, "r", &["q"], Direction::FeedbackToRecommended, GatewayMode::Sink, &cfg).unwrap();
        assert!(s["a"] > s["b"]);
        let iso = load_graph("r\tP\nq\tP\np\tP\na\tA\tx\nz\tA\ty\n", "r\ta\nq\ta\nr\tz\n").unwrap();
        let s = basset_score(&iso, "r", &["q"], Direction::FeedbackToRecommended, GatewayMode::Delete, &cfg).unwrap();
        assert!(s.contains_key("z"));
    }

    #[test]
    fn pagerank_ignores_feedback() {
        let g = load_graph(
            "p1\tP\np2\tP\np3\tP\na\tA\tx\n",
            "p1\tp2\np2\tp3\np1\tp3\np1\ta\np2\ta\np3\ta\n",
        )
        .unwrap();
        let cfg = BaselineConfig::default();
        let a = score_with(&BaselineMethod::PlainPageRank, &g, "p1", &["p2"], &cfg).unwrap();
        let b = score_with(&BaselineMethod::PlainPageRank, &g, "p1", &["p3"], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dispatch_is_transparent() {
        let g = load_graph("r\tP\nq\tP\na\tA\tx\nb\tA\ty\n", "r\ta\nq\ta\nr\tb\n").unwrap();
        let cfg = BaselineConfig::default();
        let direct = mp_score(&g, "r", &["q"], MpMode::And, &cfg.ppr).unwrap();
        let via = score_with(&BaselineMethod::Mp(MpMode::And), &g, "r", &["q"], &cfg).unwrap();
        assert_eq!(direct, via);
    }

    #[test]
    fn names_round_trip() {
        for m in BaselineMethod::all() {
            assert_eq!(BaselineMethod::from_name(m.name()), Some(m));
        }
    }
}
