//! Justification score: normalized relevance plus weighted type and topic
//! coverage.
//!
//! Each term is min-max normalized over the non-empty candidate subsets of
//! size at most `B`. A term whose max equals its min is pinned to 1. The
//! coverage maxima come from greedy maximum coverage, so a subset can in
//! principle beat the greedy topic maximum; normalized terms are clipped at
//! 1, which keeps the objective monotone and submodular.
//!
//! The empty set sits outside the normalization domain. Marginal gains
//! from the empty set are measured against the affine extension of the
//! terms to zero coverage (see [`Objective::empty_value`]), so the gain
//! sequence of a greedy run is non-increasing.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ProductGraph;
use crate::relevance::RelevanceResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub id: String,
    pub relevance: f64,
    pub type_label: String,
    pub topics: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizationBounds {
    pub budget: usize,
    pub r_max: f64,
    pub r_min: f64,
    pub type_max: usize,
    pub type_min: usize,
    pub topic_max: usize,
    pub topic_min: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub relevance_raw: f64,
    pub relevance_norm: f64,
    pub type_coverage: usize,
    pub type_norm: f64,
    pub topic_coverage: usize,
    pub topic_norm: f64,
    pub total: f64,
}

fn is_degenerate(min: f64, max: f64) -> bool {
    max - min <= f64::EPSILON * max.abs().max(min.abs())
}

fn normalized(x: f64, min: f64, max: f64) -> f64 {
    if is_degenerate(min, max) {
        1.0
    } else {
        ((x - min) / (max - min)).min(1.0)
    }
}

/// Greedy maximum coverage: picks up to `k` sets, each time the one adding
/// the most uncovered elements (first index on ties), and returns the
/// number of covered elements.
pub fn greedy_max_coverage(sets: &[Vec<usize>], universe: usize, k: usize) -> usize {
    let mut covered = vec![false; universe];
    let mut used = vec![false; sets.len()];
    let mut total = 0;
    for _ in 0..k {
        let mut best: Option<(usize, usize)> = None;
        for (i, s) in sets.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = s.iter().filter(|&&e| !covered[e]).count();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let Some((i, gain)) = best else { break };
        if gain == 0 {
            break;
        }
        used[i] = true;
        for &e in &sets[i] {
            covered[e] = true;
        }
        total += gain;
    }
    total
}

/// A candidate pool with interned types and topics, its normalization
/// bounds and the diversity weights.
#[derive(Debug, Clone)]
pub struct Objective {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    relevance: Vec<f64>,
    type_of: Vec<usize>,
    topics: Vec<Vec<usize>>,
    n_types: usize,
    n_topics: usize,
    bounds: NormalizationBounds,
    lambda1: f64,
    lambda2: f64,
}

impl Objective {
    /// Builds the pool and computes its bounds for budget `budget`.
    pub fn new(candidates: Vec<Candidate>, budget: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("candidate pool is empty".into()));
        }
        if budget == 0 {
            return Err(Error::InvalidArgument("budget must be at least 1".into()));
        }
        let placeholder = NormalizationBounds {
            budget,
            r_max: 0.0,
            r_min: 0.0,
            type_max: 0,
            type_min: 0,
            topic_max: 0,
            topic_min: 0,
        };
        let mut obj = Self::assemble(candidates, placeholder, lambda1, lambda2)?;
        obj.bounds = obj.compute_bounds(budget);
        Ok(obj)
    }

    /// Builds a pool that uses externally computed bounds.
    pub fn with_bounds(
        candidates: Vec<Candidate>,
        bounds: NormalizationBounds,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        if bounds.r_max < bounds.r_min || bounds.type_max < bounds.type_min || bounds.topic_max < bounds.topic_min {
            return Err(Error::InvalidArgument(format!("inconsistent bounds {bounds:?}")));
        }
        Self::assemble(candidates, bounds, lambda1, lambda2)
    }

    fn assemble(
        candidates: Vec<Candidate>,
        bounds: NormalizationBounds,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {l}"
                )));
            }
        }
        let mut type_ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut topic_ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut obj = Objective {
            ids: Vec::with_capacity(candidates.len()),
            index: BTreeMap::new(),
            relevance: Vec::with_capacity(candidates.len()),
            type_of: Vec::with_capacity(candidates.len()),
            topics: Vec::with_capacity(candidates.len()),
            n_types: 0,
            n_topics: 0,
            bounds,
            lambda1,
            lambda2,
        };
        for c in candidates {
            if !c.relevance.is_finite() || c.relevance < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "relevance of `{}` must be finite and non-negative",
                    c.id
                )));
            }
            if obj.index.insert(c.id.clone(), obj.ids.len()).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate candidate `{}`", c.id)));
            }
            let next = type_ids.len();
            let t = *type_ids.entry(c.type_label).or_insert(next);
            let topics = c
                .topics
                .into_iter()
                .map(|topic| {
                    let next = topic_ids.len();
                    *topic_ids.entry(topic).or_insert(next)
                })
                .collect();
            obj.ids.push(c.id);
            obj.relevance.push(c.relevance);
            obj.type_of.push(t);
            obj.topics.push(topics);
        }
        obj.n_types = type_ids.len();
        obj.n_topics = topic_ids.len();
        Ok(obj)
    }

    fn compute_bounds(&self, budget: usize) -> NormalizationBounds {
        let k = budget.min(self.len());
        let mut sorted = self.relevance.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let r_max: f64 = sorted[..k].iter().sum();
        let r_min = sorted[sorted.len() - 1];
        let type_sets: Vec<Vec<usize>> = self.type_of.iter().map(|&t| vec![t]).collect();
        NormalizationBounds {
            budget,
            r_max,
            r_min,
            type_max: greedy_max_coverage(&type_sets, self.n_types, k),
            type_min: 1,
            topic_max: greedy_max_coverage(&self.topics, self.n_topics, k),
            topic_min: self.topics.iter().map(Vec::len).min().unwrap_or(0),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn bounds(&self) -> &NormalizationBounds {
        &self.bounds
    }

    pub fn lambdas(&self) -> (f64, f64) {
        (self.lambda1, self.lambda2)
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn relevance(&self, i: usize) -> f64 {
        self.relevance[i]
    }

    fn breakdown(&self, relevance_raw: f64, types: usize, topics: usize) -> ScoreBreakdown {
        let b = &self.bounds;
        let relevance_norm = normalized(relevance_raw, b.r_min, b.r_max);
        let type_norm = normalized(types as f64, b.type_min as f64, b.type_max as f64);
        let topic_norm = normalized(topics as f64, b.topic_min as f64, b.topic_max as f64);
        ScoreBreakdown {
            relevance_raw,
            relevance_norm,
            type_coverage: types,
            type_norm,
            topic_coverage: topics,
            topic_norm,
            total: relevance_norm + self.lambda1 * type_norm + self.lambda2 * topic_norm,
        }
    }

    /// Value the objective's terms extrapolate to at zero coverage; the
    /// reference point for gains from the empty set.
    pub fn empty_value(&self) -> f64 {
        let b = &self.bounds;
        let extend = |x: f64, min: f64, max: f64| {
            if is_degenerate(min, max) {
                1.0
            } else {
                (x - min) / (max - min)
            }
        };
        extend(0.0, b.r_min, b.r_max)
            + self.lambda1 * extend(0.0, b.type_min as f64, b.type_max as f64)
            + self.lambda2 * extend(0.0, b.topic_min as f64, b.topic_max as f64)
    }

    fn check_set(&self, set: &[usize]) -> Result<()> {
        if set.len() > self.bounds.budget {
            return Err(Error::BudgetExceeded {
                size: set.len(),
                budget: self.bounds.budget,
            });
        }
        let mut seen = vec![false; self.len()];
        for &i in set {
            if i >= self.len() {
                return Err(Error::InvalidArgument(format!("candidate index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("candidate `{}` repeated", self.ids[i])));
            }
        }
        Ok(())
    }

    /// `J(set)` with its term breakdown. `set` must be non-empty, distinct
    /// and within budget.
    pub fn score(&self, set: &[usize]) -> Result<ScoreBreakdown> {
        if set.is_empty() {
            return Err(Error::InvalidArgument(
                "the justification score is defined on non-empty sets".into(),
            ));
        }
        self.check_set(set)?;
        let mut cov = Coverage::new(self);
        for &i in set {
            cov.add(i);
        }
        Ok(cov.breakdown())
    }

    /// `J(base + a) - J(base)`.
    pub fn marginal_gain(&self, base: &[usize], a: usize) -> Result<f64> {
        self.check_set(base)?;
        if a >= self.len() {
            return Err(Error::InvalidArgument(format!("candidate index {a} out of range")));
        }
        if base.contains(&a) {
            return Err(Error::AlreadySelected(self.ids[a].clone()));
        }
        if base.len() + 1 > self.bounds.budget {
            return Err(Error::BudgetExceeded {
                size: base.len() + 1,
                budget: self.bounds.budget,
            });
        }
        let mut cov = Coverage::new(self);
        for &i in base {
            cov.add(i);
        }
        Ok(cov.gain(a))
    }

    pub fn type_coverage(&self, set: &[usize]) -> usize {
        let s: BTreeSet<usize> = set.iter().map(|&i| self.type_of[i]).collect();
        s.len()
    }

    pub fn topic_coverage(&self, set: &[usize]) -> usize {
        let s: BTreeSet<usize> = set.iter().flat_map(|&i| self.topics[i].iter().copied()).collect();
        s.len()
    }
}

/// Incremental coverage state over an [`Objective`]; gains cost
/// `O(|topics(a)|)`.
#[derive(Debug, Clone)]
pub(crate) struct Coverage<'a> {
    obj: &'a Objective,
    relevance_sum: f64,
    type_seen: Vec<bool>,
    topic_seen: Vec<bool>,
    types: usize,
    topics: usize,
    size: usize,
}

impl<'a> Coverage<'a> {
    pub(crate) fn new(obj: &'a Objective) -> Self {
        Coverage {
            obj,
            relevance_sum: 0.0,
            type_seen: vec![false; obj.n_types],
            topic_seen: vec![false; obj.n_topics],
            types: 0,
            topics: 0,
            size: 0,
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.size == 0 {
            self.obj.empty_value()
        } else {
            self.breakdown().total
        }
    }

    pub(crate) fn breakdown(&self) -> ScoreBreakdown {
        self.obj.breakdown(self.relevance_sum, self.types, self.topics)
    }

    fn after(&self, a: usize) -> ScoreBreakdown {
        let new_type = usize::from(!self.type_seen[self.obj.type_of[a]]);
        let new_topics = self.obj.topics[a].iter().filter(|&&t| !self.topic_seen[t]).count();
        self.obj.breakdown(
            self.relevance_sum + self.obj.relevance[a],
            self.types + new_type,
            self.topics + new_topics,
        )
    }

    pub(crate) fn gain(&self, a: usize) -> f64 {
        self.after(a).total - self.value()
    }

    pub(crate) fn add(&mut self, a: usize) {
        self.relevance_sum += self.obj.relevance[a];
        let t = self.obj.type_of[a];
        if !std::mem::replace(&mut self.type_seen[t], true) {
            self.types += 1;
        }
        for &topic in &self.obj.topics[a] {
            if !std::mem::replace(&mut self.topic_seen[topic], true) {
                self.topics += 1;
            }
        }
        self.size += 1;
    }
}

fn attribute_candidate(g: &ProductGraph, id: &str, relevance: &RelevanceResult) -> Result<Candidate> {
    let idx = g.resolve_attribute(id)?;
    let r = relevance.get(id).ok_or_else(|| {
        Error::InvalidArgument(format!("`{id}` is not an attribute of the recommended product"))
    })?;
    let kind = g.kind(idx);
    Ok(Candidate {
        id: id.to_string(),
        relevance: r,
        type_label: kind.type_label().unwrap_or_default().to_string(),
        topics: kind.topics().cloned().unwrap_or_default(),
    })
}

pub(crate) fn candidates_from_graph<S: AsRef<str>>(
    g: &ProductGraph,
    ids: &[S],
    relevance: &RelevanceResult,
) -> Result<Vec<Candidate>> {
    ids.iter()
        .map(|id| attribute_candidate(g, id.as_ref(), relevance))
        .collect()
}

/// Number of distinct attribute types among `set`.
pub fn type_coverage<S: AsRef<str>>(g: &ProductGraph, set: &[S]) -> Result<usize> {
    let mut types = BTreeSet::new();
    for id in set {
        let idx = g.resolve_attribute(id.as_ref())?;
        types.insert(g.kind(idx).type_label().unwrap_or_default());
    }
    Ok(types.len())
}

/// Size of the union of topic sets among `set`.
pub fn topic_coverage<S: AsRef<str>>(g: &ProductGraph, set: &[S]) -> Result<usize> {
    let mut topics = BTreeSet::new();
    for id in set {
        let idx = g.resolve_attribute(id.as_ref())?;
        if let Some(t) = g.kind(idx).topics() {
            topics.extend(t.iter().map(String::as_str));
        }
    }
    Ok(topics.len())
}

pub fn compute_bounds<S: AsRef<str>>(
    g: &ProductGraph,
    candidates: &[S],
    budget: usize,
    relevance: &RelevanceResult,
) -> Result<NormalizationBounds> {
    let pool = candidates_from_graph(g, candidates, relevance)?;
    Ok(*Objective::new(pool, budget, 0.0, 0.0)?.bounds())
}

pub fn justification_score<S: AsRef<str>>(
    g: &ProductGraph,
    set: &[S],
    bounds: &NormalizationBounds,
    relevance: &RelevanceResult,
    lambda1: f64,
    lambda2: f64,
) -> Result<ScoreBreakdown> {
    let pool = candidates_from_graph(g, set, relevance)?;
    let n = pool.len();
    let obj = Objective::with_bounds(pool, *bounds, lambda1, lambda2)?;
    obj.score(&(0..n).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cand(id: &str, rel: f64, ty: &str, topics: &[&str]) -> Candidate {
        Candidate {
            id: id.into(),
            relevance: rel,
            type_label: ty.into(),
            topics: topics.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn coverage_counts() {
        let obj = Objective::new(
            vec![
                cand("jc", 0.2, "director", &["t1", "t2"]),
                cand("scifi", 0.3, "genre", &["t2", "t3"]),
                cand("action", 0.5, "genre", &[]),
            ],
            3,
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(obj.type_coverage(&[0, 1, 2]), 2);
        assert_eq!(obj.type_coverage(&[]), 0);
        assert_eq!(obj.topic_coverage(&[0, 1]), 3);
        assert_eq!(obj.topic_coverage(&[2]), 0);
    }

    #[test]
    fn bounds_single_type_is_degenerate() {
        let obj = Objective::new(
            (0..4).map(|i| cand(&format!("r{i}"), 0.1 * (i + 1) as f64, "review", &[])).collect(),
            2,
            1.0,
            0.0,
        )
        .unwrap();
        let b = obj.bounds();
        assert_eq!((b.type_min, b.type_max), (1, 1));
        assert!((b.r_max - 0.7).abs() < 1e-15);
        assert!((b.r_min - 0.1).abs() < 1e-15);
        assert_eq!(obj.score(&[0]).unwrap().type_norm, 1.0);
    }

    #[test]
    fn bounds_type_max_capped_by_budget() {
        let obj = Objective::new(
            vec![
                cand("a", 0.1, "t1", &[]),
                cand("b", 0.1, "t2", &[]),
                cand("c", 0.1, "t3", &[]),
                cand("d", 0.1, "t4", &[]),
                cand("e", 0.1, "t4", &[]),
            ],
            3,
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(obj.bounds().type_max, 3);
    }

    #[test]
    fn zero_lambdas_leave_only_relevance() {
        let obj = Objective::new(
            vec![cand("a", 0.5, "x", &["t"]), cand("b", 0.2, "y", &[]), cand("c", 0.3, "y", &["u"])],
            2,
            0.0,
            0.0,
        )
        .unwrap();
        let s = obj.score(&[0, 2]).unwrap();
        assert_eq!(s.total, s.relevance_norm);
        assert!((s.relevance_norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn score_rejects_bad_sets() {
        let obj = Objective::new(vec![cand("a", 0.5, "x", &[]), cand("b", 0.5, "y", &[])], 1, 0.0, 0.0).unwrap();
        assert!(obj.score(&[]).is_err());
        assert!(matches!(obj.score(&[0, 1]), Err(Error::BudgetExceeded { size: 2, budget: 1 })));
        assert!(matches!(obj.marginal_gain(&[0], 0), Err(Error::AlreadySelected(_))));
        assert!(matches!(obj.marginal_gain(&[0], 1), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn saturated_attribute_gains_relevance_only() {
        let obj = Objective::new(
            vec![cand("a", 0.5, "x", &["t", "u"]), cand("b", 0.2, "x", &["u"]), cand("c", 0.3, "y", &["v"])],
            3,
            0.7,
            0.4,
        )
        .unwrap();
        let b = obj.bounds();
        let gain = obj.marginal_gain(&[0], 1).unwrap();
        let expected = 0.2 / (b.r_max - b.r_min);
        assert!((gain - expected).abs() < 1e-12, "{gain} vs {expected}");
    }

    #[test]
    fn gain_from_empty_uses_extension() {
        let obj = Objective::new(
            vec![cand("a", 0.5, "x", &["t"]), cand("b", 0.2, "y", &[])],
            2,
            0.5,
            0.5,
        )
        .unwrap();
        let g = obj.marginal_gain(&[], 0).unwrap();
        let j = obj.score(&[0]).unwrap().total;
        assert!((g - (j - obj.empty_value())).abs() < 1e-15);
    }

    #[test]
    fn greedy_coverage_small() {
        let sets = vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5, 6]];
        assert_eq!(greedy_max_coverage(&sets, 7, 1), 4);
        assert_eq!(greedy_max_coverage(&sets, 7, 2), 7);
        assert_eq!(greedy_max_coverage(&sets, 7, 0), 0);
    }
}
