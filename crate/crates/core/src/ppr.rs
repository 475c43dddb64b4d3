//! Personalized PageRank by power iteration over the CSR adjacency.
//!
//! The walk moves from `u` to a neighbor `v` with probability
//! `w(u, v) / weighted_degree(u)`. With damping `d` the fixed point is
//! `s = d * W s + (1 - d) * v`, where mass sitting on a dangling node
//! (no usable outgoing edge) is sent back to the personalization vector.
//! Sinks keep their incoming edges but lose their outgoing ones; deleted
//! nodes lose both and score zero.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeIdx, ProductGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PprConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterates drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Restart distribution keyed by node id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Personalization {
    entries: BTreeMap<String, f64>,
}

impl Personalization {
    /// Repeated ids accumulate. Masses must be non-negative and sum to one
    /// within 1e-12.
    pub fn new<S, I>(entries: I) -> Result<Self>
    where
        S: Into<String>,
        I: IntoIterator<Item = (S, f64)>,
    {
        let mut map = BTreeMap::new();
        for (id, mass) in entries {
            if !mass.is_finite() || mass < 0.0 {
                return Err(Error::InvalidPersonalization(format!(
                    "mass must be finite and non-negative, got {mass}"
                )));
            }
            *map.entry(id.into()).or_insert(0.0) += mass;
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPersonalization(format!(
                "masses must sum to 1, got {total}"
            )));
        }
        Ok(Personalization { entries: map })
    }

    pub fn single<S: Into<String>>(id: S) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(id.into(), 1.0);
        Personalization { entries }
    }

    pub fn uniform<S: Into<String>, I: IntoIterator<Item = S>>(ids: I) -> Result<Self> {
        let ids: BTreeSet<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(Error::InvalidPersonalization("no nodes given".into()));
        }
        let m = 1.0 / ids.len() as f64;
        Ok(Personalization {
            entries: ids.into_iter().map(|id| (id, m)).collect(),
        })
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    fn resolve(&self, g: &ProductGraph) -> Result<Vec<(NodeIdx, f64)>> {
        self.entries
            .iter()
            .map(|(id, &m)| Ok((g.resolve(id)?, m)))
            .collect()
    }
}

/// Node-indexed scores from one proximity computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    /// L1 change after each iteration.
    pub residuals: Vec<f64>,
}

impl ScoreVector {
    pub fn get(&self, idx: NodeIdx) -> f64 {
        self.scores[idx]
    }

    pub fn score_of(&self, g: &ProductGraph, id: &str) -> Result<f64> {
        Ok(self.scores[g.resolve(id)?])
    }

    pub fn sum(&self) -> f64 {
        self.scores.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Removal {
    None,
    Sink,
    Delete,
}

/// Power iteration with optional per-node removal. `restart` must already
/// be resolved and sum to one.
pub(crate) fn power_iteration(
    g: &ProductGraph,
    restart: &[(NodeIdx, f64)],
    removed: &[NodeIdx],
    mode: Removal,
    cfg: &PprConfig,
) -> ScoreVector {
    let n = g.node_count();
    let d = cfg.damping;
    let (offsets, targets, weights) = g.csr();

    let mut deleted = vec![false; n];
    let mut out_degree: Vec<f64> = (0..n).map(|i| g.weighted_degree(i)).collect();
    match mode {
        Removal::None => {}
        Removal::Sink => {
            for &i in removed {
                out_degree[i] = 0.0;
            }
        }
        Removal::Delete => {
            for &i in removed {
                deleted[i] = true;
                out_degree[i] = 0.0;
            }
            for &i in removed {
                for (nb, _) in g.neighbors(i) {
                    if !deleted[nb] {
                        out_degree[nb] = g
                            .neighbors(nb)
                            .filter(|&(m, _)| !deleted[m])
                            .map(|(_, w)| w)
                            .sum();
                    }
                }
            }
        }
    }

    let mut teleport = vec![0.0; n];
    for &(i, m) in restart {
        teleport[i] += m;
    }
    let mut current = teleport.clone();
    let mut next = vec![0.0; n];
    let mut outflow = vec![0.0; n];
    let mut residuals = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        let mut dangling = 0.0;
        for i in 0..n {
            if out_degree[i] > 0.0 {
                outflow[i] = current[i] / out_degree[i];
            } else {
                outflow[i] = 0.0;
                if !deleted[i] {
                    dangling += current[i];
                }
            }
        }
        let restart_scale = d * dangling + (1.0 - d);
        let mut change = 0.0;
        for v in 0..n {
            let value = if deleted[v] {
                0.0
            } else {
                let mut acc = 0.0;
                for k in offsets[v]..offsets[v + 1] {
                    acc += weights[k] * outflow[targets[k] as usize];
                }
                d * acc + restart_scale * teleport[v]
            };
            change += (value - current[v]).abs();
            next[v] = value;
        }
        std::mem::swap(&mut current, &mut next);
        residuals.push(change);
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }

    ScoreVector {
        scores: current,
        converged,
        iterations_used: residuals.len(),
        residuals,
    }
}

/// Several plain PPR solves advanced together, one pass over the edges per
/// iteration. Scores for source `c` live at `c + i * k`. Each column does
/// the same arithmetic in the same order as [`power_iteration`], and a
/// column stops changing once it has converged, so results are identical
/// to solving one at a time.
fn batch_iteration(g: &ProductGraph, restarts: &[Vec<(NodeIdx, f64)>], cfg: &PprConfig) -> Vec<ScoreVector> {
    if g.csr().2.iter().all(|&w| w == 1.0) {
        batch_kernel::<true>(g, restarts, cfg)
    } else {
        batch_kernel::<false>(g, restarts, cfg)
    }
}

/// Per-column walk mass leaving a node, or dangling mass if it has no
/// outgoing edge.
#[inline]
fn spread(scores: &[f64], out: &mut [f64], deg: f64, dangling: &mut [f64]) {
    if deg > 0.0 {
        for (o, &x) in out.iter_mut().zip(scores) {
            *o = x / deg;
        }
    } else {
        out.fill(0.0);
        for (dm, &x) in dangling.iter_mut().zip(scores) {
            *dm += x;
        }
    }
}

/// `UNIT` skips reading edge weights when they are all one; multiplying by
/// one is exact, so both paths agree bit for bit.
fn batch_kernel<const UNIT: bool>(
    g: &ProductGraph,
    restarts: &[Vec<(NodeIdx, f64)>],
    cfg: &PprConfig,
) -> Vec<ScoreVector> {
    let n = g.node_count();
    let k = restarts.len();
    let d = cfg.damping;
    let (offsets, targets, weights) = g.csr();
    let out_degree: Vec<f64> = (0..n).map(|i| g.weighted_degree(i)).collect();

    // Restart mass as (node, column, mass), sorted by node, with repeated
    // entries pre-summed, so the dense teleport vector is never stored.
    let mut teleport: BTreeMap<(NodeIdx, usize), f64> = BTreeMap::new();
    for (c, restart) in restarts.iter().enumerate() {
        for &(i, m) in restart {
            *teleport.entry((i, c)).or_insert(0.0) += m;
        }
    }
    let teleport: Vec<(NodeIdx, usize, f64)> = teleport.into_iter().map(|((i, c), m)| (i, c, m)).collect();
    let mut tp_row = vec![0.0; k];

    let mut current = vec![0.0; n * k];
    for &(i, c, m) in &teleport {
        current[i * k + c] = m;
    }
    // Outflow of the current iterate; the sweep writes the next one. Scores
    // are updated in place, since a node's new value reads only outflow and
    // its own old value.
    let mut outflow = vec![0.0; n * k];
    let mut outflow_next = vec![0.0; n * k];
    let mut dangling = vec![0.0; k];
    let mut dangling_next = vec![0.0; k];
    for ((cur, out), &deg) in current.chunks_exact(k).zip(outflow.chunks_exact_mut(k)).zip(&out_degree) {
        spread(cur, out, deg, &mut dangling);
    }
    let mut residuals = vec![Vec::new(); k];
    let mut active = vec![true; k];
    let mut restart_scale = vec![0.0; k];
    let mut change = vec![0.0; k];
    let mut acc = vec![0.0; k];

    for _ in 0..cfg.max_iterations {
        if !active.iter().any(|&a| a) {
            break;
        }
        for (rs, &dm) in restart_scale.iter_mut().zip(&dangling) {
            *rs = d * dm + (1.0 - d);
        }
        change.fill(0.0);
        dangling_next.fill(0.0);
        let mut tp = teleport.iter().peekable();
        for v in 0..n {
            acc.fill(0.0);
            for e in offsets[v]..offsets[v + 1] {
                if let Some(&ahead) = targets.get(e + PREFETCH_AHEAD) {
                    let at = ahead as usize * k;
                    prefetch(&outflow, at);
                    prefetch(&outflow, at + k - 1);
                }
                let t = targets[e] as usize * k;
                let src = &outflow[t..t + k];
                if UNIT {
                    for (a, &o) in acc.iter_mut().zip(src) {
                        *a += o;
                    }
                } else {
                    let w = weights[e];
                    for (a, &o) in acc.iter_mut().zip(src) {
                        *a += w * o;
                    }
                }
            }
            let range = v * k..(v + 1) * k;
            {
                let cols = current[range.clone()]
                    .iter_mut()
                    .zip(acc.iter().zip(&restart_scale))
                    .zip(active.iter().zip(change.iter_mut()));
                if tp.peek().is_some_and(|&&(i, _, _)| i == v) {
                    tp_row.fill(0.0);
                    while let Some(&(_, c, m)) = tp.next_if(|&&(i, _, _)| i == v) {
                        tp_row[c] = m;
                    }
                    for (((x, (&a, &rs)), (&on, ch)), &t) in cols.zip(&tp_row) {
                        let value = if on { d * a + rs * t } else { *x };
                        *ch += (value - *x).abs();
                        *x = value;
                    }
                } else {
                    // Without restart mass the update is `d * acc + rs * 0.0`,
                    // which is exactly `d * acc`.
                    for ((x, (&a, _)), (&on, ch)) in cols {
                        let value = if on { d * a } else { *x };
                        *ch += (value - *x).abs();
                        *x = value;
                    }
                }
            }
            spread(&current[range.clone()], &mut outflow_next[range], out_degree[v], &mut dangling_next);
        }
        std::mem::swap(&mut outflow, &mut outflow_next);
        std::mem::swap(&mut dangling, &mut dangling_next);
        for c in 0..k {
            if active[c] {
                residuals[c].push(change[c]);
                if change[c] < cfg.tolerance {
                    active[c] = false;
                }
            }
        }
    }

    residuals
        .into_iter()
        .enumerate()
        .map(|(c, residuals)| ScoreVector {
            scores: (0..n).map(|i| current[i * k + c]).collect(),
            converged: !active[c],
            iterations_used: residuals.len(),
            residuals,
        })
        .collect()
}

/// Edges between issuing a prefetch for a gather and performing it.
const PREFETCH_AHEAD: usize = 16;

/// Hints that `xs[i..]` will be read soon; a no-op off x86-64.
#[inline(always)]
fn prefetch(xs: &[f64], i: usize) {
    #[cfg(target_arch = "x86_64")]
    if let Some(x) = xs.get(i) {
        // SAFETY: prefetching is only a hint and `x` is a valid reference.
        unsafe {
            std::arch::x86_64::_mm_prefetch::<{ std::arch::x86_64::_MM_HINT_T0 }>((x as *const f64).cast());
        }
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = (xs, i);
}

/// Columns per batch. Wider batches share more edge traffic but their
/// interleaved score arrays outgrow the cache sooner.
const BATCH_WIDTH: usize = 16;

/// Plain PPR for each restart vector, in batches of at most `BATCH_WIDTH`
/// spread over rayon workers.
pub(crate) fn ppr_batch(g: &ProductGraph, restarts: &[Vec<(NodeIdx, f64)>], cfg: &PprConfig) -> Vec<ScoreVector> {
    if restarts.is_empty() {
        return Vec::new();
    }
    let chunk = restarts
        .len()
        .div_ceil(rayon::current_num_threads().max(1))
        .min(BATCH_WIDTH);
    restarts
        .par_chunks(chunk)
        .flat_map_iter(|group| batch_iteration(g, group, cfg))
        .collect()
}

pub(crate) fn ppr_indexed(
    g: &ProductGraph,
    restart: &[(NodeIdx, f64)],
    cfg: &PprConfig,
) -> ScoreVector {
    power_iteration(g, restart, &[], Removal::None, cfg)
}

fn resolve_set(g: &ProductGraph, ids: &BTreeSet<String>) -> Result<Vec<NodeIdx>> {
    ids.iter().map(|id| g.resolve(id)).collect()
}

pub fn ppr(g: &ProductGraph, v: &Personalization, cfg: &PprConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    let restart = v.resolve(g)?;
    Ok(ppr_indexed(g, &restart, cfg))
}

/// PPR with the outgoing edges of `sinks` removed.
pub fn ppr_sink(
    g: &ProductGraph,
    v: &Personalization,
    sinks: &BTreeSet<String>,
    cfg: &PprConfig,
) -> Result<ScoreVector> {
    cfg.validate()?;
    let restart = v.resolve(g)?;
    let sinks = resolve_set(g, sinks)?;
    Ok(power_iteration(g, &restart, &sinks, Removal::Sink, cfg))
}

/// PPR on the subgraph induced by removing `deleted`.
pub fn ppr_delete(
    g: &ProductGraph,
    v: &Personalization,
    deleted: &BTreeSet<String>,
    cfg: &PprConfig,
) -> Result<ScoreVector> {
    cfg.validate()?;
    let restart = v.resolve(g)?;
    let removed = resolve_set(g, deleted)?;
    for &(i, m) in &restart {
        if m > 0.0 && removed.contains(&i) {
            return Err(Error::InvalidPersonalization(format!(
                "personalization puts mass on deleted node `{}`",
                g.id(i)
            )));
        }
    }
    Ok(power_iteration(g, &restart, &removed, Removal::Delete, cfg))
}

/// Plain PageRank: PPR with uniform restart over every node.
pub fn pagerank(g: &ProductGraph, cfg: &PprConfig) -> Result<ScoreVector> {
    cfg.validate()?;
    if g.is_empty() {
        return Err(Error::InvalidArgument("pagerank of an empty graph".into()));
    }
    let m = 1.0 / g.node_count() as f64;
    let restart: Vec<(NodeIdx, f64)> = (0..g.node_count()).map(|i| (i, m)).collect();
    Ok(ppr_indexed(g, &restart, cfg))
}
