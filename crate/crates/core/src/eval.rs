//! Evaluation harnesses: preference retrieval (MRR), the relevance and
//! type-diversity trade-off, and seeded synthetic graphs for scaling runs.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::error::{Error, Result};
use crate::graph::{load_graph, GraphBuilder, NodeKind, ProductGraph};
use crate::ppr::PprConfig;
use crate::query::Query;
use crate::relevance::relevance_indexed;
use crate::scorer::AttributeScorer;
use crate::scoring::{candidates_from_graph, Objective};
use crate::selector::{greedy_on, greedy_select};

/// Mean reciprocal rank. Ranks may be fractional (averaged ties) but must
/// be at least 1.
pub fn mrr(ranks: &[f64]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("mrr of an empty rank list".into()));
    }
    if let Some(bad) = ranks.iter().find(|&&r| !(r >= 1.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument(format!("rank {bad} is below 1")));
    }
    Ok(ranks.iter().map(|r| 1.0 / r).sum::<f64>() / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalCase {
    pub user: String,
    pub recommended: String,
    pub feedback: Vec<String>,
    pub target: String,
    pub candidate_type: String,
}

impl RetrievalCase {
    pub fn validate(&self, g: &ProductGraph) -> Result<()> {
        if self.feedback.is_empty() {
            return Err(Error::InvalidQuery(format!("case for `{}` has no feedback", self.user)));
        }
        let attrs = g.attributes_of(&self.recommended)?;
        if !attrs.contains(&self.target.as_str()) {
            return Err(Error::InvalidQuery(format!(
                "target `{}` is not an attribute of `{}`",
                self.target, self.recommended
            )));
        }
        let t = g.kind(g.resolve(&self.target)?).type_label().unwrap_or_default();
        if t != self.candidate_type {
            return Err(Error::InvalidQuery(format!(
                "target `{}` has type `{t}`, expected `{}`",
                self.target, self.candidate_type
            )));
        }
        Ok(())
    }

    /// Attributes of `r` with the candidate type.
    pub fn candidates<'g>(&self, g: &'g ProductGraph) -> Result<Vec<&'g str>> {
        Ok(g.attributes_of(&self.recommended)?
            .into_iter()
            .filter(|a| {
                g.index_of(a).and_then(|i| g.kind(i).type_label()) == Some(self.candidate_type.as_str())
            })
            .collect())
    }
}

/// 1-based rank of `target` by descending score, ties sharing the average
/// of the positions they span.
pub fn tie_averaged_rank(scores: &[(&str, f64)], target: &str) -> Result<f64> {
    let t = scores
        .iter()
        .find(|(a, _)| *a == target)
        .map(|&(_, s)| s)
        .ok_or_else(|| Error::InvalidQuery(format!("target `{target}` missing from candidates")))?;
    if t.is_nan() {
        return Err(Error::InvalidArgument(format!("target `{target}` scored NaN")));
    }
    let above = scores.iter().filter(|(_, s)| *s > t).count();
    let tied = scores.iter().filter(|(_, s)| *s == t).count();
    Ok(above as f64 + (tied as f64 + 1.0) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalReport {
    pub method: String,
    pub mrr: f64,
    /// Per-case ranks in input order.
    pub ranks: Vec<f64>,
}

pub fn preference_retrieval(
    g: &ProductGraph,
    cases: &[RetrievalCase],
    scorer: &dyn AttributeScorer,
    cfg: &BaselineConfig,
) -> Result<RetrievalReport> {
    let ranks = cases
        .par_iter()
        .map(|case| {
            case.validate(g)?;
            let scores = scorer.score(g, &case.recommended, &case.feedback, cfg)?;
            let cands: Vec<(&str, f64)> = case
                .candidates(g)?
                .into_iter()
                .map(|a| (a, scores.get(a).copied().unwrap_or(f64::NAN)))
                .collect();
            tie_averaged_rank(&cands, &case.target)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RetrievalReport {
        method: scorer.name().to_string(),
        mrr: mrr(&ranks)?,
        ranks,
    })
}

/// Shape of the planted-preference benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub users: usize,
    pub products: usize,
    pub reviews_per_user: usize,
    pub keywords_per_user: usize,
    pub genres: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            users: 80,
            products: 40,
            reviews_per_user: 4,
            keywords_per_user: 3,
            genres: 8,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedBenchmark {
    pub graph: ProductGraph,
    pub cases: Vec<RetrievalCase>,
}

/// Users review products; each user's reviews share that user's private
/// keyword entities, so a user's own review on `r` is wired to their
/// feedback products through entities alone. Each case hides one review
/// among all reviews of the same product.
pub fn planted_benchmark(pc: &PlantedConfig) -> Result<PlantedBenchmark> {
    if pc.users == 0 || pc.products < 2 || pc.genres == 0 || pc.keywords_per_user == 0 {
        return Err(Error::InvalidArgument("planted benchmark needs users, >= 2 products, genres and keywords".into()));
    }
    if pc.reviews_per_user < 2 || pc.reviews_per_user > pc.products {
        return Err(Error::InvalidArgument("reviews_per_user must lie in [2, products]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pc.seed);
    let mut b = GraphBuilder::new();
    for p in 0..pc.products {
        b.add_node(format!("p{p}"), NodeKind::Product)?;
    }
    let genres = pc.genres.min(pc.products);
    for k in 0..genres {
        b.add_node(format!("genre{k}"), NodeKind::attribute("genre"))?;
    }
    for p in 0..pc.products {
        // Genre `p % genres` guarantees every genre has a product.
        b.add_edge(&format!("p{p}"), &format!("genre{}", p % genres), 1.0)?;
        let extra = rng.gen_range(0..genres);
        if extra != p % genres {
            b.add_edge(&format!("p{p}"), &format!("genre{extra}"), 1.0)?;
        }
    }

    let mut reviewed: Vec<Vec<usize>> = Vec::with_capacity(pc.users);
    let mut reviewers: Vec<Vec<usize>> = vec![Vec::new(); pc.products];
    let all: Vec<usize> = (0..pc.products).collect();
    for u in 0..pc.users {
        let mut mine: Vec<usize> = all.choose_multiple(&mut rng, pc.reviews_per_user).copied().collect();
        mine.sort_unstable();
        for j in 0..pc.keywords_per_user {
            b.add_node(format!("kw{u}_{j}"), NodeKind::Entity)?;
        }
        let kws: Vec<usize> = (0..pc.keywords_per_user).collect();
        for &p in &mine {
            let rv = format!("rv{u}_p{p}");
            b.add_node(rv.clone(), NodeKind::attribute("review"))?;
            b.add_edge(&format!("p{p}"), &rv, 1.0)?;
            for &j in kws.choose_multiple(&mut rng, pc.keywords_per_user.min(2)) {
                b.add_edge(&rv, &format!("kw{u}_{j}"), 1.0)?;
            }
            reviewers[p].push(u);
        }
        reviewed.push(mine);
    }
    let graph = b.build()?;

    let mut cases = Vec::new();
    for (u, mine) in reviewed.iter().enumerate() {
        // The most-reviewed of the user's products, smallest id on ties.
        let r = *mine
            .iter()
            .max_by_key(|&&p| (reviewers[p].len(), std::cmp::Reverse(p)))
            .expect("reviews_per_user >= 2");
        if reviewers[r].len() < 2 {
            continue;
        }
        cases.push(RetrievalCase {
            user: format!("u{u}"),
            recommended: format!("p{r}"),
            feedback: mine.iter().filter(|&&p| p != r).map(|p| format!("p{p}")).collect(),
            target: format!("rv{u}_p{r}"),
            candidate_type: "review".to_string(),
        });
    }
    Ok(PlantedBenchmark { graph, cases })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda1: f64,
    /// Raw summed relevance of the selection, averaged over users.
    pub mean_relevance: f64,
    /// Normalized type-diversity term, averaged over users.
    pub mean_type_diversity: f64,
}

/// For each `lambda1` in the grid, runs greedy selection for every user
/// with `lambda2 = 0` and averages the selection's raw relevance and
/// normalized type diversity.
pub fn diversity_sweep(
    g: &ProductGraph,
    users: &[(String, Vec<String>)],
    lambda1_grid: &[f64],
    budget: usize,
    rho: f64,
    cfg: &PprConfig,
) -> Result<Vec<SweepPoint>> {
    if lambda1_grid.is_empty() {
        return Err(Error::InvalidArgument("lambda1 grid is empty".into()));
    }
    if users.is_empty() {
        return Err(Error::InvalidArgument("no users to sweep".into()));
    }
    cfg.validate()?;
    // Relevance does not depend on lambda1, so each user is solved once.
    let pools = users
        .par_iter()
        .map(|(r, feedback)| {
            let query = Query::new(r.clone(), feedback.clone()).with_budget(budget).with_rho(rho);
            query.validate(g)?;
            let ri = g.resolve_product(r)?;
            let fb: BTreeSet<usize> = feedback.iter().map(|q| g.resolve_product(q)).collect::<Result<_>>()?;
            let fb: Vec<usize> = fb.into_iter().collect();
            let relevance = relevance_indexed(g, ri, &fb, rho, cfg)?.into_result(g);
            let ids: Vec<&str> = relevance.per_attribute.keys().map(String::as_str).collect();
            if ids.is_empty() {
                return Err(Error::NoAttributes(r.clone()));
            }
            candidates_from_graph(g, &ids, &relevance)
        })
        .collect::<Result<Vec<_>>>()?;

    lambda1_grid
        .iter()
        .map(|&l1| {
            let mut rel = 0.0;
            let mut div = 0.0;
            for pool in &pools {
                let obj = Objective::new(pool.clone(), budget, l1, 0.0)?;
                let picked = greedy_on(&obj, budget);
                rel += picked.iter().map(|&(a, _, _)| obj.relevance(a)).sum::<f64>();
                div += picked.last().map_or(0.0, |(_, _, b)| b.type_norm);
            }
            let n = pools.len() as f64;
            Ok(SweepPoint {
                lambda1: l1,
                mean_relevance: rel / n,
                mean_type_diversity: div / n,
            })
        })
        .collect()
}

/// Seeded bipartite product/attribute graph with one entity behind every
/// few attributes. Attribute `i` has type `t{i % n_types}`; each product
/// carries `attrs_per_product` distinct attributes drawn from a pool about
/// a quarter the size of the total draws.
///
/// Products form soft communities: most draws land in a fixed-width window
/// of the pool aligned with the product's position, the rest are shortcuts
/// whose distance is log-uniform up to the pool size. Node indices follow
/// pool order, so neighborhoods stay mostly local in memory at every scale.
pub fn synth_graph(
    n_products: usize,
    attrs_per_product: usize,
    n_types: usize,
    topics_per_attr: usize,
    seed: u64,
) -> Result<ProductGraph> {
    if n_products == 0 || attrs_per_product == 0 || n_types == 0 || topics_per_attr == 0 {
        return Err(Error::InvalidArgument("synth_graph parameters must be positive".into()));
    }
    let draws = n_products
        .checked_mul(attrs_per_product)
        .filter(|&d| d <= u32::MAX as usize / 2)
        .ok_or_else(|| Error::InvalidArgument("synth_graph size overflows".into()))?;
    let pool = (draws / 4).max(2 * attrs_per_product);
    let topic_pool = 4 * topics_per_attr + n_types;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut used = vec![false; pool];
    let mut product_attrs: Vec<Vec<usize>> = Vec::with_capacity(n_products);
    let mut seen = HashSet::with_capacity(attrs_per_product);
    let window = COMMUNITY_WINDOW.max(2 * attrs_per_product).min(pool);
    for p in 0..n_products {
        seen.clear();
        let mut mine = Vec::with_capacity(attrs_per_product);
        let center = p * pool / n_products;
        while mine.len() < attrs_per_product {
            let a = if rng.gen_bool(LOCAL_DRAW) || window == pool {
                let lo = center.saturating_sub(window / 2).min(pool - window);
                lo + rng.gen_range(0..window)
            } else {
                // Shortcut at a log-uniform distance beyond the window.
                let span = (pool as f64 / window as f64).ln();
                let dist = (window as f64 * (rng.gen::<f64>() * span).exp()) as usize;
                if rng.gen_bool(0.5) {
                    (center + dist) % pool
                } else {
                    (center + pool - dist % pool) % pool
                }
            };
            if seen.insert(a) {
                mine.push(a);
                used[a] = true;
            }
        }
        product_attrs.push(mine);
    }

    let mut b = GraphBuilder::new();
    let p_idx: Vec<usize> = (0..n_products)
        .map(|p| b.add_node(format!("p{p}"), NodeKind::Product))
        .collect::<Result<_>>()?;
    let n_entities = (pool / 8).max(1);
    let mut a_idx = vec![usize::MAX; pool];
    let mut e_idx = vec![usize::MAX; n_entities];
    let topics: Vec<usize> = (0..topic_pool).collect();
    for a in 0..pool {
        let tp: Vec<String> = topics
            .choose_multiple(&mut rng, topics_per_attr)
            .map(|t| format!("k{t}"))
            .collect();
        let entity = (a / 8).min(n_entities - 1);
        if !used[a] {
            continue;
        }
        a_idx[a] = b.add_node(format!("a{a}"), NodeKind::attribute_with_topics(format!("t{}", a % n_types), tp))?;
        if e_idx[entity] == usize::MAX {
            e_idx[entity] = b.add_node(format!("e{entity}"), NodeKind::Entity)?;
        }
        b.add_edge_indexed(a_idx[a], e_idx[entity], 1.0)?;
    }
    for (p, mine) in product_attrs.iter().enumerate() {
        for &a in mine {
            b.add_edge_indexed(p_idx[p], a_idx[a], 1.0)?;
        }
    }
    b.build()
}

/// Width of the pool window a product mostly draws from.
const COMMUNITY_WINDOW: usize = 256;
const LOCAL_DRAW: f64 = 0.99;

/// Attributes per product in the scaling series.
pub const BENCH_ATTRS_PER_PRODUCT: usize = 10;

/// Largest edge count the bench accepts.
pub const BENCH_MAX_EDGES: usize = 20_000_000;

/// A synthetic graph with roughly `target_edges` edges.
pub fn synth_graph_with_edges(target_edges: usize, seed: u64) -> Result<ProductGraph> {
    if target_edges > BENCH_MAX_EDGES {
        return Err(Error::InvalidArgument(format!(
            "{target_edges} edges exceeds the in-memory limit of {BENCH_MAX_EDGES}; run a smaller series"
        )));
    }
    // Every product adds A product edges and about A/4 entity edges.
    let per_product = BENCH_ATTRS_PER_PRODUCT as f64 * 1.25;
    let n_products = ((target_edges as f64 / per_product).round() as usize).max(2);
    synth_graph(n_products, BENCH_ATTRS_PER_PRODUCT, 5, 2, seed)
}

/// Seeded query: a random product and `q_size` distinct other products.
pub fn random_query(g: &ProductGraph, q_size: usize, budget: usize, seed: u64) -> Result<Query> {
    let products = g.product_ids();
    if products.len() <= q_size {
        return Err(Error::InvalidArgument("graph has too few products for the query".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked: Vec<&str> = products.choose_multiple(&mut rng, q_size + 1).copied().collect();
    Ok(Query::new(picked[0], picked[1..].iter().copied()).with_budget(budget))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchPoint {
    pub target_edges: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Fastest of the repeated runs, in seconds.
    pub seconds: f64,
}

/// Within a round, a scale keeps repeating until this much time has been
/// spent, so fast scales get enough samples to shed scheduler noise.
const BENCH_ROUND_SECONDS: f64 = 0.3;
const BENCH_MAX_RUNS_PER_ROUND: usize = 50;

/// Times `greedy_select` on each scale of a seeded series and keeps the
/// fastest run per scale. Scales are visited round-robin for `repeats`
/// rounds, so slow drift in machine speed affects every scale alike.
/// Graph generation is not timed.
pub fn bench_series(
    edge_targets: &[usize],
    q_size: usize,
    budget: usize,
    repeats: usize,
    seed: u64,
    cfg: &PprConfig,
) -> Result<Vec<BenchPoint>> {
    let workloads = edge_targets
        .iter()
        .map(|&target| {
            let g = synth_graph_with_edges(target, seed)?;
            let query = random_query(&g, q_size, budget, seed)?;
            Ok((target, g, query))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = vec![f64::INFINITY; workloads.len()];
    for _ in 0..repeats.max(1) {
        for ((_, g, query), best) in workloads.iter().zip(&mut best) {
            let (mut runs, mut spent) = (0, 0.0);
            while runs == 0 || (spent < BENCH_ROUND_SECONDS && runs < BENCH_MAX_RUNS_PER_ROUND) {
                let t = Instant::now();
                let j = greedy_select(g, query, cfg)?;
                let dt = t.elapsed().as_secs_f64();
                std::hint::black_box(j);
                *best = best.min(dt);
                spent += dt;
                runs += 1;
            }
        }
    }
    Ok(workloads
        .iter()
        .zip(best)
        .map(|((target, g, _), seconds)| {
            log::info!("bench: {} edges in {seconds:.4}s", g.edge_count());
            BenchPoint {
                target_edges: *target,
                nodes: g.node_count(),
                edges: g.edge_count(),
                seconds,
            }
        })
        .collect())
}

/// Consecutive time ratios; empty for fewer than two points.
pub fn bench_ratios(points: &[BenchPoint]) -> Vec<f64> {
    points.windows(2).map(|w| w[1].seconds / w[0].seconds).collect()
}

const SWEEP_NODES: &str = include_str!("../fixtures/sweep/nodes.tsv");
const SWEEP_EDGES: &str = include_str!("../fixtures/sweep/edges.tsv");
const SWEEP_USERS: &str = include_str!("../fixtures/sweep/users.tsv");

/// Shape of the mixed-type sweep fixture.
pub const SWEEP_PRODUCTS: usize = 120;
pub const SWEEP_REVIEWS_PER_PRODUCT: usize = 20;
pub const SWEEP_SHARED_TYPES: [&str; 4] = ["genre", "director", "actor", "country"];
pub const SWEEP_USERS_N: usize = 50;
pub const SWEEP_SEED: u64 = 6;
pub const SWEEP_REVIEW_WEIGHT: f64 = 3.0;

/// Products each carry heavily weighted private `review` attributes plus
/// one shared attribute of each other type, so relevance alone favors a
/// single type.
pub fn mixed_type_fixture(seed: u64) -> Result<(ProductGraph, Vec<(String, Vec<String>)>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for p in 0..SWEEP_PRODUCTS {
        b.add_node(format!("p{p}"), NodeKind::Product)?;
    }
    let shared_pool = SWEEP_PRODUCTS / 6;
    let mut shared_used = vec![vec![false; shared_pool]; SWEEP_SHARED_TYPES.len()];
    let mut shared_edges = Vec::new();
    for p in 0..SWEEP_PRODUCTS {
        for (t, used) in shared_used.iter_mut().enumerate() {
            let k = rng.gen_range(0..shared_pool);
            used[k] = true;
            shared_edges.push((p, t, k));
        }
    }
    for (t, used) in shared_used.iter().enumerate() {
        for (k, &u) in used.iter().enumerate() {
            if u {
                b.add_node(format!("{}{k}", SWEEP_SHARED_TYPES[t]), NodeKind::attribute(SWEEP_SHARED_TYPES[t]))?;
            }
        }
    }
    for p in 0..SWEEP_PRODUCTS {
        for i in 0..SWEEP_REVIEWS_PER_PRODUCT {
            let rv = format!("rv{p}_{i}");
            b.add_node(rv.clone(), NodeKind::attribute("review"))?;
            b.add_edge(&format!("p{p}"), &rv, SWEEP_REVIEW_WEIGHT)?;
        }
    }
    for (p, t, k) in shared_edges {
        b.add_edge(&format!("p{p}"), &format!("{}{k}", SWEEP_SHARED_TYPES[t]), 1.0)?;
    }
    let g = b.build()?;
    let products: Vec<usize> = (0..SWEEP_PRODUCTS).collect();
    let users = (0..SWEEP_USERS_N)
        .map(|_| {
            let picked: Vec<usize> = products.choose_multiple(&mut rng, 4).copied().collect();
            (format!("p{}", picked[0]), picked[1..].iter().map(|p| format!("p{p}")).collect())
        })
        .collect();
    Ok((g, users))
}

/// Users file: one `r<TAB>q1,q2,...` line per user.
pub fn users_to_text(users: &[(String, Vec<String>)]) -> String {
    users.iter().map(|(r, q)| format!("{r}\t{}\n", q.join(","))).collect()
}

pub fn parse_users(text: &str) -> Result<Vec<(String, Vec<String>)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            let (r, q) = l
                .split_once('\t')
                .ok_or_else(|| Error::InvalidQuery(format!("query line {}: expected `r<TAB>q1,q2`", i + 1)))?;
            let q: Vec<String> = q.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            if q.is_empty() {
                return Err(Error::InvalidQuery(format!("query line {}: empty feedback set", i + 1)));
            }
            Ok((r.trim().to_string(), q))
        })
        .collect()
}

/// The packaged mixed-type fixture and its users.
pub fn sweep_fixture() -> (ProductGraph, Vec<(String, Vec<String>)>) {
    let g = load_graph(SWEEP_NODES, SWEEP_EDGES).expect("packaged sweep fixture is valid");
    let users = parse_users(SWEEP_USERS).expect("packaged sweep users are valid");
    (g, users)
}
