//! Independent oracles and random instance generators shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recjust::graph::{GraphBuilder, NodeKind, ProductGraph};
use recjust::scoring::Candidate;

/// Dense direct solve of the restart fixed point on the subgraph that
/// survives `deleted`, with `sinks` losing their outgoing edges. Mass on
/// nodes without outgoing edges returns to `restart`.
pub fn dense_ppr(
    g: &ProductGraph,
    restart: &BTreeMap<usize, f64>,
    sinks: &BTreeSet<usize>,
    deleted: &BTreeSet<usize>,
    damping: f64,
) -> Vec<f64> {
    let n = g.node_count();
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut out_deg = vec![0.0; n];
    for e in g.edges() {
        if deleted.contains(&e.src) || deleted.contains(&e.dst) {
            continue;
        }
        for (u, v) in [(e.src, e.dst), (e.dst, e.src)] {
            if !sinks.contains(&u) {
                w[(v, u)] += e.weight;
                out_deg[u] += e.weight;
            }
        }
    }
    let mut v = DVector::<f64>::zeros(n);
    for (&i, &m) in restart {
        v[i] = m;
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for u in 0..n {
        if deleted.contains(&u) {
            continue;
        }
        if out_deg[u] > 0.0 {
            for t in 0..n {
                a[(t, u)] -= damping * w[(t, u)] / out_deg[u];
            }
        } else {
            for t in 0..n {
                a[(t, u)] -= damping * v[t];
            }
        }
    }
    let rhs = v * (1.0 - damping);
    let s = a.lu().solve(&rhs).expect("restart system is non-singular");
    (0..n).map(|i| if deleted.contains(&i) { 0.0 } else { s[i] }).collect()
}

/// Random connected graph on `n` nodes: products, attributes adjacent to
/// at least one product, and entities linked to attributes only.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> ProductGraph {
    assert!(n >= 3);
    let n_products = rng.gen_range(2..=(n / 2).max(2));
    let n_entities = rng.gen_range(0..=(n - n_products) / 3);
    let n_attrs = n - n_products - n_entities;
    let types = ["genre", "director", "actor"];
    let mut b = GraphBuilder::new();
    let products: Vec<usize> = (0..n_products)
        .map(|i| b.add_node(format!("p{i}"), NodeKind::Product).unwrap())
        .collect();
    let attrs: Vec<usize> = (0..n_attrs)
        .map(|i| {
            let t = types[rng.gen_range(0..types.len())];
            b.add_node(format!("a{i}"), NodeKind::attribute(t)).unwrap()
        })
        .collect();
    let entities: Vec<usize> = (0..n_entities)
        .map(|i| b.add_node(format!("e{i}"), NodeKind::Entity).unwrap())
        .collect();
    let weight = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.2..3.0) };
    // A spanning structure keeps every graph connected.
    for (i, &a) in attrs.iter().enumerate() {
        let p = products[i % n_products];
        let w = weight(rng);
        b.add_edge_indexed(p, a, w).unwrap();
    }
    for (i, &p) in products.iter().enumerate().skip(1) {
        let a = attrs[(i - 1) % attrs.len()];
        let w = weight(rng);
        b.add_edge_indexed(p, a, w).unwrap();
    }
    for &e in &entities {
        let a = *attrs.choose(rng).unwrap();
        let w = weight(rng);
        b.add_edge_indexed(e, a, w).unwrap();
    }
    for _ in 0..n {
        let p = *products.choose(rng).unwrap();
        let a = *attrs.choose(rng).unwrap();
        let w = weight(rng);
        b.add_edge_indexed(p, a, w).unwrap();
    }
    b.build().unwrap()
}

/// Random candidate pool with `n` attributes.
pub fn random_pool(n: usize, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
    let n_types = rng.gen_range(1..=4);
    let n_topics = rng.gen_range(0..=5);
    (0..n)
        .map(|i| {
            let k = if n_topics == 0 { 0 } else { rng.gen_range(0..=n_topics.min(3)) };
            let topics: BTreeSet<String> =
                (0..k).map(|_| format!("k{}", rng.gen_range(0..n_topics))).collect();
            Candidate {
                id: format!("a{i:02}"),
                relevance: if rng.gen_bool(0.1) { 0.0 } else { rng.gen::<f64>() },
                type_label: format!("t{}", rng.gen_range(0..n_types)),
                topics,
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every subset of `0..n` with between 1 and `k` members.
pub fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .filter(|m| m.count_ones() as usize <= k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
