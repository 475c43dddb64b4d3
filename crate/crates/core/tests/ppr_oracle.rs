mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{dense_ppr, linf, random_graph, rng};
use proptest::prelude::*;
use recjust::graph::{load_graph, GraphBuilder, NodeKind, ProductGraph};
use recjust::{pagerank, ppr, ppr_delete, ppr_sink, Personalization, PprConfig};

fn cfg() -> PprConfig {
    PprConfig::default()
}

#[test]
fn path_matches_dense_solve() {
    let g = load_graph("a\tP\nb\tP\nc\tP\n", "a\tb\nb\tc\n").unwrap();
    let s = ppr(&g, &Personalization::single("a"), &cfg()).unwrap();
    let want = dense_ppr(&g, &BTreeMap::from([(0, 1.0)]), &BTreeSet::new(), &BTreeSet::new(), 0.85);
    assert!(linf(&s.scores, &want) < 1e-6);
    assert!(s.converged);
}

#[test]
fn pagerank_symmetric_shapes() {
    let pair = load_graph("a\tP\nb\tP\n", "a\tb\n").unwrap();
    let s = pagerank(&pair, &cfg()).unwrap();
    assert!((s.scores[0] - 0.5).abs() < 1e-9 && (s.scores[1] - 0.5).abs() < 1e-9);

    let mut b = GraphBuilder::new();
    for i in 0..6 {
        b.add_node(format!("p{i}"), NodeKind::Product).unwrap();
    }
    for i in 0..6 {
        for j in i + 1..6 {
            b.add_edge_indexed(i, j, 1.0).unwrap();
        }
    }
    let clique = b.build().unwrap();
    let s = pagerank(&clique, &cfg()).unwrap();
    assert!(s.scores.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-9));
}

#[test]
fn pagerank_prefers_popular_attribute_on_axiom_three() {
    let case = &recjust::axioms::axiom_suite()[2];
    let g = &case.graphs[0];
    let s = pagerank(g, &cfg()).unwrap();
    assert!(s.score_of(g, "a1").unwrap() > s.score_of(g, "a2").unwrap());
}

#[test]
fn delete_matches_rebuilt_subgraph() {
    let mut r = rng(41);
    for _ in 0..20 {
        let g = random_graph(10, &mut r);
        let victim = g.node_count() - 1;
        let victim_id = g.id(victim).to_string();
        // Rebuild without the victim, keeping kinds unchecked since an
        // attribute may lose its only product.
        let mut b = GraphBuilder::without_kind_checks();
        for n in g.nodes().iter().filter(|n| n.id != victim_id) {
            b.add_node(n.id.clone(), n.kind.clone()).unwrap();
        }
        for e in g.edges() {
            if e.src != victim && e.dst != victim {
                b.add_edge(g.id(e.src), g.id(e.dst), e.weight).unwrap();
            }
        }
        let sub = b.build().unwrap();
        let v = Personalization::single(g.id(0));
        let del = ppr_delete(&g, &v, &[victim_id.clone()].into(), &cfg()).unwrap();
        let reference = ppr(&sub, &v, &cfg()).unwrap();
        assert_eq!(del.scores[victim], 0.0);
        for n in sub.nodes() {
            let a = del.score_of(&g, &n.id).unwrap();
            let b = reference.score_of(&sub, &n.id).unwrap();
            assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", n.id);
        }
    }
}

fn arb_graph() -> impl Strategy<Value = ProductGraph> {
    (4usize..=24, any::<u64>()).prop_map(|(n, seed)| random_graph(n, &mut rng(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_iteration_matches_dense(g in arb_graph(), pick in any::<prop::sample::Index>(), rho in 0.0f64..=1.0) {
        let products = g.product_ids();
        let a = products[pick.index(products.len())];
        let b = products[(pick.index(products.len()) + 1) % products.len()];
        let v = if a == b {
            Personalization::single(a)
        } else {
            Personalization::new([(a, rho), (b, 1.0 - rho)]).unwrap()
        };
        let restart: BTreeMap<usize, f64> = v.entries().iter().map(|(id, &m)| (g.resolve(id).unwrap(), m)).collect();
        let s = ppr(&g, &v, &cfg()).unwrap();
        prop_assert!(s.converged);
        prop_assert!(s.scores.iter().all(|&x| x >= 0.0));
        prop_assert!((s.sum() - 1.0).abs() < 1e-6);
        prop_assert!(linf(&s.scores, &dense_ppr(&g, &restart, &BTreeSet::new(), &BTreeSet::new(), 0.85)) < 1e-6);

        let x = pick.index(g.node_count());
        if !restart.contains_key(&x) {
            let ids: BTreeSet<String> = [g.id(x).to_string()].into();
            let one: BTreeSet<usize> = [x].into();
            let sink = ppr_sink(&g, &v, &ids, &cfg()).unwrap();
            prop_assert!(linf(&sink.scores, &dense_ppr(&g, &restart, &one, &BTreeSet::new(), 0.85)) < 1e-6);
            let del = ppr_delete(&g, &v, &ids, &cfg()).unwrap();
            prop_assert!(linf(&del.scores, &dense_ppr(&g, &restart, &BTreeSet::new(), &one, 0.85)) < 1e-6);
        }
    }

    #[test]
    fn residuals_contract(g in arb_graph()) {
        let s = ppr(&g, &Personalization::single(g.product_ids()[0]), &cfg()).unwrap();
        for w in s.residuals.windows(2) {
            prop_assert!(w[1] <= 0.85 * w[0] * (1.0 + 1e-9) + 1e-15);
        }
    }

    #[test]
    fn uniform_weight_scaling_is_invisible(g in arb_graph(), c in 0.01f64..100.0) {
        let v = Personalization::single(g.product_ids()[0]);
        let a = ppr(&g, &v, &cfg()).unwrap();
        let b = ppr(&g.scaled(c).unwrap(), &v, &cfg()).unwrap();
        prop_assert!(linf(&a.scores, &b.scores) < 1e-9);
    }
}
