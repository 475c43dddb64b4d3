use std::path::Path;

use recjust::{greedy_select, load_graph_files, PprConfig, Query};

fn movies() -> recjust::ProductGraph {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/movies");
    load_graph_files(dir.join("nodes.tsv"), dir.join("edges.tsv")).unwrap().unwrap()
}

#[test]
fn movie_graph_loads_with_typed_attributes() {
    let g = movies();
    let attrs = g.attributes_of("Avatar").unwrap();
    assert_eq!(attrs, ["Avatar review 1", "Avatar review 2", "James Cameron", "Science Fiction"]);
    let types: Vec<&str> = attrs
        .iter()
        .map(|a| g.kind(g.resolve(a).unwrap()).type_label().unwrap())
        .collect();
    assert_eq!(types, ["review", "review", "director", "genre"]);
}

#[test]
fn justification_keeps_shared_director_and_genre() {
    let g = movies();
    let q = Query::new("Avatar", ["Aliens", "The Terminator"]).with_budget(3);
    let j = greedy_select(&g, &q, &PprConfig::default()).unwrap();
    let ids = j.ids();
    assert_eq!(ids.len(), 3);
    assert!(ids.contains(&"James Cameron") && ids.contains(&"Science Fiction"), "{ids:?}");
    assert!(j.converged);
    let last = j.final_breakdown().unwrap();
    assert!((last.relevance_raw - ids.iter().map(|a| j.relevance.get(a).unwrap()).sum::<f64>()).abs() < 1e-12);
}
