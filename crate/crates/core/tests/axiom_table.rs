use recjust::axioms::{axiom_suite, axiom_table};
use recjust::baselines::BaselineConfig;
use recjust::scorer::builtin_scorers;

#[test]
fn builtin_scorers_match_expected_grid() {
    let scorers = builtin_scorers();
    let refs: Vec<_> = scorers.iter().map(|s| s.as_ref()).collect();
    let table = axiom_table(&refs, &axiom_suite(), &BaselineConfig::default());
    println!("{}", table.render());
    let expected: [(&str, &[usize]); 8] = [
        ("jrecs", &[1, 2, 3, 4, 5, 6, 7]),
        ("mp-and", &[1, 2, 3, 4, 5, 7]),
        ("mp-or", &[1, 2, 3, 4, 5, 7]),
        ("explod", &[1, 6]),
        ("ba-qr-sink", &[1, 2, 4, 5, 6]),
        ("ba-qr-del", &[1, 2, 5]),
        ("ba-rq-sink", &[1, 2, 4, 5, 6]),
        ("ba-rq-del", &[1, 2, 5, 6]),
    ];
    for (name, passes) in expected {
        let row = table.row(name).unwrap();
        assert_eq!(row.passed_numbers(), passes, "{name}: {:#?}", row.cells);
    }
    assert!(table.row("pagerank").is_some());
}

#[test]
fn basset_sink_scores_are_non_negative_on_fixtures() {
    use recjust::baselines::{score_with, BaselineMethod, GatewayMode};
    for case in axiom_suite() {
        for g in &case.graphs {
            for m in BaselineMethod::all() {
                if let BaselineMethod::Basset { mode: GatewayMode::Sink, .. } = m {
                    let s = score_with(&m, g, &case.recommended, &case.feedback, &BaselineConfig::default()).unwrap();
                    assert!(s.values().all(|&x| x >= 0.0), "{} {}: {s:?}", case.name, m.name());
                }
            }
        }
    }
}
