use std::path::PathBuf;
use std::process::{Command, Output};

fn recjust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recjust")).args(args).output().expect("binary runs")
}

fn movies(file: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "fixtures", "movies", file].iter().collect();
    p.to_string_lossy().into_owned()
}

fn records(out: &Output) -> Vec<serde_json::Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("each stdout line is JSON"))
        .collect()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn print_config_echoes_defaults() {
    let out = recjust(&["--print-config"]);
    assert!(out.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["budget"], 15);
    assert_eq!(cfg["rho"], 0.5);
    assert_eq!(cfg["damping"], 0.85);
    assert_eq!(cfg["tolerance"], 1e-9);
    assert_eq!(cfg["max_iterations"], 200);
    assert_eq!(cfg["lambda1"], 0.0);
    assert_eq!(cfg["lambda2"], 0.0);
    assert_eq!(cfg["alpha"], 0.5);
    assert_eq!(cfg["beta"], 0.5);
    assert_eq!(cfg["method"], "jrecs");

    let out = recjust(&["bench", "--budget", "4", "--print-config"]);
    let cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["budget"], 4);
    assert_eq!(cfg["command"]["command"], "bench");
    assert_eq!(cfg["command"]["q_size"], 10);
}

#[test]
fn zero_budget_is_a_usage_error() {
    let (n, e) = (movies("nodes.tsv"), movies("edges.tsv"));
    let out = recjust(&["justify", "--nodes", &n, "--edges", &e, "--queries", &movies("queries.tsv"), "--budget", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--budget"));
}

#[test]
fn movie_justification_includes_shared_attributes() {
    let (n, e) = (movies("nodes.tsv"), movies("edges.tsv"));
    let out = recjust(&[
        "justify", "--nodes", &n, "--edges", &e, "--recommended", "Avatar", "--feedback", "Aliens,The Terminator",
        "--budget", "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    let ids: Vec<&str> = r["selected"].as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 3);
    assert!(ids.contains(&"James Cameron") && ids.contains(&"Science Fiction"), "{ids:?}");
    for s in r["selected"].as_array().unwrap() {
        for key in ["type_label", "topics", "relevance", "marginal_gain", "breakdown_after"] {
            assert!(!s[key].is_null(), "missing {key}");
        }
    }
    assert_eq!(r["converged"], true);
    assert!(r["seconds"].as_f64().unwrap() >= 0.0);
    assert!(r["bounds"]["r_max"].as_f64().unwrap() > 0.0);
    assert!(stderr(&out).contains("James Cameron"));
}

#[test]
fn baseline_method_reports_scores() {
    let (n, e) = (movies("nodes.tsv"), movies("edges.tsv"));
    let out = recjust(&["justify", "--nodes", &n, "--edges", &e, "--queries", &movies("queries.tsv"), "--method", "mp-and"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = &records(&out)[0];
    assert_eq!(r["method"], "mp-and");
    assert!(r.get("bounds").is_none());
    let scores = r["scores"].as_array().unwrap();
    assert_eq!(scores.len(), 4);
    let s: Vec<f64> = scores.iter().map(|x| x["score"].as_f64().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn query_file_order_is_kept_and_output_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let queries = dir.path().join("q.tsv");
    std::fs::write(&queries, "Titanic\tAvatar\nAvatar\tAliens\nAliens\tAvatar,Titanic\n").unwrap();
    let report = dir.path().join("out.jsonl");
    let (n, e) = (movies("nodes.tsv"), movies("edges.tsv"));
    let out = recjust(&[
        "justify", "--nodes", &n, "--edges", &e, "--queries", queries.to_str().unwrap(), "--output",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report).unwrap();
    let order: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["query"]["recommended"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(order, ["Titanic", "Avatar", "Aliens"]);
}

#[test]
fn data_errors_exit_with_two() {
    let (n, e) = (movies("nodes.tsv"), movies("edges.tsv"));
    let missing = recjust(&["validate-graph", "--nodes", "/no/such/nodes.tsv", "--edges", &e]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = recjust(&["justify", "--nodes", &n, "--edges", &e, "--recommended", "Avatar", "--feedback", "Heat"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("Heat"));

    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("n.tsv");
    let edges = dir.path().join("e.tsv");
    std::fs::write(&nodes, "bare\tP\nq\tP\na\tA\tgenre\n").unwrap();
    std::fs::write(&edges, "q\ta\nbare\tq\n").unwrap();
    let (n, e) = (nodes.to_str().unwrap(), edges.to_str().unwrap());
    let out = recjust(&["justify", "--nodes", n, "--edges", e, "--recommended", "bare", "--feedback", "q"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no attributes"), "{}", stderr(&out));
}

#[test]
fn unknown_method_is_a_usage_error() {
    let out = recjust(&["axioms", "--methods", "jrecs,nope"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope"));
}

#[test]
fn axioms_default_grid_and_single_row() {
    let out = recjust(&["axioms"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = records(&out);
    assert_eq!(recs.len(), 9);
    assert_eq!(recs[0]["method"], "jrecs");
    assert_eq!(recs[0]["passed"], serde_json::json!([1, 2, 3, 4, 5, 6, 7]));

    let out = recjust(&["axioms", "--methods", "jrecs"]);
    assert!(out.status.success());
    assert_eq!(records(&out).len(), 1);
    let table = stderr(&out);
    assert_eq!(table.lines().count(), 2, "{table}");
}

#[test]
fn corrupted_fixture_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().to_str().unwrap();
    assert!(recjust(&["axioms", "--export-fixtures", fx]).status.success());
    let roundtrip = recjust(&["axioms", "--fixtures", fx, "--methods", "jrecs"]);
    assert!(roundtrip.status.success(), "{}", stderr(&roundtrip));

    std::fs::write(dir.path().join("3_popularity/g0/edges.tsv"), "r\ta1\tnot-a-weight\n").unwrap();
    let out = recjust(&["axioms", "--fixtures", fx]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("3_popularity/g0"), "{}", stderr(&out));
}

#[test]
fn bench_single_scale_has_no_ratios() {
    let out = recjust(&["bench", "--edge-counts", "2000", "--repeats", "1", "--q-size", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert!(recs[0]["edges"].as_u64().unwrap() > 1000);
    assert_eq!(recs[1]["ratios"], serde_json::json!([]));
}

#[test]
fn bench_workload_is_seeded() {
    let run = || records(&recjust(&["bench", "--edge-counts", "2000,4000", "--repeats", "1", "--seed", "5"]));
    let (a, b) = (run(), run());
    for i in 0..2 {
        assert_eq!(a[i]["nodes"], b[i]["nodes"]);
        assert_eq!(a[i]["edges"], b[i]["edges"]);
    }
    assert_eq!(a[2]["ratios"].as_array().unwrap().len(), 1);
}

#[test]
fn bench_beyond_memory_limit_gives_guidance() {
    let out = recjust(&["bench", "--edge-counts", "10000,50000000"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("smaller"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn sweep_on_packaged_fixture() {
    let out = recjust(&["sweep", "--lambdas", "0,0.3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    let d = |i: usize| recs[i]["mean_type_diversity"].as_f64().unwrap();
    let r = |i: usize| recs[i]["mean_relevance"].as_f64().unwrap();
    assert!(d(1) > d(0));
    assert!(r(1) <= r(0));
}

#[test]
fn eval_mrr_on_planted_and_on_files() {
    let out = recjust(&["eval-mrr", "--users", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = records(&out);
    let methods: Vec<&str> = recs.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["jrecs", "pagerank", "explod"]);

    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.tsv");
    std::fs::write(&cases, "u1\tAvatar\tAliens,The Terminator\tJames Cameron\tdirector\n").unwrap();
    let (n, e) = (movies("nodes.tsv"), movies("edges.tsv"));
    let c = cases.to_str().unwrap();
    let out = recjust(&["eval-mrr", "--nodes", &n, "--edges", &e, "--cases", c, "--methods", "jrecs"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rank = records(&out)[0]["ranks"][0].as_f64().unwrap();
    assert!(rank == 1.0 || rank == 2.0, "{rank}");

    std::fs::write(&cases, "u1\tAvatar\tAliens\tJames Cameron\tgenre\n").unwrap();
    let out = recjust(&["eval-mrr", "--nodes", &n, "--edges", &e, "--cases", c]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_graph_summary() {
    let out = recjust(&["validate-graph", "--nodes", &movies("nodes.tsv"), "--edges", &movies("edges.tsv")]);
    assert!(out.status.success());
    let s = &records(&out)[0];
    assert_eq!(s["products"], 4);
    assert_eq!(s["components"], 1);
    assert_eq!(s["attribute_types"]["genre"], 3);
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(recjust(&[]).status.code(), Some(1));
    assert_eq!(recjust(&["justify"]).status.code(), Some(1));
}
