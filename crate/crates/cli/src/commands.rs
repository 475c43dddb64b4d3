use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use recjust::axioms::{axiom_suite, axiom_table, load_suite_from_dir, write_fixtures};
use recjust::eval::{
    bench_ratios, bench_series, diversity_sweep, parse_users, planted_benchmark, preference_retrieval, sweep_fixture,
    PlantedConfig, RetrievalCase, BENCH_MAX_EDGES,
};
use recjust::scorer::{builtin_names, AttributeScorer};
use recjust::{greedy_select, load_graph_files, JustificationSet, ProductGraph, Query};
use serde::Serialize;

use crate::config::{Cli, CliError, Command, GraphArgs, OptionalGraphArgs, RunArgs, RunConfig};

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult {
    if cli.print_config {
        let cfg = RunConfig {
            run: &cli.run,
            command: cli.command.as_ref(),
        };
        println!("{}", serde_json::to_string_pretty(&cfg).map_err(internal)?);
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Usage("no subcommand given; see `recjust --help`".into()));
    };
    let run = &cli.run;
    run.validate()?;
    let mut out = Records::open(run.output.as_deref())?;
    match command {
        Command::Justify {
            graph,
            recommended,
            feedback,
            queries,
        } => justify(run, graph, recommended.as_deref(), feedback, queries.as_deref(), &mut out),
        Command::Axioms {
            methods,
            fixtures,
            export_fixtures,
        } => axioms(run, methods, fixtures.as_deref(), export_fixtures.as_deref(), &mut out),
        Command::EvalMrr {
            graph,
            cases,
            methods,
            users,
        } => eval_mrr(run, graph, cases.as_deref(), methods, *users, &mut out),
        Command::Sweep { graph, users, lambdas } => sweep(run, graph, users.as_deref(), lambdas, &mut out),
        Command::Bench {
            edge_counts,
            q_size,
            repeats,
        } => bench(run, edge_counts, *q_size, *repeats, &mut out),
        Command::ValidateGraph { graph } => validate_graph(graph, &mut out),
    }?;
    out.finish()
}

fn internal<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(e.to_string())
}

/// Line-delimited JSON records, to a file or stdout.
struct Records {
    sink: Box<dyn Write>,
}

impl Records {
    fn open(path: Option<&Path>) -> CliResult<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        };
        Ok(Records { sink })
    }

    fn emit<T: Serialize>(&mut self, record: &T) -> CliResult {
        serde_json::to_writer(&mut self.sink, record).map_err(internal)?;
        self.sink.write_all(b"\n").map_err(internal)
    }

    fn finish(mut self) -> CliResult {
        self.sink.flush().map_err(internal)
    }
}

/// The human-readable view goes to stderr so stdout stays machine readable.
fn table(text: &str) {
    eprint!("{text}");
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn load(graph: &GraphArgs) -> CliResult<ProductGraph> {
    let g = load_graph_files(&graph.nodes, &graph.edges)
        .map_err(|e| CliError::Data(format!("cannot read graph: {e}")))?
        .map_err(|e| CliError::Data(format!("invalid graph: {e}")))?;
    log::info!("loaded {} nodes and {} edges", g.node_count(), g.edge_count());
    Ok(g)
}

fn load_optional(graph: &OptionalGraphArgs) -> CliResult<Option<ProductGraph>> {
    match (&graph.nodes, &graph.edges) {
        (Some(nodes), Some(edges)) => load(&GraphArgs {
            nodes: nodes.clone(),
            edges: edges.clone(),
        })
        .map(Some),
        _ => Ok(None),
    }
}

fn resolve_methods(run: &RunArgs, names: &[String]) -> CliResult<Vec<Box<dyn AttributeScorer>>> {
    let names: Vec<String> = if names.is_empty() {
        builtin_names().into_iter().map(String::from).collect()
    } else {
        names.to_vec()
    };
    names.iter().map(|n| run.scorer(n.trim())).collect()
}

#[derive(Serialize)]
struct JustifyRecord<'a> {
    method: &'a str,
    #[serde(flatten)]
    set: JustificationSet,
    seconds: f64,
}

#[derive(Serialize)]
struct ScoredAttribute {
    id: String,
    type_label: String,
    score: f64,
}

#[derive(Serialize)]
struct BaselineRecord<'a> {
    method: &'a str,
    query: Query,
    /// Top `budget` attributes by score.
    selected: Vec<String>,
    /// Every attribute of the recommended product, best first.
    scores: Vec<ScoredAttribute>,
    seconds: f64,
}

enum Justified<'a> {
    Set(JustifyRecord<'a>),
    Baseline(BaselineRecord<'a>),
}

fn justify(
    run: &RunArgs,
    graph: &GraphArgs,
    recommended: Option<&str>,
    feedback: &[String],
    queries: Option<&Path>,
    out: &mut Records,
) -> CliResult {
    let scorer = run.scorer(&run.method)?;
    let g = load(graph)?;
    let pairs = match (recommended, queries) {
        (Some(r), _) => vec![(r.to_string(), feedback.to_vec())],
        (None, Some(path)) => parse_users(&read_text(path)?)?,
        (None, None) => return Err(CliError::Usage("give --recommended/--feedback or --queries".into())),
    };
    let queries: Vec<Query> = pairs
        .into_iter()
        .map(|(r, q)| {
            Query::new(r, q)
                .with_budget(run.budget())
                .with_rho(run.rho)
                .with_lambdas(run.lambda1, run.lambda2)
        })
        .collect();
    let name = scorer.name();
    let ppr = run.ppr();
    let baseline = run.baseline();
    let results: Vec<CliResult<Justified>> = queries
        .par_iter()
        .map(|q| {
            let t = Instant::now();
            if name == "jrecs" {
                let set = greedy_select(&g, q, &ppr)?;
                Ok(Justified::Set(JustifyRecord {
                    method: name,
                    set,
                    seconds: t.elapsed().as_secs_f64(),
                }))
            } else {
                q.validate(&g)?;
                let scores = scorer.score(&g, &q.recommended, &q.feedback, &baseline)?;
                let mut ranked: Vec<ScoredAttribute> = scores
                    .into_iter()
                    .map(|(id, score)| {
                        let type_label = g.kind(g.resolve(&id)?).type_label().unwrap_or_default().to_string();
                        Ok(ScoredAttribute { id, type_label, score })
                    })
                    .collect::<recjust::Result<_>>()?;
                ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
                Ok(Justified::Baseline(BaselineRecord {
                    method: name,
                    query: q.clone(),
                    selected: ranked.iter().take(q.budget).map(|s| s.id.clone()).collect(),
                    scores: ranked,
                    seconds: t.elapsed().as_secs_f64(),
                }))
            }
        })
        .collect();
    let mut text = String::new();
    for res in results {
        match res? {
            Justified::Set(rec) => {
                render_set(&mut text, &rec.set, rec.seconds);
                out.emit(&rec)?;
            }
            Justified::Baseline(rec) => {
                render_baseline(&mut text, &rec);
                out.emit(&rec)?;
            }
        }
    }
    table(&text);
    Ok(())
}

fn render_set(text: &mut String, set: &JustificationSet, seconds: f64) {
    let q = &set.query;
    let _ = writeln!(text, "{} <- {} ({:.3}s)", q.recommended, q.feedback.join(", "), seconds);
    let width = set.selected.iter().map(|s| s.id.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(text, "  {:<width$}  {:<12}  {:>10}  {:>10}", "attribute", "type", "relevance", "gain");
    for s in &set.selected {
        let _ = writeln!(
            text,
            "  {:<width$}  {:<12}  {:>10.6}  {:>10.6}",
            s.id, s.type_label, s.relevance, s.marginal_gain
        );
    }
    if let Some(b) = set.final_breakdown() {
        let _ = writeln!(
            text,
            "  J = {:.6} (relevance {:.4}, type {:.4}, topic {:.4})",
            b.total, b.relevance_norm, b.type_norm, b.topic_norm
        );
    }
    if !set.converged {
        let _ = writeln!(text, "  warning: a PPR solve stopped at max_iterations");
    }
}

fn render_baseline(text: &mut String, rec: &BaselineRecord) {
    let q = &rec.query;
    let _ = writeln!(text, "{} <- {} [{}] ({:.3}s)", q.recommended, q.feedback.join(", "), rec.method, rec.seconds);
    let width = rec.scores.iter().map(|s| s.id.len()).max().unwrap_or(0).max(9);
    for s in rec.scores.iter().take(q.budget) {
        let _ = writeln!(text, "  {:<width$}  {:<12}  {:>12.6e}", s.id, s.type_label, s.score);
    }
}

#[derive(Serialize)]
struct AxiomRecord<'a> {
    method: &'a str,
    axioms: BTreeMap<&'static str, &'static str>,
    passed: Vec<usize>,
}

fn axioms(
    run: &RunArgs,
    methods: &[String],
    fixtures: Option<&Path>,
    export: Option<&Path>,
    out: &mut Records,
) -> CliResult {
    if let Some(dir) = export {
        write_fixtures(&axiom_suite(), dir)
            .map_err(|e| CliError::Data(format!("cannot write fixtures to {}: {e}", dir.display())))?;
        table(&format!("wrote fixtures to {}\n", dir.display()));
        return Ok(());
    }
    let scorers = resolve_methods(run, methods)?;
    let cases = match fixtures {
        Some(dir) => load_suite_from_dir(dir).map_err(|e| CliError::Data(e.to_string()))?,
        None => axiom_suite(),
    };
    let refs: Vec<&dyn AttributeScorer> = scorers.iter().map(|s| s.as_ref()).collect();
    let grid = axiom_table(&refs, &cases, &run.baseline());
    for row in &grid.rows {
        let axioms = row
            .cells
            .iter()
            .map(|c| {
                let state = match (&c.error, c.passed) {
                    (Some(_), _) => "error",
                    (None, true) => "pass",
                    (None, false) => "fail",
                };
                (c.axiom.slug(), state)
            })
            .collect();
        out.emit(&AxiomRecord {
            method: &row.scorer,
            axioms,
            passed: row.passed_numbers(),
        })?;
        for c in row.cells.iter().filter(|c| c.error.is_some()) {
            log::warn!("{} on {}: {}", row.scorer, c.axiom.slug(), c.error.as_deref().unwrap_or_default());
        }
    }
    table(&grid.render());
    if let Some(row) = grid.row("jrecs") {
        if row.cells.iter().any(|c| !c.passed) {
            return Err(CliError::Internal(format!(
                "jrecs passes only axioms {:?}; it is expected to pass all of them",
                row.passed_numbers()
            )));
        }
    }
    Ok(())
}

/// One case per line: `user<TAB>r<TAB>q1,q2<TAB>target<TAB>candidate_type`.
fn parse_cases(text: &str) -> CliResult<Vec<RetrievalCase>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').map(str::trim).collect();
            let [user, recommended, feedback, target, candidate_type] = f[..] else {
                return Err(CliError::Data(format!("case line {}: expected 5 tab-separated fields", i + 1)));
            };
            Ok(RetrievalCase {
                user: user.into(),
                recommended: recommended.into(),
                feedback: feedback.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
                target: target.into(),
                candidate_type: candidate_type.into(),
            })
        })
        .collect()
}

fn eval_mrr(
    run: &RunArgs,
    graph: &OptionalGraphArgs,
    cases: Option<&Path>,
    methods: &[String],
    users: usize,
    out: &mut Records,
) -> CliResult {
    let scorers = resolve_methods(run, methods)?;
    let (g, cases) = match (load_optional(graph)?, cases) {
        (Some(g), Some(path)) => (g, parse_cases(&read_text(path)?)?),
        (Some(_), None) => return Err(CliError::Usage("--nodes/--edges need --cases".into())),
        (None, _) => {
            let pb = planted_benchmark(&PlantedConfig {
                users,
                seed: run.seed,
                ..PlantedConfig::default()
            })?;
            (pb.graph, pb.cases)
        }
    };
    let cfg = run.baseline();
    let reports = scorers
        .par_iter()
        .map(|s| preference_retrieval(&g, &cases, s.as_ref(), &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = format!("{} cases\n{:<12}  {:>8}\n", cases.len(), "method", "MRR");
    for rep in &reports {
        out.emit(rep)?;
        let _ = writeln!(text, "{:<12}  {:>8.4}", rep.method, rep.mrr);
    }
    table(&text);
    Ok(())
}

fn sweep(
    run: &RunArgs,
    graph: &OptionalGraphArgs,
    users: Option<&Path>,
    lambdas: &[f64],
    out: &mut Records,
) -> CliResult {
    let (g, users) = match (load_optional(graph)?, users) {
        (Some(g), Some(path)) => (g, parse_users(&read_text(path)?)?),
        (Some(_), None) => return Err(CliError::Usage("--nodes/--edges need --users".into())),
        (None, _) => sweep_fixture(),
    };
    let points = diversity_sweep(&g, &users, lambdas, run.budget(), run.rho, &run.ppr())?;
    let mut text = format!("{} users\nlambda1\tmean_relevance\tmean_type_diversity\n", users.len());
    for p in &points {
        out.emit(p)?;
        let _ = writeln!(text, "{}\t{:.6}\t{:.6}", p.lambda1, p.mean_relevance, p.mean_type_diversity);
    }
    table(&text);
    Ok(())
}

#[derive(Serialize)]
struct RatioRecord {
    ratios: Vec<f64>,
}

fn bench(run: &RunArgs, edge_counts: &[usize], q_size: usize, repeats: usize, out: &mut Records) -> CliResult {
    if let Some(&big) = edge_counts.iter().find(|&&e| e > BENCH_MAX_EDGES) {
        return Err(CliError::Usage(format!(
            "{big} edges exceeds the in-memory limit of {BENCH_MAX_EDGES}; \
             drop that scale or run the series in smaller steps"
        )));
    }
    if edge_counts.is_empty() {
        return Err(CliError::Usage("--edge-counts is empty".into()));
    }
    let points = bench_series(edge_counts, q_size, run.budget(), repeats, run.seed, &run.ppr())?;
    let ratios = bench_ratios(&points);
    let mut text = format!("{:>10}  {:>10}  {:>10}\n", "edges", "nodes", "seconds");
    for p in &points {
        out.emit(p)?;
        let _ = writeln!(text, "{:>10}  {:>10}  {:>10.4}", p.edges, p.nodes, p.seconds);
    }
    out.emit(&RatioRecord { ratios: ratios.clone() })?;
    text.push_str("ratios:");
    for r in &ratios {
        let _ = write!(text, " {r:.2}");
    }
    text.push('\n');
    table(&text);
    Ok(())
}

#[derive(Serialize)]
struct GraphSummary {
    nodes: usize,
    edges: usize,
    products: usize,
    attributes: usize,
    entities: usize,
    attribute_types: BTreeMap<String, usize>,
    products_without_attributes: usize,
    components: usize,
}

fn validate_graph(graph: &GraphArgs, out: &mut Records) -> CliResult {
    let g = load(graph)?;
    let mut s = GraphSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        products: 0,
        attributes: 0,
        entities: 0,
        attribute_types: BTreeMap::new(),
        products_without_attributes: 0,
        components: components(&g),
    };
    for (i, n) in g.nodes().iter().enumerate() {
        if n.kind.is_product() {
            s.products += 1;
            if g.attribute_indices_of(i).is_empty() {
                s.products_without_attributes += 1;
            }
        } else if let Some(t) = n.kind.type_label() {
            s.attributes += 1;
            *s.attribute_types.entry(t.to_string()).or_default() += 1;
        } else {
            s.entities += 1;
        }
    }
    out.emit(&s)?;
    let mut text = format!(
        "{} nodes ({} products, {} attributes, {} entities), {} edges, {} connected components\n",
        s.nodes, s.products, s.attributes, s.entities, s.edges, s.components
    );
    for (t, n) in &s.attribute_types {
        let _ = writeln!(text, "  {t}: {n}");
    }
    if s.products_without_attributes > 0 {
        let _ = writeln!(text, "  {} products have no attributes and cannot be justified", s.products_without_attributes);
    }
    table(&text);
    Ok(())
}

fn components(g: &ProductGraph) -> usize {
    let mut seen = vec![false; g.node_count()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..g.node_count() {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for (u, _) in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    count
}
