//! Small fixture graphs with expected strict orderings of attribute scores,
//! and a harness that grades any [`AttributeScorer`] against them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baselines::BaselineConfig;
use crate::graph::{load_graph, ProductGraph};
use crate::scorer::{AttributeScorer, AttributeScores};

/// Strict inequalities must clear this margin to count as satisfied.
pub const MARGIN: f64 = 1e-12;

pub const NODE_HEADER: &str = "# id\tkind\ttype_label\ttopics\n";
pub const EDGE_HEADER: &str = "# src\tdst\tweight\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AxiomName {
    Proximity,
    FeedbackRelevance,
    Popularity,
    EdgeWeightAwareness,
    ProductDataScarcity,
    CommunityAwareness,
    LongPathConnectivity,
}

impl AxiomName {
    pub const ALL: [AxiomName; 7] = [
        AxiomName::Proximity,
        AxiomName::FeedbackRelevance,
        AxiomName::Popularity,
        AxiomName::EdgeWeightAwareness,
        AxiomName::ProductDataScarcity,
        AxiomName::CommunityAwareness,
        AxiomName::LongPathConnectivity,
    ];

    /// 1-based position in the suite.
    pub fn number(self) -> usize {
        AxiomName::ALL.iter().position(|&a| a == self).unwrap() + 1
    }

    /// Directory name under `fixtures/axioms/`.
    pub fn slug(self) -> &'static str {
        match self {
            AxiomName::Proximity => "1_proximity",
            AxiomName::FeedbackRelevance => "2_feedback_relevance",
            AxiomName::Popularity => "3_popularity",
            AxiomName::EdgeWeightAwareness => "4_edge_weight_awareness",
            AxiomName::ProductDataScarcity => "5_product_data_scarcity",
            AxiomName::CommunityAwareness => "6_community_awareness",
            AxiomName::LongPathConnectivity => "7_long_path_connectivity",
        }
    }
}

impl std::fmt::Display for AxiomName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// An attribute in one of a case's graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttrRef {
    pub graph: usize,
    pub id: String,
}

/// `score(higher) > score(lower)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub higher: AttrRef,
    pub lower: AttrRef,
}

#[derive(Debug, Clone)]
pub struct AxiomCase {
    pub name: AxiomName,
    pub graphs: Vec<ProductGraph>,
    pub recommended: String,
    pub feedback: Vec<String>,
    pub expectations: Vec<Expectation>,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fixture {fixture}: {source}")]
    Parse {
        fixture: String,
        #[source]
        source: crate::Error,
    },
    #[error("fixture {fixture}: {message}")]
    Reference { fixture: String, message: String },
}

struct AxiomDef {
    name: AxiomName,
    feedback: &'static [&'static str],
    graphs: &'static [(&'static str, &'static str)],
    expectations: &'static [((usize, &'static str), (usize, &'static str))],
}

macro_rules! fixture {
    ($slug:literal, $g:literal) => {
        (
            include_str!(concat!("../fixtures/axioms/", $slug, "/", $g, "/nodes.tsv")),
            include_str!(concat!("../fixtures/axioms/", $slug, "/", $g, "/edges.tsv")),
        )
    };
}

const AXIOM_DEFS: [AxiomDef; 7] = [
    AxiomDef {
        name: AxiomName::Proximity,
        feedback: &["q"],
        graphs: &[fixture!("1_proximity", "g0")],
        expectations: &[((0, "a1"), (0, "a2")), ((0, "a1"), (0, "a3"))],
    },
    AxiomDef {
        name: AxiomName::FeedbackRelevance,
        feedback: &["q1", "q2"],
        graphs: &[fixture!("2_feedback_relevance", "g0")],
        expectations: &[((0, "a1"), (0, "a2"))],
    },
    AxiomDef {
        name: AxiomName::Popularity,
        feedback: &["q"],
        graphs: &[fixture!("3_popularity", "g0")],
        expectations: &[((0, "a1"), (0, "a2"))],
    },
    AxiomDef {
        name: AxiomName::EdgeWeightAwareness,
        feedback: &["q"],
        graphs: &[fixture!("4_edge_weight_awareness", "g0")],
        expectations: &[((0, "a1"), (0, "a2"))],
    },
    AxiomDef {
        name: AxiomName::ProductDataScarcity,
        feedback: &["q"],
        graphs: &[
            fixture!("5_product_data_scarcity", "g0"),
            fixture!("5_product_data_scarcity", "g1"),
        ],
        expectations: &[
            ((0, "a1"), (1, "a2")),
            ((0, "a1"), (1, "a3")),
            ((0, "a1"), (1, "a4")),
        ],
    },
    AxiomDef {
        name: AxiomName::CommunityAwareness,
        feedback: &["q1", "q2"],
        graphs: &[fixture!("6_community_awareness", "g0")],
        expectations: &[((0, "a1"), (0, "a2"))],
    },
    AxiomDef {
        name: AxiomName::LongPathConnectivity,
        feedback: &["q"],
        graphs: &[fixture!("7_long_path_connectivity", "g0")],
        expectations: &[((0, "a1"), (0, "a2"))],
    },
];

fn graph_label(name: AxiomName, g: usize) -> String {
    format!("{}/g{}", name.slug(), g)
}

fn build_case(def: &AxiomDef, texts: &[(String, String)]) -> Result<AxiomCase, FixtureError> {
    let mut graphs = Vec::with_capacity(texts.len());
    for (i, (nodes, edges)) in texts.iter().enumerate() {
        let g = load_graph(nodes, edges).map_err(|source| FixtureError::Parse {
            fixture: graph_label(def.name, i),
            source,
        })?;
        graphs.push(g);
    }
    let case = AxiomCase {
        name: def.name,
        graphs,
        recommended: "r".to_string(),
        feedback: def.feedback.iter().map(|s| s.to_string()).collect(),
        expectations: def
            .expectations
            .iter()
            .map(|&((gh, h), (gl, l))| Expectation {
                higher: AttrRef { graph: gh, id: h.into() },
                lower: AttrRef { graph: gl, id: l.into() },
            })
            .collect(),
    };
    case.validate()?;
    Ok(case)
}

impl AxiomCase {
    /// Checks that r, Q and every referenced attribute resolve.
    pub fn validate(&self) -> Result<(), FixtureError> {
        let fail = |g: usize, message: String| FixtureError::Reference {
            fixture: graph_label(self.name, g),
            message,
        };
        if self.expectations.is_empty() {
            return Err(fail(0, "no expectations".into()));
        }
        for (i, g) in self.graphs.iter().enumerate() {
            g.resolve_product(&self.recommended).map_err(|e| fail(i, e.to_string()))?;
            for q in &self.feedback {
                g.resolve_product(q).map_err(|e| fail(i, e.to_string()))?;
            }
        }
        for e in &self.expectations {
            for a in [&e.higher, &e.lower] {
                let g = self
                    .graphs
                    .get(a.graph)
                    .ok_or_else(|| fail(a.graph, "graph index out of range".into()))?;
                let attrs = g.attributes_of(&self.recommended).map_err(|e| fail(a.graph, e.to_string()))?;
                if !attrs.contains(&a.id.as_str()) {
                    return Err(fail(a.graph, format!("`{}` is not an attribute of `{}`", a.id, self.recommended)));
                }
            }
        }
        Ok(())
    }
}

/// The seven packaged cases, in order.
pub fn axiom_suite() -> Vec<AxiomCase> {
    AXIOM_DEFS
        .iter()
        .map(|def| {
            let texts: Vec<(String, String)> =
                def.graphs.iter().map(|(n, e)| (n.to_string(), e.to_string())).collect();
            build_case(def, &texts).expect("packaged fixtures are valid")
        })
        .collect()
}

/// Loads the suite from a `fixtures/axioms`-shaped directory instead of the
/// embedded copies. Queries and expectations stay the built-in ones.
pub fn load_suite_from_dir(dir: &Path) -> Result<Vec<AxiomCase>, FixtureError> {
    let read = |p: PathBuf| std::fs::read_to_string(&p).map_err(|source| FixtureError::Io { path: p, source });
    AXIOM_DEFS
        .iter()
        .map(|def| {
            let mut texts = Vec::new();
            for i in 0..def.graphs.len() {
                let base = dir.join(def.name.slug()).join(format!("g{i}"));
                texts.push((read(base.join("nodes.tsv"))?, read(base.join("edges.tsv"))?));
            }
            build_case(def, &texts)
        })
        .collect()
}

/// Writes every case graph as `<dir>/<slug>/g<i>/{nodes,edges}.tsv`.
pub fn write_fixtures(cases: &[AxiomCase], dir: &Path) -> std::io::Result<()> {
    for case in cases {
        for (i, g) in case.graphs.iter().enumerate() {
            let base = dir.join(case.name.slug()).join(format!("g{i}"));
            std::fs::create_dir_all(&base)?;
            std::fs::write(base.join("nodes.tsv"), format!("{NODE_HEADER}{}", g.to_node_text()))?;
            std::fs::write(base.join("edges.tsv"), format!("{EDGE_HEADER}{}", g.to_edge_text()))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationOutcome {
    pub expectation: Expectation,
    pub higher_score: f64,
    pub lower_score: f64,
    /// `higher_score - lower_score`; NaN if scoring failed.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomOutcome {
    pub axiom: AxiomName,
    pub scorer: String,
    pub passed: bool,
    pub outcomes: Vec<ExpectationOutcome>,
    /// Set when the scorer failed on a fixture graph.
    pub error: Option<String>,
}

pub fn check_axiom(scorer: &dyn AttributeScorer, case: &AxiomCase, cfg: &BaselineConfig) -> AxiomOutcome {
    let scored: Result<Vec<AttributeScores>, String> = case
        .graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            scorer
                .score(g, &case.recommended, &case.feedback, cfg)
                .map_err(|e| format!("{}: {e}", graph_label(case.name, i)))
        })
        .collect();
    let mut out = AxiomOutcome {
        axiom: case.name,
        scorer: scorer.name().to_string(),
        passed: false,
        outcomes: Vec::new(),
        error: None,
    };
    let scores = match scored {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(e);
            return out;
        }
    };
    let lookup = |a: &AttrRef| scores.get(a.graph).and_then(|m| m.get(&a.id)).copied();
    for e in &case.expectations {
        let (h, l) = match (lookup(&e.higher), lookup(&e.lower)) {
            (Some(h), Some(l)) => (h, l),
            _ => {
                out.error = Some(format!("{}: scorer omitted an expected attribute", case.name.slug()));
                (f64::NAN, f64::NAN)
            }
        };
        let margin = h - l;
        out.outcomes.push(ExpectationOutcome {
            expectation: e.clone(),
            higher_score: h,
            lower_score: l,
            margin,
            passed: margin > MARGIN,
        });
    }
    out.passed = out.error.is_none() && out.outcomes.iter().all(|o| o.passed);
    out
}

/// Scorer-by-axiom grid. Every cell is evaluated even if others fail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomTable {
    pub axioms: Vec<AxiomName>,
    pub rows: Vec<AxiomRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomRow {
    pub scorer: String,
    pub cells: Vec<AxiomOutcome>,
}

impl AxiomRow {
    pub fn passes(&self) -> Vec<bool> {
        self.cells.iter().map(|c| c.passed).collect()
    }

    /// 1-based numbers of the passed axioms.
    pub fn passed_numbers(&self) -> Vec<usize> {
        self.cells.iter().filter(|c| c.passed).map(|c| c.axiom.number()).collect()
    }
}

pub fn axiom_table(scorers: &[&dyn AttributeScorer], cases: &[AxiomCase], cfg: &BaselineConfig) -> AxiomTable {
    let rows = scorers
        .par_iter()
        .map(|s| AxiomRow {
            scorer: s.name().to_string(),
            cells: cases.par_iter().map(|c| check_axiom(*s, c, cfg)).collect(),
        })
        .collect();
    AxiomTable {
        axioms: cases.iter().map(|c| c.name).collect(),
        rows,
    }
}

impl AxiomTable {
    pub fn row(&self, scorer: &str) -> Option<&AxiomRow> {
        self.rows.iter().find(|r| r.scorer == scorer)
    }

    /// Aligned text; a check mark for a pass, `-` for a failure, `!` for a
    /// scorer error.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.scorer.len()).max().unwrap_or(0).max("method".len());
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "method");
        for a in &self.axioms {
            let _ = write!(out, "  {:>2}", a.number());
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<width$}", row.scorer);
            for c in &row.cells {
                let mark = match (&c.error, c.passed) {
                    (Some(_), _) => "!",
                    (None, true) => "✓",
                    (None, false) => "-",
                };
                let _ = write!(out, "  {mark:>2}");
            }
            out.push('\n');
        }
        out
    }
}
