use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use recjust::baselines::{BaselineConfig, DEFAULT_EXPLOD_WEIGHT};
use recjust::query::{DEFAULT_BUDGET, DEFAULT_RHO};
use recjust::scorer::{builtin_names, scorer_with_params, AttributeScorer};
use recjust::{Error, PprConfig};
use serde::Serialize;

/// Post-hoc justifications for recommendations over a product graph.
#[derive(Debug, Parser)]
#[command(name = "recjust", version)]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    /// Scoring method for `justify`.
    #[arg(long, global = true, default_value = "jrecs")]
    pub method: String,

    /// Number of attributes to select.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET, value_parser = positive)]
    pub budget: usize,

    /// Restart mass on the recommended product.
    #[arg(long, global = true, default_value_t = DEFAULT_RHO)]
    pub rho: f64,

    /// Weight of type diversity.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub lambda1: f64,

    /// Weight of topic diversity.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub lambda2: f64,

    #[arg(long, global = true, default_value_t = PprConfig::default().damping)]
    pub damping: f64,

    #[arg(long, global = true, default_value_t = PprConfig::default().tolerance)]
    pub tolerance: f64,

    #[arg(long, global = true, default_value_t = PprConfig::default().max_iterations)]
    pub max_iterations: usize,

    /// ExpLOD weight on links to the feedback products.
    #[arg(long, global = true, default_value_t = DEFAULT_EXPLOD_WEIGHT)]
    pub alpha: f64,

    /// ExpLOD weight on links to the recommended product.
    #[arg(long, global = true, default_value_t = DEFAULT_EXPLOD_WEIGHT)]
    pub beta: f64,

    #[arg(long, global = true, default_value_t = 17)]
    pub seed: u64,

    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Node file: `id kind [type_label [topics]]`, tab separated.
    #[arg(long)]
    pub nodes: PathBuf,
    /// Edge file: `src dst [weight]`, tab separated.
    #[arg(long)]
    pub edges: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptionalGraphArgs {
    #[arg(long, requires = "edges")]
    pub nodes: Option<PathBuf>,
    #[arg(long, requires = "nodes")]
    pub edges: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Select a justification set for one or more queries.
    Justify {
        #[command(flatten)]
        graph: GraphArgs,
        /// Recommended product.
        #[arg(long, requires = "feedback", conflicts_with = "queries")]
        recommended: Option<String>,
        /// Comma-separated feedback products.
        #[arg(long, value_delimiter = ',', requires = "recommended")]
        feedback: Vec<String>,
        /// Query file with lines `r<TAB>q1,q2,...`.
        #[arg(long, required_unless_present = "recommended")]
        queries: Option<PathBuf>,
    },
    /// Grade scorers on the axiom fixtures.
    Axioms {
        /// Comma-separated method names; all built-ins by default.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Load fixtures from this directory instead of the built-in copies.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Write the built-in fixtures to this directory and exit.
        #[arg(long, conflicts_with = "fixtures")]
        export_fixtures: Option<PathBuf>,
    },
    /// Mean reciprocal rank on a preference-retrieval benchmark.
    EvalMrr {
        #[command(flatten)]
        graph: OptionalGraphArgs,
        /// Case file with lines `user<TAB>r<TAB>q1,q2<TAB>target<TAB>candidate_type`;
        /// without one a planted benchmark is generated from `--seed`.
        #[arg(long, requires = "nodes")]
        cases: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "jrecs,pagerank,explod")]
        methods: Vec<String>,
        /// Users in the generated benchmark.
        #[arg(long, default_value_t = 80)]
        users: usize,
    },
    /// Relevance and type diversity along a grid of `lambda1` values.
    Sweep {
        #[command(flatten)]
        graph: OptionalGraphArgs,
        /// User file with lines `r<TAB>q1,q2,...`; the packaged fixture is used without a graph.
        #[arg(long, requires = "nodes")]
        users: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6")]
        lambdas: Vec<f64>,
    },
    /// Time `justify` on a seeded synthetic series.
    Bench {
        /// Comma-separated target edge counts.
        #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
        edge_counts: Vec<usize>,
        /// Feedback set size.
        #[arg(long, default_value_t = 10)]
        q_size: usize,
        /// Timing rounds; each round runs every scale at least once.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Load a graph and report its shape.
    ValidateGraph {
        #[command(flatten)]
        graph: GraphArgs,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => CliError::Usage(msg),
            Error::BudgetExceeded { .. } | Error::AlreadySelected(_) => CliError::Internal(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl RunArgs {
    pub fn ppr(&self) -> PprConfig {
        PprConfig {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        }
    }

    pub fn baseline(&self) -> BaselineConfig {
        BaselineConfig::from(self.ppr())
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.ppr().validate()?;
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(CliError::Usage(format!("--rho must lie in [0, 1], got {}", self.rho)));
        }
        for (flag, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("--{flag} must be a finite non-negative number, got {v}")));
            }
        }
        Ok(())
    }

    /// Resolves a method name, applying `--rho`, `--alpha` and `--beta`.
    pub fn scorer(&self, name: &str) -> Result<Box<dyn AttributeScorer>, CliError> {
        scorer_with_params(name, self.rho, self.alpha, self.beta).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown method `{name}`; expected one of {}",
                builtin_names().join(", ")
            ))
        })
    }
}

/// Everything that determines a run, echoed by `--print-config`.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a> {
    #[serde(flatten)]
    pub run: &'a RunArgs,
    pub command: Option<&'a Command>,
}
