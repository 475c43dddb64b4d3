use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ProductGraph;

pub const DEFAULT_BUDGET: usize = 15;
pub const DEFAULT_RHO: f64 = 0.5;

/// A justification request: recommended product, the user's positively
/// rated products, the selection budget and the objective weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub recommended: String,
    pub feedback: Vec<String>,
    pub budget: usize,
    /// Restart mass placed on the recommended product when scoring attributes.
    pub rho: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Query {
    pub fn new<R, I, S>(recommended: R, feedback: I) -> Self
    where
        R: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Query {
            recommended: recommended.into(),
            feedback: feedback.into_iter().map(Into::into).collect(),
            budget: DEFAULT_BUDGET,
            rho: DEFAULT_RHO,
            lambda1: 0.0,
            lambda2: 0.0,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambdas(mut self, lambda1: f64, lambda2: f64) -> Self {
        self.lambda1 = lambda1;
        self.lambda2 = lambda2;
        self
    }

    /// Checks the parameter ranges and that every referenced node is a
    /// product of `g`. The recommended product may also appear in the
    /// feedback set.
    pub fn validate(&self, g: &ProductGraph) -> Result<()> {
        self.validate_params()?;
        g.resolve_product(&self.recommended)?;
        for q in &self.feedback {
            g.resolve_product(q)?;
        }
        Ok(())
    }

    pub fn validate_params(&self) -> Result<()> {
        if self.feedback.is_empty() {
            return Err(Error::InvalidQuery("feedback set is empty".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidQuery("budget must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidQuery(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        for (name, l) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidQuery(format!(
                    "{name} must be finite and non-negative, got {l}"
                )));
            }
        }
        Ok(())
    }
}
