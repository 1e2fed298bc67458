//! Dirichlet posterior over `K` instantiation categories and the stopping
//! rule built on it.
//!
//! The posterior after `n⃗` observations under prior pseudocounts `c` is
//! Dirichlet with parameters `α_i = n_i + c`, written here in mean/size form
//! `μ_i = α_i / N`, `N = Σ α_i`. Each marginal `φ_i` is then
//! Beta(`μ_i N`, `N − μ_i N`), which is what the failure bound integrates.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::special::regularized_incomplete_beta;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirichletError {
    #[error("category {category} out of range for {categories} categories")]
    CategoryOutOfRange { category: usize, categories: usize },
    #[error("a Dirichlet posterior needs at least two categories, got {0}")]
    TooFewCategories(usize),
    #[error("posterior has no mass (N = 0)")]
    EmptyPosterior,
    #[error("point is not in the open simplex")]
    InvalidSimplexPoint,
    #[error("density undefined: parameter {0} is below 1")]
    UndefinedDensity(f64),
    #[error("phi_min must lie in (0, 1], got {0}")]
    NonPositivePhiMin(f64),
}

/// Informationless starting points for the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorChoice {
    /// Zero pseudocounts.
    #[default]
    Unbiased,
    /// One pseudocount per category: the uniform density on the simplex.
    Uniform,
}

impl PriorChoice {
    pub fn pseudocount(self) -> u64 {
        match self {
            PriorChoice::Unbiased => 0,
            PriorChoice::Uniform => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPosterior {
    counts: Vec<u64>,
    prior: PriorChoice,
}

impl DirichletPosterior {
    pub fn new(categories: usize, prior: PriorChoice) -> Result<Self, DirichletError> {
        Self::from_counts(vec![0; categories], prior)
    }

    pub fn from_counts(counts: Vec<u64>, prior: PriorChoice) -> Result<Self, DirichletError> {
        if counts.len() < 2 {
            return Err(DirichletError::TooFewCategories(counts.len()));
        }
        Ok(DirichletPosterior { counts, prior })
    }

    pub fn categories(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn prior(&self) -> PriorChoice {
        self.prior
    }

    /// Observed outcomes, excluding pseudocounts.
    pub fn observations(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Dirichlet parameter of category `i`.
    pub fn alpha(&self, i: usize) -> f64 {
        (self.counts[i] + self.prior.pseudocount()) as f64
    }

    /// Effective sample size `N`, pseudocounts included.
    pub fn effective_count(&self) -> f64 {
        (self.observations() + self.prior.pseudocount() * self.counts.len() as u64) as f64
    }

    /// `μ⃗`; all zeros while `N = 0`.
    pub fn mu(&self) -> Vec<f64> {
        let n = self.effective_count();
        (0..self.categories())
            .map(|i| if n > 0.0 { self.alpha(i) / n } else { 0.0 })
            .collect()
    }

    /// Records one outcome in place.
    pub fn observe(&mut self, category: usize) -> Result<(), DirichletError> {
        let categories = self.counts.len();
        let slot = self
            .counts
            .get_mut(category)
            .ok_or(DirichletError::CategoryOutOfRange {
                category,
                categories,
            })?;
        *slot += 1;
        Ok(())
    }

    /// The posterior after one more outcome.
    pub fn updated(mut self, category: usize) -> Result<Self, DirichletError> {
        self.observe(category)?;
        Ok(self)
    }

    /// Posterior mean and variance `μ_i(1 − μ_i)/(N + 1)` of `φ_i`.
    pub fn mean_and_variance(&self, i: usize) -> Result<(f64, f64), DirichletError> {
        if i >= self.categories() {
            return Err(DirichletError::CategoryOutOfRange {
                category: i,
                categories: self.categories(),
            });
        }
        let n = self.effective_count();
        if n < 1.0 {
            return Err(DirichletError::EmptyPosterior);
        }
        let mu = self.alpha(i) / n;
        Ok((mu, mu * (1.0 - mu) / (n + 1.0)))
    }

    /// Log density at `phi`, with factorials generalized through `ln Γ`.
    pub fn log_density(&self, phi: &[f64]) -> Result<f64, DirichletError> {
        if phi.len() != self.categories()
            || phi.iter().any(|&p| !(p > 0.0))
            || (phi.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(DirichletError::InvalidSimplexPoint);
        }
        let n = self.effective_count();
        let mut log = ln_gamma(n);
        for (i, &p) in phi.iter().enumerate() {
            let a = self.alpha(i);
            if a < 1.0 {
                return Err(DirichletError::UndefinedDensity(a));
            }
            log += (a - 1.0) * p.ln() - ln_gamma(a);
        }
        Ok(log)
    }

    /// Union bound on the posterior mass outside the relative-error box
    /// `μ⃗/(1+ε) ≤ φ⃗ ≤ μ⃗(1+ε)`: the sum over categories of both Beta
    /// marginal tails, clamped to `[0, 1]`. Returns 1 while any category
    /// has zero parameter, since no such posterior can certify.
    pub fn failure_probability_bound(&self, epsilon: f64) -> Result<f64, DirichletError> {
        let n = self.effective_count();
        if n < 1.0 {
            return Err(DirichletError::EmptyPosterior);
        }
        if (0..self.categories()).any(|i| self.alpha(i) == 0.0) {
            return Ok(1.0);
        }
        let mut total = 0.0;
        for i in 0..self.categories() {
            let a = self.alpha(i);
            let b = n - a;
            let mu = a / n;
            let lower = mu / (1.0 + epsilon);
            let upper = (mu * (1.0 + epsilon)).min(1.0);
            let below = regularized_incomplete_beta(a, b, lower).expect("valid beta arguments");
            let above =
                1.0 - regularized_incomplete_beta(a, b, upper).expect("valid beta arguments");
            total += below + above;
            if total >= 1.0 {
                return Ok(1.0);
            }
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Stop once every category has been observed and the failure bound is
    /// at most `delta`.
    pub fn should_stop(&self, epsilon: f64, delta: f64) -> bool {
        self.counts.iter().all(|&c| c >= 1)
            && self
                .failure_probability_bound(epsilon)
                .is_ok_and(|bound| bound <= delta)
    }
}

/// `⌈(2^s / (ε² φ_min)) · ln(2/δ)⌉`, the worst-case sample count for a
/// satisfactory estimate over `2^s` categories. Zero when `δ ≥ 2`.
pub fn worst_case_sample_bound(
    s: usize,
    epsilon: f64,
    delta: f64,
    phi_min: f64,
) -> Result<u64, DirichletError> {
    if !(phi_min > 0.0 && phi_min <= 1.0) {
        return Err(DirichletError::NonPositivePhiMin(phi_min));
    }
    let log_term = (2.0 / delta).ln().max(0.0);
    let bound = (s as f64).exp2() / (epsilon * epsilon * phi_min) * log_term;
    Ok(if bound >= u64::MAX as f64 {
        u64::MAX
    } else {
        bound.ceil() as u64
    })
}
