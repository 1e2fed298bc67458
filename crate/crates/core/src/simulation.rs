//! Trial generation and scoring.
//!
//! * [`logic_sample`] draws full instantiations from the joint by forward
//!   sampling in topological order.
//! * [`estimate_distribution_over`] runs logic sampling until the Dirichlet
//!   stopping rule certifies the category frequencies of a node set.
//! * [`conditioned_trial`] and [`estimate_conditional_fraction`] generate
//!   trials consistent with a condition and score the fraction that also
//!   agree with a target.
//!
//! Stopping-rule checkpoints are geometric with ratio 5/4: the rule is
//! evaluated after `K` trials, then at `N + ⌈N/4⌉`, and always uses the
//! posterior exactly as of that count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependence::{dependence_value, phi_min_lower_bound};
use crate::dirichlet::{worst_case_sample_bound, DirichletPosterior, PriorChoice};
use crate::network::{instantiation_index, Assignment, BeliefNetwork};
use crate::oracle::MAX_DISTRIBUTION_NODES;
use crate::rng::RandomSource;

pub const DEFAULT_REJECTION_ATTEMPTS: u64 = 10_000_000;
pub const DEFAULT_FRACTION_TRIALS: u64 = 100_000_000;
const MAX_DEFAULT_BURN_IN: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("sample budget of {limit} trials exhausted before the stopping rule was met")]
    SampleBudgetExceeded { limit: u64 },
    #[error("no consistent trial after {attempts} rejection attempts")]
    RejectionBudgetExceeded { attempts: u64 },
    #[error("target and condition bind the same node")]
    OverlappingSets,
    #[error("conditioning set of {0} nodes exceeds the limit of {MAX_DISTRIBUTION_NODES}")]
    TooManyNodes(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How conditioned trials are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum TrialGeneratorKind {
    /// Forward-sample and discard trials that disagree with the condition.
    /// Exact.
    #[default]
    Rejection,
    /// Single-site Gibbs sweeps from a forward-initialized state. Each trial
    /// is the state after `burn_in_sweeps` sweeps; approximate.
    Gibbs { burn_in_sweeps: u64 },
}

impl TrialGeneratorKind {
    /// Gibbs with `⌈min(D⁴, 10⁶)⌉` sweeps, `D` taken under the condition.
    pub fn gibbs_for(net: &BeliefNetwork, condition: &Assignment) -> Self {
        let d = dependence_value(net, condition).dependence_value;
        let sweeps = d.powi(4).min(MAX_DEFAULT_BURN_IN).ceil().max(1.0) as u64;
        TrialGeneratorKind::Gibbs {
            burn_in_sweeps: sweeps,
        }
    }
}

/// Hard caps that turn runaway sampling into errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBudget {
    /// Forward samples tried per rejection-sampled trial.
    pub rejection_attempts: u64,
    /// Trials per conditional-fraction estimate.
    pub fraction_trials: u64,
    /// Trials for the weight distribution; `None` means
    /// `10 × worst_case_sample_bound` at the `φ_M` lower bound.
    pub distribution_trials: Option<u64>,
}

impl Default for SampleBudget {
    fn default() -> Self {
        SampleBudget {
            rejection_attempts: DEFAULT_REJECTION_ATTEMPTS,
            fraction_trials: DEFAULT_FRACTION_TRIALS,
            distribution_trials: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub consistent: u64,
    /// Forward samples drawn, rejected ones included.
    pub draws: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionEstimate {
    pub mu: Vec<f64>,
    pub trials: u64,
    pub counts: Vec<u64>,
}

/// Forward-samples every node into `state`.
#[inline]
pub(crate) fn forward_sample_into(net: &BeliefNetwork, rng: &mut RandomSource, state: &mut [bool]) {
    for &i in net.topological_order() {
        let p = net.cpt(i).rows()[net.row_index_with(i, |p| state[p])];
        state[i] = rng.bernoulli(p);
    }
}

/// Sampling plan for exact rejection sampling under a condition.
///
/// A condition node whose parents are all conditioned has a constant CPT
/// factor across accepted trials, so it is set directly. The remaining
/// condition nodes are sampled and checked; their ancestors come first in
/// the plan so that a mismatch ends the attempt as early as possible.
#[derive(Debug, Clone)]
struct RejectionPlan {
    order: Vec<(usize, Step)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Sample,
    Check(bool),
    Clamp(bool),
}

impl RejectionPlan {
    fn new(net: &BeliefNetwork, condition: &[Option<bool>]) -> Self {
        let step = |i: usize| match condition[i] {
            None => Step::Sample,
            Some(v) if net.parents(i).iter().all(|&p| condition[p].is_some()) => Step::Clamp(v),
            Some(v) => Step::Check(v),
        };
        let mut early = vec![false; net.len()];
        let mut stack: Vec<usize> = (0..net.len())
            .filter(|&i| matches!(step(i), Step::Check(_)))
            .collect();
        while let Some(i) = stack.pop() {
            if !early[i] {
                early[i] = true;
                stack.extend_from_slice(net.parents(i));
            }
        }
        let topo = net.topological_order();
        let order = topo
            .iter()
            .filter(|&&i| early[i])
            .chain(topo.iter().filter(|&&i| !early[i]))
            .map(|&i| (i, step(i)))
            .collect();
        RejectionPlan { order }
    }

    /// Draws until a trial agrees with the condition. Returns the number of
    /// attempts.
    fn sample_into(
        &self,
        net: &BeliefNetwork,
        rng: &mut RandomSource,
        state: &mut [bool],
        max_attempts: u64,
    ) -> Result<u64, SimulationError> {
        'attempt: for attempt in 1..=max_attempts {
            for &(i, step) in &self.order {
                match step {
                    Step::Clamp(v) => state[i] = v,
                    Step::Sample => {
                        let p = net.cpt(i).rows()[net.row_index_with(i, |p| state[p])];
                        state[i] = rng.bernoulli(p);
                    }
                    Step::Check(v) => {
                        let p = net.cpt(i).rows()[net.row_index_with(i, |p| state[p])];
                        if rng.bernoulli(p) != v {
                            continue 'attempt;
                        }
                        state[i] = v;
                    }
                }
            }
            return Ok(attempt);
        }
        Err(SimulationError::RejectionBudgetExceeded {
            attempts: max_attempts,
        })
    }
}

/// `Pr[node = 1 | Markov blanket]` under the current state.
fn full_conditional_one(net: &BeliefNetwork, node: usize, state: &mut [bool]) -> f64 {
    let mut weight = [0.0f64; 2];
    for v in [false, true] {
        state[node] = v;
        let mut w = net.factor(node, v, state);
        for &c in net.children(node) {
            w *= net.factor(c, state[c], state);
        }
        weight[v as usize] = w;
    }
    weight[1] / (weight[0] + weight[1])
}

fn gibbs_sample_into(
    net: &BeliefNetwork,
    condition: &[Option<bool>],
    sweeps: u64,
    rng: &mut RandomSource,
    state: &mut [bool],
) {
    let order = net.topological_order();
    for &i in order {
        state[i] = match condition[i] {
            Some(v) => v,
            None => {
                let p = net.cpt(i).rows()[net.row_index_with(i, |p| state[p])];
                rng.bernoulli(p)
            }
        };
    }
    for _ in 0..sweeps {
        for &i in order {
            if condition[i].is_none() {
                let p1 = full_conditional_one(net, i, state);
                state[i] = rng.bernoulli(p1);
            }
        }
    }
}

/// Reusable generator of trials consistent with a fixed condition.
pub struct ConditionedSampler<'a> {
    net: &'a BeliefNetwork,
    condition: Assignment,
    kind: TrialGeneratorKind,
    plan: Option<RejectionPlan>,
    max_attempts: u64,
    state: Vec<bool>,
    draws: u64,
}

impl<'a> ConditionedSampler<'a> {
    pub fn new(
        net: &'a BeliefNetwork,
        condition: &Assignment,
        kind: TrialGeneratorKind,
        max_attempts: u64,
    ) -> Self {
        let plan = (kind == TrialGeneratorKind::Rejection)
            .then(|| RejectionPlan::new(net, condition.raw()));
        ConditionedSampler {
            net,
            condition: condition.clone(),
            kind,
            plan,
            max_attempts,
            state: vec![false; net.len()],
            draws: 0,
        }
    }

    /// Generates the next trial; the returned slice is valid until the next call.
    pub fn next_trial(&mut self, rng: &mut RandomSource) -> Result<&[bool], SimulationError> {
        match self.kind {
            TrialGeneratorKind::Rejection => {
                let plan = self.plan.as_ref().expect("rejection plan");
                let attempts = plan
                    .sample_into(self.net, rng, &mut self.state, self.max_attempts)
                    .inspect_err(|_| self.draws += self.max_attempts)?;
                self.draws += attempts;
            }
            TrialGeneratorKind::Gibbs { burn_in_sweeps } => {
                gibbs_sample_into(
                    self.net,
                    self.condition.raw(),
                    burn_in_sweeps,
                    rng,
                    &mut self.state,
                );
                self.draws += 1;
            }
        }
        Ok(&self.state)
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// One full instantiation drawn from the joint distribution.
pub fn logic_sample(net: &BeliefNetwork, rng: &mut RandomSource) -> Assignment {
    let mut state = vec![false; net.len()];
    forward_sample_into(net, rng, &mut state);
    Assignment::from_full(&state)
}

/// One full instantiation drawn given `condition`.
pub fn conditioned_trial(
    net: &BeliefNetwork,
    condition: &Assignment,
    kind: TrialGeneratorKind,
    rng: &mut RandomSource,
    max_attempts: u64,
) -> Result<Assignment, SimulationError> {
    let mut sampler = ConditionedSampler::new(net, condition, kind, max_attempts);
    sampler.next_trial(rng).map(Assignment::from_full)
}

fn check_tolerances(epsilon: f64, delta: f64) -> Result<(), SimulationError> {
    if !(epsilon > 0.0) {
        return Err(SimulationError::InvalidParameter(format!(
            "epsilon = {epsilon}"
        )));
    }
    if !(delta > 0.0) {
        return Err(SimulationError::InvalidParameter(format!(
            "delta = {delta}"
        )));
    }
    Ok(())
}

/// Trial count of the checkpoint after `n`.
pub fn next_checkpoint(n: u64) -> u64 {
    n.saturating_add(n.div_ceil(4).max(1))
}

/// Runs `draw` one trial at a time, evaluating the stopping rule at each
/// checkpoint, until it certifies or `limit` trials are spent.
fn run_until_certified(
    posterior: &mut DirichletPosterior,
    epsilon: f64,
    delta: f64,
    limit: u64,
    mut draw: impl FnMut() -> Result<usize, SimulationError>,
) -> Result<(), SimulationError> {
    let k = posterior.categories() as u64;
    let mut checkpoint = k;
    loop {
        let target = checkpoint.min(limit);
        while posterior.observations() < target {
            let category = draw()?;
            posterior
                .observe(category)
                .expect("category index within range");
        }
        if posterior.should_stop(epsilon, delta) {
            return Ok(());
        }
        if target >= limit {
            return Err(SimulationError::SampleBudgetExceeded { limit });
        }
        checkpoint = next_checkpoint(checkpoint);
    }
}

/// Logic-samples until the frequencies of the instantiations of `nodes`
/// are certified within relative error `epsilon` with probability
/// `1 − delta`.
pub fn estimate_distribution_over(
    net: &BeliefNetwork,
    nodes: &[usize],
    epsilon: f64,
    delta: f64,
    prior: PriorChoice,
    rng: &mut RandomSource,
    budget: &SampleBudget,
) -> Result<DistributionEstimate, SimulationError> {
    check_tolerances(epsilon, delta)?;
    if nodes.len() > MAX_DISTRIBUTION_NODES {
        return Err(SimulationError::TooManyNodes(nodes.len()));
    }
    if nodes.is_empty() {
        return Ok(DistributionEstimate {
            mu: vec![1.0],
            trials: 0,
            counts: vec![0],
        });
    }
    let limit = match budget.distribution_trials {
        Some(limit) => limit,
        None => {
            let phi = phi_min_lower_bound(net, nodes);
            worst_case_sample_bound(nodes.len(), epsilon, delta, phi)
                .map_err(|e| SimulationError::InvalidParameter(e.to_string()))?
                .saturating_mul(10)
        }
    };
    let mut posterior =
        DirichletPosterior::new(1 << nodes.len(), prior).expect("at least two categories");
    let mut state = vec![false; net.len()];
    run_until_certified(&mut posterior, epsilon, delta, limit, || {
        forward_sample_into(net, rng, &mut state);
        Ok(instantiation_index(nodes, &state))
    })?;
    Ok(DistributionEstimate {
        mu: posterior.mu(),
        trials: posterior.observations(),
        counts: posterior.counts().to_vec(),
    })
}

/// Estimates `Pr[target | condition]` as the fraction of conditioned trials
/// that agree with `target`, stopping by the two-category Dirichlet rule.
#[allow(clippy::too_many_arguments)]
pub fn estimate_conditional_fraction(
    net: &BeliefNetwork,
    target: &Assignment,
    condition: &Assignment,
    epsilon: f64,
    delta: f64,
    kind: TrialGeneratorKind,
    rng: &mut RandomSource,
    budget: &SampleBudget,
) -> Result<RasEstimate, SimulationError> {
    check_tolerances(epsilon, delta)?;
    if !target.is_disjoint(condition) {
        return Err(SimulationError::OverlappingSets);
    }
    if target.is_empty() {
        return Ok(RasEstimate {
            value: 1.0,
            epsilon,
            delta,
            trials: 0,
            consistent: 0,
            draws: 0,
        });
    }
    let mut sampler = ConditionedSampler::new(net, condition, kind, budget.rejection_attempts);
    let mut posterior = DirichletPosterior::new(2, PriorChoice::Unbiased).expect("two categories");
    run_until_certified(
        &mut posterior,
        epsilon,
        delta,
        budget.fraction_trials,
        || {
            let state = sampler.next_trial(rng)?;
            Ok(if target.agrees_with(state) { 0 } else { 1 })
        },
    )?;
    Ok(RasEstimate {
        value: posterior.mu()[0],
        epsilon,
        delta,
        trials: posterior.observations(),
        consistent: posterior.counts()[0],
        draws: sampler.draws(),
    })
}
