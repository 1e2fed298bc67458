//! Selective conditioning: choose a conditioning set `S`, split the query
//! into one subproblem per instantiation of `S`, estimate the weights
//! `Pr[S]` by logic sampling and the subproblems by conditioned simulation,
//! and recombine
//!
//! ```text
//! Pr[X | E] = Σ_i Pr[X, E | I_i] Pr[I_i]  /  Σ_i Pr[E | I_i] Pr[I_i]
//! ```
//!
//! Error budget: every stage runs at `ε_stage = (1+ε)^{1/4} − 1`, so each
//! weighted sum is within `(1+ε)^{1/2}` and the ratio within `1+ε`. The
//! weight phase gets `δ/2`; each of the `2·2^|S|` subproblem estimates gets
//! `δ/(4·2^|S|)`.
//!
//! Seeds: the weight phase uses stream 0 of the master seed, subproblem `i`
//! uses streams `2i+1` (numerator) and `2i+2` (denominator), and the direct
//! strategy uses stream 1 (see [`crate::rng::mix_seed`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dependence::{conditioned_dependence, dependence_value, predicted_cost, CostEstimate};
use crate::dirichlet::PriorChoice;
use crate::network::{instantiation, Assignment, BeliefNetwork};
use crate::rng::RandomSource;
use crate::simulation::{
    estimate_conditional_fraction, estimate_distribution_over, RasEstimate, SampleBudget,
    SimulationError, TrialGeneratorKind,
};

/// Default cap on `|S|`.
pub const DEFAULT_MAX_S: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReformulationError {
    #[error("query, evidence and conditioning set must bind disjoint nodes")]
    OverlappingSets,
    #[error("query binds no node")]
    EmptyQuery,
    #[error("value and weight vectors differ in length ({values} vs {weights})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("denominator estimate is zero")]
    ZeroDenominator,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: SimulationError,
    },
    #[error("{stage}: sampling budget exceeded ({source})")]
    BudgetExceeded {
        stage: String,
        source: SimulationError,
        partial: Box<PartialDiagnostics>,
    },
}

impl ReformulationError {
    pub fn is_budget(&self) -> bool {
        matches!(self, ReformulationError::BudgetExceeded { .. })
    }
}

/// What had been computed when a run gave up.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PartialDiagnostics {
    pub selected_s: Vec<usize>,
    pub mu_s: Option<Vec<f64>>,
    pub trials_so_far: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// One conditioned estimate of `Pr[X | E]`, no conditioning set.
    Direct,
    /// Greedy conditioning set, weighted subproblems, Bayes ratio.
    Selective,
    /// Selective when the greedy search picks a nonempty set, else direct.
    #[default]
    Auto,
}

/// Which conditioned-trial generator the subproblems use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorChoice {
    #[default]
    Rejection,
    /// Gibbs sampling; `None` picks `⌈min(D⁴, 10⁶)⌉` sweeps per condition.
    Gibbs { burn_in_sweeps: Option<u64> },
}

impl GeneratorChoice {
    fn kind_for(self, net: &BeliefNetwork, condition: &Assignment) -> TrialGeneratorKind {
        match self {
            GeneratorChoice::Rejection => TrialGeneratorKind::Rejection,
            GeneratorChoice::Gibbs {
                burn_in_sweeps: Some(sweeps),
            } => TrialGeneratorKind::Gibbs {
                burn_in_sweeps: sweeps.max(1),
            },
            GeneratorChoice::Gibbs {
                burn_in_sweeps: None,
            } => TrialGeneratorKind::gibbs_for(net, condition),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub strategy: Strategy,
    /// Power applied to λ in the greedy eligibility and ranking tests.
    pub greedy_exponent: f64,
    pub max_s: usize,
    pub prior: PriorChoice,
    pub generator: GeneratorChoice,
    pub budget: SampleBudget,
    /// Skip the greedy search and condition on these nodes instead.
    pub conditioning_override: Option<Vec<usize>>,
    /// Estimate subproblems on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            strategy: Strategy::Auto,
            greedy_exponent: 1.0,
            max_s: DEFAULT_MAX_S,
            prior: PriorChoice::Unbiased,
            generator: GeneratorChoice::Rejection,
            budget: SampleBudget::default(),
            conditioning_override: None,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyStop {
    NoEligibleCandidate,
    CostTermsComparable,
    SizeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    /// Node whose unbound parents were added.
    pub node: usize,
    pub parents_added: Vec<usize>,
    pub lambda_before: f64,
    /// `λ^r / 2^|u′|` of the accepted candidate.
    pub candidate_ratio: f64,
    /// Both sides of the eligibility test `2^|u′| < λ^r`.
    pub split_factor: f64,
    pub lambda_power: f64,
    pub cost_before: CostEstimate,
    pub cost_after: CostEstimate,
}

impl GreedyStep {
    pub fn eligibility_holds(&self) -> bool {
        self.split_factor < self.lambda_power
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
    pub stop: GreedyStop,
}

/// Greedy conditioning-set search.
///
/// Starting from `S = ∅`, each round considers every node `i` with `λ_i > 1`
/// (under evidence and the current `S`) and its parents `u′` not yet bound.
/// A candidate is eligible when `2^|u′| < λ_i^r`; the eligible candidate
/// with the largest `λ_i^r / 2^|u′|` is added (earliest node wins ties).
/// The search stops when no candidate is eligible, when the weight term of
/// the cost model has caught up with the subproblem term, or when the best
/// candidate would push `|S|` past `max_s`.
pub fn greedy_select(
    net: &BeliefNetwork,
    evidence: &Assignment,
    exponent: f64,
    max_s: usize,
) -> (Vec<usize>, GreedyTrace) {
    greedy_select_protecting(net, evidence, &[], exponent, max_s)
}

/// [`greedy_select`] where candidates whose unbound parents include a
/// `protected` node (the query) are never eligible, so the selected set
/// stays disjoint from them.
pub fn greedy_select_protecting(
    net: &BeliefNetwork,
    evidence: &Assignment,
    protected: &[usize],
    exponent: f64,
    max_s: usize,
) -> (Vec<usize>, GreedyTrace) {
    let mut selected: Vec<usize> = Vec::new();
    let mut steps = Vec::new();
    let stop = loop {
        let cost = predicted_cost(net, evidence, &selected);
        if cost.weight_term >= cost.subproblem_term {
            break GreedyStop::CostTermsComparable;
        }
        let report = conditioned_dependence(net, evidence, &selected);
        let mut best: Option<(usize, Vec<usize>, f64, f64, f64, f64)> = None;
        for entry in &report.per_node {
            if entry.lambda <= 1.0 {
                continue;
            }
            let unbound: Vec<usize> = net
                .parents(entry.node)
                .iter()
                .copied()
                .filter(|p| !evidence.is_bound(*p) && !selected.contains(p))
                .collect();
            if unbound.is_empty() || unbound.iter().any(|p| protected.contains(p)) {
                continue;
            }
            let split = (unbound.len() as f64).exp2();
            let power = entry.lambda.powf(exponent);
            if split >= power {
                continue;
            }
            let ratio = power / split;
            if best.as_ref().is_none_or(|b| ratio > b.2) {
                best = Some((entry.node, unbound, ratio, split, power, entry.lambda));
            }
        }
        let Some((node, mut added, ratio, split, power, lambda)) = best else {
            break GreedyStop::NoEligibleCandidate;
        };
        if selected.len() + added.len() > max_s {
            break GreedyStop::SizeLimit;
        }
        added.sort_unstable();
        selected.extend_from_slice(&added);
        let cost_after = predicted_cost(net, evidence, &selected);
        steps.push(GreedyStep {
            node,
            parents_added: added,
            lambda_before: lambda,
            candidate_ratio: ratio,
            split_factor: split,
            lambda_power: power,
            cost_before: cost,
            cost_after,
        });
    };
    (selected, GreedyTrace { steps, stop })
}

/// One conditioned inference of the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Subproblem {
    pub index: usize,
    pub instantiation: Assignment,
    /// `query ∪ evidence`
    pub numerator_target: Assignment,
    /// `evidence`
    pub denominator_target: Assignment,
}

/// One subproblem per instantiation of `nodes`, in index order (first node
/// as the most significant bit).
pub fn decompose(
    net: &BeliefNetwork,
    query: &Assignment,
    evidence: &Assignment,
    nodes: &[usize],
) -> Result<Vec<Subproblem>, ReformulationError> {
    if !query.is_disjoint(evidence) {
        return Err(ReformulationError::OverlappingSets);
    }
    if nodes
        .iter()
        .any(|&s| query.is_bound(s) || evidence.is_bound(s))
    {
        return Err(ReformulationError::OverlappingSets);
    }
    let numerator_target = query
        .union(evidence)
        .ok_or(ReformulationError::OverlappingSets)?;
    Ok((0..1usize << nodes.len())
        .map(|index| Subproblem {
            index,
            instantiation: instantiation(net.len(), nodes, index),
            numerator_target: numerator_target.clone(),
            denominator_target: evidence.clone(),
        })
        .collect())
}

/// `Σ values[i] · weights[i]`, accumulated in index order.
pub fn combine_weighted(values: &[f64], weights: &[f64]) -> Result<f64, ReformulationError> {
    if values.len() != weights.len() {
        return Err(ReformulationError::LengthMismatch {
            values: values.len(),
            weights: weights.len(),
        });
    }
    Ok(values
        .iter()
        .zip(weights)
        .fold(0.0, |acc, (v, w)| acc + v * w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    /// The raw ratio exceeded 1 and was clamped.
    pub clamped: bool,
}

/// `numerator / denominator` clamped to `[0, 1]`.
pub fn bayes_ratio(numerator: f64, denominator: f64) -> Result<Ratio, ReformulationError> {
    if !(denominator > 0.0) {
        return Err(ReformulationError::ZeroDenominator);
    }
    let raw = numerator / denominator;
    Ok(Ratio {
        value: raw.clamp(0.0, 1.0),
        clamped: !(0.0..=1.0).contains(&raw),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemEstimate {
    pub index: usize,
    pub instantiation: Assignment,
    /// `≈ Pr[query, evidence | I_i]`
    pub numerator: RasEstimate,
    /// `≈ Pr[evidence | I_i]`
    pub denominator: RasEstimate,
}

/// Tolerances given to each stage of a selective run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageBudgets {
    pub epsilon_stage: f64,
    pub delta_weights: f64,
    pub delta_subproblem: f64,
}

impl StageBudgets {
    pub fn split(epsilon: f64, delta: f64, set_size: usize) -> Self {
        StageBudgets {
            epsilon_stage: (1.0 + epsilon).powf(0.25) - 1.0,
            delta_weights: delta / 2.0,
            delta_subproblem: delta / (4.0 * (set_size as f64).exp2()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub estimate: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub strategy_used: Strategy,
    pub selected_s: Vec<usize>,
    pub mu_s: Vec<f64>,
    pub weight_trials: u64,
    pub subproblem_estimates: Vec<SubproblemEstimate>,
    /// The single estimate of the direct strategy.
    pub direct_estimate: Option<RasEstimate>,
    pub numerator: f64,
    pub denominator: f64,
    pub clamped: bool,
    pub stage_budgets: Option<StageBudgets>,
    pub dependence_before: f64,
    pub dependence_after: f64,
    pub cost_before: CostEstimate,
    pub cost_after: CostEstimate,
    pub trace: Option<GreedyTrace>,
    pub trials_total: u64,
    pub draws_total: u64,
    pub seed: u64,
}

fn stage_error(
    stage: String,
    source: SimulationError,
    mut partial: PartialDiagnostics,
) -> ReformulationError {
    // A stage that hit its trial cap consumed exactly that many trials.
    if let SimulationError::SampleBudgetExceeded { limit } = source {
        partial.trials_so_far += limit;
    }
    match source {
        SimulationError::SampleBudgetExceeded { .. }
        | SimulationError::RejectionBudgetExceeded { .. } => ReformulationError::BudgetExceeded {
            stage,
            source,
            partial: Box::new(partial),
        },
        source => ReformulationError::Stage { stage, source },
    }
}

/// Approximates `Pr[query | evidence]` to relative error `epsilon` with
/// failure probability at most `delta`.
pub fn infer(
    net: &BeliefNetwork,
    query: &Assignment,
    evidence: &Assignment,
    epsilon: f64,
    delta: f64,
    config: &InferenceConfig,
    seed: u64,
) -> Result<InferenceResult, ReformulationError> {
    if query.is_empty() {
        return Err(ReformulationError::EmptyQuery);
    }
    if !query.is_disjoint(evidence) {
        return Err(ReformulationError::OverlappingSets);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ReformulationError::InvalidParameter(format!(
            "epsilon = {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ReformulationError::InvalidParameter(format!(
            "delta = {delta}"
        )));
    }
    if !(config.greedy_exponent >= 1.0) {
        return Err(ReformulationError::InvalidParameter(format!(
            "greedy exponent = {}",
            config.greedy_exponent
        )));
    }

    let root = RandomSource::new(seed);
    let dependence_before = dependence_value(net, evidence).dependence_value;
    let cost_before = predicted_cost(net, evidence, &[]);

    let (selected, trace) = match &config.conditioning_override {
        Some(nodes) => (nodes.clone(), None),
        None if config.strategy == Strategy::Direct => (Vec::new(), None),
        None => {
            let (s, t) = greedy_select_protecting(
                net,
                evidence,
                &query.bound_nodes(),
                config.greedy_exponent,
                config.max_s,
            );
            (s, Some(t))
        }
    };
    let strategy_used = match config.strategy {
        Strategy::Auto if selected.is_empty() => Strategy::Direct,
        Strategy::Auto => Strategy::Selective,
        s => s,
    };

    if strategy_used == Strategy::Direct {
        let kind = config.generator.kind_for(net, evidence);
        let mut rng = root.derive(1);
        let est = estimate_conditional_fraction(
            net,
            query,
            evidence,
            epsilon,
            delta,
            kind,
            &mut rng,
            &config.budget,
        )
        .map_err(|e| stage_error("direct estimate".into(), e, PartialDiagnostics::default()))?;
        return Ok(InferenceResult {
            estimate: est.value,
            epsilon,
            delta,
            strategy_used,
            selected_s: Vec::new(),
            mu_s: vec![1.0],
            weight_trials: 0,
            subproblem_estimates: Vec::new(),
            numerator: est.value,
            denominator: 1.0,
            clamped: false,
            stage_budgets: None,
            dependence_before,
            dependence_after: dependence_before,
            cost_before,
            cost_after: cost_before,
            trace,
            trials_total: est.trials,
            draws_total: est.draws,
            seed,
            direct_estimate: Some(est),
        });
    }

    let subproblems = decompose(net, query, evidence, &selected)?;
    let budgets = StageBudgets::split(epsilon, delta, selected.len());
    let dependence_after = conditioned_dependence(net, evidence, &selected).dependence_value;
    let cost_after = predicted_cost(net, evidence, &selected);

    let mut weight_rng = root.derive(0);
    let weights = estimate_distribution_over(
        net,
        &selected,
        budgets.epsilon_stage,
        budgets.delta_weights,
        config.prior,
        &mut weight_rng,
        &config.budget,
    )
    .map_err(|e| {
        stage_error(
            "weight estimation".into(),
            e,
            PartialDiagnostics {
                selected_s: selected.clone(),
                ..Default::default()
            },
        )
    })?;

    let solve = |sub: &Subproblem| -> Result<SubproblemEstimate, (String, SimulationError)> {
        let kind = config.generator.kind_for(net, &sub.instantiation);
        let stream = 2 * sub.index as u64;
        let mut rng = root.derive(stream + 1);
        let numerator = estimate_conditional_fraction(
            net,
            &sub.numerator_target,
            &sub.instantiation,
            budgets.epsilon_stage,
            budgets.delta_subproblem,
            kind,
            &mut rng,
            &config.budget,
        )
        .map_err(|e| (format!("subproblem {} numerator", sub.index), e))?;
        let mut rng = root.derive(stream + 2);
        let denominator = estimate_conditional_fraction(
            net,
            &sub.denominator_target,
            &sub.instantiation,
            budgets.epsilon_stage,
            budgets.delta_subproblem,
            kind,
            &mut rng,
            &config.budget,
        )
        .map_err(|e| (format!("subproblem {} denominator", sub.index), e))?;
        Ok(SubproblemEstimate {
            index: sub.index,
            instantiation: sub.instantiation.clone(),
            numerator,
            denominator,
        })
    };
    let outcomes: Vec<_> = if config.parallel && subproblems.len() > 1 {
        subproblems.par_iter().map(solve).collect()
    } else {
        subproblems.iter().map(solve).collect()
    };

    let mut estimates = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        match outcome {
            Ok(est) => estimates.push(est),
            Err((stage, source)) => {
                let trials_so_far = weights.trials
                    + estimates
                        .iter()
                        .map(|e: &SubproblemEstimate| e.numerator.trials + e.denominator.trials)
                        .sum::<u64>();
                return Err(stage_error(
                    stage,
                    source,
                    PartialDiagnostics {
                        selected_s: selected.clone(),
                        mu_s: Some(weights.mu.clone()),
                        trials_so_far,
                    },
                ));
            }
        }
    }

    let a: Vec<f64> = estimates.iter().map(|e| e.numerator.value).collect();
    let c: Vec<f64> = estimates.iter().map(|e| e.denominator.value).collect();
    let numerator = combine_weighted(&a, &weights.mu)?;
    let denominator = combine_weighted(&c, &weights.mu)?;
    let ratio = bayes_ratio(numerator, denominator)?;

    let trials_total = weights.trials
        + estimates
            .iter()
            .map(|e| e.numerator.trials + e.denominator.trials)
            .sum::<u64>();
    let draws_total = weights.trials
        + estimates
            .iter()
            .map(|e| e.numerator.draws + e.denominator.draws)
            .sum::<u64>();

    Ok(InferenceResult {
        estimate: ratio.value,
        epsilon,
        delta,
        strategy_used,
        selected_s: selected,
        mu_s: weights.mu,
        weight_trials: weights.trials,
        subproblem_estimates: estimates,
        direct_estimate: None,
        numerator,
        denominator,
        clamped: ratio.clamped,
        stage_budgets: Some(budgets),
        dependence_before,
        dependence_after,
        cost_before,
        cost_after,
        trace,
        trials_total,
        draws_total,
        seed,
    })
}
