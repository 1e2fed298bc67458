//! Approximate inference in binary belief networks by selective
//! conditioning.
//!
//! A query `Pr[X | E]` is rewritten as a ratio of two weighted sums over the
//! instantiations of a conditioning set `S`, chosen greedily to shrink the
//! dependence value `D` that governs simulation cost. The weights `Pr[S]`
//! come from logic sampling under a Dirichlet stopping rule; each
//! conditioned subproblem is estimated by simulation to a relative-error
//! target, and the pieces recombine into an `(ε, δ)` estimate.

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dependence;
pub mod dirichlet;
pub mod format;
pub mod network;
pub mod oracle;
pub mod reformulation;
pub mod report;
pub mod rng;
pub mod simulation;
pub mod special;

pub use dependence::{
    conditioned_dependence, dependence_value, lambda, node_bounds, phi_min_lower_bound,
    predicted_cost, satisfies_ras, CostEstimate, DependenceReport, NodeBounds, NodeDependence,
};
pub use dirichlet::{worst_case_sample_bound, DirichletError, DirichletPosterior, PriorChoice};
pub use format::{parse_bindings, parse_network, serialize_network, BindingError, FormatError};
pub use network::{
    instantiation, instantiation_index, Assignment, BeliefNetwork, Cpt, NetworkError, NodeSpec,
};
pub use oracle::{
    exact_conditional, exact_distribution_over, exact_marginal, exact_marginal_detailed,
    exact_phi_min, OracleError, OracleResult,
};
pub use reformulation::{
    bayes_ratio, combine_weighted, decompose, greedy_select, greedy_select_protecting, infer,
    GeneratorChoice, GreedyStep, GreedyStop, GreedyTrace, InferenceConfig, InferenceResult,
    PartialDiagnostics, Ratio, ReformulationError, StageBudgets, Strategy, Subproblem,
    SubproblemEstimate, DEFAULT_MAX_S,
};
pub use report::{
    FailureReport, OracleCheck, PreparedRun, RunError, RunFailure, RunInputs, RunReport, VERSION,
};
pub use rng::{mix_seed, RandomSource, DEFAULT_SEED};
pub use simulation::{
    conditioned_trial, estimate_conditional_fraction, estimate_distribution_over, logic_sample,
    next_checkpoint, ConditionedSampler, DistributionEstimate, RasEstimate, SampleBudget,
    SimulationError, TrialGeneratorKind,
};
pub use special::{regularized_incomplete_beta, BetaError};
