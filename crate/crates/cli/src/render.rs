//! Plain-text renderings of the command reports.

use std::fmt::Write;

use selcond_core::{
    BeliefNetwork, CostEstimate, FailureReport, GreedyStop, GreedyTrace, RunReport, Strategy,
};

use crate::AnalyzeReport;

fn names(net: &BeliefNetwork, nodes: &[usize]) -> String {
    if nodes.is_empty() {
        "{}".into()
    } else {
        format!("{{{}}}", net.names_of(nodes).join(", "))
    }
}

fn set(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

fn cost(c: &CostEstimate) -> String {
    format!(
        "2^|S|·D⁴ = {:.6e}, 2^|S|/φ ≤ {:.6e} (D = {:.6e}, φ ≥ {:.6e})",
        c.subproblem_term, c.weight_term, c.dependence, c.phi_min_bound
    )
}

fn stop(s: GreedyStop) -> &'static str {
    match s {
        GreedyStop::NoEligibleCandidate => "no eligible candidate",
        GreedyStop::CostTermsComparable => "weight term caught up with subproblem term",
        GreedyStop::SizeLimit => "size limit reached",
    }
}

fn trace(out: &mut String, net: &BeliefNetwork, trace: &GreedyTrace) {
    for (k, step) in trace.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "  step {}: node {} (λ = {:.6}) adds {}; 2^|u′| = {} < λ^r = {:.6}",
            k + 1,
            net.node_name(step.node),
            step.lambda_before,
            names(net, &step.parents_added),
            step.split_factor,
            step.lambda_power,
        );
        let _ = writeln!(out, "    cost after: {}", cost(&step.cost_after));
    }
    let _ = writeln!(out, "  stop: {}", stop(trace.stop));
}

pub fn analyze(net: &BeliefNetwork, r: &AnalyzeReport, exponent: f64, max_s: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "network {} ({} nodes)", r.network_name, net.len());
    if !r.evidence.is_empty() {
        let _ = writeln!(out, "evidence {}", r.evidence);
    }
    let width = r
        .nodes
        .iter()
        .map(|n| n.name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let _ = writeln!(
        out,
        "{:<width$}  {:>12}  {:>12}  {:>14}",
        "node", "lo", "hi", "λ"
    );
    for n in &r.nodes {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.6}  {:>12.6}  {:>14.6}",
            n.name, n.lo, n.hi, n.lambda
        );
    }
    let _ = writeln!(out, "D = {:.6}", r.dependence_value);
    let _ = writeln!(out, "greedy search (r = {exponent}, |S| ≤ {max_s}):");
    trace(&mut out, net, &r.trace);
    let _ = writeln!(out, "S = {}", set(&r.selected_s));
    let _ = writeln!(out, "D after conditioning = {:.6}", r.dependence_after);
    let _ = writeln!(out, "cost before: {}", cost(&r.cost_before));
    let _ = writeln!(out, "cost after:  {}", cost(&r.cost_after));
    if let Some(phi) = r.phi_min_exact {
        let _ = writeln!(out, "exact φ_min(S) = {phi:.6e}");
    }
    out
}

pub fn run(r: &RunReport) -> String {
    let res = &r.result;
    let mut out = String::new();
    let _ = writeln!(out, "network {}", r.network_name);
    let given = if r.inputs.evidence.is_empty() {
        String::new()
    } else {
        format!(" | {}", r.inputs.evidence)
    };
    let _ = writeln!(
        out,
        "Pr[{}{}] ≈ {:.7}  (ε = {}, δ = {})",
        r.inputs.query, given, res.estimate, res.epsilon, res.delta
    );
    let strategy = match res.strategy_used {
        Strategy::Direct => "direct",
        Strategy::Selective => "selective",
        Strategy::Auto => "auto",
    };
    let _ = writeln!(out, "strategy {strategy}, S = {}", set(&r.selected_s_names));
    let _ = writeln!(
        out,
        "D = {:.6} before, {:.6} after",
        res.dependence_before, res.dependence_after
    );
    if let Some(b) = &res.stage_budgets {
        let _ = writeln!(
            out,
            "stage tolerances: ε_s = {:.6}, δ_weights = {:.6e}, δ_subproblem = {:.6e}",
            b.epsilon_stage, b.delta_weights, b.delta_subproblem
        );
        let _ = writeln!(out, "weight trials {}", res.weight_trials);
        for (sub, mu) in res.subproblem_estimates.iter().zip(&res.mu_s) {
            let _ = writeln!(
                out,
                "  I{}: weight {:.6}, numerator {:.6e} ({} trials), denominator {:.6e} ({} trials)",
                sub.index,
                mu,
                sub.numerator.value,
                sub.numerator.trials,
                sub.denominator.value,
                sub.denominator.trials,
            );
        }
        let _ = writeln!(
            out,
            "numerator {:.6e} / denominator {:.6e}",
            res.numerator, res.denominator
        );
    }
    if res.clamped {
        let _ = writeln!(out, "estimate clamped to [0, 1]");
    }
    let _ = writeln!(
        out,
        "trials {}, forward draws {}, seed {}, {:.1} ms",
        res.trials_total, res.draws_total, r.inputs.seed, r.wall_ms
    );
    if let Some(o) = &r.oracle {
        let verdict = if o.satisfies_ras { "within" } else { "outside" };
        let _ = writeln!(
            out,
            "exact {:.7}; estimate {verdict} relative error ε",
            o.value
        );
        if let Some(phi) = o.phi_min {
            let _ = writeln!(out, "exact φ_min(S) = {phi:.6e}");
        }
    }
    out
}

pub fn failure(r: &FailureReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run failed: {}", r.error);
    if let Some(p) = &r.partial {
        let _ = writeln!(out, "selected S (indices) = {:?}", p.selected_s);
        if let Some(mu) = &p.mu_s {
            let _ = writeln!(out, "weights {mu:?}");
        }
        let _ = writeln!(out, "trials before failure {}", p.trials_so_far);
    }
    let _ = writeln!(out, "{:.1} ms", r.wall_ms);
    out
}
