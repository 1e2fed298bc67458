//! Exact inference by brute-force enumeration of all completions.
//!
//! Cost is `2^(unbound nodes)` joint evaluations; the guards below refuse
//! networks where that would not finish.

use thiserror::Error;

use crate::network::{instantiation, Assignment, BeliefNetwork};

/// Largest network the enumerator accepts.
pub const MAX_ORACLE_NODES: usize = 25;
/// Largest node set `exact_distribution_over` accepts.
pub const MAX_DISTRIBUTION_NODES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("network has {nodes} nodes; exact enumeration is limited to {limit}")]
    NetworkTooLarge { nodes: usize, limit: usize },
    #[error("target and evidence bind the same node")]
    OverlappingAssignments,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub enumerated_terms: u64,
}

fn guard(net: &BeliefNetwork) -> Result<(), OracleError> {
    if net.len() > MAX_ORACLE_NODES {
        return Err(OracleError::NetworkTooLarge {
            nodes: net.len(),
            limit: MAX_ORACLE_NODES,
        });
    }
    Ok(())
}

/// Depth-first sum over completions in topological order, multiplying
/// factors along the way. Branches visit value 0 before value 1, so the
/// summation order is fixed.
fn enumerate(
    net: &BeliefNetwork,
    fixed: &[Option<bool>],
    depth: usize,
    state: &mut [bool],
    weight: f64,
    terms: &mut u64,
) -> f64 {
    let order = net.topological_order();
    if depth == order.len() {
        *terms += 1;
        return weight;
    }
    let node = order[depth];
    match fixed[node] {
        Some(v) => {
            state[node] = v;
            let f = net.factor(node, v, state);
            enumerate(net, fixed, depth + 1, state, weight * f, terms)
        }
        None => {
            let mut total = 0.0;
            for v in [false, true] {
                state[node] = v;
                let f = net.factor(node, v, state);
                total += enumerate(net, fixed, depth + 1, state, weight * f, terms);
            }
            total
        }
    }
}

pub fn exact_marginal_detailed(
    net: &BeliefNetwork,
    partial: &Assignment,
) -> Result<OracleResult, OracleError> {
    guard(net)?;
    let mut state = vec![false; net.len()];
    let mut terms = 0;
    let value = enumerate(net, partial.raw(), 0, &mut state, 1.0, &mut terms);
    Ok(OracleResult {
        value,
        enumerated_terms: terms,
    })
}

/// `Pr[partial]`, summed over every completion.
pub fn exact_marginal(net: &BeliefNetwork, partial: &Assignment) -> Result<f64, OracleError> {
    exact_marginal_detailed(net, partial).map(|r| r.value)
}

/// `Pr[target | evidence]` as a ratio of two enumerated marginals.
pub fn exact_conditional(
    net: &BeliefNetwork,
    target: &Assignment,
    evidence: &Assignment,
) -> Result<f64, OracleError> {
    guard(net)?;
    let joint = target
        .union(evidence)
        .filter(|_| target.is_disjoint(evidence))
        .ok_or(OracleError::OverlappingAssignments)?;
    Ok(exact_marginal(net, &joint)? / exact_marginal(net, evidence)?)
}

/// Exact `Pr[I_i]` for every instantiation of `nodes`, indexed with the first
/// node as the most significant bit.
pub fn exact_distribution_over(
    net: &BeliefNetwork,
    nodes: &[usize],
) -> Result<Vec<f64>, OracleError> {
    guard(net)?;
    if nodes.len() > MAX_DISTRIBUTION_NODES {
        return Err(OracleError::NetworkTooLarge {
            nodes: nodes.len(),
            limit: MAX_DISTRIBUTION_NODES,
        });
    }
    (0..1usize << nodes.len())
        .map(|i| exact_marginal(net, &instantiation(net.len(), nodes, i)))
        .collect()
}

/// Minimum entry of [`exact_distribution_over`], the true `φ_M`.
pub fn exact_phi_min(net: &BeliefNetwork, nodes: &[usize]) -> Result<f64, OracleError> {
    Ok(exact_distribution_over(net, nodes)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}
