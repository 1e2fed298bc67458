//! Conditional-probability bounds, per-node λ values, the dependence value
//! `D = ∏ λ²`, and the two-term cost model that prices a conditioning set.
//!
//! Evidence nodes and conditioning-set nodes are treated alike when a node's
//! parents are examined. For a conditioning-set member's own λ the unbound
//! rule applies (its subproblems instantiate it both ways), so one `D` value
//! bounds every subproblem.

use serde::{Deserialize, Serialize};

use crate::network::{Assignment, BeliefNetwork};

/// Extremes of `Pr[node = v | parents]` over the parent configurations that
/// agree with the fixed nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeBounds {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDependence {
    pub node: usize,
    pub bounds: NodeBounds,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    pub per_node: Vec<NodeDependence>,
    pub dependence_value: f64,
    /// Observed nodes (evidence, or any fixed assignment).
    pub evidence: Assignment,
    /// Conditioning-set nodes, bound but not observed at a single value.
    pub conditioning_set: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    /// `2^|S| · D_S⁴`
    pub subproblem_term: f64,
    /// `2^|S| / φ_M`, with `φ_M` replaced by its lower bound.
    pub weight_term: f64,
    pub phi_min_bound: f64,
    pub dependence: f64,
}

impl CostEstimate {
    pub fn total(&self) -> f64 {
        self.subproblem_term + self.weight_term
    }
}

fn bounds_over(
    net: &BeliefNetwork,
    node: usize,
    value: bool,
    fixed: &[Option<bool>],
) -> NodeBounds {
    let parents = net.parents(node);
    let rows = net.cpt(node).rows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let k = parents.len();
    for (row, &p1) in rows.iter().enumerate() {
        let consistent = parents
            .iter()
            .enumerate()
            .all(|(j, &p)| fixed[p].is_none_or(|v| v == ((row >> (k - 1 - j)) & 1 == 1)));
        if consistent {
            let p = if value { p1 } else { 1.0 - p1 };
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    NodeBounds { lo, hi }
}

/// Bounds of `Pr[node = node_value | parents]` over parent configurations
/// consistent with `fixed`.
pub fn node_bounds(
    net: &BeliefNetwork,
    node: usize,
    node_value: bool,
    fixed: &Assignment,
) -> NodeBounds {
    bounds_over(net, node, node_value, fixed.raw())
}

/// λ of `node` when parents are scanned under `parents_fixed` and the node
/// itself is observed at `own` (`None` for unobserved).
fn lambda_given(
    net: &BeliefNetwork,
    node: usize,
    parents_fixed: &[Option<bool>],
    own: Option<bool>,
) -> (NodeBounds, f64) {
    let b = bounds_over(net, node, true, parents_fixed);
    let all_bound = net
        .parents(node)
        .iter()
        .all(|&p| parents_fixed[p].is_some());
    if all_bound {
        return (b, 1.0);
    }
    let up = b.hi / b.lo;
    let down = (1.0 - b.lo) / (1.0 - b.hi);
    let lambda = match own {
        None => up.max(down),
        Some(true) => up,
        Some(false) => down,
    };
    (b, lambda)
}

/// λ of one node given the union of evidence and conditioning assignments.
pub fn lambda(net: &BeliefNetwork, node: usize, fixed: &Assignment) -> f64 {
    lambda_given(net, node, fixed.raw(), fixed.get(node)).1
}

fn report(net: &BeliefNetwork, evidence: &Assignment, conditioning: &[usize]) -> DependenceReport {
    // Conditioning nodes only need to read as bound during the parent scan.
    let mut parents_fixed = evidence.clone();
    for &s in conditioning {
        if !parents_fixed.is_bound(s) {
            parents_fixed.set(s, false);
        }
    }
    let own = |i: usize| {
        if conditioning.contains(&i) {
            None
        } else {
            evidence.get(i)
        }
    };
    let per_node: Vec<NodeDependence> = (0..net.len())
        .map(|i| {
            let (bounds, lambda) = lambda_given(net, i, parents_fixed.raw(), own(i));
            NodeDependence {
                node: i,
                bounds,
                lambda,
            }
        })
        .collect();
    let dependence_value = per_node.iter().map(|d| d.lambda * d.lambda).product();
    DependenceReport {
        per_node,
        dependence_value,
        evidence: evidence.clone(),
        conditioning_set: conditioning.to_vec(),
    }
}

/// `D = ∏ λ_i²` with every bound node of `fixed` treated as observed.
pub fn dependence_value(net: &BeliefNetwork, fixed: &Assignment) -> DependenceReport {
    report(net, fixed, &[])
}

/// `D_S`: parents in `evidence ∪ conditioning` count as bound, while the
/// conditioning nodes themselves use the unobserved λ rule.
pub fn conditioned_dependence(
    net: &BeliefNetwork,
    evidence: &Assignment,
    conditioning: &[usize],
) -> DependenceReport {
    report(net, evidence, conditioning)
}

/// `∏_{i ∈ S} min(l_i, 1 − u_i)` from unconditioned bounds; never exceeds
/// the smallest instantiation probability of `nodes`.
pub fn phi_min_lower_bound(net: &BeliefNetwork, nodes: &[usize]) -> f64 {
    let free = vec![None; net.len()];
    nodes
        .iter()
        .map(|&i| {
            let b = bounds_over(net, i, true, &free);
            b.lo.min(1.0 - b.hi)
        })
        .product()
}

/// Two-term runtime model for a conditioning set.
pub fn predicted_cost(net: &BeliefNetwork, evidence: &Assignment, nodes: &[usize]) -> CostEstimate {
    let scale = (nodes.len() as f64).exp2();
    let d = conditioned_dependence(net, evidence, nodes).dependence_value;
    let phi = phi_min_lower_bound(net, nodes);
    CostEstimate {
        subproblem_term: scale * d.powi(4),
        weight_term: scale / phi,
        phi_min_bound: phi,
        dependence: d,
    }
}

/// Relative-error acceptance: `φ/(1+ε) ≤ μ ≤ φ(1+ε)`.
pub fn satisfies_ras(phi: f64, mu: f64, epsilon: f64) -> bool {
    phi / (1.0 + epsilon) <= mu && mu <= phi * (1.0 + epsilon)
}
