//! Binary belief networks: nodes, conditional probability tables, partial
//! assignments and the factored joint distribution.
//!
//! Nodes are addressed by their declaration index (`usize`). A CPT row holds
//! `Pr[node = 1 | parents]`; the row index is the binary number formed by
//! the parent values, first-listed parent as the most significant bit.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("cycle detected through node `{0}`")]
    CycleDetected(String),
    #[error("node `{node}` names undeclared parent `{parent}`")]
    UndeclaredParent { node: String, parent: String },
    #[error("node `{node}` has {found} CPT rows, expected {expected}")]
    WrongRowCount {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("node `{node}` has probability {value} outside (0, 1)")]
    ProbabilityOutOfRange { node: String, value: f64 },
    #[error("node `{0}` declared twice")]
    DuplicateNode(String),
    #[error("invalid node name `{0}`")]
    InvalidName(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("assignment does not bind node `{0}`")]
    IncompleteAssignment(String),
    #[error("parent `{parent}` of node `{node}` is not bound")]
    MissingParentBinding { node: String, parent: String },
}

/// Conditional probability table of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    parents: Vec<usize>,
    rows: Vec<f64>,
}

impl Cpt {
    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// `Pr[node = 1 | parent configuration]`, one entry per configuration.
    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn is_prior(&self) -> bool {
        self.parents.is_empty()
    }
}

/// Declarative description of one node, used to build a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub parents: Vec<String>,
    pub rows: Vec<f64>,
}

impl NodeSpec {
    pub fn prior(name: impl Into<String>, p: f64) -> Self {
        NodeSpec {
            name: name.into(),
            parents: Vec::new(),
            rows: vec![p],
        }
    }

    pub fn with_parents<S: Into<String>>(
        name: impl Into<String>,
        parents: impl IntoIterator<Item = S>,
        rows: Vec<f64>,
    ) -> Self {
        NodeSpec {
            name: name.into(),
            parents: parents.into_iter().map(Into::into).collect(),
            rows,
        }
    }
}

/// An immutable DAG of binary nodes with their CPTs.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefNetwork {
    name: String,
    names: Vec<String>,
    index: HashMap<String, usize>,
    cpts: Vec<Cpt>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || c == '#' || c == ':' || c == '=' || c == ',')
}

impl BeliefNetwork {
    /// Validates and builds a network. Parents may be listed in any order
    /// relative to their children; a topological order is computed here.
    pub fn new(name: impl Into<String>, specs: Vec<NodeSpec>) -> Result<Self, NetworkError> {
        let mut index = HashMap::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            if !valid_name(&spec.name) {
                return Err(NetworkError::InvalidName(spec.name.clone()));
            }
            if index.insert(spec.name.clone(), i).is_some() {
                return Err(NetworkError::DuplicateNode(spec.name.clone()));
            }
        }

        let mut cpts = Vec::with_capacity(specs.len());
        let mut names = Vec::with_capacity(specs.len());
        for spec in specs {
            let mut parents = Vec::with_capacity(spec.parents.len());
            for p in &spec.parents {
                let &pi = index.get(p).ok_or_else(|| NetworkError::UndeclaredParent {
                    node: spec.name.clone(),
                    parent: p.clone(),
                })?;
                if parents.contains(&pi) {
                    return Err(NetworkError::DuplicateNode(p.clone()));
                }
                parents.push(pi);
            }
            let expected = if parents.len() < 32 {
                1usize << parents.len()
            } else {
                usize::MAX
            };
            if spec.rows.len() != expected {
                return Err(NetworkError::WrongRowCount {
                    node: spec.name.clone(),
                    expected,
                    found: spec.rows.len(),
                });
            }
            if let Some(&bad) = spec.rows.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
                return Err(NetworkError::ProbabilityOutOfRange {
                    node: spec.name.clone(),
                    value: bad,
                });
            }
            cpts.push(Cpt {
                parents,
                rows: spec.rows,
            });
            names.push(spec.name);
        }

        let n = names.len();
        let mut children = vec![Vec::new(); n];
        for (i, cpt) in cpts.iter().enumerate() {
            for &p in &cpt.parents {
                children[p].push(i);
            }
        }

        // Kahn's algorithm, always taking the smallest ready index so that a
        // file declaring parents first yields declaration order.
        let mut indegree: Vec<usize> = cpts.iter().map(|c| c.parents.len()).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            topo.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
            return Err(NetworkError::CycleDetected(names[stuck].clone()));
        }

        Ok(BeliefNetwork {
            name: name.into(),
            names,
            index,
            cpts,
            children,
            topo,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn node_name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn cpt(&self, node: usize) -> &Cpt {
        &self.cpts[node]
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.cpts[node].parents
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Back to the declarative form, in declaration order.
    pub fn specs(&self) -> Vec<NodeSpec> {
        (0..self.len())
            .map(|i| NodeSpec {
                name: self.names[i].clone(),
                parents: self.cpts[i]
                    .parents
                    .iter()
                    .map(|&p| self.names[p].clone())
                    .collect(),
                rows: self.cpts[i].rows.clone(),
            })
            .collect()
    }

    /// An assignment binding no node of this network.
    pub fn empty_assignment(&self) -> Assignment {
        Assignment::new(self.len())
    }

    /// Builds an assignment from `(name, value)` pairs.
    pub fn assignment<'a, I>(&self, bindings: I) -> Result<Assignment, NetworkError>
    where
        I: IntoIterator<Item = (&'a str, bool)>,
    {
        let mut a = self.empty_assignment();
        for (name, v) in bindings {
            let i = self
                .node_index(name)
                .ok_or_else(|| NetworkError::UnknownNode(name.to_string()))?;
            a.set(i, v);
        }
        Ok(a)
    }

    /// Row of `node`'s CPT selected by a lookup for each parent's value.
    #[inline]
    pub(crate) fn row_index_with(
        &self,
        node: usize,
        mut value_of: impl FnMut(usize) -> bool,
    ) -> usize {
        self.cpts[node]
            .parents
            .iter()
            .fold(0usize, |acc, &p| (acc << 1) | value_of(p) as usize)
    }

    /// `Pr[node = value | parents]` with the parents read from `full`, which
    /// must bind all of them.
    #[inline]
    pub(crate) fn factor(&self, node: usize, value: bool, state: &[bool]) -> f64 {
        let p1 = self.cpts[node].rows[self.row_index_with(node, |p| state[p])];
        if value {
            p1
        } else {
            1.0 - p1
        }
    }

    /// Product of the CPT factors of a full assignment.
    pub fn joint_probability(&self, full: &Assignment) -> Result<f64, NetworkError> {
        let state = self.full_state(full)?;
        Ok(self
            .topo
            .iter()
            .map(|&i| self.factor(i, state[i], &state))
            .product())
    }

    /// Looks up `Pr[node = value | parent_assignment]`. Bindings of nodes
    /// other than the parents are ignored.
    pub fn conditional_row(
        &self,
        node: usize,
        value: bool,
        parent_assignment: &Assignment,
    ) -> Result<f64, NetworkError> {
        let mut row = 0usize;
        for &p in &self.cpts[node].parents {
            let v = parent_assignment
                .get(p)
                .ok_or_else(|| NetworkError::MissingParentBinding {
                    node: self.names[node].clone(),
                    parent: self.names[p].clone(),
                })?;
            row = (row << 1) | v as usize;
        }
        let p1 = self.cpts[node].rows[row];
        Ok(if value { p1 } else { 1.0 - p1 })
    }

    pub(crate) fn full_state(&self, full: &Assignment) -> Result<Vec<bool>, NetworkError> {
        (0..self.len())
            .map(|i| {
                full.get(i)
                    .ok_or_else(|| NetworkError::IncompleteAssignment(self.names[i].clone()))
            })
            .collect()
    }

    /// Renders an assignment as `A=1,B=0` in declaration order.
    pub fn format_assignment(&self, a: &Assignment) -> String {
        a.iter()
            .map(|(i, v)| format!("{}={}", self.names[i], v as u8))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Node names of an ordered node list.
    pub fn names_of(&self, nodes: &[usize]) -> Vec<String> {
        nodes.iter().map(|&i| self.names[i].clone()).collect()
    }
}

/// A partial map from node to value. Sized to one network; indices are
/// declaration indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(n: usize) -> Self {
        Assignment {
            values: vec![None; n],
        }
    }

    pub fn from_full(state: &[bool]) -> Self {
        Assignment {
            values: state.iter().map(|&v| Some(v)).collect(),
        }
    }

    /// Number of nodes in the network this assignment belongs to.
    pub fn width(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, node: usize) -> Option<bool> {
        self.values.get(node).copied().flatten()
    }

    pub fn is_bound(&self, node: usize) -> bool {
        self.get(node).is_some()
    }

    pub fn set(&mut self, node: usize, value: bool) {
        self.values[node] = Some(value);
    }

    pub fn unset(&mut self, node: usize) {
        self.values[node] = None;
    }

    pub fn with(mut self, node: usize, value: bool) -> Self {
        self.set(node, value);
        self
    }

    /// Bound `(node, value)` pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
    }

    pub fn bound_nodes(&self) -> Vec<usize> {
        self.iter().map(|(i, _)| i).collect()
    }

    pub fn bound_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn is_disjoint(&self, other: &Assignment) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| a.is_none() || b.is_none())
    }

    /// Union of two assignments; `None` if they disagree on a shared node.
    pub fn union(&self, other: &Assignment) -> Option<Assignment> {
        let mut out = self.clone();
        for (i, v) in other.iter() {
            match out.get(i) {
                Some(w) if w != v => return None,
                _ => out.set(i, v),
            }
        }
        Some(out)
    }

    /// True when every binding here agrees with the full state.
    #[inline]
    pub fn agrees_with(&self, state: &[bool]) -> bool {
        self.values
            .iter()
            .zip(state)
            .all(|(a, &s)| a.is_none_or(|v| v == s))
    }

    pub(crate) fn raw(&self) -> &[Option<bool>] {
        &self.values
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .iter()
            .map(|(i, v)| format!("{i}={}", v as u8))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// The instantiation of `nodes` encoded by `index`, first node as the most
/// significant bit.
pub fn instantiation(n: usize, nodes: &[usize], index: usize) -> Assignment {
    let k = nodes.len();
    let mut a = Assignment::new(n);
    for (j, &node) in nodes.iter().enumerate() {
        a.set(node, (index >> (k - 1 - j)) & 1 == 1);
    }
    a
}

/// Inverse of [`instantiation`]: category index of a full state.
#[inline]
pub fn instantiation_index(nodes: &[usize], state: &[bool]) -> usize {
    nodes
        .iter()
        .fold(0usize, |acc, &i| (acc << 1) | state[i] as usize)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn joint_of_net_a() {
        let net = net_a();
        let a = net.assignment([("A", true), ("B", true)]).unwrap();
        assert!((net.joint_probability(&a).unwrap() - 0.27).abs() < 1e-15);
        let a = net.assignment([("A", false), ("B", false)]).unwrap();
        assert!((net.joint_probability(&a).unwrap() - 0.56).abs() < 1e-15);
    }

    #[test]
    fn joint_single_node() {
        let net = single(0.5);
        let a = net.assignment([("Z", true)]).unwrap();
        assert_eq!(net.joint_probability(&a).unwrap(), 0.5);
    }

    #[test]
    fn joint_requires_full_assignment() {
        let net = net_a();
        let a = net.assignment([("A", true)]).unwrap();
        assert_eq!(
            net.joint_probability(&a),
            Err(NetworkError::IncompleteAssignment("B".into()))
        );
    }

    #[test]
    fn conditional_rows() {
        let net = net_a();
        let a1 = net.assignment([("A", true)]).unwrap();
        assert_eq!(net.conditional_row(1, true, &a1).unwrap(), 0.9);
        assert!((net.conditional_row(1, false, &a1).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(
            net.conditional_row(0, true, &net.empty_assignment())
                .unwrap(),
            0.3
        );
        assert!(matches!(
            net.conditional_row(1, true, &net.empty_assignment()),
            Err(NetworkError::MissingParentBinding { .. })
        ));
    }

    #[test]
    fn row_index_is_msb_first() {
        let net = BeliefNetwork::new(
            "t",
            vec![
                NodeSpec::prior("P", 0.5),
                NodeSpec::prior("Q", 0.5),
                NodeSpec::with_parents("R", ["P", "Q"], vec![0.1, 0.2, 0.3, 0.4]),
            ],
        )
        .unwrap();
        let a = net.assignment([("P", true), ("Q", false)]).unwrap();
        assert_eq!(net.conditional_row(2, true, &a).unwrap(), 0.3);
    }

    #[test]
    fn construction_errors() {
        let cyc = BeliefNetwork::new(
            "c",
            vec![
                NodeSpec::with_parents("X", ["Y"], vec![0.5, 0.5]),
                NodeSpec::with_parents("Y", ["X"], vec![0.5, 0.5]),
            ],
        );
        assert!(matches!(cyc, Err(NetworkError::CycleDetected(_))));
        let dup = BeliefNetwork::new(
            "d",
            vec![NodeSpec::prior("X", 0.5), NodeSpec::prior("X", 0.5)],
        );
        assert_eq!(dup, Err(NetworkError::DuplicateNode("X".into())));
        let undeclared = BeliefNetwork::new(
            "u",
            vec![NodeSpec::with_parents("X", ["Q"], vec![0.5, 0.5])],
        );
        assert!(matches!(
            undeclared,
            Err(NetworkError::UndeclaredParent { .. })
        ));
        let rows = BeliefNetwork::new(
            "r",
            vec![
                NodeSpec::prior("A", 0.5),
                NodeSpec::with_parents("B", ["A"], vec![0.2]),
            ],
        );
        assert!(matches!(
            rows,
            Err(NetworkError::WrongRowCount {
                expected: 2,
                found: 1,
                ..
            })
        ));
        let range = BeliefNetwork::new("p", vec![NodeSpec::prior("A", 1.0)]);
        assert!(matches!(
            range,
            Err(NetworkError::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn topological_order_handles_out_of_order_specs() {
        let net = BeliefNetwork::new(
            "o",
            vec![
                NodeSpec::with_parents("C", ["B"], vec![0.2, 0.8]),
                NodeSpec::with_parents("B", ["A"], vec![0.1, 0.9]),
                NodeSpec::prior("A", 0.5),
            ],
        )
        .unwrap();
        assert_eq!(net.topological_order(), &[2, 1, 0]);
    }

    #[test]
    fn instantiation_encoding() {
        let nodes = [0, 2];
        let a = instantiation(3, &nodes, 0b10);
        assert_eq!(a.get(0), Some(true));
        assert_eq!(a.get(2), Some(false));
        assert_eq!(a.get(1), None);
        assert_eq!(instantiation_index(&nodes, &[true, true, false]), 0b10);
    }

    #[test]
    fn union_detects_conflicts() {
        let net = net_a();
        let a = net.assignment([("A", true)]).unwrap();
        let b = net.assignment([("A", false)]).unwrap();
        assert!(a.union(&b).is_none());
        assert!(!a.is_disjoint(&b));
        let c = net.assignment([("B", true)]).unwrap();
        assert_eq!(a.union(&c).unwrap().bound_count(), 2);
    }
}
