//! The line-oriented `.bnet` network format.
//!
//! ```text
//! network net_a
//! node A
//! prior A : 0.3
//! node B
//! parents B : A
//! cpt B : 0.2 0.9
//! ```
//!
//! `#` starts a comment, blank lines are ignored, and parents must be
//! declared before their children.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::network::{valid_name, Assignment, BeliefNetwork, NetworkError, NodeSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: NetworkError,
    },
}

impl FormatError {
    pub fn line(&self) -> usize {
        match self {
            FormatError::Syntax { line, .. } | FormatError::Invalid { line, .. } => *line,
        }
    }

    /// The structural error, if this is not a plain syntax error.
    pub fn network_error(&self) -> Option<&NetworkError> {
        match self {
            FormatError::Invalid { source, .. } => Some(source),
            FormatError::Syntax { .. } => None,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

fn invalid(line: usize, source: NetworkError) -> FormatError {
    FormatError::Invalid { line, source }
}

struct Pending {
    spec: NodeSpec,
    has_parents_line: bool,
}

/// Splits `<keyword> <id> : <values...>`.
fn split_valued<'a>(
    line_no: usize,
    tokens: &[&'a str],
) -> Result<(&'a str, Vec<&'a str>), FormatError> {
    if tokens.len() < 3 || tokens[2] != ":" {
        return Err(syntax(
            line_no,
            format!("expected `{} <id> : <values>`", tokens[0]),
        ));
    }
    Ok((tokens[1], tokens[3..].to_vec()))
}

fn parse_probabilities(
    line_no: usize,
    node: &str,
    values: &[&str],
) -> Result<Vec<f64>, FormatError> {
    values
        .iter()
        .map(|v| {
            let p: f64 = v
                .parse()
                .map_err(|_| syntax(line_no, format!("`{v}` is not a number")))?;
            if p > 0.0 && p < 1.0 {
                Ok(p)
            } else {
                Err(invalid(
                    line_no,
                    NetworkError::ProbabilityOutOfRange {
                        node: node.to_string(),
                        value: p,
                    },
                ))
            }
        })
        .collect()
}

/// Parses and validates `.bnet` source text.
pub fn parse_network(text: &str) -> Result<BeliefNetwork, FormatError> {
    let mut name: Option<String> = None;
    let mut specs: Vec<NodeSpec> = Vec::new();
    let mut declared: HashMap<String, usize> = HashMap::new();
    let mut pending: Option<Pending> = None;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }

        if name.is_none() {
            match tokens.as_slice() {
                ["network", id] => {
                    name = Some(id.to_string());
                    continue;
                }
                _ => return Err(syntax(line_no, "expected `network <name>` header")),
            }
        }

        match tokens[0] {
            "network" => return Err(syntax(line_no, "duplicate `network` header")),
            "node" => {
                if let Some(p) = &pending {
                    return Err(syntax(
                        line_no,
                        format!("node `{}` has no `cpt` or `prior` line", p.spec.name),
                    ));
                }
                let [_, id] = tokens.as_slice() else {
                    return Err(syntax(line_no, "expected `node <id>`"));
                };
                if !valid_name(id) {
                    return Err(invalid(line_no, NetworkError::InvalidName(id.to_string())));
                }
                if declared.contains_key(*id) {
                    return Err(invalid(
                        line_no,
                        NetworkError::DuplicateNode(id.to_string()),
                    ));
                }
                pending = Some(Pending {
                    spec: NodeSpec {
                        name: id.to_string(),
                        parents: Vec::new(),
                        rows: Vec::new(),
                    },
                    has_parents_line: false,
                });
            }
            "parents" => {
                let (id, parents) = split_valued(line_no, &tokens)?;
                let Some(p) = pending.as_mut().filter(|p| p.spec.name == id) else {
                    return Err(syntax(
                        line_no,
                        format!("`parents {id}` outside its node block"),
                    ));
                };
                if p.has_parents_line {
                    return Err(syntax(line_no, format!("second `parents` line for `{id}`")));
                }
                if parents.is_empty() {
                    return Err(syntax(line_no, "empty parent list"));
                }
                for parent in &parents {
                    if *parent == id {
                        return Err(invalid(
                            line_no,
                            NetworkError::CycleDetected(id.to_string()),
                        ));
                    }
                    if !declared.contains_key(*parent) {
                        return Err(invalid(
                            line_no,
                            NetworkError::UndeclaredParent {
                                node: id.to_string(),
                                parent: parent.to_string(),
                            },
                        ));
                    }
                    if p.spec.parents.iter().any(|q| q == parent) {
                        return Err(invalid(
                            line_no,
                            NetworkError::DuplicateNode(parent.to_string()),
                        ));
                    }
                    p.spec.parents.push(parent.to_string());
                }
                p.has_parents_line = true;
            }
            kw @ ("cpt" | "prior") => {
                let (id, values) = split_valued(line_no, &tokens)?;
                let Some(mut p) = pending.take().filter(|p| p.spec.name == id) else {
                    return Err(syntax(
                        line_no,
                        format!("`{kw} {id}` outside its node block"),
                    ));
                };
                if kw == "prior" && !p.spec.parents.is_empty() {
                    return Err(syntax(
                        line_no,
                        format!("`prior` used for `{id}`, which has parents"),
                    ));
                }
                let expected = 1usize << p.spec.parents.len();
                if values.len() != expected {
                    return Err(invalid(
                        line_no,
                        NetworkError::WrongRowCount {
                            node: id.to_string(),
                            expected,
                            found: values.len(),
                        },
                    ));
                }
                p.spec.rows = parse_probabilities(line_no, id, &values)?;
                declared.insert(p.spec.name.clone(), specs.len());
                specs.push(p.spec);
            }
            other => return Err(syntax(line_no, format!("unknown keyword `{other}`"))),
        }
    }

    let Some(name) = name else {
        return Err(syntax(last_line.max(1), "missing `network <name>` header"));
    };
    if let Some(p) = pending {
        return Err(syntax(
            last_line,
            format!("node `{}` has no `cpt` or `prior` line", p.spec.name),
        ));
    }
    BeliefNetwork::new(name, specs).map_err(|e| invalid(last_line, e))
}

/// Renders a network as `.bnet` text. Nodes are written in topological
/// order, which is declaration order for any parsed network. Probabilities
/// use the shortest representation that parses back to the same `f64`.
pub fn serialize_network(net: &BeliefNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "network {}", net.name());
    for &i in net.topological_order() {
        let name = net.node_name(i);
        let cpt = net.cpt(i);
        let _ = writeln!(out, "node {name}");
        if cpt.is_prior() {
            let _ = writeln!(out, "prior {name} : {}", cpt.rows()[0]);
        } else {
            let parents = net.names_of(cpt.parents()).join(" ");
            let rows: Vec<String> = cpt.rows().iter().map(|r| r.to_string()).collect();
            let _ = writeln!(out, "parents {name} : {parents}");
            let _ = writeln!(out, "cpt {name} : {}", rows.join(" "));
        }
    }
    out
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BindingError {
    #[error("malformed binding `{0}` (expected Name=0 or Name=1)")]
    Malformed(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is bound more than once")]
    Duplicate(String),
}

/// Parses a comma-separated list of `Name=0|1` tokens. An empty string is
/// the empty assignment; binding a node twice is an error even when the
/// values agree.
pub fn parse_bindings(net: &BeliefNetwork, text: &str) -> Result<Assignment, BindingError> {
    let mut out = net.empty_assignment();
    if text.trim().is_empty() {
        return Ok(out);
    }
    for token in text.split(',') {
        let token = token.trim();
        let (name, value) = token
            .split_once('=')
            .ok_or_else(|| BindingError::Malformed(token.to_string()))?;
        let (name, value) = (name.trim(), value.trim());
        let value = match value {
            "0" => false,
            "1" => true,
            _ => return Err(BindingError::Malformed(token.to_string())),
        };
        let node = net
            .node_index(name)
            .ok_or_else(|| BindingError::UnknownNode(name.to_string()))?;
        if out.is_bound(node) {
            return Err(BindingError::Duplicate(name.to_string()));
        }
        out.set(node, value);
    }
    Ok(out)
}
