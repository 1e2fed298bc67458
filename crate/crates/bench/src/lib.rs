//! Benchmark fixtures shared by the benches in this crate.

use selcond_core::{parse_network, BeliefNetwork};

pub fn net_c() -> BeliefNetwork {
    parse_network(include_str!("../../../networks/net_c.bnet")).expect("fixture parses")
}

pub fn diamond() -> BeliefNetwork {
    parse_network(include_str!("../../../networks/diamond.bnet")).expect("fixture parses")
}
