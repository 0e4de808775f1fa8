//! Small instances shipped with the library for docs, tests and the CLI.

use crate::model::CngInstance;

/// The five-node cloud network example.
///
/// `gamma` is not part of the published parameter table; 0.26 is the
/// unique value consistent with the published attacker payoffs
/// (13.74 and 12.18).
pub fn example_instance() -> CngInstance {
    CngInstance {
        n: 5,
        defender_profit: vec![9.0, 2.0, 30.0, 3.0, 8.0],
        attacker_profit: vec![6.0, 10.5, 18.0, 6.0, 7.5],
        defender_weight: vec![3.0, 6.0, 8.0, 7.0, 7.0],
        attacker_weight: vec![6.0, 4.0, 7.0, 9.0, 1.0],
        defender_budget: 40.0,
        attacker_budget: 25.5,
        delta: 0.06,
        eta: 0.40,
        epsilon: 1.00,
        gamma: 0.26,
        edges: None,
    }
}

/// Two nodes, one protection and one attack: the unique pure equilibrium
/// protects and attacks node 0.
pub fn two_node() -> CngInstance {
    CngInstance {
        n: 2,
        defender_profit: vec![10.0, 1.0],
        attacker_profit: vec![10.0, 1.0],
        defender_weight: vec![1.0, 1.0],
        attacker_weight: vec![1.0, 1.0],
        defender_budget: 1.0,
        attacker_budget: 1.0,
        delta: 0.2,
        eta: 0.5,
        epsilon: 0.6,
        gamma: 0.0,
        edges: None,
    }
}

/// Two identical nodes: the attacker chases the open node and the defender
/// chases the attack, so no pure equilibrium exists.
pub fn pennies() -> CngInstance {
    CngInstance {
        defender_profit: vec![1.0, 1.0],
        attacker_profit: vec![1.0, 1.0],
        ..two_node()
    }
}
