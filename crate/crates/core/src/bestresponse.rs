//! Best responses, reduced to knapsacks.
//!
//! With the opponent fixed, both payoffs are node-separable, so a best
//! response is the all-zero baseline plus a knapsack over per-node gains.

use crate::error::{CngError, Result};
use crate::knapsack::{solve_knapsack, KnapsackProblem};
use crate::model::{CngInstance, Player, StrategyProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub strategy: Vec<bool>,
    pub value: f64,
}

fn check_len(inst: &CngInstance, field: &'static str, v: &[bool]) -> Result<()> {
    if v.len() == inst.n {
        Ok(())
    } else {
        Err(CngError::ShapeMismatch {
            field,
            expected: inst.n,
            got: v.len(),
        })
    }
}

/// Gain of protecting each node over leaving it unprotected, given `attack`.
pub fn defender_gains(inst: &CngInstance, attack: &[bool]) -> Vec<f64> {
    inst.defender_profit
        .iter()
        .zip(attack)
        .map(|(&p, &hit)| {
            if hit {
                p * (inst.eta - inst.delta)
            } else {
                p * (inst.epsilon - 1.0)
            }
        })
        .collect()
}

/// Gain of attacking each node over leaving it alone, given `defense`.
pub fn attacker_gains(inst: &CngInstance, defense: &[bool]) -> Vec<f64> {
    inst.attacker_profit
        .iter()
        .zip(defense)
        .map(|(&p, &guarded)| {
            if guarded {
                p * (1.0 - inst.eta)
            } else {
                p * (1.0 + inst.gamma)
            }
        })
        .collect()
}

/// `argmax_x f^d(x, attack)` subject to the defender budget.
pub fn defender_best_response(inst: &CngInstance, attack: &[bool]) -> Result<BestResponse> {
    check_len(inst, "alpha", attack)?;
    let problem = KnapsackProblem::new(
        defender_gains(inst, attack),
        inst.defender_weight.clone(),
        inst.defender_budget,
    );
    let sol = solve_knapsack(&problem)?;
    let base = inst.defender_payoff_unchecked(&vec![false; inst.n], attack);
    Ok(BestResponse {
        value: base + sol.objective,
        strategy: sol.selected,
    })
}

/// `argmax_alpha f^a(alpha, defense)` subject to the attacker budget.
pub fn attacker_best_response(inst: &CngInstance, defense: &[bool]) -> Result<BestResponse> {
    check_len(inst, "x", defense)?;
    let problem = KnapsackProblem::new(
        attacker_gains(inst, defense),
        inst.attacker_weight.clone(),
        inst.attacker_budget,
    );
    let sol = solve_knapsack(&problem)?;
    let base = inst.attacker_payoff_unchecked(defense, &vec![false; inst.n]);
    Ok(BestResponse {
        value: base + sol.objective,
        strategy: sol.selected,
    })
}

pub fn best_response(inst: &CngInstance, player: Player, profile: &StrategyProfile) -> Result<BestResponse> {
    match player {
        Player::Defender => defender_best_response(inst, &profile.attack),
        Player::Attacker => attacker_best_response(inst, &profile.defense),
    }
}

/// Both players' regrets at a profile and the responses that realize them.
#[derive(Debug, Clone, PartialEq)]
pub struct Regrets {
    pub defender_value: f64,
    pub attacker_value: f64,
    pub defender_response: BestResponse,
    pub attacker_response: BestResponse,
}

impl Regrets {
    pub fn defender_gap(&self) -> f64 {
        self.defender_response.value - self.defender_value
    }

    pub fn attacker_gap(&self) -> f64 {
        self.attacker_response.value - self.attacker_value
    }

    /// Smallest `phi` for which the profile is a `phi`-equilibrium.
    pub fn phi(&self) -> f64 {
        self.defender_gap().max(self.attacker_gap()).max(0.0)
    }
}

pub fn regrets(inst: &CngInstance, profile: &StrategyProfile) -> Result<Regrets> {
    let defender_value = inst.payoff(Player::Defender, profile)?;
    let attacker_value = inst.payoff(Player::Attacker, profile)?;
    Ok(Regrets {
        defender_value,
        attacker_value,
        defender_response: defender_best_response(inst, &profile.attack)?,
        attacker_response: attacker_best_response(inst, &profile.defense)?,
    })
}
