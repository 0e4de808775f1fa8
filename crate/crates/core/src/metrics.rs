//! Price of Security and Price of Aggression.
//!
//! Both compare a player's best outcome over the whole joint strategy space
//! with that player's payoff at the equilibrium it likes best.

use crate::error::{CngError, Result};
use crate::master::{solve_master, CutPool, MasterObjective, MasterOutcome, SearchBudget};
use crate::model::{CngInstance, Player, StrategyProfile};
use crate::zeroregrets::{solve, EquilibriumResult, SolveConfig, SolveStatus};

#[derive(Debug, Clone)]
pub struct PriceReport {
    pub player: Player,
    /// `numerator / denominator`, `+inf` when the denominator is zero.
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub best_outcome: StrategyProfile,
    pub equilibrium: EquilibriumResult,
}

impl PriceReport {
    pub fn checked_ratio(&self) -> Result<f64> {
        if self.denominator == 0.0 {
            Err(CngError::DivisionByZero)
        } else {
            Ok(self.ratio)
        }
    }

    pub fn phi(&self) -> f64 {
        self.equilibrium.phi
    }

    pub fn proved(&self) -> bool {
        self.equilibrium.status == SolveStatus::ProvedOptimalNe
    }
}

fn price(inst: &CngInstance, config: &SolveConfig, objective: MasterObjective, player: Player) -> Result<PriceReport> {
    let cfg = SolveConfig { objective, ..*config };
    let equilibrium = solve(inst, &cfg)?;
    let outcome = solve_master(inst, &CutPool::new(), objective, 0.0, SearchBudget::unlimited())?;
    let (best_outcome, numerator) = match outcome {
        MasterOutcome::Optimal { profile, value } => (profile, value),
        // without cuts the all-zero profile is always admissible
        _ => unreachable!("uncut master cannot be infeasible or limited"),
    };
    let denominator = match player {
        Player::Defender => equilibrium.defender_value,
        Player::Attacker => equilibrium.attacker_value,
    };
    let ratio = if denominator == 0.0 {
        f64::INFINITY
    } else {
        numerator / denominator
    };
    Ok(PriceReport {
        player,
        ratio,
        numerator,
        denominator,
        best_outcome,
        equilibrium,
    })
}

/// Defender's best outcome over its payoff at the defender-best equilibrium.
pub fn price_of_security(inst: &CngInstance, config: &SolveConfig) -> Result<PriceReport> {
    price(inst, config, MasterObjective::DefenderPayoff, Player::Defender)
}

/// Attacker's best outcome over its payoff at the attacker-best equilibrium.
pub fn price_of_aggression(inst: &CngInstance, config: &SolveConfig) -> Result<PriceReport> {
    price(inst, config, MasterObjective::AttackerPayoff, Player::Attacker)
}
