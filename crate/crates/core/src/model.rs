//! Game data model and exact payoff evaluation.
//!
//! Every node contributes to both payoffs according to which of the four
//! (protected, attacked) cells it sits in:
//!
//! | cell            | defender    | attacker        |
//! |-----------------|-------------|-----------------|
//! | (0, 0) normal   | `p_d`       | `-gamma * p_a`  |
//! | (0, 1) success  | `delta*p_d` | `p_a`           |
//! | (1, 1) mitigated| `eta*p_d`   | `(1-eta) * p_a` |
//! | (1, 0) idle     | `eps*p_d`   | `0`             |
//!
//! The payoff functions are total on binary vectors: they never check
//! budgets, so deviations can be evaluated freely.

use serde::{Deserialize, Serialize};

use crate::error::{CngError, Result};

/// Absolute tolerance applied to every budget constraint.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// One `(u, v, traffic)` entry kept for provenance only.
pub type Edge = (usize, usize, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Defender,
    Attacker,
}

/// A Critical Node Game instance. Field names on the wire follow the
/// canonical JSON schema (`p_d`, `D`, `epsilon`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CngInstance {
    pub n: usize,
    #[serde(rename = "p_d")]
    pub defender_profit: Vec<f64>,
    #[serde(rename = "p_a")]
    pub attacker_profit: Vec<f64>,
    #[serde(rename = "d")]
    pub defender_weight: Vec<f64>,
    #[serde(rename = "a")]
    pub attacker_weight: Vec<f64>,
    #[serde(rename = "D")]
    pub defender_budget: f64,
    #[serde(rename = "A")]
    pub attacker_budget: f64,
    pub delta: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Edge>>,
}

/// A pure strategy for each player.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyProfile {
    pub defense: Vec<bool>,
    pub attack: Vec<bool>,
}

/// The pair of contributions of a single node under one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffCell {
    pub defender_value: f64,
    pub attacker_value: f64,
}

impl StrategyProfile {
    pub fn new(defense: Vec<bool>, attack: Vec<bool>) -> Self {
        Self { defense, attack }
    }

    /// The profile where nobody selects anything.
    pub fn empty(n: usize) -> Self {
        Self {
            defense: vec![false; n],
            attack: vec![false; n],
        }
    }

    /// Builds a profile from 0/1 integer vectors.
    pub fn from_bits(defense: &[u8], attack: &[u8]) -> Self {
        Self {
            defense: defense.iter().map(|&b| b != 0).collect(),
            attack: attack.iter().map(|&b| b != 0).collect(),
        }
    }

    pub fn defense_bits(&self) -> Vec<u8> {
        self.defense.iter().map(|&b| u8::from(b)).collect()
    }

    pub fn attack_bits(&self) -> Vec<u8> {
        self.attack.iter().map(|&b| u8::from(b)).collect()
    }

    pub fn strategy(&self, player: Player) -> &[bool] {
        match player {
            Player::Defender => &self.defense,
            Player::Attacker => &self.attack,
        }
    }
}

fn check_len(field: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(CngError::ShapeMismatch { field, expected, got })
    }
}

fn check_unit(field: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CngError::RangeViolation {
            field,
            value,
            range: "[0, 1]",
        })
    }
}

impl CngInstance {
    /// Checks shapes, weights, budgets and the payoff-factor ordering.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CngError::RangeViolation {
                field: "n",
                value: 0.0,
                range: "n >= 1",
            });
        }
        check_len("p_d", self.defender_profit.len(), self.n)?;
        check_len("p_a", self.attacker_profit.len(), self.n)?;
        check_len("d", self.defender_weight.len(), self.n)?;
        check_len("a", self.attacker_weight.len(), self.n)?;

        for (field, profits) in [("p_d", &self.defender_profit), ("p_a", &self.attacker_profit)] {
            if let Some(&value) = profits.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(CngError::RangeViolation {
                    field,
                    value,
                    range: "finite and >= 0",
                });
            }
        }
        for (field, weights) in [("d", &self.defender_weight), ("a", &self.attacker_weight)] {
            if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
                return Err(CngError::NonpositiveWeight { field, index, value });
            }
        }
        for (field, value) in [("D", self.defender_budget), ("A", self.attacker_budget)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CngError::RangeViolation {
                    field,
                    value,
                    range: "finite and >= 0",
                });
            }
        }

        check_unit("delta", self.delta)?;
        check_unit("eta", self.eta)?;
        check_unit("epsilon", self.epsilon)?;
        check_unit("gamma", self.gamma)?;
        if !(self.delta < self.eta && self.eta < self.epsilon) {
            return Err(CngError::OrderingViolation {
                delta: self.delta,
                eta: self.eta,
                epsilon: self.epsilon,
            });
        }
        Ok(())
    }

    /// Contributions of node `i` under the given cell.
    pub fn evaluate_cell(&self, i: usize, defended: bool, attacked: bool) -> Result<PayoffCell> {
        if i >= self.n {
            return Err(CngError::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(self.cell(i, defended, attacked))
    }

    /// Like [`evaluate_cell`](Self::evaluate_cell) without the bounds check.
    #[inline]
    pub(crate) fn cell(&self, i: usize, defended: bool, attacked: bool) -> PayoffCell {
        PayoffCell {
            defender_value: self.defender_cell(i, defended, attacked),
            attacker_value: self.attacker_cell(i, defended, attacked),
        }
    }

    #[inline]
    pub(crate) fn defender_cell(&self, i: usize, defended: bool, attacked: bool) -> f64 {
        let p = self.defender_profit[i];
        match (defended, attacked) {
            (false, false) => p,
            (false, true) => self.delta * p,
            (true, true) => self.eta * p,
            (true, false) => self.epsilon * p,
        }
    }

    #[inline]
    pub(crate) fn attacker_cell(&self, i: usize, defended: bool, attacked: bool) -> f64 {
        let p = self.attacker_profit[i];
        match (defended, attacked) {
            (false, false) => -self.gamma * p,
            (false, true) => p,
            (true, true) => (1.0 - self.eta) * p,
            (true, false) => 0.0,
        }
    }

    fn check_strategies(&self, defense: &[bool], attack: &[bool]) -> Result<()> {
        check_len("x", defense.len(), self.n)?;
        check_len("alpha", attack.len(), self.n)
    }

    /// Defender payoff `f^d(x, alpha)`.
    pub fn defender_payoff(&self, defense: &[bool], attack: &[bool]) -> Result<f64> {
        self.check_strategies(defense, attack)?;
        Ok(self.defender_payoff_unchecked(defense, attack))
    }

    /// Attacker payoff `f^a(alpha, x)`.
    pub fn attacker_payoff(&self, defense: &[bool], attack: &[bool]) -> Result<f64> {
        self.check_strategies(defense, attack)?;
        Ok(self.attacker_payoff_unchecked(defense, attack))
    }

    pub(crate) fn defender_payoff_unchecked(&self, defense: &[bool], attack: &[bool]) -> f64 {
        (0..self.n).map(|i| self.defender_cell(i, defense[i], attack[i])).sum()
    }

    pub(crate) fn attacker_payoff_unchecked(&self, defense: &[bool], attack: &[bool]) -> f64 {
        (0..self.n).map(|i| self.attacker_cell(i, defense[i], attack[i])).sum()
    }

    /// Payoff of `player` under `profile`.
    pub fn payoff(&self, player: Player, profile: &StrategyProfile) -> Result<f64> {
        match player {
            Player::Defender => self.defender_payoff(&profile.defense, &profile.attack),
            Player::Attacker => self.attacker_payoff(&profile.defense, &profile.attack),
        }
    }

    pub fn weights(&self, player: Player) -> &[f64] {
        match player {
            Player::Defender => &self.defender_weight,
            Player::Attacker => &self.attacker_weight,
        }
    }

    pub fn budget(&self, player: Player) -> f64 {
        match player {
            Player::Defender => self.defender_budget,
            Player::Attacker => self.attacker_budget,
        }
    }

    /// Whether `strategy` respects `player`'s budget (within [`FEASIBILITY_TOL`]).
    pub fn strategy_feasible(&self, player: Player, strategy: &[bool]) -> bool {
        strategy.len() == self.n
            && selection_weight(self.weights(player), strategy) <= self.budget(player) + FEASIBILITY_TOL
    }

    /// Membership in the joint outcomes space.
    pub fn is_feasible(&self, profile: &StrategyProfile) -> bool {
        self.strategy_feasible(Player::Defender, &profile.defense)
            && self.strategy_feasible(Player::Attacker, &profile.attack)
    }
}

pub(crate) fn selection_weight(weights: &[f64], selected: &[bool]) -> f64 {
    weights.iter().zip(selected).filter(|(_, &s)| s).map(|(w, _)| w).sum()
}
