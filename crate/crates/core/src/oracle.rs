//! Brute-force ground truth for small instances.
//!
//! Best responses here come from raw enumeration of every feasible
//! strategy and never touch the knapsack engine, so comparisons against
//! the solver are independent.

use crate::error::{CngError, Result};
use crate::master::{CutPool, MasterObjective};
use crate::model::{selection_weight, CngInstance, Player, StrategyProfile, FEASIBILITY_TOL};

/// Largest `n` accepted by [`enumerate_feasible`].
pub const ENUMERATION_CAP: usize = 14;
/// Largest `n` accepted by [`all_exact_ne`].
pub const NE_CAP: usize = 10;
/// A profile whose regret is at most this is an exact equilibrium.
pub const NE_TOL: f64 = 1e-9;

/// All binary vectors within budget, lexicographic with node 0 as the
/// most significant position.
pub fn enumerate_feasible(weights: &[f64], capacity: f64, n: usize) -> Result<Vec<Vec<bool>>> {
    enumerate_feasible_capped(weights, capacity, n, ENUMERATION_CAP)
}

pub fn enumerate_feasible_capped(weights: &[f64], capacity: f64, n: usize, cap: usize) -> Result<Vec<Vec<bool>>> {
    if n > cap {
        return Err(CngError::SizeLimitExceeded { n, cap });
    }
    if weights.len() != n {
        return Err(CngError::ShapeMismatch {
            field: "weights",
            expected: n,
            got: weights.len(),
        });
    }
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let v: Vec<bool> = (0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect();
        if selection_weight(weights, &v) <= capacity + FEASIBILITY_TOL {
            out.push(v);
        }
    }
    Ok(out)
}

/// Both players' strategy sets, enumerated once.
pub struct Oracle<'a> {
    inst: &'a CngInstance,
    pub defenses: Vec<Vec<bool>>,
    pub attacks: Vec<Vec<bool>>,
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a CngInstance) -> Result<Self> {
        Self::with_cap(inst, ENUMERATION_CAP)
    }

    pub fn with_cap(inst: &'a CngInstance, cap: usize) -> Result<Self> {
        Ok(Self {
            inst,
            defenses: enumerate_feasible_capped(&inst.defender_weight, inst.defender_budget, inst.n, cap)?,
            attacks: enumerate_feasible_capped(&inst.attacker_weight, inst.attacker_budget, inst.n, cap)?,
        })
    }

    pub fn defender_best_value(&self, attack: &[bool]) -> f64 {
        self.defenses
            .iter()
            .map(|x| self.inst.defender_payoff_unchecked(x, attack))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn attacker_best_value(&self, defense: &[bool]) -> f64 {
        self.attacks
            .iter()
            .map(|alpha| self.inst.attacker_payoff_unchecked(defense, alpha))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_phi(&self, profile: &StrategyProfile) -> Result<f64> {
        let fd = self.inst.payoff(Player::Defender, profile)?;
        let fa = self.inst.payoff(Player::Attacker, profile)?;
        let gd = self.defender_best_value(&profile.attack) - fd;
        let ga = self.attacker_best_value(&profile.defense) - fa;
        Ok(gd.max(ga).max(0.0))
    }

    /// Every pure equilibrium, ordered by defense then attack.
    pub fn all_exact_ne(&self) -> Vec<StrategyProfile> {
        let inst = self.inst;
        let best_d: Vec<f64> = self.attacks.iter().map(|a| self.defender_best_value(a)).collect();
        let best_a: Vec<f64> = self.defenses.iter().map(|x| self.attacker_best_value(x)).collect();
        let mut out = Vec::new();
        for (xi, x) in self.defenses.iter().enumerate() {
            for (ai, alpha) in self.attacks.iter().enumerate() {
                let fd = inst.defender_payoff_unchecked(x, alpha);
                let fa = inst.attacker_payoff_unchecked(x, alpha);
                if best_d[ai] - fd <= NE_TOL && best_a[xi] - fa <= NE_TOL {
                    out.push(StrategyProfile::new(x.clone(), alpha.clone()));
                }
            }
        }
        out
    }

    /// Maximizes `objective` over the joint outcomes space restricted to
    /// profiles satisfying every cut at slack `phi`. `None` when empty.
    pub fn best_outcome(&self, objective: MasterObjective, cuts: &CutPool, phi: f64) -> Option<(StrategyProfile, f64)> {
        let mut best: Option<(StrategyProfile, f64)> = None;
        for x in &self.defenses {
            for alpha in &self.attacks {
                let p = StrategyProfile::new(x.clone(), alpha.clone());
                if !cuts.satisfied_by(self.inst, &p, phi) {
                    continue;
                }
                let v = objective.evaluate(self.inst, &p);
                if best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((p, v));
                }
            }
        }
        best
    }
}

/// Smallest `phi` making `profile` a `phi`-equilibrium, by enumeration.
pub fn min_phi(inst: &CngInstance, profile: &StrategyProfile) -> Result<f64> {
    Oracle::new(inst)?.min_phi(profile)
}

/// Every pure equilibrium of an instance with at most [`NE_CAP`] nodes.
pub fn all_exact_ne(inst: &CngInstance) -> Result<Vec<StrategyProfile>> {
    Ok(Oracle::with_cap(inst, NE_CAP)?.all_exact_ne())
}

/// The equilibrium maximizing `objective`, first in enumeration order on ties.
pub fn best_ne(inst: &CngInstance, objective: MasterObjective) -> Result<Option<(StrategyProfile, f64)>> {
    let mut best: Option<(StrategyProfile, f64)> = None;
    for p in all_exact_ne(inst)? {
        let v = objective.evaluate(inst, &p);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((p, v));
        }
    }
    Ok(best)
}
