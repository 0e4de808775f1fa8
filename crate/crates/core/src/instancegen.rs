//! Synthetic instances and traffic-snapshot ingestion.
//!
//! The random generator is ChaCha8 seeded through `seed_from_u64`, which is
//! platform independent; vectors are drawn in the order `a, d, base, r_a,
//! r_d`, each entry uniform on the integers `1..=25`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CngError, Result};
use crate::model::{CngInstance, Edge};

pub const GAMMAS: [f64; 2] = [0.0, 0.1];
pub const ETAS: [f64; 2] = [0.6, 0.8];
pub const DEFENDER_FRACTIONS: [f64; 2] = [0.30, 0.75];
pub const ATTACKER_FRACTIONS: [f64; 3] = [0.03, 0.10, 0.30];

const ENTRY_MAX: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub gamma: f64,
    pub eta: f64,
    pub defender_budget_frac: f64,
    pub attacker_budget_frac: f64,
    pub seed: u64,
    /// Restrict every parameter to the published grid values.
    pub paper_grid: bool,
}

impl GenSpec {
    /// Every combination of the parameter grid for one network size.
    /// All combinations share the same seed, hence the same random vectors.
    pub fn grid(n: usize, seed: u64) -> Vec<GenSpec> {
        let mut out = Vec::with_capacity(24);
        for gamma in GAMMAS {
            for eta in ETAS {
                for dfrac in DEFENDER_FRACTIONS {
                    for afrac in ATTACKER_FRACTIONS {
                        out.push(GenSpec {
                            n,
                            gamma,
                            eta,
                            defender_budget_frac: dfrac,
                            attacker_budget_frac: afrac,
                            seed,
                            paper_grid: true,
                        });
                    }
                }
            }
        }
        out
    }

    /// A short file-name friendly label, e.g. `n10_g0.1_e0.6_d0.3_a0.03_s7`.
    pub fn label(&self) -> String {
        format!(
            "n{}_g{}_e{}_d{}_a{}_s{}",
            self.n, self.gamma, self.eta, self.defender_budget_frac, self.attacker_budget_frac, self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CngError::InvalidConfig("n must be at least 1".into()));
        }
        if self.paper_grid {
            let check = |name: &str, v: f64, set: &[f64]| {
                if set.contains(&v) {
                    Ok(())
                } else {
                    Err(CngError::InvalidConfig(format!("{name} = {v} is not one of {set:?}")))
                }
            };
            check("gamma", self.gamma, &GAMMAS)?;
            check("eta", self.eta, &ETAS)?;
            check(
                "defender budget fraction",
                self.defender_budget_frac,
                &DEFENDER_FRACTIONS,
            )?;
            check(
                "attacker budget fraction",
                self.attacker_budget_frac,
                &ATTACKER_FRACTIONS,
            )?;
        }
        for (name, v) in [
            ("defender budget fraction", self.defender_budget_frac),
            ("attacker budget fraction", self.attacker_budget_frac),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CngError::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Derived factors: `epsilon = 1.25 eta`, `delta = 0.8 eta`.
fn factors(eta: f64) -> (f64, f64) {
    (0.8 * eta, 1.25 * eta)
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(1..=ENTRY_MAX)).collect()
}

pub fn generate(spec: &GenSpec) -> Result<CngInstance> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = draw(&mut rng, n);
    let d = draw(&mut rng, n);
    let base = draw(&mut rng, n);
    let ra = draw(&mut rng, n);
    let rd = draw(&mut rng, n);

    let to_f = |v: &[u32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
    let attacker_weight = to_f(&a);
    let defender_weight = to_f(&d);
    let attacker_profit = base.iter().zip(&ra).map(|(b, r)| f64::from(b + r)).collect();
    let defender_profit = base.iter().zip(&rd).map(|(b, r)| f64::from(b + r)).collect();
    let (delta, epsilon) = factors(spec.eta);

    let inst = CngInstance {
        n,
        defender_profit,
        attacker_profit,
        defender_budget: spec.defender_budget_frac * defender_weight.iter().sum::<f64>(),
        attacker_budget: spec.attacker_budget_frac * attacker_weight.iter().sum::<f64>(),
        defender_weight,
        attacker_weight,
        delta,
        eta: spec.eta,
        epsilon,
        gamma: spec.gamma,
        edges: None,
    };
    inst.validate()?;
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub name: String,
    pub role: String,
}

/// An edge endpoint, given either by 0-based index or by node name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Endpoint {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSnapshot {
    pub nodes: Vec<SnapshotNode>,
    pub edges: Vec<(Endpoint, Endpoint, f64)>,
}

/// Multipliers applied to a node's profit and weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleAdjustment {
    pub profit: f64,
    pub weight: f64,
}

impl RoleAdjustment {
    pub const NEUTRAL: RoleAdjustment = RoleAdjustment {
        profit: 1.0,
        weight: 1.0,
    };
}

/// Ingestion settings; fields missing from a JSON file take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestParams {
    pub defender_roles: BTreeMap<String, RoleAdjustment>,
    pub attacker_roles: BTreeMap<String, RoleAdjustment>,
    pub gamma: f64,
    pub eta: f64,
    pub defender_budget_frac: f64,
    pub attacker_budget_frac: f64,
}

const CRITICAL_ROLES: [&str; 3] = ["management", "router", "gateway"];
const ORDINARY_ROLES: [&str; 4] = ["server", "service", "host", "external"];

impl Default for IngestParams {
    /// Critical infrastructure roles get `(2.0, 1.5)` on the defender side;
    /// everything else, and the whole attacker table, is neutral.
    fn default() -> Self {
        let critical = RoleAdjustment {
            profit: 2.0,
            weight: 1.5,
        };
        let mut defender_roles = BTreeMap::new();
        let mut attacker_roles = BTreeMap::new();
        for r in CRITICAL_ROLES {
            defender_roles.insert(r.to_string(), critical);
            attacker_roles.insert(r.to_string(), RoleAdjustment::NEUTRAL);
        }
        for r in ORDINARY_ROLES {
            defender_roles.insert(r.to_string(), RoleAdjustment::NEUTRAL);
            attacker_roles.insert(r.to_string(), RoleAdjustment::NEUTRAL);
        }
        Self {
            defender_roles,
            attacker_roles,
            gamma: 0.0,
            eta: 0.6,
            defender_budget_frac: 0.30,
            attacker_budget_frac: 0.10,
        }
    }
}

fn resolve(ep: &Endpoint, names: &BTreeMap<&str, usize>, n: usize) -> Result<usize> {
    match ep {
        Endpoint::Index(i) if *i < n => Ok(*i),
        Endpoint::Index(i) => Err(CngError::IndexOutOfRange { index: *i, n }),
        Endpoint::Name(s) => names
            .get(s.as_str())
            .copied()
            .ok_or_else(|| CngError::InvalidConfig(format!("edge references unknown node '{s}'"))),
    }
}

/// Builds an instance from a traffic snapshot: profits are the traffic
/// through each node (floor 1), weights are `log2(max(profit, 2))`, then
/// the role multipliers are applied per player.
pub fn ingest(snapshot: &TrafficSnapshot, params: &IngestParams) -> Result<CngInstance> {
    let n = snapshot.nodes.len();
    if n == 0 {
        return Err(CngError::EmptySnapshot);
    }
    let names: BTreeMap<&str, usize> = snapshot
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| (node.name.as_str(), i))
        .collect();

    // collapse parallel edges by summation
    let mut collapsed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (u, v, t) in &snapshot.edges {
        if !(t.is_finite() && *t >= 0.0) {
            return Err(CngError::RangeViolation {
                field: "traffic",
                value: *t,
                range: "finite and >= 0",
            });
        }
        let (u, v) = (resolve(u, &names, n)?, resolve(v, &names, n)?);
        *collapsed.entry((u.min(v), u.max(v))).or_insert(0.0) += t;
    }
    let mut traffic = vec![0.0; n];
    for (&(u, v), &t) in &collapsed {
        traffic[u] += t;
        if v != u {
            traffic[v] += t;
        }
    }

    let mut defender_profit = Vec::with_capacity(n);
    let mut attacker_profit = Vec::with_capacity(n);
    let mut defender_weight = Vec::with_capacity(n);
    let mut attacker_weight = Vec::with_capacity(n);
    for (node, &t) in snapshot.nodes.iter().zip(&traffic) {
        let profit = if t > 0.0 { t } else { 1.0 };
        let weight = profit.max(2.0).log2();
        let lookup = |table: &BTreeMap<String, RoleAdjustment>| {
            table
                .get(&node.role)
                .copied()
                .ok_or_else(|| CngError::UnknownRole(node.role.clone()))
        };
        let da = lookup(&params.defender_roles)?;
        let aa = lookup(&params.attacker_roles)?;
        defender_profit.push(profit * da.profit);
        defender_weight.push(weight * da.weight);
        attacker_profit.push(profit * aa.profit);
        attacker_weight.push(weight * aa.weight);
    }

    let (delta, epsilon) = factors(params.eta);
    let edges: Vec<Edge> = collapsed.into_iter().map(|((u, v), t)| (u, v, t)).collect();
    let inst = CngInstance {
        n,
        defender_budget: params.defender_budget_frac * defender_weight.iter().sum::<f64>(),
        attacker_budget: params.attacker_budget_frac * attacker_weight.iter().sum::<f64>(),
        defender_profit,
        attacker_profit,
        defender_weight,
        attacker_weight,
        delta,
        eta: params.eta,
        epsilon,
        gamma: params.gamma,
        edges: Some(edges),
    };
    inst.validate()?;
    Ok(inst)
}
