//! Cutting-plane equilibrium selection.
//!
//! Each round solves the master problem, asks both players for a best
//! response to its optimum and either adds the violated equilibrium
//! inequality (defender checked first) or stops. An infeasible master means
//! no equilibrium survives at the current slack, so the slack bound grows
//! by `phi_increment` and the cut pool is kept. Every master optimum is
//! certified, and the one with the smallest regret (then the best
//! objective) is returned if a limit is hit.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use log::{debug, info};

use crate::bestresponse::{regrets, Regrets};
use crate::error::{CngError, Result};
use crate::master::{solve_master_from, Cut, CutPool, IncrementalMaster, MasterObjective, MasterOutcome, SearchBudget};
use crate::model::{CngInstance, Player, StrategyProfile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub objective: MasterObjective,
    pub time_limit: Duration,
    pub max_iterations: usize,
    pub phi_start: f64,
    pub phi_increment: f64,
    pub ne_tolerance: f64,
    pub cut_rule: CutRule,
}

/// Which violated equilibrium inequalities a round adds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutRule {
    /// The defender's if it deviates, otherwise the attacker's.
    #[default]
    FirstViolated,
    /// Every player that deviates contributes its cut.
    AllViolated,
}

impl CutRule {
    pub fn as_str(self) -> &'static str {
        match self {
            CutRule::FirstViolated => "first",
            CutRule::AllViolated => "all",
        }
    }
}

impl std::str::FromStr for CutRule {
    type Err = CngError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(CutRule::FirstViolated),
            "all" => Ok(CutRule::AllViolated),
            other => Err(CngError::InvalidConfig(format!(
                "unknown cut rule '{other}' (expected first or all)"
            ))),
        }
    }
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            objective: MasterObjective::DefenderPayoff,
            time_limit: Duration::from_secs(100),
            max_iterations: 1_000_000,
            phi_start: 0.0,
            phi_increment: 1.0,
            ne_tolerance: 1e-6,
            cut_rule: CutRule::FirstViolated,
        }
    }
}

impl SolveConfig {
    pub fn with_objective(objective: MasterObjective) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_limit.is_zero() {
            return Err(CngError::InvalidConfig("time limit must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(CngError::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.phi_start.is_finite() && self.phi_start >= 0.0) {
            return Err(CngError::InvalidConfig("phi_start must be finite and >= 0".into()));
        }
        if !(self.phi_increment.is_finite() && self.phi_increment > 0.0) {
            return Err(CngError::InvalidConfig("phi_increment must be finite and > 0".into()));
        }
        if !(self.ne_tolerance.is_finite() && self.ne_tolerance >= 0.0) {
            return Err(CngError::InvalidConfig("ne_tolerance must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    ProvedOptimalNe,
    IncumbentOnLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::ProvedOptimalNe => "PROVED_OPTIMAL_NE",
            SolveStatus::IncumbentOnLimit => "INCUMBENT_ON_LIMIT",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    /// Largest profitable deviation of either player, certified by best responses.
    pub phi: f64,
    pub exact: bool,
    pub defender_value: f64,
    pub attacker_value: f64,
    pub objective: MasterObjective,
    pub objective_value: f64,
    pub iterations: usize,
    pub cuts_added: usize,
    pub phi_ub_final: f64,
    pub wall_time: Duration,
    pub status: SolveStatus,
    pub cut_pool: CutPool,
}

struct Candidate {
    profile: StrategyProfile,
    regrets: Regrets,
    phi: f64,
    value: f64,
}

impl Candidate {
    fn new(inst: &CngInstance, objective: MasterObjective, profile: StrategyProfile) -> Result<Self> {
        let regrets = regrets(inst, &profile)?;
        Ok(Self {
            phi: regrets.phi(),
            value: objective.evaluate(inst, &profile),
            profile,
            regrets,
        })
    }

    fn beats(&self, other: &Candidate) -> bool {
        self.phi < other.phi || (self.phi == other.phi && self.value > other.value)
    }
}

/// Profiles known to be feasible; `live` holds those satisfying every cut.
struct WarmStarts {
    archive: Vec<StrategyProfile>,
    known: HashSet<StrategyProfile>,
    live: Vec<usize>,
}

impl WarmStarts {
    fn new() -> Self {
        Self {
            archive: Vec::new(),
            known: HashSet::new(),
            live: Vec::new(),
        }
    }

    fn offer(&mut self, inst: &CngInstance, pool: &CutPool, phi: f64, p: StrategyProfile) {
        if !inst.is_feasible(&p) || self.known.contains(&p) {
            return;
        }
        self.known.insert(p.clone());
        let ok = pool.satisfied_by(inst, &p, phi);
        self.archive.push(p);
        if ok {
            self.live.push(self.archive.len() - 1);
        }
    }

    fn on_cut(&mut self, inst: &CngInstance, cut: &Cut, phi: f64) {
        let archive = &self.archive;
        self.live.retain(|&i| cut.holds(inst, &archive[i], phi));
    }

    fn on_slack(&mut self, inst: &CngInstance, pool: &CutPool, phi: f64) {
        self.live = (0..self.archive.len())
            .filter(|&i| pool.satisfied_by(inst, &self.archive[i], phi))
            .collect();
    }

    fn best(&self, inst: &CngInstance, objective: MasterObjective) -> Option<&StrategyProfile> {
        let mut best: Option<(&StrategyProfile, f64)> = None;
        for &i in &self.live {
            let p = &self.archive[i];
            let v = objective.evaluate(inst, p);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((p, v));
            }
        }
        best.map(|(p, _)| p)
    }
}

/// Computes the objective-best (approximate) pure equilibrium.
pub fn solve(inst: &CngInstance, config: &SolveConfig) -> Result<EquilibriumResult> {
    inst.validate().map_err(|e| CngError::InvalidInstance(Box::new(e)))?;
    config.validate()?;

    let started = Instant::now();
    let deadline = started.checked_add(config.time_limit);
    let budget = SearchBudget {
        deadline,
        node_limit: None,
    };
    let objective = config.objective;
    let tol = config.ne_tolerance;

    let mut master = IncrementalMaster::new(inst, objective, config.phi_start)?;
    let mut phi_ub = config.phi_start;
    let mut iterations = 0usize;
    let mut incumbent: Option<Candidate> = None;
    let mut starts = WarmStarts::new();

    let out_of_time = |now: Instant| deadline.is_some_and(|d| now >= d);

    let finish =
        |cand: Candidate, status: SolveStatus, iterations: usize, phi_ub: f64, pool: CutPool| -> EquilibriumResult {
            EquilibriumResult {
                exact: cand.phi <= tol,
                phi: cand.phi,
                defender_value: cand.regrets.defender_value,
                attacker_value: cand.regrets.attacker_value,
                objective,
                objective_value: cand.value,
                iterations,
                cuts_added: pool.len(),
                phi_ub_final: phi_ub,
                wall_time: started.elapsed(),
                status,
                cut_pool: pool,
                profile: cand.profile,
            }
        };

    loop {
        if iterations >= config.max_iterations || out_of_time(Instant::now()) {
            break;
        }
        iterations += 1;

        let warm = starts.best(inst, objective).cloned();
        let run = master.solve(budget, warm.as_ref())?;
        let (profile, value) = match run.outcome {
            MasterOutcome::Infeasible => {
                phi_ub += config.phi_increment;
                master.set_phi_ub(phi_ub)?;
                debug!("iteration {iterations}: master infeasible, phi_ub -> {phi_ub}");
                starts.on_slack(inst, master.cuts(), phi_ub);
                continue;
            }
            MasterOutcome::Limit { best } => {
                if let Some((p, _)) = best {
                    let cand = Candidate::new(inst, objective, p)?;
                    if incumbent.as_ref().is_none_or(|inc| cand.beats(inc)) {
                        incumbent = Some(cand);
                    }
                }
                break;
            }
            MasterOutcome::Optimal { profile, value } => (profile, value),
        };

        let cand = Candidate::new(inst, objective, profile)?;
        debug!(
            "iteration {iterations}: value {value:.6}, regrets d {:.6} a {:.6}, {} nodes, {} cuts",
            cand.regrets.defender_gap(),
            cand.regrets.attacker_gap(),
            run.nodes,
            master.cuts().len()
        );

        let dev_d = cand.regrets.defender_gap() > phi_ub + tol;
        let dev_a = cand.regrets.attacker_gap() > phi_ub + tol;
        let x_dev = cand.regrets.defender_response.strategy.clone();
        let a_dev = cand.regrets.attacker_response.strategy.clone();
        let bar = cand.profile.clone();

        if !dev_d && !dev_a {
            info!(
                "equilibrium after {iterations} iterations, {} cuts, phi {:.6}",
                master.cuts().len(),
                cand.phi
            );
            return Ok(finish(
                cand,
                SolveStatus::ProvedOptimalNe,
                iterations,
                phi_ub,
                master.into_cuts(),
            ));
        }

        let mut cuts = Vec::with_capacity(2);
        if dev_d {
            cuts.push(Cut::new(inst, Player::Defender, x_dev.clone())?);
        }
        if dev_a && (cuts.is_empty() || config.cut_rule == CutRule::AllViolated) {
            cuts.push(Cut::new(inst, Player::Attacker, a_dev.clone())?);
        }
        if incumbent.as_ref().is_none_or(|inc| cand.beats(inc)) {
            incumbent = Some(cand);
        }
        for cut in cuts {
            starts.on_cut(inst, &cut, phi_ub);
            master.add_cut(cut)?;
        }

        let pool = master.cuts();
        starts.offer(
            inst,
            pool,
            phi_ub,
            StrategyProfile::new(x_dev.clone(), bar.attack.clone()),
        );
        starts.offer(
            inst,
            pool,
            phi_ub,
            StrategyProfile::new(bar.defense.clone(), a_dev.clone()),
        );
        starts.offer(inst, pool, phi_ub, StrategyProfile::new(x_dev, a_dev));
    }

    let cand = match incumbent {
        Some(c) => c,
        None => {
            let fallback = solve_master_from(inst, &CutPool::new(), objective, 0.0, SearchBudget::unlimited(), None)?;
            match fallback.outcome {
                MasterOutcome::Optimal { profile, .. } => Candidate::new(inst, objective, profile)?,
                _ => Candidate::new(inst, objective, StrategyProfile::empty(inst.n))?,
            }
        }
    };
    info!(
        "limit reached after {iterations} iterations; incumbent phi {:.6}",
        cand.phi
    );
    Ok(finish(
        cand,
        SolveStatus::IncumbentOnLimit,
        iterations,
        phi_ub,
        master.into_cuts(),
    ))
}
