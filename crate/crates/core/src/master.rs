//! Selection over the joint outcomes space subject to equilibrium cuts.
//!
//! The master problem maximizes an objective over all budget-feasible
//! profiles that satisfy every accumulated equilibrium inequality
//!
//! ```text
//! f^owner(deviation, opponent) <= f^owner(x, alpha) + phi_ub
//! ```
//!
//! Since `phi` has no objective coefficient, fixing it at its upper bound
//! is the most permissive choice, so it enters only as the cut slack.
//!
//! Every term is node-separable, so each node picks one of four
//! (protected, attacked) cells and the search is a depth-first
//! branch-and-bound over nodes. Bounds at a partial assignment:
//!
//! * per-cut feasibility: decided violation plus the most slackening cell
//!   of every undecided node must stay within `phi_ub`;
//! * objective: the best undecided cells, tightened by a fractional
//!   knapsack on each residual budget;
//! * a Lagrangian bound with multipliers fitted once at the root by
//!   subgradient descent, valid at every node.
//!
//! The same problem can be written as a MILP through the product
//! linearization `z_i = x_i * alpha_i` with `z >= x + alpha - 1`,
//! `z <= x`, `z <= alpha`; every cell value is then linear in
//! `(x_i, alpha_i, z_i)`.

use std::collections::HashSet;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CngError, Result};
use crate::knapsack::ratio_order;
use crate::model::{CngInstance, Player, StrategyProfile, FEASIBILITY_TOL};

/// Slack allowed on cut satisfaction and bound pruning.
pub const CUT_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-9;
const CLOCK_STRIDE: u64 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterObjective {
    DefenderPayoff,
    AttackerPayoff,
    SocialWelfare,
}

impl MasterObjective {
    pub fn as_str(self) -> &'static str {
        match self {
            MasterObjective::DefenderPayoff => "defender",
            MasterObjective::AttackerPayoff => "attacker",
            MasterObjective::SocialWelfare => "social",
        }
    }

    #[inline]
    pub(crate) fn cell(self, inst: &CngInstance, i: usize, defended: bool, attacked: bool) -> f64 {
        match self {
            MasterObjective::DefenderPayoff => inst.defender_cell(i, defended, attacked),
            MasterObjective::AttackerPayoff => inst.attacker_cell(i, defended, attacked),
            MasterObjective::SocialWelfare => {
                inst.defender_cell(i, defended, attacked) + inst.attacker_cell(i, defended, attacked)
            }
        }
    }

    /// Objective value of a profile; the profile must have length `n`.
    pub fn evaluate(self, inst: &CngInstance, profile: &StrategyProfile) -> f64 {
        let (x, a) = (&profile.defense, &profile.attack);
        match self {
            MasterObjective::DefenderPayoff => inst.defender_payoff_unchecked(x, a),
            MasterObjective::AttackerPayoff => inst.attacker_payoff_unchecked(x, a),
            MasterObjective::SocialWelfare => {
                inst.defender_payoff_unchecked(x, a) + inst.attacker_payoff_unchecked(x, a)
            }
        }
    }
}

impl std::fmt::Display for MasterObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MasterObjective {
    type Err = CngError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "defender" => Ok(MasterObjective::DefenderPayoff),
            "attacker" => Ok(MasterObjective::AttackerPayoff),
            "social" => Ok(MasterObjective::SocialWelfare),
            other => Err(CngError::InvalidConfig(format!("unknown objective '{other}'"))),
        }
    }
}

/// An equilibrium inequality anchored to a stored deviation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cut {
    pub owner: Player,
    pub deviation: Vec<bool>,
}

impl Cut {
    /// Builds a cut, checking that the deviation is feasible for its owner.
    pub fn new(inst: &CngInstance, owner: Player, deviation: Vec<bool>) -> Result<Self> {
        if deviation.len() != inst.n {
            return Err(CngError::ShapeMismatch {
                field: "deviation",
                expected: inst.n,
                got: deviation.len(),
            });
        }
        if !inst.strategy_feasible(owner, &deviation) {
            return Err(CngError::InvalidConfig(format!(
                "{owner:?} deviation exceeds its budget"
            )));
        }
        Ok(Self { owner, deviation })
    }

    /// `f^owner(deviation, opponent) - f^owner(profile)`.
    pub fn violation(&self, inst: &CngInstance, profile: &StrategyProfile) -> f64 {
        match self.owner {
            Player::Defender => {
                inst.defender_payoff_unchecked(&self.deviation, &profile.attack)
                    - inst.defender_payoff_unchecked(&profile.defense, &profile.attack)
            }
            Player::Attacker => {
                inst.attacker_payoff_unchecked(&profile.defense, &self.deviation)
                    - inst.attacker_payoff_unchecked(&profile.defense, &profile.attack)
            }
        }
    }

    pub fn holds(&self, inst: &CngInstance, profile: &StrategyProfile, phi: f64) -> bool {
        self.violation(inst, profile) <= phi + CUT_TOL
    }

    /// Per-cell contribution of node `i` to the violation.
    #[inline]
    fn cell(&self, inst: &CngInstance, i: usize, defended: bool, attacked: bool) -> f64 {
        match self.owner {
            Player::Defender => {
                inst.defender_cell(i, self.deviation[i], attacked) - inst.defender_cell(i, defended, attacked)
            }
            Player::Attacker => {
                inst.attacker_cell(i, defended, self.deviation[i]) - inst.attacker_cell(i, defended, attacked)
            }
        }
    }
}

/// Ordered, duplicate-free collection of cuts.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<Cut>,
    seen: HashSet<Cut>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a cut; returns `false` if it was already present.
    pub fn add(&mut self, cut: Cut) -> bool {
        if self.seen.contains(&cut) {
            return false;
        }
        self.seen.insert(cut.clone());
        self.cuts.push(cut);
        true
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cut> {
        self.cuts.iter()
    }

    pub fn satisfied_by(&self, inst: &CngInstance, profile: &StrategyProfile, phi: f64) -> bool {
        self.cuts.iter().all(|c| c.holds(inst, profile, phi))
    }
}

impl<'a> IntoIterator for &'a CutPool {
    type Item = &'a Cut;
    type IntoIter = std::slice::Iter<'a, Cut>;

    fn into_iter(self) -> Self::IntoIter {
        self.cuts.iter()
    }
}

/// Limits on a single master solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchBudget {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MasterOutcome {
    Optimal { profile: StrategyProfile, value: f64 },
    Infeasible,
    Limit { best: Option<(StrategyProfile, f64)> },
}

#[derive(Debug, Clone)]
pub struct MasterRun {
    pub outcome: MasterOutcome,
    pub nodes: u64,
}

/// Solves the master problem from scratch.
pub fn solve_master(
    inst: &CngInstance,
    cuts: &CutPool,
    objective: MasterObjective,
    phi_ub: f64,
    budget: SearchBudget,
) -> Result<MasterOutcome> {
    solve_master_from(inst, cuts, objective, phi_ub, budget, None).map(|r| r.outcome)
}

/// Solves the master problem, seeding the incumbent with `start` when it
/// is feasible and satisfies every cut.
pub fn solve_master_from(
    inst: &CngInstance,
    cuts: &CutPool,
    objective: MasterObjective,
    phi_ub: f64,
    budget: SearchBudget,
    start: Option<&StrategyProfile>,
) -> Result<MasterRun> {
    check_inputs(inst, cuts, phi_ub)?;
    let mut search = Search::new(inst, cuts, objective, phi_ub, budget);
    search.seed_checked(start, cuts);
    search.run();
    Ok(search.dfs_result())
}

fn check_phi(phi_ub: f64) -> Result<()> {
    if phi_ub.is_finite() && phi_ub >= 0.0 {
        Ok(())
    } else {
        Err(CngError::RangeViolation {
            field: "phi_ub",
            value: phi_ub,
            range: "finite and >= 0",
        })
    }
}

fn check_cut(inst: &CngInstance, cut: &Cut) -> Result<()> {
    if cut.deviation.len() == inst.n {
        Ok(())
    } else {
        Err(CngError::ShapeMismatch {
            field: "deviation",
            expected: inst.n,
            got: cut.deviation.len(),
        })
    }
}

fn check_inputs(inst: &CngInstance, cuts: &CutPool, phi_ub: f64) -> Result<()> {
    inst.validate()?;
    check_phi(phi_ub)?;
    cuts.iter().try_for_each(|c| check_cut(inst, c))
}

/// Nodes kept by a persistent frontier before it is dropped in favour of
/// plain depth-first search.
const FRONTIER_CAP: usize = 1 << 23;

/// Parent id in the high 30 bits, cell in the low 2.
#[derive(Debug, Clone, Copy)]
struct TreeNode(u32);

impl TreeNode {
    fn new(parent: u32, cell: usize) -> Self {
        Self(parent << 2 | cell as u32)
    }

    fn parent(self) -> u32 {
        self.0 >> 2
    }

    fn cell(self) -> usize {
        (self.0 & 3) as usize
    }
}

/// Open node; `stamp` is the number of cuts its bound has seen.
#[derive(Debug, Clone, Copy)]
struct Open {
    ub: f64,
    id: u32,
    depth: u16,
    stamp: u16,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // highest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ub
            .total_cmp(&other.ub)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn stamp_of(k: usize) -> u16 {
    u16::try_from(k).unwrap_or(u16::MAX)
}

/// Best-first search tree kept between solves. Adding cuts only shrinks
/// the feasible set, so every stored bound stays valid; nodes whose bound
/// predates some cuts are re-examined when they surface.
#[derive(Debug)]
struct Frontier {
    nodes: Vec<TreeNode>,
    open: std::collections::BinaryHeap<Open>,
}

impl Frontier {
    fn new() -> Self {
        let mut open = std::collections::BinaryHeap::new();
        open.push(Open {
            ub: f64::INFINITY,
            id: 0,
            depth: 0,
            stamp: 0,
        });
        Self {
            nodes: vec![TreeNode::new(0, 0)],
            open,
        }
    }
}

enum Step {
    Optimal,
    Infeasible,
    Limit,
    Overflow,
}

/// A master problem at fixed slack that is re-solved as cuts arrive,
/// reusing its search tree.
#[derive(Debug)]
pub struct IncrementalMaster<'a> {
    inst: &'a CngInstance,
    objective: MasterObjective,
    phi_ub: f64,
    cuts: CutPool,
    /// `None` once the tree outgrew its cap; plain DFS until the slack changes.
    frontier: Option<Frontier>,
}

impl<'a> IncrementalMaster<'a> {
    pub fn new(inst: &'a CngInstance, objective: MasterObjective, phi_ub: f64) -> Result<Self> {
        inst.validate()?;
        check_phi(phi_ub)?;
        Ok(Self {
            inst,
            objective,
            phi_ub,
            cuts: CutPool::new(),
            frontier: Some(Frontier::new()),
        })
    }

    pub fn phi_ub(&self) -> f64 {
        self.phi_ub
    }

    /// Changes the slack. A larger slack re-admits pruned profiles, so the
    /// search tree starts over.
    pub fn set_phi_ub(&mut self, phi_ub: f64) -> Result<()> {
        check_phi(phi_ub)?;
        self.phi_ub = phi_ub;
        self.frontier = Some(Frontier::new());
        Ok(())
    }

    /// Adds a cut; returns `false` if it was already present.
    pub fn add_cut(&mut self, cut: Cut) -> Result<bool> {
        check_cut(self.inst, &cut)?;
        Ok(self.cuts.add(cut))
    }

    pub fn cuts(&self) -> &CutPool {
        &self.cuts
    }

    pub fn into_cuts(self) -> CutPool {
        self.cuts
    }

    /// Solves the master for the current cuts. `start`, when admissible,
    /// is what a limited run falls back on.
    pub fn solve(&mut self, budget: SearchBudget, start: Option<&StrategyProfile>) -> Result<MasterRun> {
        let mut search = Search::new(self.inst, &self.cuts, self.objective, self.phi_ub, budget);
        search.seed_checked(start, &self.cuts);
        if self.inst.n >= usize::from(u16::MAX) || self.cuts.len() >= usize::from(u16::MAX) {
            // depths and cut stamps are stored as u16
            self.frontier = None;
        }
        let Some(frontier) = self.frontier.as_mut() else {
            search.run();
            return Ok(search.dfs_result());
        };
        search.fit_multipliers();
        let mut step = search.best_first(frontier);
        if matches!(step, Step::Overflow) {
            // old nodes carry bounds from fewer cuts; a rebuilt tree is far smaller
            log::debug!("search tree exceeded {FRONTIER_CAP} nodes; rebuilding");
            *frontier = Frontier::new();
            step = search.best_first(frontier);
        }
        let outcome = match step {
            Step::Optimal => {
                let (profile, value) = search.best_profile().expect("optimal leaf recorded");
                MasterOutcome::Optimal { profile, value }
            }
            Step::Infeasible => MasterOutcome::Infeasible,
            Step::Limit => MasterOutcome::Limit {
                best: search.best_profile(),
            },
            Step::Overflow => {
                log::debug!("rebuilt tree exceeded {FRONTIER_CAP} nodes; continuing depth-first");
                self.frontier = None;
                let spent = search.nodes;
                let mut dfs = Search::new(self.inst, &self.cuts, self.objective, self.phi_ub, budget);
                dfs.seed_checked(start, &self.cuts);
                dfs.run();
                let mut run = dfs.dfs_result();
                run.nodes += spent;
                return Ok(run);
            }
        };
        Ok(MasterRun {
            outcome,
            nodes: search.nodes,
        })
    }
}

#[inline]
fn cell_bits(c: usize) -> (bool, bool) {
    (c & 2 != 0, c & 1 != 0)
}

/// Multipliers for the Lagrangian bound: one per cut, one per budget.
struct Multipliers {
    cuts: Vec<f64>,
    defender: f64,
    attacker: f64,
}

/// Fractional knapsack bound data for one budget.
struct FracBound {
    /// Suffix sums of the per-position base (best cell without this budget).
    base_suffix: Vec<f64>,
    /// `(position, gain, weight)` sorted by gain/weight.
    items: Vec<(usize, f64, f64)>,
}

impl FracBound {
    fn new(obj: &[[f64; 4]], weight: &[f64], defender_side: bool) -> Self {
        let n = obj.len();
        // cells that do not use this budget vs cells that do
        let (free, paid) = if defender_side {
            ([0, 1], [2, 3])
        } else {
            ([0, 2], [1, 3])
        };
        let mut base_suffix = vec![0.0; n + 1];
        let mut gains = vec![0.0; n];
        for pos in (0..n).rev() {
            let base = obj[pos][free[0]].max(obj[pos][free[1]]);
            let top = obj[pos][paid[0]].max(obj[pos][paid[1]]);
            base_suffix[pos] = base_suffix[pos + 1] + base;
            gains[pos] = top - base;
        }
        let mut idx: Vec<usize> = (0..n).filter(|&p| gains[p] > 0.0).collect();
        ratio_order(&gains, weight, &mut idx);
        let items = idx.into_iter().map(|p| (p, gains[p], weight[p])).collect();
        Self { base_suffix, items }
    }

    fn bound(&self, depth: usize, residual: f64) -> f64 {
        let mut room = residual.max(0.0);
        let mut extra = 0.0;
        for &(pos, gain, w) in &self.items {
            if pos < depth {
                continue;
            }
            if w <= room {
                room -= w;
                extra += gain;
            } else {
                extra += gain * room / w;
                break;
            }
        }
        self.base_suffix[depth] + extra
    }
}

struct Search<'a> {
    inst: &'a CngInstance,
    objective: MasterObjective,
    n: usize,
    k: usize,
    phi: f64,
    budget: SearchBudget,
    /// position -> node
    order: Vec<usize>,
    obj: Vec<[f64; 4]>,
    dw: Vec<f64>,
    aw: Vec<f64>,
    /// `[pos * k + cut][cell]`
    cut_g: Vec<[f64; 4]>,
    /// `[pos * k + cut]`, length `(n + 1) * k`
    cut_suffix_min: Vec<f64>,
    obj_suffix_max: Vec<f64>,
    obj_suffix_min: Vec<f64>,
    frac_d: FracBound,
    frac_a: FracBound,
    /// Budget-aware lower bounds on each cut's remaining violation, stored
    /// as upper bounds on its negation: `[cut]`, defender then attacker.
    cut_frac_d: Vec<FracBound>,
    cut_frac_a: Vec<FracBound>,
    lagrange: Option<Lagrange>,
    cell_order: Vec<[usize; 4]>,

    // mutable state
    cells: Vec<usize>,
    viol: Vec<f64>,
    nodes: u64,
    aborted: bool,
    incumbent: Option<(f64, Vec<usize>)>,
}

struct Lagrange {
    mult: Multipliers,
    /// per (pos, cell): multiplier-weighted cut contribution
    weighted_g: Vec<[f64; 4]>,
    suffix_max: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a CngInstance, cuts: &CutPool, objective: MasterObjective, phi: f64, budget: SearchBudget) -> Self {
        let n = inst.n;
        let k = cuts.len();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            let si = inst.defender_profit[i] + inst.attacker_profit[i];
            let sj = inst.defender_profit[j] + inst.attacker_profit[j];
            sj.partial_cmp(&si).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
        });

        let mut obj = Vec::with_capacity(n);
        let mut cut_g = Vec::with_capacity(n * k);
        for &node in &order {
            let mut row = [0.0; 4];
            for (c, v) in row.iter_mut().enumerate() {
                let (x, a) = cell_bits(c);
                *v = objective.cell(inst, node, x, a);
            }
            obj.push(row);
            for cut in cuts {
                let mut g = [0.0; 4];
                for (c, v) in g.iter_mut().enumerate() {
                    let (x, a) = cell_bits(c);
                    *v = cut.cell(inst, node, x, a);
                }
                cut_g.push(g);
            }
        }
        let dw: Vec<f64> = order.iter().map(|&i| inst.defender_weight[i]).collect();
        let aw: Vec<f64> = order.iter().map(|&i| inst.attacker_weight[i]).collect();

        let mut cut_suffix_min = vec![0.0; (n + 1) * k];
        for pos in (0..n).rev() {
            for j in 0..k {
                let g = &cut_g[pos * k + j];
                let m = g.iter().copied().fold(f64::INFINITY, f64::min);
                cut_suffix_min[pos * k + j] = cut_suffix_min[(pos + 1) * k + j] + m;
            }
        }
        let mut obj_suffix_max = vec![0.0; n + 1];
        let mut obj_suffix_min = vec![0.0; n + 1];
        for pos in (0..n).rev() {
            let row = &obj[pos];
            obj_suffix_max[pos] = obj_suffix_max[pos + 1] + row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            obj_suffix_min[pos] = obj_suffix_min[pos + 1] + row.iter().copied().fold(f64::INFINITY, f64::min);
        }

        let frac_d = FracBound::new(&obj, &dw, true);
        let frac_a = FracBound::new(&obj, &aw, false);
        let mut cut_frac_d = Vec::with_capacity(k);
        let mut cut_frac_a = Vec::with_capacity(k);
        for j in 0..k {
            let neg: Vec<[f64; 4]> = (0..n).map(|pos| cut_g[pos * k + j].map(|v| -v)).collect();
            cut_frac_d.push(FracBound::new(&neg, &dw, true));
            cut_frac_a.push(FracBound::new(&neg, &aw, false));
        }

        let cell_order = obj
            .iter()
            .map(|row| {
                let mut cs = [0, 1, 2, 3];
                cs.sort_by(|&a, &b| {
                    row[b]
                        .partial_cmp(&row[a])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                cs
            })
            .collect();

        Self {
            inst,
            objective,
            n,
            k,
            phi,
            budget,
            order,
            obj,
            dw,
            aw,
            cut_g,
            cut_suffix_min,
            obj_suffix_max,
            obj_suffix_min,
            frac_d,
            frac_a,
            cut_frac_d,
            cut_frac_a,
            lagrange: None,
            cell_order,
            cells: vec![0; n],
            viol: vec![0.0; k],
            nodes: 0,
            aborted: false,
            incumbent: None,
        }
    }

    fn seed_checked(&mut self, start: Option<&StrategyProfile>, cuts: &CutPool) {
        if let Some(p) = start {
            if p.defense.len() == self.n
                && p.attack.len() == self.n
                && self.inst.is_feasible(p)
                && cuts.satisfied_by(self.inst, p, self.phi)
            {
                self.seed(p);
            }
        }
    }

    fn dfs_result(&self) -> MasterRun {
        let best = self.best_profile();
        let outcome = if self.aborted {
            MasterOutcome::Limit { best }
        } else {
            match best {
                Some((profile, value)) => MasterOutcome::Optimal { profile, value },
                None => MasterOutcome::Infeasible,
            }
        };
        MasterRun {
            outcome,
            nodes: self.nodes,
        }
    }

    fn seed(&mut self, p: &StrategyProfile) {
        let cells = self
            .order
            .iter()
            .map(|&i| 2 * usize::from(p.defense[i]) + usize::from(p.attack[i]))
            .collect();
        self.incumbent = Some((self.objective.evaluate(self.inst, p), cells));
    }

    fn profile_of(&self, cells: &[usize]) -> StrategyProfile {
        let mut p = StrategyProfile::empty(self.n);
        for (pos, &c) in cells.iter().enumerate() {
            let (x, a) = cell_bits(c);
            p.defense[self.order[pos]] = x;
            p.attack[self.order[pos]] = a;
        }
        p
    }

    fn best_profile(&self) -> Option<(StrategyProfile, f64)> {
        self.incumbent.as_ref().map(|(_, cells)| {
            let p = self.profile_of(cells);
            let v = self.objective.evaluate(self.inst, &p);
            (p, v)
        })
    }

    fn priced_table(&self, m: &Multipliers) -> (Vec<[f64; 4]>, Vec<[f64; 4]>) {
        let (n, k) = (self.n, self.k);
        let mut priced = vec![[0.0; 4]; n];
        let mut weighted = vec![[0.0; 4]; n];
        for pos in 0..n {
            for c in 0..4 {
                let (x, a) = cell_bits(c);
                let mut wg = 0.0;
                for j in 0..k {
                    wg += m.cuts[j] * self.cut_g[pos * k + j][c];
                }
                weighted[pos][c] = wg;
                priced[pos][c] = self.obj[pos][c]
                    - wg
                    - if x { m.defender * self.dw[pos] } else { 0.0 }
                    - if a { m.attacker * self.aw[pos] } else { 0.0 };
            }
        }
        (priced, weighted)
    }

    /// Subgradient descent on the Lagrangian dual; keeps the best multipliers.
    fn fit_multipliers(&mut self) {
        let (n, k) = (self.n, self.k);
        if k == 0 {
            return;
        }
        let inst = self.inst;
        let (dcap, acap) = (inst.defender_budget, inst.attacker_budget);
        let target = match &self.incumbent {
            Some((v, _)) => *v,
            None => self.obj_suffix_min[0] - 1.0,
        };

        let mut m = Multipliers {
            cuts: vec![0.0; k],
            defender: 0.0,
            attacker: 0.0,
        };
        let mut best: Option<(f64, Vec<f64>, f64, f64)> = None;
        let mut theta = 2.0;
        let mut stall = 0;
        let mut viol = vec![0.0; k];
        for _ in 0..150 {
            let (priced, _) = self.priced_table(&m);
            let mut value = m.cuts.iter().sum::<f64>() * self.phi + m.defender * dcap + m.attacker * acap;
            viol.iter_mut().for_each(|v| *v = 0.0);
            let (mut used_d, mut used_a) = (0.0, 0.0);
            for pos in 0..n {
                let row = &priced[pos];
                let mut c_best = 0;
                for c in 1..4 {
                    if row[c] > row[c_best] {
                        c_best = c;
                    }
                }
                value += row[c_best];
                let (x, a) = cell_bits(c_best);
                if x {
                    used_d += self.dw[pos];
                }
                if a {
                    used_a += self.aw[pos];
                }
                for j in 0..k {
                    viol[j] += self.cut_g[pos * k + j][c_best];
                }
            }
            if best.as_ref().is_none_or(|b| value < b.0 - 1e-12) {
                best = Some((value, m.cuts.clone(), m.defender, m.attacker));
                stall = 0;
            } else {
                stall += 1;
                if stall >= 5 {
                    theta *= 0.5;
                    stall = 0;
                }
            }
            if value <= target + BOUND_TOL || theta < 1e-4 {
                break;
            }

            // subgradient of the dual: constraint excess at the relaxed optimum
            let mut s_cut: Vec<f64> = viol.iter().map(|g| g - self.phi).collect();
            let mut s_d = used_d - dcap;
            let mut s_a = used_a - acap;
            for j in 0..k {
                if m.cuts[j] <= 0.0 && s_cut[j] < 0.0 {
                    s_cut[j] = 0.0;
                }
            }
            if m.defender <= 0.0 && s_d < 0.0 {
                s_d = 0.0;
            }
            if m.attacker <= 0.0 && s_a < 0.0 {
                s_a = 0.0;
            }
            let norm2 = s_cut.iter().map(|s| s * s).sum::<f64>() + s_d * s_d + s_a * s_a;
            if norm2 <= 1e-18 {
                // relaxed optimum is feasible with complementary slackness
                break;
            }
            let step = theta * (value - target) / norm2;
            for j in 0..k {
                m.cuts[j] = (m.cuts[j] + step * s_cut[j]).max(0.0);
            }
            m.defender = (m.defender + step * s_d).max(0.0);
            m.attacker = (m.attacker + step * s_a).max(0.0);
        }

        if let Some((_, cuts, defender, attacker)) = best {
            let mult = Multipliers {
                cuts,
                defender,
                attacker,
            };
            let (priced, weighted_g) = self.priced_table(&mult);
            let mut suffix_max = vec![0.0; n + 1];
            for pos in (0..n).rev() {
                suffix_max[pos] = suffix_max[pos + 1] + priced[pos].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
            // steer the dive toward cells that are cheap under the prices
            for pos in 0..n {
                let row = priced[pos];
                let plain = self.obj[pos];
                let mut cs = [0, 1, 2, 3];
                cs.sort_by(|&a, &b| {
                    row[b]
                        .partial_cmp(&row[a])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(plain[b].partial_cmp(&plain[a]).unwrap_or(std::cmp::Ordering::Equal))
                        .then(a.cmp(&b))
                });
                self.cell_order[pos] = cs;
            }
            self.lagrange = Some(Lagrange {
                mult,
                weighted_g,
                suffix_max,
            });
        }
    }

    fn run(&mut self) {
        self.fit_multipliers();
        self.dfs(0, 0.0, 0.0, 0.0, 0.0);
    }

    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        self.nodes += 1;
        if let Some(limit) = self.budget.node_limit {
            if self.nodes > limit {
                self.aborted = true;
                return true;
            }
        }
        if self.nodes.is_multiple_of(CLOCK_STRIDE) {
            if let Some(deadline) = self.budget.deadline {
                if Instant::now() >= deadline {
                    self.aborted = true;
                    return true;
                }
            }
        }
        false
    }

    /// Upper bound on the objective of any feasible completion, or `None`
    /// when the Lagrangian certifies that no completion is feasible.
    fn bound(&self, depth: usize, value: f64, used_d: f64, used_a: f64, priced_g: f64) -> Option<f64> {
        let inst = self.inst;
        let dres = inst.defender_budget + FEASIBILITY_TOL - used_d;
        let ares = inst.attacker_budget + FEASIBILITY_TOL - used_a;
        for j in 0..self.k {
            let (fd, fa) = (&self.cut_frac_d[j], &self.cut_frac_a[j]);
            // the budget-free part alone already keeps this cut satisfiable
            if self.viol[j] - fd.base_suffix[depth].min(fa.base_suffix[depth]) <= self.phi + CUT_TOL {
                continue;
            }
            let lb = self.viol[j] - fd.bound(depth, dres).min(fa.bound(depth, ares));
            if lb > self.phi + CUT_TOL {
                return None;
            }
        }
        let mut ub = value + self.obj_suffix_max[depth];
        if let Some(l) = &self.lagrange {
            let lam_sum: f64 = l.mult.cuts.iter().sum();
            let lag = value + lam_sum * self.phi - priced_g
                + l.mult.defender * (inst.defender_budget - used_d)
                + l.mult.attacker * (inst.attacker_budget - used_a)
                + l.suffix_max[depth];
            if lag < value + self.obj_suffix_min[depth] - BOUND_TOL {
                return None;
            }
            ub = ub.min(lag);
        }
        ub = ub.min(value + self.frac_d.bound(depth, dres));
        ub = ub.min(value + self.frac_a.bound(depth, ares));
        Some(ub)
    }

    /// Rebuilds the partial assignment of tree node `id` into `cells` and
    /// `viol`; returns `(value, used_d, used_a, priced_g)`.
    fn load_path(&mut self, fr: &Frontier, id: u32, depth: usize) -> (f64, f64, f64, f64) {
        let mut cur = id;
        for pos in (0..depth).rev() {
            let node = fr.nodes[cur as usize];
            self.cells[pos] = node.cell();
            cur = node.parent();
        }
        let k = self.k;
        self.viol.iter_mut().for_each(|v| *v = 0.0);
        let (mut value, mut used_d, mut used_a, mut priced_g) = (0.0, 0.0, 0.0, 0.0);
        for pos in 0..depth {
            let c = self.cells[pos];
            value += self.obj[pos][c];
            let (x, a) = cell_bits(c);
            if x {
                used_d += self.dw[pos];
            }
            if a {
                used_a += self.aw[pos];
            }
            for j in 0..k {
                self.viol[j] += self.cut_g[pos * k + j][c];
            }
            if let Some(l) = &self.lagrange {
                priced_g += l.weighted_g[pos][c];
            }
        }
        (value, used_d, used_a, priced_g)
    }

    fn best_first(&mut self, fr: &mut Frontier) -> Step {
        let (n, k) = (self.n, self.k);
        let stamp = stamp_of(k);
        let dmax = self.inst.defender_budget + FEASIBILITY_TOL;
        let amax = self.inst.attacker_budget + FEASIBILITY_TOL;
        loop {
            let Some(top) = fr.open.pop() else {
                return Step::Infeasible;
            };
            if self.out_of_budget() {
                fr.open.push(top);
                return Step::Limit;
            }
            let depth = usize::from(top.depth);
            let (value, used_d, used_a, priced_g) = self.load_path(fr, top.id, depth);
            let fresh = usize::from(top.stamp) >= k;
            if !fresh {
                let base = depth * k;
                if (0..k).any(|j| self.viol[j] + self.cut_suffix_min[base + j] > self.phi + CUT_TOL) {
                    continue;
                }
            }
            if depth == n {
                fr.open.push(Open { stamp, ..top });
                self.incumbent = Some((value, self.cells.clone()));
                return Step::Optimal;
            }
            if !fresh {
                let Some(ub) = self.bound(depth, value, used_d, used_a, priced_g) else {
                    continue;
                };
                let ub = ub.min(top.ub);
                if fr.open.peek().is_some_and(|o| ub < o.ub) {
                    fr.open.push(Open { ub, stamp, ..top });
                    continue;
                }
            }

            let next = (depth + 1) * k;
            let base = depth * k;
            for idx in 0..4 {
                let c = self.cell_order[depth][idx];
                let (x, a) = cell_bits(c);
                let nd = if x { used_d + self.dw[depth] } else { used_d };
                let na = if a { used_a + self.aw[depth] } else { used_a };
                if nd > dmax || na > amax {
                    continue;
                }
                if (0..k).any(|j| {
                    self.viol[j] + self.cut_g[base + j][c] + self.cut_suffix_min[next + j] > self.phi + CUT_TOL
                }) {
                    continue;
                }
                let child_value = value + self.obj[depth][c];
                let ub = if depth + 1 == n {
                    Some(child_value)
                } else {
                    for j in 0..k {
                        self.viol[j] += self.cut_g[base + j][c];
                    }
                    let pg = match &self.lagrange {
                        Some(l) => priced_g + l.weighted_g[depth][c],
                        None => priced_g,
                    };
                    let ub = self.bound(depth + 1, child_value, nd, na, pg);
                    for j in 0..k {
                        self.viol[j] -= self.cut_g[base + j][c];
                    }
                    ub
                };
                let Some(ub) = ub else {
                    continue;
                };
                let id = fr.nodes.len() as u32;
                fr.nodes.push(TreeNode::new(top.id, c));
                fr.open.push(Open {
                    ub: ub.min(top.ub),
                    id,
                    depth: top.depth + 1,
                    stamp,
                });
            }
            if fr.nodes.len() >= FRONTIER_CAP {
                return Step::Overflow;
            }
        }
    }

    fn dfs(&mut self, depth: usize, value: f64, used_d: f64, used_a: f64, priced_g: f64) {
        if self.out_of_budget() {
            return;
        }
        if depth == self.n {
            let better = self.incumbent.as_ref().is_none_or(|(v, _)| value > *v + BOUND_TOL);
            if better {
                self.incumbent = Some((value, self.cells.clone()));
            }
            return;
        }
        match self.bound(depth, value, used_d, used_a, priced_g) {
            None => return,
            Some(ub) => {
                if let Some((inc, _)) = &self.incumbent {
                    if ub <= *inc + BOUND_TOL {
                        return;
                    }
                }
            }
        }

        let k = self.k;
        let dmax = self.inst.defender_budget + FEASIBILITY_TOL;
        let amax = self.inst.attacker_budget + FEASIBILITY_TOL;
        for idx in 0..4 {
            let c = self.cell_order[depth][idx];
            let (x, a) = cell_bits(c);
            let nd = if x { used_d + self.dw[depth] } else { used_d };
            let na = if a { used_a + self.aw[depth] } else { used_a };
            if nd > dmax || na > amax {
                continue;
            }
            let base = depth * k;
            let next = (depth + 1) * k;
            let mut ok = true;
            for j in 0..k {
                let v = self.viol[j] + self.cut_g[base + j][c];
                if v + self.cut_suffix_min[next + j] > self.phi + CUT_TOL {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            for j in 0..k {
                self.viol[j] += self.cut_g[base + j][c];
            }
            self.cells[depth] = c;
            let pg = match &self.lagrange {
                Some(l) => priced_g + l.weighted_g[depth][c],
                None => priced_g,
            };
            self.dfs(depth + 1, value + self.obj[depth][c], nd, na, pg);
            for j in 0..k {
                self.viol[j] -= self.cut_g[base + j][c];
            }
            if self.aborted {
                return;
            }
        }
    }
}
