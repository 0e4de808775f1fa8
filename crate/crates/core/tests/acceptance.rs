//! Acceptance criteria, one check per criterion, printed as PASS/FAIL.
//!
//! The desk-scale performance check (criterion 7) solves 48 problems with
//! a 100 s limit each, so it only runs with `CNG_ACCEPTANCE_FULL=1`:
//!
//! ```text
//! CNG_ACCEPTANCE_FULL=1 cargo test --release -p cng-core --test acceptance
//! ```

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cng_core::bestresponse::regrets;
use cng_core::fixtures::{example_instance, pennies};
use cng_core::instancegen::{generate, GenSpec, ATTACKER_FRACTIONS, DEFENDER_FRACTIONS, ETAS, GAMMAS};
use cng_core::oracle::Oracle;
use cng_core::{
    price_of_aggression, price_of_security, solve, solve_knapsack, solve_master, CngInstance, Cut, CutPool,
    IncrementalMaster, KnapsackProblem, MasterObjective, MasterOutcome, Player, SearchBudget, SolveConfig, SolveStatus,
    StrategyProfile,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Payoff reproduction tolerance.
const PAYOFF_TOL: f64 = 1e-9;
/// Objective agreement between solver, master and enumeration.
const VALUE_TOL: f64 = 1e-9;
/// Certified regret vs enumerated regret.
const PHI_TOL: f64 = 1e-9;
/// Budget fraction reproduction.
const FRACTION_TOL: f64 = 1e-12;

const PERF_N: usize = 25;
const PERF_LIMIT: Duration = Duration::from_secs(100);
/// Slack on the wall clock for the last iteration that straddles the limit.
const PERF_LIMIT_GRACE: Duration = Duration::from_secs(5);
const PERF_MIN_PROVED: f64 = 0.90;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bits(v: &[u8]) -> Vec<bool> {
    v.iter().map(|&b| b == 1).collect()
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn example_payoffs() -> Check {
    let inst = example_instance();
    let t = Instant::now();
    let x = bits(&[1, 1, 1, 0, 1]);
    let alpha = bits(&[0, 0, 1, 0, 1]);
    let flipped = bits(&[0, 1, 1, 0, 1]);
    let fd = inst.defender_payoff(&x, &alpha).map_err(|e| e.to_string())?;
    let fa = inst.attacker_payoff(&x, &alpha).map_err(|e| e.to_string())?;
    let fa_flipped = inst.attacker_payoff(&flipped, &alpha).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure((fd - 29.2).abs() < PAYOFF_TOL, || format!("f^d = {fd}"))?;
    ensure((fa - 13.74).abs() < PAYOFF_TOL, || format!("f^a = {fa}"))?;
    ensure((fa_flipped - 12.18).abs() < PAYOFF_TOL, || {
        format!("flipped f^a = {fa_flipped}")
    })?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!(
        "f^d {fd:.2}, f^a {fa:.2}, flipped f^a {fa_flipped:.2} in {elapsed:?}"
    ))
}

fn example_pos_numerator() -> Check {
    let inst = example_instance();
    let t = Instant::now();
    let oracle = Oracle::new(&inst).map_err(|e| e.to_string())?;
    let (_, best) = oracle
        .best_outcome(MasterObjective::DefenderPayoff, &CutPool::new(), 0.0)
        .ok_or("empty joint space")?;
    let elapsed = t.elapsed();
    ensure((best - 52.0).abs() < PAYOFF_TOL, || format!("max f^d = {best}"))?;
    let ratio = format!("{:.2}", best / 29.2);
    ensure(ratio == "1.78", || format!("ratio {ratio}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("max f^d {best}, 52/29.2 = {ratio} in {elapsed:?}"))
}

fn random_grid_instance(rng: &mut ChaCha8Rng, n_lo: usize, n_hi: usize) -> (GenSpec, CngInstance) {
    let spec = GenSpec {
        n: rng.random_range(n_lo..=n_hi),
        gamma: *GAMMAS.choose(rng).unwrap(),
        eta: *ETAS.choose(rng).unwrap(),
        defender_budget_frac: *DEFENDER_FRACTIONS.choose(rng).unwrap(),
        attacker_budget_frac: *ATTACKER_FRACTIONS.choose(rng).unwrap(),
        seed: rng.random(),
        paper_grid: true,
    };
    let inst = generate(&spec).expect("grid specs are valid");
    (spec, inst)
}

fn oracle_equivalence() -> Check {
    const INSTANCES: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Instant::now();
    let (mut exact, mut inexact) = (0, 0);
    for _ in 0..INSTANCES {
        let (spec, inst) = random_grid_instance(&mut rng, 4, 10);
        let oracle = Oracle::new(&inst).map_err(|e| e.to_string())?;
        let nes = oracle.all_exact_ne();
        for objective in [MasterObjective::DefenderPayoff, MasterObjective::AttackerPayoff] {
            let r = solve(&inst, &SolveConfig::with_objective(objective)).map_err(|e| e.to_string())?;
            let label = || format!("{} {objective}", spec.label());
            ensure(r.status == SolveStatus::ProvedOptimalNe, || {
                format!("{}: not proved", label())
            })?;
            let certified = oracle.min_phi(&r.profile).map_err(|e| e.to_string())?;
            ensure((certified - r.phi).abs() < PHI_TOL, || {
                format!("{}: phi {} but enumeration gives {certified}", label(), r.phi)
            })?;
            if r.exact {
                let best = nes
                    .iter()
                    .map(|p| objective.evaluate(&inst, p))
                    .fold(f64::NEG_INFINITY, f64::max);
                ensure((r.objective_value - best).abs() < VALUE_TOL, || {
                    format!("{}: objective {} but best NE has {best}", label(), r.objective_value)
                })?;
                exact += 1;
            } else {
                ensure(nes.is_empty() || (certified - r.phi).abs() < PHI_TOL, || {
                    format!("{}: phi {} although an exact NE exists", label(), r.phi)
                })?;
                inexact += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(600))?;
    Ok(format!(
        "{INSTANCES} instances, {exact} exact and {inexact} approximate equilibria agree, {elapsed:.1?}"
    ))
}

fn knapsack_exactness() -> Check {
    const PROBLEMS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Instant::now();
    for case in 0..PROBLEMS {
        let n = rng.random_range(1..=16);
        let values: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(-5i32..=40))).collect();
        let weights: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(1u32..=30))).collect();
        let capacity = f64::from(rng.random_range(0u32..=(15 * n as u32)));
        let problem = KnapsackProblem::new(values.clone(), weights.clone(), capacity);
        let sol = solve_knapsack(&problem).map_err(|e| e.to_string())?;
        let best = (0u32..1 << n)
            .filter(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).sum::<f64>() <= capacity)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        ensure(sol.objective == best, || {
            format!("case {case}: {} vs enumeration {best}", sol.objective)
        })?;
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("{PROBLEMS} problems match enumeration, {elapsed:.1?}"))
}

fn check_outcome(
    inst: &CngInstance,
    oracle: &Oracle,
    objective: MasterObjective,
    pool: &CutPool,
    phi: f64,
    outcome: &MasterOutcome,
) -> Result<bool, String> {
    let brute = oracle.best_outcome(objective, pool, phi);
    match (outcome, brute) {
        (MasterOutcome::Optimal { profile, value }, Some((_, best))) => {
            ensure((value - best).abs() < VALUE_TOL, || {
                format!("master {value} vs brute force {best}")
            })?;
            ensure(
                inst.is_feasible(profile) && pool.satisfied_by(inst, profile, phi),
                || "master profile violates a constraint".into(),
            )?;
            Ok(true)
        }
        (MasterOutcome::Infeasible, None) => Ok(false),
        (MasterOutcome::Infeasible, Some((_, best))) => Err(format!("master infeasible, brute force finds {best}")),
        (MasterOutcome::Optimal { value, .. }, None) => Err(format!("master {value}, brute force finds nothing")),
        (MasterOutcome::Limit { .. }, _) => Err("unlimited master hit a limit".into()),
    }
}

fn master_exactness() -> Check {
    const CASES: usize = 200;
    let objectives = [
        MasterObjective::DefenderPayoff,
        MasterObjective::AttackerPayoff,
        MasterObjective::SocialWelfare,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = Instant::now();
    let (mut optimal, mut infeasible) = (0, 0);
    let (mut steps, mut infeasible_steps) = (0, 0);
    for case in 0..CASES {
        let (spec, mut inst) = random_grid_instance(&mut rng, 2, 8);
        let objective = *objectives.choose(&mut rng).unwrap();
        // half the cases follow the solver: cut off the last master optimum
        let mut follow = rng.random_bool(0.5);
        let mut phi = if rng.random_bool(if follow { 0.8 } else { 0.5 }) {
            0.0
        } else {
            rng.random_range(0.0..8.0)
        };
        let mut max_cuts = rng.random_range(0..=5);
        if case % 20 == 0 {
            // a game without pure equilibria
            inst = pennies();
            (follow, phi, max_cuts) = (true, 0.0, 5);
        }
        let oracle = Oracle::new(&inst).map_err(|e| e.to_string())?;
        let mut incremental = IncrementalMaster::new(&inst, objective, phi).map_err(|e| e.to_string())?;
        let mut pool = CutPool::new();
        let mut last: Option<StrategyProfile> = None;
        for _ in 0..max_cuts {
            let deviating = match (&last, follow) {
                (Some(p), true) => {
                    let r = regrets(&inst, p).map_err(|e| e.to_string())?;
                    if r.defender_gap() > phi {
                        Some((Player::Defender, r.defender_response.strategy))
                    } else if r.attacker_gap() > phi {
                        Some((Player::Attacker, r.attacker_response.strategy))
                    } else {
                        None
                    }
                }
                _ => None,
            };
            let (owner, deviation) = match deviating {
                Some(d) => d,
                None => {
                    let owner = if rng.random_bool(0.5) {
                        Player::Defender
                    } else {
                        Player::Attacker
                    };
                    let options = if owner == Player::Defender {
                        &oracle.defenses
                    } else {
                        &oracle.attacks
                    };
                    (owner, options.choose(&mut rng).unwrap().clone())
                }
            };
            let cut = Cut::new(&inst, owner, deviation).map_err(|e| e.to_string())?;
            pool.add(cut.clone());
            incremental.add_cut(cut).map_err(|e| e.to_string())?;
            let run = incremental
                .solve(SearchBudget::unlimited(), None)
                .map_err(|e| e.to_string())?;
            let feasible = check_outcome(&inst, &oracle, objective, &pool, phi, &run.outcome)
                .map_err(|e| format!("case {case} ({}) incremental: {e}", spec.label()))?;
            steps += 1;
            if !feasible {
                infeasible_steps += 1;
            }
            last = match run.outcome {
                MasterOutcome::Optimal { profile, .. } => Some(profile),
                _ => break,
            };
        }
        let run = solve_master(&inst, &pool, objective, phi, SearchBudget::unlimited()).map_err(|e| e.to_string())?;
        let feasible = check_outcome(&inst, &oracle, objective, &pool, phi, &run)
            .map_err(|e| format!("case {case} ({}): {e}", spec.label()))?;
        if feasible {
            optimal += 1;
        } else {
            infeasible += 1;
        }
    }
    let elapsed = t.elapsed();
    ensure(optimal > 0 && infeasible > 0, || {
        format!("{optimal} optimal, {infeasible} infeasible: both must occur")
    })?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "{CASES} cases ({optimal} optimal, {infeasible} infeasible) and {steps} incremental steps \
         ({infeasible_steps} infeasible) match brute force, {elapsed:.1?}"
    ))
}

fn invariants() -> Check {
    const INSTANCES: usize = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut exact_runs = 0;
    for _ in 0..INSTANCES {
        let (spec, inst) = random_grid_instance(&mut rng, 3, 9);
        let label = spec.label();

        ensure(generate(&spec).ok().as_ref() == Some(&inst), || {
            format!("{label}: generator not deterministic")
        })?;
        inst.validate().map_err(|e| format!("{label}: {e}"))?;
        let dsum: f64 = inst.defender_weight.iter().sum();
        let asum: f64 = inst.attacker_weight.iter().sum();
        ensure(
            (inst.defender_budget / dsum - spec.defender_budget_frac).abs() < FRACTION_TOL,
            || format!("{label}: defender budget fraction {}", inst.defender_budget / dsum),
        )?;
        ensure(
            (inst.attacker_budget / asum - spec.attacker_budget_frac).abs() < FRACTION_TOL,
            || format!("{label}: attacker budget fraction {}", inst.attacker_budget / asum),
        )?;

        let oracle = Oracle::new(&inst).map_err(|e| e.to_string())?;
        let nes: Vec<StrategyProfile> = oracle.all_exact_ne();
        let config = SolveConfig::default();
        let pos = price_of_security(&inst, &config).map_err(|e| e.to_string())?;
        let poa = price_of_aggression(&inst, &config).map_err(|e| e.to_string())?;
        for (name, report) in [("PoS", &pos), ("PoA", &poa)] {
            let r = &report.equilibrium;
            let certified = oracle.min_phi(&r.profile).map_err(|e| e.to_string())?;
            ensure((certified - r.phi).abs() < PHI_TOL, || {
                format!("{label} {name}: phi {} vs {certified}", r.phi)
            })?;
            if report.proved() && r.exact {
                exact_runs += 1;
                // the equilibrium is a point of the numerator's problem; with a
                // negative equilibrium payoff the ratio itself drops below 1
                ensure(report.numerator >= report.denominator - VALUE_TOL, || {
                    format!(
                        "{label}: {name} numerator {} below {}",
                        report.numerator, report.denominator
                    )
                })?;
                if report.denominator > 0.0 {
                    ensure(report.ratio >= 1.0 - VALUE_TOL, || {
                        format!("{label}: {name} = {}", report.ratio)
                    })?;
                }
            }
            for cut in r.cut_pool.iter() {
                for ne in &nes {
                    ensure(cut.holds(&inst, ne, 0.0), || {
                        format!("{label} {name}: a cut removes an equilibrium")
                    })?;
                }
            }
        }
    }
    Ok(format!(
        "{INSTANCES} instances, {exact_runs} exact price runs, all invariants hold"
    ))
}

fn desk_scale() -> Check {
    let specs = GenSpec::grid(PERF_N, 1);
    let mut proved = 0;
    let mut total = 0;
    let mut slowest = Duration::ZERO;
    for spec in &specs {
        let inst = generate(spec).map_err(|e| e.to_string())?;
        for objective in [MasterObjective::DefenderPayoff, MasterObjective::AttackerPayoff] {
            let config = SolveConfig {
                time_limit: PERF_LIMIT,
                ..SolveConfig::with_objective(objective)
            };
            let t = Instant::now();
            let r = solve(&inst, &config).map_err(|e| e.to_string())?;
            let elapsed = t.elapsed();
            slowest = slowest.max(elapsed);
            total += 1;
            if r.status == SolveStatus::ProvedOptimalNe {
                proved += 1;
            }
            println!(
                "    {} {objective}: {} phi {:.3} iterations {} {:.2}s",
                spec.label(),
                r.status.as_str(),
                r.phi,
                r.iterations,
                elapsed.as_secs_f64()
            );
            ensure(elapsed <= PERF_LIMIT + PERF_LIMIT_GRACE, || {
                format!("{} {objective} ran {elapsed:?}", spec.label())
            })?;
        }
    }
    let share = f64::from(proved) / f64::from(total);
    let summary = format!("{proved}/{total} proved ({:.0}%), slowest {slowest:.1?}", 100.0 * share);
    ensure(share >= PERF_MIN_PROVED, || summary.clone())?;
    Ok(summary)
}

fn main() -> ExitCode {
    let full = std::env::var("CNG_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 7] = [
        ("1 example payoffs", example_payoffs),
        ("2 example PoS numerator", example_pos_numerator),
        ("3 oracle equivalence", oracle_equivalence),
        ("4 knapsack exactness", knapsack_exactness),
        ("5 master exactness", master_exactness),
        ("6 invariants", invariants),
        ("7 desk-scale performance", desk_scale),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        if i == 6 && !full {
            println!("criterion {name}: SKIPPED (set CNG_ACCEPTANCE_FULL=1)");
            continue;
        }
        match check() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
