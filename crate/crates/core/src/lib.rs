//! Equilibrium selection for the Critical Node Game, a simultaneous
//! attacker-defender game over the nodes of a network.
//!
//! The crate computes the objective-best pure (approximate) Nash
//! equilibrium with a cutting-plane scheme, certifies its regret, and
//! reports the Price of Security and Price of Aggression.

#![allow(clippy::needless_range_loop)]

pub mod bestresponse;
pub mod error;
pub mod fixtures;
pub mod instancegen;
pub mod io;
pub mod knapsack;
pub mod master;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod report;
pub mod zeroregrets;

pub use bestresponse::{attacker_best_response, defender_best_response, BestResponse};
pub use error::{CngError, Result};
pub use knapsack::{solve_knapsack, KnapsackProblem, KnapsackSolution};
pub use master::{solve_master, Cut, CutPool, IncrementalMaster, MasterObjective, MasterOutcome, SearchBudget};
pub use metrics::{price_of_aggression, price_of_security, PriceReport};
pub use model::{CngInstance, PayoffCell, Player, StrategyProfile};
pub use zeroregrets::{solve, CutRule, EquilibriumResult, SolveConfig, SolveStatus};
