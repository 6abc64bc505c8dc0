//! Shapley cost allocation for shared projects, and a coalition formation
//! simulator that uses the resulting cost savings as the incentive for actors
//! to join a network.
//!
//! Cost games ([`CostGame`]) are converted to savings games
//! ([`CharacteristicGame`]) by [`savings_transform`]; Shapley values are then
//! computed exactly on rationals and turned back into payable [`CostShares`].

pub mod axioms;
pub mod coalition;
pub mod game;
pub mod monte_carlo;
pub mod network;
pub mod rational;
pub mod shapley;
pub mod simulation;
pub mod stability;

pub use coalition::{enumerate_coalitions, CapExceeded, Coalition, MAX_PERMUTATION_PLAYERS, MAX_SUBSET_PLAYERS};
pub use game::{
    build_cost_game, is_superadditive, savings_transform, CharacteristicGame, Completion, CostGame, GameError,
    GameHash, PlayerId, Players,
};
pub use monte_carlo::{shapley_monte_carlo, MonteCarloEstimate};
pub use network::{ActorNetwork, EventKind, IncentiveReport, NetworkError, SimulationEvent, TranslationStage};
pub use rational::Rational;
pub use shapley::{
    cost_shares, marginal_table, shapley_permutation, shapley_subset, solve_cost_game, Allocation, CostShares,
    MarginalTable, Method, ShapleyError,
};
pub use simulation::{simulate_formation, FormationRun, FormationSimulation, Outcome, ProposalPolicy};
pub use stability::{budget_report, core_membership, individual_rationality, Budgets};
