//! Round-by-round coalition formation: each round merges two blocks of the
//! current structure, then sweeps for remaining improving merges.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::CostGame;
use crate::network::{ActorNetwork, MergeCandidate, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ProposalPolicy {
    /// Largest total savings gain; ties go to the smallest merged mask.
    #[default]
    GreedyMerge,
    /// Uniform choice among improving merges, drawn from the seeded generator.
    Random,
}

impl ProposalPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ProposalPolicy::GreedyMerge => "greedy-merge",
            ProposalPolicy::Random => "random",
        }
    }
}

impl fmt::Display for ProposalPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown proposal policy `{0}` (expected greedy-merge or random)")]
pub struct UnknownPolicy(pub String);

impl FromStr for ProposalPolicy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy-merge" | "greedy" => Ok(ProposalPolicy::GreedyMerge),
            "random" => Ok(ProposalPolicy::Random),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// No improving merge remains after `rounds` merges.
    Stable { rounds: u64 },
    /// `max_rounds` merges were made and improving merges remain.
    RoundLimit { rounds: u64 },
}

impl Outcome {
    pub fn rounds(self) -> u64 {
        match self {
            Outcome::Stable { rounds } | Outcome::RoundLimit { rounds } => rounds,
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, Outcome::Stable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulationError {
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// A formation run that can be advanced one round at a time.
#[derive(Debug, Clone)]
pub struct FormationSimulation {
    network: ActorNetwork,
    policy: ProposalPolicy,
    seed: u64,
    max_rounds: u64,
    rng: ChaCha8Rng,
    merges: u64,
    outcome: Option<Outcome>,
}

impl FormationSimulation {
    pub fn new(cost_game: CostGame, policy: ProposalPolicy, max_rounds: u64, seed: u64) -> Result<Self, SimulationError> {
        if max_rounds == 0 {
            return Err(SimulationError::NoRounds);
        }
        Ok(FormationSimulation {
            network: ActorNetwork::new(cost_game),
            policy,
            seed,
            max_rounds,
            rng: ChaCha8Rng::seed_from_u64(seed),
            merges: 0,
            outcome: None,
        })
    }

    pub fn network(&self) -> &ActorNetwork {
        &self.network
    }

    pub fn policy(&self) -> ProposalPolicy {
        self.policy
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_rounds(&self) -> u64 {
        self.max_rounds
    }

    pub fn merges(&self) -> u64 {
        self.merges
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    fn choose(&mut self, mut candidates: Vec<MergeCandidate>) -> MergeCandidate {
        match self.policy {
            ProposalPolicy::GreedyMerge => {
                // Candidates arrive sorted by merged mask; keep the first maximum.
                let mut best = 0;
                for (k, c) in candidates.iter().enumerate() {
                    if c.gain > candidates[best].gain {
                        best = k;
                    }
                }
                candidates.swap_remove(best)
            }
            ProposalPolicy::Random => {
                let k = self.rng.random_range(0..candidates.len());
                candidates.swap_remove(k)
            }
        }
    }

    /// Runs one round: propose, enroll, and mobilize around the chosen merge.
    /// Returns the outcome once the run has finished.
    pub fn step(&mut self) -> Result<Option<Outcome>, SimulationError> {
        if self.outcome.is_some() {
            return Ok(self.outcome);
        }
        let candidates = self.network.merge_candidates()?;
        if candidates.is_empty() {
            self.outcome = Some(Outcome::Stable { rounds: self.merges });
            return Ok(self.outcome);
        }
        let chosen = self.choose(candidates);
        let report = self.network.propose_interessement(chosen.merged())?;
        self.network.enroll(&report)?;
        self.merges += 1;
        let stable = self.network.mobilize()?;
        if stable {
            self.outcome = Some(Outcome::Stable { rounds: self.merges });
        } else if self.merges >= self.max_rounds {
            self.outcome = Some(Outcome::RoundLimit { rounds: self.merges });
        }
        Ok(self.outcome)
    }

    pub fn run(&mut self) -> Result<Outcome, SimulationError> {
        loop {
            if let Some(outcome) = self.step()? {
                return Ok(outcome);
            }
        }
    }

    pub fn into_network(self) -> ActorNetwork {
        self.network
    }
}

#[derive(Debug, Clone)]
pub struct FormationRun {
    pub network: ActorNetwork,
    pub outcome: Outcome,
}

/// Repeats propose, enroll, and mobilize until stable or `max_rounds` merges.
/// The trace is the final network's history.
pub fn simulate_formation(
    cost_game: CostGame,
    policy: ProposalPolicy,
    max_rounds: u64,
    seed: u64,
) -> Result<FormationRun, SimulationError> {
    let mut sim = FormationSimulation::new(cost_game, policy, max_rounds, seed)?;
    let outcome = sim.run()?;
    Ok(FormationRun { network: sim.into_network(), outcome })
}
