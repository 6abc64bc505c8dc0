//! Actor networks moving through the translation stages, with Shapley cost
//! shares as the incentive offered to prospective coalition members.
//!
//! Stage semantics: a viable proposal moves its members to
//! [`TranslationStage::Interessement`], committing it to the structure moves
//! them to [`TranslationStage::Enrollment`], and a stability sweep moves every
//! enrolled actor to [`TranslationStage::Mobilization`]. Stages only move
//! forward; [`ActorNetwork::defect`] is the one reset.

use std::fmt;

use num_traits::Signed;
use thiserror::Error;

use crate::coalition::Coalition;
use crate::game::{CostGame, PlayerId};
use crate::rational::Rational;
use crate::shapley::{solve_cost_game, ShapleyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActorKind {
    Human,
    NonHuman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TranslationStage {
    Problematization,
    Interessement,
    Enrollment,
    Mobilization,
}

impl TranslationStage {
    pub fn as_str(self) -> &'static str {
        match self {
            TranslationStage::Problematization => "problematization",
            TranslationStage::Interessement => "interessement",
            TranslationStage::Enrollment => "enrollment",
            TranslationStage::Mobilization => "mobilization",
        }
    }
}

impl fmt::Display for TranslationStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub id: PlayerId,
    kind: ActorKind,
    pub stage: TranslationStage,
}

impl Actor {
    pub fn kind(&self) -> ActorKind {
        self.kind
    }

    fn advance(&mut self, to: TranslationStage) {
        self.stage = self.stage.max(to);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberIncentive {
    pub player: usize,
    pub label: String,
    pub standalone: Rational,
    /// Shapley-based share within the proposed coalition's subgame.
    pub share: Rational,
    /// `share <= standalone`.
    pub accept: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncentiveReport {
    pub proposed: Coalition,
    pub members: Vec<MemberIncentive>,
    pub viable: bool,
    /// `C(proposed)`, which the shares sum to.
    pub total: Rational,
    /// Structure revision the report was computed against.
    pub revision: u64,
}

impl IncentiveReport {
    pub fn share_of(&self, player: usize) -> Option<&Rational> {
        self.members.iter().find(|m| m.player == player).map(|m| &m.share)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Proposal,
    Acceptance,
    Rejection,
    Enrollment,
    Mobilization,
    Defection,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Proposal => "proposal",
            EventKind::Acceptance => "acceptance",
            EventKind::Rejection => "rejection",
            EventKind::Enrollment => "enrollment",
            EventKind::Mobilization => "mobilization",
            EventKind::Defection => "defection",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEvent {
    /// Strictly increasing position in the history.
    pub seq: u64,
    /// Negotiation round; non-decreasing along the history.
    pub round: u64,
    pub kind: EventKind,
    pub coalition: Coalition,
    pub report: Option<IncentiveReport>,
    /// Set on mobilization events.
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("the proposed coalition is empty")]
    EmptyCoalition,
    #[error("coalition contains players outside the network")]
    UnknownPlayer,
    #[error("player {0} is not in the network")]
    UnknownActor(usize),
    #[error("proposal must be a union of whole blocks of the current structure")]
    SplitsBlock,
    #[error("cannot enroll a proposal that some member rejects")]
    NotViable,
    #[error("report was computed at revision {report}, structure is now at revision {current}")]
    StaleReport { report: u64, current: u64 },
    #[error("no actor has been enrolled yet")]
    NothingEnrolled,
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
}

/// A pairwise merge of two current blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeCandidate {
    pub left: Coalition,
    pub right: Coalition,
    /// `C(left) + C(right) - C(left ∪ right)`.
    pub gain: Rational,
    pub report: IncentiveReport,
}

impl MergeCandidate {
    pub fn merged(&self) -> Coalition {
        self.left.union(self.right)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorNetwork {
    actors: Vec<Actor>,
    cost_game: CostGame,
    /// Disjoint blocks covering every player, sorted by mask.
    structure: Vec<Coalition>,
    history: Vec<SimulationEvent>,
    revision: u64,
    round: u64,
    stable: bool,
}

impl ActorNetwork {
    /// Every actor at problematization, each in its own block.
    pub fn new(cost_game: CostGame) -> ActorNetwork {
        Self::with_kinds(cost_game, |_| ActorKind::Human)
    }

    pub fn with_kinds(cost_game: CostGame, mut kind: impl FnMut(&PlayerId) -> ActorKind) -> ActorNetwork {
        let actors = cost_game
            .players()
            .iter()
            .map(|id| Actor { kind: kind(id), id: id.clone(), stage: TranslationStage::Problematization })
            .collect();
        let structure = (0..cost_game.n()).map(Coalition::singleton).collect();
        ActorNetwork { actors, cost_game, structure, history: Vec::new(), revision: 0, round: 0, stable: false }
    }

    pub fn actors(&self) -> &[Actor] {
        &self.actors
    }

    pub fn cost_game(&self) -> &CostGame {
        &self.cost_game
    }

    pub fn structure(&self) -> &[Coalition] {
        &self.structure
    }

    pub fn history(&self) -> &[SimulationEvent] {
        &self.history
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_stable(&self) -> bool {
        self.stable
    }

    pub fn block_of(&self, player: usize) -> Coalition {
        *self.structure.iter().find(|b| b.contains(player)).expect("structure covers every player")
    }

    fn push(&mut self, kind: EventKind, coalition: Coalition, report: Option<IncentiveReport>, stable: Option<bool>) {
        let seq = self.history.len() as u64;
        self.history.push(SimulationEvent { seq, round: self.round, kind, coalition, report, stable });
    }

    /// Shares each member would pay inside `coalition`, computed from the
    /// cost game restricted to its sub-coalitions. Does not touch the network.
    pub fn incentive_report(&self, coalition: Coalition) -> Result<IncentiveReport, NetworkError> {
        if coalition.is_empty() {
            return Err(NetworkError::EmptyCoalition);
        }
        if !coalition.is_subset_of(self.cost_game.players().grand()) {
            return Err(NetworkError::UnknownPlayer);
        }
        if self.structure.iter().any(|b| !b.is_disjoint(coalition) && !b.is_subset_of(coalition)) {
            return Err(NetworkError::SplitsBlock);
        }
        let sub = self.cost_game.subgame(coalition);
        let (_, _, shares) = solve_cost_game(&sub)?;
        let members: Vec<MemberIncentive> = coalition
            .members()
            .zip(shares.shares)
            .map(|(player, share)| {
                let standalone = self.cost_game.standalone(player).clone();
                MemberIncentive {
                    player,
                    label: self.actors[player].id.label.clone(),
                    accept: share <= standalone,
                    standalone,
                    share,
                }
            })
            .collect();
        let viable = members.iter().all(|m| m.accept);
        Ok(IncentiveReport { proposed: coalition, members, viable, total: shares.total, revision: self.revision })
    }

    /// Opens a negotiation round around `coalition`. Members of a viable
    /// proposal advance to interessement; the structure is unchanged.
    pub fn propose_interessement(&mut self, coalition: Coalition) -> Result<IncentiveReport, NetworkError> {
        let report = self.incentive_report(coalition)?;
        self.round += 1;
        self.push(EventKind::Proposal, coalition, Some(report.clone()), None);
        if report.viable {
            for p in coalition.members() {
                self.actors[p].advance(TranslationStage::Interessement);
            }
            self.push(EventKind::Acceptance, coalition, Some(report.clone()), None);
        } else {
            self.push(EventKind::Rejection, coalition, Some(report.clone()), None);
        }
        Ok(report)
    }

    /// Commits a viable proposal: its coalition replaces the members' blocks.
    pub fn enroll(&mut self, report: &IncentiveReport) -> Result<(), NetworkError> {
        if !report.viable {
            return Err(NetworkError::NotViable);
        }
        if report.revision != self.revision {
            return Err(NetworkError::StaleReport { report: report.revision, current: self.revision });
        }
        let c = report.proposed;
        let before = self.structure.len();
        self.structure.retain(|b| !b.is_subset_of(c));
        let merged = before - self.structure.len() > 1;
        self.structure.push(c);
        self.structure.sort_unstable();
        if merged {
            self.revision += 1;
            self.stable = false;
        }
        for p in c.members() {
            self.actors[p].advance(TranslationStage::Enrollment);
        }
        self.push(EventKind::Enrollment, c, Some(report.clone()), None);
        Ok(())
    }

    /// Viable pairwise merges of current blocks with positive total savings,
    /// ordered by merged mask.
    pub fn merge_candidates(&self) -> Result<Vec<MergeCandidate>, NetworkError> {
        let mut out = Vec::new();
        for (a, &left) in self.structure.iter().enumerate() {
            for &right in &self.structure[a + 1..] {
                let merged = left.union(right);
                let gain = self.cost_game.cost(left) + self.cost_game.cost(right) - self.cost_game.cost(merged);
                if !gain.is_positive() {
                    continue;
                }
                let report = self.incentive_report(merged)?;
                if report.viable {
                    out.push(MergeCandidate { left, right, gain, report });
                }
            }
        }
        out.sort_by_key(MergeCandidate::merged);
        Ok(out)
    }

    /// Advances enrolled actors to mobilization and records whether any
    /// improving merge remains.
    pub fn mobilize(&mut self) -> Result<bool, NetworkError> {
        let enrolled: Coalition = Coalition::from_players(
            self.actors
                .iter()
                .filter(|a| a.stage >= TranslationStage::Enrollment)
                .map(|a| a.id.index),
        );
        if enrolled.is_empty() {
            return Err(NetworkError::NothingEnrolled);
        }
        for p in enrolled.members() {
            self.actors[p].advance(TranslationStage::Mobilization);
        }
        self.stable = self.merge_candidates()?.is_empty();
        self.push(EventKind::Mobilization, enrolled, None, Some(self.stable));
        Ok(self.stable)
    }

    /// An actor abandons its block: it returns to problematization and the
    /// block splits back into singletons.
    pub fn defect(&mut self, player: usize) -> Result<(), NetworkError> {
        if player >= self.actors.len() {
            return Err(NetworkError::UnknownActor(player));
        }
        let block = self.block_of(player);
        self.actors[player].stage = TranslationStage::Problematization;
        if block.len() > 1 {
            self.structure.retain(|&b| b != block);
            self.structure.extend(block.members().map(Coalition::singleton));
            self.structure.sort_unstable();
            self.revision += 1;
        }
        self.stable = false;
        self.push(EventKind::Defection, block, None, None);
        Ok(())
    }

    /// Each player's share inside its current block.
    pub fn current_shares(&self) -> Result<Vec<Rational>, NetworkError> {
        let mut shares = vec![Rational::default(); self.actors.len()];
        for &b in &self.structure {
            let (_, _, s) = solve_cost_game(&self.cost_game.subgame(b))?;
            for (p, share) in b.members().zip(s.shares) {
                shares[p] = share;
            }
        }
        Ok(shares)
    }

    pub fn is_partition(&self) -> bool {
        let mut seen = Coalition::EMPTY;
        for &b in &self.structure {
            if b.is_empty() || !b.is_disjoint(seen) {
                return false;
            }
            seen = seen.union(b);
        }
        seen == self.cost_game.players().grand()
    }
}
