//! Serializable views of formation simulations and incentive reports.

use costshare_core::simulation::FormationSimulation;
use costshare_core::{ActorNetwork, Coalition, IncentiveReport, Outcome, Players, SimulationEvent};
use serde::{Deserialize, Serialize};

use crate::solution::{player_values, Number, PlayerValue};

fn labels(players: &Players, c: Coalition) -> Vec<String> {
    players.member_labels(c).into_iter().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberDoc {
    pub player: String,
    pub standalone: Number,
    pub share: Number,
    pub accept: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncentiveDoc {
    pub coalition: Vec<String>,
    pub members: Vec<MemberDoc>,
    pub viable: bool,
    pub total: Number,
    pub revision: u64,
}

impl IncentiveDoc {
    pub fn new(players: &Players, report: &IncentiveReport) -> IncentiveDoc {
        IncentiveDoc {
            coalition: labels(players, report.proposed),
            members: report
                .members
                .iter()
                .map(|m| MemberDoc {
                    player: m.label.clone(),
                    standalone: (&m.standalone).into(),
                    share: (&m.share).into(),
                    accept: m.accept,
                })
                .collect(),
            viable: report.viable,
            total: (&report.total).into(),
            revision: report.revision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDoc {
    pub seq: u64,
    pub round: u64,
    pub kind: String,
    pub coalition: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<IncentiveDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stable: Option<bool>,
}

impl EventDoc {
    pub fn new(players: &Players, event: &SimulationEvent) -> EventDoc {
        EventDoc {
            seq: event.seq,
            round: event.round,
            kind: event.kind.as_str().to_string(),
            coalition: labels(players, event.coalition),
            report: event.report.as_ref().map(|r| IncentiveDoc::new(players, r)),
            stable: event.stable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeDoc {
    pub stable: bool,
    pub rounds: u64,
}

impl From<Outcome> for OutcomeDoc {
    fn from(o: Outcome) -> Self {
        OutcomeDoc { stable: o.is_stable(), rounds: o.rounds() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDoc {
    pub player: String,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub players: Vec<String>,
    pub policy: String,
    pub seed: u64,
    pub max_rounds: u64,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<OutcomeDoc>,
    pub revision: u64,
    pub events: Vec<EventDoc>,
    pub structure: Vec<Vec<String>>,
    pub stages: Vec<StageDoc>,
    /// What each player pays inside its current block.
    pub shares: Vec<PlayerValue>,
}

impl TraceDocument {
    pub fn new(sim: &FormationSimulation) -> TraceDocument {
        let net: &ActorNetwork = sim.network();
        let players = net.cost_game().players();
        let shares = net.current_shares().expect("blocks of a valid structure solve");
        TraceDocument {
            players: players.labels().into_iter().map(str::to_string).collect(),
            policy: sim.policy().as_str().to_string(),
            seed: sim.seed(),
            max_rounds: sim.max_rounds(),
            done: sim.is_done(),
            outcome: sim.outcome().map(OutcomeDoc::from),
            revision: net.revision(),
            events: net.history().iter().map(|e| EventDoc::new(players, e)).collect(),
            structure: net.structure().iter().map(|&b| labels(players, b)).collect(),
            stages: net
                .actors()
                .iter()
                .map(|a| StageDoc { player: a.id.label.clone(), stage: a.stage.as_str().to_string() })
                .collect(),
            shares: player_values(players, &shares),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("traces serialize");
        s.push('\n');
        s
    }
}
