//! Solving a cost game into a serializable solution document.

use std::str::FromStr;

use costshare_core::axioms::{check_dummy, check_efficiency, check_symmetry, AxiomError};
use costshare_core::rational::{to_decimal_string, to_exact_string};
use costshare_core::shapley::ShapleyError;
use costshare_core::stability::StabilityError;
use costshare_core::{
    budget_report, core_membership, cost_shares, individual_rationality, marginal_table, savings_transform,
    shapley_monte_carlo, shapley_permutation, shapley_subset, Allocation, Budgets, CapExceeded, CostGame,
    MarginalTable, Method, Players, Rational,
};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An exact value with a decimal rendering (exact for finite expansions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Number {
    pub exact: String,
    pub decimal: String,
}

impl From<&Rational> for Number {
    fn from(v: &Rational) -> Self {
        Number { exact: to_exact_string(v), decimal: to_decimal_string(v) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerValue {
    pub player: String,
    #[serde(flatten)]
    pub value: Number,
}

pub(crate) fn player_values(players: &Players, values: &[Rational]) -> Vec<PlayerValue> {
    players
        .iter()
        .zip(values)
        .map(|(p, v)| PlayerValue { player: p.label.clone(), value: v.into() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub samples: u64,
    pub seed: u64,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub order: Vec<String>,
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSection {
    pub rows: Vec<TableRow>,
    pub totals: Vec<String>,
    pub order_count: String,
    /// Column totals over the order count, unreduced (`15/6`).
    pub shapley_fractions: Vec<String>,
    pub shapley: Vec<String>,
}

impl TableSection {
    pub fn from_table(table: &MarginalTable) -> TableSection {
        let players = &table.players;
        let count = table.order_count.to_string();
        TableSection {
            rows: table
                .rows
                .iter()
                .map(|r| TableRow {
                    order: r.order.iter().map(|&i| players.label(i).to_string()).collect(),
                    cells: r.cells.iter().map(to_exact_string).collect(),
                })
                .collect(),
            totals: table.column_totals.iter().map(to_exact_string).collect(),
            shapley_fractions: table.column_totals.iter().map(|t| format!("{t}/{count}")).collect(),
            order_count: count,
            shapley: table.shapley_row.iter().map(to_exact_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryEntry {
    pub players: [String; 2],
    pub symmetric: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DummyEntry {
    pub player: String,
    pub dummy: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomSection {
    pub efficiency: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Vec<SymmetryEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy: Option<Vec<DummyEntry>>,
}

impl AxiomSection {
    pub fn all_hold(&self) -> bool {
        self.efficiency
            && self.symmetry.iter().flatten().all(|s| s.holds)
            && self.dummy.iter().flatten().all(|d| d.holds)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalityEntry {
    pub player: String,
    pub standalone: Number,
    pub share: Number,
    pub rational: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingSection {
    pub coalition: Vec<String>,
    pub excess: Number,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreSection {
    pub in_core: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocking: Option<BlockingSection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub player: String,
    pub budget: Number,
    pub share: Number,
    pub variance: Number,
    pub over_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectiveEntry {
    pub player: String,
    pub overrun: Number,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSection {
    pub players: Vec<BudgetEntry>,
    pub corrective_actions: Vec<CorrectiveEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub game_hash: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_tag: Option<String>,
    pub players: Vec<String>,
    /// Savings allocated to each player. Monte Carlo runs report the exact
    /// sample mean.
    pub shapley: Vec<PlayerValue>,
    pub cost_shares: Vec<PlayerValue>,
    pub total_cost: Number,
    pub grand_savings: Number,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal_table: Option<TableSection>,
    pub axioms: AxiomSection,
    pub rationality: Vec<RationalityEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<CoreSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<BudgetSection>,
}

impl SolutionDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solutions serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method `{0}` (expected subset, permutation or monte-carlo)")]
pub struct UnknownMethod(pub String);

/// Parses `subset`, `permutation`, `monte-carlo` or the full method names.
pub fn parse_method(s: &str) -> Result<Method, UnknownMethod> {
    match s {
        "subset" | "exact-subset" => Ok(Method::ExactSubset),
        "permutation" | "exact-permutation" => Ok(Method::ExactPermutation),
        "monte-carlo" | "mc" => Ok(Method::MonteCarlo),
        other => Err(UnknownMethod(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOptions {
    pub method: Method,
    pub table: bool,
    pub axioms: bool,
    pub core: bool,
    pub budgets: Option<Budgets>,
    pub samples: u64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::ExactSubset,
            table: false,
            axioms: false,
            core: false,
            budgets: None,
            samples: 100_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error("the {0} section needs an exact method")]
    ExactRequired(&'static str),
}

impl SolveError {
    /// The player cap that was exceeded, if that is the cause.
    pub fn cap(&self) -> Option<&CapExceeded> {
        match self {
            SolveError::Shapley(ShapleyError::Cap(c))
            | SolveError::Stability(StabilityError::Cap(c))
            | SolveError::Axiom(AxiomError::Shapley(ShapleyError::Cap(c))) => Some(c),
            _ => None,
        }
    }
}

impl FromStr for SolveOptions {
    type Err = UnknownMethod;

    /// A method name with all other options at their defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(SolveOptions { method: parse_method(s)?, ..SolveOptions::default() })
    }
}

pub fn solve(game: &CostGame, options: &SolveOptions) -> Result<SolutionDocument, SolveError> {
    let players = game.players();
    let n = game.n();
    let savings = savings_transform(game);

    let (allocation, monte_carlo) = match options.method {
        Method::ExactSubset => (shapley_subset(&savings)?, None),
        Method::ExactPermutation => (shapley_permutation(&savings)?, None),
        Method::MonteCarlo => {
            if options.core {
                return Err(SolveError::ExactRequired("core"));
            }
            if options.budgets.is_some() {
                return Err(SolveError::ExactRequired("budgets"));
            }
            let est = shapley_monte_carlo(&savings, options.samples, options.seed)?;
            let alloc = Allocation {
                values: est.sample_means.clone(),
                game_hash: est.game_hash.clone(),
                method: Method::MonteCarlo,
            };
            let section = MonteCarloSection { samples: est.samples, seed: est.seed, stderr: est.stderr };
            (alloc, Some(section))
        }
    };
    let marginal_table = if options.table { Some(TableSection::from_table(&marginal_table(&savings)?)) } else { None };

    let shares: Vec<Rational> = (0..n).map(|i| game.standalone(i) - &allocation.values[i]).collect();

    let mut axioms = AxiomSection { efficiency: check_efficiency(&savings, &allocation)?, symmetry: None, dummy: None };
    if options.axioms {
        let mut sym = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let c = check_symmetry(&savings, i, j, &allocation)?;
                sym.push(SymmetryEntry {
                    players: [players.label(i).to_string(), players.label(j).to_string()],
                    symmetric: c.symmetric,
                    holds: c.holds(),
                });
            }
        }
        let dummy = (0..n)
            .map(|i| {
                let d = check_dummy(&savings, i, &allocation)?;
                Ok(DummyEntry { player: players.label(i).to_string(), dummy: d.dummy, holds: d.holds() })
            })
            .collect::<Result<Vec<_>, AxiomError>>()?;
        axioms.symmetry = Some(sym);
        axioms.dummy = Some(dummy);
    }

    let rationality = if allocation.is_exact() {
        let exact = cost_shares(game, &allocation)?;
        individual_rationality(game, &exact)?
            .players
            .into_iter()
            .map(|p| RationalityEntry {
                player: p.label,
                standalone: (&p.standalone).into(),
                share: (&p.share).into(),
                rational: p.rational,
            })
            .collect()
    } else {
        (0..n)
            .map(|i| RationalityEntry {
                player: players.label(i).to_string(),
                standalone: game.standalone(i).into(),
                share: (&shares[i]).into(),
                rational: allocation.values[i] >= Rational::zero(),
            })
            .collect()
    };

    let core = if options.core {
        let report = core_membership(&savings, &allocation)?;
        Some(CoreSection {
            in_core: report.in_core,
            blocking: report.blocking.map(|b| BlockingSection {
                coalition: players.member_labels(b.coalition).into_iter().map(str::to_string).collect(),
                excess: (&b.excess).into(),
            }),
        })
    } else {
        None
    };

    let budgets = match &options.budgets {
        None => None,
        Some(b) => {
            let report = budget_report(&cost_shares(game, &allocation)?, b)?;
            Some(BudgetSection {
                players: report
                    .players
                    .into_iter()
                    .map(|p| BudgetEntry {
                        player: p.label,
                        budget: (&p.budget).into(),
                        share: (&p.share).into(),
                        variance: (&p.variance).into(),
                        over_budget: p.over_budget,
                    })
                    .collect(),
                corrective_actions: report
                    .corrective_flags
                    .into_iter()
                    .map(|c| CorrectiveEntry { player: c.label, overrun: (&c.overrun).into(), message: c.message })
                    .collect(),
            })
        }
    };

    Ok(SolutionDocument {
        game_hash: game.hash().to_string(),
        method: allocation.method.as_str().to_string(),
        process_tag: game.process_tag().map(str::to_string),
        players: players.labels().into_iter().map(str::to_string).collect(),
        shapley: player_values(players, &allocation.values),
        total_cost: (&shares.iter().sum::<Rational>()).into(),
        cost_shares: player_values(players, &shares),
        grand_savings: savings.grand_value().into(),
        monte_carlo,
        marginal_table,
        axioms,
        rationality,
        core,
        budgets,
    })
}
