//! Individual rationality, core membership, and budget comparison.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use thiserror::Error;

use crate::coalition::{check_cap, CapExceeded, Coalition, MAX_SUBSET_PLAYERS};
use crate::game::{savings_transform, CharacteristicGame, CostGame};
use crate::rational::Rational;
use crate::shapley::{Allocation, CostShares};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("cost shares were not derived from this cost game")]
    SharesMismatch,
    #[error("allocation has {got} values for a {expected}-player game")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("allocation sums to {total}, not v(N) = {grand}")]
    Inefficient { total: Box<Rational>, grand: Box<Rational> },
    #[error("no budget given for `{label}`")]
    MissingBudget { label: String },
    #[error("budget given for unknown player `{label}`")]
    UnknownBudget { label: String },
    #[error("negative budget {value} for `{label}`")]
    NegativeBudget { label: String, value: Rational },
    #[error(transparent)]
    Cap(#[from] CapExceeded),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerRationality {
    pub label: String,
    pub standalone: Rational,
    pub share: Rational,
    pub savings: Rational,
    /// `share <= standalone`.
    pub rational: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalityReport {
    pub players: Vec<PlayerRationality>,
    pub all_rational: bool,
}

/// Flags every player whose share exceeds its cost of going alone.
pub fn individual_rationality(cost_game: &CostGame, shares: &CostShares) -> Result<RationalityReport, StabilityError> {
    if shares.shares.len() != cost_game.n() || &shares.game_hash != savings_transform(cost_game).hash() {
        return Err(StabilityError::SharesMismatch);
    }
    let players: Vec<PlayerRationality> = shares
        .shares
        .iter()
        .enumerate()
        .map(|(i, share)| {
            let standalone = cost_game.standalone(i).clone();
            PlayerRationality {
                label: cost_game.players().label(i).to_string(),
                savings: &standalone - share,
                rational: share <= &standalone,
                standalone,
                share: share.clone(),
            }
        })
        .collect();
    let all_rational = players.iter().all(|p| p.rational);
    Ok(RationalityReport { players, all_rational })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockingCoalition {
    pub coalition: Coalition,
    /// `v(S) - sum of phi_i over S`; positive for a blocking coalition.
    pub excess: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreReport {
    pub in_core: bool,
    pub blocking: Option<BlockingCoalition>,
}

/// Sweeps every coalition for `sum of phi over S < v(S)`. Reports the one with
/// the largest excess, smallest mask first among ties.
pub fn core_membership(game: &CharacteristicGame, allocation: &Allocation) -> Result<CoreReport, StabilityError> {
    let n = game.n();
    check_cap(n, MAX_SUBSET_PLAYERS, "core membership")?;
    if allocation.values.len() != n {
        return Err(StabilityError::DimensionMismatch { expected: n, got: allocation.values.len() });
    }
    let total = allocation.total();
    if &total != game.grand_value() {
        return Err(StabilityError::Inefficient { total: Box::new(total), grand: Box::new(game.grand_value().clone()) });
    }

    // Integer scale shared by the game and the allocation.
    let denom = game
        .values()
        .iter()
        .chain(&allocation.values)
        .fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let scale = |v: &Rational| v.numer() * (&denom / v.denom());
    let phi: Vec<BigInt> = allocation.values.iter().map(scale).collect();

    // Gray-code walk: consecutive coalitions differ by one player.
    let mut best: Option<(BigInt, u32)> = None;
    let mut covered = BigInt::default();
    let mut mask = 0u32;
    for k in 1u32..1 << n {
        let flip = k.trailing_zeros() as usize;
        mask ^= 1 << flip;
        if mask & (1 << flip) != 0 {
            covered += &phi[flip];
        } else {
            covered -= &phi[flip];
        }
        let excess = scale(game.value(Coalition::from_mask(mask))) - &covered;
        if excess.is_positive() {
            let better = match &best {
                None => true,
                Some((e, m)) => excess > *e || (excess == *e && mask < *m),
            };
            if better {
                best = Some((excess, mask));
            }
        }
    }
    Ok(match best {
        None => CoreReport { in_core: true, blocking: None },
        Some((excess, mask)) => CoreReport {
            in_core: false,
            blocking: Some(BlockingCoalition {
                coalition: Coalition::from_mask(mask),
                excess: Rational::new(excess, denom),
            }),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerBudget {
    pub label: String,
    pub budget: Rational,
    pub share: Rational,
    /// `share - budget`; positive means overspent.
    pub variance: Rational,
    pub over_budget: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectiveAction {
    pub label: String,
    pub overrun: Rational,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub players: Vec<PlayerBudget>,
    pub corrective_flags: Vec<CorrectiveAction>,
}

pub type Budgets = BTreeMap<String, Rational>;

/// Compares each player's share with its budget, flagging overruns.
pub fn budget_report(shares: &CostShares, budgets: &Budgets) -> Result<BudgetReport, StabilityError> {
    for (label, value) in budgets {
        if shares.players.index_of(label).is_none() {
            return Err(StabilityError::UnknownBudget { label: label.clone() });
        }
        if value.is_negative() {
            return Err(StabilityError::NegativeBudget { label: label.clone(), value: value.clone() });
        }
    }
    let mut players = Vec::with_capacity(shares.shares.len());
    let mut corrective_flags = Vec::new();
    for (p, share) in shares.players.iter().zip(&shares.shares) {
        let budget = budgets
            .get(&p.label)
            .ok_or_else(|| StabilityError::MissingBudget { label: p.label.clone() })?
            .clone();
        let variance = share - &budget;
        let over_budget = share > &budget;
        if over_budget {
            corrective_flags.push(CorrectiveAction {
                label: p.label.clone(),
                overrun: variance.clone(),
                message: format!(
                    "{}: share {} exceeds budget {} by {}; initiate corrective action",
                    p.label, share, budget, variance
                ),
            });
        }
        players.push(PlayerBudget { label: p.label.clone(), budget, share: share.clone(), variance, over_budget });
    }
    Ok(BudgetReport { players, corrective_flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_cost_game, Completion, Players};
    use crate::rational::{int, ratio};
    use crate::shapley::{shapley_subset, solve_cost_game, Method};

    fn backup_sites() -> CostGame {
        build_cost_game(
            &["A", "B", "C"],
            [
                (vec!["A"], int(10)),
                (vec!["B"], int(10)),
                (vec!["C"], int(10)),
                (vec!["A", "B"], int(16)),
                (vec!["A", "C"], int(17)),
                (vec!["B", "C"], int(18)),
                (vec!["A", "B", "C"], int(24)),
            ],
            Completion::Strict,
        )
        .unwrap()
    }

    /// Oracle: per-coalition excess computed directly on rationals.
    fn brute_force_core(game: &CharacteristicGame, phi: &[Rational]) -> Option<(Coalition, Rational)> {
        let mut best: Option<(Coalition, Rational)> = None;
        for m in 0u32..1 << game.n() {
            let c = Coalition::from_mask(m);
            let excess = game.value(c) - c.members().map(|i| phi[i].clone()).sum::<Rational>();
            if excess > Rational::default() && best.as_ref().is_none_or(|(_, e)| excess > *e) {
                best = Some((c, excess));
            }
        }
        best
    }

    #[test]
    fn backup_sites_allocation_is_individually_rational() {
        let g = backup_sites();
        let (_, _, shares) = solve_cost_game(&g).unwrap();
        let r = individual_rationality(&g, &shares).unwrap();
        assert!(r.all_rational);
        let got: Vec<_> = r.players.iter().map(|p| (p.share.clone(), p.standalone.clone())).collect();
        assert_eq!(got, vec![(ratio(15, 2), int(10)), (int(8), int(10)), (ratio(17, 2), int(10))]);
        assert!(r.players.iter().all(|p| p.share < p.standalone));
    }

    #[test]
    fn additive_game_is_rational_at_equality() {
        let g = build_cost_game(&["A", "B"], [(vec!["A"], int(3)), (vec!["B"], int(5))], Completion::Additive).unwrap();
        let (_, _, shares) = solve_cost_game(&g).unwrap();
        let r = individual_rationality(&g, &shares).unwrap();
        assert!(r.all_rational);
        assert!(r.players.iter().all(|p| p.share == p.standalone));
    }

    #[test]
    fn negative_savings_are_flagged() {
        let g = build_cost_game(
            &["A", "B"],
            [(vec!["A"], int(10)), (vec!["B"], int(10)), (vec!["A", "B"], int(25))],
            Completion::Strict,
        )
        .unwrap();
        let (v, alloc, shares) = solve_cost_game(&g).unwrap();
        assert_eq!(v.grand_value(), &int(-5));
        assert_eq!(alloc.values, vec![ratio(-5, 2), ratio(-5, 2)]);
        let r = individual_rationality(&g, &shares).unwrap();
        assert!(!r.all_rational);
        assert!(r.players.iter().all(|p| !p.rational && p.savings < Rational::default()));
    }

    #[test]
    fn rationality_rejects_foreign_shares() {
        let g = backup_sites();
        let other = build_cost_game(&["A", "B", "C"], [(vec!["A"], int(1)), (vec!["B"], int(1)), (vec!["C"], int(1))], Completion::Additive).unwrap();
        let (_, _, shares) = solve_cost_game(&other).unwrap();
        assert_eq!(individual_rationality(&g, &shares).unwrap_err(), StabilityError::SharesMismatch);
    }

    #[test]
    fn backup_sites_allocation_is_in_core() {
        let v = savings_transform(&backup_sites());
        let a = shapley_subset(&v).unwrap();
        let r = core_membership(&v, &a).unwrap();
        assert_eq!(r, CoreReport { in_core: true, blocking: None });
        assert_eq!(brute_force_core(&v, &a.values), None);
    }

    #[test]
    fn zero_game_is_in_core() {
        let v = CharacteristicGame::zero(Players::new(&["A", "B"]).unwrap());
        let a = shapley_subset(&v).unwrap();
        assert!(core_membership(&v, &a).unwrap().in_core);
    }

    #[test]
    fn majority_game_is_blocked() {
        let p = Players::new(&["A", "B", "C"]).unwrap();
        let v = CharacteristicGame::from_fn(p, |c| int(if c.len() >= 2 { 1 } else { 0 }));
        let a = Allocation { values: vec![ratio(1, 3); 3], game_hash: v.hash().clone(), method: Method::ExactSubset };
        let r = core_membership(&v, &a).unwrap();
        assert!(!r.in_core);
        let b = r.blocking.unwrap();
        assert_eq!(b.excess, ratio(1, 3));
        // Pairs AB, AC, BC tie; AB has the smallest mask.
        assert_eq!(b.coalition, Coalition::from_players([0, 1]));
        assert_eq!(brute_force_core(&v, &a.values), Some((b.coalition, b.excess)));
    }

    #[test]
    fn core_rejects_inefficient_allocation() {
        let v = savings_transform(&backup_sites());
        let a = Allocation { values: vec![int(1); 3], game_hash: v.hash().clone(), method: Method::ExactSubset };
        assert!(matches!(core_membership(&v, &a), Err(StabilityError::Inefficient { .. })));
    }

    #[test]
    fn budgets() {
        let (_, _, shares) = solve_cost_game(&backup_sites()).unwrap();
        let b: Budgets = ["A", "B", "C"].iter().map(|l| (l.to_string(), int(8))).collect();
        let r = budget_report(&shares, &b).unwrap();
        assert_eq!(r.corrective_flags.len(), 1);
        assert_eq!(r.corrective_flags[0].label, "C");
        assert_eq!(r.corrective_flags[0].overrun, ratio(1, 2));
        assert!(r.corrective_flags[0].message.contains("corrective action"));
        assert_eq!(r.players[0].variance, ratio(-1, 2));
        assert_eq!(r.players[1].variance, int(0));
        assert!(!r.players[1].over_budget);

        let exact: Budgets = r.players.iter().map(|p| (p.label.clone(), p.share.clone())).collect();
        let r = budget_report(&shares, &exact).unwrap();
        assert!(r.corrective_flags.is_empty());
        assert!(r.players.iter().all(|p| p.variance == int(0)));

        let zero: Budgets = ["A", "B", "C"].iter().map(|l| (l.to_string(), int(0))).collect();
        assert_eq!(budget_report(&shares, &zero).unwrap().corrective_flags.len(), 3);
    }

    #[test]
    fn budget_errors() {
        let (_, _, shares) = solve_cost_game(&backup_sites()).unwrap();
        let mut b: Budgets = ["A", "B"].iter().map(|l| (l.to_string(), int(8))).collect();
        assert_eq!(budget_report(&shares, &b).unwrap_err(), StabilityError::MissingBudget { label: "C".into() });
        b.insert("C".into(), int(-1));
        assert!(matches!(budget_report(&shares, &b), Err(StabilityError::NegativeBudget { .. })));
        b.insert("C".into(), int(1));
        b.insert("Z".into(), int(1));
        assert_eq!(budget_report(&shares, &b).unwrap_err(), StabilityError::UnknownBudget { label: "Z".into() });
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_game(max_n: usize) -> impl Strategy<Value = CharacteristicGame> {
            (1..=max_n).prop_flat_map(|n| {
                proptest::collection::vec((-20i64..30, 1i64..4), 1usize << n).prop_map(move |raw| {
                    let labels: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
                    CharacteristicGame::from_fn(Players::new(&labels).unwrap(), |c| {
                        let (p, q) = raw[c.mask() as usize];
                        ratio(p, q)
                    })
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn sweep_agrees_with_brute_force(g in arb_game(6)) {
                let a = shapley_subset(&g).unwrap();
                let r = core_membership(&g, &a).unwrap();
                let oracle = brute_force_core(&g, &a.values);
                prop_assert_eq!(r.in_core, oracle.is_none());
                prop_assert_eq!(r.blocking.map(|b| (b.coalition, b.excess)), oracle);
            }

            #[test]
            fn superadditive_core_is_rational(base in proptest::collection::vec(1i64..40, 1..6)) {
                // Subadditive cost: max standalone plus half a unit per extra member.
                let n = base.len();
                let labels: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
                let entries: Vec<(Vec<String>, Rational)> = (1u32..1 << n).map(|m| {
                    let c = Coalition::from_mask(m);
                    let max = c.members().map(|i| base[i]).max().unwrap();
                    (c.members().map(|i| labels[i].clone()).collect(), int(max) + ratio(c.len() as i64 - 1, 2))
                }).collect();
                let g = build_cost_game(&labels, entries, Completion::Strict).unwrap();
                let (v, a, shares) = solve_cost_game(&g).unwrap();
                let rational = individual_rationality(&g, &shares).unwrap();
                prop_assert_eq!(rational.all_rational, a.values.iter().all(|x| !x.is_negative()));
                if core_membership(&v, &a).unwrap().in_core {
                    prop_assert!(rational.all_rational);
                }
            }
        }
    }
}
