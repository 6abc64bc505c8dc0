//! Exact Shapley values by subset weights and by arrival-order enumeration,
//! the per-order marginal table, and derived cost shares.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::coalition::{check_cap, CapExceeded, Coalition, MAX_PERMUTATION_PLAYERS, MAX_SUBSET_PLAYERS};
use crate::game::{savings_transform, CharacteristicGame, CostGame, GameHash, Players};
use crate::rational::{factorial, Accumulator, Rational, Scaled, ScaledInts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ExactSubset,
    ExactPermutation,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactSubset => "exact-subset",
            Method::ExactPermutation => "exact-permutation",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-player Shapley values of one characteristic game.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub values: Vec<Rational>,
    pub game_hash: GameHash,
    pub method: Method,
}

impl Allocation {
    pub fn total(&self) -> Rational {
        self.values.iter().sum()
    }

    pub fn is_exact(&self) -> bool {
        self.method != Method::MonteCarlo
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapleyError {
    #[error(transparent)]
    Cap(#[from] CapExceeded),
    #[error("allocation was computed for a different game")]
    GameMismatch,
    #[error("allocation has {got} values for a {expected}-player game")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cost shares need an exact allocation, got {0}")]
    InexactAllocation(Method),
    #[error("at least one sample is required")]
    ZeroSamples,
}

/// Weighted sum over coalitions containing each player:
/// `phi_i = sum over S containing i of (|S|-1)!(n-|S|)!/n! * (v(S) - v(S \ i))`.
pub fn shapley_subset(game: &CharacteristicGame) -> Result<Allocation, ShapleyError> {
    let n = game.n();
    check_cap(n, MAX_SUBSET_PLAYERS, "subset-formula Shapley")?;
    let scaled = Scaled::new(game.values());
    let per_size = match &scaled.ints {
        ScaledInts::Small(v) => size_grouped_marginals(v, n),
        ScaledInts::Big(v) => size_grouped_marginals(v, n),
    };
    let facts: Vec<BigInt> = (0..=n).map(factorial).collect();
    let denom = &facts[n] * &scaled.denom;
    let values = per_size
        .into_iter()
        .map(|sizes| {
            let numer: BigInt = sizes
                .iter()
                .enumerate()
                .map(|(k, d)| &facts[k] * &facts[n - 1 - k] * d)
                .sum();
            Rational::new(numer, denom.clone())
        })
        .collect();
    Ok(Allocation { values, game_hash: game.hash().clone(), method: Method::ExactSubset })
}

/// For each player `i` and each `k = |S| - 1`, the sum of `v(S) - v(S \ i)` over
/// coalitions `S` containing `i`.
fn size_grouped_marginals<T: Accumulator>(values: &[T], n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| {
            let bit = 1usize << i;
            let mut sums = vec![T::zero(); n];
            for mask in 0..values.len() {
                if mask & bit != 0 {
                    let k = (mask.count_ones() - 1) as usize;
                    sums[k] += &T::diff(&values[mask], &values[mask ^ bit]);
                }
            }
            sums.iter().map(Accumulator::to_bigint).collect()
        })
        .collect()
}

/// Advances `order` to the next permutation in lexicographic order.
pub(crate) fn next_permutation(order: &mut [usize]) -> bool {
    let Some(pivot) = order.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let swap = order.iter().rposition(|&x| x > order[pivot]).expect("successor exists");
    order.swap(pivot, swap);
    order[pivot + 1..].reverse();
    true
}

/// Visits every arrival order of `n` players lexicographically, passing each
/// player's marginal contribution `v(P ∪ i) - v(P)`, indexed by player.
fn for_each_order<T: Accumulator>(values: &[T], n: usize, mut visit: impl FnMut(&[T])) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut marginals = vec![T::zero(); n];
    loop {
        let mut prefix = 0usize;
        for &p in &order {
            let next = prefix | (1 << p);
            marginals[p] = T::diff(&values[next], &values[prefix]);
            prefix = next;
        }
        visit(&marginals);
        if !next_permutation(&mut order) {
            break;
        }
    }
}

fn order_totals<T: Accumulator>(values: &[T], n: usize) -> Vec<BigInt> {
    let mut totals = vec![T::zero(); n];
    for_each_order(values, n, |marginals| {
        for (t, m) in totals.iter_mut().zip(marginals) {
            *t += m;
        }
    });
    totals.iter().map(Accumulator::to_bigint).collect()
}

/// Average marginal contribution over all `n!` arrival orders.
pub fn shapley_permutation(game: &CharacteristicGame) -> Result<Allocation, ShapleyError> {
    let n = game.n();
    check_cap(n, MAX_PERMUTATION_PLAYERS, "permutation-formula Shapley")?;
    let scaled = Scaled::new(game.values());
    let totals = match &scaled.ints {
        ScaledInts::Small(v) => order_totals(v, n),
        ScaledInts::Big(v) => order_totals(v, n),
    };
    let denom = factorial(n) * &scaled.denom;
    let values = totals.into_iter().map(|t| Rational::new(t, denom.clone())).collect();
    Ok(Allocation { values, game_hash: game.hash().clone(), method: Method::ExactPermutation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    /// Player indices in arrival order.
    pub order: Vec<usize>,
    /// Marginal contribution of each player (indexed by player) under this order.
    pub cells: Vec<Rational>,
}

/// Marginal contributions under every arrival order, with column totals.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub players: Players,
    pub rows: Vec<MarginalRow>,
    pub column_totals: Vec<Rational>,
    /// `n!`, the divisor turning totals into Shapley values.
    pub order_count: BigInt,
    pub shapley_row: Vec<Rational>,
}

pub fn marginal_table(game: &CharacteristicGame) -> Result<MarginalTable, ShapleyError> {
    let n = game.n();
    check_cap(n, MAX_PERMUTATION_PLAYERS, "the marginal table")?;
    let values = game.values();
    let mut rows = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        let mut cells = vec![Rational::zero(); n];
        let mut prefix = Coalition::EMPTY;
        for &p in &order {
            let next = prefix.with(p);
            cells[p] = &values[next.mask() as usize] - &values[prefix.mask() as usize];
            prefix = next;
        }
        rows.push(MarginalRow { order: order.clone(), cells });
        if !next_permutation(&mut order) {
            break;
        }
    }
    let column_totals: Vec<Rational> =
        (0..n).map(|i| rows.iter().map(|r| &r.cells[i]).sum()).collect();
    let order_count = factorial(n);
    let divisor = Rational::from_integer(order_count.clone());
    let shapley_row = column_totals.iter().map(|t| t / &divisor).collect();
    Ok(MarginalTable { players: game.players().clone(), rows, column_totals, order_count, shapley_row })
}

/// What each player pays: standalone cost minus its share of the savings.
#[derive(Debug, Clone, PartialEq)]
pub struct CostShares {
    pub players: Players,
    pub shares: Vec<Rational>,
    pub total: Rational,
    pub game_hash: GameHash,
}

/// `x_i = C({i}) - phi_i`, where `allocation` is an exact Shapley allocation of
/// the savings game of `cost_game`.
pub fn cost_shares(cost_game: &CostGame, allocation: &Allocation) -> Result<CostShares, ShapleyError> {
    if !allocation.is_exact() {
        return Err(ShapleyError::InexactAllocation(allocation.method));
    }
    if allocation.values.len() != cost_game.n() {
        return Err(ShapleyError::DimensionMismatch { expected: cost_game.n(), got: allocation.values.len() });
    }
    let savings = savings_transform(cost_game);
    if &allocation.game_hash != savings.hash() {
        return Err(ShapleyError::GameMismatch);
    }
    let shares: Vec<Rational> = allocation
        .values
        .iter()
        .enumerate()
        .map(|(i, phi)| cost_game.standalone(i) - phi)
        .collect();
    let total = shares.iter().sum();
    Ok(CostShares { players: cost_game.players().clone(), shares, total, game_hash: savings.hash().clone() })
}

/// Savings game, exact subset-formula Shapley values, and cost shares in one call.
pub fn solve_cost_game(cost_game: &CostGame) -> Result<(CharacteristicGame, Allocation, CostShares), ShapleyError> {
    let savings = savings_transform(cost_game);
    let allocation = shapley_subset(&savings)?;
    let shares = cost_shares(cost_game, &allocation)?;
    Ok((savings, allocation, shares))
}
