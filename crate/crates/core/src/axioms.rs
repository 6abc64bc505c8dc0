//! Checks for the efficiency, symmetry, dummy, and additivity properties.

use thiserror::Error;

use crate::coalition::Coalition;
use crate::game::{CharacteristicGame, GameError};
use crate::shapley::{shapley_subset, Allocation, ShapleyError};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomError {
    #[error("allocation has {got} values for a {expected}-player game")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("player {0} is not in the game")]
    UnknownPlayer(usize),
    #[error("symmetry needs two distinct players")]
    SamePlayer,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
}

fn check_dims(game: &CharacteristicGame, allocation: &Allocation) -> Result<(), AxiomError> {
    if allocation.values.len() != game.n() {
        return Err(AxiomError::DimensionMismatch { expected: game.n(), got: allocation.values.len() });
    }
    Ok(())
}

fn check_player(game: &CharacteristicGame, i: usize) -> Result<(), AxiomError> {
    if i >= game.n() {
        return Err(AxiomError::UnknownPlayer(i));
    }
    Ok(())
}

/// `sum of phi_i == v(N)`, exactly.
pub fn check_efficiency(game: &CharacteristicGame, allocation: &Allocation) -> Result<bool, AxiomError> {
    check_dims(game, allocation)?;
    Ok(&allocation.total() == game.grand_value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryCheck {
    /// `v(S ∪ i) == v(S ∪ j)` for every `S` containing neither.
    pub symmetric: bool,
    pub equal_value: bool,
}

impl SymmetryCheck {
    /// Symmetric players must receive equal values.
    pub fn holds(&self) -> bool {
        !self.symmetric || self.equal_value
    }
}

pub fn check_symmetry(
    game: &CharacteristicGame,
    i: usize,
    j: usize,
    allocation: &Allocation,
) -> Result<SymmetryCheck, AxiomError> {
    check_dims(game, allocation)?;
    check_player(game, i)?;
    check_player(game, j)?;
    if i == j {
        return Err(AxiomError::SamePlayer);
    }
    let others = Coalition::from_mask(game.players().grand().mask() & !(1 << i) & !(1 << j));
    let symmetric = others.subsets().all(|s| game.value(s.with(i)) == game.value(s.with(j)));
    Ok(SymmetryCheck { symmetric, equal_value: allocation.values[i] == allocation.values[j] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DummyCheck {
    /// `v(S ∪ i) - v(S) == 0` for every `S` without `i`.
    pub dummy: bool,
    pub zero_value: bool,
}

impl DummyCheck {
    pub fn holds(&self) -> bool {
        !self.dummy || self.zero_value
    }
}

pub fn check_dummy(game: &CharacteristicGame, i: usize, allocation: &Allocation) -> Result<DummyCheck, AxiomError> {
    check_dims(game, allocation)?;
    check_player(game, i)?;
    let others = game.players().grand().without(i);
    let dummy = others.subsets().all(|s| game.value(s.with(i)) == game.value(s));
    Ok(DummyCheck { dummy, zero_value: allocation.values[i] == Rational::default() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityCheck {
    pub holds: bool,
    pub phi_v: Vec<Rational>,
    pub phi_w: Vec<Rational>,
    pub phi_sum: Vec<Rational>,
}

/// Compares the Shapley value of `v + w` with the sum of the separate values.
pub fn check_additivity(v: &CharacteristicGame, w: &CharacteristicGame) -> Result<AdditivityCheck, AxiomError> {
    let sum = v.sum(w)?;
    let phi_v = shapley_subset(v)?.values;
    let phi_w = shapley_subset(w)?.values;
    let phi_sum = shapley_subset(&sum)?.values;
    let holds = phi_v.iter().zip(&phi_w).zip(&phi_sum).all(|((a, b), s)| &(a + b) == s);
    Ok(AdditivityCheck { holds, phi_v, phi_w, phi_sum })
}
