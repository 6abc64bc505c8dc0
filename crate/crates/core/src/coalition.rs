//! Coalitions as bit masks over player indices.

use std::fmt;

use thiserror::Error;

/// Largest ground set for which the full coalition map is stored and
/// subset-based operations are evaluated exactly.
pub const MAX_SUBSET_PLAYERS: usize = 20;

/// Largest ground set for which all `n!` arrival orders are enumerated.
pub const MAX_PERMUTATION_PLAYERS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{players} players exceeds the limit of {cap} for {operation}")]
pub struct CapExceeded {
    pub players: usize,
    pub cap: usize,
    pub operation: &'static str,
}

pub(crate) fn check_cap(players: usize, cap: usize, operation: &'static str) -> Result<(), CapExceeded> {
    if players > cap {
        Err(CapExceeded { players, cap, operation })
    } else {
        Ok(())
    }
}

/// A subset of the players of a game, bit `i` set iff player `i` is a member.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub const fn from_mask(mask: u32) -> Self {
        Coalition(mask)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn singleton(player: usize) -> Self {
        Coalition(1 << player)
    }

    /// The grand coalition of `n` players.
    pub const fn grand(n: usize) -> Self {
        if n >= 32 {
            Coalition(u32::MAX)
        } else {
            Coalition((1u32 << n) - 1)
        }
    }

    pub fn from_players<I: IntoIterator<Item = usize>>(players: I) -> Self {
        Coalition(players.into_iter().fold(0, |m, p| m | (1 << p)))
    }

    pub const fn contains(self, player: usize) -> bool {
        self.0 & (1 << player) != 0
    }

    pub const fn with(self, player: usize) -> Self {
        Coalition(self.0 | (1 << player))
    }

    pub const fn without(self, player: usize) -> Self {
        Coalition(self.0 & !(1 << player))
    }

    pub const fn union(self, other: Coalition) -> Self {
        Coalition(self.0 | other.0)
    }

    pub const fn intersection(self, other: Coalition) -> Self {
        Coalition(self.0 & other.0)
    }

    pub const fn is_disjoint(self, other: Coalition) -> bool {
        self.0 & other.0 == 0
    }

    pub const fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest member index, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Member indices in ascending order.
    pub fn members(self) -> Members {
        Members(self.0)
    }

    /// All subsets of this coalition (including the empty set and itself),
    /// in ascending mask order.
    pub fn subsets(self) -> Subsets {
        Subsets { of: self.0, next: Some(0) }
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

#[derive(Debug, Clone)]
pub struct Members(u32);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Members {}

/// Ascending enumeration of the submasks of a fixed mask.
#[derive(Debug, Clone)]
pub struct Subsets {
    of: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        // Incrementing inside the mask's bit positions: fill the holes, add one, clear the holes.
        self.next = if cur == self.of {
            None
        } else {
            Some(((cur | !self.of).wrapping_add(1)) & self.of)
        };
        Some(Coalition(cur))
    }
}

/// Ascending stream of coalitions of an `n`-player ground set, produced lazily.
#[derive(Debug, Clone)]
pub struct CoalitionStream {
    next: u64,
    end: u64,
    required: Option<usize>,
}

impl Iterator for CoalitionStream {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        if self.next >= self.end {
            return None;
        }
        let m = self.next as u32;
        self.next += 1;
        Some(Coalition(match self.required {
            None => m,
            // Spread the counter around the fixed bit; monotone in `m`.
            Some(p) => ((m >> p) << (p + 1)) | (1 << p) | (m & ((1 << p) - 1)),
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for CoalitionStream {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerateError {
    #[error("player count must be positive")]
    NoPlayers,
    #[error(transparent)]
    Cap(#[from] CapExceeded),
    #[error("player {player} is outside the ground set of {players} players")]
    UnknownPlayer { player: usize, players: usize },
}

/// Every coalition of `n` players exactly once in ascending mask order,
/// optionally only those containing `must_contain`.
pub fn enumerate_coalitions(n: usize, must_contain: Option<usize>) -> Result<CoalitionStream, EnumerateError> {
    if n == 0 {
        return Err(EnumerateError::NoPlayers);
    }
    check_cap(n, MAX_SUBSET_PLAYERS, "coalition enumeration")?;
    match must_contain {
        Some(p) if p >= n => Err(EnumerateError::UnknownPlayer { player: p, players: n }),
        Some(p) => Ok(CoalitionStream { next: 0, end: 1 << (n - 1), required: Some(p) }),
        None => Ok(CoalitionStream { next: 0, end: 1 << n, required: None }),
    }
}
