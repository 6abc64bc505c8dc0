//! Players, cost games, and characteristic (savings) games.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{Signed, Zero};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::coalition::{check_cap, CapExceeded, Coalition, MAX_SUBSET_PLAYERS};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlayerId {
    pub index: usize,
    pub label: String,
}

/// The ordered ground set of a game. Indices are positions; labels are unique.
#[derive(Clone, PartialEq, Eq)]
pub struct Players {
    ids: Arc<[PlayerId]>,
}

impl Players {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Players, GameError> {
        if labels.is_empty() {
            return Err(GameError::NoPlayers);
        }
        check_cap(labels.len(), MAX_SUBSET_PLAYERS, "a stored game")?;
        let mut seen = BTreeSet::new();
        let mut ids = Vec::with_capacity(labels.len());
        for (index, label) in labels.iter().enumerate() {
            let label = label.as_ref().trim();
            if label.is_empty() {
                return Err(GameError::EmptyLabel { index });
            }
            if label.contains(',') {
                return Err(GameError::InvalidLabel { label: label.to_string() });
            }
            if !seen.insert(label.to_string()) {
                return Err(GameError::DuplicateLabel { label: label.to_string() });
            }
            ids.push(PlayerId { index, label: label.to_string() });
        }
        Ok(Players { ids: ids.into() })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PlayerId> {
        self.ids.iter()
    }

    pub fn get(&self, index: usize) -> Option<&PlayerId> {
        self.ids.get(index)
    }

    pub fn label(&self, index: usize) -> &str {
        &self.ids[index].label
    }

    pub fn labels(&self) -> Vec<&str> {
        self.ids.iter().map(|p| p.label.as_str()).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.ids.iter().position(|p| p.label == label.trim())
    }

    pub fn grand(&self) -> Coalition {
        Coalition::grand(self.len())
    }

    /// Resolves a set of labels to a coalition.
    pub fn coalition<I, S>(&self, labels: I) -> Result<Coalition, GameError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut c = Coalition::EMPTY;
        for l in labels {
            let l = l.as_ref();
            let i = self.index_of(l).ok_or_else(|| GameError::UnknownLabel { label: l.trim().to_string() })?;
            c = c.with(i);
        }
        Ok(c)
    }

    /// Member labels of `c` in index order.
    pub fn member_labels(&self, c: Coalition) -> Vec<&str> {
        c.members().map(|i| self.label(i)).collect()
    }

    /// `{A,B}`-style rendering in index order.
    pub fn display(&self, c: Coalition) -> String {
        format!("{{{}}}", self.member_labels(c).join(","))
    }

    /// Canonical document key: member labels sorted lexicographically, comma-joined.
    pub fn key(&self, c: Coalition) -> String {
        let mut labels = self.member_labels(c);
        labels.sort_unstable();
        labels.join(",")
    }

    fn restrict(&self, c: Coalition) -> Players {
        let ids: Vec<PlayerId> = c
            .members()
            .enumerate()
            .map(|(index, i)| PlayerId { index, label: self.label(i).to_string() })
            .collect();
        Players { ids: ids.into() }
    }
}

impl fmt::Debug for Players {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.ids.iter().map(|p| &p.label)).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("player {index} has an empty label")]
    EmptyLabel { index: usize },
    #[error("label `{label}` may not contain a comma")]
    InvalidLabel { label: String },
    #[error("duplicate player label `{label}`")]
    DuplicateLabel { label: String },
    #[error("unknown player label `{label}`")]
    UnknownLabel { label: String },
    #[error("missing cost for singleton coalition `{label}`")]
    MissingSingleton { label: String },
    #[error("missing cost for coalition `{coalition}` under strict completion")]
    MissingCoalition { coalition: String },
    #[error("negative cost {value} for coalition `{coalition}`")]
    NegativeCost { coalition: String, value: Rational },
    #[error("cost entry for the empty coalition")]
    EmptyCoalition,
    #[error("coalition `{coalition}` has more than one cost entry")]
    DuplicateEntry { coalition: String },
    #[error("characteristic function must have v(empty) = 0")]
    NonzeroEmpty,
    #[error("expected {expected} coalition values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("games are defined over different player sets")]
    PlayerMismatch,
    #[error(transparent)]
    Cap(#[from] CapExceeded),
}

/// How coalitions absent from the input are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Completion {
    /// Every nonempty coalition must be listed.
    #[default]
    Strict,
    /// Missing coalitions cost the sum of their members' standalone costs.
    Additive,
}

/// Stable digest of a game's players and values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameHash(String);

impl GameHash {
    fn of(kind: &str, players: &Players, values: &[Rational]) -> GameHash {
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        for p in players.iter() {
            h.update([0u8]);
            h.update(p.label.as_bytes());
        }
        for v in values {
            h.update([1u8]);
            h.update(v.to_string().as_bytes());
        }
        GameHash(hex::encode(&h.finalize()[..16]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GameHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Total cost map over the coalitions of a ground set, `C(empty) = 0`.
#[derive(Debug, Clone)]
pub struct CostGame {
    players: Players,
    costs: Arc<[Rational]>,
    process_tag: Option<String>,
    hash: OnceLock<GameHash>,
}

impl PartialEq for CostGame {
    fn eq(&self, other: &Self) -> bool {
        self.players == other.players && self.costs == other.costs && self.process_tag == other.process_tag
    }
}

impl CostGame {
    pub fn players(&self) -> &Players {
        &self.players
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn cost(&self, c: Coalition) -> &Rational {
        &self.costs[c.mask() as usize]
    }

    pub fn standalone(&self, player: usize) -> &Rational {
        self.cost(Coalition::singleton(player))
    }

    pub fn costs(&self) -> &[Rational] {
        &self.costs
    }

    pub fn process_tag(&self) -> Option<&str> {
        self.process_tag.as_deref()
    }

    pub fn with_process_tag(mut self, tag: Option<String>) -> Self {
        self.process_tag = tag;
        self
    }

    pub fn hash(&self) -> &GameHash {
        self.hash.get_or_init(|| GameHash::of("cost", &self.players, &self.costs))
    }

    /// The game played by the members of `c` alone, with costs read from this game.
    pub fn subgame(&self, c: Coalition) -> CostGame {
        let members: Vec<usize> = c.members().collect();
        let k = members.len();
        let costs: Vec<Rational> = (0u32..1 << k)
            .map(|local| {
                let global = Coalition::from_players((0..k).filter(|b| local & (1 << b) != 0).map(|b| members[b]));
                self.cost(global).clone()
            })
            .collect();
        CostGame {
            players: self.players.restrict(c),
            costs: costs.into(),
            process_tag: self.process_tag.clone(),
            hash: OnceLock::new(),
        }
    }
}

/// Builds a total cost game from labelled coalition entries.
///
/// Each entry key is a set of player labels. Every singleton must be present
/// and all costs must be nonnegative. Other coalitions left out of `entries`
/// are an error under [`Completion::Strict`] and priced as the sum of their
/// members' standalone costs under [`Completion::Additive`].
pub fn build_cost_game<L, K, S>(
    labels: &[L],
    entries: impl IntoIterator<Item = (K, Rational)>,
    completion: Completion,
) -> Result<CostGame, GameError>
where
    L: AsRef<str>,
    K: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let players = Players::new(labels)?;
    let n = players.len();
    let mut given: HashMap<Coalition, Rational> = HashMap::new();
    for (key, cost) in entries {
        let c = players.coalition(key)?;
        if c.is_empty() {
            return Err(GameError::EmptyCoalition);
        }
        if cost.is_negative() {
            return Err(GameError::NegativeCost { coalition: players.key(c), value: cost });
        }
        if given.insert(c, cost).is_some() {
            return Err(GameError::DuplicateEntry { coalition: players.key(c) });
        }
    }
    for i in 0..n {
        if !given.contains_key(&Coalition::singleton(i)) {
            return Err(GameError::MissingSingleton { label: players.label(i).to_string() });
        }
    }
    let mut costs = Vec::with_capacity(1 << n);
    costs.push(Rational::zero());
    for mask in 1u32..1 << n {
        let c = Coalition::from_mask(mask);
        let cost = match given.remove(&c) {
            Some(v) => v,
            None => match completion {
                Completion::Strict => return Err(GameError::MissingCoalition { coalition: players.key(c) }),
                Completion::Additive => c.members().map(|i| costs[1 << i].clone()).sum(),
            },
        };
        costs.push(cost);
    }
    Ok(CostGame { players, costs: costs.into(), process_tag: None, hash: OnceLock::new() })
}

/// A transferable-utility game `v` over all coalitions with `v(empty) = 0`.
#[derive(Debug, Clone)]
pub struct CharacteristicGame {
    players: Players,
    values: Arc<[Rational]>,
    hash: OnceLock<GameHash>,
}

impl PartialEq for CharacteristicGame {
    fn eq(&self, other: &Self) -> bool {
        self.players == other.players && self.values == other.values
    }
}

impl CharacteristicGame {
    /// `values[mask]` is the worth of the coalition with that mask.
    pub fn new(players: Players, values: Vec<Rational>) -> Result<Self, GameError> {
        let expected = 1usize << players.len();
        if values.len() != expected {
            return Err(GameError::WrongLength { expected, got: values.len() });
        }
        if !values[0].is_zero() {
            return Err(GameError::NonzeroEmpty);
        }
        Ok(CharacteristicGame { players, values: values.into(), hash: OnceLock::new() })
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S], values: Vec<Rational>) -> Result<Self, GameError> {
        Self::new(Players::new(labels)?, values)
    }

    /// Builds `v` from a function of the coalition; the empty coalition is forced to 0.
    pub fn from_fn(players: Players, mut f: impl FnMut(Coalition) -> Rational) -> Self {
        let values: Vec<Rational> = (0u32..1 << players.len())
            .map(|m| if m == 0 { Rational::zero() } else { f(Coalition::from_mask(m)) })
            .collect();
        CharacteristicGame { players, values: values.into(), hash: OnceLock::new() }
    }

    pub fn zero(players: Players) -> Self {
        Self::from_fn(players, |_| Rational::zero())
    }

    pub fn players(&self) -> &Players {
        &self.players
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn value(&self, c: Coalition) -> &Rational {
        &self.values[c.mask() as usize]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn grand_value(&self) -> &Rational {
        self.value(self.players.grand())
    }

    pub fn hash(&self) -> &GameHash {
        self.hash.get_or_init(|| GameHash::of("savings", &self.players, &self.values))
    }

    /// The game `(v + w)(S) = v(S) + w(S)`.
    pub fn sum(&self, other: &CharacteristicGame) -> Result<CharacteristicGame, GameError> {
        if self.players != other.players {
            return Err(GameError::PlayerMismatch);
        }
        let values: Vec<Rational> = self.values.iter().zip(other.values.iter()).map(|(a, b)| a + b).collect();
        Ok(CharacteristicGame { players: self.players.clone(), values: values.into(), hash: OnceLock::new() })
    }
}

/// Savings relative to going alone: `v(S) = sum of C({i}) over S, minus C(S)`.
pub fn savings_transform(game: &CostGame) -> CharacteristicGame {
    let n = game.n();
    let mut standalone_sum = vec![Rational::zero(); 1 << n];
    let values: Vec<Rational> = (0usize..1 << n)
        .map(|mask| {
            if mask != 0 {
                let low = mask.trailing_zeros() as usize;
                standalone_sum[mask] = &standalone_sum[mask & (mask - 1)] + game.standalone(low);
            }
            &standalone_sum[mask] - &game.costs[mask]
        })
        .collect();
    CharacteristicGame { players: game.players.clone(), values: values.into(), hash: OnceLock::new() }
}

/// Recovers costs from savings given standalone costs: `C(S) = sum of C({i}) over S, minus v(S)`.
pub fn reconstruct_costs(savings: &CharacteristicGame, standalone: &[Rational]) -> Vec<Rational> {
    (0u32..1 << savings.n())
        .map(|m| {
            let c = Coalition::from_mask(m);
            c.members().map(|i| standalone[i].clone()).sum::<Rational>() - savings.value(c)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Superadditivity {
    pub superadditive: bool,
    /// First disjoint pair `(S, T)`, `S < T`, with `v(S ∪ T) < v(S) + v(T)`.
    pub witness: Option<(Coalition, Coalition)>,
}

/// Checks `v(S ∪ T) >= v(S) + v(T)` over all disjoint nonempty pairs (3^n work).
pub fn is_superadditive(game: &CharacteristicGame) -> Superadditivity {
    let grand = game.players.grand();
    for s in 1..=grand.mask() {
        let s = Coalition::from_mask(s);
        let rest = Coalition::from_mask(grand.mask() & !s.mask());
        for t in rest.subsets().filter(|t| t.mask() > s.mask()) {
            if game.value(s.union(t)) < &(game.value(s) + game.value(t)) {
                return Superadditivity { superadditive: false, witness: Some((s, t)) };
            }
        }
    }
    Superadditivity { superadditive: true, witness: None }
}
