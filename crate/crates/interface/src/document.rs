//! The game file format: a JSON object with ordered players, a cost per
//! coalition keyed by comma-joined labels, and optional budgets.
//!
//! ```json
//! {
//!   "players": ["A", "B", "C"],
//!   "costs": { "A": "10", "A,B": "16", "A,B,C": "24", ... },
//!   "budgets": { "A": "8" },
//!   "process_tag": "APO06",
//!   "completion": "strict"
//! }
//! ```
//!
//! Values are `p/q` strings or finite decimals (JSON numbers are accepted and
//! read through their decimal text). Coalition keys may list labels in any
//! order; they are stored sorted.

use std::collections::BTreeMap;
use std::fmt;

use costshare_core::game::GameError;
use costshare_core::rational::{parse_rational, to_exact_string};
use costshare_core::{build_cost_game, Budgets, Coalition, Completion, CostGame, Players};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionMode {
    #[default]
    Strict,
    Additive,
}

impl From<CompletionMode> for Completion {
    fn from(mode: CompletionMode) -> Self {
        match mode {
            CompletionMode::Strict => Completion::Strict,
            CompletionMode::Additive => Completion::Additive,
        }
    }
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub players: Vec<String>,
    #[serde(deserialize_with = "value_map")]
    pub costs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "optional_value_map")]
    pub budgets: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process_tag: Option<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub completion: CompletionMode,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ValueText {
    Text(String),
    Number(serde_json::Number),
}

impl ValueText {
    fn into_string(self) -> String {
        match self {
            ValueText::Text(s) => s,
            ValueText::Number(n) => n.to_string(),
        }
    }
}

fn value_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, String>, D::Error> {
    let raw = BTreeMap::<String, ValueText>::deserialize(d)?;
    Ok(raw.into_iter().map(|(k, v)| (k, v.into_string())).collect())
}

fn optional_value_map<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BTreeMap<String, String>>, D::Error> {
    value_map(d).map(Some)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{}", location_message(.field, .line, .message))]
    Invalid { field: String, line: Option<usize>, message: String },
}

fn location_message(field: &str, line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("{field} (line {l}): {message}"),
        None => format!("{field}: {message}"),
    }
}

impl DocumentError {
    pub fn field(&self) -> Option<&str> {
        match self {
            DocumentError::Syntax { .. } => None,
            DocumentError::Invalid { field, .. } => Some(field),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            DocumentError::Syntax { line, .. } => Some(*line),
            DocumentError::Invalid { line, .. } => *line,
        }
    }
}

/// A parsed game file.
#[derive(Debug, Clone)]
pub struct ParsedGame {
    /// Canonical form of the input: coalition keys sorted, values as written.
    pub document: GameDocument,
    pub game: CostGame,
    pub budgets: Option<Budgets>,
}

/// Sorted, trimmed, comma-joined form of a coalition key.
pub fn canonical_key(key: &str) -> String {
    let mut labels: Vec<&str> = key.split(',').map(str::trim).collect();
    labels.sort_unstable();
    labels.join(",")
}

/// First line of `text` mentioning the JSON string `"needle"`.
fn line_of(text: &str, needle: &str) -> Option<usize> {
    let quoted = format!("\"{needle}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

pub fn parse_game(text: &str) -> Result<ParsedGame, DocumentError> {
    let raw: GameDocument = serde_json::from_str(text).map_err(|e| DocumentError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let invalid = |field: String, needle: Option<&str>, message: String| DocumentError::Invalid {
        line: needle.and_then(|n| line_of(text, n)),
        field,
        message,
    };

    let players = Players::new(&raw.players).map_err(|e| invalid("players".into(), None, e.to_string()))?;

    let mut costs = BTreeMap::new();
    let mut entries = Vec::with_capacity(raw.costs.len());
    for (key, value) in &raw.costs {
        let canon = canonical_key(key);
        let field = format!("costs[\"{key}\"]");
        let labels: Vec<&str> = canon.split(',').collect();
        for l in &labels {
            if l.is_empty() {
                return Err(invalid(field, Some(key), "empty label in coalition key".into()));
            }
            if players.index_of(l).is_none() {
                return Err(invalid(field, Some(key), format!("unknown player label `{l}`")));
            }
        }
        let cost = parse_rational(value).map_err(|e| invalid(field.clone(), Some(key), e.to_string()))?;
        if costs.insert(canon.clone(), value.trim().to_string()).is_some() {
            return Err(invalid(field, Some(key), format!("coalition `{canon}` is listed more than once")));
        }
        entries.push((labels.iter().map(|s| s.to_string()).collect::<Vec<_>>(), cost));
    }

    let game = build_cost_game(&raw.players, entries, raw.completion.into())
        .map_err(|e| game_error(e, &invalid))?
        .with_process_tag(raw.process_tag.clone());

    let budgets = match &raw.budgets {
        None => None,
        Some(map) => {
            let mut out = Budgets::new();
            let mut canon_budgets = BTreeMap::new();
            for (label, value) in map {
                let field = format!("budgets[\"{label}\"]");
                let label = label.trim();
                if players.index_of(label).is_none() {
                    return Err(invalid(field, Some(label), format!("unknown player label `{label}`")));
                }
                let v = parse_rational(value).map_err(|e| invalid(field.clone(), Some(label), e.to_string()))?;
                if v < Default::default() {
                    return Err(invalid(field, Some(label), format!("negative budget {v}")));
                }
                out.insert(label.to_string(), v);
                canon_budgets.insert(label.to_string(), value.trim().to_string());
            }
            Some((out, canon_budgets))
        }
    };

    let document = GameDocument {
        players: players.labels().iter().map(|s| s.to_string()).collect(),
        costs,
        budgets: budgets.as_ref().map(|(_, c)| c.clone()),
        process_tag: raw.process_tag,
        completion: raw.completion,
    };
    Ok(ParsedGame { document, game, budgets: budgets.map(|(b, _)| b) })
}

fn game_error(e: GameError, invalid: &impl Fn(String, Option<&str>, String) -> DocumentError) -> DocumentError {
    let message = e.to_string();
    match &e {
        GameError::MissingSingleton { label } => invalid("costs".into(), None, format!("{message} (`{label}`)")),
        GameError::MissingCoalition { coalition } => invalid(format!("costs[\"{coalition}\"]"), None, message),
        GameError::NegativeCost { coalition, .. } | GameError::DuplicateEntry { coalition } => {
            invalid(format!("costs[\"{coalition}\"]"), Some(coalition), message)
        }
        GameError::UnknownLabel { label } => invalid("costs".into(), Some(label), message),
        _ => invalid("players".into(), None, message),
    }
}

/// Reads a standalone budgets file: a JSON object of label to value.
pub fn parse_budgets(text: &str, players: &Players) -> Result<Budgets, DocumentError> {
    let raw: BTreeMap<String, ValueText> = serde_json::from_str(text).map_err(|e| DocumentError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut out = Budgets::new();
    for (label, value) in raw {
        let field = format!("budgets[\"{label}\"]");
        if players.index_of(&label).is_none() {
            return Err(DocumentError::Invalid {
                line: line_of(text, &label),
                field,
                message: format!("unknown player label `{label}`"),
            });
        }
        let v = parse_rational(&value.into_string()).map_err(|e| DocumentError::Invalid {
            line: line_of(text, &label),
            field: field.clone(),
            message: e.to_string(),
        })?;
        out.insert(label.trim().to_string(), v);
    }
    Ok(out)
}

impl GameDocument {
    /// Canonical JSON text, newline terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    /// A strict document listing every coalition of `game` with exact values.
    pub fn from_cost_game(game: &CostGame, budgets: Option<&Budgets>) -> GameDocument {
        let players = game.players();
        let costs = (1u32..1 << game.n())
            .map(|m| {
                let c = Coalition::from_mask(m);
                (players.key(c), to_exact_string(game.cost(c)))
            })
            .collect();
        GameDocument {
            players: players.labels().iter().map(|s| s.to_string()).collect(),
            costs,
            budgets: budgets.map(|b| b.iter().map(|(k, v)| (k.clone(), to_exact_string(v))).collect()),
            process_tag: game.process_tag().map(str::to_string),
            completion: CompletionMode::Strict,
        }
    }
}

impl fmt::Display for GameDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use costshare_core::rational::{int, ratio};

    const BACKUP_SITES: &str = include_str!("../games/backup-sites.json");

    #[test]
    fn parses_shipped_backup_sites() {
        let p = parse_game(BACKUP_SITES).unwrap();
        let g = &p.game;
        assert_eq!(g.players().labels(), vec!["A", "B", "C"]);
        let c = |m: u32| g.cost(Coalition::from_mask(m)).clone();
        assert_eq!((1..8).map(c).collect::<Vec<_>>(), [10, 10, 16, 10, 17, 18, 24].map(int).to_vec());
        assert_eq!(g.process_tag(), Some("APO06"));
        assert!(p.budgets.is_none());
    }

    #[test]
    fn one_player_zero_game() {
        let p = parse_game(r#"{"players": ["X"], "costs": {"X": "0"}}"#).unwrap();
        assert_eq!(p.game.standalone(0), &int(0));
        assert!(p.budgets.is_none());
    }

    #[test]
    fn unknown_label_is_named() {
        let text = r#"{
  "players": ["A", "B"],
  "costs": {"A": "10", "B": "10", "A,Z": "16"}
}"#;
        let e = parse_game(text).unwrap_err();
        assert!(e.to_string().contains("`Z`"), "{e}");
        assert_eq!(e.field(), Some("costs[\"A,Z\"]"));
        assert_eq!(e.line(), Some(3));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse_game("{\n  \"players\": [\"A\",\n").unwrap_err();
        assert!(matches!(e, DocumentError::Syntax { line: 3, .. }), "{e:?}");
        let e = parse_game(r#"{"players": ["A"], "costs": {"A": "1"}, "extra": 1}"#).unwrap_err();
        assert!(matches!(e, DocumentError::Syntax { .. }));
    }

    #[test]
    fn semantic_errors() {
        let e = parse_game(r#"{"players": ["A", "B"], "costs": {"A": "1", "B": "2"}}"#).unwrap_err();
        assert_eq!(e.field(), Some("costs[\"A,B\"]"));
        let e = parse_game(r#"{"players": ["A"], "costs": {"A": "-1"}}"#).unwrap_err();
        assert!(e.to_string().contains("negative"), "{e}");
        let e = parse_game(r#"{"players": ["A"], "costs": {"A": "ten"}}"#).unwrap_err();
        assert_eq!(e.field(), Some("costs[\"A\"]"));
        let e = parse_game(r#"{"players": ["A", "A"], "costs": {"A": "1"}}"#).unwrap_err();
        assert_eq!(e.field(), Some("players"));
        let e = parse_game(r#"{"players": ["A", "B"], "costs": {"A": "1"}, "completion": "additive"}"#).unwrap_err();
        assert!(e.to_string().contains("singleton"), "{e}");
        let e = parse_game(r#"{"players": ["A","B"], "costs": {"A":"1","B":"1","A,B":"2","B,A":"2"}}"#).unwrap_err();
        assert!(e.to_string().contains("more than once"), "{e}");
        let e = parse_game(r#"{"players": ["A"], "costs": {"A":"1"}, "budgets": {"Q": "1"}}"#).unwrap_err();
        assert_eq!(e.field(), Some("budgets[\"Q\"]"));
    }

    #[test]
    fn keys_are_canonicalized_and_numbers_accepted() {
        let text = r#"{"players": ["B", "A"], "costs": {"B": 3, "A": 2.5, "B, A": "5"}}"#;
        let p = parse_game(text).unwrap();
        assert_eq!(p.document.costs.keys().collect::<Vec<_>>(), vec!["A", "A,B", "B"]);
        assert_eq!(p.document.costs["A"], "2.5");
        assert_eq!(p.game.standalone(1), &ratio(5, 2));
        assert_eq!(p.game.cost(Coalition::grand(2)), &int(5));
    }

    #[test]
    fn additive_completion_in_document() {
        let p = parse_game(r#"{"players": ["A","B"], "costs": {"A":"3","B":"5"}, "completion": "additive"}"#).unwrap();
        assert_eq!(p.game.cost(Coalition::grand(2)), &int(8));
        assert!(p.document.to_json().contains("additive"));
    }

    #[test]
    fn shipped_document_round_trips() {
        let first = parse_game(BACKUP_SITES).unwrap().document;
        let text = first.to_json();
        let second = parse_game(&text).unwrap().document;
        assert_eq!(first, second);
        assert_eq!(text, second.to_json());
    }

    #[test]
    fn document_from_game_reparses_to_same_game() {
        let p = parse_game(BACKUP_SITES).unwrap();
        let budgets: Budgets = [("A", int(8)), ("C", ratio(17, 2))].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let doc = GameDocument::from_cost_game(&p.game, Some(&budgets));
        let again = parse_game(&doc.to_json()).unwrap();
        assert_eq!(again.game, p.game);
        assert_eq!(again.budgets, Some(budgets));
    }

    #[test]
    fn budgets_file() {
        let p = parse_game(BACKUP_SITES).unwrap();
        let b = parse_budgets(r#"{"A": "8", "B": 8, "C": "17/2"}"#, p.game.players()).unwrap();
        assert_eq!(b["C"], ratio(17, 2));
        assert!(parse_budgets(r#"{"D": "1"}"#, p.game.players()).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn parse_serialize_parse_is_identity(
                n in 1usize..4,
                raw in proptest::collection::vec((0i64..100, 1i64..9), 7),
                decimal in any::<bool>(),
            ) {
                let labels: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
                let costs: BTreeMap<String, String> = (1u32..1 << n).map(|m| {
                    let names: Vec<&str> = Coalition::from_mask(m).members().map(|i| labels[i].as_str()).collect();
                    let (p, q) = raw[m as usize - 1];
                    let v = if decimal { format!("{p}.{q}") } else { format!("{p}/{q}") };
                    (names.join(","), v)
                }).collect();
                let doc = GameDocument { players: labels, costs, budgets: None, process_tag: None, completion: CompletionMode::Strict };
                let once = parse_game(&doc.to_json()).unwrap();
                let twice = parse_game(&once.document.to_json()).unwrap();
                prop_assert_eq!(&once.document, &twice.document);
                prop_assert_eq!(once.game, twice.game);
            }
        }
    }
}
