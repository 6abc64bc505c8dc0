//! Game files, reports, the `costshare` command line, and the HTTP service
//! around the `costshare-core` engine.

pub mod cli;
pub mod document;
pub mod report;
pub mod service;
pub mod solution;
pub mod trace;

pub use document::{parse_game, DocumentError, GameDocument, ParsedGame};
pub use report::Format;
pub use solution::{solve, SolutionDocument, SolveOptions};
pub use trace::TraceDocument;
