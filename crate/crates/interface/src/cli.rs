//! Command-line front end.

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use costshare_core::axioms::check_additivity;
use costshare_core::rational::to_exact_string;
use costshare_core::simulation::FormationSimulation;
use costshare_core::{savings_transform, Method, ProposalPolicy};
use serde::Serialize;

use crate::document::{parse_budgets, parse_game, ParsedGame};
use crate::report::{render_solution, render_trace, Format};
use crate::service::{serve, ServeConfig, DEFAULT_MAX_ROUNDS};
use crate::solution::{solve, AxiomSection, SolveOptions};
use crate::trace::TraceDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Subset,
    Permutation,
    MonteCarlo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Subset => Method::ExactSubset,
            MethodArg::Permutation => Method::ExactPermutation,
            MethodArg::MonteCarlo => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    GreedyMerge,
    Random,
}

impl From<PolicyArg> for ProposalPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::GreedyMerge => ProposalPolicy::GreedyMerge,
            PolicyArg::Random => ProposalPolicy::Random,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "costshare", version, about = "Shapley cost sharing and coalition formation")]
pub struct Cli {
    /// Output format (solve defaults to json, the other commands to text).
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shapley values and cost shares for a game file.
    Solve(SolveArgs),
    /// Coalition formation from all singletons.
    Simulate(SimulateArgs),
    /// Efficiency, symmetry, dummy and additivity checks.
    Axioms(AxiomsArgs),
    /// HTTP API and web assets.
    Serve(ServeArgs),
}

#[derive(Debug, clap::Args)]
pub struct SolveArgs {
    pub game: PathBuf,
    #[arg(long, value_enum, default_value = "subset")]
    pub method: MethodArg,
    /// Include the marginal contribution table (at most 10 players).
    #[arg(long)]
    pub table: bool,
    #[arg(long)]
    pub axioms: bool,
    /// Check core membership.
    #[arg(long)]
    pub core: bool,
    /// Compare shares with budgets, from FILE or from the game file.
    #[arg(long, value_name = "FILE", num_args = 0..=1)]
    pub budgets: Option<Option<PathBuf>>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    pub game: PathBuf,
    #[arg(long, value_enum, default_value = "greedy-merge")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u64,
}

#[derive(Debug, clap::Args)]
pub struct AxiomsArgs {
    pub game: PathBuf,
    /// Second game on the same players, for the additivity check.
    #[arg(long = "with", value_name = "OTHER")]
    pub other: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = "COSTSHARE_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Load the store from this file on start and write it on shutdown.
    #[arg(long, env = "COSTSHARE_SNAPSHOT")]
    pub snapshot: Option<PathBuf>,
    /// Directory of web assets served at `/`.
    #[arg(long, env = "COSTSHARE_STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
}

/// Exit code for checks that ran but did not hold.
pub const EXIT_FAILED: i32 = 1;
/// Exit code for unreadable input or invalid requests.
pub const EXIT_ERROR: i32 = 2;

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<ParsedGame, String> {
    parse_game(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

#[derive(Debug, Serialize)]
struct AdditivityReport {
    holds: bool,
    phi_v: Vec<String>,
    phi_w: Vec<String>,
    phi_sum: Vec<String>,
}

#[derive(Debug, Serialize)]
struct AxiomsReport {
    #[serde(flatten)]
    checks: AxiomSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    additivity: Option<AdditivityReport>,
}

impl AxiomsReport {
    fn holds(&self) -> bool {
        self.checks.all_hold() && self.additivity.as_ref().is_none_or(|a| a.holds)
    }

    fn text(&self) -> String {
        let yes = |b: bool| if b { "holds" } else { "FAILS" };
        let mut out = format!("efficiency: {}\n", yes(self.checks.efficiency));
        for s in self.checks.symmetry.iter().flatten() {
            let kind = if s.symmetric { "symmetric" } else { "not symmetric" };
            out += &format!("symmetry {} {}: {kind}, {}\n", s.players[0], s.players[1], yes(s.holds));
        }
        for d in self.checks.dummy.iter().flatten() {
            let kind = if d.dummy { "dummy" } else { "not a dummy" };
            out += &format!("dummy {}: {kind}, {}\n", d.player, yes(d.holds));
        }
        if let Some(a) = &self.additivity {
            out += &format!("additivity: {}\n", yes(a.holds));
        }
        out
    }
}

fn run_solve(args: &SolveArgs, format: Format, out: &mut dyn Write) -> Result<i32, String> {
    let parsed = load(&args.game)?;
    let budgets = match &args.budgets {
        None => None,
        Some(None) => Some(parsed.budgets.clone().ok_or_else(|| format!("{}: no budgets in game file", args.game.display()))?),
        Some(Some(path)) => {
            Some(parse_budgets(&read(path)?, parsed.game.players()).map_err(|e| format!("{}: {e}", path.display()))?)
        }
    };
    let options = SolveOptions {
        method: args.method.into(),
        table: args.table,
        axioms: args.axioms,
        core: args.core,
        budgets,
        samples: args.samples,
        seed: args.seed,
    };
    let doc = solve(&parsed.game, &options).map_err(|e| e.to_string())?;
    out.write_all(render_solution(&doc, format).as_bytes()).map_err(|e| e.to_string())?;
    Ok(0)
}

fn run_simulate(args: &SimulateArgs, format: Format, out: &mut dyn Write) -> Result<i32, String> {
    let parsed = load(&args.game)?;
    let mut sim = FormationSimulation::new(parsed.game, args.policy.into(), args.max_rounds, args.seed)
        .map_err(|e| e.to_string())?;
    sim.run().map_err(|e| e.to_string())?;
    out.write_all(render_trace(&TraceDocument::new(&sim), format).as_bytes()).map_err(|e| e.to_string())?;
    Ok(0)
}

fn run_axioms(args: &AxiomsArgs, format: Format, out: &mut dyn Write) -> Result<i32, String> {
    let parsed = load(&args.game)?;
    let doc = solve(&parsed.game, &SolveOptions { axioms: true, ..SolveOptions::default() }).map_err(|e| e.to_string())?;
    let additivity = match &args.other {
        None => None,
        Some(path) => {
            let other = load(path)?;
            let check = check_additivity(&savings_transform(&parsed.game), &savings_transform(&other.game))
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let strings = |v: &[costshare_core::Rational]| v.iter().map(to_exact_string).collect();
            Some(AdditivityReport {
                holds: check.holds,
                phi_v: strings(&check.phi_v),
                phi_w: strings(&check.phi_w),
                phi_sum: strings(&check.phi_sum),
            })
        }
    };
    let report = AxiomsReport { checks: doc.axioms, additivity };
    let text = match format {
        Format::Text => report.text(),
        Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
    };
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(if report.holds() { 0 } else { EXIT_FAILED })
}

fn run_serve(args: &ServeArgs) -> Result<i32, String> {
    let config = ServeConfig {
        addr: SocketAddr::new(args.host, args.port),
        snapshot: args.snapshot.clone(),
        static_dir: args.static_dir.clone(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| e.to_string())?;
    runtime.block_on(serve(config)).map_err(|e| e.to_string())?;
    Ok(0)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Solve(a) => run_solve(a, cli.format.map_or(Format::Json, Format::from), out),
        Command::Simulate(a) => run_simulate(a, cli.format.map_or(Format::Text, Format::from), out),
        Command::Axioms(a) => run_axioms(a, cli.format.map_or(Format::Text, Format::from), out),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}
