//! Text and JSON rendering of solutions and traces.

use std::fmt::Write;

use crate::solution::{Number, PlayerValue, SolutionDocument, TableSection};
use crate::trace::{EventDoc, TraceDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Text,
    #[default]
    Json,
}

pub fn render_solution(doc: &SolutionDocument, format: Format) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Text => solution_text(doc),
    }
}

pub fn render_trace(doc: &TraceDocument, format: Format) -> String {
    match format {
        Format::Json => doc.to_json(),
        Format::Text => trace_text(doc),
    }
}

fn show(n: &Number) -> String {
    if n.exact == n.decimal {
        n.exact.clone()
    } else {
        format!("{} ({})", n.exact, n.decimal)
    }
}

fn braces(labels: &[String]) -> String {
    format!("{{{}}}", labels.join(","))
}

/// Left-aligned columns separated by two spaces, trailing space trimmed.
fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            let _ = write!(line, "{cell:<w$}", w = widths[c]);
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn order_label(order: &[String]) -> String {
    if order.iter().all(|l| l.chars().count() == 1) {
        order.concat()
    } else {
        order.join("-")
    }
}

/// The marginal contribution table: one row per entry order, then the
/// column totals and the totals over the number of orders.
pub fn table_text(players: &[String], table: &TableSection) -> String {
    let mut rows = Vec::with_capacity(table.rows.len() + 3);
    rows.push(std::iter::once("Entry order".to_string()).chain(players.iter().cloned()).collect());
    for r in &table.rows {
        rows.push(std::iter::once(order_label(&r.order)).chain(r.cells.iter().cloned()).collect());
    }
    rows.push(std::iter::once("Total".to_string()).chain(table.totals.iter().cloned()).collect());
    rows.push(std::iter::once("Shapley Value".to_string()).chain(table.shapley_fractions.iter().cloned()).collect());
    aligned(&rows)
}

fn value_rows(doc: &SolutionDocument) -> String {
    let mut rows = vec![vec!["Player".to_string(), "Shapley".to_string(), "Cost share".to_string()]];
    for (s, c) in doc.shapley.iter().zip(&doc.cost_shares) {
        rows.push(vec![s.player.clone(), show(&s.value), show(&c.value)]);
    }
    rows.push(vec!["Total".to_string(), show(&doc.grand_savings), show(&doc.total_cost)]);
    aligned(&rows)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn solution_text(doc: &SolutionDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Players: {}", doc.players.join(", "));
    let _ = writeln!(out, "Method: {}", doc.method);
    if let Some(tag) = &doc.process_tag {
        let _ = writeln!(out, "Process: {tag}");
    }
    if let Some(mc) = &doc.monte_carlo {
        let errs: Vec<String> = mc.stderr.iter().map(|e| format!("{e:.4}")).collect();
        let _ = writeln!(out, "Samples: {} (seed {}), stderr {}", mc.samples, mc.seed, errs.join(", "));
    }
    out.push('\n');
    out.push_str(&value_rows(doc));

    if let Some(table) = &doc.marginal_table {
        out.push('\n');
        out.push_str(&table_text(&doc.players, table));
    }

    out.push('\n');
    let _ = writeln!(out, "Efficiency: {}", yes_no(doc.axioms.efficiency));
    if let Some(sym) = &doc.axioms.symmetry {
        for s in sym.iter().filter(|s| s.symmetric) {
            let _ = writeln!(out, "Symmetry {} ~ {}: {}", s.players[0], s.players[1], yes_no(s.holds));
        }
    }
    if let Some(dummy) = &doc.axioms.dummy {
        for d in dummy.iter().filter(|d| d.dummy) {
            let _ = writeln!(out, "Dummy {}: {}", d.player, yes_no(d.holds));
        }
    }
    for r in &doc.rationality {
        let _ = writeln!(
            out,
            "Individually rational {}: {} (pays {} against {} alone)",
            r.player,
            yes_no(r.rational),
            show(&r.share),
            show(&r.standalone)
        );
    }
    if let Some(core) = &doc.core {
        match &core.blocking {
            None => {
                let _ = writeln!(out, "Core: in core");
            }
            Some(b) => {
                let _ = writeln!(out, "Core: blocked by {} (excess {})", braces(&b.coalition), show(&b.excess));
            }
        }
    }
    if let Some(budgets) = &doc.budgets {
        out.push('\n');
        let mut rows = vec![vec!["Player".to_string(), "Budget".to_string(), "Share".to_string(), "Variance".to_string()]];
        for b in &budgets.players {
            rows.push(vec![b.player.clone(), show(&b.budget), show(&b.share), show(&b.variance)]);
        }
        out.push_str(&aligned(&rows));
        for c in &budgets.corrective_actions {
            let _ = writeln!(out, "{}", c.message);
        }
    }
    out
}

fn shares_line(values: &[PlayerValue]) -> String {
    values.iter().map(|v| format!("{} {}", v.player, show(&v.value))).collect::<Vec<_>>().join(", ")
}

fn event_line(e: &EventDoc) -> String {
    let mut line = format!("round {:<3} #{:<4} {:<13} {}", e.round, e.seq, e.kind, braces(&e.coalition));
    if e.kind == "proposal" {
        if let Some(r) = &e.report {
            let shares: Vec<String> = r.members.iter().map(|m| format!("{} {}", m.player, show(&m.share))).collect();
            let verdict = if r.viable { "viable" } else { "not viable" };
            let _ = write!(line, "  shares {}  {verdict}", shares.join(", "));
        }
    }
    if let Some(stable) = e.stable {
        line.push_str(if stable { "  stable" } else { "  unstable" });
    }
    line.trim_end().to_string()
}

pub fn trace_text(doc: &TraceDocument) -> String {
    let mut out = format!(
        "Formation trace: {} players, policy {}, seed {}, max rounds {}\n",
        doc.players.len(),
        doc.policy,
        doc.seed,
        doc.max_rounds
    );
    for e in &doc.events {
        out.push_str(&event_line(e));
        out.push('\n');
    }
    if let Some(outcome) = &doc.outcome {
        if outcome.stable {
            let _ = writeln!(out, "stable at round {}", outcome.rounds);
        } else {
            let _ = writeln!(out, "round limit reached after {} rounds", outcome.rounds);
        }
        let blocks: Vec<String> = doc.structure.iter().map(|b| braces(b)).collect();
        let _ = writeln!(out, "structure: {}", blocks.join(" "));
        let _ = writeln!(out, "shares: {}", shares_line(&doc.shares));
    }
    out
}
