//! Acceptance checks. Prints one PASS or FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use costshare_core::axioms::{check_additivity, check_dummy, check_efficiency, check_symmetry};
use costshare_core::rational::{int, ratio, Rational};
use costshare_core::{
    core_membership, cost_shares, individual_rationality, marginal_table, savings_transform, shapley_monte_carlo,
    shapley_permutation, shapley_subset, simulate_formation, CharacteristicGame, Coalition, CostGame, Players,
    ProposalPolicy, TranslationStage,
};
use costshare_interface::service::{router, AppState};
use costshare_interface::{parse_game, solve, SolveOptions};
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

const BACKUP_SITES: &str = include_str!("../games/backup-sites.json");

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn backup_sites() -> CostGame {
    parse_game(BACKUP_SITES).expect("shipped game parses").game
}

fn backup_sites_shapley() -> Vec<Rational> {
    vec![ratio(5, 2), int(2), ratio(3, 2)]
}

fn exact_shapley() -> Check {
    let game = backup_sites();
    let start = Instant::now();
    let savings = savings_transform(&game);
    let subset = shapley_subset(&savings).map_err(|e| e.to_string())?;
    let perm = shapley_permutation(&savings).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(subset.values == backup_sites_shapley(), "subset formula gave {:?}", subset.values);
    ensure!(perm.values == backup_sites_shapley(), "permutation formula gave {:?}", perm.values);
    ensure!(elapsed < Duration::from_millis(10), "took {elapsed:?}");
    Ok(format!("phi = (5/2, 2, 3/2) by both formulas in {elapsed:?}"))
}

fn backup_sites_cost_shares() -> Check {
    let game = backup_sites();
    let alloc = shapley_subset(&savings_transform(&game)).map_err(|e| e.to_string())?;
    let shares = cost_shares(&game, &alloc).map_err(|e| e.to_string())?;
    ensure!(shares.shares == [ratio(15, 2), int(8), ratio(17, 2)], "shares {:?}", shares.shares);
    let sum: Rational = shares.shares.iter().sum();
    ensure!(sum == int(24) && shares.total == int(24), "shares sum to {sum}");
    Ok("shares (15/2, 8, 17/2), total 24".into())
}

fn marginal_rows() -> Check {
    let table = marginal_table(&savings_transform(&backup_sites())).map_err(|e| e.to_string())?;
    let expected: [([usize; 3], [i64; 3]); 6] = [
        ([0, 1, 2], [0, 4, 2]),
        ([0, 2, 1], [0, 3, 3]),
        ([1, 0, 2], [4, 0, 2]),
        ([1, 2, 0], [4, 0, 2]),
        ([2, 0, 1], [3, 3, 0]),
        ([2, 1, 0], [4, 2, 0]),
    ];
    ensure!(table.rows.len() == 6, "{} rows", table.rows.len());
    let mut cells = 0;
    for (row, (order, marginals)) in table.rows.iter().zip(expected) {
        ensure!(row.order == order, "row order {:?}, expected {order:?}", row.order);
        for (got, want) in row.cells.iter().zip(marginals) {
            ensure!(*got == int(want), "order {order:?}: cell {got}, expected {want}");
            cells += 1;
        }
    }
    ensure!(cells == 18, "{cells} cells");
    ensure!(table.column_totals == [int(15), int(12), int(9)], "totals {:?}", table.column_totals);
    ensure!(table.order_count == 6.into(), "order count {}", table.order_count);
    Ok("6 rows, 18 cells, totals (15, 12, 9)".into())
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("P{i}")).collect()
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.random_range(-60..=60), rng.random_range(1..=12))
}

fn random_game(rng: &mut ChaCha8Rng, n: usize) -> CharacteristicGame {
    let players = Players::new(&labels(n)).unwrap();
    CharacteristicGame::from_fn(players, |_| random_rational(rng))
}

/// Seeded random games with n cycling through 2..=8.
fn generated_games(count: usize, seed: u64) -> Vec<CharacteristicGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|k| random_game(&mut rng, 2 + k % 7)).collect()
}

fn cross_formula() -> Check {
    let games = generated_games(210, 2024);
    let start = Instant::now();
    for (k, g) in games.iter().enumerate() {
        let a = shapley_subset(g).map_err(|e| e.to_string())?;
        let b = shapley_permutation(g).map_err(|e| e.to_string())?;
        ensure!(a.values == b.values, "game {k} (n = {}): formulas disagree", g.n());
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{} games, n in 2..=8, exact agreement in {elapsed:?}", games.len()))
}

fn swap(c: Coalition, i: usize, j: usize) -> Coalition {
    match (c.contains(i), c.contains(j)) {
        (true, false) => c.without(i).with(j),
        (false, true) => c.without(j).with(i),
        _ => c,
    }
}

fn axiom_suite() -> Check {
    let games = generated_games(210, 77);
    for (k, g) in games.iter().enumerate() {
        let alloc = shapley_subset(g).map_err(|e| e.to_string())?;
        ensure!(check_efficiency(g, &alloc).map_err(|e| e.to_string())?, "game {k}: not efficient");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut symmetric = 0;
    let mut dummies = 0;
    for k in 0..70 {
        let n = 2 + k % 7;
        let base = random_game(&mut rng, n);
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n - 1));
        let j = if j >= i { j + 1 } else { j };
        let sym = CharacteristicGame::from_fn(base.players().clone(), |c| base.value(c) + base.value(swap(c, i, j)));
        let alloc = shapley_subset(&sym).map_err(|e| e.to_string())?;
        let check = check_symmetry(&sym, i, j, &alloc).map_err(|e| e.to_string())?;
        ensure!(check.symmetric, "constructed pair ({i}, {j}) not detected as symmetric");
        ensure!(alloc.values[i] == alloc.values[j], "symmetric players {i}, {j} differ");
        symmetric += 1;

        let d = rng.random_range(0..n);
        let dummy = CharacteristicGame::from_fn(base.players().clone(), |c| base.value(c.without(d)).clone());
        let alloc = shapley_subset(&dummy).map_err(|e| e.to_string())?;
        let check = check_dummy(&dummy, d, &alloc).map_err(|e| e.to_string())?;
        ensure!(check.dummy, "injected dummy {d} not detected");
        ensure!(alloc.values[d] == int(0), "dummy {d} got {}", alloc.values[d]);
        dummies += 1;
    }

    let mut pairs = 0;
    for k in 0..60 {
        let n = 2 + k % 7;
        let v = random_game(&mut rng, n);
        let w = random_game(&mut rng, n);
        let check = check_additivity(&v, &w).map_err(|e| e.to_string())?;
        ensure!(check.holds, "pair {k}: additivity fails");
        let direct: Vec<Rational> = shapley_subset(&v)
            .unwrap()
            .values
            .iter()
            .zip(&shapley_subset(&w).unwrap().values)
            .map(|(a, b)| a + b)
            .collect();
        ensure!(shapley_subset(&v.sum(&w).unwrap()).unwrap().values == direct, "pair {k}: phi(v+w) != phi(v)+phi(w)");
        pairs += 1;
    }
    Ok(format!(
        "efficiency on {} games, {symmetric} symmetric pairs, {dummies} dummies, {pairs} additive pairs",
        games.len()
    ))
}

fn monte_carlo() -> Check {
    let savings = savings_transform(&backup_sites());
    let start = Instant::now();
    let first = shapley_monte_carlo(&savings, 100_000, 42).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let second = shapley_monte_carlo(&savings, 100_000, 42).map_err(|e| e.to_string())?;
    let exact = [2.5, 2.0, 1.5];
    let worst = first.values.iter().zip(exact).map(|(e, x)| (e - x).abs()).fold(0.0, f64::max);
    ensure!(worst < 0.05, "max error {worst}");
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    ensure!(bits(&first.values) == bits(&second.values), "estimates differ on rerun");
    ensure!(bits(&first.stderr) == bits(&second.stderr), "stderr differs on rerun");
    ensure!(first.sample_means == second.sample_means, "sample means differ on rerun");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("max error {worst:.4}, bit-identical rerun, {elapsed:?}"))
}

fn stability() -> Check {
    let game = backup_sites();
    let savings = savings_transform(&game);
    let alloc = shapley_subset(&savings).map_err(|e| e.to_string())?;
    let shares = cost_shares(&game, &alloc).map_err(|e| e.to_string())?;
    let ir = individual_rationality(&game, &shares).map_err(|e| e.to_string())?;
    ensure!(ir.all_rational, "not individually rational");
    for p in &ir.players {
        ensure!(p.share < p.standalone, "{} pays {} against {}", p.label, p.share, p.standalone);
    }
    let core = core_membership(&savings, &alloc).map_err(|e| e.to_string())?;
    ensure!(core.in_core, "not in core: {:?}", core.blocking);
    for mask in 1u32..1 << game.n() {
        let c = Coalition::from_mask(mask);
        let paid: Rational = c.members().map(|i| &alloc.values[i]).sum();
        ensure!(&paid >= savings.value(c), "sweep: coalition {mask:b} blocks");
    }
    Ok("7.5 < 10, 8 < 10, 8.5 < 10; in core, brute-force sweep agrees".into())
}

fn simulation() -> Check {
    let run = simulate_formation(backup_sites(), ProposalPolicy::GreedyMerge, 10, 0).map_err(|e| e.to_string())?;
    ensure!(run.outcome.is_stable(), "outcome {:?}", run.outcome);
    ensure!(run.outcome.rounds() <= 2, "{} merge rounds", run.outcome.rounds());
    ensure!(run.network.structure() == [Coalition::grand(3)], "structure {:?}", run.network.structure());
    let shares = run.network.current_shares().map_err(|e| e.to_string())?;
    ensure!(shares == [ratio(15, 2), int(8), ratio(17, 2)], "final shares {shares:?}");
    ensure!(
        run.network.actors().iter().all(|a| a.stage == TranslationStage::Mobilization),
        "not every actor mobilized"
    );
    let replay = simulate_formation(backup_sites(), ProposalPolicy::GreedyMerge, 10, 0).map_err(|e| e.to_string())?;
    ensure!(replay.network.history() == run.network.history(), "replay trace differs");
    Ok(format!("grand coalition after {} merges, shares (15/2, 8, 17/2), replay identical", run.outcome.rounds()))
}

fn interface() -> Check {
    let first = parse_game(BACKUP_SITES).map_err(|e| e.to_string())?;
    let text = first.document.to_json();
    let second = parse_game(&text).map_err(|e| e.to_string())?;
    ensure!(first.document == second.document, "document changed on round trip");
    ensure!(text == second.document.to_json(), "serialization not stable");
    ensure!(first.game == second.game, "game changed on round trip");

    let game_path = concat!(env!("CARGO_MANIFEST_DIR"), "/games/backup-sites.json");
    let cli = || Command::new(env!("CARGO_BIN_EXE_costshare")).args(["solve", "--table", game_path]).output();
    let (a, b) = (cli().map_err(|e| e.to_string())?, cli().map_err(|e| e.to_string())?);
    ensure!(a.status.success(), "cli solve failed: {}", String::from_utf8_lossy(&a.stderr));
    ensure!(a.stdout == b.stdout, "cli output differs between runs");
    let lib = solve(&first.game, &SolveOptions { table: true, ..Default::default() }).map_err(|e| e.to_string())?;
    ensure!(a.stdout == lib.to_json().into_bytes(), "cli output differs from the library solution");

    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    let served: serde_json::Value = runtime.block_on(async {
        let app = router(Arc::new(AppState::new()), None);
        let created = app
            .clone()
            .oneshot(Request::post("/games").body(Body::from(BACKUP_SITES)).unwrap())
            .await
            .unwrap();
        let created: serde_json::Value =
            serde_json::from_slice(&created.into_body().collect().await.unwrap().to_bytes()).unwrap();
        let id = created["id"].as_str().unwrap().to_string();
        let resp = app
            .oneshot(Request::get(format!("/games/{id}/solution?table=true")).body(Body::empty()).unwrap())
            .await
            .unwrap();
        serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap()
    });
    ensure!(served == serde_json::to_value(&lib).unwrap(), "service solution differs from the library solution");
    Ok("document round trip, byte-stable cli solve, service matches library".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exact shapley values", exact_shapley),
        ("cost shares", backup_sites_cost_shares),
        ("marginal table", marginal_rows),
        ("cross-formula agreement", cross_formula),
        ("axiom suite", axiom_suite),
        ("monte carlo", monte_carlo),
        ("stability", stability),
        ("formation simulation", simulation),
        ("interface", interface),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL  {name}: {reason}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
