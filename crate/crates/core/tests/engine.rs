use costshare_core::rational::{int, ratio};
use costshare_core::{
    build_cost_game, core_membership, individual_rationality, is_superadditive, simulate_formation, solve_cost_game,
    ActorNetwork, Coalition, Completion, CostGame, ProposalPolicy, TranslationStage,
};

fn backup_sites() -> CostGame {
    build_cost_game(
        &["A", "B", "C"],
        [
            (vec!["A"], int(10)),
            (vec!["B"], int(10)),
            (vec!["C"], int(10)),
            (vec!["B", "A"], int(16)),
            (vec!["A", "C"], int(17)),
            (vec!["B", "C"], int(18)),
            (vec!["C", "B", "A"], int(24)),
        ],
        Completion::Strict,
    )
    .unwrap()
}

#[test]
fn solve_then_check_stability() {
    let game = backup_sites();
    let (savings, alloc, shares) = solve_cost_game(&game).unwrap();
    assert!(is_superadditive(&savings).superadditive);
    assert_eq!(alloc.values, [ratio(5, 2), int(2), ratio(3, 2)]);
    assert_eq!(shares.shares, [ratio(15, 2), int(8), ratio(17, 2)]);
    assert!(individual_rationality(&game, &shares).unwrap().all_rational);
    assert!(core_membership(&savings, &alloc).unwrap().in_core);
}

#[test]
fn manual_negotiation_matches_simulation() {
    let game = backup_sites();
    let mut net = ActorNetwork::new(game.clone());
    for labels in [["A", "B"].as_slice(), ["A", "B", "C"].as_slice()] {
        let c = game.players().coalition(labels.iter().copied()).unwrap();
        let report = net.propose_interessement(c).unwrap();
        assert!(report.viable);
        net.enroll(&report).unwrap();
        net.mobilize().unwrap();
    }
    assert!(net.is_stable());

    let run = simulate_formation(game, ProposalPolicy::GreedyMerge, 5, 0).unwrap();
    assert_eq!(run.network.structure(), net.structure());
    assert_eq!(run.network.current_shares().unwrap(), net.current_shares().unwrap());
    assert_eq!(run.network.history(), net.history());
}

#[test]
fn defection_after_formation() {
    let mut net = simulate_formation(backup_sites(), ProposalPolicy::GreedyMerge, 5, 0).unwrap().network;
    let before = net.revision();
    net.defect(2).unwrap();
    assert!(net.is_partition());
    assert_eq!(net.structure(), (0..3).map(Coalition::singleton).collect::<Vec<_>>());
    assert_eq!(net.actors()[2].stage, TranslationStage::Problematization);
    assert!(net.revision() > before);
    assert!(net.merge_candidates().unwrap().iter().any(|c| c.merged() == Coalition::from_mask(0b011)));
}
