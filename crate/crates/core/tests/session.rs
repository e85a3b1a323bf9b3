use bidchess_core::board::{BoardDims, Color, Position};
use bidchess_core::session::{engine_policy, run_engine, Action, Choice, GameSession, Phase};
use bidchess_core::{PositionSpace, Solution, SpaceOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn rook_solution() -> &'static Solution {
    static SOL: OnceLock<Solution> = OnceLock::new();
    SOL.get_or_init(solve_rook)
}

fn solve_rook() -> Solution {
    let space = PositionSpace::for_closure(BoardDims::STANDARD, &["KRk".parse().unwrap()], SpaceOptions { symmetry: true }).unwrap();
    let (sol, v) = Solution::solve(space, 340).unwrap();
    assert_eq!(v.count, 0);
    assert!(sol.is_certified());
    sol
}

fn rook_position() -> Position {
    Position::from_algebraic(BoardDims::STANDARD, &["Kd6", "Rh8"], &["Kd8"]).unwrap()
}

/// Opponent: random bids and choices, greedy moves.
fn opponent_action(sol: &Solution, s: &GameSession, rng: &mut ChaCha8Rng) -> Action {
    match s.phase {
        Phase::AwaitingMove { mover } => Action::from_move(&sol.greedy_move(&s.position, mover).unwrap().mv),
        _ => s.random_action(rng).unwrap(),
    }
}

#[test]
fn engine_above_threshold_wins() {
    let sol = rook_solution();
    let total = 1_000_000;
    let mut wins = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // x = 3/4: White wins while Black holds under 750000 chips
        let black = rng.random_range(600_000..749_000);
        let mut s = GameSession::new(format!("s{seed}"), rook_position(), total, total - black, Color::Black).unwrap();
        while let Some(actor) = s.actor() {
            let a = if actor == Color::White { engine_policy(sol, &s).unwrap() } else { opponent_action(sol, &s, &mut rng) };
            s.apply(actor, a).unwrap();
            assert_eq!(s.chips.white + s.chips.black, total);
        }
        if s.phase == (Phase::Finished { winner: Color::White }) {
            wins += 1;
        }
    }
    println!("engine wins {wins}/200");
    assert!(wins >= 198, "engine won only {wins} of 200");
}

#[test]
fn engine_opening_bid_matches_richman_bid() {
    let sol = rook_solution();
    // N = 8, White holds 3: the engine as Black bids round(1/4 * 8) = 2
    let mut s = GameSession::new("b", rook_position(), 8, 3, Color::White).unwrap();
    assert_eq!(engine_policy(sol, &s).unwrap(), Action::Bid { amount: 2 });
    s.apply(Color::Black, Action::Bid { amount: 0 }).unwrap();
    s.apply(Color::White, Action::Choose { choice: Choice::Reject }).unwrap();
    let capture = engine_policy(sol, &s).unwrap();
    s.apply(Color::White, capture).unwrap();
    assert_eq!(s.phase, Phase::Finished { winner: Color::White });
    assert!(engine_policy(sol, &s).is_err());
}

#[test]
fn replaying_human_actions_reproduces_engine_actions() {
    let sol = rook_solution();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s = GameSession::new("r", rook_position(), 100, 80, Color::Black).unwrap();
    let mut human = Vec::new();
    run_engine(sol, &mut s).unwrap();
    while let Some(actor) = s.actor() {
        let a = s.random_action(&mut rng).unwrap();
        human.push(a);
        s.apply(actor, a).unwrap();
        run_engine(sol, &mut s).unwrap();
    }
    let mut t = GameSession::new("r", rook_position(), 100, 80, Color::Black).unwrap();
    run_engine(sol, &mut t).unwrap();
    for a in human {
        t.apply(Color::Black, a).unwrap();
        run_engine(sol, &mut t).unwrap();
    }
    assert_eq!(serde_json::to_string(&s.history).unwrap(), serde_json::to_string(&t.history).unwrap());
    assert_eq!(s.chips, t.chips);
}
