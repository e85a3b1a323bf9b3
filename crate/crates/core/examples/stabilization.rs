//! Violation counts and threshold gaps along the iteration.
//!
//! `cargo run --release -p bidchess-core --example stabilization -- 8x8 KBk sym 20 29 30`

use bidchess_core::dyadic::{gap, Kind, ThresholdVector};
use bidchess_core::limit::{build_candidate, richman_violations};
use bidchess_core::{BoardDims, PositionSpace, SpaceOptions};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 5 {
        eprintln!("usage: stabilization BOARD PIECES sym|nosym N...");
        std::process::exit(2);
    }
    let dims: BoardDims = args[1].parse().unwrap();
    let root = args[2].parse().unwrap();
    let sym = args[3] == "sym";
    let checks: Vec<u32> = args[4..].iter().map(|s| s.parse().unwrap()).collect();
    let t = Instant::now();
    let space = PositionSpace::for_closure(dims, &[root], SpaceOptions { symmetry: sym }).unwrap();
    let graph = space.graph().unwrap();
    eprintln!("space {} ({} ongoing), edges {}, built in {:?}", space.len(), space.ongoing_len(), graph.edge_count(), t.elapsed());
    let mut a = ThresholdVector::init(Kind::Alpha, &graph);
    let mut b = ThresholdVector::init(Kind::Beta, &graph);
    let max = *checks.iter().max().unwrap();
    let t = Instant::now();
    for n in 1..=max {
        a = a.step(&graph).unwrap();
        b = b.step(&graph).unwrap();
        if checks.contains(&n) {
            let t2 = Instant::now();
            let c = build_candidate(&a, &b, &space).unwrap();
            let v = richman_violations(&c, &space).unwrap();
            let g = gap(&a, &b).unwrap();
            let gf = g.numer().bits() as i64 - g.denom().bits() as i64;
            println!("n={n} violations={} gap~2^{gf} (iter {:?}, check {:?})", v.count, t.elapsed(), t2.elapsed());
        }
    }
}
