//! Command-line front end.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bidchess_core::analytics;
use bidchess_core::board::{BoardDims, Color, Position};
use bidchess_core::certify;
use bidchess_core::dyadic::{self, Kind, RunOptions, ThresholdVector};
use bidchess_core::limit;
use bidchess_core::pieceset::{all_three_piece_sets, PieceSet};
use bidchess_core::tablebase::{self, RichmanTable};
use bidchess_core::space::GameGraph;
use bidchess_core::{Error, PositionSpace, Result, Solution, SpaceOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::tables::{TableSet, TABLE_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "bidchess", version, about = "Exact Richman values for bidding-chess endgames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate the threshold sequences over a closure, writing checkpoints.
    Solve(SolveArgs),
    /// Build the candidate at horizon N, check it and write a certified table.
    Certify(CertifyArgs),
    /// Exact value of a position.
    Value(LookupArgs),
    /// Optimal moves for both sides.
    BestMoves(LookupArgs),
    /// Value, classification, optimal moves and Richman bid.
    Report(LookupArgs),
    /// Dump a table as `FEN num/den` lines.
    Export(ExportArgs),
    /// Serve the HTTP/JSON API over a directory of tables.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    /// Board dimensions, files x ranks.
    #[arg(long, default_value = "8x8", value_parser = parse_dims)]
    pub board: BoardDims,
    /// Comma-separated piece sets (`KRk,KBk`), or `all` for every set with
    /// at most one extra piece. Each set is closed under captures and
    /// promotions.
    #[arg(long, value_parser = parse_sets)]
    pub pieces: PieceSets,
    /// Store one position per board-symmetry class.
    #[arg(long)]
    pub symmetry: bool,
}

impl SpaceArgs {
    fn space(&self) -> Result<PositionSpace> {
        PositionSpace::for_closure(self.board, &self.pieces.0, SpaceOptions { symmetry: self.symmetry })
    }
}

#[derive(Clone, Debug)]
pub struct PieceSets(pub Vec<PieceSet>);

fn parse_dims(s: &str) -> std::result::Result<BoardDims, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sets(s: &str) -> std::result::Result<PieceSets, String> {
    if s == "all" {
        return Ok(PieceSets(all_three_piece_sets()));
    }
    let sets = s.split(',').map(|p| p.trim().parse::<PieceSet>().map_err(|e| e.to_string())).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(PieceSets(sets))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Alpha,
    Beta,
    Both,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindArg,
    /// Target horizon.
    #[arg(long, default_value_t = 1000)]
    pub n: u32,
    /// Checkpoint file. An existing checkpoint is resumed. With `--kind both`
    /// the two sequences go to `PATH.alpha` and `PATH.beta`.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Checkpoint interval in steps.
    #[arg(long, default_value_t = 100)]
    pub every: u32,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub n: u32,
    /// Output table; defaults to `<pieces>-<board>.tb`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the certification report as JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LookupArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub fen: String,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of `*.tb` tables.
    #[arg(long, env = TABLE_DIR_ENV)]
    pub tables: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

/// Runs a parsed command. Failures are printed to stderr.
pub fn run(cli: Cli) -> ExitCode {
    let res = match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Certify(a) => certify_cmd(&a),
        Command::Value(a) => lookup(&a, value_text),
        Command::BestMoves(a) => lookup(&a, best_moves_text),
        Command::Report(a) => lookup(&a, report_text),
        Command::Export(a) => export(&a),
        Command::Serve(a) => serve(&a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn iterate(space: &PositionSpace, graph: &GameGraph, kind: Kind, a: &SolveArgs, ckpt: Option<PathBuf>) -> Result<ThresholdVector> {
    let start = match &ckpt {
        Some(p) if p.exists() => {
            let v = tablebase::resume_checkpoint(p, kind)?;
            if v.len() != space.len() {
                return Err(Error::Mismatch(format!("checkpoint {} covers {} positions, space has {}", p.display(), v.len(), space.len())));
            }
            eprintln!("resuming {kind} from n={}", v.n());
            v
        }
        _ => ThresholdVector::init(kind, graph),
    };
    let opts = RunOptions { checkpoint_every: if ckpt.is_some() { a.every } else { 0 }, verify_monotone: false };
    let v = dyadic::run_from(start, graph, a.n, opts, |v| match &ckpt {
        Some(p) => {
            tracing::info!(kind = %kind, n = v.n(), "checkpoint");
            tablebase::save_checkpoint(v, Some(space), p)
        }
        None => Ok(()),
    })?;
    if let Some(p) = &ckpt {
        tablebase::save_checkpoint(&v, Some(space), p)?;
    }
    Ok(v)
}

fn solve(a: &SolveArgs) -> Result<ExitCode> {
    let space = a.space.space()?;
    let graph = space.graph()?;
    println!("positions: {} ({} ongoing)", space.len(), space.ongoing_len());
    let ckpt = |suffix: &str| a.checkpoint.as_ref().map(|p| if a.kind == KindArg::Both { suffixed(p, suffix) } else { p.clone() });
    let alpha = match a.kind {
        KindArg::Alpha | KindArg::Both => Some(iterate(&space, &graph, Kind::Alpha, a, ckpt("alpha"))?),
        KindArg::Beta => None,
    };
    let beta = match a.kind {
        KindArg::Beta | KindArg::Both => Some(iterate(&space, &graph, Kind::Beta, a, ckpt("beta"))?),
        KindArg::Alpha => None,
    };
    println!("n: {}", a.n);
    if let (Some(alpha), Some(beta)) = (&alpha, &beta) {
        let gap = dyadic::gap(alpha, beta)?;
        if gap.numer().bits() == 0 {
            println!("gap: 0");
        } else {
            println!("gap: about 10^{:.1}", log10_approx(&gap));
        }
        let cand = limit::build_candidate(alpha, beta, &space)?;
        let v = limit::richman_violations(&cand, &space)?;
        println!("violations: {}", v.count);
    }
    Ok(ExitCode::SUCCESS)
}

/// Decimal exponent of a positive rational, to within one bit.
fn log10_approx(r: &bidchess_core::Rational) -> f64 {
    (r.numer().bits() as f64 - r.denom().bits() as f64) * std::f64::consts::LOG10_2
}

fn certify_cmd(a: &CertifyArgs) -> Result<ExitCode> {
    let space = a.space.space()?;
    let graph = space.graph()?;
    let (cand, violations) = limit::candidate_at(&space, &graph, a.n)?;
    println!("positions: {}", space.len());
    println!("violations: {}", violations.count);
    if violations.count > 0 {
        for &i in violations.positions.iter().take(20) {
            println!("  violation {}", space.position(i));
        }
        if violations.count > 20 {
            println!("  ... {} more", violations.count - 20);
        }
        eprintln!("not certified: {} positions violate the Richman equation at n={}", violations.count, a.n);
        return Ok(ExitCode::FAILURE);
    }
    let sol = Solution::new(space, graph, cand.values, Some(a.n))?;
    let cert = sol.certification();
    let rep = certify::report(sol.values(), sol.space(), sol.graph(), cert, a.n, 0);
    for ps in &rep.piece_sets {
        println!(
            "{:<5} {:>8} positions  alpha=x: {}  beta=x: {}  max T label: {}  max T' label: {}",
            ps.piece_set,
            ps.positions,
            ps.alpha_equals_x,
            ps.beta_equals_x,
            ps.t_labels.keys().next_back().map_or("-".into(), u32::to_string),
            ps.t_prime_labels.keys().next_back().map_or("-".into(), u32::to_string),
        );
    }
    for (class, count) in &rep.quiescent {
        println!("quiescent {class:?}: {count}");
    }
    if let Some(p) = &a.report {
        std::fs::write(p, serde_json::to_vec_pretty(&rep)?)?;
    }
    if !sol.is_certified() {
        let (t, tp) = cert.witness();
        for &i in t.iter().chain(tp).take(20) {
            println!("  uncovered {}", sol.space().position(i));
        }
        eprintln!("not certified: {} positions outside T, {} outside T'", t.len(), tp.len());
        return Ok(ExitCode::FAILURE);
    }
    let out = a.out.clone().unwrap_or_else(|| {
        let ids: Vec<String> = a.space.pieces.0.iter().map(PieceSet::id).collect();
        PathBuf::from(format!("{}-{}.tb", ids.join("_"), a.space.board))
    });
    tablebase::save_table(&RichmanTable::from_solution(&sol)?, &out)?;
    println!("certified; table written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn load(path: &Path) -> Result<Solution> {
    tablebase::load_table(path)?.into_solution()
}

fn lookup(a: &LookupArgs, f: fn(&Solution, &Position, bool) -> Result<String>) -> Result<ExitCode> {
    let pos: Position = a.fen.parse()?;
    let sol = load(&a.table)?;
    println!("{}", f(&sol, &pos, a.json)?);
    Ok(ExitCode::SUCCESS)
}

fn value_text(sol: &Solution, pos: &Position, json: bool) -> Result<String> {
    let v = sol.value(pos)?;
    Ok(if json {
        serde_json::json!({ "fen": pos.to_fen(), "num": v.numer().to_string(), "den": v.denom().to_string(), "approx": analytics::approx(&v) }).to_string()
    } else {
        v.to_string()
    })
}

fn moves_line(moves: &[bidchess_core::solution::MoveValue]) -> String {
    moves.iter().map(|m| format!("{} ({})", m.mv.coord(), m.value)).collect::<Vec<_>>().join(", ")
}

fn best_moves_text(sol: &Solution, pos: &Position, json: bool) -> Result<String> {
    let w = sol.best_moves(pos, Color::White)?;
    let b = sol.best_moves(pos, Color::Black)?;
    Ok(if json {
        serde_json::json!({ "fen": pos.to_fen(), "white": w, "black": b }).to_string()
    } else {
        format!("white: {}\nblack: {}", moves_line(&w), moves_line(&b))
    })
}

fn report_text(sol: &Solution, pos: &Position, json: bool) -> Result<String> {
    let r = analytics::report(sol, pos)?;
    if json {
        return Ok(serde_json::to_string(&r)?);
    }
    let mut s = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(s, "position: {}", r.position);
    let _ = writeln!(s, "value: {} (~{:.10})", r.value, analytics::approx(&r.value));
    let _ = writeln!(s, "classification: {:?}", r.classification);
    let _ = writeln!(s, "white best: {}", moves_line(&r.best_white_moves));
    let _ = writeln!(s, "black best: {}", moves_line(&r.best_black_moves));
    let _ = write!(s, "richman bid: {}", r.richman_bid_white);
    Ok(s)
}

fn export(a: &ExportArgs) -> Result<ExitCode> {
    let sol = load(&a.table)?;
    match &a.out {
        Some(p) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
            tablebase::export_text(sol.values(), sol.space(), &mut w)?;
            w.flush()?;
        }
        None => match tablebase::export_text(sol.values(), sol.space(), std::io::stdout().lock()) {
            Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(a: &ServeArgs) -> Result<ExitCode> {
    let tables = TableSet::load_dir(&a.tables)?;
    if tables.is_empty() {
        return Err(Error::Format(format!("no *.tb tables in {}", a.tables.display())));
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.addr).await?;
        tracing::info!(addr = %listener.local_addr()?, tables = tables.len(), "listening");
        let app = crate::api::router(crate::api::AppState::new(tables));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    Ok(ExitCode::SUCCESS)
}
