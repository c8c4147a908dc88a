use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use trigame::game::{read_move_log, replay};
use trigame::harness::{
    interpret, match_seed, play_position, run_match, sweep, verify, BiasSpec, RunConfig, SweepConfig, VerifyOptions,
};
use trigame::solver::{solve_exact, SolveLimits, MAX_SOLVER_N};
use trigame::{MuMode, PotentialParams, StrategyKind};

/// Biased Maker-Breaker triangle game on K_n.
#[derive(Parser)]
#[command(name = "trigame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play games and stream the turn ledger, move log and match record.
    Play(PlayArgs),
    /// Run a grid of matches and write the summary CSV.
    Sweep(SweepArgs),
    /// Solve a tiny game exactly.
    Solve(SolveArgs),
    /// Run the property suite and print pass/fail per item.
    Verify(VerifyArgs),
    /// Dump the balance interpretation of every node of a position.
    Interpret(InterpretArgs),
}

/// Game settings shared by `play` and `interpret`; flags override `--config`.
#[derive(Args)]
struct GameArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    /// Bias through q = ceil(sqrt(beta * n)).
    #[arg(long, conflicts_with = "q")]
    beta: Option<f64>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    /// `asymptotic` or `fixed:<x>`.
    #[arg(long)]
    mu: Option<MuMode>,
    #[arg(long)]
    maker: Option<StrategyKind>,
    #[arg(long)]
    breaker: Option<StrategyKind>,
    #[arg(long)]
    seed: Option<u64>,
}

impl GameArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::new(0, BiasSpec::Beta(3.0)),
        };
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if cfg.n == 0 {
            bail!("--n is required without --config");
        }
        if let Some(b) = self.beta {
            cfg.bias = BiasSpec::Beta(b);
        }
        if let Some(q) = self.q {
            cfg.bias = BiasSpec::Q(q);
        }
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        if let Some(m) = self.mu {
            cfg.mu = m;
        }
        if let Some(k) = self.maker {
            cfg.maker.kind = k;
        }
        if let Some(k) = self.breaker {
            cfg.breaker.kind = k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.resolve()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Games to play; repetition k > 0 uses a seed derived from the master seed.
    #[arg(long)]
    reps: Option<u32>,
    /// Ledger CSV path.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Match record JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Move log path.
    #[arg(long)]
    moves: Option<PathBuf>,
    /// Also assert the empirical theorem checks (Breaker wins, POT < 2n, no half-star).
    #[arg(long)]
    theorems: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep grid; list flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    q: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    #[arg(long = "q-over-sqrt-n", value_delimiter = ',')]
    q_over_sqrt_n: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    maker: Vec<StrategyKind>,
    #[arg(long, value_delimiter = ',')]
    breaker: Vec<StrategyKind>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    mu: Option<MuMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<u32>,
    /// Summary CSV path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// All match records as a JSON array.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    q: u32,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long)]
    max_seconds: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Board size of the simulated lemma suite.
    #[arg(long, default_value_t = 500)]
    n: u32,
    /// Games per Maker strategy in the simulated suite.
    #[arg(long, default_value_t = 5)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_solver: bool,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InterpretArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Replay this move log instead of playing.
    #[arg(long)]
    moves: Option<PathBuf>,
    /// Turns to play (or replay) before the snapshot; with `--moves`, 0 replays the whole log.
    #[arg(long, default_value_t = 0)]
    turns: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            writeln!(io::stdout(), "{text}")?;
            Ok(())
        }
    }
}

/// `ledger.csv` → `ledger.3.csv` for repetition 3.
fn numbered(path: &Path, rep: u32) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{rep}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{rep}"),
    };
    path.with_file_name(name)
}

fn play(args: PlayArgs) -> Result<bool> {
    let mut base = args.game.resolve()?;
    if let Some(r) = args.reps {
        base.repetitions = r;
    }
    base.checks.theorems |= args.theorems;
    let reps = base.repetitions.max(1);
    let mut records = Vec::new();
    let mut ok = true;
    for rep in 0..reps {
        let per_rep = |flag: &Option<PathBuf>, from_config: &Option<PathBuf>| {
            flag.clone().or(from_config.clone()).map(|p| if reps > 1 { numbered(&p, rep) } else { p })
        };
        let mut cfg = base.clone();
        cfg.ledger = per_rep(&args.ledger, &base.ledger);
        cfg.moves = per_rep(&args.moves, &base.moves);
        cfg.out = None;
        if rep > 0 {
            cfg.seed = match_seed(base.seed, 0, rep as u64);
        }
        let r = run_match(&cfg)?;
        ok &= r.passed();
        println!(
            "seed={} winner={:?} turns={} max_pot/n={:.6} max_maker_degree={} critical={} isolation={} failures={}",
            cfg.seed,
            r.winner,
            r.turns,
            r.max_pot_over_n,
            r.max_maker_degree,
            r.critical_turns,
            r.isolation_turns,
            r.failures()
        );
        records.push(r);
    }
    if let Some(out) = args.out.or(base.out) {
        let text = if records.len() == 1 { records[0].to_json() } else { serde_json::to_string_pretty(&records)? };
        emit(Some(&out), &text)?;
    }
    Ok(ok)
}

fn override_list<T: Clone>(dst: &mut Vec<T>, src: &[T]) {
    if !src.is_empty() {
        *dst = src.to_vec();
    }
}

fn run_sweep(args: SweepArgs) -> Result<bool> {
    let mut cfg = match &args.config {
        Some(p) => SweepConfig::from_json(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => SweepConfig::default(),
    };
    override_list(&mut cfg.n, &args.n);
    override_list(&mut cfg.q, &args.q);
    override_list(&mut cfg.beta, &args.beta);
    override_list(&mut cfg.q_over_sqrt_n, &args.q_over_sqrt_n);
    override_list(&mut cfg.makers, &args.maker);
    override_list(&mut cfg.breakers, &args.breaker);
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    if let Some(m) = args.mu {
        cfg.mu = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    let result = sweep(&cfg)?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv)?;
    match &args.out {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    if let Some(p) = &args.records {
        emit(Some(p), &serde_json::to_string_pretty(&result.records)?)?;
    }
    for (cell, rep, msg) in &result.errors {
        eprintln!("cell {cell} rep {rep}: {msg}");
    }
    Ok(result.failed_checks() == 0)
}

fn solve(args: SolveArgs) -> Result<bool> {
    if args.n > MAX_SOLVER_N {
        bail!("the exact solver handles n <= {MAX_SOLVER_N}");
    }
    let mut limits = SolveLimits::default();
    if let Some(m) = args.max_nodes {
        limits.max_nodes = m;
    }
    if let Some(s) = args.max_seconds {
        limits.max_seconds = s;
    }
    let report = solve_exact(args.n, args.q, limits)?;
    emit(args.out.as_deref(), &serde_json::to_string(&report)?)?;
    Ok(true)
}

fn run_verify(args: VerifyArgs) -> Result<bool> {
    let opts = VerifyOptions { sim_n: args.n, sim_seeds: args.reps, seed: args.seed, solver: !args.no_solver };
    let report = verify(&opts)?;
    print!("{}", report.render());
    if let Some(p) = &args.out {
        emit(Some(p), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report.passed())
}

fn run_interpret(args: InterpretArgs) -> Result<bool> {
    let cfg = args.game.resolve()?;
    let params: PotentialParams = cfg.resolve()?;
    let state = match &args.moves {
        Some(p) => {
            let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let mut moves = read_move_log(BufReader::new(file))?;
            if args.turns > 0 {
                moves.retain(|m| m.turn <= args.turns);
            }
            replay(params.n, params.q, &moves)?
        }
        None => play_position(&cfg, args.turns)?,
    };
    let snap = interpret(&state, &params);
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&snap)?)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Play(a) => play(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => run_verify(a),
        Command::Interpret(a) => run_interpret(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more enabled checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
