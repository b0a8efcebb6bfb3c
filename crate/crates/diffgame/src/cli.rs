//! The `diffgame` command line.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, malformed
//! literals, unknown games, conflicting sources) and 2 when the work itself
//! fails (I/O, unreadable config files).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use diffgame_core::adjusters::{self, AdjusterKind, AdjusterSpec, StopCriteria};
use diffgame_core::catalog::CATALOG;
use diffgame_core::{spectral_oracle, DifferentiationConfig, Game, QuadraticGame};
use serde::Serialize;

use crate::experiments::{
    self, EtaGrid, GameSelection, InitialPoints, Preset, SweepCell, SweepConfig, SweepResult,
    TRAILING_LOSS_CAP,
};
use crate::format::{self, Format};

#[derive(Debug, Parser)]
#[command(name = "diffgame", version, about = "Analyze and solve n-player differentiable games")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format [default: json for analyze and run, csv for sweep, text for list-games]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write output here instead of standard output
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed for every random choice [default: 0, or the config file's seed]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps; 0 means one per core [default: 0, or the config file's value]
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List catalog games and their parameters
    ListGames,
    /// Print every mechanics quantity at one point as JSON
    Analyze(AnalyzeArgs),
    /// Run one update rule from one start
    Run(RunArgs),
    /// Run a learning-rate sweep
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GameArgs {
    /// Catalog game id, optionally followed by `:key=value` overrides
    #[arg(long, value_name = "ID")]
    game: String,

    /// Game parameter override `key=value`; repeatable
    #[arg(long = "params", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

impl GameArgs {
    fn selection(&self) -> Result<GameSelection, CliError> {
        let mut sel = GameSelection::parse(&self.game).map_err(usage)?;
        for kv in &self.params {
            sel.insert_param(kv).map_err(usage)?;
        }
        Ok(sel)
    }

    fn build(&self) -> Result<(GameSelection, QuadraticGame), CliError> {
        let sel = self.selection()?;
        let game = sel.build().map_err(usage)?;
        Ok((sel, game))
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    game: GameArgs,

    /// Point to analyze, e.g. `0.5,-1,2e-3`
    #[arg(long, value_parser = vector_arg, allow_hyphen_values = true)]
    at: Vector,

    /// Alignment bias used for the reported λ sign
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    /// Use finite differences instead of the analytic Hessian
    #[arg(long)]
    finite_differences: bool,
}

#[derive(Debug, Args)]
struct StopArgs {
    /// Iteration cutoff
    #[arg(long, value_name = "N")]
    max_iters: Option<usize>,

    /// Iterates averaged by the loss criterion [default: 10]
    #[arg(long, value_name = "N")]
    loss_window: Option<usize>,

    /// Loss-criterion threshold on the window mean of |loss| [default: 0.01]
    #[arg(long, value_name = "X")]
    loss_threshold: Option<f64>,

    /// Runs leaving this ball count as diverged [default: 1e6]
    #[arg(long, value_name = "X")]
    divergence_norm: Option<f64>,

    /// Converge on ‖ξ‖ below this instead of the loss criterion
    #[arg(long, value_name = "X")]
    xi_threshold: Option<f64>,
}

impl StopArgs {
    fn apply(&self, stop: &mut StopCriteria) {
        if let Some(n) = self.max_iters {
            stop.max_iters = n;
        }
        if let Some(n) = self.loss_window {
            stop.loss_window = n;
        }
        if let Some(x) = self.loss_threshold {
            stop.loss_threshold = x;
        }
        if let Some(x) = self.divergence_norm {
            stop.divergence_norm = x;
        }
        if let Some(x) = self.xi_threshold {
            stop.xi_threshold = Some(x);
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    game: GameArgs,

    /// Update rule `kind[:lambda[:epsilon]]`; kinds: simgd, sga, sga-aligned,
    /// consensus, aligned-consensus, hamiltonian-descent, omd
    #[arg(long, value_parser = parse_adjuster)]
    adjuster: AdjusterSpec,

    /// Learning rate
    #[arg(long)]
    eta: f64,

    /// Adjustment weight λ [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,

    /// Alignment bias ε for sga-aligned [default: 0.1]
    #[arg(long)]
    epsilon: Option<f64>,

    /// Starting point [default: every coordinate 0.5]
    #[arg(long, value_parser = vector_arg, allow_hyphen_values = true, conflicts_with = "w0_random")]
    w0: Option<Vector>,

    /// Draw the start uniformly from the ball of this radius, using --seed
    #[arg(long, value_name = "RADIUS")]
    w0_random: Option<f64>,

    #[command(flatten)]
    stop: StopArgs,

    /// Use the trailing-window loss criterion instead of ‖ξ‖ < 1e-6
    #[arg(long, conflicts_with = "xi_threshold")]
    loss_criterion: bool,

    /// Also write every iterate with its diagnostics as CSV to this path
    #[arg(long, value_name = "PATH")]
    trajectory: Option<PathBuf>,

    /// Keep every N-th iterate in the trajectory file [default: 1]
    #[arg(long, value_name = "N", default_value_t = 1)]
    record_every: usize,

    /// Use finite differences instead of the analytic Hessian
    #[arg(long)]
    finite_differences: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig3,
    Fig4,
    Fig7,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig3 => Preset::Fig3,
            PresetArg::Fig4 => Preset::Fig4,
            PresetArg::Fig7 => Preset::Fig7,
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Start from a figure preset
    #[arg(long, value_enum, conflicts_with = "config")]
    preset: Option<PresetArg>,

    /// Start from a JSON sweep configuration
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Game `id[:key=value]...`; repeatable, replaces the base games
    #[arg(long = "game", value_name = "ID")]
    games: Vec<String>,

    /// Update rule `kind[:lambda[:epsilon]]`; repeatable, replaces the base rules
    #[arg(long = "adjuster", value_parser = parse_adjuster)]
    adjusters: Vec<AdjusterSpec>,

    /// Explicit learning rates, e.g. `0.01,0.032,0.1`
    #[arg(long, value_parser = vector_arg, group = "grid")]
    etas: Option<Vector>,

    /// Log-spaced learning rates `start,stop,count`
    #[arg(long, value_parser = vector_arg, group = "grid")]
    eta_log: Option<Vector>,

    /// Evenly spaced learning rates `start,stop,count`
    #[arg(long, value_parser = vector_arg, group = "grid")]
    eta_linear: Option<Vector>,

    /// Explicit starting point; repeatable
    #[arg(long, value_parser = vector_arg, allow_hyphen_values = true, group = "start")]
    w0: Vec<Vector>,

    /// Single start with every coordinate set to this value
    #[arg(long, allow_hyphen_values = true, group = "start")]
    w0_fill: Option<f64>,

    /// Random starts in a ball, `radius,count`
    #[arg(long, value_parser = vector_arg, group = "start")]
    w0_random: Option<Vector>,

    #[command(flatten)]
    stop: StopArgs,

    /// Print the effective configuration as JSON instead of running it
    #[arg(long)]
    dump_config: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// Comma-separated decimals; scientific notation is accepted.
pub fn parse_vector(raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                Ok(_) => Err(format!("non-finite value {s:?}")),
                Err(_) => Err(format!("malformed number {s:?} in {raw:?}")),
            }
        })
        .collect()
}

/// A parsed vector literal; a newtype so clap treats it as one value.
#[derive(Debug, Clone, PartialEq)]
struct Vector(Vec<f64>);

fn vector_arg(raw: &str) -> Result<Vector, String> {
    parse_vector(raw).map(Vector)
}

/// `kind[:lambda[:epsilon]]`
pub fn parse_adjuster(raw: &str) -> Result<AdjusterSpec, String> {
    let mut parts = raw.split(':');
    let kind: AdjusterKind = parts.next().unwrap_or_default().parse().map_err(|e| format!("{e}"))?;
    let mut spec = AdjusterSpec::new(kind);
    let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| format!("malformed {what} {s:?}"));
    if let Some(l) = parts.next() {
        spec.lambda = num(l, "lambda")?;
    }
    if let Some(e) = parts.next() {
        spec.epsilon = num(e, "epsilon")?;
    }
    if parts.next().is_some() {
        return Err(format!("expected kind[:lambda[:epsilon]], got {raw:?}"));
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| runtime(anyhow::Error::new(e).context(format!("creating {}", p.display()))))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut out = output(cli.out.as_deref())?;
    match cli.command {
        Command::ListGames => list_games(cli.format, &mut out)?,
        Command::Analyze(args) => analyze(&args, cli.format, &mut out)?,
        Command::Run(args) => run(&args, cli.format, cli.seed.unwrap_or(0), &mut out)?,
        Command::Sweep(args) => sweep(&args, cli.format, cli.seed, cli.jobs, &mut out)?,
    }
    out.flush().map_err(runtime)
}

fn list_games(format: Option<Format>, out: &mut dyn Write) -> Result<(), CliError> {
    match format {
        None => {
            for e in CATALOG {
                writeln!(out, "{:<22}{}", e.name, e.summary).map_err(runtime)?;
                for p in e.params {
                    let kv = format!("{}={}", p.name, p.default);
                    writeln!(out, "    {kv:<18}{}", p.description).map_err(runtime)?;
                }
            }
            Ok(())
        }
        Some(Format::Json) => {
            #[derive(Serialize)]
            struct Param {
                name: &'static str,
                default: &'static str,
                description: &'static str,
            }
            #[derive(Serialize)]
            struct Entry {
                name: &'static str,
                summary: &'static str,
                params: Vec<Param>,
            }
            #[derive(Serialize)]
            struct Listing {
                games: Vec<Entry>,
            }
            let games = CATALOG
                .iter()
                .map(|e| Entry {
                    name: e.name,
                    summary: e.summary,
                    params: e
                        .params
                        .iter()
                        .map(|p| Param { name: p.name, default: p.default, description: p.description })
                        .collect(),
                })
                .collect();
            format::write_json(&Listing { games }, out).map_err(runtime)
        }
        Some(Format::Csv) => Err(usage("list-games supports text (default) or --format json")),
    }
}

fn diff_config(finite_differences: bool) -> DifferentiationConfig {
    if finite_differences {
        DifferentiationConfig::finite_difference()
    } else {
        DifferentiationConfig::default()
    }
}

fn analyze(args: &AnalyzeArgs, format: Option<Format>, out: &mut dyn Write) -> Result<(), CliError> {
    if format == Some(Format::Csv) {
        return Err(usage("analyze only writes JSON"));
    }
    let (sel, game) = args.game.build()?;
    if args.at.0.len() != game.dim() {
        return Err(usage(format!("--at has {} coordinates, {} needs {}", args.at.0.len(), sel, game.dim())));
    }
    let report = experiments::analyze_point(
        &sel.to_string(),
        &game,
        &args.at.0,
        args.epsilon,
        &diff_config(args.finite_differences),
    )
    .map_err(runtime)?;
    format::write_json(&report, out).map_err(runtime)
}

#[derive(Serialize)]
struct RunSummary {
    game: String,
    adjuster: AdjusterKind,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    eta: f64,
    seed: u64,
    w0: Vec<f64>,
    outcome: &'static str,
    iters: usize,
    trailing_loss: f64,
    spectral_radius: Option<f64>,
    final_w: Vec<f64>,
    final_norm: f64,
    final_xi_norm: f64,
}

fn run(args: &RunArgs, format: Option<Format>, seed: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let (sel, game) = args.game.build()?;
    let mut spec = args.adjuster.with_diff(diff_config(args.finite_differences));
    if let Some(l) = args.lambda {
        spec.lambda = l;
    }
    if let Some(e) = args.epsilon {
        spec.epsilon = e;
    }
    spec.validate().map_err(usage)?;
    if !(args.eta > 0.0 && args.eta.is_finite()) {
        return Err(usage(format!("--eta must be positive, got {}", args.eta)));
    }

    let w0 = match (&args.w0, args.w0_random) {
        (Some(w), _) => w.0.clone(),
        (None, Some(radius)) => {
            let policy = InitialPoints::RandomBall { radius, count: 1 };
            policy.validate().map_err(usage)?;
            policy.points(game.dim(), seed, 0).map_err(usage)?.remove(0)
        }
        (None, None) => vec![0.5; game.dim()],
    };
    if w0.len() != game.dim() {
        return Err(usage(format!("--w0 has {} coordinates, {} needs {}", w0.len(), sel, game.dim())));
    }

    let mut stop = StopCriteria { record_every: args.record_every, ..StopCriteria::default() };
    if !args.loss_criterion {
        stop.xi_threshold = Some(1e-6);
    }
    args.stop.apply(&mut stop);
    stop.validate().map_err(usage)?;

    let t = adjusters::run(&spec, &game, &w0, args.eta, &stop).map_err(runtime)?;
    if let Some(path) = &args.trajectory {
        let file = File::create(path)
            .map_err(|e| runtime(anyhow::Error::new(e).context(format!("creating {}", path.display()))))?;
        format::write_trajectory_csv(&t, BufWriter::new(file)).map_err(runtime)?;
    }

    let trailing = t.trailing_loss();
    let trailing_loss = if trailing.is_finite() { trailing.min(TRAILING_LOSS_CAP) } else { TRAILING_LOSS_CAP };
    let spectral_radius = spectral_oracle(&spec, &game, args.eta).ok().map(|r| r.spectral_radius);
    let lambda = spec.kind.uses_lambda().then_some(spec.lambda);
    let iters = t.outcome.iteration().unwrap_or(stop.max_iters);
    match format.unwrap_or(Format::Json) {
        Format::Csv => {
            let cell = SweepCell {
                game: sel.to_string(),
                adjuster: spec.kind,
                lambda,
                eta: args.eta,
                seed,
                w0_index: 0,
                w0: w0.clone(),
                outcome: t.outcome,
                iters,
                trailing_loss,
                spectral_radius,
            };
            format::write_sweep_csv(&SweepResult { cells: vec![cell] }, out).map_err(runtime)
        }
        Format::Json => {
            let final_w = t.final_point().to_vec();
            let final_xi_norm = diffgame_core::linalg::norm(&game.simultaneous_gradient(&final_w));
            let summary = RunSummary {
                game: sel.to_string(),
                adjuster: spec.kind,
                lambda,
                epsilon: (spec.kind == AdjusterKind::SGAAligned).then_some(spec.epsilon),
                eta: args.eta,
                seed,
                w0,
                outcome: t.outcome.label(),
                iters,
                trailing_loss,
                spectral_radius,
                final_norm: diffgame_core::linalg::norm(&final_w),
                final_w,
                final_xi_norm,
            };
            format::write_json(&summary, out).map_err(runtime)
        }
    }
}

/// Base (preset, config file or empty) overlaid with flags, then `--seed`
/// and `--jobs`.
fn sweep_config(args: &SweepArgs, seed: Option<u64>, jobs: Option<usize>) -> Result<SweepConfig, CliError> {
    let mut config = match (args.preset, &args.config) {
        (Some(p), _) => Preset::from(p).config(),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| runtime(anyhow::Error::new(e).context(format!("reading {}", path.display()))))?;
            serde_json::from_str(&text)
                .map_err(|e| runtime(anyhow::Error::new(e).context(format!("parsing {}", path.display()))))?
        }
        (None, None) => SweepConfig {
            games: vec![],
            adjusters: vec![],
            etas: EtaGrid::List(vec![]),
            w0: InitialPoints::Fill(0.5),
            stop: StopCriteria::default(),
            jobs: 0,
            seed: 0,
        },
    };

    if !args.games.is_empty() {
        config.games = args.games.iter().map(|g| GameSelection::parse(g)).collect::<Result<_, _>>().map_err(usage)?;
    }
    if !args.adjusters.is_empty() {
        config.adjusters = args.adjusters.clone();
    }
    let triple = |v: &Vector, flag: &str| -> Result<(f64, f64, usize), CliError> {
        match v.0.as_slice() {
            [a, b, n] if *n >= 1.0 && n.fract() == 0.0 => Ok((*a, *b, *n as usize)),
            _ => Err(usage(format!("--{flag} expects start,stop,count"))),
        }
    };
    if let Some(v) = &args.etas {
        config.etas = EtaGrid::List(v.0.clone());
    } else if let Some(v) = &args.eta_log {
        let (start, stop, count) = triple(v, "eta-log")?;
        config.etas = EtaGrid::Log { start, stop, count };
    } else if let Some(v) = &args.eta_linear {
        let (start, stop, count) = triple(v, "eta-linear")?;
        config.etas = EtaGrid::Linear { start, stop, count };
    }
    if !args.w0.is_empty() {
        config.w0 = InitialPoints::Points(args.w0.iter().map(|v| v.0.clone()).collect());
    } else if let Some(x) = args.w0_fill {
        config.w0 = InitialPoints::Fill(x);
    } else if let Some(v) = &args.w0_random {
        match v.0.as_slice() {
            [r, n] if *n >= 1.0 && n.fract() == 0.0 => {
                config.w0 = InitialPoints::RandomBall { radius: *r, count: *n as usize }
            }
            _ => return Err(usage("--w0-random expects radius,count")),
        }
    }
    args.stop.apply(&mut config.stop);
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(j) = jobs {
        config.jobs = j;
    }

    let from_flags = args.preset.is_none() && args.config.is_none();
    if let Err(e) = config.validate() {
        return Err(if from_flags { usage(e) } else { runtime(e) });
    }
    for g in &config.games {
        g.catalog().map_err(|e| if from_flags { usage(e) } else { runtime(e) })?;
    }
    Ok(config)
}

fn sweep(
    args: &SweepArgs,
    format: Option<Format>,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let config = sweep_config(args, seed, jobs)?;
    if args.dump_config {
        serde_json::to_writer_pretty(&mut *out, &config).map_err(runtime)?;
        return writeln!(out).map_err(runtime);
    }
    let result = experiments::sweep(&config).map_err(runtime)?;
    format::write_sweep(&result, format.unwrap_or(Format::Csv), out).map_err(runtime)
}
