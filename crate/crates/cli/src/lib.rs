//! `lily` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 parameter error,
//! 3 verification failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use lily_core::dynamics::{default_grid, time_grid, EvolutionEngine, WalkerState};
use lily_core::graph::{ChiralGraph, GraphError, VertexId};
use lily_core::krylov::{krylov_reduce, KrylovError};
use lily_core::lily::{build_lily, LilyLayout, LilyParams};
use lily_core::routing::{route, RouteOptions, RoutingError};
use lily_core::sweep::{format_float, sweep, BetaMode, SweepSpec};
use num_complex::Complex64;
use serde::Serialize;

pub mod config;
pub mod verify;

use config::{load_config, ExperimentConfig, LilyBlock, Psi0Spec};

#[derive(Debug)]
pub enum CliError {
    Param(String),
    Runtime(String),
    VerificationFailed(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Param(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::VerificationFailed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Param(_) => 2,
            CliError::VerificationFailed(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io(e) => CliError::Runtime(e.to_string()),
            other => CliError::Param(other.to_string()),
        }
    }
}

impl From<KrylovError> for CliError {
    fn from(e: KrylovError) -> Self {
        CliError::Param(e.to_string())
    }
}

impl From<RoutingError> for CliError {
    fn from(e: RoutingError) -> Self {
        CliError::Param(e.to_string())
    }
}

impl From<lily_core::dynamics::DynamicsError> for CliError {
    fn from(e: lily_core::dynamics::DynamicsError) -> Self {
        CliError::Param(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "lily", version, about = "Chiral quantum routing on the Lily graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the graph file of a Lily instance.
    Build(Common),
    /// Krylov-reduce a Hamiltonian around a seed vertex.
    Reduce(ReduceArgs),
    /// Per-vertex probabilities on a time grid, as CSV.
    Evolve(EvolveArgs),
    /// Routing report for one parameter point, as JSON.
    Route(RouteArgs),
    /// Routing reports over a (d, beta, n) grid, as CSV.
    Sweep(SweepArgs),
    /// Check perfect routing and emit a verification record.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Experiment configuration (JSON); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph file to use instead of Lily parameters.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, conflicts_with = "beta_star_q")]
    beta: Option<f64>,
    /// Use the tuned weight solving sqrt(1 + 2 d beta^2) = 2q.
    #[arg(long)]
    beta_star_q: Option<usize>,
    /// Output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    common: Common,
    /// Seed vertex (default: the target output for Lily graphs, else 0).
    #[arg(long)]
    seed: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    /// Vertex id, or `v,re,im;v,re,im;...` amplitude triples.
    #[arg(long)]
    psi0: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    t_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Args, Debug)]
struct RouteArgs {
    #[command(flatten)]
    common: Common,
    /// Search window `lo,hi` in radians.
    #[arg(long)]
    window: Option<String>,
    /// Use the closed form with frequency sqrt(beta^2 + 2d).
    #[arg(long)]
    paper_literal: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chiral layer sizes: `a..b` (inclusive) or a comma list.
    #[arg(long = "d")]
    d_list: Option<String>,
    /// `unit` or `star`.
    #[arg(long = "beta")]
    beta_mode: Option<String>,
    /// Output counts: `a..b` or a comma list.
    #[arg(long = "n")]
    n_list: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    paper_literal: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write provenance (config hash, timestamp) as JSON here.
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list of q for the checks at t = (2q + 1) pi.
    #[arg(long)]
    q_list: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

/// Parse `argv` (including the program name), execute, return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 1,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lily: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Build(c) => cmd_build(&c),
        Command::Reduce(a) => cmd_reduce(&a),
        Command::Evolve(a) => cmd_evolve(&a),
        Command::Route(a) => cmd_route(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
    }
}

enum Source {
    Lily(LilyParams),
    File(ChiralGraph),
}

impl Source {
    fn graph(&self) -> Result<(ChiralGraph, Option<LilyLayout>), CliError> {
        match self {
            Source::Lily(p) => {
                let (g, layout) = build_lily(p)?;
                Ok((g, Some(layout)))
            }
            Source::File(g) => Ok((g.clone(), None)),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    match &common.config {
        Some(p) => load_config(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn flag_block(c: &Common) -> LilyBlock {
    LilyBlock {
        n: c.n,
        d: c.d,
        target: c.target,
        beta: c.beta,
        beta_star_q: c.beta_star_q,
    }
}

fn source(common: &Common, cfg: &ExperimentConfig) -> Result<Source, CliError> {
    let flags = flag_block(common);
    if common.graph.is_some() && !flags.is_empty() {
        return Err(CliError::Param(
            "--graph cannot be combined with Lily parameter flags".into(),
        ));
    }
    if let Some(path) = &common.graph {
        return Ok(Source::File(ChiralGraph::read(path)?));
    }
    if flags.is_empty() {
        if let Some(path) = &cfg.graph_file {
            return Ok(Source::File(ChiralGraph::read(path)?));
        }
    }
    let base = cfg.lily.clone().unwrap_or_default();
    Ok(Source::Lily(flags.or(&base).resolve()?))
}

fn lily_params(common: &Common, cfg: &ExperimentConfig) -> Result<LilyParams, CliError> {
    match source(common, cfg)? {
        Source::Lily(p) => Ok(p),
        Source::File(_) => Err(CliError::Param(
            "this command needs Lily parameters, not a graph file".into(),
        )),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()) {
                // reader went away (`| head`); nothing left to report to
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| CliError::Runtime(e.to_string())),
            }
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn cmd_build(c: &Common) -> Result<(), CliError> {
    let cfg = load(c)?;
    let (graph, _) = source(c, &cfg)?.graph()?;
    emit(c.out.as_deref(), &(graph.to_json() + "\n"))
}

#[derive(Serialize)]
struct ReduceOutput {
    seed: usize,
    dim: usize,
    /// Rows of `<e_j|H|e_k>` as `[re, im]` pairs.
    reduced_h: Vec<Vec<ComplexJson>>,
    /// Basis vectors `e_1..e_m`, each as `[re, im]` amplitudes.
    basis: Vec<Vec<ComplexJson>>,
    verification: ReduceChecks,
}

#[derive(Serialize)]
struct ReduceChecks {
    orthonormality_residual: f64,
    invariance_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    template_deviation: Option<f64>,
}

fn cmd_reduce(a: &ReduceArgs) -> Result<(), CliError> {
    let cfg = load(&a.common)?;
    let src = source(&a.common, &cfg)?;
    let (graph, layout) = src.graph()?;
    let seed = a
        .seed
        .or(cfg.reduce.seed)
        .unwrap_or_else(|| layout.map(|l| l.target_output().0).unwrap_or(0));
    let tol = a.tol.unwrap_or(cfg.tol);
    let h = graph.hamiltonian();
    let red = krylov_reduce(h.matrix(), VertexId(seed), tol)?;

    let template_deviation = match (&src, layout) {
        (Source::Lily(p), Some(l)) if seed == l.target_output().0 => {
            red.verify_reduced_form(p.d, p.beta).ok()
        }
        _ => None,
    };
    let out = ReduceOutput {
        seed,
        dim: red.dim(),
        reduced_h: red
            .reduced_h()
            .row_iter()
            .map(|r| r.iter().map(|&z| ComplexJson::from(z)).collect())
            .collect(),
        basis: red
            .basis()
            .column_iter()
            .map(|c| c.iter().map(|&z| ComplexJson::from(z)).collect())
            .collect(),
        verification: ReduceChecks {
            orthonormality_residual: red.orthonormality_residual(),
            invariance_residual: red.invariance_residual(h.matrix()),
            template_deviation,
        },
    };
    emit(a.common.out.as_deref(), &to_json(&out))
}

/// `"3"` or `"0,0.7071,0;1,0,0.7071"`.
pub fn parse_psi0(text: &str) -> Result<Psi0Spec, CliError> {
    let text = text.trim();
    if let Ok(v) = text.parse::<usize>() {
        return Ok(Psi0Spec::Vertex(v));
    }
    let bad = || CliError::Param(format!("--psi0: cannot parse {text:?}"));
    let mut triples = Vec::new();
    for term in text.split(';').filter(|s| !s.trim().is_empty()) {
        let parts: Vec<&str> = term.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let v = parts[0].parse::<usize>().map_err(|_| bad())?;
        let re = parts[1].parse::<f64>().map_err(|_| bad())?;
        let im = parts[2].parse::<f64>().map_err(|_| bad())?;
        triples.push((v, re, im));
    }
    if triples.is_empty() {
        return Err(bad());
    }
    Ok(Psi0Spec::Amplitudes(triples))
}

fn initial_state(spec: &Psi0Spec, dim: usize) -> Result<WalkerState, CliError> {
    let state = match spec {
        Psi0Spec::Vertex(v) => WalkerState::localized(dim, VertexId(*v))?,
        Psi0Spec::Amplitudes(terms) => {
            let terms: Vec<_> = terms
                .iter()
                .map(|&(v, re, im)| (VertexId(v), Complex64::new(re, im)))
                .collect();
            WalkerState::superposition(dim, &terms)?
        }
    };
    Ok(state)
}

fn cmd_evolve(a: &EvolveArgs) -> Result<(), CliError> {
    let cfg = load(&a.common)?;
    let (graph, _) = source(&a.common, &cfg)?.graph()?;
    let psi_spec = match &a.psi0 {
        Some(s) => parse_psi0(s)?,
        None => cfg.evolve.psi0.clone().unwrap_or(Psi0Spec::Vertex(0)),
    };
    let t_start = a.t_start.unwrap_or(cfg.evolve.t_start);
    let t_end = a.t_end.unwrap_or(cfg.evolve.t_end);
    let points = a.points.unwrap_or(cfg.evolve.points);
    if points == 0 || !t_start.is_finite() || !t_end.is_finite() {
        return Err(CliError::Param("invalid time grid".into()));
    }

    let engine = EvolutionEngine::new(&graph.hamiltonian());
    let psi0 = initial_state(&psi_spec, graph.n_vertices())?;
    let traj = engine.trajectory(&psi0)?;

    let n = graph.n_vertices();
    let mut out = String::from("t");
    for v in 0..n {
        out.push_str(&format!(",p{v}"));
    }
    out.push('\n');
    for t in time_grid(t_start, t_end, points) {
        out.push_str(&format_float(t));
        for p in traj.probabilities_at(t) {
            out.push(',');
            out.push_str(&format_float(p));
        }
        out.push('\n');
    }
    emit(a.common.out.as_deref(), &out)
}

fn parse_window(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Param(format!("--window: expected `lo,hi`, got {text:?}"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    let lo = lo.trim().parse::<f64>().map_err(|_| bad())?;
    let hi = hi.trim().parse::<f64>().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn route_options(window: Option<&str>, literal: bool, cfg: &ExperimentConfig) -> Result<RouteOptions, CliError> {
    let mut opts = RouteOptions::default();
    if let Some(w) = cfg.route.window {
        opts.window = w;
    }
    if let Some(w) = window {
        opts.window = parse_window(w)?;
    }
    opts.paper_literal = literal || cfg.route.paper_literal;
    Ok(opts)
}

fn cmd_route(a: &RouteArgs) -> Result<(), CliError> {
    let cfg = load(&a.common)?;
    let p = lily_params(&a.common, &cfg)?;
    let opts = route_options(a.window.as_deref(), a.paper_literal, &cfg)?;
    let report = route(p.d, p.n, p.beta, &opts)?;
    emit(a.common.out.as_deref(), &to_json(&report))
}

/// `"16..100"` (inclusive) or `"1,4,9"`.
pub fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Param(format!("cannot parse list {text:?}"));
    let text = text.trim();
    let list: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a = a.trim().parse::<usize>().map_err(|_| bad())?;
        let b = b.trim().trim_start_matches('=').parse::<usize>().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if list.is_empty() {
        return Err(bad());
    }
    Ok(list)
}

fn parse_beta_mode(text: &str) -> Result<BetaMode, CliError> {
    match text.trim() {
        "unit" => Ok(BetaMode::Unit),
        "star" => Ok(BetaMode::Star),
        other => Err(CliError::Param(format!("--beta: expected unit or star, got {other:?}"))),
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let base = cfg.sweep.clone();
    let d_list = match (&a.d_list, &base) {
        (Some(s), _) => parse_list(s)?,
        (None, Some(b)) => b.d_list.clone(),
        (None, None) => return Err(CliError::Param("sweep: --d is required".into())),
    };
    let n_list = match (&a.n_list, &base) {
        (Some(s), _) => parse_list(s)?,
        (None, Some(b)) => b.n_list.clone(),
        (None, None) => vec![1],
    };
    let beta_mode = match (&a.beta_mode, &base) {
        (Some(s), _) => parse_beta_mode(s)?,
        (None, Some(b)) => b.beta_mode,
        (None, None) => BetaMode::Unit,
    };
    let spec = SweepSpec {
        d_list,
        beta_mode,
        n_list,
    };
    let opts = route_options(a.window.as_deref(), a.paper_literal, &cfg)?;
    let table = with_thread_cap(|| sweep(&spec, &opts))?;
    for row in table.failures() {
        eprintln!(
            "lily: sweep point d={} n={} failed: {}",
            row.d,
            row.n,
            row.error.as_deref().unwrap_or("")
        );
    }
    if let Some(meta) = &a.meta {
        emit(Some(meta), &to_json(&table.provenance))?;
    }
    emit(a.out.as_deref(), &table.to_csv())
}

#[cfg(feature = "parallel")]
fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match std::env::var("LILY_THREADS") {
        Ok(v) => {
            let threads = v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| CliError::Param(format!("LILY_THREADS: expected a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_thread_cap<R>(f: impl FnOnce() -> R) -> Result<R, CliError> {
    Ok(f())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let cfg = load(&a.common)?;
    let p = lily_params(&a.common, &cfg)?;
    let q_list = match &a.q_list {
        Some(s) => parse_list(s)?,
        None => cfg.verify.q_list.clone(),
    };
    let tol = a.tol.unwrap_or(cfg.verify.tol);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Param("--tol must be positive".into()));
    }
    let record = verify::verify(&p, &q_list, tol, &default_grid())?;
    emit(a.common.out.as_deref(), &to_json(&record))?;
    if record.pass {
        Ok(())
    } else {
        let failed: Vec<_> = record
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::VerificationFailed(failed.join(", ")))
    }
}

/// A complex number written as `[re, im]`.
#[derive(Serialize)]
struct ComplexJson(f64, f64);

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        ComplexJson(z.re, z.im)
    }
}
