//! The `durcsp` command line. The binary only forwards `argv` to [`main_with`].
//!
//! Exit codes: 0 success or bisimilar, 1 not bisimilar or diagnostics,
//! 2 usage or input error, 3 inconclusive.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::initial_config;
use crate::corpus::{load_spec, CorpusError};
use crate::equivalence::{
    config_bisimilar, cts_run_bisimilar, refinement_preserved, tau_bisimilar_report, CheckParams, EquivalenceError,
    Verdict,
};
use crate::gen;
use crate::opsem::{min_makespan, parse_schedule, render_schedule, run, MakespanError, Semantics, TimeMode};
use crate::syntax::{parse_process, render, render_spec, Action, ParseError, Process, Spec, SpecError};
use crate::tcts::{compile, parse_model, render_model, to_dot, validate_cts, CompileError, CompileOptions, TimedCts, MODEL_HEADER};
use crate::time::Duration;

#[derive(Debug, Parser)]
#[command(name = "durcsp", version, about = "Duration-CSP workbench")]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for commands that sample random specifications.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a spec, then print it back.
    Parse { file: PathBuf },
    /// Replay a schedule file and print the trace.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Urgent)]
        mode: Mode,
    },
    /// Build the timed-CTS and check its well-formedness.
    Compile {
        file: PathBuf,
        /// Print the model as Graphviz DOT.
        #[arg(long, conflicts_with = "model")]
        dot: bool,
        /// Print the model in the text format.
        #[arg(long)]
        model: bool,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Compare a spec with its compiled model. Without a file, samples
    /// random loop-free specs.
    #[command(name = "check-theorem1")]
    CheckTheorem1 {
        file: Option<PathBuf>,
        #[command(flatten)]
        game: Game,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Operator budget of sampled specs.
        #[arg(long, default_value_t = 6)]
        ops: usize,
    },
    /// Compare two specs.
    CheckBisim {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, value_enum, default_value_t = Semantic::Config)]
        semantics: Semantic,
        #[command(flatten)]
        game: Game,
        /// Also write the counterexample trace here.
        #[arg(long)]
        cex: Option<PathBuf>,
    },
    /// Check that refining an action keeps a bisimilar pair bisimilar.
    /// Without `--left`, samples random pairs and refinements.
    RefineCheck {
        #[arg(long, requires_all = ["right", "action", "by"])]
        left: Option<PathBuf>,
        #[arg(long)]
        right: Option<PathBuf>,
        /// The action to refine.
        #[arg(long)]
        action: Option<String>,
        /// The refining process, as source text.
        #[arg(long)]
        by: Option<String>,
        #[command(flatten)]
        game: Game,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Convert a spec (compiled first) or a model file.
    Export {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Shortest completion time.
    Makespan {
        file: PathBuf,
        #[arg(long)]
        grid: Option<Duration>,
        /// Most actions on one schedule.
        #[arg(long, default_value_t = 32)]
        depth: usize,
    },
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Bounds {
    #[arg(long, default_value_t = CompileOptions::default().max_states)]
    pub max_states: usize,
    #[arg(long, default_value_t = CompileOptions::default().max_unfold)]
    pub max_unfold: usize,
    /// Leave states this many steps from the start unexpanded.
    #[arg(long)]
    pub max_depth: Option<usize>,
}

impl Bounds {
    fn options(self) -> CompileOptions {
        CompileOptions { max_states: self.max_states, max_unfold: self.max_unfold, max_depth: self.max_depth }
    }
}

#[derive(Debug, Args, Clone)]
pub struct Game {
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// Delay grid; half the gcd of the constants when absent.
    #[arg(long)]
    pub grid: Option<Duration>,
    /// Give up (exit 3) after this many game positions.
    #[arg(long, default_value_t = CheckParams::DEFAULT_MAX_PAIRS)]
    pub max_pairs: usize,
}

impl Game {
    fn params(&self, spec: &Spec) -> CheckParams {
        self.with_grid(self.grid.unwrap_or_else(|| spec.default_grid()))
    }

    fn with_grid(&self, grid: Duration) -> CheckParams {
        CheckParams { max_pairs: self.max_pairs, ..CheckParams::new(self.depth, grid) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Urgent,
    Lazy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Semantic {
    /// Operational configurations, stamps compared.
    Config,
    /// Runs of the compiled models.
    Cts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Model,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Equivalence(#[from] EquivalenceError),
    #[error(transparent)]
    Makespan(#[from] MakespanError),
}

/// What a command printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout, stderr: String::new() }
    }

    fn with_code(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }
}

/// Parses `args` (program name first), runs the command and prints.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let out = execute(&cli);
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    out.code
}

/// Runs a parsed command without touching the process streams.
pub fn execute(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok(o) => o,
        Err(e) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Parse { file } => parse_cmd(cli, file),
        Command::Simulate { file, schedule, mode } => simulate_cmd(cli, file, schedule, *mode),
        Command::Compile { file, dot, model, bounds } => {
            let format = match (dot, model) {
                (true, _) => Some(Format::Dot),
                (_, true) => Some(Format::Model),
                _ => None,
            };
            compile_cmd(cli, file, format, *bounds)
        }
        Command::CheckTheorem1 { file, game, samples, ops } => theorem1_cmd(cli, file.as_deref(), game, *samples, *ops),
        Command::CheckBisim { left, right, semantics, game, cex } => {
            bisim_cmd(cli, left, right, *semantics, game, cex.as_deref())
        }
        Command::RefineCheck { left, right, action, by, game, samples } => match (left, right, action, by) {
            (Some(l), Some(r), Some(a), Some(b)) => refine_one(cli, l, r, a, b, game),
            _ => refine_sampled(cli, game, *samples),
        },
        Command::Export { file, format, bounds } => export_cmd(cli, file, *format, *bounds),
        Command::Makespan { file, grid, depth } => makespan_cmd(cli, file, *grid, *depth),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn spec_of(path: &Path) -> Result<Spec, CliError> {
    Ok(load_spec(path)?.spec)
}

fn pretty(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values always serialise"))
}

fn verdict_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Bisimilar { .. } => 0,
        Verdict::NotBisimilar(_) => 1,
        Verdict::Inconclusive { .. } => 3,
    }
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Bisimilar { bound_hit } => json!({"verdict": "bisimilar", "bound_hit": bound_hit}),
        Verdict::NotBisimilar(c) => json!({
            "verdict": "not-bisimilar",
            "clause": c.clause.id(),
            "trace": c.trace.iter().map(|(s, m)| format!("{s} {m}")).collect::<Vec<_>>(),
        }),
        Verdict::Inconclusive { reason } => json!({"verdict": "inconclusive", "reason": reason}),
    }
}

/// One-paragraph human report of a verdict.
fn verdict_text(v: &Verdict, params: &CheckParams) -> String {
    let bounds = format!("depth={}, grid={}", params.max_depth, params.delay_grid);
    match v {
        Verdict::Bisimilar { bound_hit: false } => format!("Bisimilar (within bounds: {bounds})\n"),
        Verdict::Bisimilar { bound_hit: true } => {
            format!("Bisimilar (within bounds: {bounds}; behaviour continues past the depth bound)\n")
        }
        Verdict::NotBisimilar(c) => format!("NotBisimilar (clause {})\n{}", c.clause.id(), c.to_text()),
        Verdict::Inconclusive { reason } => format!("Inconclusive ({reason}; {bounds})\n"),
    }
}

fn parse_cmd(cli: &Cli, file: &Path) -> Result<Outcome, CliError> {
    let spec = spec_of(file)?;
    if cli.json {
        let defs: serde_json::Map<String, Value> =
            spec.definitions.iter().map(|(n, p)| (n.clone(), json!(render(p)))).collect();
        return Ok(Outcome::ok(pretty(&json!({
            "root": spec.root,
            "durations": spec.durations,
            "definitions": defs,
        }))));
    }
    Ok(Outcome::ok(render_spec(&spec)))
}

fn simulate_cmd(cli: &Cli, file: &Path, schedule: &Path, mode: Mode) -> Result<Outcome, CliError> {
    let spec = spec_of(file)?;
    let entries = parse_schedule(&read(schedule)?)
        .map_err(|e| CliError::Format { path: schedule.to_path_buf(), message: e.to_string() })?;
    let mode = match mode {
        Mode::Urgent => TimeMode::Urgent,
        Mode::Lazy => TimeMode::Lazy,
    };
    let sem = Semantics::new(&spec, mode);
    let start = initial_config(spec.root_process()?);
    match run(&sem, &start, &entries) {
        Ok(trace) => {
            if cli.json {
                let moves: Vec<String> = trace.moves().map(|m| m.to_string()).collect();
                return Ok(Outcome::ok(pretty(&json!({"moves": moves, "final": trace.last().to_string()}))));
            }
            Ok(Outcome::ok(format!("{}# final {}\n", trace.to_text(), trace.last())))
        }
        Err(e) => Ok(Outcome { code: 1, stdout: String::new(), stderr: format!("error: {e}\n") }),
    }
}

fn compile_cmd(cli: &Cli, file: &Path, format: Option<Format>, bounds: Bounds) -> Result<Outcome, CliError> {
    let spec = spec_of(file)?;
    let m = compile(&spec, bounds.options())?;
    let diags = validate_cts(&m);
    let code = i32::from(!diags.is_empty());
    let text = match format {
        Some(Format::Dot) => Some(to_dot(&m)),
        Some(Format::Model) => Some(render_model(&m)),
        None => None,
    };
    let stdout = if cli.json {
        pretty(&json!({
            "states": m.states.len(),
            "transitions": m.transitions.len(),
            "truncated": m.truncated,
            "diagnostics": diags.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            "output": text,
        }))
    } else if let Some(t) = text {
        t
    } else {
        format!("states {}\ntransitions {}\ntruncated {}\ndiagnostics {}\n", m.states.len(), m.transitions.len(), m.truncated, diags.len())
    };
    let stderr: String = diags.iter().map(|d| format!("diagnostic: {d}\n")).collect();
    Ok(Outcome { code, stdout, stderr })
}

fn theorem1_cmd(cli: &Cli, file: Option<&Path>, game: &Game, samples: usize, ops: usize) -> Result<Outcome, CliError> {
    let Some(file) = file else {
        return theorem1_sampled(cli, game, samples, ops);
    };
    let spec = spec_of(file)?;
    let params = game.params(&spec);
    let m = compile(&spec, CompileOptions { max_depth: Some(game.depth), ..CompileOptions::default() })?;
    let report = tau_bisimilar_report(&m, &spec, &params)?;
    let mut code = verdict_code(&report.verdict);
    if report.synch_violations > 0 && code == 0 {
        code = 1;
    }
    if cli.json {
        let mut v = verdict_json(&report.verdict);
        v["depth"] = json!(params.max_depth);
        v["grid"] = json!(params.delay_grid);
        v["positions"] = json!(report.pairs);
        v["synch_violations"] = json!(report.synch_violations);
        return Ok(Outcome::with_code(code, pretty(&v)));
    }
    let mut text = verdict_text(&report.verdict, &params);
    if report.synch_violations > 0 {
        text.push_str(&format!("synchronisation invariant broken {} times\n", report.synch_violations));
    }
    Ok(Outcome::with_code(code, text))
}

fn theorem1_sampled(cli: &Cli, game: &Game, samples: usize, ops: usize) -> Result<Outcome, CliError> {
    let mut rng = gen::rng(cli.seed);
    let mut rows = Vec::new();
    let mut worst = 0;
    let mut failures = String::new();
    for i in 0..samples {
        let spec = gen::loop_free_spec(&mut rng, ops);
        let params = game.params(&spec);
        let m = compile(&spec, CompileOptions::default())?;
        let report = tau_bisimilar_report(&m, &spec, &params)?;
        let mut code = verdict_code(&report.verdict);
        if report.synch_violations > 0 && code == 0 {
            code = 1;
        }
        worst = worst.max(code);
        let term = render(spec.root_process()?);
        if code != 0 {
            failures.push_str(&format!("sample {i}: {term}: {}\n", report.verdict));
        }
        rows.push(json!({"term": term, "result": verdict_json(&report.verdict), "synch_violations": report.synch_violations}));
    }
    let ok = rows.len() - failures.lines().count();
    if cli.json {
        return Ok(Outcome::with_code(worst, pretty(&json!({"seed": cli.seed, "depth": game.depth, "samples": rows}))));
    }
    Ok(Outcome::with_code(
        worst,
        format!("{ok}/{samples} sampled specs Bisimilar (within bounds: depth={}, seed={})\n{failures}", game.depth, cli.seed),
    ))
}

/// One spec holding the definitions and durations of both.
fn merge(a: &Spec, b: &Spec) -> Result<Spec, CliError> {
    let mut out = a.clone();
    for (k, v) in &b.durations {
        match out.durations.insert(k.clone(), *v) {
            Some(old) if old != *v => {
                return Err(CliError::Usage(format!("duration of `{k}` differs between inputs ({old} and {v})")))
            }
            _ => {}
        }
    }
    for (k, v) in &b.definitions {
        match out.definitions.insert(k.clone(), v.clone()) {
            Some(old) if old != *v => {
                return Err(CliError::Usage(format!("process `{k}` is defined differently in the two inputs")))
            }
            _ => {}
        }
    }
    Ok(out)
}

fn bisim_cmd(
    cli: &Cli,
    left: &Path,
    right: &Path,
    semantics: Semantic,
    game: &Game,
    cex: Option<&Path>,
) -> Result<Outcome, CliError> {
    let (a, b) = (spec_of(left)?, spec_of(right)?);
    let spec = merge(&a, &b)?;
    let params = game.params(&spec);
    let verdict = match semantics {
        Semantic::Config => {
            let ca = initial_config(a.root_process()?);
            let cb = initial_config(b.root_process()?);
            config_bisimilar(&ca, &cb, &spec, &params)?
        }
        Semantic::Cts => {
            let opts = CompileOptions { max_depth: Some(game.depth), ..CompileOptions::default() };
            cts_run_bisimilar(&compile(&a, opts)?, &compile(&b, opts)?, &spec, &params)?
        }
    };
    if let (Some(path), Verdict::NotBisimilar(c)) = (cex, &verdict) {
        write(path, &c.to_text())?;
    }
    let stdout = if cli.json { pretty(&verdict_json(&verdict)) } else { verdict_text(&verdict, &params) };
    Ok(Outcome::with_code(verdict_code(&verdict), stdout))
}

fn refine_one(cli: &Cli, left: &Path, right: &Path, action: &str, by: &str, game: &Game) -> Result<Outcome, CliError> {
    let (a, b) = (spec_of(left)?, spec_of(right)?);
    let spec = merge(&a, &b)?;
    let by = parse_process(by)?;
    let params = game.params(&spec);
    let p = initial_config(a.root_process()?);
    let q = initial_config(b.root_process()?);
    match refinement_preserved(&by, &Action::visible(action), &p, &q, &spec, &params) {
        Ok(v) => {
            let stdout = if cli.json { pretty(&verdict_json(&v)) } else { verdict_text(&v, &params) };
            Ok(Outcome::with_code(verdict_code(&v), stdout))
        }
        Err(EquivalenceError::Precondition(msg)) => {
            Ok(Outcome { code: 1, stdout: String::new(), stderr: format!("precondition: {msg}\n") })
        }
        Err(e) => Err(e.into()),
    }
}

fn refine_sampled(cli: &Cli, game: &Game, samples: usize) -> Result<Outcome, CliError> {
    let mut rng = gen::rng(cli.seed);
    let grid = game.grid.unwrap_or(Duration::from_ratio(1, 2));
    let params = game.with_grid(grid);
    let a = Action::visible("a");
    let mut rows = Vec::new();
    let mut failures = String::new();
    let mut worst = 0;
    for i in 0..samples {
        let family = gen::FAMILIES[i % gen::FAMILIES.len()];
        let table = gen::durations(&mut rng);
        let spec = Spec::single(Process::Stop, &table);
        let (p, q) = gen::bisimilar_pair(&mut rng, family, 3);
        let by = gen::refining(&mut rng);
        let v = refinement_preserved(&by, &a, &initial_config(&p), &initial_config(&q), &spec, &params)?;
        let code = verdict_code(&v);
        worst = worst.max(code);
        if code != 0 {
            failures.push_str(&format!("sample {i}: rho a := {by} in ({p}) vs ({q}): {v}\n"));
        }
        rows.push(json!({
            "family": format!("{family:?}"),
            "left": p.to_string(),
            "right": q.to_string(),
            "by": by.to_string(),
            "result": verdict_json(&v),
        }));
    }
    if cli.json {
        return Ok(Outcome::with_code(worst, pretty(&json!({"seed": cli.seed, "depth": game.depth, "grid": grid, "samples": rows}))));
    }
    let ok = samples - failures.lines().count();
    Ok(Outcome::with_code(
        worst,
        format!("{ok}/{samples} refinements preserved bisimilarity (depth={}, grid={grid}, seed={})\n{failures}", game.depth, cli.seed),
    ))
}

fn model_of(file: &Path, bounds: Bounds) -> Result<TimedCts, CliError> {
    let text = read(file)?;
    if text.lines().next().is_some_and(|l| l.trim() == MODEL_HEADER) {
        return parse_model(&text).map_err(|e| CliError::Format { path: file.to_path_buf(), message: e.to_string() });
    }
    Ok(compile(&spec_of(file)?, bounds.options())?)
}

fn export_cmd(cli: &Cli, file: &Path, format: Format, bounds: Bounds) -> Result<Outcome, CliError> {
    let m = model_of(file, bounds)?;
    let text = match format {
        Format::Dot => to_dot(&m),
        Format::Model => render_model(&m),
    };
    if cli.json {
        return Ok(Outcome::ok(pretty(&json!({"format": format!("{format:?}").to_lowercase(), "output": text}))));
    }
    Ok(Outcome::ok(text))
}

fn makespan_cmd(cli: &Cli, file: &Path, grid: Option<Duration>, depth: usize) -> Result<Outcome, CliError> {
    let spec = spec_of(file)?;
    let grid = grid.unwrap_or_else(|| spec.default_grid());
    let ms = min_makespan(&spec, grid, depth)?;
    if cli.json {
        let schedule: Vec<String> = render_schedule(&ms.schedule).lines().skip(1).map(str::to_string).collect();
        return Ok(Outcome::ok(pretty(&json!({
            "infimum": ms.infimum,
            "open": ms.open,
            "grid": grid,
            "schedule": schedule,
        }))));
    }
    Ok(Outcome::ok(format!("{ms}\n{}", render_schedule(&ms.schedule))))
}
