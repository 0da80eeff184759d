//! `hyra`: validate, translate, analyse and simulate affine hybrid automata.

mod load;
mod plot;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hyra::corpus::{fixture_files, fixture_set, BenchmarkId};
use hyra::exec::{self, Mode};
use hyra::io::{emit_config, emit_flowstar, emit_spaceex, write_json, ModelBundle};
use hyra::ir::HybridAutomaton;
use hyra::reach::{reach, segments_csv, ReachError, ReachOptions, Verdict};
use hyra::setrep::IntervalBox;
use hyra::simulate::{
    events_csv, runs_csv, sample_initial, simulate_batch, IntegratorKind, SimError, SimOptions, Trajectory,
};

/// Exit status 2.
const EXIT_INPUT: u8 = 2;
/// Exit status 3.
const EXIT_ENGINE: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input.
    Input(String),
    /// The analysis itself failed.
    Engine(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Engine(_) => EXIT_ENGINE,
        }
    }
}

impl From<ReachError> for Failure {
    fn from(e: ReachError) -> Self {
        match e {
            ReachError::Model(_) | ReachError::Settings(_) => Failure::Input(e.to_string()),
            _ => Failure::Engine(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(_) | SimError::Options(_) => Failure::Input(e.to_string()),
            _ => Failure::Engine(e.to_string()),
        }
    }
}

const AFTER_HELP: &str = "\
Settings precedence: command-line flag, then the config file, then the built-in default.
A SpaceEx model without an explicit config uses <model>.cfg or config.cfg next to it.
JSON models carry their own settings.

Environment:
  HYRA_THREADS  upper bound on worker threads

Exit status:
  0  success, or SafeProved
  1  PossiblyUnsafe
  2  unreadable or invalid input
  3  analysis failure";

#[derive(Parser)]
#[command(name = "hyra", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// SpaceEx XML (.xml) or JSON (.json) model.
    model: PathBuf,
    /// Config file for a SpaceEx model.
    cfg: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ReachArgs {
    /// Time step (overrides the config's sampling-time).
    #[arg(long)]
    step: Option<f64>,
    /// Time horizon (overrides the config's time-horizon).
    #[arg(long)]
    horizon: Option<f64>,
    /// Jump depth bound (overrides the config's max-jumps).
    #[arg(long)]
    max_jumps: Option<usize>,
    /// Generators kept per set after reduction.
    #[arg(long, default_value_t = 20)]
    max_generators: usize,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Integration step [default: sampling-time / 10].
    #[arg(long)]
    step: Option<f64>,
    /// Time horizon (overrides the config's time-horizon).
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, value_enum, default_value_t = Integrator::Heun)]
    integrator: Integrator,
    /// Number of runs; start points are corners of the initial box first,
    /// then uniform draws.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Random seed for the start points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
    /// Also write the discrete events of every run as CSV.
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Integrator {
    Euler,
    Heun,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Flowstar,
    Spaceex,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotFormat {
    Svg,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a model; prints a one-line summary.
    Validate(ModelArgs),
    /// Convert a model to another format.
    Translate {
        #[command(flatten)]
        input: ModelArgs,
        #[arg(long, value_enum)]
        to: Target,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a flowpipe; prints the verdict line, writes segments as CSV.
    Reach {
        #[command(flatten)]
        input: ModelArgs,
        #[command(flatten)]
        opts: ReachArgs,
        /// Segment CSV file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Like `reach`, printing only the verdict line.
    Check {
        #[command(flatten)]
        input: ModelArgs,
        #[command(flatten)]
        opts: ReachArgs,
    },
    /// Simulate from points of the initial set; writes samples as CSV.
    Simulate {
        #[command(flatten)]
        input: ModelArgs,
        #[command(flatten)]
        opts: SimArgs,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project a segment or trajectory CSV onto two variables.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, value_enum, default_value_t = PlotFormat::Svg)]
        format: PlotFormat,
        /// Output file [default: stdout].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a command on a built-in benchmark
    /// (bouncing-ball, platoon, tank3, linswitch).
    Bench {
        #[arg(value_parser = parse_benchmark)]
        name: BenchmarkId,
        #[command(subcommand)]
        action: BenchAction,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    Validate,
    Translate {
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Reach {
        #[command(flatten)]
        opts: ReachArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Check {
        #[command(flatten)]
        opts: ReachArgs,
    },
    Simulate {
        #[command(flatten)]
        opts: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write model.xml, config.cfg, model.model, model.json and
    /// expected.json into a directory.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_benchmark(s: &str) -> Result<BenchmarkId, String> {
    s.parse::<BenchmarkId>().map_err(|e| e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: cannot write: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            match so.write_all(text.as_bytes()).and_then(|_| so.flush()) {
                // a closed pipe (`| head`) is not a failure
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Engine(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn mode(sequential: bool) -> Mode {
    if sequential {
        Mode::Sequential
    } else {
        Mode::Parallel
    }
}

fn summary(aut: &HybridAutomaton) -> String {
    format!(
        "VALID name={} vars={} inputs={} locations={} transitions={}\n",
        aut.name,
        aut.vars.n(),
        aut.vars.m(),
        aut.locations.len(),
        aut.transitions.len()
    )
}

fn translate(bundle: &ModelBundle, to: Target, out: Option<&Path>) -> Result<(), Failure> {
    let text = match to {
        Target::Flowstar => emit_flowstar(bundle),
        Target::Spaceex => {
            if let Some(p) = out {
                // the settings do not fit in the XML; keep them next to it
                let cfg = p.with_extension("cfg");
                emit(Some(&cfg), &emit_config(bundle))?;
                eprintln!("wrote {}", cfg.display());
            }
            emit_spaceex(&bundle.automaton)
        }
        Target::Json => write_json(bundle),
    };
    emit(out, &text)
}

fn apply_reach_flags(bundle: &mut ModelBundle, a: &ReachArgs) -> Result<ReachOptions, Failure> {
    if let Some(h) = a.horizon {
        bundle.settings.horizon = h;
    }
    if let Some(k) = a.max_jumps {
        bundle.settings.max_jumps = k;
    }
    if let Some(s) = a.step {
        bundle.settings.step = s;
    }
    bundle
        .settings
        .check()
        .map_err(|e| Failure::Input(format!("invalid settings: {e}")))?;
    Ok(ReachOptions {
        step: None,
        max_generators: a.max_generators,
        mode: mode(a.sequential),
    })
}

fn run_reach(mut bundle: ModelBundle, a: &ReachArgs, out: Option<&Path>) -> Result<u8, Failure> {
    let opts = apply_reach_flags(&mut bundle, a)?;
    let result = reach(&bundle, &opts)?;
    emit(None, &format!("{}\n", result.verdict_line()))?;
    eprintln!(
        "termination {} flowpipes={} wall={:.3}s",
        result.termination.name(),
        result.stats.flowpipes,
        result.stats.wall_time.as_secs_f64()
    );
    if let Verdict::PossiblyUnsafe { segment } = result.verdict {
        let s = &result.segments[segment];
        eprintln!(
            "first offending segment {segment} in `{}` over [{}, {}]",
            s.location, s.time.lo, s.time.hi
        );
    }
    if let Some(p) = out {
        emit(Some(p), &segments_csv(&result))?;
    }
    Ok(match result.verdict {
        Verdict::SafeProved => 0,
        Verdict::PossiblyUnsafe { .. } => 1,
    })
}

fn run_simulate(mut bundle: ModelBundle, a: &SimArgs, out: Option<&Path>) -> Result<u8, Failure> {
    if let Some(h) = a.horizon {
        bundle.settings.horizon = h;
    }
    let step = a.step.unwrap_or(bundle.settings.step / 10.0);
    if !(step > 0.0 && step.is_finite()) {
        return Err(Failure::Input(format!("--step must be positive, got {step}")));
    }
    if a.seeds == 0 {
        return Err(Failure::Input("--seeds must be at least 1".into()));
    }
    let kind = match a.integrator {
        Integrator::Euler => IntegratorKind::Euler,
        Integrator::Heun => IntegratorKind::SecondOrder,
    };
    let init = IntervalBox::new(bundle.initial.intervals.clone());
    let starts = sample_initial(&init, a.seeds, a.seed);
    let opts = SimOptions::new(step, kind);
    let mut runs = Vec::with_capacity(starts.len());
    for (k, r) in simulate_batch(&bundle, &starts, &opts, mode(a.sequential))
        .into_iter()
        .enumerate()
    {
        let t = r?;
        let zeno = t.zeno_time.map_or(String::new(), |z| format!(" zeno_time={z}"));
        eprintln!("run {k}: events={} ending={:?}{zeno}", t.events.len(), t.ending);
        runs.push(t);
    }
    emit(out, &runs_csv(&runs))?;
    if let Some(p) = &a.events {
        emit(Some(p), &runs_events_csv(&runs))?;
    }
    Ok(0)
}

/// `run,time,label,pre_<v>…,post_<v>…`, one row per event.
fn runs_events_csv(runs: &[Trajectory]) -> String {
    let mut out = String::new();
    for (k, t) in runs.iter().enumerate() {
        let text = events_csv(t);
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if k == 0 {
            out.push_str(&format!("run,{header}\n"));
        }
        for l in lines {
            out.push_str(&format!("{k},{l}\n"));
        }
    }
    out
}

fn write_fixtures(id: BenchmarkId, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    for (name, text) in fixture_set(id, Mode::Parallel)? {
        emit(Some(&dir.join(name)), &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate(m) => {
            // settings are checked too when there are any to find
            let aut = load::automaton(&m.model)?;
            if m.cfg.is_some() || m.model.extension().is_some_and(|e| e == "json") {
                load::bundle(&m.model, m.cfg.as_deref())?;
            }
            emit(None, &summary(&aut))?;
            Ok(0)
        }
        Command::Translate { input, to, out } => {
            let bundle = match to {
                Target::Spaceex => match load::bundle(&input.model, input.cfg.as_deref()) {
                    Ok(b) => b,
                    // the automaton alone is enough for XML
                    Err(_) if input.cfg.is_none() => {
                        let aut = load::automaton(&input.model)?;
                        return emit(out.as_deref(), &emit_spaceex(&aut)).map(|_| 0);
                    }
                    Err(e) => return Err(e),
                },
                _ => load::bundle(&input.model, input.cfg.as_deref())?,
            };
            translate(&bundle, to, out.as_deref())?;
            Ok(0)
        }
        Command::Reach { input, opts, out } => {
            run_reach(load::bundle(&input.model, input.cfg.as_deref())?, &opts, out.as_deref())
        }
        Command::Check { input, opts } => run_reach(load::bundle(&input.model, input.cfg.as_deref())?, &opts, None),
        Command::Simulate { input, opts, out } => {
            run_simulate(load::bundle(&input.model, input.cfg.as_deref())?, &opts, out.as_deref())
        }
        Command::Plot { csv, x, y, format, out } => {
            let shapes = plot::read(&csv, &x, &y)?;
            let text = match format {
                PlotFormat::Svg => plot::to_svg(&shapes, &x, &y),
                PlotFormat::Csv => plot::to_csv(&shapes, &x, &y),
            };
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Bench { name, action } => {
            let bundle = name.build();
            match action {
                BenchAction::Validate => {
                    bundle.check().map_err(|e| Failure::Engine(format!("{name}: {e}")))?;
                    emit(None, &summary(&bundle.automaton))?;
                    Ok(0)
                }
                BenchAction::Translate { to, out } => translate(&bundle, to, out.as_deref()).map(|_| 0),
                BenchAction::Reach { opts, out } => run_reach(bundle, &opts, out.as_deref()),
                BenchAction::Check { opts } => run_reach(bundle, &opts, None),
                BenchAction::Simulate { opts, out } => run_simulate(bundle, &opts, out.as_deref()),
                BenchAction::Fixtures { out } => {
                    write_fixtures(name, &out)?;
                    eprintln!("wrote {} files to {}", fixture_files(&bundle).len() + 1, out.display());
                    Ok(0)
                }
            }
        }
    }
}

fn threads_from_env() {
    let Ok(v) = std::env::var("HYRA_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => exec::set_threads(n),
        _ => eprintln!("warning: ignoring HYRA_THREADS={v:?} (expected a positive integer)"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    threads_from_env();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (Failure::Input(msg) | Failure::Engine(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
