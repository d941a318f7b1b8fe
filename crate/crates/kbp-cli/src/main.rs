//! `kbpc`: batch front end for the knowledge-based program synthesizer.
//!
//! Exit codes: 0 success, 1 user/validation error (including failed
//! checks), 2 internal invariant breach.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kbp::epistemic::View;
use kbp::error::KbpError;
use kbp::exec::{export_trace, simulate, Layout, LowestIndex, Resolver, ScriptedEnv, SeededRandom};
use kbp::lang::{self, parse_spec_formula, Expr, ModelKind, SystemModel};
use kbp::oracle::{self, check_implementation, model_check_x};
use kbp::synth::{emit, parse_sidecar, synthesize, SynthOptions};

#[derive(Parser)]
#[command(name = "kbpc", version, about = "Synthesize and check knowledge-based programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Clk,
    Spr,
    Obs,
}

impl From<ViewArg> for View {
    fn from(v: ViewArg) -> View {
        match v {
            ViewArg::Clk => View::Clk,
            ViewArg::Spr => View::Spr,
            ViewArg::Obs => View::Obs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the standard implementation of a knowledge-based program.
    Synth(SynthCmd),
    /// Check a substitution or an X^k formula against a model.
    Check(CheckCmd),
    /// Run a standard program from a chosen initial state.
    Simulate(SimulateCmd),
    /// Generate a corpus model (muddy children or ring leader election).
    Gen(GenCmd),
    /// Cross-validate symbolic synthesis against the explicit-state oracle.
    OracleCompare(OracleCompareCmd),
}

#[derive(Args)]
struct SynthCmd {
    /// Knowledge semantics: clk or spr.
    #[arg(long, value_enum)]
    view: ViewArg,
    /// Output path for the emitted program (default: INPUT.synth.kbp).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output path for the sidecar mapping (default: OUT.sidecar).
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Reverse the per-agent variable blocks in the BDD order.
    #[arg(long)]
    reverse_agents: bool,
    /// Also run the explicit-state oracle and compare.
    #[arg(long)]
    oracle: bool,
    /// Explicit-state bound per slice for the oracle.
    #[arg(long, default_value_t = oracle::DEFAULT_STATE_BOUND)]
    oracle_bound: usize,
    /// Process this many inputs in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct CheckCmd {
    /// Knowledge semantics for the check.
    #[arg(long, value_enum, default_value = "spr")]
    view: ViewArg,
    /// Sidecar mapping to check against the (knowledge-based) input model.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Specification `X^k φ` to model-check against the (standard) input.
    #[arg(long)]
    formula: Option<String>,
    /// Depth k, when the formula carries no X^k prefix.
    #[arg(long)]
    depth: Option<usize>,
    /// Where to write a counterexample trace on failure.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct SimulateCmd {
    /// Number of global steps (default: the program length).
    #[arg(long)]
    steps: Option<usize>,
    /// Initial state as `var=value,...` (must pin a unique initial state).
    #[arg(long)]
    init: Option<String>,
    /// Initial state by index into the enumerated initial set.
    #[arg(long, default_value_t = 0)]
    init_index: usize,
    /// Resolve nondeterminism uniformly at random with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Crash schedule `agent:step,...` for election-style models whose
    /// leading transition branches are per-agent crash choices.
    #[arg(long)]
    crash_schedule: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct GenCmd {
    /// Model family.
    #[arg(value_parser = ["muddy", "election"])]
    family: String,
    /// Number of agents.
    #[arg(short = 'n', long)]
    agents: usize,
    /// Program length in rounds (default: the number of agents).
    #[arg(long)]
    steps: Option<usize>,
    /// Muddy children observable wiring: spr (info[]) or clk (said[]).
    #[arg(long, value_parser = ["spr", "clk"], default_value = "spr")]
    variant: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCompareCmd {
    #[arg(long, value_enum)]
    view: ViewArg,
    #[arg(long, default_value_t = oracle::DEFAULT_STATE_BOUND)]
    oracle_bound: usize,
    #[arg(long)]
    reverse_agents: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::from(0),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            let internal = e
                .downcast_ref::<KbpError>()
                .is_some_and(|k| matches!(k, KbpError::Internal(_)));
            ExitCode::from(if internal { 2 } else { 1 })
        }
        Err(_) => {
            eprintln!("error: internal invariant breach (panic)");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(cmd) => {
            let inputs = cmd.inputs.clone();
            for_each_input(inputs, cmd.jobs, |path| cmd_synth(&cmd, path))
        }
        Command::Check(cmd) => cmd_check(&cmd),
        Command::Simulate(cmd) => cmd_simulate(&cmd),
        Command::Gen(cmd) => cmd_gen(&cmd),
        Command::OracleCompare(cmd) => {
            let inputs = cmd.inputs.clone();
            for_each_input(inputs, cmd.jobs, |path| cmd_oracle_compare(&cmd, path))
        }
    }
}

/// Runs `f` over the inputs, `jobs` at a time; independent runs own
/// independent managers.
fn for_each_input<F>(inputs: Vec<PathBuf>, jobs: usize, f: F) -> Result<()>
where
    F: Fn(&Path) -> Result<()> + Sync,
{
    if inputs.is_empty() {
        bail!("no input files given");
    }
    if jobs <= 1 || inputs.len() == 1 {
        for p in &inputs {
            f(p)?;
        }
        return Ok(());
    }
    let errors = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for chunk in inputs.chunks(inputs.len().div_ceil(jobs)) {
            let errors = &errors;
            let f = &f;
            scope.spawn(move || {
                for p in chunk {
                    if let Err(e) = f(p) {
                        errors.lock().unwrap().push(format!("{}: {e:#}", p.display()));
                    }
                }
            });
        }
    });
    let errors = errors.into_inner().unwrap();
    if errors.is_empty() {
        Ok(())
    } else {
        bail!("{}", errors.join("\n"));
    }
}

fn load_model(path: &Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let model = lang::parse(&text)?;
    lang::ensure_valid(&model)?;
    Ok(model)
}

fn require_synthesis_view(view: ViewArg) -> Result<View> {
    match View::from(view) {
        View::Obs => bail!(
            "the obs view is supported for simulation and knowledge-free checking only; \
             use clk or spr here"
        ),
        v => Ok(v),
    }
}

fn cmd_synth(cmd: &SynthCmd, path: &Path) -> Result<()> {
    let view = require_synthesis_view(cmd.view)?;
    let model = load_model(path)?;
    if model.kind() == ModelKind::Standard {
        eprintln!("{}: no knowledge conditions; emitting the input unchanged", path.display());
    }
    let opts =
        SynthOptions { order: kbp::sym::OrderOptions { reverse_agents: cmd.reverse_agents } };
    let result = synthesize(&model, view, opts)?;
    if result.vacuous {
        eprintln!(
            "{}: warning: the initial condition is unsatisfiable; all conditions set to false",
            path.display()
        );
    }
    for (k, count) in result.slice_counts().iter().enumerate() {
        let shown = count.map(|c| c.to_string()).unwrap_or_else(|| "> u128".into());
        println!("slice {k}: {shown} states");
    }
    let out = cmd.out.clone().unwrap_or_else(|| synth_out_path(path));
    let sidecar_path =
        cmd.sidecar.clone().unwrap_or_else(|| out.with_extension("sidecar"));
    let (document, sidecar) = emit(&result);
    std::fs::write(&out, document).with_context(|| format!("writing {}", out.display()))?;
    std::fs::write(&sidecar_path, sidecar)
        .with_context(|| format!("writing {}", sidecar_path.display()))?;
    println!(
        "{}: synthesized {} conditions -> {} (+ {})",
        path.display(),
        result.conditions.len(),
        out.display(),
        sidecar_path.display()
    );
    if cmd.oracle {
        oracle::compare_symbolic_explicit(&model, &result, view, cmd.oracle_bound)?;
        println!("{}: oracle agreement confirmed", path.display());
    }
    Ok(())
}

fn synth_out_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    input.with_file_name(format!("{stem}.synth.kbp"))
}

fn cmd_check(cmd: &CheckCmd) -> Result<()> {
    if cmd.sidecar.is_none() && cmd.formula.is_none() {
        bail!("nothing to check: give --sidecar and/or --formula");
    }
    let model = load_model(&cmd.input)?;
    let mut failed = false;

    if let Some(sidecar_path) = &cmd.sidecar {
        let view = require_synthesis_view(cmd.view)?;
        let text = std::fs::read_to_string(sidecar_path)
            .with_context(|| format!("cannot read {}", sidecar_path.display()))?;
        let transformed = match view {
            View::Spr => lang::history_transform(&model)?,
            _ => model.clone(),
        };
        let entries = parse_sidecar(&transformed, &text)?;
        let report = check_implementation(&model, &entries, view, Default::default())?;
        print!("{}", report.render());
        if !report.pass() {
            failed = true;
            if let Some(out) = &cmd.trace_out {
                let traces: Vec<String> = report
                    .entries
                    .iter()
                    .filter_map(|e| e.witness.as_ref())
                    .map(|w| export_trace(&report.model, &report.layout, &w.trace))
                    .collect();
                std::fs::write(out, traces.join("\n"))?;
            }
        }
    }

    if let Some(formula_text) = &cmd.formula {
        let spec = parse_spec_formula(&model, formula_text)?;
        let (prefix, phi) = strip_next_prefix(&spec);
        let depth = match (cmd.depth, prefix) {
            (Some(d), 0) => d,
            (None, k) => k,
            (Some(_), _) => {
                bail!("give the depth either as --depth or as an X^k prefix, not both")
            }
        };
        let outcome = model_check_x(&model, cmd.view.into(), depth, &phi, Default::default())?;
        if outcome.holds {
            println!("formula X^{depth} holds");
        } else {
            failed = true;
            println!("formula X^{depth} fails");
            if let Some(w) = &outcome.counterexample {
                let trace = export_trace(&outcome.model, &outcome.layout, &w.trace);
                match &cmd.trace_out {
                    Some(out) => std::fs::write(out, trace)?,
                    None => print!("{trace}"),
                }
            }
        }
    }

    if failed {
        bail!("check failed");
    }
    Ok(())
}

fn strip_next_prefix(e: &Expr) -> (usize, Expr) {
    let mut depth = 0;
    let mut cur = e;
    while let Expr::Next(inner) = cur {
        depth += 1;
        cur = inner;
    }
    (depth, cur.clone())
}

fn cmd_simulate(cmd: &SimulateCmd) -> Result<()> {
    let model = load_model(&cmd.input)?;
    if model.kind() != ModelKind::Standard {
        bail!("simulation needs a standard model; synthesize the input first");
    }
    let layout = Layout::of(&model);
    let steps = cmd.steps.unwrap_or_else(|| model.horizon());
    let inits = oracle::enumerate_init_states(&model, &layout, oracle::DEFAULT_STATE_BOUND)?;
    if inits.is_empty() {
        bail!("the initial condition is unsatisfiable");
    }
    let s0 = match &cmd.init {
        None => inits
            .get(cmd.init_index)
            .cloned()
            .ok_or_else(|| anyhow!("only {} initial states exist", inits.len()))?,
        Some(assignment) => {
            let constraints = parse_assignment(&model, assignment)?;
            let matches: Vec<_> = inits
                .into_iter()
                .filter(|s| constraints.iter().all(|(v, val)| layout.get(s, *v) == *val))
                .collect();
            match matches.len() {
                0 => bail!("no initial state matches the given assignment"),
                1 => matches.into_iter().next().unwrap(),
                k => bail!("{k} initial states match; pin more variables"),
            }
        }
    };
    let mut resolver: Box<dyn Resolver> = match (&cmd.crash_schedule, cmd.seed) {
        (Some(schedule), _) => Box::new(ScriptedEnv { script: parse_schedule(&model, schedule)? }),
        (None, Some(seed)) => Box::new(SeededRandom::new(seed)),
        (None, None) => Box::new(LowestIndex),
    };
    let trace = simulate(&model, &layout, &s0, steps, resolver.as_mut())?;
    let text = export_trace(&model, &layout, &trace);
    match &cmd.out {
        Some(out) => std::fs::write(out, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_assignment(model: &SystemModel, text: &str) -> Result<Vec<(usize, u64)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected var=value, got {part:?}"))?;
        let name = name.trim();
        let v = model
            .vars
            .iter()
            .position(|tv| tv.name == name)
            .ok_or_else(|| anyhow!("unknown variable {name}"))?;
        let value = value.trim();
        let val = match value {
            "true" => 1,
            "false" => 0,
            _ => match &model.vars[v].ty {
                lang::Ty::Enum { consts } => consts
                    .iter()
                    .position(|c| c == value)
                    .map(|i| i as u64)
                    .ok_or_else(|| anyhow!("unknown constant {value} for {name}"))?,
                _ => value.parse().with_context(|| format!("bad value for {name}"))?,
            },
        };
        out.push((v, val));
    }
    Ok(out)
}

/// `agent:step,...` — agent numbers are 1-based ring positions; branch i of
/// the transitions clause is agent i+1's crash choice, arm 1 crashes.
fn parse_schedule(model: &SystemModel, text: &str) -> Result<BTreeMap<(usize, usize), usize>> {
    let mut script = BTreeMap::new();
    for part in text.split(',') {
        let (agent, step) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("expected agent:step, got {part:?}"))?;
        let agent: usize = agent.trim().parse()?;
        let step: usize = step.trim().parse()?;
        if agent == 0 || agent > model.agents.len() {
            bail!("agent {agent} out of range 1..={}", model.agents.len());
        }
        script.insert((step, agent - 1), 1usize);
    }
    Ok(script)
}

fn cmd_gen(cmd: &GenCmd) -> Result<()> {
    let steps = cmd.steps.unwrap_or(cmd.agents);
    let text = match cmd.family.as_str() {
        "muddy" => {
            if cmd.agents < 2 {
                bail!("muddy children needs at least 2 agents");
            }
            let variant = match cmd.variant.as_str() {
                "clk" => kbp::corpus::MuddyVariant::Clk,
                _ => kbp::corpus::MuddyVariant::Spr,
            };
            kbp::corpus::muddy(cmd.agents, steps, variant)
        }
        "election" => {
            if !(2..=9).contains(&cmd.agents) {
                bail!("election supports 2..=9 agents");
            }
            kbp::corpus::election(cmd.agents, steps)
        }
        other => bail!("unknown family {other}"),
    };
    match &cmd.out {
        Some(out) => std::fs::write(out, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_oracle_compare(cmd: &OracleCompareCmd, path: &Path) -> Result<()> {
    let view = require_synthesis_view(cmd.view)?;
    let model = load_model(path)?;
    let opts =
        SynthOptions { order: kbp::sym::OrderOptions { reverse_agents: cmd.reverse_agents } };
    let result = synthesize(&model, view, opts)?;
    oracle::compare_symbolic_explicit(&model, &result, view, cmd.oracle_bound)?;
    println!(
        "{}: symbolic and explicit synthesis agree on {} conditions and {} slices",
        path.display(),
        result.conditions.len(),
        result.slices.len()
    );
    Ok(())
}
