//! `csid` — causal effect identification with context-specific edge labels.
//!
//! Exit codes: 0 success, 1 input error, 2 non-identifiable,
//! 3 positivity/evaluation error.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use csid_core::bench::{run_benchmark, write_plots, BenchConfig};
use csid_core::csi::{identify_csi, learn_labels};
use csid_core::dist::{evaluate, JointTable};
use csid_core::error::Error;
use csid_core::estimand::{parse_sexpr, render, Estimand, RenderStyle};
use csid_core::graph::{CausalGraph, Context, VarId};
use csid_core::labels::{ControlSpec, LabelSet};
use num_traits::ToPrimitive;

#[derive(Parser)]
#[command(
    name = "csid",
    about = "Causal effect identification from labeled causal graphs",
    version
)]
struct Cli {
    /// Worker threads for per-context identification and benchmark
    /// instances (overrides CSIID_THREADS; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Sexpr,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide identifiability of P_t(S) and print the estimand.
    Identify(IdentifyArgs),
    /// Learn a label set from an exact observational distribution.
    Learn(LearnArgs),
    /// Evaluate an estimand file against a distribution file.
    Eval(EvalArgs),
    /// Run the random-graph benchmark and emit CSV (and optional plots).
    Bench(BenchArgs),
}

#[derive(Args)]
struct IdentifyArgs {
    /// Graph file (`var`/`edge` lines).
    graph: PathBuf,
    /// Label file (`control`/`label` lines); omit for no side information.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Treatment variables, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    treatment: Vec<String>,
    /// Outcome variables, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    outcome: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct LearnArgs {
    graph: PathBuf,
    /// Joint-table file over the observed variables.
    dist: PathBuf,
    /// Output label file.
    #[arg(long)]
    out: PathBuf,
    /// Control variables; defaults to every observed root.
    #[arg(long, value_delimiter = ',')]
    controls: Option<Vec<String>>,
    /// Accept joints with zero cells (skipping degenerate conditionals).
    #[arg(long)]
    allow_degenerate: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimand file in the s-expression grammar.
    estimand: PathBuf,
    /// Joint-table file naming every variable the estimand mentions.
    dist: PathBuf,
    /// Treatment assignments `X=1,Z=0`.
    #[arg(long, value_delimiter = ',')]
    treatment_values: Vec<String>,
    /// Outcome assignments `Y=1`.
    #[arg(long, value_delimiter = ',')]
    outcome_values: Vec<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 30)]
    n_min: usize,
    #[arg(long, default_value_t = 100)]
    n_max: usize,
    #[arg(long, default_value_t = 10)]
    n_step: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_csv: PathBuf,
    /// Drop the wall-clock columns; the remaining CSV is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Directory for the two SVG panels.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ZeroMass(_) => 3,
        _ => 1,
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn resolve_set(g: &CausalGraph, names: &[String]) -> Result<BTreeSet<VarId>, Error> {
    names
        .iter()
        .map(|n| g.universe().lookup(n.trim()))
        .collect()
}

fn parse_assignments(
    uni: &csid_core::graph::Universe,
    specs: &[String],
) -> Result<Context, Error> {
    let mut ctx = Context::new();
    for spec in specs {
        let spec = spec.trim();
        if spec.is_empty() {
            continue;
        }
        let (name, value) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("expected `<name>=<value>`, found `{spec}`"))
        })?;
        let v = uni.lookup(name)?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::Config(format!("invalid value in `{spec}`")))?;
        if value >= uni.domain_size(v) {
            return Err(Error::Config(format!(
                "value {value} out of domain for `{name}`"
            )));
        }
        ctx.insert(v, value);
    }
    Ok(ctx)
}

fn cmd_identify(args: &IdentifyArgs) -> Result<u8, Error> {
    let graph = CausalGraph::parse(&read(&args.graph)?)?;
    let (c_spec, labels) = match &args.labels {
        Some(path) => LabelSet::parse(&read(path)?, &graph)?,
        None => {
            let c_spec = ControlSpec::empty();
            let labels = LabelSet::empty(&c_spec, graph.universe());
            (c_spec, labels)
        }
    };
    let treatment = resolve_set(&graph, &args.treatment)?;
    let outcome = resolve_set(&graph, &args.outcome)?;
    let estimand = identify_csi(&graph, &labels, &c_spec, &treatment, &outcome)?;
    let style = match args.format {
        Format::Text => RenderStyle::Text,
        Format::Sexpr => RenderStyle::Sexpr,
    };
    match &estimand {
        Estimand::NonIdentifiable { witness } => {
            println!("NON-IDENTIFIABLE: {witness}");
            Ok(2)
        }
        _ => {
            println!("{}", render(&estimand, graph.universe(), style));
            Ok(0)
        }
    }
}

fn cmd_learn(args: &LearnArgs) -> Result<u8, Error> {
    let graph = CausalGraph::parse(&read(&args.graph)?)?;
    let joint = JointTable::parse(&read(&args.dist)?, Some(&graph))?;
    let controls = match &args.controls {
        Some(names) => resolve_set(&graph, names)?.into_iter().collect(),
        None => graph.observed_roots().into_iter().collect(),
    };
    let c_spec = ControlSpec::new(&graph, controls)?;
    if args.allow_degenerate && !joint.strictly_positive() {
        eprintln!("warning: joint has zero cells; degenerate conditionals are skipped");
    }
    let labels = learn_labels(&graph, &joint, &c_spec, args.allow_degenerate)?;
    std::fs::write(&args.out, labels.to_file_string(&graph, &c_spec))
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(0)
}

fn cmd_eval(args: &EvalArgs) -> Result<u8, Error> {
    let joint = JointTable::parse(&read(&args.dist)?, None)?;
    let estimand = parse_sexpr(&read(&args.estimand)?, joint.universe())?;
    let mut env = parse_assignments(joint.universe(), &args.treatment_values)?;
    for (v, x) in parse_assignments(joint.universe(), &args.outcome_values)?.iter() {
        env.insert(v, x);
    }
    let value = evaluate(&estimand, &joint, &env)?;
    println!("{value}");
    println!("{:.10}", value.to_f64().unwrap_or(f64::NAN));
    Ok(0)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Error> {
    let cfg = BenchConfig::from_range(args.n_min, args.n_max, args.n_step, args.reps, args.seed);
    let report = run_benchmark(&cfg)?;
    std::fs::write(&args.out_csv, report.to_csv(!args.no_timing))
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", args.out_csv.display())))?;
    if let Some(dir) = &args.plot_dir {
        write_plots(&report, dir)
            .map_err(|e| Error::Config(format!("cannot write plots: {e}")))?;
    }
    eprintln!(
        "monotonicity violations (baseline identified, labeled run did not): {}",
        report.monotonicity_violations
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 by default, which is reserved for non-identifiable
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };

    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("CSIID_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let result = match &cli.cmd {
        Cmd::Identify(args) => cmd_identify(args),
        Cmd::Learn(args) => cmd_learn(args),
        Cmd::Eval(args) => cmd_eval(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
