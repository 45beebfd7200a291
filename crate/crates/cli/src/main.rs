//! `aapp`: parse, run and verify aAPP scheduling policies.
//!
//! Exit codes: 0 when a query holds or a command succeeds, 1 when a query
//! does not hold, 2 when the state bound is exhausted, 3 on input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aapp_core::analysis::{
    self, classify, goal_search, Decision, GoalMode, QueryOptions, QueryReport, SearchOptions,
    SearchStats,
};
use aapp_core::encoder::{encode_with_diagnostics, to_script, validate, Diagnostic};
use aapp_core::parser::{
    parse_config, parse_goal_file, parse_goal_string, parse_script, print_script,
};
use aapp_core::pddl::{self, PddlGoal};
use aapp_core::semantics::{replay, schedule, ScheduleOutcome, SeededChooser};
use aapp_core::{Configuration, EncodedPolicy, FunctionId, GoalSpec, Registry, Trace, WorkerId};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "aapp", version, about = "Verification toolkit for aAPP scheduling policies")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Inputs {
    /// aAPP script.
    #[arg(long)]
    script: PathBuf,
    /// Platform configuration (workers, functions, initial allocations).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SearchFlags {
    /// Give up after storing this many distinct states.
    #[arg(long, env = "AAPP_MAX_STATES")]
    max_states: Option<u64>,
    /// Threads used to expand the search frontier.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Force single-threaded search.
    #[arg(long)]
    deterministic: bool,
}

impl SearchFlags {
    fn options(&self, mode: GoalMode) -> SearchOptions {
        SearchOptions {
            max_states: self.max_states,
            mode,
            threads: if self.deterministic { 1 } else { self.threads },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the syntax tree of a script.
    Parse { script: PathBuf },
    /// Print the encoded policy of a script.
    Encode { script: PathBuf },
    /// Print the polarity fragment of a script.
    Classify { script: PathBuf },
    /// Run the scheduler once for a function.
    Schedule {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        function: String,
        /// Seed for the `any` strategy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay a trace and print the final configuration.
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        /// JSON trace: a list of labels, or an object with a `witness` entry.
        #[arg(long)]
        trace: PathBuf,
        /// Only check capacity on `start`, not the scheduler's choice.
        #[arg(long)]
        lenient: bool,
    },
    /// Can a function ever run on a worker?
    Reach {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        function: String,
        #[arg(long)]
        worker: String,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Can two functions ever run together on a worker?
    Cooccur {
        #[command(flatten)]
        inputs: Inputs,
        /// Two function names, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        functions: Vec<String>,
        #[arg(long)]
        worker: String,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Search for a configuration meeting instance-count goals.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        /// Goals as `worker:function:count`, comma-separated.
        #[arg(long, conflicts_with = "goal_file", required_unless_present = "goal_file")]
        goal: Option<String>,
        /// Goal file in the configuration style.
        #[arg(long)]
        goal_file: Option<PathBuf>,
        #[command(flatten)]
        search: SearchFlags,
    },
    /// Write PDDL domain and problem files.
    EmitPddl {
        #[command(flatten)]
        inputs: Inputs,
        /// Reach query as `function:worker`.
        #[arg(long, group = "query")]
        reach: Option<String>,
        /// CoOccur query as `function:function:worker`.
        #[arg(long, group = "query")]
        cooccur: Option<String>,
        /// Goal file: a PDDL `(:goal …)` form, or goals in the configuration style.
        #[arg(long, group = "query")]
        goal_file: Option<PathBuf>,
        /// Files are written to `<prefix>-domain.pddl` and `<prefix>-problem.pddl`.
        #[arg(long)]
        out_prefix: PathBuf,
        /// Emit `>=` goals instead of `=`.
        #[arg(long)]
        goal_at_least: bool,
    },
}

/// Result of a command, mapped onto the process exit code.
enum Outcome {
    Success,
    DoesNotHold,
    BoundExhausted,
}

impl From<&Decision> for Outcome {
    fn from(d: &Decision) -> Self {
        match d {
            Decision::Holds { .. } => Outcome::Success,
            Decision::DoesNotHold => Outcome::DoesNotHold,
            Decision::BoundExhausted { .. } => Outcome::BoundExhausted,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::DoesNotHold) => ExitCode::from(1),
        Ok(Outcome::BoundExhausted) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_policy(path: &Path) -> Result<(EncodedPolicy, Vec<Diagnostic>)> {
    let ast = parse_script(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    Ok(encode_with_diagnostics(&ast))
}

/// Loads script and configuration, printing warnings and rejecting errors.
fn load(inputs: &Inputs) -> Result<(EncodedPolicy, Configuration, Registry)> {
    let (p, mut diags) = load_policy(&inputs.script)?;
    let (conf, reg) = parse_config(&read(&inputs.config)?)
        .with_context(|| format!("in {}", inputs.config.display()))?;
    diags.extend(validate(&p, &reg, &conf));
    let mut errors = Vec::new();
    for d in diags {
        if d.is_error() {
            errors.push(d.to_string());
        } else {
            eprintln!("warning: {d}");
        }
    }
    if !errors.is_empty() {
        bail!("{}", errors.join("\n"));
    }
    Ok((p, conf, reg))
}

fn function(name: &str) -> Result<FunctionId> {
    FunctionId::new(name).map_err(|e| anyhow!("{e}"))
}

fn worker(name: &str) -> Result<WorkerId> {
    WorkerId::new(name).map_err(|e| anyhow!("{e}"))
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn print_stats(stats: &SearchStats) {
    println!(
        "states visited: {}, frontier peak: {}",
        stats.states_visited, stats.frontier_peak
    );
}

fn print_decision(d: &Decision) {
    match d {
        Decision::Holds { witness } => {
            println!("HOLDS");
            if let Some(tr) = witness {
                println!("witness: {tr}");
            }
        }
        Decision::DoesNotHold => println!("DOES NOT HOLD"),
        Decision::BoundExhausted { states_visited } => {
            println!("BOUND EXHAUSTED after {states_visited} states")
        }
    }
}

fn report(format: Format, query: Value, r: &QueryReport) -> Result<Outcome> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(r)?;
            v["query"] = query;
            print_json(&v)?;
        }
        Format::Text => {
            print_decision(&r.decision);
            let backend = serde_json::to_value(r.backend)?;
            println!(
                "backend: {} ({})",
                backend.as_str().unwrap_or_default(),
                r.polarity
            );
            if let Some(stats) = &r.stats {
                print_stats(stats);
            }
            for n in &r.notes {
                println!("note: {n}");
            }
        }
    }
    Ok(Outcome::from(&r.decision))
}

/// Accepts a bare label list, `{"witness": [...]}`, or the JSON printed by
/// the query commands.
fn trace_from_json(v: Value) -> Result<Trace> {
    let labels = match v {
        Value::Array(_) => v,
        Value::Object(mut m) => {
            if let Some(w) = m.remove("witness") {
                w
            } else if let Some(Value::Object(mut d)) = m.remove("decision") {
                d.remove("witness")
                    .ok_or_else(|| anyhow!("the decision carries no witness"))?
            } else {
                bail!("expected a `witness` entry");
            }
        }
        _ => bail!("expected a list of labels"),
    };
    serde_json::from_value(labels).context("malformed trace")
}

fn parse_pair(text: &str, what: &str, n: usize) -> Result<Vec<String>> {
    let parts: Vec<String> = text.split(':').map(str::to_string).collect();
    if parts.len() != n || parts.iter().any(String::is_empty) {
        bail!("`{text}` is not of the form {what}");
    }
    Ok(parts)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let format = cli.format;
    match &cli.command {
        Command::Parse { script } => {
            let ast = parse_script(&read(script)?)
                .with_context(|| format!("in {}", script.display()))?;
            match format {
                Format::Json => print_json(&serde_json::to_value(&ast)?)?,
                Format::Text => print!("{}", print_script(&ast)),
            }
        }
        Command::Encode { script } => {
            let (p, diags) = load_policy(script)?;
            for d in &diags {
                eprintln!("warning: {d}");
            }
            match format {
                Format::Json => print_json(&serde_json::to_value(&p)?)?,
                Format::Text => print!("{}", print_script(&to_script(&p))),
            }
        }
        Command::Classify { script } => {
            let (p, _) = load_policy(script)?;
            let polarity = classify(&p);
            match format {
                Format::Json => print_json(&json!({ "polarity": polarity }))?,
                Format::Text => println!("{polarity}"),
            }
        }
        Command::Schedule {
            inputs,
            function: f,
            seed,
        } => {
            let (p, conf, reg) = load(inputs)?;
            let f = function(f)?;
            let mut chooser = SeededChooser::new(*seed);
            let out = schedule(&f, &conf, &p, &reg, &mut chooser)?;
            match (format, &out) {
                (Format::Json, ScheduleOutcome::Chosen { block_index, worker }) => print_json(
                    &json!({ "function": f, "worker": worker, "block": block_index }),
                )?,
                (Format::Json, ScheduleOutcome::Failed) => {
                    print_json(&json!({ "function": f, "worker": null }))?
                }
                (Format::Text, ScheduleOutcome::Chosen { worker, .. }) => println!("{worker}"),
                (Format::Text, ScheduleOutcome::Failed) => println!("FAIL"),
            }
        }
        Command::Simulate {
            inputs,
            trace,
            lenient,
        } => {
            let (p, conf, reg) = load(inputs)?;
            let value: Value = serde_json::from_str(&read(trace)?)
                .with_context(|| format!("in {}", trace.display()))?;
            let trace = trace_from_json(value)?;
            let end = replay(&conf, &trace, &p, &reg, !lenient)?;
            match format {
                Format::Json => print_json(&json!({
                    "steps": trace.len(),
                    "configuration": end,
                }))?,
                Format::Text => println!("{end}"),
            }
        }
        Command::Reach {
            inputs,
            function: f,
            worker: w,
            search,
        } => {
            let (p, conf, reg) = load(inputs)?;
            let (f, w) = (function(f)?, worker(w)?);
            let opts = QueryOptions {
                search: search.options(GoalMode::AtLeast),
                want_witness: true,
            };
            let r = analysis::reach(&p, &reg, &conf, &f, &w, &opts)?;
            return report(format, json!({ "reach": { "function": f, "worker": w } }), &r);
        }
        Command::Cooccur {
            inputs,
            functions,
            worker: w,
            search,
        } => {
            let (p, conf, reg) = load(inputs)?;
            let [f, g] = functions.as_slice() else {
                bail!("--functions takes exactly two names");
            };
            let (f, g, w) = (function(f)?, function(g)?, worker(w)?);
            let opts = QueryOptions {
                search: search.options(GoalMode::AtLeast),
                want_witness: true,
            };
            let r = analysis::cooccur(&p, &reg, &conf, &f, &g, &w, &opts)?;
            return report(
                format,
                json!({ "cooccur": { "functions": [f, g], "worker": w } }),
                &r,
            );
        }
        Command::Check {
            inputs,
            goal,
            goal_file,
            search,
        } => {
            let (p, conf, reg) = load(inputs)?;
            let goal: GoalSpec = match (goal, goal_file) {
                (Some(text), _) => parse_goal_string(text)?,
                (None, Some(path)) => {
                    parse_goal_file(&read(path)?).with_context(|| format!("in {}", path.display()))?
                }
                (None, None) => bail!("a goal is required"),
            };
            let (decision, stats) =
                goal_search(&p, &reg, &conf, &goal, &search.options(GoalMode::AtLeast))?;
            match format {
                Format::Json => print_json(&json!({
                    "query": { "goal": goal },
                    "decision": decision,
                    "stats": stats,
                }))?,
                Format::Text => {
                    print_decision(&decision);
                    print_stats(&stats);
                }
            }
            return Ok(Outcome::from(&decision));
        }
        Command::EmitPddl {
            inputs,
            reach,
            cooccur,
            goal_file,
            out_prefix,
            goal_at_least,
        } => {
            let (p, conf, reg) = load(inputs)?;
            let mode = if *goal_at_least {
                GoalMode::AtLeast
            } else {
                GoalMode::Exactly
            };
            let raw;
            let spec;
            let goal = match (reach, cooccur, goal_file) {
                (Some(q), _, _) => {
                    let parts = parse_pair(q, "function:worker", 2)?;
                    spec = GoalSpec::reach(function(&parts[0])?, worker(&parts[1])?);
                    PddlGoal::Spec(&spec)
                }
                (_, Some(q), _) => {
                    let parts = parse_pair(q, "function:function:worker", 3)?;
                    spec = GoalSpec::cooccur(
                        function(&parts[0])?,
                        function(&parts[1])?,
                        worker(&parts[2])?,
                    )?;
                    PddlGoal::Spec(&spec)
                }
                (_, _, Some(path)) => {
                    raw = read(path)?;
                    if raw.trim_start().starts_with('(') {
                        PddlGoal::Raw(&raw)
                    } else {
                        spec = parse_goal_file(&raw)
                            .with_context(|| format!("in {}", path.display()))?;
                        PddlGoal::Spec(&spec)
                    }
                }
                _ => bail!("one of --reach, --cooccur or --goal-file is required"),
            };
            let bundle = pddl::emit(&p, &reg, &conf, goal, mode)?;
            let prefix = out_prefix.display().to_string();
            let domain_path = PathBuf::from(format!("{prefix}-domain.pddl"));
            let problem_path = PathBuf::from(format!("{prefix}-problem.pddl"));
            fs::write(&domain_path, &bundle.domain)
                .with_context(|| format!("cannot write {}", domain_path.display()))?;
            fs::write(&problem_path, &bundle.problem)
                .with_context(|| format!("cannot write {}", problem_path.display()))?;
            match format {
                Format::Json => print_json(&json!({
                    "domain": domain_path,
                    "problem": problem_path,
                }))?,
                Format::Text => {
                    println!("{}", domain_path.display());
                    println!("{}", problem_path.display());
                }
            }
        }
    }
    Ok(Outcome::Success)
}
