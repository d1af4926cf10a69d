//! The `irse` command line: argument grammar, output documents and exit
//! codes. `main.rs` only parses arguments and forwards to [`run`].
//!
//! Every JSON document carries `format_version: 1`. Exit codes are 0 on
//! success, 2 for input errors, 3 when a solver runs out of nodes and 4 when
//! an invariant check fails.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use irse_core::dynamics::{simulate_replicas, DynamicsConfig, InitialState};
use irse_core::game::{is_nash, loads, Allocation, LoadProfile};
use irse_core::generators::{lower_bound_family, paper_allocations, random_instance, Predictions, GENERATOR_NAME};
use irse_core::search::{run_search, run_search_timed, write_csv, SearchOptions, SearchSpace};
use irse_core::solvers::{self, SolverConfig, DEFAULT_NODE_LIMIT};
use irse_core::{Error, Instance, Potential, Ratio};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_EXHAUSTED: u8 = 3;
pub const EXIT_INVARIANT: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "irse",
    version,
    about = "Exact solvers and experiments for load-balancing games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimal makespan and the potential minimizers of an instance.
    Solve(SolveArgs),
    /// Worst makespan over potential minimizers divided by the optimum.
    Irse(SolveArgs),
    /// Emit an instance: a lower-bound family member or a random one.
    Gen(GenArgs),
    /// Solve every instance of a space and report the largest ratio.
    Search(SearchArgs),
    /// Simulate logit dynamics.
    Dyn(DynArgs),
    /// Rebuild a family member, solve it and compare with its predictions.
    VerifyFamily(VerifyArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Instance document, e.g. {"m": 2, "weights": [3, 2, 1]}.
    #[arg(long, value_name = "FILE")]
    pub instance: Option<PathBuf>,
    /// Read the instance document from standard input.
    #[arg(long)]
    pub stdin: bool,
}

#[derive(Args, Debug)]
pub struct Output {
    /// Write the document here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveArg {
    Makespan,
    Potential,
    Both,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: Source,
    /// Divide the weights by their gcd before solving.
    #[arg(long)]
    pub canonicalize: bool,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Both)]
    pub objective: ObjectiveArg,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub node_limit: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Family parameter; the instance has k+1 machines and 2k+2 jobs.
    #[arg(long, conflicts_with = "random")]
    pub k: Option<u64>,
    /// Draw a random instance instead, with --n, --m, --w-max and --seed.
    #[arg(long, requires_all = ["n", "m", "w_max"])]
    pub random: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub w_max: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1)]
    pub m_min: usize,
    #[arg(long)]
    pub m_max: usize,
    #[arg(long)]
    pub w_max: u64,
    /// Draw this many random instances instead of enumerating all; duplicates
    /// are removed.
    #[arg(long, value_name = "COUNT")]
    pub random: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; output does not depend on it.
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    /// Node limit per instance.
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub node_limit: u64,
    /// Report every instance, not only those with a ratio above 1.
    #[arg(long)]
    pub keep_all: bool,
    /// Add the elapsed wall time to the summary.
    #[arg(long)]
    pub timed: bool,
    /// Write the records as CSV to this file.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct DynArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub canonicalize: bool,
    /// Inverse temperature, as p/q, an integer or a decimal.
    #[arg(long)]
    pub beta: Ratio,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// "random" or comma-separated machine indices, one per job.
    #[arg(long, default_value = "random", value_parser = parse_initial)]
    pub initial: InitialState,
    /// Independent chains with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[arg(long, default_value_t = default_workers())]
    pub workers: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub k: u64,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub node_limit: u64,
    #[command(flatten)]
    pub output: Output,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_initial(s: &str) -> Result<InitialState, String> {
    if s == "random" {
        return Ok(InitialState::Random);
    }
    s.split(',')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad machine index {d:?}: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|v| InitialState::Given(Allocation::new(v)))
}

/// Output of `solve` and `irse`. Fields belonging to an objective that was
/// not requested are omitted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveDocument {
    pub format_version: u32,
    pub objective: ObjectiveArg,
    pub instance: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_makespan: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_witness: Option<Allocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_potential: Option<Potential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_po_makespan: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_po_witness: Option<Allocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub po_count_up_to_symmetry: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irse: Option<Ratio>,
    pub nodes_explored: u64,
}

/// Output of `gen`: an instance document with its provenance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenDocument {
    pub format_version: u32,
    pub m: usize,
    pub weights: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Predictions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationCheck {
    pub allocation: Allocation,
    pub loads: LoadProfile,
    pub makespan: u64,
    pub potential: Potential,
    pub nash: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observed {
    pub opt_makespan: u64,
    pub worst_po_makespan: u64,
    pub min_potential: Potential,
    pub irse: Ratio,
    pub nodes_explored: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

/// Output of `verify-family`. `observed` is absent when the solver ran out
/// of nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyDocument {
    pub format_version: u32,
    pub k: u64,
    pub scale: u64,
    pub instance: Instance,
    pub predictions: Predictions,
    pub observed: Option<Observed>,
    pub left: AllocationCheck,
    pub right: AllocationCheck,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub pass: bool,
}

/// A command that did not succeed. The message goes to standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceExhausted { .. } => EXIT_EXHAUSTED,
            Error::BoundViolation { .. } => EXIT_INVARIANT,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Runs one command, writing documents to `stdout` or the `--out` file.
/// Returns the exit code on success, which is nonzero only for a
/// `verify-family` mismatch.
pub fn run(cli: Cli, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve(args) => {
            let doc = solve_document(&args, stdin)?;
            emit(&to_json(&doc)?, args.output.out.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Irse(mut args) => {
            args.objective = ObjectiveArg::Both;
            let doc = solve_document(&args, stdin)?;
            let ratio = doc
                .irse
                .ok_or_else(|| Failure::input("irse is undefined without jobs"))?;
            write_all(stdout, &format!("{ratio}\n"))?;
            emit(&to_json(&doc)?, args.output.out.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Gen(args) => {
            let doc = gen_document(&args)?;
            emit(&to_json(&doc)?, args.output.out.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Search(args) => run_search_command(&args, stdout),
        Command::Dyn(args) => {
            let instance = read_instance(&args.source, args.canonicalize, stdin)?;
            let config = DynamicsConfig {
                beta: args.beta,
                steps: args.steps,
                seed: args.seed,
                initial: args.initial.clone(),
            };
            let stats = simulate_replicas(&instance, &config, args.replicas, args.workers)?;
            emit(&to_json(&stats)?, args.output.out.as_deref(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::VerifyFamily(args) => {
            let (doc, exhausted) = verify_family(args.k, args.node_limit)?;
            emit(&to_json(&doc)?, args.output.out.as_deref(), stdout)?;
            match exhausted {
                Some(e) => Err(e.into()),
                None if doc.pass => Ok(EXIT_OK),
                None => Ok(EXIT_INVARIANT),
            }
        }
    }
}

pub fn read_instance(source: &Source, canonicalize: bool, stdin: &mut dyn Read) -> Result<Instance, Failure> {
    let text = match &source.instance {
        Some(path) => {
            fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?
        }
        None => {
            let mut text = String::new();
            stdin
                .read_to_string(&mut text)
                .map_err(|e| Failure::input(format!("cannot read standard input: {e}")))?;
            text
        }
    };
    let instance: Instance =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("malformed instance document: {e}")))?;
    Ok(if canonicalize {
        instance.canonicalize()
    } else {
        instance
    })
}

pub fn solve_document(args: &SolveArgs, stdin: &mut dyn Read) -> Result<SolveDocument, Failure> {
    let instance = read_instance(&args.source, args.canonicalize, stdin)?;
    let config = SolverConfig {
        node_limit: args.node_limit,
    };
    let mut doc = SolveDocument {
        format_version: FORMAT_VERSION,
        objective: args.objective,
        instance: instance.clone(),
        opt_makespan: None,
        opt_witness: None,
        min_potential: None,
        worst_po_makespan: None,
        worst_po_witness: None,
        po_count_up_to_symmetry: None,
        irse: None,
        nodes_explored: 0,
    };
    match args.objective {
        ObjectiveArg::Makespan => {
            let opt = solvers::optimal_makespan_with(&instance, &config)?;
            doc.opt_makespan = Some(opt.value);
            doc.opt_witness = Some(opt.witness);
            doc.nodes_explored = opt.nodes_explored;
        }
        ObjectiveArg::Potential => {
            let level = solvers::potential_level_set(&instance, &config)?;
            doc.min_potential = Some(level.min_potential);
            doc.worst_po_makespan = Some(level.worst_makespan);
            doc.worst_po_witness = Some(level.worst_witness);
            doc.po_count_up_to_symmetry = Some(level.classes);
            doc.nodes_explored = level.nodes_explored;
        }
        ObjectiveArg::Both => {
            let report = solvers::solve(&instance, &config)?;
            doc.irse = report.irse().ok();
            doc.opt_makespan = Some(report.opt_makespan);
            doc.opt_witness = Some(report.opt_witness);
            doc.min_potential = Some(report.min_potential);
            doc.worst_po_makespan = Some(report.worst_po_makespan);
            doc.worst_po_witness = Some(report.worst_po_witness);
            doc.po_count_up_to_symmetry = Some(report.po_count_up_to_symmetry);
            doc.nodes_explored = report.nodes_explored;
        }
    }
    Ok(doc)
}

pub fn gen_document(args: &GenArgs) -> Result<GenDocument, Failure> {
    if args.random {
        let (n, m, w_max) = (args.n.unwrap_or(0), args.m.unwrap_or(0), args.w_max.unwrap_or(0));
        let instance = random_instance(n, m, w_max, args.seed)?;
        return Ok(GenDocument {
            format_version: FORMAT_VERSION,
            m: instance.m(),
            weights: instance.weights().to_vec(),
            k: None,
            scale: None,
            predictions: None,
            generator: Some(GENERATOR_NAME.to_string()),
            seed: Some(args.seed),
        });
    }
    let k = args.k.ok_or_else(|| Failure::input("gen needs --k or --random"))?;
    let family = lower_bound_family(k)?;
    Ok(GenDocument {
        format_version: FORMAT_VERSION,
        m: family.instance.m(),
        weights: family.instance.weights().to_vec(),
        k: Some(k),
        scale: Some(family.scale),
        predictions: Some(family.predictions),
        generator: None,
        seed: None,
    })
}

fn run_search_command(args: &SearchArgs, stdout: &mut dyn Write) -> Result<u8, Failure> {
    let n_range = (args.n_min, args.n_max);
    let m_range = (args.m_min, args.m_max);
    let space = match args.random {
        Some(count) => SearchSpace::random(n_range, m_range, args.w_max, count, args.seed),
        None => SearchSpace::exhaustive(n_range, m_range, args.w_max),
    };
    let options = SearchOptions {
        workers: args.workers,
        node_limit: args.node_limit,
        keep_all: args.keep_all,
    };
    let outcome = if args.timed {
        run_search_timed(&space, &options)?
    } else {
        run_search(&space, &options)?
    };
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_csv(&outcome.records, &mut buf)?;
        fs::write(path, buf).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    emit(&to_json(&outcome.summary)?, args.output.out.as_deref(), stdout)?;
    Ok(if outcome.summary.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_EXHAUSTED
    })
}

fn check_allocation(instance: &Instance, allocation: Allocation) -> Result<AllocationCheck, Failure> {
    let profile = loads(instance, &allocation)?;
    Ok(AllocationCheck {
        makespan: profile.makespan(),
        potential: profile.potential(),
        nash: is_nash(instance, &allocation)?,
        loads: profile,
        allocation,
    })
}

/// Builds the `verify-family` report. When the solver runs out of nodes the
/// partial report is returned together with the error.
pub fn verify_family(k: u64, node_limit: u64) -> Result<(VerifyDocument, Option<Error>), Failure> {
    let family = lower_bound_family(k)?;
    let instance = &family.instance;
    let predictions = &family.predictions;
    let (left, right) = paper_allocations(k)?;
    let left = check_allocation(instance, left)?;
    let right = check_allocation(instance, right)?;

    let mut checks = vec![
        Check {
            name: "constructed allocations have equal potential".into(),
            pass: left.potential == right.potential,
        },
        Check {
            name: "left allocation is a Nash equilibrium".into(),
            pass: left.nash,
        },
        Check {
            name: "right allocation is a Nash equilibrium".into(),
            pass: right.nash,
        },
        Check {
            name: "left makespan equals predicted worst".into(),
            pass: left.makespan == predictions.worst_po_makespan,
        },
        Check {
            name: "right makespan equals predicted optimum".into(),
            pass: right.makespan == predictions.opt_makespan,
        },
    ];

    let (observed, exhausted) = match solvers::solve(instance, &SolverConfig { node_limit }) {
        Ok(report) => {
            let irse = report.irse()?;
            checks.extend([
                Check {
                    name: "optimal makespan matches".into(),
                    pass: report.opt_makespan == predictions.opt_makespan,
                },
                Check {
                    name: "worst potential-optimal makespan matches".into(),
                    pass: report.worst_po_makespan == predictions.worst_po_makespan,
                },
                Check {
                    name: "ratio matches".into(),
                    pass: irse == predictions.irse,
                },
                Check {
                    name: "constructed allocations minimize the potential".into(),
                    pass: left.potential == report.min_potential,
                },
            ]);
            let observed = Observed {
                opt_makespan: report.opt_makespan,
                worst_po_makespan: report.worst_po_makespan,
                min_potential: report.min_potential,
                irse,
                nodes_explored: report.nodes_explored,
            };
            (Some(observed), None)
        }
        Err(e @ Error::ResourceExhausted { .. }) => (None, Some(e)),
        Err(e) => return Err(e.into()),
    };

    let note = (family.scale != 1).then(|| {
        format!(
            "weights multiplied by {} so that every weight is an integer; makespans scale with them, the ratio does not",
            family.scale
        )
    });
    let pass = exhausted.is_none() && checks.iter().all(|c| c.pass);
    let doc = VerifyDocument {
        format_version: FORMAT_VERSION,
        k,
        scale: family.scale,
        instance: instance.clone(),
        predictions: predictions.clone(),
        observed,
        left,
        right,
        checks,
        note,
        pass,
    };
    Ok((doc, exhausted))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: EXIT_INVARIANT,
        message: format!("cannot serialize output: {e}"),
    })?;
    text.push('\n');
    Ok(text)
}

fn write_all(stdout: &mut dyn Write, text: &str) -> Result<(), Failure> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::input(format!("cannot write output: {e}")))
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
        }
        None => write_all(stdout, text),
    }
}
