use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netctrl::error::Error;
use netctrl::io::{
    disagreement_fixture, parse_transform_str, render_batch_report, render_check_report, render_system_with, run_check,
    gen_spec_value, MethodSelection, SystemFile, ToleranceOverrides,
};
use netctrl::matrix::Tolerances;
use netctrl::oracle::{generate, run_batch, GenSpec};

/// Controllability of networked LTI systems with heterogeneous nodes.
///
/// Exit codes: 0 analysis completed (the verdict is in the report),
/// 1 oracle found non-fragile disagreements, 2 input error,
/// 3 numerical failure.
#[derive(Parser)]
#[command(name = "netctrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one system file and print a JSON report.
    Check(CheckArgs),
    /// Generate random systems and cross-check the theorem against Kalman and PBH.
    Oracle(OracleArgs),
    /// Emit one random system file.
    Gen(GenArgs),
}

#[derive(Args)]
struct TolArgs {
    /// Relative rank cutoff.
    #[arg(long = "tol-rank", env = "NETCTRL_TOL_RANK")]
    rank: Option<f64>,
    /// Relative eigenvalue clustering radius.
    #[arg(long = "tol-eig", env = "NETCTRL_TOL_EIG")]
    eig: Option<f64>,
    /// Relative residual bound for verification checks.
    #[arg(long = "tol-res", env = "NETCTRL_TOL_RES")]
    res: Option<f64>,
}

impl TolArgs {
    fn overrides(&self) -> ToleranceOverrides {
        ToleranceOverrides {
            rank_rel: self.rank,
            eig_cluster_rel: self.eig,
            residual_rel: self.res,
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// System file (JSON).
    file: PathBuf,
    /// theorem, kalman, pbh or all.
    #[arg(long, default_value = "all")]
    method: String,
    /// Transform T (a JSON matrix, or an object with a "T" field).
    #[arg(long = "T")]
    transform: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-nodes", default_value_t = 4)]
    max_nodes: usize,
    #[arg(long = "node-dim", default_value_t = 3)]
    node_dim: usize,
    #[arg(long = "input-dim", default_value_t = 1)]
    input_dim: usize,
    /// Entries are integers in [-b, b].
    #[arg(long = "entry-bound", default_value_t = 2)]
    entry_bound: i64,
    /// All nodes share one matrix.
    #[arg(long)]
    homogeneous: bool,
    /// Plant a Jordan block of size >= 2 in C.
    #[arg(long = "plant-jordan")]
    plant_jordan: bool,
    /// Redraw C until it is diagonalizable.
    #[arg(long)]
    diagonalizable: bool,
    /// Probability that a node receives the input.
    #[arg(long = "control-density", default_value_t = 0.5)]
    control_density: f64,
}

impl GenFlags {
    fn spec(&self) -> GenSpec {
        GenSpec {
            seed: self.seed,
            max_nodes: self.max_nodes,
            node_dim: self.node_dim,
            input_dim: self.input_dim,
            entry_bound: self.entry_bound,
            homogeneous: self.homogeneous,
            ensure_diagonalizable_c: self.diagonalizable,
            plant_jordan: self.plant_jordan,
            control_density: self.control_density,
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    gen: GenFlags,
    #[command(flatten)]
    tol: TolArgs,
    /// Write each disagreement as a system file into this directory.
    #[arg(long = "dump-dir")]
    dump_dir: Option<PathBuf>,
    /// Write the batch report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    gen: GenFlags,
    /// Write the system file here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericalFailure { .. } => 3,
        _ => 2,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn check(args: &CheckArgs) -> Result<u8, Error> {
    let selection: MethodSelection = args.method.parse()?;
    let text = fs::read_to_string(&args.file)?;
    let t = match &args.transform {
        Some(path) => Some(parse_transform_str(&fs::read_to_string(path)?)?),
        None => None,
    };
    let report = run_check(&text, selection, t, &args.tol.overrides())?;
    emit(&render_check_report(&report), args.out.as_deref())?;
    Ok(0)
}

fn oracle(args: &OracleArgs) -> Result<u8, Error> {
    let spec = args.gen.spec();
    let tol = args.tol.overrides().apply(Tolerances::default())?;
    let batch = run_batch(&spec, args.trials, &tol)?;
    if let Some(dir) = &args.dump_dir {
        fs::create_dir_all(dir)?;
        for record in batch.records.iter().filter(|r| !r.agreement) {
            let trial = record.spec.as_ref().expect("batch records carry their spec");
            let sys = generate(trial)?;
            let path = dir.join(format!("disagreement-{:06}.json", record.id));
            fs::write(path, disagreement_fixture(&sys, record, &tol))?;
        }
    }
    emit(&render_batch_report(&batch, &tol), args.out.as_deref())?;
    let s = &batch.summary;
    eprintln!(
        "trials {}, disagreements {} ({} non-fragile), fragile rate {:.4}, theorem not applicable {}",
        s.trials,
        s.disagreements,
        s.hard_disagreements,
        s.fragile_rate(),
        s.fallbacks
    );
    Ok(if s.hard_disagreements == 0 { 0 } else { 1 })
}

fn gen(args: &GenArgs) -> Result<u8, Error> {
    let spec = args.gen.spec();
    let sys = generate(&spec)?;
    let file = SystemFile::new(sys);
    let text = render_system_with(&file, Some(serde_json::json!({"spec": gen_spec_value(&spec)})));
    emit(&text, args.out.as_deref())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => check(a),
        Command::Oracle(a) => oracle(a),
        Command::Gen(a) => gen(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("netctrl: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
