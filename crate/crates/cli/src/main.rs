use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scuc_core::backend::LpSolverKind;
use scuc_core::bb::write_node_log;
use scuc_core::driver::{run, sgm10, DriverConfig, RunOutcome, RunStatus};
use scuc_core::hprlp::write_iteration_log;
use scuc_core::instance::ScucInstance;
use scuc_core::Precision;

const EXIT_LIMIT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "scuc", version, about = "Security-constrained unit commitment by successive fixing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        opts: SolverArgs,
        /// Write the run report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the root relaxation's iteration log as CSV.
        #[arg(long)]
        iter_log: Option<PathBuf>,
        /// Write the node log of the final branch-and-bound as CSV.
        #[arg(long)]
        node_log: Option<PathBuf>,
    },
    /// Solve every `*.json` instance in a directory and print a CSV table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolverArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Fp32,
    Fp64,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpSolverArg {
    Hpr,
    SimplexOracle,
}

#[derive(Args)]
struct SolverArgs {
    /// Confidence threshold for stage 1.
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Confidence threshold for stage 2 (defaults to --tau).
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long, default_value_t = 2)]
    rounds1: usize,
    #[arg(long, default_value_t = 4)]
    rounds2: usize,
    /// Relative gap of stage 1.
    #[arg(long, default_value_t = 0.01)]
    gap1: f64,
    /// Relative gap of stage 2.
    #[arg(long, default_value_t = 0.001)]
    gap2: f64,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Fp64)]
    precision: PrecisionArg,
    #[arg(long)]
    no_instance_scaling: bool,
    #[arg(long)]
    no_fixing: bool,
    #[arg(long, value_enum, default_value_t = LpSolverArg::Hpr)]
    lp_solver: LpSolverArg,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference objective for the relative gap metric.
    #[arg(long)]
    reference_objective: Option<f64>,
    /// Reference time in seconds for the time ratio metric.
    #[arg(long)]
    reference_time: Option<f64>,
}

impl SolverArgs {
    fn config(&self, iteration_log: bool) -> DriverConfig {
        DriverConfig {
            tau: self.tau,
            tau2: self.tau2,
            rounds1: self.rounds1,
            rounds2: self.rounds2,
            gap1: self.gap1,
            gap2: self.gap2,
            precision: match self.precision {
                PrecisionArg::Fp32 => Precision::Fp32,
                PrecisionArg::Fp64 => Precision::Fp64,
            },
            instance_scaling: !self.no_instance_scaling,
            fixing: !self.no_fixing,
            lp_solver: match self.lp_solver {
                LpSolverArg::Hpr => LpSolverKind::Hpr,
                LpSolverArg::SimplexOracle => LpSolverKind::SimplexOracle,
            },
            time_limit: self.time_limit,
            seed: self.seed,
            iteration_log,
            reference_objective: self.reference_objective,
            reference_time: self.reference_time,
            ..DriverConfig::default()
        }
    }
}

fn status_code(status: RunStatus) -> u8 {
    match status {
        RunStatus::Solved => 0,
        RunStatus::TimeLimit | RunStatus::NodeLimit => EXIT_LIMIT,
        RunStatus::Infeasible => EXIT_INFEASIBLE,
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn solve_one(path: &Path, config: &DriverConfig) -> Result<RunOutcome, String> {
    let inst = ScucInstance::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    run(&inst, &instance_name(path), config).map_err(|e| format!("{}: {e}", path.display()))
}

fn solve(
    instance: &Path,
    opts: &SolverArgs,
    report: Option<&Path>,
    iter_log: Option<&Path>,
    node_log: Option<&Path>,
) -> Result<u8> {
    let out = match solve_one(instance, &opts.config(iter_log.is_some())) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_INPUT);
        }
    };
    let rep = &out.report;
    println!("status     {:?}", rep.status);
    match rep.objective {
        Some(obj) => println!("objective  {obj:.6}"),
        None => println!("objective  none"),
    }
    println!("bound      {:.6}", rep.bound);
    println!("gap        {:.3e}", rep.gap);
    println!("stage      {}", rep.stage);
    println!("passes     {}", rep.passes.len());
    println!("monitored  {}", rep.monitored.len());
    println!("fixed      {}", rep.total_fixed);
    println!("nodes      {}", rep.total_nodes);
    println!("time       {:.3}s (lp {:.3}s)", rep.timings.total, rep.timings.lp);
    if let Some(g) = rep.metrics.rel_gap_percent {
        println!("rel gap    {g:.4}%");
    }

    if let Some(path) = report {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, rep)?;
        w.flush()?;
    }
    if let Some(path) = iter_log {
        let mut w = create(path)?;
        match &out.root_lp {
            Some(lp) => write_iteration_log(lp, &mut w)?,
            None => log::warn!("no root relaxation was solved; iteration log is empty"),
        }
        w.flush()?;
    }
    if let Some(path) = node_log {
        let mut w = create(path)?;
        match &out.last_bb {
            Some(bb) => write_node_log(bb, &mut w)?,
            None => log::warn!("no branch-and-bound was run; node log is empty"),
        }
        w.flush()?;
    }
    Ok(status_code(rep.status))
}

fn bench(dir: &Path, opts: &SolverArgs, out: Option<&Path>) -> Result<u8> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut csv = csv::Writer::from_writer(sink);
    csv.write_record([
        "instance", "status", "objective", "bound", "gap", "total_s", "lp_s", "other_s", "passes", "monitored",
        "fixed", "nodes", "rel_gap_percent",
    ])?;
    let config = opts.config(false);
    let mut times = Vec::new();
    let mut code = 0u8;
    for path in &paths {
        let name = instance_name(path);
        match solve_one(path, &config) {
            Ok(o) => {
                let r = &o.report;
                let status = serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string();
                let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
                csv.write_record([
                    name,
                    status,
                    opt(r.objective),
                    r.bound.to_string(),
                    r.gap.to_string(),
                    r.timings.total.to_string(),
                    r.timings.lp.to_string(),
                    r.timings.other.to_string(),
                    r.passes.len().to_string(),
                    r.monitored.len().to_string(),
                    r.total_fixed.to_string(),
                    r.total_nodes.to_string(),
                    opt(r.metrics.rel_gap_percent),
                ])?;
                times.push(r.timings.total);
                code = code.max(status_code(r.status));
            }
            Err(e) => {
                eprintln!("error: {e}");
                csv.write_record([name.as_str(), "input-error", "", "", "", "", "", "", "", "", "", "", ""])?;
                code = EXIT_INPUT;
            }
        }
    }
    csv.flush()?;
    match sgm10(&times) {
        Ok(s) => eprintln!("instances {}  solved-or-stopped {}  sgm10 {s:.3}s", paths.len(), times.len()),
        Err(_) => eprintln!("instances {}  no runs completed", paths.len()),
    }
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { instance, opts, report, iter_log, node_log } => {
            solve(instance, opts, report.as_deref(), iter_log.as_deref(), node_log.as_deref())
        }
        Command::Bench { dir, opts, out } => bench(dir, opts, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
