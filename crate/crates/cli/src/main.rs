//! `plroute`: solve, sample and evaluate production-logistics routing
//! instances from the command line.

mod artifact;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use artifact::{
    read_plan, read_scenarios, write_json, EvaluationArtifact, Mode, RunManifest, ScenarioArtifact,
    SolutionArtifact,
};
use plroute::evaluator::{evaluate_on_scenarios, out_of_sample, EvalConfig};
use plroute::formulation::{build_deterministic, build_stochastic};
use plroute::instance::{build_network, load_instance, PdpNetwork};
use plroute::scenarios::{generate_scenarios, ScenarioConfig, ScenarioSet};
use plroute::solver::{
    solve_alpha_zero_fast, solve_deterministic, solve_stochastic, SolveConfig, SolveStatus,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIME_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "plroute",
    version,
    about = "Pickup-and-delivery routing under uncertain travel times"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a minimum-distance plan.
    Solve(SolveArgs),
    /// Estimate a plan's window-failure frequency under fresh travel times.
    Evaluate(EvaluateArgs),
    /// Draw a travel-time scenario set and write it out.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Nominal travel times.
    Det,
    /// Scenario model with reliability --alpha.
    Sto,
    /// Robust plan from the supremum scenario (alpha must be 0).
    #[value(alias = "alpha-zero-fast")]
    StoFast,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Det => Mode::Det,
            ModeArg::Sto => Mode::Sto,
            ModeArg::StoFast => Mode::AlphaZeroFast,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Instance JSON file.
    #[arg(long)]
    instance: PathBuf,
    /// Worker threads for sampling and evaluation (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Where to write the JSON artifact.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "det")]
    mode: ModeArg,
    /// Probability mass of scenarios the plan may ignore.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Number of scenarios to sample (ignored with --scenario-file).
    #[arg(long, default_value_t = 30)]
    scenarios: usize,
    /// Scenario set written by `plroute sample`.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search budget in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    /// Also write the constraint system in LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Solution artifact written by `plroute solve`.
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replay this scenario set instead of sampling fresh trials.
    #[arg(long)]
    scenario_file: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 30)]
    scenarios: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// An error that maps to the usage/IO exit code.
struct Failure(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Sample(a) => run_sample(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn setup(common: &Common) -> Result<PdpNetwork> {
    if let Some(n) = common.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let path = &common.instance;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read instance {}", path.display()))?;
    let instance =
        load_instance(&text).with_context(|| format!("invalid instance {}", path.display()))?;
    Ok(build_network(&instance)?)
}

fn display(path: &Option<PathBuf>) -> Option<String> {
    path.as_ref().map(|p| p.display().to_string())
}

fn emit<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => Ok(()),
    }
}

fn run_solve(args: SolveArgs) -> Result<u8, Failure> {
    let network = setup(&args.common)?;
    let mode = Mode::from(args.mode);
    if !(0.0..1.0).contains(&args.alpha) {
        return Err(anyhow::anyhow!("--alpha must lie in [0, 1), got {}", args.alpha).into());
    }
    if mode == Mode::AlphaZeroFast && args.alpha != 0.0 {
        return Err(anyhow::anyhow!("--mode sto-fast requires --alpha 0").into());
    }
    if !args.time_limit.is_finite() || args.time_limit <= 0.0 {
        return Err(anyhow::anyhow!("--time-limit must be positive").into());
    }
    let config = SolveConfig {
        alpha: if mode == Mode::Det { 0.0 } else { args.alpha },
        time_limit: Duration::from_secs_f64(args.time_limit),
        seed: args.seed,
        ..SolveConfig::default()
    };

    let scenarios: Option<ScenarioSet> = match mode {
        Mode::Det => None,
        Mode::Sto | Mode::AlphaZeroFast => Some(match &args.scenario_file {
            Some(path) => read_scenarios(path)?,
            None => generate_scenarios(&network, &ScenarioConfig::new(args.seed, args.scenarios))?,
        }),
    };

    if let Some(path) = &args.export_lp {
        let system = match (&scenarios, mode) {
            (None, _) => build_deterministic(&network),
            (Some(set), Mode::AlphaZeroFast) => {
                build_stochastic(&network, &set.supremum_scenario(), 0.0)?
            }
            (Some(set), _) => build_stochastic(&network, set, config.alpha)?,
        };
        std::fs::write(path, system.to_lp())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }

    let started = Instant::now();
    let solution = match (&scenarios, mode) {
        (None, _) => solve_deterministic(&network, &config)?,
        (Some(set), Mode::AlphaZeroFast) => solve_alpha_zero_fast(&network, set, &config)?,
        (Some(set), _) => solve_stochastic(&network, set, &config)?,
    };
    let elapsed = started.elapsed();

    let manifest = RunManifest {
        mode: Some(mode),
        alpha: Some(config.alpha),
        scenarios: scenarios.as_ref().map(ScenarioSet::len),
        scenario_seed: match (&scenarios, &args.scenario_file) {
            (Some(set), Some(_)) => set.provenance().map(|p| p.config.seed),
            (Some(_), None) => Some(args.seed),
            (None, _) => None,
        },
        scenario_file: display(&args.scenario_file),
        export_lp: display(&args.export_lp),
        ..RunManifest::new("solve", &args.common.instance, &args.common.out)
    };
    emit(
        &args.common.out,
        &SolutionArtifact {
            manifest,
            solution: solution.record(&network),
        },
    )?;

    print!("{}", solution.table(&network));
    eprintln!(
        "solved in {:.3} s ({} search nodes)",
        elapsed.as_secs_f64(),
        solution.stats.nodes
    );
    if let Some(inf) = &solution.infeasibility {
        if let Some(task) = &inf.task {
            eprintln!("task {task} cannot be served on its own");
        }
    }
    Ok(match solution.status {
        SolveStatus::Optimal => 0,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::TimeLimitWithIncumbent | SolveStatus::TimeLimitNoIncumbent => EXIT_TIME_LIMIT,
    })
}

fn run_evaluate(args: EvaluateArgs) -> Result<u8, Failure> {
    if args.trials == 0 && args.scenario_file.is_none() {
        return Err(anyhow::anyhow!("--trials must be at least 1").into());
    }
    let network = setup(&args.common)?;
    let record = read_plan(&args.plan)?;
    if record.tasks != network.n() || record.vehicles != network.vehicles() {
        return Err(anyhow::anyhow!(
            "plan {} has {} tasks and {} vehicles, instance has {} and {}",
            args.plan.display(),
            record.tasks,
            record.vehicles,
            network.n(),
            network.vehicles()
        )
        .into());
    }
    if record.routes.is_empty() {
        return Err(anyhow::anyhow!(
            "plan {} holds no routes ({})",
            args.plan.display(),
            record.status.name()
        )
        .into());
    }
    let plan = record
        .plan(&network)
        .with_context(|| format!("plan {} does not fit the instance", args.plan.display()))?;
    let (report, manifest) = match &args.scenario_file {
        Some(path) => {
            let set = read_scenarios(path)?;
            let report = evaluate_on_scenarios(&plan, &network, &set)?;
            let manifest = RunManifest {
                scenarios: Some(set.len()),
                scenario_seed: set.provenance().map(|p| p.config.seed),
                scenario_file: display(&args.scenario_file),
                ..RunManifest::new("evaluate", &args.common.instance, &args.common.out)
            };
            (report, manifest)
        }
        None => {
            let report = out_of_sample(&plan, &network, &EvalConfig::new(args.seed, args.trials))?;
            let manifest = RunManifest {
                evaluation_seed: Some(args.seed),
                trials: Some(args.trials),
                ..RunManifest::new("evaluate", &args.common.instance, &args.common.out)
            };
            (report, manifest)
        }
    };
    let manifest = RunManifest {
        plan: Some(args.plan.display().to_string()),
        ..manifest
    };
    emit(
        &args.common.out,
        &EvaluationArtifact {
            manifest,
            report: report.clone(),
        },
    )?;
    print!("{}", report.table());
    Ok(0)
}

fn run_sample(args: SampleArgs) -> Result<u8, Failure> {
    let network = setup(&args.common)?;
    let set = generate_scenarios(&network, &ScenarioConfig::new(args.seed, args.scenarios))?;
    let manifest = RunManifest {
        scenarios: Some(set.len()),
        scenario_seed: Some(args.seed),
        ..RunManifest::new("sample", &args.common.instance, &args.common.out)
    };
    let artifact = ScenarioArtifact {
        manifest,
        scenarios: set,
    };
    match &args.common.out {
        Some(path) => write_json(path, &artifact)?,
        None => println!("{}", artifact::to_json(&artifact)?),
    }
    if args.common.out.is_some() {
        eprintln!(
            "wrote {} scenarios over {} nodes",
            artifact.scenarios.len(),
            artifact.scenarios.nodes()
        );
    }
    Ok(0)
}
