use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pabo_cli::bundle::check_bundle;
use pabo_cli::manifest::algorithm_by_name;
use pabo_cli::{cmd_compare, cmd_gen_case, cmd_run, cmd_validate, CliError, ErrorKind, ObjectiveSpec, Overrides, RunManifest};

/// Multi-objective hyperparameter search: PABO and its baselines.
#[derive(Parser)]
#[command(name = "pabo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write history.jsonl, front.csv and summary.json
    Run(Overrides),
    /// Run several algorithms on one space and objective
    Compare(CompareArgs),
    /// Check a space and objective, print the cardinality
    Validate(ValidateArgs),
    /// Write a case bundle (space, template, table, manifests, expected metrics)
    GenCase(GenCaseArgs),
    /// Rerun a case bundle's manifests against its expected metrics
    CheckCase(CheckCaseArgs),
}

#[derive(Args)]
struct CompareArgs {
    /// Manifest file; repeatable
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    /// Space for the --algo runs (defaults to the first manifest's)
    #[arg(long)]
    space: Option<PathBuf>,
    /// Objective for the --algo runs (defaults to the first manifest's)
    #[arg(long)]
    objective: Option<String>,
    /// Algorithm with default settings; repeatable
    #[arg(long = "algo")]
    algos: Vec<String>,
    /// Seed applied to every run
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args)]
struct GenCaseArgs {
    /// cs1-analogue, cs2-analogue or cs3-analogue
    #[arg(long)]
    case: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckCaseArgs {
    /// Bundle directory
    dir: PathBuf,
}

fn compare_manifests(args: &CompareArgs) -> Result<Vec<RunManifest>, CliError> {
    let mut manifests = args
        .configs
        .iter()
        .map(|p| RunManifest::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let objective = args.objective.as_deref().map(str::parse::<ObjectiveSpec>).transpose()?;
    for name in &args.algos {
        let space = args
            .space
            .clone()
            .or_else(|| manifests.first().map(|m| m.space.clone()))
            .ok_or_else(|| CliError::new(ErrorKind::Usage, "--algo needs --space or a --config"))?;
        let objective = objective
            .clone()
            .or_else(|| manifests.first().map(|m| m.objective.clone()))
            .ok_or_else(|| CliError::new(ErrorKind::Usage, "--algo needs --objective or a --config"))?;
        manifests.push(RunManifest::new(space, objective, algorithm_by_name(name)?));
    }
    if let Some(seed) = args.seed {
        for m in &mut manifests {
            m.algorithm = m.algorithm.clone().with_seed(seed);
        }
    }
    Ok(manifests)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(overrides) => {
            let manifest = overrides.manifest()?;
            let report = cmd_run(&manifest)?;
            let r = &report.result;
            println!(
                "{}: {} evaluations, stop {}, front {}, hypervolume {} -> {}",
                r.algorithm,
                r.evals_used,
                r.stop_reason,
                r.front.len(),
                report.hypervolume,
                report.out.display()
            );
            match &r.failure {
                Some(msg) => Err(CliError::new(ErrorKind::Run, format!("run aborted: {msg}"))),
                None => Ok(()),
            }
        }
        Command::Compare(args) => {
            let manifests = compare_manifests(&args)?;
            let report = cmd_compare(&manifests, &args.out)?;
            for row in &report.rows {
                let ratio = row.hypervolume_ratio.map(|x| format!(" ratio {x:.4}")).unwrap_or_default();
                println!(
                    "{}: {} evaluations, hypervolume {}{ratio}",
                    row.label, row.evals_used, row.hypervolume
                );
            }
            Ok(())
        }
        Command::Validate(args) => {
            let objective = args.objective.as_deref().map(str::parse::<ObjectiveSpec>).transpose()?;
            let cardinality = cmd_validate(&args.space, objective.as_ref())?;
            println!("{cardinality}");
            Ok(())
        }
        Command::GenCase(args) => {
            let bundle = cmd_gen_case(&args.case, args.seed, &args.out)?;
            println!(
                "{}: {} points, true front {} -> {}",
                bundle.expected.case,
                bundle.expected.cardinality,
                bundle.expected.true_front_size,
                args.out.display()
            );
            Ok(())
        }
        Command::CheckCase(args) => {
            let checks = check_bundle(&args.dir)?;
            let mut failures = Vec::new();
            for c in &checks {
                match &c.verdict {
                    Ok(()) => println!(
                        "{}: ok ({} evaluations, ratio {:.6})",
                        c.algorithm, c.evals_used, c.hypervolume_ratio
                    ),
                    Err(msg) => failures.push(msg.clone()),
                }
            }
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::new(ErrorKind::Mismatch, failures.join("; ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
