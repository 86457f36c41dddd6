use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use mortar_contact::scenario::{
    builtin_names, convergence_csv, convergence_study, dump_mortar, run_scenario, ConvergenceSpec, Scenario,
    ScenarioError,
};

const EXIT_VALIDATION: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_UNEXPECTED: u8 = 3;

#[derive(Parser)]
#[command(version, about = "2D plane-strain explicit contact solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        scenario: String,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy-norm convergence study against a finer reference run.
    Convergence {
        family: String,
        /// Study meshes as NXxNY, e.g. 13x3,26x6,52x12.
        #[arg(long, value_delimiter = ',', default_value = "13x3,26x6,52x12")]
        h_list: Vec<String>,
        /// Reference mesh as NXxNY.
        #[arg(long = "ref", default_value = "208x48")]
        reference: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    ListBuiltins,
    /// Print the mortar operators of a scenario after N steps.
    DumpMortar {
        scenario: String,
        #[arg(long, default_value_t = 0)]
        step: usize,
    },
}

fn parse_mesh(s: &str) -> Result<(usize, usize), ScenarioError> {
    let bad = || ScenarioError::Invalid(vec![format!("mesh size `{s}` is not of the form NXxNY")]);
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn exit_for(e: &ScenarioError) -> ExitCode {
    error!("{e}");
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_SOLVER })
}

fn run(scenario: &str, out: Option<PathBuf>) -> ExitCode {
    let sc = match Scenario::resolve(scenario) {
        Ok(sc) => sc,
        Err(e) => return exit_for(&e),
    };
    let dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&sc.name));
    match run_scenario(&sc, Some(&dir)) {
        Ok(outcome) => {
            print!("{}", outcome.summary());
            if sc.expected_failure && outcome.max_master_penetration <= 1e-5 {
                eprintln!("error: `{}` was expected to diverge or show master-node penetration", sc.name);
                return ExitCode::from(EXIT_UNEXPECTED);
            }
            ExitCode::SUCCESS
        }
        Err(e) if sc.expected_failure && !e.is_validation() => {
            println!("expected failure: {e}");
            ExitCode::SUCCESS
        }
        Err(e) => exit_for(&e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { scenario, out } => run(&scenario, out),
        Command::Convergence { family, h_list, reference, out } => {
            let spec = (|| {
                Ok::<_, ScenarioError>(ConvergenceSpec {
                    levels: h_list.iter().map(|s| parse_mesh(s)).collect::<Result<_, _>>()?,
                    reference: parse_mesh(&reference)?,
                    ..ConvergenceSpec::default()
                })
            })();
            let rows = match spec.and_then(|spec| convergence_study(&family, &spec)) {
                Ok(rows) => rows,
                Err(e) => return exit_for(&e),
            };
            let csv = convergence_csv(&rows);
            print!("{csv}");
            if let Some(dir) = out {
                if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("convergence.csv"), &csv)) {
                    eprintln!("error: {}: {e}", dir.display());
                    return ExitCode::from(EXIT_SOLVER);
                }
            }
            ExitCode::SUCCESS
        }
        Command::ListBuiltins => {
            for n in builtin_names() {
                println!("{n}");
            }
            ExitCode::SUCCESS
        }
        Command::DumpMortar { scenario, step } => match Scenario::resolve(&scenario).and_then(|sc| dump_mortar(&sc, step)) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
    }
}
