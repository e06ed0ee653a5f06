use std::path::PathBuf;

use clap::{Parser, Subcommand};
use flowlab_cli::config::{require_closed, RunConfig, StructureSpec};
use flowlab_cli::{acceptance, experiments, CliError};
use flowlab_core::logic;
use flowlab_core::provability::{
    extension_hierarchy, fixed_point_lambda, gl_decide, lob_check, parse_modal_formula, Verdict,
};

/// Exit codes: 0 success, 1 a check or criterion failed, 2 usage or
/// configuration error. Clap's own parse failures also exit 2.
#[derive(Parser)]
#[command(name = "flowlab", version, about = "experiment runner for state-flow analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config file.
    Run { config: PathBuf },
    /// Run the full verification suite at its pinned scales.
    VerifyAll {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the registered experiments.
    List,
    /// Provability-logic utilities.
    Gl {
        #[command(subcommand)]
        command: GlCommand,
    },
    /// Trajectory-logic utilities.
    Logic {
        #[command(subcommand)]
        command: LogicCommand,
    },
}

#[derive(Subcommand)]
enum GlCommand {
    /// Decide a formula; invalid formulas print their countermodel.
    Decide { formula: String },
    /// Check the recursion-scheme instance built from a formula.
    Lob { formula: String },
    /// Print the fixed-point certificates.
    Lambda,
    /// Certify the consistency-extension hierarchy.
    Hierarchy {
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum LogicCommand {
    /// Evaluate a closed formula in a structure loaded from JSON.
    Eval {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        formula: String,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config } => {
            let config = RunConfig::load(&config)?;
            let out_dir = config.resolve_out_dir();
            let report = experiments::run_experiment(&config)?;
            for check in &report.checks {
                println!(
                    "{} {}  value {:e}  bound {:e}",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.value,
                    check.bound
                );
            }
            println!(
                "{}: {} in {:.2}s, report {}",
                report.experiment,
                if report.passed { "all checks passed" } else { "checks FAILED" },
                report.duration_seconds,
                out_dir.join("report.json").display()
            );
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::VerifyAll { seed } => {
            let reports = acceptance::run_all(seed)?;
            for report in &reports {
                println!("{}", report.line());
                for check in report.checks.iter().filter(|c| !c.pass) {
                    println!(
                        "    failed: {}  value {:e}  bound {:e}",
                        check.name, check.value, check.bound
                    );
                }
            }
            let passed = reports.iter().filter(|r| r.pass).count();
            println!("{passed}/{} criteria passed", reports.len());
            Ok(if passed == reports.len() { 0 } else { 1 })
        }
        Command::List => {
            for experiment in experiments::registry() {
                println!("{:12} {}", experiment.name(), experiment.summary());
            }
            Ok(0)
        }
        Command::Gl { command } => gl_command(command),
        Command::Logic { command } => logic_command(command),
    }
}

fn gl_command(command: GlCommand) -> Result<i32, CliError> {
    match command {
        GlCommand::Decide { formula } => {
            let parsed = parse_modal_formula(&formula)?;
            match gl_decide(&parsed)? {
                Verdict::Valid => println!("valid: {parsed}"),
                verdict @ Verdict::Invalid { .. } => {
                    println!("invalid: {parsed}");
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&verdict).expect("verdicts serialize")
                    );
                }
            }
            Ok(0)
        }
        GlCommand::Lob { formula } => {
            let phi = parse_modal_formula(&formula)?;
            let valid = lob_check(&phi)?;
            println!(
                "recursion instance for {phi}: {}",
                if valid { "valid" } else { "INVALID" }
            );
            Ok(if valid { 0 } else { 1 })
        }
        GlCommand::Lambda => {
            let (lambda, certificates) = fixed_point_lambda()?;
            println!("lambda = {lambda}");
            println!(
                "{}",
                serde_json::to_string_pretty(&certificates).expect("certificates serialize")
            );
            Ok(if certificates.iter().all(|c| c.valid) { 0 } else { 1 })
        }
        GlCommand::Hierarchy { depth } => {
            let report = extension_hierarchy(depth)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("hierarchy serializes")
            );
            Ok(0)
        }
    }
}

fn logic_command(command: LogicCommand) -> Result<i32, CliError> {
    match command {
        LogicCommand::Eval { structure, formula } => {
            let spec = StructureSpec::load(&structure)?;
            let built = spec.build()?;
            let parsed = logic::parse_formula(&formula)?;
            require_closed(&parsed)?;
            let report = logic::evaluate_report(
                &built,
                &parsed,
                &logic::Assignment::new(),
                logic::DEFAULT_NODE_BUDGET,
            )?;
            println!("{}", report.value);
            for (name, element) in &report.bindings {
                println!("  {name} = {element}");
            }
            Ok(0)
        }
    }
}
