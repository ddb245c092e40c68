use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfp_bench::config::ProblemConfig;
use sfp_bench::experiment::{
    load_config, override_seed, read_trajectory_csv, run_experiment, sweep, HarnessError,
    EXIT_CONFIG, EXIT_IO, EXIT_MAX_ITER, EXIT_RESIDUAL_MET,
};
use sfp_bench::props;
use sfp_bench::table1::{compare_rows, compare_to_table1, mode_sweep};
use sfp_core::solver::{validate_schedule, CompositionMode, ParameterSchedule};

#[derive(Parser)]
#[command(name = "sfp", version, about = "Split feasibility solver experiments")]
struct Cli {
    /// Directory for CSV and SVG outputs.
    #[arg(long, global = true, env = "SFP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write its trajectory CSV.
    Run {
        config: PathBuf,
        /// Overrides the seed of a randomly generated problem.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config's schedule against the parameter conditions.
    ValidateSchedule {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
    },
    /// Run the built-in linear-system instance from (1,1,1,1,1).
    ExampleS4 {
        #[arg(long, default_value = "paper-s4", value_parser = clap::builder::PossibleValuesParser::new(ParameterSchedule::PRESETS))]
        preset: String,
        /// Composition mode; the table-1 preset runs all three when omitted.
        #[arg(long, value_parser = ["proof", "statement", "explore"])]
        mode: Option<String>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Compare a trajectory CSV with the reference table.
    CompareTable1 { csv: PathBuf },
    /// Run the seeded property suites.
    Props {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run every *.toml config in a directory concurrently.
    Sweep {
        dir: PathBuf,
        /// Overrides the seed of randomly generated problems.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn fail(err: &HarnessError) -> i32 {
    eprintln!("error: {err}");
    if let HarnessError::Diverged { partial, .. } = err {
        eprintln!("partial trajectory: {} rows written", partial.rows.len());
    }
    err.exit_code()
}

fn cmd_run(out_dir: &Path, path: &Path, seed: Option<u64>) -> i32 {
    let mut config = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = seed {
        override_seed(&mut config, seed);
    }
    match run_experiment(&config, out_dir) {
        Ok(result) => {
            for w in &result.history.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", result.summary());
            result.exit_code()
        }
        Err(e) => fail(&e),
    }
}

fn cmd_validate(path: &Path, horizon: usize) -> i32 {
    let schedule = match load_config(path).and_then(|c| Ok(c.schedule.build()?)) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    match validate_schedule(&schedule, horizon) {
        Ok(report) => {
            print!("{report}");
            if report.any_fail() {
                EXIT_CONFIG
            } else {
                EXIT_RESIDUAL_MET
            }
        }
        Err(e) => fail(&e.into()),
    }
}

fn cmd_example_s4(out_dir: &Path, preset: &str, mode: Option<&str>, max_iter: Option<usize>) -> i32 {
    if preset == "table-1" && mode.is_none() {
        return match mode_sweep(preset) {
            Ok(reports) => {
                for (_, report) in reports {
                    println!("{report}");
                }
                EXIT_RESIDUAL_MET
            }
            Err(e) => fail(&e),
        };
    }
    let mode = CompositionMode::from_name(mode.unwrap_or("proof")).expect("clap restricts modes");
    let mut config = ProblemConfig::example_s4(preset, mode);
    if let Some(m) = max_iter {
        config.stepper.max_iter = m;
    }
    match run_experiment(&config, out_dir) {
        Ok(result) => {
            println!("{}", result.summary());
            let target = sfp_bench::problems::s4_solution();
            match result.history.first_within(&target, 1e-6) {
                Some(n) => println!("within 1e-6 of the solution from n = {n}"),
                None => println!("never within 1e-6 of the solution"),
            }
            match compare_to_table1(&config.name, result.trajectory()) {
                Ok(report) => print!("{report}"),
                Err(e) => eprintln!("table comparison skipped: {e}"),
            }
            result.exit_code()
        }
        Err(e) => fail(&e),
    }
}

fn cmd_compare(path: &Path) -> i32 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_IO;
        }
    };
    let rows = match read_trajectory_csv(&text) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    };
    match compare_rows(&path.display().to_string(), &rows) {
        Ok(report) => {
            print!("{report}");
            EXIT_RESIDUAL_MET
        }
        Err(e) => fail(&e.into()),
    }
}

fn cmd_props(seed: u64, samples: usize) -> i32 {
    let outcomes = props::run_all(seed, samples);
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().all(|o| o.passed()) {
        EXIT_RESIDUAL_MET
    } else {
        EXIT_MAX_ITER
    }
}

fn cmd_sweep(out_dir: &Path, dir: &Path, seed: Option<u64>) -> i32 {
    let entries = match sweep(dir, out_dir, seed) {
        Ok(e) => e,
        Err(e) => return fail(&e),
    };
    let mut code = EXIT_RESIDUAL_MET;
    for (path, outcome) in entries {
        let c = match outcome {
            Ok(result) => {
                println!("{}: {}", path.display(), result.summary());
                result.exit_code()
            }
            Err(e) => {
                println!("{}: error: {e}", path.display());
                e.exit_code()
            }
        };
        code = code.max(c);
    }
    code
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run { config, seed } => cmd_run(&cli.out_dir, config, *seed),
        Command::ValidateSchedule { config, horizon } => cmd_validate(config, *horizon),
        Command::ExampleS4 {
            preset,
            mode,
            max_iter,
        } => cmd_example_s4(&cli.out_dir, preset, mode.as_deref(), *max_iter),
        Command::CompareTable1 { csv } => cmd_compare(csv),
        Command::Props { seed, samples } => cmd_props(*seed, *samples),
        Command::Sweep { dir, seed } => cmd_sweep(&cli.out_dir, dir, *seed),
    };
    ExitCode::from(code as u8)
}
