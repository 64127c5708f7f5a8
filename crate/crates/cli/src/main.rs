use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use decaysched::bench::{run_bench, BenchConfig};
use decaysched::bounds::{check_bounds, BOUND_REPORT_CSV_HEADER};
use decaysched::dp::{evaluate_policy_exact, solve_optimal};
use decaysched::model::Instance;
use decaysched::policy::GreedyPolicy;
use decaysched::sim::compare_policies_crn;

#[derive(Debug, Parser)]
#[command(name = "decaysched", version, about = "Schedule jobs with decaying rewards on parallel processors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance exactly and print the optimal expected reward.
    Solve {
        instance: PathBuf,
        /// Write the optimal policy table as CSV (`-` for stdout).
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Print the exact expected reward of the greedy policy.
    Greedy { instance: PathBuf },
    /// Simulate optimal and greedy on common random numbers.
    Compare {
        instance: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report Δ, Δ_UB, δ and the greedy/optimal ratio checks.
    Bounds {
        instance: PathBuf,
        /// Print a CSV header and row instead of the text report.
        #[arg(long)]
        csv: bool,
    },
    /// Run a benchmark sweep from a TOML config and write CSV.
    Bench {
        config: PathBuf,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("loading instance {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Solve { instance, dump } => {
            let inst = load(&instance)?;
            let table = solve_optimal(&inst)?;
            writeln!(out, "optimal_value {}", table.initial_value())?;
            writeln!(out, "states {}", table.n_states())?;
            match dump {
                Some(p) if p.as_os_str() == "-" => table.write_dump(&mut out)?,
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    table.write_dump(BufWriter::new(f))?;
                }
                None => {}
            }
        }
        Command::Greedy { instance } => {
            let inst = load(&instance)?;
            writeln!(out, "greedy_value {}", evaluate_policy_exact(&inst, &GreedyPolicy)?)?;
        }
        Command::Compare { instance, reps, seed } => {
            let inst = load(&instance)?;
            let table = solve_optimal(&inst)?;
            let greedy_exact = evaluate_policy_exact(&inst, &GreedyPolicy)?;
            let c = compare_policies_crn(&inst, &table, &GreedyPolicy, reps, seed)?;
            writeln!(out, "optimal_exact {}", table.initial_value())?;
            writeln!(out, "greedy_exact {greedy_exact}")?;
            writeln!(out, "optimal_mc {}", c.mean_a)?;
            writeln!(out, "greedy_mc {}", c.mean_b)?;
            writeln!(out, "ratio_mc {}", c.ratio)?;
            writeln!(out, "difference_mc {} se {}", c.mean_difference, c.difference_se)?;
            writeln!(out, "reps {} seed {seed}", c.n_reps)?;
        }
        Command::Bounds { instance, csv } => {
            let inst = load(&instance)?;
            let r = check_bounds(&inst)?;
            if csv {
                writeln!(out, "{BOUND_REPORT_CSV_HEADER}")?;
                writeln!(out, "{}", r.csv_row())?;
            } else {
                writeln!(out, "expected_sigma_max {} (truncation <= {:e})", r.expected_sigma_max, r.sigma_max_truncation)?;
                writeln!(out, "min_mean_service {}", r.min_mean_service)?;
                writeln!(out, "delta {}", r.delta)?;
                match r.delta_ub {
                    Some(ub) => writeln!(out, "delta_ub {ub}")?,
                    None => writeln!(out, "delta_ub n/a (not all geometric)")?,
                }
                writeln!(out, "decay_timescale {}", r.decay_timescale)?;
                writeln!(out, "optimal {}", r.optimal)?;
                writeln!(out, "greedy {}", r.greedy)?;
                writeln!(out, "ratio {}", r.ratio)?;
                writeln!(out, "bound_2_plus_delta {}", r.bound_2_plus_delta)?;
                writeln!(out, "iid {}", r.iid)?;
                writeln!(out, "greedy_not_above_optimal {}", r.greedy_not_above_optimal)?;
                writeln!(out, "within_2_plus_delta {}", r.within_2_plus_delta)?;
                if let Some(w) = r.within_2 {
                    writeln!(out, "within_2 {w}")?;
                }
            }
        }
        Command::Bench { config, out: path } => {
            let cfg = BenchConfig::load(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            let report = run_bench(&cfg)?;
            for s in &report.skipped {
                eprintln!("{s}");
            }
            std::fs::write(&path, report.to_csv())
                .with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "wrote {} rows to {}", report.cells.len(), path.display())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse())
}
