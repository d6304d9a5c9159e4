mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rsscflp::bnp::{self, ChildOrder, SolveStatus, SolverConfig};
use rsscflp::instgen::{self, GenSpec, Scheme};
use rsscflp::io::{self, SolutionFile};
use rsscflp::master::InitialPool;
use rsscflp::model::{compact_lp_bound, CompactLpStatus};
use rsscflp::sim::{self, SimSpec};
use rsscflp::{oracle, Error as CoreError, Evaluation};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIME_LIMIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "rsscflp", version, about = "Robust single-source capacitated facility location by branch and price")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChildOrderArg {
    OpenFirst,
    CloseFirst,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PoolArg {
    Singletons,
    DummyOnly,
}

#[derive(clap::Args, Debug)]
struct SolverArgs {
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Disable reduced-cost variable fixing.
    #[arg(long)]
    no_fixing: bool,
    /// Re-run fixing at nodes whose depth is a multiple of this (0: only at
    /// the root and after incumbent improvements).
    #[arg(long, default_value_t = 1)]
    fixing_period: usize,
    /// Disable Lagrangian early termination of column generation.
    #[arg(long)]
    no_early_termination: bool,
    #[arg(long, value_enum, default_value_t = ChildOrderArg::OpenFirst)]
    child_order: ChildOrderArg,
    #[arg(long, value_enum, default_value_t = PoolArg::Singletons)]
    initial_pool: PoolArg,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        if !(self.time_limit >= 0.0 && self.time_limit.is_finite()) {
            bail!("--time-limit must be a nonnegative number of seconds");
        }
        Ok(SolverConfig {
            time_limit: Duration::from_secs_f64(self.time_limit),
            fixing: !self.no_fixing,
            fixing_period: self.fixing_period,
            early_termination: !self.no_early_termination,
            child_order: match self.child_order {
                ChildOrderArg::OpenFirst => ChildOrder::OpenFirst,
                ChildOrderArg::CloseFirst => ChildOrder::CloseFirst,
            },
            initial_pool: match self.initial_pool {
                PoolArg::Singletons => InitialPool::Singletons,
                PoolArg::DummyOnly => InitialPool::DummyOnly,
            },
            ..SolverConfig::default()
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance to optimality.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Solution JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Include wall-clock timings (makes the output nondeterministic).
        #[arg(long)]
        timings: bool,
        /// Write per-node and per-iteration events as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the final column pool as CSV.
        #[arg(long)]
        dump_pool: Option<PathBuf>,
        /// Write the final master LP as text.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Generate a random instance.
    Generate {
        #[arg(long, value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Total capacity over total demand; scheme default when omitted.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, default_value_t = 5)]
        gamma: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Deviation rate interval as `lo:hi` fractions.
        #[arg(long, default_value = "0.1:0.5")]
        sigma_range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo feasibility of a solution under random demand.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Single value, comma list, or `lo:hi:step`.
        #[arg(long, default_value = "0:0.4:0.05")]
        delta: String,
        #[arg(long, default_value_t = 5000)]
        scenarios: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Draw a fresh normal stream for every delta.
        #[arg(long)]
        no_common_random_numbers: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve over a grid of deviation rates and budgets and simulate each
    /// solution.
    Tradeoff {
        #[arg(long)]
        instance: PathBuf,
        /// Uniform deviation rates (fractions).
        #[arg(long, default_value = "0:0.5:0.1")]
        sigma: String,
        #[arg(long, default_value = "0:5:1")]
        gamma: String,
        #[arg(long, default_value = "0:0.4:0.05")]
        delta: String,
        #[arg(long, default_value_t = 5000)]
        scenarios: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        no_common_random_numbers: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution against an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Also compare with the exhaustive optimum (small instances only).
        #[arg(long)]
        oracle: bool,
    },
    /// Compare the column-generation and compact relaxation bounds.
    Bound {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: CoreError| e.to_string())
}

fn read_instance(path: &Path) -> Result<rsscflp::Instance> {
    io::read_instance(path).with_context(|| format!("reading instance {}", path.display()))
}

fn read_solution(path: &Path) -> Result<SolutionFile> {
    io::read_solution(path).with_context(|| format!("reading solution {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::TimeLimit => EXIT_TIME_LIMIT,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve {
            instance,
            out,
            solver,
            timings,
            trace,
            dump_pool,
            dump_lp,
        } => {
            let inst = read_instance(&instance)?;
            let mut config = solver.config()?;
            config.trace = trace.is_some();
            config.keep_dumps = dump_pool.is_some() || dump_lp.is_some();
            let report = bnp::solve(&inst, &config)?;
            log::info!(
                "status {:?} objective {:?} bound {} nodes {} columns {}",
                report.status,
                report.objective,
                report.bound,
                report.stats.nodes,
                report.stats.columns
            );
            let file = SolutionFile::from_report(&report, &config, timings)?;
            emit(out.as_deref(), &io::to_json_pretty(&file)?)?;
            if let Some(p) = trace {
                let mut lines = String::new();
                for ev in &report.trace {
                    lines.push_str(&serde_json::to_string(ev)?);
                    lines.push('\n');
                }
                emit(Some(&p), &lines)?;
            }
            if let (Some(p), Some(csv)) = (dump_pool, &report.pool_csv) {
                emit(Some(&p), csv)?;
            }
            if let (Some(p), Some(lp)) = (dump_lp, &report.lp_dump) {
                emit(Some(&p), lp)?;
            }
            Ok(status_code(report.status))
        }
        Command::Generate {
            scheme,
            m,
            n,
            ratio,
            gamma,
            seed,
            sigma_range,
            out,
        } => {
            let (lo, hi) = args::parse_fraction_pair(&sigma_range)?;
            let spec = GenSpec {
                scheme,
                m,
                n,
                target_ratio: ratio.unwrap_or(scheme.default_ratio()),
                seed,
                gamma,
                sigma_permille: (lo, hi),
            };
            let inst = instgen::generate(&spec)?;
            log::info!("generated S/D {:.4}", instgen::capacity_ratio(&inst));
            let text = io::to_json_pretty(&io::InstanceFile::new(&inst, Some(spec)))?;
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Simulate {
            instance,
            solution,
            delta,
            scenarios,
            seed,
            no_common_random_numbers,
            out,
        } => {
            let inst = read_instance(&instance)?;
            let sol = read_solution(&solution)?;
            let assignment = sol.assignment()?;
            let deltas = args::parse_values(&delta)?;
            let mut csv = format!(
                "# rsscflp simulate scenarios={scenarios} seed={seed} common_random_numbers={}\n",
                !no_common_random_numbers
            );
            csv.push_str("delta,scenarios,infeasible,infeasibility_pct,violations\n");
            for d in deltas {
                let spec = SimSpec {
                    delta: d,
                    scenarios,
                    seed,
                    common_random_numbers: !no_common_random_numbers,
                };
                let r = sim::evaluate_robustness(&inst, &assignment, &spec)?;
                let v: Vec<String> = r.violations.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(
                    csv,
                    "{:.6},{},{},{:.6},{}",
                    r.delta,
                    r.scenarios,
                    r.infeasible,
                    r.infeasibility_pct,
                    v.join(";")
                );
            }
            emit(out.as_deref(), &csv)?;
            Ok(0)
        }
        Command::Tradeoff {
            instance,
            sigma,
            gamma,
            delta,
            scenarios,
            seed,
            no_common_random_numbers,
            solver,
            out,
        } => {
            let inst = read_instance(&instance)?;
            let sigmas = args::parse_permille_values(&sigma)?;
            let gammas = args::parse_counts(&gamma)?;
            let deltas = args::parse_values(&delta)?;
            let config = solver.config()?;
            let spec = SimSpec {
                delta: 0.0,
                scenarios,
                seed,
                common_random_numbers: !no_common_random_numbers,
            };
            let table = sim::tradeoff_grid(&inst, &sigmas, &gammas, &deltas, &spec, &config)?;
            let mut csv = format!(
                "# rsscflp tradeoff scenarios={scenarios} seed={seed} common_random_numbers={} time_limit={}\n",
                !no_common_random_numbers,
                config.time_limit.as_secs_f64()
            );
            csv.push_str(&table.to_csv());
            match table.regression {
                Some(r) => {
                    let _ = writeln!(csv, "# regression slope={:.6} r_squared={:.6} points={}", r.slope, r.r_squared, r.points);
                }
                None => csv.push_str("# regression none\n"),
            }
            emit(out.as_deref(), &csv)?;
            Ok(0)
        }
        Command::Verify { instance, solution, oracle: use_oracle } => {
            let inst = read_instance(&instance)?;
            let sol = read_solution(&solution)?;
            verify(&inst, &sol, use_oracle)
        }
        Command::Bound { instance, solver, out } => {
            let inst = read_instance(&instance)?;
            let config = solver.config()?;
            bound(&inst, &config, out.as_deref())
        }
    }
}

fn verify(inst: &rsscflp::Instance, sol: &SolutionFile, use_oracle: bool) -> Result<u8> {
    let mut failed = false;
    let mut found: Option<i64> = None;
    match sol.assignment() {
        Ok(a) => match inst.evaluate(&a) {
            Ok(Evaluation::Feasible(z)) => {
                found = Some(z);
                println!("feasible objective {z}");
                if sol.objective.is_some_and(|claimed| claimed != z) {
                    println!("violation: reported objective {:?} differs from {z}", sol.objective);
                    failed = true;
                }
            }
            Ok(Evaluation::Infeasible(violations)) => {
                for v in violations {
                    println!(
                        "violation: facility {} worst-case load {} exceeds capacity {}",
                        v.facility, v.worst_case_load, v.capacity
                    );
                }
                failed = true;
            }
            Err(e) => {
                println!("violation: {e}");
                failed = true;
            }
        },
        Err(_) => {
            println!("solution reports status {:?} without an assignment", sol.status);
            if sol.status != SolveStatus::Infeasible {
                failed = true;
            }
        }
    }
    if use_oracle {
        let best = oracle::brute_force_optimal(inst)?.objective;
        println!("oracle objective {}", best.map_or("infeasible".into(), |z| z.to_string()));
        let agrees = match sol.status {
            SolveStatus::Optimal => best.is_some() && best == found,
            SolveStatus::Infeasible => best.is_none(),
            SolveStatus::TimeLimit => found.is_some_and(|z| best.is_some_and(|b| b <= z)),
        };
        if !agrees {
            println!("violation: solution disagrees with the exhaustive optimum");
            failed = true;
        }
    }
    Ok(if failed || found.is_none() { EXIT_INFEASIBLE } else { 0 })
}

#[derive(Serialize)]
struct BoundReport {
    /// Column-generation root bound.
    z_lp_ap: Option<f64>,
    /// Compact LP relaxation bound.
    z_lp_rp2: Option<f64>,
    z_best: Option<i64>,
    status: SolveStatus,
    gap_bp_pct: Option<f64>,
    gap_lp_pct: Option<f64>,
}

fn bound(inst: &rsscflp::Instance, config: &SolverConfig, out: Option<&Path>) -> Result<u8> {
    let root = bnp::root_column_generation(inst, config.initial_pool)?;
    let compact = compact_lp_bound(inst);
    let report = bnp::solve(inst, config)?;
    let z_ap = (!root.infeasible).then_some(root.bound);
    let z_rp2 = (compact.status == CompactLpStatus::Optimal).then_some(compact.objective);
    let gap = |z: Option<f64>| {
        report
            .objective
            .zip(z)
            .filter(|(best, _)| *best != 0)
            .map(|(best, lp)| (best as f64 - lp) / best as f64 * 100.0)
    };
    let rep = BoundReport {
        z_lp_ap: z_ap,
        z_lp_rp2: z_rp2,
        z_best: report.objective,
        status: report.status,
        gap_bp_pct: gap(z_ap),
        gap_lp_pct: gap(z_rp2),
    };
    emit(out, &io::to_json_pretty(&rep)?)?;
    Ok(status_code(report.status))
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RSSCFLP_THREADS") {
        let n: usize = v.trim().parse().context("RSSCFLP_THREADS must be a positive integer")?;
        if n == 0 {
            bail!("RSSCFLP_THREADS must be a positive integer");
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
