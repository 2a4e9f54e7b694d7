//! Command-line front end. Progress goes to stderr, reports to stdout, and
//! result files only under `--out`.
//!
//! Exit codes: 0 success, 1 failed run or verification, 2 config or usage error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::checks::{run_battery, VerifyReport};
use crate::error::ConfigError;
use crate::model::{AgentProfile, LinkState, Mode};
use crate::netsim::config::{SweepAxis, SweepSpec};
use crate::netsim::persist::{persist, sweep_csv, ResultFile};
use crate::netsim::strategy::Strategy;
use crate::netsim::sweep::{run_point, run_sweep, thread_pool, StrategyStats, SweepPoint, SweepResult};
use crate::netsim::SimConfig;
use crate::oracle::{verify, OracleVerdict};
use crate::select::{gated_candidates, select_scale, NetworkSolution};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "meanopt", version, about = "Joint compression, power and collaboration-scale optimisation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true, env = "MEANOPT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory for result files.
    #[arg(long, global = true, env = "MEANOPT_OUT", default_value = "results")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, env = "MEANOPT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long, global = true, env = "MEANOPT_JOBS")]
    pub jobs: Option<usize>,
    /// Comma-separated strategy ids, e.g. `proposed,local-only`.
    #[arg(long, global = true, env = "MEANOPT_STRATEGY", value_delimiter = ',')]
    pub strategy: Vec<String>,
    /// Repeat for more progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the explicit agents listed in the config.
    Solve {
        /// Append a brute-force oracle verdict.
        #[arg(long)]
        oracle: bool,
    },
    /// Run the configured parameter sweeps.
    Sweep,
    /// Compare all strategies at the configured operating point.
    Compare,
    /// Run the oracle suite and invariant battery.
    Verify,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Failed(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn failed<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Failed(e.to_string())
}

struct Context {
    cfg: SimConfig,
    out: PathBuf,
    jobs: usize,
    strategies: Vec<Strategy>,
}

impl Context {
    fn from_args(common: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &common.config {
            Some(path) => SimConfig::load(path)?,
            None => SimConfig::default(),
        };
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        let strategies = if common.strategy.is_empty() {
            cfg.strategies.clone()
        } else {
            common
                .strategy
                .iter()
                .map(|s| Strategy::parse(s).ok_or_else(|| CliError::Config(format!("unknown strategy `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?
        };
        let jobs = match common.jobs {
            Some(0) => return Err(CliError::Config("--jobs must be >= 1".into())),
            Some(j) => j,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(Self {
            cfg,
            out: common.out.clone(),
            jobs,
            strategies,
        })
    }

    fn out_file(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(failed)?;
        Ok(self.out.join(name))
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).try_init();

    let result = Context::from_args(&cli.common).and_then(|ctx| match cli.command {
        Command::Solve { oracle } => cmd_solve(&ctx, oracle),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Compare => cmd_compare(&ctx),
        Command::Verify => cmd_verify(&ctx),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILURE),
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    agents: &'a [AgentProfile],
    links: &'a [LinkState],
    solution: &'a NetworkSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<&'a OracleVerdict>,
}

fn cmd_solve(ctx: &Context, oracle_flag: bool) -> Result<bool, CliError> {
    let cfg = &ctx.cfg;
    let agents = cfg.explicit_agents()?;
    if agents.is_empty() {
        return Err(CliError::Config("`solve` needs explicit [[agents]] in the config".into()));
    }
    let (links, evals) = gated_candidates(&cfg.system, &agents).map_err(failed)?;
    let solution = select_scale(&cfg.system, &evals, &cfg.policy).map_err(failed)?;

    let mut stdout = std::io::stdout().lock();
    print_solution(&mut stdout, &links, &solution).map_err(failed)?;

    let verdict = if oracle_flag || cfg.run_oracle {
        let v = verify(&cfg.system, &agents, &cfg.policy, &cfg.oracle).map_err(failed)?;
        writeln!(
            stdout,
            "oracle: {} (enumeration {:.9} J, grid {:.9} J, worst gap {:.3e})",
            if v.agreed { "agreed" } else { "DISAGREED" },
            v.oracle_energy,
            v.grid_oracle_energy,
            v.worst_case_gap_rel
        )
        .map_err(failed)?;
        Some(v)
    } else {
        None
    };

    let report = SolveReport {
        agents: &agents,
        links: &links,
        solution: &solution,
        oracle: verdict.as_ref(),
    };
    persist(&report, &ctx.out_file("solve.json")?).map_err(failed)?;
    if let Some(v) = verdict.as_ref().filter(|v| !v.agreed) {
        write_counterexample(ctx, "counterexample.toml", v)?;
    }
    Ok(verdict.is_none_or(|v| v.agreed) && solution.feasible)
}

fn print_solution(w: &mut impl Write, links: &[LinkState], s: &NetworkSolution) -> std::io::Result<()> {
    writeln!(
        w,
        "K* = {}  E_min = {:.9} J  ({} of {} agents can collaborate{})",
        s.k_star,
        s.total_energy,
        s.m,
        s.n(),
        if s.feasible { "" } else { "; local deadline violated" }
    )?;
    writeln!(
        w,
        "{:>5} {:>2} {:>10} {:>10} {:>10} {:>9} {:>10} {:>10} {:>10} {:>10} {:>11}",
        "agent", "x", "snr", "rho*", "p*_W", "t_bs_s", "e_comp_J", "e_comm_J", "e_bs_J", "e_local_J", "dE_save_J"
    )?;
    let dash = "-";
    for (i, (e, link)) in s.per_agent.iter().zip(links).enumerate() {
        let x = u8::from(e.mode == Mode::Collaborative);
        match e.bs {
            Some(b) => writeln!(
                w,
                "{i:>5} {x:>2} {:>10.3e} {:>10.6} {:>10.4e} {:>9.6} {:>10.4e} {:>10.4e} {:>10.4e} {:>10.4e} {:>11.4e}",
                link.snr,
                b.rho,
                b.power_w,
                b.t_bs,
                b.e_comp,
                b.e_comm,
                b.e_bs,
                e.e_local,
                e.e_local - b.e_bs
            )?,
            None => writeln!(
                w,
                "{i:>5} {x:>2} {:>10.3e} {dash:>10} {dash:>10} {dash:>9} {dash:>10} {dash:>10} {dash:>10} {:>10.4e} {dash:>11}",
                link.snr, e.e_local
            )?,
        }
    }
    Ok(())
}

fn write_counterexample(ctx: &Context, name: &str, v: &OracleVerdict) -> Result<(), CliError> {
    if let Some(agents) = &v.counterexample {
        let path = ctx.out_file(name)?;
        std::fs::write(&path, ctx.cfg.replay(agents).to_toml()).map_err(failed)?;
        eprintln!("counterexample written to {}", path.display());
    }
    Ok(())
}

fn quality_gate(cfg: &SimConfig, axis: &str, points: &[SweepPoint]) -> bool {
    let mut ok = true;
    for p in points {
        for st in &p.stats {
            if !st.mean_energy_j.is_finite() || st.non_finite_trials > 0 {
                eprintln!("{axis}={}: {} produced non-finite energies", p.value, st.strategy);
                ok = false;
            }
            if st.infeasible_rate() > cfg.max_infeasible_rate {
                eprintln!(
                    "{axis}={}: {} infeasible in {:.1}% of trials (limit {:.1}%)",
                    p.value,
                    st.strategy,
                    100.0 * st.infeasible_rate(),
                    100.0 * cfg.max_infeasible_rate
                );
                ok = false;
            }
        }
    }
    ok
}

fn open_dump(ctx: &Context, name: &str) -> Result<Option<BufWriter<File>>, CliError> {
    if !ctx.cfg.dump_trials {
        return Ok(None);
    }
    let f = File::create(ctx.out_file(name)?).map_err(failed)?;
    Ok(Some(BufWriter::new(f)))
}

fn cmd_sweep(ctx: &Context) -> Result<bool, CliError> {
    let pool = thread_pool(ctx.jobs);
    let mut ok = true;
    let mut sweeps = Vec::new();
    for spec in &ctx.cfg.sweeps {
        let mut dump = open_dump(ctx, &format!("trials_{}.jsonl", spec.axis))?;
        let result = run_sweep(&ctx.cfg, spec, &ctx.strategies, &pool, dump.as_mut().map(|w| w as &mut dyn Write))
            .map_err(failed)?;
        if let Some(mut w) = dump {
            w.flush().map_err(failed)?;
        }
        let path = ctx.out_file(&format!("sweep_{}.csv", spec.axis))?;
        std::fs::write(&path, sweep_csv(&result)).map_err(failed)?;
        eprintln!("wrote {}", path.display());
        ok &= quality_gate(&ctx.cfg, spec.axis.name(), &result.points);
        sweeps.push(result);
    }
    let file = ResultFile {
        config: ctx.cfg.clone(),
        sweeps,
    };
    persist(&file, &ctx.out_file("sweep_results.json")?).map_err(failed)?;
    Ok(ok)
}

fn cmd_compare(ctx: &Context) -> Result<bool, CliError> {
    let pool = thread_pool(ctx.jobs);
    let cfg = &ctx.cfg;
    let mut dump = open_dump(ctx, "trials_compare.jsonl")?;
    let stats = run_point(cfg, &ctx.strategies, &pool, dump.as_mut().map(|w| w as &mut dyn Write)).map_err(failed)?;
    if let Some(mut w) = dump {
        w.flush().map_err(failed)?;
    }

    let mut stdout = std::io::stdout().lock();
    print_compare(&mut stdout, cfg, &stats).map_err(failed)?;

    let point = SweepPoint {
        value: cfg.population.n_agents as f64,
        stats,
    };
    let ok = quality_gate(cfg, "N", std::slice::from_ref(&point));
    let result = SweepResult {
        axis: SweepAxis::N,
        points: vec![point],
    };
    std::fs::write(ctx.out_file("compare.csv")?, sweep_csv(&result)).map_err(failed)?;
    let file = ResultFile {
        config: SimConfig {
            sweeps: vec![SweepSpec {
                axis: SweepAxis::N,
                values: vec![cfg.population.n_agents as f64],
            }],
            ..cfg.clone()
        },
        sweeps: vec![result],
    };
    persist(&file, &ctx.out_file("compare.json")?).map_err(failed)?;
    Ok(ok)
}

fn print_compare(w: &mut impl Write, cfg: &SimConfig, stats: &[StrategyStats]) -> std::io::Result<()> {
    writeln!(
        w,
        "N = {}, D = {} Mbit, T0 = {} s, {} trials (seed {})",
        cfg.population.n_agents, cfg.population.data_mbits, cfg.system.deadline_s, cfg.n_trials, cfg.seed
    )?;
    writeln!(w, "{:<16} {:>14} {:>12} {:>8} {:>11}", "strategy", "mean_energy_J", "stderr_J", "mean_K", "infeasible")?;
    for st in stats {
        writeln!(
            w,
            "{:<16} {:>14.6} {:>12.3e} {:>8.3} {:>11}",
            st.strategy.label(),
            st.mean_energy_j,
            st.stderr_j,
            st.mean_k,
            st.infeasible_trials
        )?;
    }
    Ok(())
}

fn cmd_verify(ctx: &Context) -> Result<bool, CliError> {
    let pool = thread_pool(ctx.jobs);
    let report: VerifyReport = pool.install(|| run_battery(&ctx.cfg)).map_err(failed)?;
    let mut stdout = std::io::stdout().lock();
    for c in &report.checks {
        writeln!(
            stdout,
            "[{}] {} (worst {:.3e}, limit {:.1e}, n = {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.threshold,
            c.samples
        )
        .map_err(failed)?;
    }
    for (i, v) in report.verdicts.iter().enumerate().filter(|(_, v)| !v.agreed) {
        write_counterexample(ctx, &format!("counterexample_{i}.toml"), v)?;
    }
    persist(&report, &ctx.out_file("verify.json")?).map_err(failed)?;
    writeln!(stdout, "verify: {}", if report.passed { "PASS" } else { "FAIL" }).map_err(failed)?;
    Ok(report.passed)
}

/// Parse arguments and run; clap usage errors exit with code 2.
pub fn main_from_env() -> ExitCode {
    run(Cli::parse())
}
