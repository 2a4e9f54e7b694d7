//! Invariant battery behind `meanopt verify`.
//!
//! Continuous checks run on randomly drawn agents that pass the SNR gate and
//! have a nonempty compression region; discrete checks run the oracle on small
//! random networks. Each check reports its worst observed value against a
//! fixed threshold.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::{network_energy, network_energy_decomposed, snr, AgentProfile, SystemParams};
use crate::netsim::channel::{agent_stream, draw_agents};
use crate::netsim::config::SimConfig;
use crate::netsim::strategy::{run_strategy, Strategy};
use crate::oracle::{grid_solve_agent, log_grid, tight_cost, verify, OracleVerdict};
use crate::select::{solve_network, SelectionPolicy};
use crate::solver::{feasible_region, solve_agent, stationarity_residual, stationarity_scale};

const MAX_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub threshold: f64,
    pub samples: usize,
}

impl CheckResult {
    fn at_most(name: &str, worst: f64, threshold: f64, samples: usize) -> Self {
        Self {
            name: name.into(),
            passed: worst <= threshold,
            worst,
            threshold,
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub verdicts: Vec<OracleVerdict>,
}

/// Agents from the configured population that can use the collaborative mode.
pub fn sample_feasible_agents(cfg: &SimConfig, count: usize) -> Vec<AgentProfile> {
    let sys = &cfg.system;
    agent_stream(&cfg.population, &cfg.channel, cfg.seed)
        .take(MAX_DRAWS)
        .filter(|a| snr(sys, a).feasible && feasible_region(sys, a).is_ok_and(|r| !r.empty))
        .take(count)
        .collect()
}

/// Most negative second difference of the collaborative energy over `points`
/// evenly spaced ratios in the region, relative to the largest energy seen.
pub fn convexity_defect(sys: &SystemParams, agent: &AgentProfile, points: usize) -> Result<f64, SolveError> {
    let r = feasible_region(sys, agent)?;
    if r.empty || r.lo == r.hi {
        return Ok(0.0);
    }
    let energies: Vec<f64> = (0..points)
        .map(|i| {
            let rho = r.lo + (r.hi - r.lo) * i as f64 / (points - 1) as f64;
            tight_cost(sys, agent, rho).map_or(f64::NAN, |c| c.e_bs)
        })
        .collect();
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let worst = energies
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    Ok(if worst.is_nan() { f64::INFINITY } else { (-worst / scale).max(0.0) })
}

/// Worst disagreement between the analytic residual and `ρ·dE/dρ` from a
/// central difference with step `1e-7·ρ`, relative to the residual's terms.
pub fn derivative_disagreement(sys: &SystemParams, agent: &AgentProfile, points: usize) -> Result<f64, SolveError> {
    let r = feasible_region(sys, agent)?;
    if r.empty || r.lo == r.hi {
        return Ok(0.0);
    }
    let energy = |rho: f64| tight_cost(sys, agent, rho).map_or(f64::NAN, |c| c.e_bs);
    let mut worst = 0.0f64;
    for j in 0..points {
        let rho = r.lo + (r.hi - r.lo) * (j as f64 + 0.5) / points as f64;
        let h = 1e-7 * rho;
        let numeric = rho * (energy(rho + h) - energy(rho - h)) / (2.0 * h);
        let analytic = stationarity_residual(sys, agent, rho)?;
        let scale = stationarity_scale(sys, agent, rho)?;
        let err = (analytic - numeric).abs() / scale;
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(worst)
}

/// Distance, in grid steps, between the solver's `ρ*` and the argmin of a
/// log-spaced grid of `points` ratios over the region.
pub fn grid_argmin_steps(sys: &SystemParams, agent: &AgentProfile, points: usize) -> Result<f64, SolveError> {
    let r = feasible_region(sys, agent)?;
    let Some(rho_star) = solve_agent(sys, agent)?.rho_star() else {
        return Ok(f64::INFINITY);
    };
    if r.lo == r.hi {
        return Ok(0.0);
    }
    let grid = log_grid(r.lo, r.hi, points);
    let (arg, _) = grid
        .iter()
        .enumerate()
        .filter_map(|(i, &rho)| tight_cost(sys, agent, rho).map(|c| (i, c.e_bs)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let step = (r.hi / r.lo).ln() / (points - 1) as f64;
    Ok(((rho_star.ln() - grid[arg].ln()) / step).abs())
}

fn continuous_checks(cfg: &SimConfig, agents: &[AgentProfile]) -> Result<Vec<CheckResult>, SolveError> {
    let sys = &cfg.system;
    let n = agents.len();
    let (mut convex, mut deriv, mut steps, mut grid_gap, mut tight, mut power) = (0.0f64, 0.0f64, 0.0f64, f64::MIN, 0.0f64, f64::MIN);
    for a in agents {
        convex = convex.max(convexity_defect(sys, a, 1000)?);
        deriv = deriv.max(derivative_disagreement(sys, a, 20)?);
        steps = steps.max(grid_argmin_steps(sys, a, 10_000)?);
        let sol = solve_agent(sys, a)?;
        let bs = sol.evaluation.bs.ok_or(SolveError::EmptyRegion)?;
        let grid = grid_solve_agent(sys, a, &cfg.oracle)?;
        grid_gap = grid_gap.max((bs.e_bs - grid.energy) / grid.energy.abs());
        tight = tight.max((bs.t_bs - sys.deadline_s).abs() / sys.deadline_s);
        power = power.max(bs.power_w / sys.p_max_w - 1.0);
    }
    Ok(vec![
        CheckResult::at_most("convexity: relative negative second difference", convex, 1e-9, n),
        CheckResult::at_most("stationarity residual vs finite difference", deriv, 1e-4, n),
        CheckResult::at_most("bisection vs 1e4-point grid argmin (steps)", steps, 2.0, n),
        CheckResult::at_most("solver energy above grid minimum (relative)", grid_gap, cfg.oracle.tolerance_agent, n),
        CheckResult::at_most("latency tightness |t_bs - T0| / T0", tight, 1e-9, n),
        CheckResult::at_most("power cap p*/P_max - 1", power, 1e-9, n),
    ])
}

fn network_checks(cfg: &SimConfig, trials: &[Vec<AgentProfile>]) -> Result<Vec<CheckResult>, SolveError> {
    let sys = &cfg.system;
    let policy: &SelectionPolicy = &cfg.policy;
    let (mut dom_local, mut dom_snr, mut forms, mut perm) = (f64::MIN, f64::MIN, 0.0f64, 0.0f64);
    for agents in trials {
        let s = solve_network(sys, agents, policy)?;
        let local = run_strategy(Strategy::LocalOnly, sys, agents, policy, &cfg.baselines)?;
        let snr_based = run_strategy(Strategy::SnrBased, sys, agents, policy, &cfg.baselines)?;
        dom_local = dom_local.max(s.total_energy - local.energy);
        dom_snr = dom_snr.max(s.total_energy - snr_based.energy);
        let direct = network_energy(sys, &s.per_agent, s.k_star)?;
        let split = network_energy_decomposed(sys, &s.per_agent, s.k_star)?;
        forms = forms.max((direct - split).abs() / direct.abs().max(f64::MIN_POSITIVE));

        let reversed: Vec<AgentProfile> = agents.iter().rev().copied().collect();
        let r = solve_network(sys, &reversed, policy)?;
        let mut chosen: Vec<usize> = s.collaborating().collect();
        let mut chosen_rev: Vec<usize> = r.collaborating().map(|i| agents.len() - 1 - i).collect();
        chosen.sort_unstable();
        chosen_rev.sort_unstable();
        let energy_gap = (r.total_energy - s.total_energy).abs() / s.total_energy;
        perm = perm.max(if chosen == chosen_rev { energy_gap } else { energy_gap.max(1e-12) });
    }
    let n = trials.len();
    Ok(vec![
        CheckResult::at_most("dominance over Local Only (J)", dom_local, 1e-9, n),
        CheckResult::at_most("dominance over SNR-Based (J)", dom_snr, 1e-9, n),
        CheckResult::at_most("direct vs decomposed objective (relative)", forms, 1e-12, n),
        CheckResult::at_most("permutation invariance (relative)", perm, 1e-12, n),
    ])
}

pub fn run_battery(cfg: &SimConfig) -> Result<VerifyReport, SolveError> {
    let agents = sample_feasible_agents(cfg, cfg.verify.agent_samples);
    let mut checks = vec![CheckResult::at_most(
        "feasible agents found for continuous checks (shortfall)",
        (cfg.verify.agent_samples - agents.len()) as f64,
        0.0,
        agents.len(),
    )];
    checks.extend(continuous_checks(cfg, &agents)?);

    let pop = crate::netsim::config::Population {
        n_agents: cfg.verify.n_agents,
        ..cfg.population.clone()
    };
    let trials: Vec<Vec<AgentProfile>> = (0..cfg.verify.trials as u64)
        .map(|i| draw_agents(&pop, &cfg.channel, cfg.seed, i))
        .collect();
    checks.extend(network_checks(cfg, &trials)?);

    let verdicts = trials
        .iter()
        .map(|t| verify(&cfg.system, t, &cfg.policy, &cfg.oracle))
        .collect::<Result<Vec<_>, _>>()?;
    let disagreements = verdicts.iter().filter(|v| !v.agreed).count();
    checks.push(CheckResult::at_most(
        "oracle disagreements",
        disagreements as f64,
        0.0,
        verdicts.len(),
    ));

    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
        verdicts,
    })
}
