//! Brute-force cross-checks for the solver.
//!
//! The continuous oracle walks a log-spaced grid of compression ratios and
//! prices each point with the plain model formulas. The discrete oracle
//! enumerates every admissible mode vector. Neither reuses the solver's
//! stationarity machinery; the grid takes only the solver's interval bounds,
//! and those are probed independently for admissibility at and just past each
//! edge.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::{
    compression_time, network_energy, AgentEvaluation, AgentProfile, BsCost, Mode, SystemParams,
};
use crate::select::{gated_candidates, latency_audit, select_scale, NetworkSolution, ScaleCandidate, SelectionPolicy};
use crate::solver::feasible_region;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub rho_grid_points: usize,
    pub power_grid_points: usize,
    pub subset_max_n: usize,
    /// Solver-vs-grid slack for one agent's collaborative energy.
    pub tolerance_agent: f64,
    /// End-to-end gap when the oracle also re-solves the continuous part on a grid.
    pub tolerance_continuous: f64,
    /// Gap between greedy selection and enumeration on identical per-agent inputs.
    pub tolerance_discrete: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            rho_grid_points: 2000,
            power_grid_points: 200,
            subset_max_n: 12,
            tolerance_agent: 1e-6,
            tolerance_continuous: 1e-3,
            tolerance_discrete: 1e-6,
        }
    }
}

impl OracleConfig {
    pub const MAX_SUBSET_N: usize = 20;

    pub fn validate(&self) -> Result<(), String> {
        if self.rho_grid_points < 100 {
            return Err(format!("rho_grid_points = {} must be >= 100", self.rho_grid_points));
        }
        if self.power_grid_points < 2 {
            return Err(format!("power_grid_points = {} must be >= 2", self.power_grid_points));
        }
        if self.subset_max_n > Self::MAX_SUBSET_N {
            return Err(format!(
                "subset_max_n = {} exceeds the hard limit {}",
                self.subset_max_n,
                Self::MAX_SUBSET_N
            ));
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || lo == hi {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut pts: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    pts[0] = lo;
    pts[n - 1] = hi;
    pts
}

/// Smallest power finishing `ρ·D` bits in the time left after compression.
/// `None` when compression alone overruns the deadline.
fn tight_power(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Option<f64> {
    let t_comm = sys.deadline_s - compression_time(agent, rho).ok()?;
    if t_comm <= 0.0 {
        return None;
    }
    let spectral = rho * agent.data_bits / (t_comm * sys.bandwidth_hz);
    Some(sys.noise_w / agent.channel_gain * (spectral * std::f64::consts::LN_2).exp_m1())
}

/// Model-priced cost at `ρ` with latency-tight power, if within the power cap.
pub fn tight_cost(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Option<BsCost> {
    let p = tight_power(sys, agent, rho)?;
    if !(p > 0.0) || p > sys.p_max_w * (1.0 + 1e-9) {
        return None;
    }
    BsCost::evaluate(sys, agent, rho, p).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub rho: f64,
    pub power_w: f64,
    pub energy: f64,
    pub cost: BsCost,
}

/// Best admissible point of a log grid over `[ρ_min, 1]`, refined on a second
/// grid spanning the neighbours of the coarse winner. Admissibility is decided
/// per point from the model formulas, without the solver's region bounds.
pub fn grid_solve_agent(sys: &SystemParams, agent: &AgentProfile, cfg: &OracleConfig) -> Result<GridSolution, SolveError> {
    let coarse = log_grid(sys.rho_min, 1.0, cfg.rho_grid_points);
    let best_of = |pts: &[f64]| {
        pts.iter()
            .enumerate()
            .filter_map(|(i, &rho)| tight_cost(sys, agent, rho).map(|c| (i, c)))
            .fold(None, |best: Option<(usize, BsCost)>, cur| match best {
                Some(b) if b.1.e_bs <= cur.1.e_bs => Some(b),
                _ => Some(cur),
            })
    };
    let (i, coarse_best) = best_of(&coarse).ok_or(SolveError::EmptyRegion)?;
    let lo = coarse[i.saturating_sub(1)];
    let hi = coarse[(i + 1).min(coarse.len() - 1)];
    let fine = log_grid(lo, hi, cfg.rho_grid_points);
    let cost = match best_of(&fine) {
        Some((_, c)) if c.e_bs < coarse_best.e_bs => c,
        _ => coarse_best,
    };
    Ok(GridSolution {
        rho: cost.rho,
        power_w: cost.power_w,
        energy: cost.e_bs,
        cost,
    })
}

/// Whether the region edges are tight: admissible at `lo`/`hi`, inadmissible
/// just beyond them unless the edge is `ρ_min` or `1`.
pub fn region_edges_tight(sys: &SystemParams, agent: &AgentProfile, rel_step: f64) -> Result<bool, SolveError> {
    let region = feasible_region(sys, agent)?;
    if region.empty {
        let probes = log_grid(sys.rho_min, 1.0, 2000);
        return Ok(probes.iter().all(|&r| tight_cost(sys, agent, r).is_none()));
    }
    let inside = tight_cost(sys, agent, region.lo).is_some() && tight_cost(sys, agent, region.hi).is_some();
    let below = region.lo * (1.0 - rel_step);
    let above = region.hi * (1.0 + rel_step);
    let lo_tight = below < sys.rho_min || tight_cost(sys, agent, below).is_none();
    let hi_tight = above > 1.0 || tight_cost(sys, agent, above).is_none();
    Ok(inside && lo_tight && hi_tight)
}

/// Energy along a power sweep `[p_tight, P_max]` at fixed `ρ`.
pub fn power_sweep(sys: &SystemParams, agent: &AgentProfile, rho: f64, cfg: &OracleConfig) -> Result<Vec<(f64, f64)>, SolveError> {
    let p_tight = tight_power(sys, agent, rho).ok_or(SolveError::EmptyRegion)?;
    if p_tight > sys.p_max_w {
        return Err(SolveError::EmptyRegion);
    }
    let n = cfg.power_grid_points;
    (0..n)
        .map(|i| {
            let p = p_tight + (sys.p_max_w - p_tight) * i as f64 / (n - 1) as f64;
            Ok((p, BsCost::evaluate(sys, agent, rho, p)?.e_bs))
        })
        .collect()
}

/// Best mode vector by exhaustive enumeration over agents carrying a
/// collaborative decision.
pub fn enumerate_modes(
    sys: &SystemParams,
    candidates: &[AgentEvaluation],
    policy: &SelectionPolicy,
    cfg: &OracleConfig,
) -> Result<NetworkSolution, SolveError> {
    let n = candidates.len();
    let limit = cfg.subset_max_n.min(OracleConfig::MAX_SUBSET_N);
    if n > limit {
        return Err(SolveError::TooLarge { n, limit });
    }
    let eligible: Vec<usize> = (0..n).filter(|&i| candidates[i].bs.is_some()).collect();
    let m = eligible.len();
    let scales: Vec<usize> = policy.candidate_scales(m).collect();

    let mut per_agent: Vec<AgentEvaluation> = candidates.iter().map(|e| e.with_mode(Mode::Local)).collect();
    let mut best: Option<(f64, usize, u32)> = None;
    let mut best_by_k: Vec<Option<f64>> = vec![None; m + 1];
    for mask in 0u32..(1u32 << m) {
        let k = mask.count_ones() as usize;
        if !scales.contains(&k) {
            continue;
        }
        for (bit, &i) in eligible.iter().enumerate() {
            per_agent[i].mode = if mask >> bit & 1 == 1 { Mode::Collaborative } else { Mode::Local };
        }
        let energy = network_energy(sys, &per_agent, k)?;
        if best_by_k[k].is_none_or(|e| energy < e) {
            best_by_k[k] = Some(energy);
        }
        if best.is_none_or(|(e, bk, _)| energy < e || (energy == e && k < bk)) {
            best = Some((energy, k, mask));
        }
    }

    let (total_energy, k_star, mask) = best.unwrap_or((0.0, 0, 0));
    for (bit, &i) in eligible.iter().enumerate() {
        per_agent[i].mode = if mask >> bit & 1 == 1 { Mode::Collaborative } else { Mode::Local };
    }
    let (local_latency_violations, feasible) = latency_audit(sys, &per_agent, policy);
    Ok(NetworkSolution {
        modes: per_agent.iter().map(|e| e.mode).collect(),
        k_star,
        total_energy,
        per_agent,
        m,
        ranking: Vec::new(),
        objective_trace: best_by_k
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.map(|energy| ScaleCandidate { k, energy }))
            .collect(),
        local_latency_violations,
        feasible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub gap_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub agreed: bool,
    /// Enumeration optimum over the solver's own per-agent decisions.
    pub oracle_energy: f64,
    /// Enumeration optimum over grid-searched per-agent decisions.
    pub grid_oracle_energy: f64,
    pub solver_energy: f64,
    pub worst_case_gap_rel: f64,
    pub checks: Vec<OracleCheck>,
    /// The trial's agents, kept only when some check failed.
    pub counterexample: Option<Vec<AgentProfile>>,
}

fn rel_gap(solver: f64, oracle: f64) -> f64 {
    (solver - oracle) / oracle.abs().max(f64::MIN_POSITIVE)
}

/// Check one trial end to end: per-agent grid search, enumeration on the
/// solver's per-agent decisions, and enumeration on grid-solved decisions.
pub fn verify(
    sys: &SystemParams,
    agents: &[AgentProfile],
    policy: &SelectionPolicy,
    cfg: &OracleConfig,
) -> Result<OracleVerdict, SolveError> {
    let (_, evals) = gated_candidates(sys, agents)?;
    let solution = select_scale(sys, &evals, policy)?;
    let mut checks = Vec::new();

    let mut grid_evals = evals.clone();
    let mut worst_agent = f64::NEG_INFINITY;
    for (i, (agent, eval)) in agents.iter().zip(&evals).enumerate() {
        let Some(bs) = eval.bs else { continue };
        let grid = grid_solve_agent(sys, agent, cfg)?;
        grid_evals[i].bs = Some(grid.cost);
        let gap = rel_gap(bs.e_bs, grid.energy);
        worst_agent = worst_agent.max(gap);
        let sweep = power_sweep(sys, agent, bs.rho, cfg)?;
        let monotone = sweep.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12));
        checks.push(OracleCheck {
            name: format!("agent {i}: latency-tight power is optimal"),
            passed: monotone,
            gap_rel: 0.0,
        });
        checks.push(OracleCheck {
            name: format!("agent {i}: solver energy <= grid minimum"),
            passed: gap <= cfg.tolerance_agent,
            gap_rel: gap,
        });
    }
    for (i, agent) in agents.iter().enumerate() {
        if evals[i].bs.is_some() {
            checks.push(OracleCheck {
                name: format!("agent {i}: region edges are tight"),
                passed: region_edges_tight(sys, agent, 1e-6)?,
                gap_rel: 0.0,
            });
        }
    }

    let exact = enumerate_modes(sys, &evals, policy, cfg)?;
    let discrete_gap = rel_gap(solution.total_energy, exact.total_energy);
    checks.push(OracleCheck {
        name: "greedy scale selection matches enumeration".into(),
        passed: discrete_gap.abs() <= cfg.tolerance_discrete,
        gap_rel: discrete_gap,
    });

    let gridded = enumerate_modes(sys, &grid_evals, policy, cfg)?;
    let e2e_gap = rel_gap(solution.total_energy, gridded.total_energy);
    checks.push(OracleCheck {
        name: "end-to-end matches grid + enumeration".into(),
        passed: e2e_gap <= cfg.tolerance_agent && e2e_gap.abs() <= cfg.tolerance_continuous,
        gap_rel: e2e_gap,
    });

    let agreed = checks.iter().all(|c| c.passed);
    let worst_case_gap_rel = checks
        .iter()
        .map(|c| c.gap_rel)
        .fold(worst_agent.max(0.0), f64::max);
    Ok(OracleVerdict {
        agreed,
        oracle_energy: exact.total_energy,
        grid_oracle_energy: gridded.total_energy,
        solver_energy: solution.total_energy,
        worst_case_gap_rel,
        checks,
        counterexample: (!agreed).then(|| agents.to_vec()),
    })
}
