//! Per-agent compression-ratio and transmit-power optimisation.
//!
//! At the optimum the deadline is tight, so the transmit power is a function of
//! the compression ratio alone and the collaborative-mode energy reduces to a
//! strictly convex function of `ρ`:
//!
//! ```text
//! E(ρ) = -κ·α·D·f²·ln ρ + (σ²/|h|²)·t(ρ)·(2^{ρD/(B·t(ρ))} - 1),   t(ρ) = T₀ + (αD/f)·ln ρ
//! ```
//!
//! The admissible interval of `ρ` is bounded by `ρ_min`, by `1`, and by the
//! two roots of `g(ρ) = T₀ + (αD/f)·ln ρ - ρD/R_max`, where `R_max` is the
//! rate at full power. `g` is strictly concave with its peak at
//! `ρ̂ = α·R_max/f`, so each root is isolated by bisection on one side of the
//! peak. Bisection rather than Newton: it converges unconditionally on a
//! concave `g`, at the cost of ~60 evaluations per root.
//!
//! The optimum is then located by bisection on the sign of `ρ·dE/dρ`
//! ([`stationarity_residual`]), falling back to an endpoint when the sign does
//! not change over the interval.

use serde::{Deserialize, Serialize};

use crate::bisect::{bisect, Bracket, MAX_ITERATIONS};
use crate::error::SolveError;
use crate::model::{achievable_rate, snr, AgentEvaluation, AgentProfile, BsCost, LinkState, SystemParams};

/// Admissible compression ratios for the collaborative mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
    /// `max(ρ_min, exp(-T₀·f/(α·D)))`.
    pub rho_inf: f64,
    /// Roots of the full-power deadline function; `None` when it never reaches zero.
    pub rho_pmax_lo: Option<f64>,
    pub rho_pmax_hi: Option<f64>,
}

impl FeasibleRegion {
    pub fn contains(&self, rho: f64) -> bool {
        !self.empty && rho >= self.lo && rho <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityPoint {
    pub rho_zero: f64,
    pub z: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSolution {
    pub link: LinkState,
    pub region: FeasibleRegion,
    /// Present only when the residual changes sign inside the region.
    pub stationary: Option<StationarityPoint>,
    pub evaluation: AgentEvaluation,
}

impl AgentSolution {
    pub fn bs_feasible(&self) -> bool {
        self.evaluation.bs.is_some()
    }

    pub fn rho_star(&self) -> Option<f64> {
        self.evaluation.bs.map(|b| b.rho)
    }

    pub fn p_star(&self) -> Option<f64> {
        self.evaluation.bs.map(|b| b.power_w)
    }

    /// `E_local - E_BS*`; `None` when the agent has no collaborative-mode solution.
    pub fn delta_save(&self) -> Option<f64> {
        self.evaluation.delta_save()
    }
}

/// Time left for transmission once compression to `ρ` is done: `T₀ - t_comp(ρ)`.
/// May be negative.
pub fn residual_comm_time(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<f64, SolveError> {
    let t_comp = crate::model::compression_time(agent, rho)?;
    Ok(sys.deadline_s - t_comp)
}

/// Deadline slack at full power with `ln ρ = u`.
fn deadline_slack(sys: &SystemParams, agent: &AgentProfile, rate: f64, u: f64) -> f64 {
    sys.deadline_s + agent.compression_scale_s() * u - u.exp() * agent.data_bits / rate
}

pub fn feasible_region(sys: &SystemParams, agent: &AgentProfile) -> Result<FeasibleRegion, SolveError> {
    let rate = achievable_rate(sys, agent, sys.p_max_w)?;
    region_for_rate(sys, agent, rate)
}

/// Interval of `ρ` meeting the deadline when transmitting at a fixed `rate`.
pub(crate) fn region_for_rate(sys: &SystemParams, agent: &AgentProfile, rate: f64) -> Result<FeasibleRegion, SolveError> {
    let c = agent.compression_scale_s();
    let rho_inf = sys.rho_min.max((-sys.deadline_s / c).exp());
    let empty = FeasibleRegion {
        lo: rho_inf,
        hi: 1.0,
        empty: true,
        rho_inf,
        rho_pmax_lo: None,
        rho_pmax_hi: None,
    };
    if !(rate > 0.0) {
        return Ok(empty);
    }

    let g = |u: f64| deadline_slack(sys, agent, rate, u);
    let u_peak = (agent.complexity * rate / agent.cpu_hz).ln();
    if g(u_peak) < 0.0 {
        return Ok(empty);
    }

    // Below exp(-T₀/c) the slack is negative regardless of rate.
    let left = bisect(g, Bracket { neg: -sys.deadline_s / c - 1.0, pos: u_peak }, "left full-power root")?;

    let mut step = 1.0;
    let mut far = u_peak + step;
    let mut expansions = 0;
    while g(far) >= 0.0 {
        step *= 2.0;
        far = u_peak + step;
        expansions += 1;
        if expansions > MAX_ITERATIONS {
            return Err(SolveError::NotConverged {
                what: "right full-power root bracket",
                iterations: MAX_ITERATIONS,
            });
        }
    }
    let right = bisect(g, Bracket { neg: far, pos: u_peak }, "right full-power root")?;

    // `pos` ends are on the feasible side of each root.
    let rho_l = left.pos.exp();
    let rho_r = right.pos.exp();
    let lo = rho_inf.max(rho_l);
    let hi = rho_r.min(1.0);
    Ok(FeasibleRegion {
        lo,
        hi,
        empty: lo > hi,
        rho_inf,
        rho_pmax_lo: Some(rho_l),
        rho_pmax_hi: Some(rho_r),
    })
}

/// Latency-tight transmit power at compression `ρ`:
/// `(σ²/|h|²)·(2^{ρD/(B·t_comm)} - 1)` with `t_comm = T₀ - t_comp(ρ)`.
pub fn latency_tight_power(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<f64, SolveError> {
    let t_comm = positive_comm_time(sys, agent, rho)?;
    let z = rho * agent.data_bits / (sys.bandwidth_hz * t_comm);
    Ok(sys.noise_w / agent.channel_gain * pow2_m1(z))
}

/// `2^z - 1` without cancellation for small `z`.
fn pow2_m1(z: f64) -> f64 {
    (z * std::f64::consts::LN_2).exp_m1()
}

fn positive_comm_time(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<f64, SolveError> {
    let t = residual_comm_time(sys, agent, rho)?;
    if t > 0.0 {
        Ok(t)
    } else {
        Err(crate::error::ModelError::Domain {
            name: "rho",
            value: rho,
            reason: "leaves no time for transmission",
        }
        .into())
    }
}

/// Collaborative-mode energy along the latency-tight curve.
pub fn tight_energy(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<f64, SolveError> {
    let t = positive_comm_time(sys, agent, rho)?;
    let z = rho * agent.data_bits / (sys.bandwidth_hz * t);
    let comp = -sys.switched_cap * agent.complexity * agent.data_bits * agent.cpu_hz.powi(2) * rho.ln();
    let comm = sys.noise_w / agent.channel_gain * t * pow2_m1(z);
    Ok(comp + comm)
}

fn residual_parts(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<(f64, f64, f64), SolveError> {
    let t = positive_comm_time(sys, agent, rho)?;
    let c = agent.compression_scale_s();
    let z = rho * agent.data_bits / (sys.bandwidth_hz * t);
    let two_z = z.exp2();
    let lhs = sys.noise_w / agent.channel_gain
        * (c * pow2_m1(z) + z * two_z * std::f64::consts::LN_2 * (t - c));
    let rhs = sys.switched_cap * agent.complexity * agent.data_bits * agent.cpu_hz.powi(2);
    Ok((lhs, rhs, z))
}

/// Signed optimality residual `ρ·dE/dρ`: the channel side
/// `(σ²/|h|²)[(αD/f)(2^z - 1) + z·2^z·ln2·(t_comm - αD/f)]` minus the compute
/// side `κ·α·D·f²`. Negative where the energy still decreases in `ρ`.
pub fn stationarity_residual(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<f64, SolveError> {
    let (lhs, rhs, _) = residual_parts(sys, agent, rho)?;
    Ok(lhs - rhs)
}

/// Magnitude of the two sides of the stationarity equation, for scaling comparisons.
pub fn stationarity_scale(sys: &SystemParams, agent: &AgentProfile, rho: f64) -> Result<f64, SolveError> {
    let (lhs, rhs, _) = residual_parts(sys, agent, rho)?;
    Ok(lhs.abs() + rhs.abs())
}

pub fn solve_agent(sys: &SystemParams, agent: &AgentProfile) -> Result<AgentSolution, SolveError> {
    let link = snr(sys, agent);
    let region = feasible_region(sys, agent)?;
    if region.empty {
        return Ok(AgentSolution {
            link,
            region,
            stationary: None,
            evaluation: AgentEvaluation::new(sys, agent, None),
        });
    }

    let (rho_star, stationary) = optimal_rho(sys, agent, &region)?;
    let p_star = latency_tight_power(sys, agent, rho_star)?;
    let cost = BsCost::evaluate(sys, agent, rho_star, p_star)?;
    Ok(AgentSolution {
        link,
        region,
        stationary,
        evaluation: AgentEvaluation::new(sys, agent, Some(cost)),
    })
}

fn optimal_rho(
    sys: &SystemParams,
    agent: &AgentProfile,
    region: &FeasibleRegion,
) -> Result<(f64, Option<StationarityPoint>), SolveError> {
    let (lo, hi) = (region.lo, region.hi);
    if lo == hi {
        return Ok((lo, None));
    }
    let r_lo = stationarity_residual(sys, agent, lo)?;
    let r_hi = stationarity_residual(sys, agent, hi)?;
    if (r_lo < 0.0) == (r_hi < 0.0) {
        let e_lo = tight_energy(sys, agent, lo)?;
        let e_hi = tight_energy(sys, agent, hi)?;
        return Ok((if e_hi < e_lo { hi } else { lo }, None));
    }

    let f = |rho: f64| stationarity_residual(sys, agent, rho).unwrap_or(f64::NAN);
    let bracket = if r_lo < 0.0 {
        Bracket { neg: lo, pos: hi }
    } else {
        Bracket { neg: hi, pos: lo }
    };
    let b = bisect(f, bracket, "stationary compression ratio")?;
    let rho_zero = b.midpoint().clamp(lo, hi);
    let (lhs, rhs, z) = residual_parts(sys, agent, rho_zero)?;
    Ok((
        rho_zero,
        Some(StationarityPoint {
            rho_zero,
            z,
            residual: lhs - rhs,
        }),
    ))
}

/// Best collaborative-mode decision with the transmit power pinned to `power_w`.
///
/// With a fixed rate `R` the energy `κ·α·D·f²·ln(1/ρ) + p·ρ·D/R` is minimised at
/// `ρ = κ·α·f²·R/p`, clipped to the deadline-feasible interval at that rate.
pub fn solve_agent_fixed_power(
    sys: &SystemParams,
    agent: &AgentProfile,
    power_w: f64,
) -> Result<Option<BsCost>, SolveError> {
    if power_w > sys.p_max_w {
        return Ok(None);
    }
    let rate = achievable_rate(sys, agent, power_w)?;
    let region = region_for_rate(sys, agent, rate)?;
    if region.empty {
        return Ok(None);
    }
    let rho_zero = sys.switched_cap * agent.complexity * agent.cpu_hz.powi(2) * rate / power_w;
    let rho = rho_zero.clamp(region.lo, region.hi);
    Ok(Some(BsCost::evaluate(sys, agent, rho, power_w)?))
}
