//! Closed-form system model: link gate, processing times, energies and the
//! universal-scalability-law (USL) collaboration gain.
//!
//! Everything here is a pure function of immutable parameter types. Units are
//! strict SI throughout (bits, Hz, W, J, s).

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Network-wide constants shared by every agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Uplink channel bandwidth `B` (Hz).
    pub bandwidth_hz: f64,
    /// Receiver noise power `σ²` (W).
    pub noise_w: f64,
    /// Transmit power cap `P_max` shared by all agents (W).
    pub p_max_w: f64,
    /// SNR threshold `γ_th` gating the collaborative mode.
    pub snr_threshold: f64,
    /// Processing deadline `T₀` (s).
    pub deadline_s: f64,
    /// Smallest admissible semantic compression ratio `ρ_min`.
    pub rho_min: f64,
    /// Baseline task-execution energy `Q` without collaboration (J).
    pub base_task_energy_j: f64,
    /// USL compressible share `β`, in (0, 1).
    pub usl_beta: f64,
    /// USL contention coefficient `ξ ≥ 0`.
    pub usl_xi: f64,
    /// Effective switched capacitance `κ`.
    pub switched_cap: f64,
    /// CPU cycles per raw bit in local processing `τ`.
    pub local_cycles_per_bit: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 1e6,
            noise_w: 4e-11,
            p_max_w: 1.0,
            snr_threshold: 1.0,
            deadline_s: 0.7,
            rho_min: 0.1,
            base_task_energy_j: 0.1,
            usl_beta: 0.4,
            usl_xi: 0.008,
            switched_cap: 1e-28,
            local_cycles_per_bit: 100.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_w", self.noise_w)?;
        positive("p_max_w", self.p_max_w)?;
        positive("snr_threshold", self.snr_threshold)?;
        positive("deadline_s", self.deadline_s)?;
        positive("base_task_energy_j", self.base_task_energy_j)?;
        positive("switched_cap", self.switched_cap)?;
        positive("local_cycles_per_bit", self.local_cycles_per_bit)?;
        if !(self.rho_min > 0.0 && self.rho_min <= 1.0) {
            return Err(ModelError::invalid("rho_min", self.rho_min, "must lie in (0, 1]"));
        }
        if !(self.usl_beta > 0.0 && self.usl_beta < 1.0) {
            return Err(ModelError::invalid("usl_beta", self.usl_beta, "must lie in (0, 1)"));
        }
        if !(self.usl_xi >= 0.0 && self.usl_xi.is_finite()) {
            return Err(ModelError::invalid("usl_xi", self.usl_xi, "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Per-agent workload, compute and channel description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    /// Raw sensory data size `D_i` (bits).
    pub data_bits: f64,
    /// Semantic extraction complexity `α_i` (cycles/bit).
    pub complexity: f64,
    /// Local CPU frequency `f_i` (Hz).
    pub cpu_hz: f64,
    /// Channel power gain `|h_i|²`.
    pub channel_gain: f64,
    /// Distance to the base station (m); informational only.
    pub distance_m: f64,
}

impl AgentProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("data_bits", self.data_bits)?;
        positive("complexity", self.complexity)?;
        positive("cpu_hz", self.cpu_hz)?;
        positive("channel_gain", self.channel_gain)?;
        Ok(())
    }

    /// `α·D/f`: compression time per unit of `ln(1/ρ)`.
    pub fn compression_scale_s(&self) -> f64 {
        self.complexity * self.data_bits / self.cpu_hz
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::invalid(name, v, "must be finite and > 0"))
    }
}

/// Operating mode `x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Local,
    Collaborative,
}

impl Mode {
    pub fn bit(self) -> u8 {
        match self {
            Mode::Local => 0,
            Mode::Collaborative => 1,
        }
    }
}

/// Max-power SNR and the resulting gate `a_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub snr: f64,
    pub feasible: bool,
}

pub fn snr(sys: &SystemParams, agent: &AgentProfile) -> LinkState {
    let snr = sys.p_max_w * agent.channel_gain / sys.noise_w;
    LinkState {
        snr,
        feasible: snr >= sys.snr_threshold,
    }
}

fn check_rho(rho: f64) -> Result<(), ModelError> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(ModelError::invalid("rho", rho, "must lie in (0, 1]"))
    }
}

pub fn compression_time(agent: &AgentProfile, rho: f64) -> Result<f64, ModelError> {
    check_rho(rho)?;
    Ok(-agent.compression_scale_s() * rho.ln())
}

pub fn achievable_rate(sys: &SystemParams, agent: &AgentProfile, power_w: f64) -> Result<f64, ModelError> {
    if !(power_w > 0.0 && power_w.is_finite()) {
        return Err(ModelError::invalid("power_w", power_w, "must be finite and > 0"));
    }
    Ok(sys.bandwidth_hz * (power_w * agent.channel_gain / sys.noise_w).ln_1p() / std::f64::consts::LN_2)
}

pub fn comm_time(agent: &AgentProfile, rho: f64, rate_bps: f64) -> Result<f64, ModelError> {
    check_rho(rho)?;
    if !(rate_bps > 0.0) {
        return Err(ModelError::invalid("rate_bps", rate_bps, "must be > 0"));
    }
    Ok(rho * agent.data_bits / rate_bps)
}

pub fn local_time(sys: &SystemParams, agent: &AgentProfile) -> f64 {
    sys.local_cycles_per_bit * agent.data_bits / agent.cpu_hz
}

/// Collaborative-mode processing energies for a candidate `(ρ, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsEnergy {
    pub e_comp: f64,
    pub e_comm: f64,
    pub e_bs: f64,
}

pub fn bs_energy(sys: &SystemParams, agent: &AgentProfile, rho: f64, power_w: f64) -> Result<BsEnergy, ModelError> {
    let rate = achievable_rate(sys, agent, power_w)?;
    let t_comm = comm_time(agent, rho, rate)?;
    let e_comp = sys.switched_cap * agent.complexity * agent.data_bits * agent.cpu_hz.powi(2) * -rho.ln();
    let e_comm = power_w * t_comm;
    Ok(BsEnergy {
        e_comp,
        e_comm,
        e_bs: e_comp + e_comm,
    })
}

pub fn local_energy(sys: &SystemParams, agent: &AgentProfile) -> f64 {
    sys.switched_cap * sys.local_cycles_per_bit * agent.data_bits * agent.cpu_hz.powi(2)
}

/// USL collaboration gain `G(K) = (1-β) + β/K + ξ(K-1)`.
pub fn usl_gain(sys: &SystemParams, k: usize) -> Result<f64, ModelError> {
    if k == 0 {
        return Err(ModelError::invalid("k", 0.0, "collaboration scale must be >= 1"));
    }
    let k = k as f64;
    Ok((1.0 - sys.usl_beta) + sys.usl_beta / k + sys.usl_xi * (k - 1.0))
}

/// Task energy saved by a size-`K` collaboration, `K·Q·(1 - G(K))`; zero for `K = 0`.
pub fn psi(sys: &SystemParams, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let g = usl_gain(sys, k).expect("k >= 1");
    k as f64 * sys.base_task_energy_j * (1.0 - g)
}

pub fn task_energy(sys: &SystemParams, mode: Mode, k: usize) -> Result<f64, ModelError> {
    match mode {
        Mode::Local => Ok(sys.base_task_energy_j),
        Mode::Collaborative => Ok(sys.base_task_energy_j * usl_gain(sys, k)?),
    }
}

/// Collaborative-mode times and energies at a fixed decision `(ρ, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsCost {
    pub rho: f64,
    pub power_w: f64,
    pub compressed_bits: f64,
    pub t_comp: f64,
    pub t_comm: f64,
    pub t_bs: f64,
    pub e_comp: f64,
    pub e_comm: f64,
    pub e_bs: f64,
}

impl BsCost {
    pub fn evaluate(sys: &SystemParams, agent: &AgentProfile, rho: f64, power_w: f64) -> Result<Self, ModelError> {
        let t_comp = compression_time(agent, rho)?;
        let t_comm = comm_time(agent, rho, achievable_rate(sys, agent, power_w)?)?;
        let energy = bs_energy(sys, agent, rho, power_w)?;
        Ok(Self {
            rho,
            power_w,
            compressed_bits: rho * agent.data_bits,
            t_comp,
            t_comm,
            t_bs: t_comp + t_comm,
            e_comp: energy.e_comp,
            e_comm: energy.e_comm,
            e_bs: energy.e_bs,
        })
    }
}

/// All derived per-agent quantities for one candidate decision.
///
/// `bs` is `None` when the agent has no admissible collaborative-mode decision;
/// such an agent can only run locally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentEvaluation {
    pub mode: Mode,
    pub bs: Option<BsCost>,
    pub t_local: f64,
    pub e_local: f64,
}

impl AgentEvaluation {
    pub fn new(sys: &SystemParams, agent: &AgentProfile, bs: Option<BsCost>) -> Self {
        Self {
            mode: Mode::Local,
            bs,
            t_local: local_time(sys, agent),
            e_local: local_energy(sys, agent),
        }
    }

    /// Energy-saving potential `E_local - E_BS`; may be negative.
    pub fn delta_save(&self) -> Option<f64> {
        self.bs.map(|b| self.e_local - b.e_bs)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

fn collaboration_count(evals: &[AgentEvaluation]) -> usize {
    evals.iter().filter(|e| e.mode == Mode::Collaborative).count()
}

/// Total network energy in its direct form:
/// `Σ x_i (E_BS + Q·G(K)) + (1 - x_i)(E_local + Q)`.
pub fn network_energy(sys: &SystemParams, evals: &[AgentEvaluation], k: usize) -> Result<f64, ModelError> {
    let count = collaboration_count(evals);
    if count != k {
        return Err(ModelError::Inconsistent { k, count });
    }
    let collab_task = if k == 0 { 0.0 } else { task_energy(sys, Mode::Collaborative, k)? };
    let mut total = 0.0;
    for e in evals {
        total += match e.mode {
            Mode::Local => e.e_local + sys.base_task_energy_j,
            Mode::Collaborative => {
                let bs = e.bs.ok_or(ModelError::MissingBsDecision)?;
                bs.e_bs + collab_task
            }
        };
    }
    Ok(total)
}

/// Same objective rearranged around the all-local baseline:
/// `Σ (E_local + Q) - Ψ(K) - Σ x_i ΔE_i`.
pub fn network_energy_decomposed(sys: &SystemParams, evals: &[AgentEvaluation], k: usize) -> Result<f64, ModelError> {
    let count = collaboration_count(evals);
    if count != k {
        return Err(ModelError::Inconsistent { k, count });
    }
    let baseline: f64 = evals.iter().map(|e| e.e_local + sys.base_task_energy_j).sum();
    let mut savings = 0.0;
    for e in evals.iter().filter(|e| e.mode == Mode::Collaborative) {
        savings += e.delta_save().ok_or(ModelError::MissingBsDecision)?;
    }
    Ok(baseline - psi(sys, k) - savings)
}
