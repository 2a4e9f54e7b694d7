//! The proposed joint design and the four comparison baselines.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::{network_energy, snr, AgentEvaluation, AgentProfile, BsCost, Mode, SystemParams};
use crate::select::{gated_candidates, latency_audit, select_scale, SelectionPolicy};
use crate::solver::solve_agent_fixed_power;

use super::config::Baselines;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Proposed,
    SnrBased,
    LocalOnly,
    #[serde(rename = "no-semcom")]
    NoSemCom,
    FixedTxPower,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Proposed,
        Strategy::SnrBased,
        Strategy::LocalOnly,
        Strategy::NoSemCom,
        Strategy::FixedTxPower,
    ];

    /// Identifier used in CSV files and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::SnrBased => "snr-based",
            Strategy::LocalOnly => "local-only",
            Strategy::NoSemCom => "no-semcom",
            Strategy::FixedTxPower => "fixed-tx-power",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Proposed => "Proposed",
            Strategy::SnrBased => "SNR-Based",
            Strategy::LocalOnly => "Local Only",
            Strategy::NoSemCom => "No SemCom",
            Strategy::FixedTxPower => "Fixed Tx Power",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|x| x.id() == s.trim())
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub energy: f64,
    pub k: usize,
    /// Agents that passed the SNR gate but could not meet the deadline under
    /// this strategy's collaborative-mode rule.
    pub fallbacks: usize,
    pub feasible: bool,
}

/// Per-trial inputs shared by all strategies.
pub struct TrialContext<'a> {
    pub sys: &'a SystemParams,
    pub agents: &'a [AgentProfile],
    pub policy: &'a SelectionPolicy,
    pub baselines: &'a Baselines,
    gated: Option<Vec<AgentEvaluation>>,
}

impl<'a> TrialContext<'a> {
    pub fn new(sys: &'a SystemParams, agents: &'a [AgentProfile], policy: &'a SelectionPolicy, baselines: &'a Baselines) -> Self {
        Self {
            sys,
            agents,
            policy,
            baselines,
            gated: None,
        }
    }

    fn gated(&mut self) -> Result<&[AgentEvaluation], SolveError> {
        if self.gated.is_none() {
            self.gated = Some(gated_candidates(self.sys, self.agents)?.1);
        }
        Ok(self.gated.as_deref().unwrap())
    }

    pub fn run(&mut self, strategy: Strategy) -> Result<StrategyOutcome, SolveError> {
        let (sys, policy) = (self.sys, self.policy);
        match strategy {
            Strategy::Proposed => {
                let s = select_scale(sys, self.gated()?, policy)?;
                Ok(StrategyOutcome {
                    strategy,
                    energy: s.total_energy,
                    k: s.k_star,
                    fallbacks: 0,
                    feasible: s.feasible,
                })
            }
            Strategy::SnrBased => {
                let evals = self.gated()?.to_vec();
                let fallbacks = self.gate_passes() - evals.iter().filter(|e| e.bs.is_some()).count();
                all_or_nothing(strategy, sys, evals, policy, fallbacks)
            }
            Strategy::LocalOnly => {
                let evals = self.agents.iter().map(|a| AgentEvaluation::new(sys, a, None)).collect();
                all_or_nothing(strategy, sys, evals, policy, 0)
            }
            Strategy::NoSemCom => self.per_agent_rule(strategy, |sys, a| Ok(raw_upload(sys, a))),
            Strategy::FixedTxPower => {
                let p = self.baselines.fixed_tx_power_w;
                self.per_agent_rule(strategy, move |sys, a| solve_agent_fixed_power(sys, a, p))
            }
        }
    }

    fn gate_passes(&self) -> usize {
        self.agents.iter().filter(|a| snr(self.sys, a).feasible).count()
    }

    fn per_agent_rule<F>(&self, strategy: Strategy, rule: F) -> Result<StrategyOutcome, SolveError>
    where
        F: Fn(&SystemParams, &AgentProfile) -> Result<Option<BsCost>, SolveError>,
    {
        let mut fallbacks = 0;
        let mut evals = Vec::with_capacity(self.agents.len());
        for a in self.agents {
            let bs = if snr(self.sys, a).feasible {
                let bs = rule(self.sys, a)?;
                fallbacks += usize::from(bs.is_none());
                bs
            } else {
                None
            };
            evals.push(AgentEvaluation::new(self.sys, a, bs));
        }
        all_or_nothing(strategy, self.sys, evals, self.policy, fallbacks)
    }
}

/// Uncompressed upload at the latency-tight power, if within the power cap.
fn raw_upload(sys: &SystemParams, agent: &AgentProfile) -> Option<BsCost> {
    let spectral = agent.data_bits / (sys.bandwidth_hz * sys.deadline_s);
    let p = sys.noise_w / agent.channel_gain * (spectral * std::f64::consts::LN_2).exp_m1();
    if p > sys.p_max_w {
        return None;
    }
    BsCost::evaluate(sys, agent, 1.0, p).ok()
}

/// Every agent with a collaborative decision collaborates, provided there are
/// at least `min_k` of them; otherwise everyone stays local.
fn all_or_nothing(
    strategy: Strategy,
    sys: &SystemParams,
    mut evals: Vec<AgentEvaluation>,
    policy: &SelectionPolicy,
    fallbacks: usize,
) -> Result<StrategyOutcome, SolveError> {
    let m = evals.iter().filter(|e| e.bs.is_some()).count();
    let k = if m >= policy.min_k() { m } else { 0 };
    for e in &mut evals {
        e.mode = if k > 0 && e.bs.is_some() { Mode::Collaborative } else { Mode::Local };
    }
    let energy = network_energy(sys, &evals, k)?;
    let (_, feasible) = latency_audit(sys, &evals, policy);
    Ok(StrategyOutcome {
        strategy,
        energy,
        k,
        fallbacks,
        feasible,
    })
}

/// Run one strategy on one set of agents.
pub fn run_strategy(
    strategy: Strategy,
    sys: &SystemParams,
    agents: &[AgentProfile],
    policy: &SelectionPolicy,
    baselines: &Baselines,
) -> Result<StrategyOutcome, SolveError> {
    TrialContext::new(sys, agents, policy, baselines).run(strategy)
}
