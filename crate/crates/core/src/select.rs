//! Operating-mode selection.
//!
//! For a fixed collaboration scale `K` the USL term `Ψ(K)` is a constant, so the
//! best `K` agents are simply the `K` largest energy-saving potentials. Scanning
//! `K` over the prefix sums of the sorted potentials therefore gives the exact
//! optimum in `O(M log M)`, against `O(2^M)` for subset enumeration.

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::{network_energy, psi, snr, AgentEvaluation, AgentProfile, LinkState, Mode, SystemParams};
use crate::solver::solve_agent;

/// What to do with local-mode agents whose `t_local` exceeds the deadline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalLatencyPolicy {
    /// Local mode is always admissible; the deadline binds the collaborative mode only.
    #[default]
    Ignore,
    /// Mark the solution infeasible.
    Enforce,
    /// Admit, but log a warning.
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionPolicy {
    /// Smallest admissible collaboration scale.
    pub min_k: usize,
    /// Drop the all-local candidate whenever some `K >= min_k` is available.
    pub force_collaboration: bool,
    pub local_latency: LocalLatencyPolicy,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self {
            min_k: 2,
            force_collaboration: false,
            local_latency: LocalLatencyPolicy::Ignore,
        }
    }
}

impl SelectionPolicy {
    pub(crate) fn min_k(&self) -> usize {
        self.min_k.max(1)
    }

    /// Collaboration scales to consider when `m` agents may collaborate.
    pub(crate) fn candidate_scales(&self, m: usize) -> impl Iterator<Item = usize> {
        let collab = self.min_k()..=m;
        let local = !(self.force_collaboration && !collab.is_empty());
        local.then_some(0).into_iter().chain(collab)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedAgent {
    pub agent_index: usize,
    pub delta_save: f64,
    /// Zero-based position in the descending order.
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCandidate {
    pub k: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSolution {
    pub modes: Vec<Mode>,
    pub k_star: usize,
    pub total_energy: f64,
    pub per_agent: Vec<AgentEvaluation>,
    /// Agents with an admissible collaborative-mode decision.
    pub m: usize,
    pub ranking: Vec<RankedAgent>,
    pub objective_trace: Vec<ScaleCandidate>,
    /// Local-mode agents whose raw processing overruns the deadline.
    pub local_latency_violations: usize,
    pub feasible: bool,
}

impl NetworkSolution {
    pub fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn collaborating(&self) -> impl Iterator<Item = usize> + '_ {
        self.modes.iter().enumerate().filter(|(_, m)| **m == Mode::Collaborative).map(|(i, _)| i)
    }
}

/// Descending order of energy-saving potential over agents that can collaborate;
/// ties keep ascending agent index.
pub fn rank_agents(candidates: &[AgentEvaluation]) -> Vec<RankedAgent> {
    let mut ranked: Vec<RankedAgent> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, e)| {
            e.delta_save().map(|d| RankedAgent {
                agent_index: i,
                delta_save: d,
                rank: 0,
            })
        })
        .collect();
    ranked.sort_by(|a, b| b.delta_save.total_cmp(&a.delta_save).then(a.agent_index.cmp(&b.agent_index)));
    for (j, r) in ranked.iter_mut().enumerate() {
        r.rank = j;
    }
    ranked
}

/// Pick the collaboration scale minimising `Σ(E_local + Q) - Ψ(K) - Σ_{j≤K} ΔE_(j)`.
///
/// `candidates[i].bs` must be `None` for every agent barred from collaborating.
/// Ties go to the smaller `K`; `K = 0` is the all-local outcome.
pub fn select_scale(
    sys: &SystemParams,
    candidates: &[AgentEvaluation],
    policy: &SelectionPolicy,
) -> Result<NetworkSolution, SolveError> {
    let ranking = rank_agents(candidates);
    let m = ranking.len();
    let baseline: f64 = candidates.iter().map(|e| e.e_local + sys.base_task_energy_j).sum();

    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    for r in &ranking {
        prefix.push(prefix.last().unwrap() + r.delta_save);
    }

    let mut trace = Vec::new();
    let mut best: Option<ScaleCandidate> = None;
    for k in policy.candidate_scales(m) {
        let energy = baseline - psi(sys, k) - prefix[k];
        let cand = ScaleCandidate { k, energy };
        trace.push(cand);
        if best.is_none_or(|b| energy < b.energy) {
            best = Some(cand);
        }
    }
    let k_star = best.map_or(0, |b| b.k);

    let mut per_agent: Vec<AgentEvaluation> = candidates.iter().map(|e| e.with_mode(Mode::Local)).collect();
    for r in &ranking[..k_star] {
        per_agent[r.agent_index].mode = Mode::Collaborative;
    }
    let total_energy = network_energy(sys, &per_agent, k_star)?;
    let (local_latency_violations, feasible) = latency_audit(sys, &per_agent, policy);

    Ok(NetworkSolution {
        modes: per_agent.iter().map(|e| e.mode).collect(),
        k_star,
        total_energy,
        per_agent,
        m,
        ranking,
        objective_trace: trace,
        local_latency_violations,
        feasible,
    })
}

pub(crate) fn latency_audit(sys: &SystemParams, per_agent: &[AgentEvaluation], policy: &SelectionPolicy) -> (usize, bool) {
    let violations = per_agent
        .iter()
        .filter(|e| e.mode == Mode::Local && e.t_local > sys.deadline_s)
        .count();
    match policy.local_latency {
        LocalLatencyPolicy::Ignore => (violations, true),
        LocalLatencyPolicy::Warn => {
            if violations > 0 {
                log::warn!("{violations} local-mode agents exceed the {} s deadline", sys.deadline_s);
            }
            (violations, true)
        }
        LocalLatencyPolicy::Enforce => (violations, violations == 0),
    }
}

/// Per-agent evaluations after the SNR gate: agents below threshold or with an
/// empty compression region carry no collaborative-mode decision.
pub fn gated_candidates(
    sys: &SystemParams,
    agents: &[AgentProfile],
) -> Result<(Vec<LinkState>, Vec<AgentEvaluation>), SolveError> {
    let mut links = Vec::with_capacity(agents.len());
    let mut evals = Vec::with_capacity(agents.len());
    for agent in agents {
        agent.validate()?;
        let link = snr(sys, agent);
        let eval = if link.feasible {
            solve_agent(sys, agent)?.evaluation
        } else {
            AgentEvaluation::new(sys, agent, None)
        };
        links.push(link);
        evals.push(eval);
    }
    Ok((links, evals))
}

/// Joint resource allocation and mode selection for one collaboration round.
pub fn solve_network(
    sys: &SystemParams,
    agents: &[AgentProfile],
    policy: &SelectionPolicy,
) -> Result<NetworkSolution, SolveError> {
    let (_, evals) = gated_candidates(sys, agents)?;
    select_scale(sys, &evals, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BsCost;
    use approx::assert_relative_eq;

    fn with_savings(sys: &SystemParams, savings: &[Option<f64>]) -> Vec<AgentEvaluation> {
        let agent = AgentProfile {
            data_bits: 1e7,
            complexity: 10.0,
            cpu_hz: 1e9,
            channel_gain: 1e-9,
            distance_m: 0.0,
        };
        savings
            .iter()
            .map(|s| {
                let mut e = AgentEvaluation::new(sys, &agent, None);
                e.bs = s.map(|d| {
                    let e_bs = e.e_local - d;
                    BsCost {
                        rho: 0.5,
                        power_w: 0.1,
                        compressed_bits: 5e6,
                        t_comp: 0.1,
                        t_comm: 0.6,
                        t_bs: 0.7,
                        e_comp: e_bs / 2.0,
                        e_comm: e_bs / 2.0,
                        e_bs,
                    }
                });
                e
            })
            .collect()
    }

    #[test]
    fn ranking_order_and_ties() {
        let sys = SystemParams::default();
        let r = rank_agents(&with_savings(&sys, &[Some(0.02), Some(0.05), Some(-0.01)]));
        assert_eq!(r.iter().map(|r| r.agent_index).collect::<Vec<_>>(), vec![1, 0, 2]);
        assert_eq!(r.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![0, 1, 2]);

        let r = rank_agents(&with_savings(&sys, &[Some(0.03); 4]));
        assert_eq!(r.iter().map(|r| r.agent_index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);

        let r = rank_agents(&with_savings(&sys, &[None, Some(0.01), None]));
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].agent_index, 1);
        assert!(rank_agents(&[]).is_empty());
    }

    #[test]
    fn single_feasible_agent_stays_local() {
        let sys = SystemParams::default();
        let evals = with_savings(&sys, &[None, Some(0.05), None]);
        let s = select_scale(&sys, &evals, &SelectionPolicy::default()).unwrap();
        assert_eq!(s.k_star, 0);
        assert_eq!(s.m, 1);
        assert_relative_eq!(s.total_energy, 0.6, max_relative = 1e-12);

        // Solo offload becomes possible with min_k = 1 (Ψ(1) = 0, ΔE > 0).
        let solo = SelectionPolicy {
            min_k: 1,
            ..Default::default()
        };
        let s = select_scale(&sys, &evals, &solo).unwrap();
        assert_eq!(s.k_star, 1);
        assert_relative_eq!(s.total_energy, 0.55, max_relative = 1e-12);
    }

    #[test]
    fn negative_saving_pair_stays_local() {
        // E(2) - E(0) = -Ψ(2) - (0.05 - 0.20) = -0.0384 + 0.15 > 0.
        let sys = SystemParams::default();
        let evals = with_savings(&sys, &[Some(0.05), Some(-0.20)]);
        let s = select_scale(&sys, &evals, &SelectionPolicy::default()).unwrap();
        assert_eq!(s.k_star, 0);
        let e2 = s.objective_trace.iter().find(|c| c.k == 2).unwrap().energy;
        let e0 = s.objective_trace.iter().find(|c| c.k == 0).unwrap().energy;
        assert_relative_eq!(e2 - e0, -0.0384 + 0.15, max_relative = 1e-9);

        let forced = SelectionPolicy {
            force_collaboration: true,
            ..Default::default()
        };
        let s = select_scale(&sys, &evals, &forced).unwrap();
        assert_eq!(s.k_star, 2);
        assert!(s.objective_trace.iter().all(|c| c.k != 0));
    }

    #[test]
    fn all_positive_savings_take_everyone() {
        let sys = SystemParams::default();
        let savings: Vec<_> = (0..15).map(|i| Some(0.01 + 0.003 * i as f64)).collect();
        let s = select_scale(&sys, &with_savings(&sys, &savings), &SelectionPolicy::default()).unwrap();
        assert_eq!(s.k_star, 15);
        assert!(s.modes.iter().all(|m| *m == Mode::Collaborative));
    }

    #[test]
    fn trace_and_total_agree() {
        let sys = SystemParams::default();
        let evals = with_savings(&sys, &[Some(0.05), Some(0.02), None, Some(-0.01), Some(0.07)]);
        let s = select_scale(&sys, &evals, &SelectionPolicy::default()).unwrap();
        let best = s.objective_trace.iter().find(|c| c.k == s.k_star).unwrap();
        assert_relative_eq!(best.energy, s.total_energy, max_relative = 1e-12);
        assert_eq!(s.collaborating().count(), s.k_star);
        assert_eq!(s.modes[2], Mode::Local);
    }

    #[test]
    fn latency_policies() {
        let sys = SystemParams::default();
        let evals = with_savings(&sys, &[None, None]);
        let ignore = select_scale(&sys, &evals, &SelectionPolicy::default()).unwrap();
        assert_eq!(ignore.local_latency_violations, 2);
        assert!(ignore.feasible);
        let enforce = SelectionPolicy {
            local_latency: LocalLatencyPolicy::Enforce,
            ..Default::default()
        };
        assert!(!select_scale(&sys, &evals, &enforce).unwrap().feasible);
    }

    #[test]
    fn empty_network() {
        let sys = SystemParams::default();
        let s = solve_network(&sys, &[], &SelectionPolicy::default()).unwrap();
        assert_eq!(s.k_star, 0);
        assert_eq!(s.total_energy, 0.0);
    }
}
