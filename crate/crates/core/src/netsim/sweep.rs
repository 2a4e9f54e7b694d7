//! Monte Carlo trials and sweep aggregation.
//!
//! Trials run in fixed-size chunks on a rayon pool and are folded into the
//! running statistics in trial-index order, so results are bit-identical for
//! any thread count and memory stays bounded by the chunk size.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SolveError};
use crate::model::AgentProfile;

use super::channel::draw_agents;
use super::config::{SimConfig, SweepAxis, SweepSpec};
use super::strategy::{Strategy, StrategyOutcome, TrialContext};

const CHUNK: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub seed: u64,
    pub outcomes: Vec<StrategyOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<Vec<AgentProfile>>,
}

pub fn run_trial(cfg: &SimConfig, strategies: &[Strategy], trial_index: u64, keep_agents: bool) -> Result<TrialResult, SolveError> {
    let agents = draw_agents(&cfg.population, &cfg.channel, cfg.seed, trial_index);
    let mut ctx = TrialContext::new(&cfg.system, &agents, &cfg.policy, &cfg.baselines);
    let outcomes = strategies.iter().map(|&s| ctx.run(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(TrialResult {
        trial_index,
        seed: cfg.seed,
        outcomes,
        agents: keep_agents.then_some(agents),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyStats {
    pub strategy: Strategy,
    pub mean_energy_j: f64,
    pub stderr_j: f64,
    pub n_trials: u64,
    pub infeasible_trials: u64,
    pub non_finite_trials: u64,
    pub fallback_agents: u64,
    pub mean_k: f64,
    pub k_histogram: BTreeMap<usize, u64>,
}

impl StrategyStats {
    pub fn infeasible_rate(&self) -> f64 {
        if self.n_trials == 0 {
            0.0
        } else {
            self.infeasible_trials as f64 / self.n_trials as f64
        }
    }
}

/// Welford running mean/variance plus counters.
#[derive(Debug, Clone)]
struct Accumulator {
    strategy: Strategy,
    n: u64,
    mean: f64,
    m2: f64,
    k_sum: u64,
    k_histogram: BTreeMap<usize, u64>,
    infeasible: u64,
    non_finite: u64,
    fallbacks: u64,
}

impl Accumulator {
    fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            n: 0,
            mean: 0.0,
            m2: 0.0,
            k_sum: 0,
            k_histogram: BTreeMap::new(),
            infeasible: 0,
            non_finite: 0,
            fallbacks: 0,
        }
    }

    fn push(&mut self, o: &StrategyOutcome) {
        self.n += 1;
        *self.k_histogram.entry(o.k).or_default() += 1;
        self.k_sum += o.k as u64;
        self.fallbacks += o.fallbacks as u64;
        self.infeasible += u64::from(!o.feasible);
        if !o.energy.is_finite() {
            self.non_finite += 1;
            self.mean = f64::NAN;
            return;
        }
        let delta = o.energy - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (o.energy - self.mean);
    }

    fn finish(self) -> StrategyStats {
        let n = self.n as f64;
        let stderr = if self.n > 1 { (self.m2 / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 };
        StrategyStats {
            strategy: self.strategy,
            mean_energy_j: self.mean,
            stderr_j: stderr,
            n_trials: self.n,
            infeasible_trials: self.infeasible,
            non_finite_trials: self.non_finite,
            fallback_agents: self.fallbacks,
            mean_k: if self.n > 0 { self.k_sum as f64 / n } else { 0.0 },
            k_histogram: self.k_histogram,
        }
    }
}

pub fn thread_pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool construction")
}

/// All trials at one configuration. With `dump`, each trial (agents included)
/// is written as one JSON line.
pub fn run_point(
    cfg: &SimConfig,
    strategies: &[Strategy],
    pool: &rayon::ThreadPool,
    mut dump: Option<&mut (dyn Write + '_)>,
) -> Result<Vec<StrategyStats>, SimError> {
    let mut accs: Vec<Accumulator> = strategies.iter().map(|&s| Accumulator::new(s)).collect();
    let total = cfg.n_trials as u64;
    let keep_agents = dump.is_some();
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let chunk: Vec<TrialResult> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| run_trial(cfg, strategies, i, keep_agents))
                .collect::<Result<_, _>>()
        })?;
        for trial in &chunk {
            for (acc, o) in accs.iter_mut().zip(&trial.outcomes) {
                acc.push(o);
            }
            if let Some(w) = dump.as_deref_mut() {
                serde_json::to_writer(&mut *w, trial)?;
                w.write_all(b"\n")?;
            }
        }
        start = end;
    }
    Ok(accs.into_iter().map(Accumulator::finish).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub stats: Vec<StrategyStats>,
}

impl SweepPoint {
    pub fn get(&self, s: Strategy) -> Option<&StrategyStats> {
        self.stats.iter().find(|x| x.strategy == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// `(value, mean, stderr)` along the axis for one strategy.
    pub fn series(&self, s: Strategy) -> Vec<(f64, f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.get(s).map(|st| (p.value, st.mean_energy_j, st.stderr_j)))
            .collect()
    }
}

/// Sweep one axis. Every point reuses the same trial seeds, so strategies and
/// neighbouring points are compared on common random numbers.
pub fn run_sweep(
    cfg: &SimConfig,
    spec: &SweepSpec,
    strategies: &[Strategy],
    pool: &rayon::ThreadPool,
    mut dump: Option<&mut (dyn Write + '_)>,
) -> Result<SweepResult, SimError> {
    let mut points = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        log::info!("sweep {} = {value}: {} trials", spec.axis, cfg.n_trials);
        let stats = run_point(&cfg.at(spec.axis, value), strategies, pool, dump.as_deref_mut())?;
        points.push(SweepPoint { value, stats });
    }
    Ok(SweepResult { axis: spec.axis, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SimConfig {
        SimConfig {
            n_trials: 300,
            ..Default::default()
        }
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, 3.25];
        let mut acc = Accumulator::new(Strategy::Proposed);
        for &x in &xs {
            acc.push(&StrategyOutcome {
                strategy: Strategy::Proposed,
                energy: x,
                k: 2,
                fallbacks: 0,
                feasible: true,
            });
        }
        let st = acc.finish();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((st.mean_energy_j - mean).abs() < 1e-14);
        assert!((st.stderr_j - (var / 5.0).sqrt()).abs() < 1e-14);
        assert_eq!(st.k_histogram[&2], 5);
        assert_eq!(st.mean_k, 2.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = small_cfg();
        let one = run_point(&cfg, &Strategy::ALL, &thread_pool(1), None).unwrap();
        let four = run_point(&cfg, &Strategy::ALL, &thread_pool(4), None).unwrap();
        assert_eq!(one, four);
        assert_eq!(one[0].n_trials, 300);
    }

    #[test]
    fn local_only_has_zero_spread() {
        let cfg = small_cfg();
        let st = run_point(&cfg, &[Strategy::LocalOnly], &thread_pool(2), None).unwrap();
        assert!((st[0].mean_energy_j - 3.0).abs() < 1e-12);
        assert!(st[0].stderr_j < 1e-12);
    }

    #[test]
    fn dump_writes_one_line_per_trial() {
        let cfg = SimConfig {
            n_trials: 7,
            ..Default::default()
        };
        let mut buf = Vec::new();
        run_point(&cfg, &[Strategy::Proposed], &thread_pool(2), Some(&mut buf)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        let t: TrialResult = serde_json::from_str(lines[3]).unwrap();
        assert_eq!(t.trial_index, 3);
        assert_eq!(t.agents.unwrap(), draw_agents(&cfg.population, &cfg.channel, cfg.seed, 3));
    }
}
