//! TOML experiment configuration. Every section has defaults, so an
//! empty file is a valid config; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{AgentProfile, SystemParams};
use crate::oracle::OracleConfig;
use crate::select::SelectionPolicy;

use super::channel::ChannelModel;
use super::strategy::Strategy;

pub const BITS_PER_MBIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Population {
    pub n_agents: usize,
    pub data_mbits: f64,
    /// Semantic extraction complexity `α` (cycles/bit), shared by all agents.
    pub complexity: f64,
    pub cpu_hz: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
}

impl Default for Population {
    fn default() -> Self {
        Self {
            n_agents: 15,
            data_mbits: 10.0,
            complexity: 10.0,
            cpu_hz: 1e9,
            d_min_m: 50.0,
            d_max_m: 1000.0,
        }
    }
}

impl Population {
    pub fn data_bits(&self) -> f64 {
        self.data_mbits * BITS_PER_MBIT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Baselines {
    /// Transmit power of the fixed-power baseline (W).
    pub fixed_tx_power_w: f64,
}

impl Default for Baselines {
    fn default() -> Self {
        Self { fixed_tx_power_w: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SweepAxis {
    N,
    D,
    T0,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::N => "N",
            SweepAxis::D => "D",
            SweepAxis::T0 => "T0",
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One sweep axis. Values are in config units: agent count, Mbits, or seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn default_sweeps() -> Vec<SweepSpec> {
        vec![
            SweepSpec {
                axis: SweepAxis::N,
                values: vec![5.0, 10.0, 15.0, 20.0],
            },
            SweepSpec {
                axis: SweepAxis::D,
                values: vec![2.0, 6.0, 10.0, 14.0],
            },
            SweepSpec {
                axis: SweepAxis::T0,
                values: vec![0.5, 0.7, 0.9, 1.1],
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random network trials checked against enumeration.
    pub trials: usize,
    pub n_agents: usize,
    /// Random feasible agents for the continuous checks.
    pub agent_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            trials: 50,
            n_agents: 8,
            agent_samples: 100,
        }
    }
}

/// An explicitly specified agent. Data size is given either in Mbits or bits;
/// the channel either as a gain or as a distance under the path-loss model
/// (fading is not applied to explicit agents).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_mbits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complexity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpu_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

impl AgentSpec {
    pub fn exact(agent: &AgentProfile) -> Self {
        Self {
            data_mbits: None,
            data_bits: Some(agent.data_bits),
            complexity: Some(agent.complexity),
            cpu_hz: Some(agent.cpu_hz),
            channel_gain: Some(agent.channel_gain),
            distance_m: Some(agent.distance_m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_trials: usize,
    /// Sweeps fail when more than this share of trials is flagged infeasible.
    pub max_infeasible_rate: f64,
    /// Write every trial's agents and outcomes next to the sweep results.
    pub dump_trials: bool,
    /// Append an oracle verdict to `solve` output.
    pub run_oracle: bool,
    pub strategies: Vec<Strategy>,
    pub system: SystemParams,
    pub population: Population,
    pub channel: ChannelModel,
    pub policy: SelectionPolicy,
    pub baselines: Baselines,
    pub oracle: OracleConfig,
    pub verify: VerifyConfig,
    #[serde(rename = "sweep")]
    pub sweeps: Vec<SweepSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_trials: 1000,
            max_infeasible_rate: 0.05,
            dump_trials: false,
            run_oracle: false,
            strategies: Strategy::ALL.to_vec(),
            system: SystemParams::default(),
            population: Population::default(),
            channel: ChannelModel::default(),
            policy: SelectionPolicy::default(),
            baselines: Baselines::default(),
            oracle: OracleConfig::default(),
            verify: VerifyConfig::default(),
            sweeps: SweepSpec::default_sweeps(),
            agents: Vec::new(),
        }
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system.validate()?;
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.n_trials == 0 {
            return invalid("n_trials must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_infeasible_rate) {
            return invalid(format!("max_infeasible_rate = {} must lie in [0, 1]", self.max_infeasible_rate));
        }
        if self.strategies.is_empty() {
            return invalid("at least one strategy is required".into());
        }
        let p = &self.population;
        for (name, v) in [("data_mbits", p.data_mbits), ("complexity", p.complexity), ("cpu_hz", p.cpu_hz)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("population.{name} = {v} must be finite and > 0"));
            }
        }
        if !(p.d_min_m > 0.0 && p.d_min_m < p.d_max_m && p.d_max_m.is_finite()) {
            return invalid(format!("need 0 < d_min_m < d_max_m, got {} and {}", p.d_min_m, p.d_max_m));
        }
        self.channel.validate().map_err(ConfigError::Invalid)?;
        self.oracle.validate().map_err(ConfigError::Invalid)?;
        if !(self.baselines.fixed_tx_power_w > 0.0) {
            return invalid("baselines.fixed_tx_power_w must be > 0".into());
        }
        for s in &self.sweeps {
            if s.values.is_empty() {
                return invalid(format!("sweep over {} has no values", s.axis));
            }
            for &v in &s.values {
                let ok = match s.axis {
                    SweepAxis::N => v >= 0.0 && v.fract() == 0.0,
                    SweepAxis::D | SweepAxis::T0 => v > 0.0 && v.is_finite(),
                };
                if !ok {
                    return invalid(format!("sweep value {v} is not valid for axis {}", s.axis));
                }
            }
        }
        if self.verify.n_agents > self.oracle.subset_max_n {
            return invalid(format!(
                "verify.n_agents = {} exceeds oracle.subset_max_n = {}",
                self.verify.n_agents, self.oracle.subset_max_n
            ));
        }
        self.explicit_agents()?;
        Ok(())
    }

    /// The explicitly listed agents, converted to SI units.
    pub fn explicit_agents(&self) -> Result<Vec<AgentProfile>, ConfigError> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let data_bits = match (spec.data_bits, spec.data_mbits) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::Invalid(format!(
                            "agent {i}: give data_bits or data_mbits, not both"
                        )))
                    }
                    (Some(b), None) => b,
                    (None, Some(mb)) => mb * BITS_PER_MBIT,
                    (None, None) => self.population.data_bits(),
                };
                let distance_m = spec.distance_m.unwrap_or(0.0);
                let channel_gain = match (spec.channel_gain, spec.distance_m) {
                    (Some(g), _) => g,
                    (None, Some(d)) if d > 0.0 => self.channel.path_gain(d),
                    _ => {
                        return Err(ConfigError::Invalid(format!(
                            "agent {i}: needs channel_gain or a positive distance_m"
                        )))
                    }
                };
                let agent = AgentProfile {
                    data_bits,
                    complexity: spec.complexity.unwrap_or(self.population.complexity),
                    cpu_hz: spec.cpu_hz.unwrap_or(self.population.cpu_hz),
                    channel_gain,
                    distance_m,
                };
                agent
                    .validate()
                    .map_err(|e| ConfigError::Invalid(format!("agent {i}: {e}")))?;
                Ok(agent)
            })
            .collect()
    }

    /// A config that replays exactly `agents` under this config's parameters.
    pub fn replay(&self, agents: &[AgentProfile]) -> SimConfig {
        SimConfig {
            agents: agents.iter().map(AgentSpec::exact).collect(),
            ..self.clone()
        }
    }

    /// This config with one sweep coordinate applied.
    pub fn at(&self, axis: SweepAxis, value: f64) -> SimConfig {
        let mut cfg = self.clone();
        match axis {
            SweepAxis::N => cfg.population.n_agents = value as usize,
            SweepAxis::D => cfg.population.data_mbits = value,
            SweepAxis::T0 => cfg.system.deadline_s = value,
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_table_defaults() {
        let cfg = SimConfig::from_toml("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.population.data_bits(), 1e7);
        assert_eq!(cfg.n_trials, 1000);
        assert_eq!(cfg.sweeps.len(), 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SimConfig::from_toml("sed = 3").is_err());
        assert!(SimConfig::from_toml("[system]\nbandwith_hz = 1.0").is_err());
    }

    #[test]
    fn parses_sections() {
        let cfg = SimConfig::from_toml(
            r#"
            seed = 7
            strategies = ["proposed", "local-only"]
            [system]
            deadline_s = 0.9
            [population]
            n_agents = 3
            data_mbits = 6
            [channel]
            fading = "none"
            [policy]
            min_k = 1
            local_latency = "enforce"
            [[sweep]]
            axis = "T0"
            values = [0.5, 1.1]
            [[agents]]
            channel_gain = 8e-9
            [[agents]]
            distance_m = 50
            data_bits = 2e6
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.strategies, vec![Strategy::Proposed, Strategy::LocalOnly]);
        assert_eq!(cfg.system.deadline_s, 0.9);
        assert_eq!(cfg.policy.min_k, 1);
        assert_eq!(cfg.sweeps.len(), 1);
        let agents = cfg.explicit_agents().unwrap();
        assert_eq!(agents[0].data_bits, 6e6);
        assert_eq!(agents[1].data_bits, 2e6);
        assert!((agents[1].channel_gain - 8e-9).abs() < 1e-20);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(SimConfig::from_toml("n_trials = 0").is_err());
        assert!(SimConfig::from_toml("[system]\nusl_beta = 1.5").is_err());
        assert!(SimConfig::from_toml("[population]\nd_min_m = 2000").is_err());
        assert!(SimConfig::from_toml("[[sweep]]\naxis = \"N\"\nvalues = [2.5]").is_err());
        assert!(SimConfig::from_toml("[[agents]]\ncomplexity = 3").is_err());
        assert!(SimConfig::from_toml("[[agents]]\nchannel_gain = 1e-9\ndata_bits = 1\ndata_mbits = 1").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SimConfig::default();
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
