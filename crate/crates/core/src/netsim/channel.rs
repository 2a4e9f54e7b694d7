use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use serde::{Deserialize, Serialize};

use crate::model::AgentProfile;

use super::config::Population;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    None,
    Rayleigh,
}

/// Distance-based path loss `|h|² = g₀·d^{-η}` times an optional unit-mean
/// exponential (Rayleigh power) fading factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    /// Power gain at 1 m (−30 dB by default).
    pub pathloss_ref_gain: f64,
    pub pathloss_exponent: f64,
    pub fading: Fading,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            pathloss_ref_gain: 1e-3,
            pathloss_exponent: 3.0,
            fading: Fading::Rayleigh,
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.pathloss_ref_gain > 0.0 && self.pathloss_ref_gain.is_finite()) {
            return Err(format!("channel.pathloss_ref_gain = {} must be > 0", self.pathloss_ref_gain));
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(format!("channel.pathloss_exponent = {} must be > 0", self.pathloss_exponent));
        }
        Ok(())
    }

    pub fn path_gain(&self, distance_m: f64) -> f64 {
        self.pathloss_ref_gain * distance_m.powf(-self.pathloss_exponent)
    }
}

/// Generator for one trial. Each trial index gets its own ChaCha stream, so
/// trials can be drawn in any order or in parallel with identical results.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

fn draw_one<R: Rng>(rng: &mut R, pop: &Population, channel: &ChannelModel) -> AgentProfile {
    let distance_m = Uniform::new_inclusive(pop.d_min_m, pop.d_max_m)
        .expect("validated distance range")
        .sample(rng);
    let fading = match channel.fading {
        Fading::None => 1.0,
        Fading::Rayleigh => Exp1.sample(rng),
    };
    AgentProfile {
        data_bits: pop.data_bits(),
        complexity: pop.complexity,
        cpu_hz: pop.cpu_hz,
        channel_gain: channel.path_gain(distance_m) * fading,
        distance_m,
    }
}

/// Agents for trial `trial_index`. Agent `i` is the same across population
/// sizes, so a smaller network is a prefix of a larger one.
pub fn draw_agents(pop: &Population, channel: &ChannelModel, seed: u64, trial_index: u64) -> Vec<AgentProfile> {
    let mut rng = trial_rng(seed, trial_index);
    (0..pop.n_agents).map(|_| draw_one(&mut rng, pop, channel)).collect()
}

/// Endless stream of independently drawn agents, for sampling checks.
pub fn agent_stream<'a>(
    pop: &'a Population,
    channel: &'a ChannelModel,
    seed: u64,
) -> impl Iterator<Item = AgentProfile> + 'a {
    let mut rng = trial_rng(seed, u64::MAX);
    std::iter::repeat_with(move || draw_one(&mut rng, pop, channel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{snr, SystemParams};
    use approx::assert_relative_eq;

    #[test]
    fn path_gain_examples() {
        let sys = SystemParams::default();
        let ch = ChannelModel {
            fading: Fading::None,
            ..Default::default()
        };
        let far = ch.path_gain(1000.0);
        assert_relative_eq!(far, 1e-12, max_relative = 1e-12);
        let agent = AgentProfile {
            data_bits: 1e7,
            complexity: 10.0,
            cpu_hz: 1e9,
            channel_gain: far,
            distance_m: 1000.0,
        };
        let link = snr(&sys, &agent);
        assert_relative_eq!(link.snr, 0.025, max_relative = 1e-12);
        assert!(!link.feasible);

        let near = ch.path_gain(50.0);
        assert_relative_eq!(near, 8e-9, max_relative = 1e-12);
        let link = snr(&sys, &AgentProfile { channel_gain: near, ..agent });
        assert_relative_eq!(link.snr, 200.0, max_relative = 1e-12);
        assert!(link.feasible);
    }

    #[test]
    fn draws_are_deterministic_and_prefix_stable() {
        let pop = Population::default();
        let ch = ChannelModel::default();
        let a = draw_agents(&pop, &ch, 42, 3);
        assert_eq!(a, draw_agents(&pop, &ch, 42, 3));
        assert_ne!(a, draw_agents(&pop, &ch, 42, 4));
        assert_ne!(a, draw_agents(&pop, &ch, 43, 3));
        let small = Population { n_agents: 5, ..pop.clone() };
        assert_eq!(draw_agents(&small, &ch, 42, 3)[..], a[..5]);
        for agent in &a {
            assert!(agent.distance_m >= 50.0 && agent.distance_m <= 1000.0);
            assert!(agent.channel_gain > 0.0);
        }
    }

    #[test]
    fn no_fading_follows_path_loss() {
        let pop = Population::default();
        let ch = ChannelModel {
            fading: Fading::None,
            ..Default::default()
        };
        for a in draw_agents(&pop, &ch, 9, 0) {
            assert_eq!(a.channel_gain, ch.path_gain(a.distance_m));
        }
    }

    #[test]
    fn rayleigh_factor_has_unit_mean() {
        let pop = Population {
            d_min_m: 100.0,
            d_max_m: 100.0 + 1e-9,
            ..Default::default()
        };
        let ch = ChannelModel::default();
        let n = 20000;
        let mean: f64 = agent_stream(&pop, &ch, 5)
            .take(n)
            .map(|a| a.channel_gain / ch.path_gain(a.distance_m))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean fading {mean}");
    }
}
