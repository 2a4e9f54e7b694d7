//! Monte Carlo experiment harness: random agent populations, the four
//! baselines, parameter sweeps and result files.

pub mod channel;
pub mod config;
pub mod persist;
pub mod strategy;
pub mod sweep;

pub use channel::{draw_agents, ChannelModel, Fading};
pub use config::{SimConfig, SweepAxis, SweepSpec};
pub use persist::{persist, sweep_csv, ResultFile, CSV_HEADER};
pub use strategy::{run_strategy, Strategy, StrategyOutcome};
pub use sweep::{run_point, run_sweep, run_trial, thread_pool, StrategyStats, SweepResult, TrialResult};
