//! Energy-minimal operation of a base-station-assisted multi-agent network.
//!
//! Each agent either processes its sensory data locally or semantically
//! compresses it, uploads it, and joins a collaboration whose task-execution
//! energy follows a universal-scalability-law gain. The crate solves the joint
//! choice of compression ratio, transmit power and operating mode:
//!
//! - [`model`]: closed-form times, energies and the USL gain.
//! - [`solver`]: per-agent convex optimisation of `(ρ, p)`.
//! - [`select`]: greedy collaboration-scale search over sorted savings.
//! - [`oracle`]: brute-force grid and subset-enumeration checks.
//! - [`netsim`]: Monte Carlo harness with baselines and sweeps.
//! - [`checks`]: invariant battery used by `meanopt verify`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bisect;
pub mod checks;
pub mod cli;
pub mod error;
pub mod model;
pub mod netsim;
pub mod oracle;
pub mod select;
pub mod solver;

pub use error::{ConfigError, ModelError, SimError, SolveError};
pub use model::{AgentEvaluation, AgentProfile, BsCost, LinkState, Mode, SystemParams};
pub use select::{solve_network, LocalLatencyPolicy, NetworkSolution, SelectionPolicy};
pub use solver::{solve_agent, AgentSolution, FeasibleRegion};
