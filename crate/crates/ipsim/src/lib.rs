//! Discrete-time simulator of public-cloud IP address pools.
//!
//! Models autoscaling tenants, the configuration they leave behind on
//! released IPs, and pool-scanning adversaries, then compares allocation
//! policies (pseudorandom, LRU, tagging, scan segmentation) by how much of
//! the pool and how much latent configuration a scanner can reach. Runs are
//! deterministic: a config plus seed reproduces statistics bit for bit.

pub mod agent;
pub mod behavior;
pub mod config;
pub mod engine;
pub mod ingest;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod time;
pub mod types;

pub use config::{PolicyKind, RunConfig, ScenarioKind};
pub use engine::{EngineConfig, SimError, Simulation};
pub use rng::SimRng;
pub use scenario::{run_scenario, run_sweep, ScenarioError, SweepAxis};
pub use stats::RunStats;
pub use time::SimTime;
pub use types::{IpId, TenantId};
