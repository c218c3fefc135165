//! Agents drive tenant behavior in batches: one agent manages many tenants
//! of the same kind and emits allocate/release requests each time step. The
//! simulator routes requests to the policy and reports grants back.

use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, LatentConfig, TenantId};

mod adversary;
mod autoscale;
mod trace;

pub use adversary::{AdversaryAgent, AdversaryMode};
pub use autoscale::AutoscaleAgent;
pub use trace::TraceAgent;

/// What an adversarial agent learned from one granted IP.
#[derive(Clone, Debug, Default)]
pub struct Observation {
    /// The agent had never been handed this IP before.
    pub first_sight: bool,
    /// Configurations newly marked discovered: (config id, victim tenant).
    pub discovered: Vec<(u64, TenantId)>,
}

/// One pool request. Allocations carry an agent-chosen token echoed back on
/// grant or denial so the agent can match responses to its own bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Request {
    Allocate { tenant: TenantId, token: u64 },
    Release { tenant: TenantId, ip: IpId },
}

pub trait Agent: Send {
    /// Emit this step's requests in order. Within a step the simulator
    /// executes all releases before any allocation.
    fn step(&mut self, now: SimTime, rng: &mut SimRng, out: &mut Vec<Request>);

    /// An allocation request was granted.
    fn on_allocated(&mut self, tenant: TenantId, token: u64, ip: IpId, now: SimTime);

    /// An allocation request failed because the pool was exhausted.
    fn on_denied(&mut self, _tenant: TenantId, _token: u64) {}

    /// Adversarial agents activate only after warm-up and their releases
    /// leave no latent configuration.
    fn is_adversary(&self) -> bool {
        false
    }

    /// Inspect a granted IP's live configurations, marking fresh ones
    /// discovered. Benign agents observe nothing. The caller has already
    /// purged expired configurations.
    fn observe(&mut self, _ip: IpId, _configs: &mut [LatentConfig]) -> Observation {
        Observation::default()
    }

    /// Upper bound on the number of IPs this agent holds at once, used to
    /// size the pool before the run.
    fn peak_concurrency(&self) -> u64;
}
