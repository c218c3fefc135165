//! The allocate/release/init policy interface and its four implementations.
//!
//! Policies own the free-side index structures; the simulator owns the pool
//! records and the tenant reputation table and hands both in on every call.
//! The free structures and the simulator's allocated set partition the pool
//! at every step boundary, and every argmin query runs in O(log n).

use crate::config::PolicyKind;
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, Pool, TenantId, TenantTable};

mod fenwick;
mod lru;
mod random;
mod segmented;
mod tagged;
mod tags;

pub use lru::LruPolicy;
pub use random::RandomPolicy;
pub use segmented::SegmentedPolicy;
pub use tagged::TaggedPolicy;

/// Allocation was requested from an empty free set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no free IP available")]
pub struct PoolExhausted;

/// Ordering key for free IPs: never-released sorts before every real
/// release time, and ties break on the lowest IP index.
pub(crate) type FreeKey = (Option<SimTime>, IpId);

pub(crate) fn free_key(released_at: Option<SimTime>, ip: IpId) -> FreeKey {
    (released_at, ip)
}

pub trait AllocationPolicy: Send {
    fn kind(&self) -> PolicyKind;

    /// Register a never-allocated IP as free.
    fn init(&mut self, pool: &mut Pool, ip: IpId);

    /// Pick a free IP for `tenant` and mark it allocated at `now`.
    fn allocate(
        &mut self,
        pool: &mut Pool,
        tenants: &mut TenantTable,
        tenant: TenantId,
        now: SimTime,
        rng: &mut SimRng,
    ) -> Result<IpId, PoolExhausted>;

    /// Return `ip` to the free set at `now`. The caller guarantees the IP is
    /// currently allocated.
    fn release(&mut self, pool: &mut Pool, tenants: &mut TenantTable, ip: IpId, now: SimTime);

    /// Number of IPs currently registered as free.
    fn free_count(&self) -> u64;
}

pub fn make_policy(
    kind: PolicyKind,
    pool_size: u32,
    d_reuse_seconds: u64,
    alpha: f64,
) -> Box<dyn AllocationPolicy> {
    match kind {
        PolicyKind::Random => Box::new(RandomPolicy::new(pool_size, d_reuse_seconds)),
        PolicyKind::Lru => Box::new(LruPolicy::new()),
        PolicyKind::Tagged => Box::new(TaggedPolicy::new()),
        PolicyKind::Segmented => Box::new(SegmentedPolicy::new(alpha)),
    }
}

/// Absolute gap between an IP's remaining cooldown and a tenant's weighted
/// mean allocation time. Shared with the test oracles so both sides compare
/// bit-identical values.
#[inline]
pub fn segmentation_distance(remaining_cooldown_seconds: u64, weighted_mean: f64) -> f64 {
    (remaining_cooldown_seconds as f64 - weighted_mean).abs()
}
