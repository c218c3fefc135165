//! Shared domain types: identifier spaces, per-IP pool records, per-tenant
//! reputation counters and pool-level helpers.

use crate::time::SimTime;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Index into the pool; the pool is the dense range `[0, size)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IpId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TenantId(pub u64);

/// A configuration left behind on a released IP. It can be exploited by a
/// later holder until it dissociates at `dissociates_at`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatentConfig {
    pub config_id: u64,
    pub created_by: TenantId,
    /// Release that left the configuration behind.
    pub released_at: SimTime,
    /// Strictly greater than `released_at`.
    pub dissociates_at: SimTime,
    pub discovered: bool,
}

impl LatentConfig {
    #[inline]
    pub fn live_at(&self, now: SimTime) -> bool {
        self.dissociates_at > now
    }
}

/// Per-IP metadata stored by the simulator and shared with policies.
#[derive(Clone, Debug)]
pub struct IpRecord {
    pub id: IpId,
    pub allocated: bool,
    /// Time of the current (or most recent) allocation.
    pub allocated_at: SimTime,
    /// Time of the last release; `None` until the IP has been released once.
    /// `None` orders before every real time so fresh IPs look oldest to LRU.
    pub released_at: Option<SimTime>,
    /// Cooldown expiry used by the segmented policy; zero until first release.
    pub cooldown_until: SimTime,
    /// Tenant that most recently held the IP, for tag-aware policies.
    pub tag: Option<TenantId>,
    /// Live latent configurations; expired entries are purged lazily.
    pub configs: Vec<LatentConfig>,
}

impl IpRecord {
    fn fresh(id: IpId) -> Self {
        Self {
            id,
            allocated: false,
            allocated_at: SimTime::ZERO,
            released_at: None,
            cooldown_until: SimTime::ZERO,
            tag: None,
            configs: Vec::new(),
        }
    }

    /// Drop configurations that have dissociated by `now`.
    pub fn purge_expired_configs(&mut self, now: SimTime) {
        self.configs.retain(|c| c.live_at(now));
    }
}

/// Per-tenant allocation reputation: cumulative seconds over completed
/// allocations plus the number of allocations started.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct TenantStats {
    pub total_allocated_seconds: u64,
    pub allocations_started: u64,
}

impl TenantStats {
    /// Mean allocation duration in seconds; zero for tenants with no history.
    #[inline]
    pub fn mean_allocation_seconds(&self) -> f64 {
        if self.allocations_started == 0 {
            0.0
        } else {
            self.total_allocated_seconds as f64 / self.allocations_started as f64
        }
    }
}

/// Reputation table keyed by tenant.
#[derive(Clone, Debug, Default)]
pub struct TenantTable {
    stats: HashMap<TenantId, TenantStats>,
}

impl TenantTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, tenant: TenantId) -> TenantStats {
        self.stats.get(&tenant).copied().unwrap_or_default()
    }

    pub fn get_mut(&mut self, tenant: TenantId) -> &mut TenantStats {
        self.stats.entry(tenant).or_default()
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }
}

/// The IP pool: one record per address, indexed by `IpId`.
#[derive(Clone, Debug)]
pub struct Pool {
    records: Vec<IpRecord>,
}

impl Pool {
    pub fn new(size: u32) -> Self {
        let records = (0..size).map(|i| IpRecord::fresh(IpId(i))).collect();
        Self { records }
    }

    #[inline]
    pub fn size(&self) -> u32 {
        self.records.len() as u32
    }

    #[inline]
    pub fn record(&self, ip: IpId) -> &IpRecord {
        &self.records[ip.0 as usize]
    }

    #[inline]
    pub fn record_mut(&mut self, ip: IpId) -> &mut IpRecord {
        &mut self.records[ip.0 as usize]
    }

    pub fn records(&self) -> &[IpRecord] {
        &self.records
    }

    /// Flip a record to allocated at `now`. The caller (a policy) has already
    /// removed the IP from its free structures.
    pub fn mark_allocated(&mut self, ip: IpId, now: SimTime) {
        let rec = self.record_mut(ip);
        debug_assert!(!rec.allocated, "allocate of an already-allocated IP");
        rec.allocated = true;
        rec.allocated_at = now;
    }

    /// Flip a record to released at `now` and return the completed allocation
    /// duration in seconds.
    pub fn mark_released(&mut self, ip: IpId, now: SimTime) -> u64 {
        let rec = self.record_mut(ip);
        debug_assert!(rec.allocated, "release of a free IP");
        rec.allocated = false;
        rec.released_at = Some(now);
        now.saturating_sub(rec.allocated_at)
    }
}

/// Fraction of the pool currently allocated.
pub fn allocation_ratio(allocated_count: u64, pool_size: u64) -> f64 {
    assert!(pool_size > 0, "pool_size must be positive");
    assert!(allocated_count <= pool_size);
    allocated_count as f64 / pool_size as f64
}

/// Smallest pool size that keeps `peak_demand` at or below `ar_max`.
pub fn derive_pool_size(peak_demand: u64, ar_max: f64) -> u64 {
    assert!(ar_max > 0.0 && ar_max <= 1.0);
    let size = (peak_demand as f64 / ar_max).ceil() as u64;
    size.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn allocation_ratio_examples() {
        assert_eq!(allocation_ratio(0, 1000), 0.0);
        assert_eq!(allocation_ratio(1000, 1000), 1.0);
        assert_eq!(allocation_ratio(680_000, 1_000_000), 0.68);
    }

    #[test]
    #[should_panic]
    fn allocation_ratio_rejects_empty_pool() {
        allocation_ratio(0, 0);
    }

    #[test]
    fn fresh_release_time_sorts_before_any_real_time() {
        let fresh: Option<SimTime> = None;
        assert!(fresh < Some(SimTime(0)));
        assert!(fresh < Some(SimTime(u64::MAX)));
    }

    #[test]
    fn tenant_stats_mean() {
        let mut table = TenantTable::new();
        let t = TenantId(7);
        assert_eq!(table.get(t).mean_allocation_seconds(), 0.0);
        let s = table.get_mut(t);
        s.allocations_started = 2;
        s.total_allocated_seconds = 400;
        assert_eq!(table.get(t).mean_allocation_seconds(), 200.0);
    }

    #[test]
    fn purge_drops_only_expired_configs() {
        let mut rec = IpRecord::fresh(IpId(0));
        for (id, t_c) in [(0u64, 50u64), (1, 100), (2, 150)] {
            rec.configs.push(LatentConfig {
                config_id: id,
                created_by: TenantId(1),
                released_at: SimTime(10),
                dissociates_at: SimTime(t_c),
                discovered: false,
            });
        }
        rec.purge_expired_configs(SimTime(100));
        // dissociates_at == now counts as expired: exploitation requires
        // allocation strictly before the dissociation time.
        assert_eq!(rec.configs.len(), 1);
        assert_eq!(rec.configs[0].config_id, 2);
    }

    proptest! {
        #[test]
        fn derived_pool_size_meets_target(peak in 1u64..10_000_000, ar in 0.01f64..1.0) {
            let size = derive_pool_size(peak, ar);
            prop_assert!(size >= peak);
            prop_assert!(allocation_ratio(peak, size) <= ar + 1e-12);
        }
    }
}
