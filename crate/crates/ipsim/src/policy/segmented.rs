//! IP scan segmentation: tag-first allocation plus a cooldown that matches
//! tenants to IPs with similar allocation behavior. Each release stamps the
//! IP with a cooldown proportional to how long it was held; allocation then
//! picks the free IP whose remaining cooldown is closest to the tenant's
//! weighted mean allocation time. Tenants with no history gravitate to IPs
//! that are long-idle or were held only briefly.

use super::tags::TagIndex;
use super::{free_key, segmentation_distance, AllocationPolicy, PoolExhausted};
use crate::config::PolicyKind;
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, Pool, TenantId, TenantTable};
use std::collections::BTreeSet;

pub struct SegmentedPolicy {
    alpha: f64,
    /// Free IPs whose cooldown is still running, keyed by expiry.
    active: BTreeSet<(SimTime, IpId)>,
    /// Free IPs whose cooldown has lapsed (remaining cooldown zero).
    expired: BTreeSet<IpId>,
    /// Free IPs grouped by their tag, LRU-ordered within each group.
    tags: TagIndex,
}

impl SegmentedPolicy {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha.is_finite() && alpha >= 0.0);
        Self {
            alpha,
            active: BTreeSet::new(),
            expired: BTreeSet::new(),
            tags: TagIndex::default(),
        }
    }

    fn migrate_expired(&mut self, now: SimTime) {
        while let Some(&(expiry, ip)) = self.active.first() {
            if expiry <= now {
                self.active.pop_first();
                self.expired.insert(ip);
            } else {
                break;
            }
        }
    }

    /// Remove a known-free IP from whichever cooldown structure holds it.
    fn remove_free(&mut self, pool: &Pool, ip: IpId) {
        if !self.expired.remove(&ip) {
            let removed = self.active.remove(&(pool.record(ip).cooldown_until, ip));
            debug_assert!(removed, "free IP missing from cooldown index");
        }
    }

    /// Lowest IP index among active entries with exactly this expiry.
    fn min_id_at(&self, expiry: SimTime) -> IpId {
        self.active
            .range((expiry, IpId(0))..=(expiry, IpId(u32::MAX)))
            .next()
            .expect("expiry key came from the same set")
            .1
    }

    /// The free IP minimizing |remaining cooldown - target|, ties broken by
    /// lowest IP index. Candidates are the expired group (remaining zero)
    /// plus the nearest active expiries on either side of `now + target`.
    fn nearest_by_cooldown(&self, now: SimTime, target: f64) -> Option<IpId> {
        let mut best: Option<(f64, IpId)> = None;
        let mut consider = |cand: (f64, IpId)| match best {
            None => best = Some(cand),
            Some(b) if (cand.0, cand.1) < (b.0, b.1) => best = Some(cand),
            _ => {}
        };

        if let Some(&ip) = self.expired.iter().next() {
            consider((segmentation_distance(0, target), ip));
        }
        if let Some(&(first_expiry, _)) = self.active.first() {
            // Query point on the expiry axis; clamp into the active range so
            // the floor cannot underflow below `now`.
            let q = now.seconds() as f64 + target;
            let below_key = if q >= first_expiry.seconds() as f64 {
                SimTime(q.min(u64::MAX as f64).floor() as u64)
            } else {
                SimTime(0)
            };
            if let Some(&(expiry, _)) = self
                .active
                .range(..=(below_key, IpId(u32::MAX)))
                .next_back()
            {
                let remaining = expiry.seconds() - now.seconds();
                consider((
                    segmentation_distance(remaining, target),
                    self.min_id_at(expiry),
                ));
            }
            if let Some(&(expiry, _)) = self.active.range((below_key, IpId(u32::MAX))..).next() {
                let remaining = expiry.seconds() - now.seconds();
                consider((
                    segmentation_distance(remaining, target),
                    self.min_id_at(expiry),
                ));
            }
        }
        best.map(|(_, ip)| ip)
    }
}

impl AllocationPolicy for SegmentedPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Segmented
    }

    fn init(&mut self, _pool: &mut Pool, ip: IpId) {
        // Never-held IPs start with an already-lapsed cooldown.
        self.expired.insert(ip);
    }

    fn allocate(
        &mut self,
        pool: &mut Pool,
        tenants: &mut TenantTable,
        tenant: TenantId,
        now: SimTime,
        _rng: &mut SimRng,
    ) -> Result<IpId, PoolExhausted> {
        self.migrate_expired(now);
        let stats = tenants.get_mut(tenant);
        stats.allocations_started += 1;
        let mean = stats.mean_allocation_seconds();

        let ip = if let Some(ip) = self.tags.pop_min(tenant) {
            self.remove_free(pool, ip);
            ip
        } else {
            let target = self.alpha * mean;
            let ip = self.nearest_by_cooldown(now, target).ok_or(PoolExhausted)?;
            self.remove_free(pool, ip);
            if let Some(owner) = pool.record(ip).tag {
                self.tags
                    .remove(owner, &free_key(pool.record(ip).released_at, ip));
            }
            ip
        };
        pool.record_mut(ip).tag = Some(tenant);
        pool.mark_allocated(ip, now);
        Ok(ip)
    }

    fn release(&mut self, pool: &mut Pool, tenants: &mut TenantTable, ip: IpId, now: SimTime) {
        let held = pool.mark_released(ip, now);
        let cooldown = (self.alpha * held as f64).round() as u64;
        let rec = pool.record_mut(ip);
        rec.cooldown_until = now + cooldown;
        let tag = rec.tag.expect("allocated IPs always carry a tag");
        tenants.get_mut(tag).total_allocated_seconds += held;
        self.tags.insert(tag, free_key(Some(now), ip));
        if cooldown > 0 {
            self.active.insert((now + cooldown, ip));
        } else {
            self.expired.insert(ip);
        }
    }

    fn free_count(&self) -> u64 {
        (self.active.len() + self.expired.len()) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: u32, alpha: f64) -> (Pool, TenantTable, SegmentedPolicy, SimRng) {
        let mut pool = Pool::new(n);
        let mut policy = SegmentedPolicy::new(alpha);
        for i in 0..n {
            policy.init(&mut pool, IpId(i));
        }
        (pool, TenantTable::new(), policy, SimRng::new(1))
    }

    /// Put an IP into the free set with exactly `remaining` seconds of
    /// cooldown left at `probe`, by releasing at `probe` after a hold of
    /// `remaining / alpha` seconds. Callers pick values that divide evenly.
    fn stamp_cooldown(
        pool: &mut Pool,
        tenants: &mut TenantTable,
        policy: &mut SegmentedPolicy,
        rng: &mut SimRng,
        owner: TenantId,
        probe: SimTime,
        remaining: u64,
    ) -> IpId {
        let hold = if remaining == 0 {
            0.0
        } else {
            let h = remaining as f64 / policy.alpha;
            assert_eq!(h.fract(), 0.0, "pick remaining divisible by alpha");
            h
        };
        let t_a = SimTime(probe.0 - hold as u64);
        let ip = policy.allocate(pool, tenants, owner, t_a, rng).unwrap();
        policy.release(pool, tenants, ip, probe);
        assert_eq!(pool.record(ip).cooldown_until, SimTime(probe.0 + remaining));
        ip
    }

    #[test]
    fn release_sets_cooldown_from_hold_duration() {
        let (mut pool, mut tenants, mut policy, mut rng) = setup(1, 2.0);
        let t = TenantId(1);
        let ip = policy
            .allocate(&mut pool, &mut tenants, t, SimTime(0), &mut rng)
            .unwrap();
        policy.release(&mut pool, &mut tenants, ip, SimTime(600));
        assert_eq!(pool.record(ip).cooldown_until, SimTime(1800));
    }

    #[test]
    fn zero_alpha_collapses_cooldown() {
        let (mut pool, mut tenants, mut policy, mut rng) = setup(1, 0.0);
        let t = TenantId(1);
        let ip = policy
            .allocate(&mut pool, &mut tenants, t, SimTime(0), &mut rng)
            .unwrap();
        policy.release(&mut pool, &mut tenants, ip, SimTime(600));
        assert_eq!(pool.record(ip).cooldown_until, SimTime(600));
        assert!(policy.expired.contains(&ip));
    }

    #[test]
    fn release_accumulates_tenant_mean() {
        let (mut pool, mut tenants, mut policy, mut rng) = setup(2, 1.0);
        let t = TenantId(4);
        let a = policy
            .allocate(&mut pool, &mut tenants, t, SimTime(0), &mut rng)
            .unwrap();
        policy.release(&mut pool, &mut tenants, a, SimTime(100));
        let b = policy
            .allocate(&mut pool, &mut tenants, t, SimTime(1000), &mut rng)
            .unwrap();
        policy.release(&mut pool, &mut tenants, b, SimTime(1300));
        let stats = tenants.get(t);
        assert_eq!(stats.total_allocated_seconds, 400);
        assert_eq!(stats.allocations_started, 2);
        assert_eq!(stats.mean_allocation_seconds(), 200.0);
    }

    #[test]
    fn new_tenant_is_matched_to_zero_cooldown() {
        let (mut pool, mut tenants, mut policy, mut rng) = setup(2, 1.0);
        let probe = SimTime(100_000);
        // B gets remaining cooldown ~500 at probe; A is fresh (remaining 0).
        stamp_cooldown(
            &mut pool,
            &mut tenants,
            &mut policy,
            &mut rng,
            TenantId(9),
            probe,
            500,
        );
        let got = policy
            .allocate(&mut pool, &mut tenants, TenantId(42), probe, &mut rng)
            .unwrap();
        assert_eq!(got, IpId(1), "fresh tenant takes the zero-cooldown IP");
    }

    #[test]
    fn established_tenant_is_matched_to_similar_cooldown() {
        let (mut pool, mut tenants, mut policy, mut rng) = setup(3, 2.0);
        let probe = SimTime(1_000_000);
        // Distinct owners and decreasing holds, so each stamp allocates a
        // fresh IP instead of getting its own tag back.
        let c = stamp_cooldown(
            &mut pool,
            &mut tenants,
            &mut policy,
            &mut rng,
            TenantId(9),
            probe,
            3000,
        );
        let b = stamp_cooldown(
            &mut pool,
            &mut tenants,
            &mut policy,
            &mut rng,
            TenantId(10),
            probe,
            1100,
        );
        let a = stamp_cooldown(
            &mut pool,
            &mut tenants,
            &mut policy,
            &mut rng,
            TenantId(11),
            probe,
            0,
        );

        // Tenant whose post-increment mean is 600 s: one completed 1200 s
        // allocation, so the second allocate sees 1200 / 2 = 600.
        let t = TenantId(5);
        let s = tenants.get_mut(t);
        s.total_allocated_seconds = 1200;
        s.allocations_started = 1;

        let got = policy
            .allocate(&mut pool, &mut tenants, t, probe, &mut rng)
            .unwrap();
        // target = alpha * 600 = 1200: |1100-1200| = 100 beats |0-1200| and
        // |3000-1200|.
        assert_eq!(got, b);
        let _ = (a, c);
    }

    #[test]
    fn own_tag_wins_regardless_of_cooldown() {
        let (mut pool, mut tenants, mut policy, mut rng) = setup(2, 8.0);
        let t = TenantId(3);
        let probe = SimTime(500_000);
        // Tenant t releases X with a huge remaining cooldown.
        let x = stamp_cooldown(
            &mut pool,
            &mut tenants,
            &mut policy,
            &mut rng,
            t,
            probe,
            50_000,
        );
        let got = policy
            .allocate(&mut pool, &mut tenants, t, probe, &mut rng)
            .unwrap();
        assert_eq!(got, x);
    }
}
