//! Pseudorandom allocation: a uniform draw over the free IPs that have aged
//! past the reuse delay, mirroring deployed provider behavior.

use super::fenwick::FenwickSet;
use super::{AllocationPolicy, PoolExhausted};
use crate::config::PolicyKind;
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, Pool, TenantId, TenantTable};
use std::collections::BTreeSet;

pub struct RandomPolicy {
    d_reuse: u64,
    /// Free IPs old enough to hand out, selectable uniformly by rank.
    eligible: FenwickSet,
    /// Free IPs still inside the reuse delay, ordered by release time.
    pending: BTreeSet<(SimTime, IpId)>,
}

impl RandomPolicy {
    pub fn new(pool_size: u32, d_reuse_seconds: u64) -> Self {
        Self {
            d_reuse: d_reuse_seconds,
            eligible: FenwickSet::new(pool_size),
            pending: BTreeSet::new(),
        }
    }

    fn age_pending(&mut self, now: SimTime) {
        let Some(cutoff) = now.seconds().checked_sub(self.d_reuse) else {
            return;
        };
        while let Some(&(released, ip)) = self.pending.first() {
            if released.seconds() <= cutoff {
                self.pending.pop_first();
                self.eligible.insert(ip.0);
            } else {
                break;
            }
        }
    }
}

impl AllocationPolicy for RandomPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Random
    }

    fn init(&mut self, _pool: &mut Pool, ip: IpId) {
        // Never-released IPs carry no reuse constraint.
        self.eligible.insert(ip.0);
    }

    fn allocate(
        &mut self,
        pool: &mut Pool,
        _tenants: &mut TenantTable,
        _tenant: TenantId,
        now: SimTime,
        rng: &mut SimRng,
    ) -> Result<IpId, PoolExhausted> {
        self.age_pending(now);
        let ip = if self.eligible.len() > 0 {
            let k = rng.gen_range(self.eligible.len());
            let idx = self.eligible.select(k);
            self.eligible.remove(idx);
            IpId(idx)
        } else {
            // Nothing satisfies the reuse delay: best effort, hand out the
            // IP that has been free the longest.
            let (_, ip) = self.pending.pop_first().ok_or(PoolExhausted)?;
            ip
        };
        pool.mark_allocated(ip, now);
        Ok(ip)
    }

    fn release(&mut self, pool: &mut Pool, _tenants: &mut TenantTable, ip: IpId, now: SimTime) {
        pool.mark_released(ip, now);
        self.pending.insert((now, ip));
    }

    fn free_count(&self) -> u64 {
        self.eligible.len() + self.pending.len() as u64
    }
}
