//! Least-recently-used allocation: always hand out the IP that has sat in
//! the pool the longest, maximizing time between reuse.

use super::{free_key, AllocationPolicy, FreeKey, PoolExhausted};
use crate::config::PolicyKind;
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, Pool, TenantId, TenantTable};
use std::collections::BTreeSet;

pub struct LruPolicy {
    free: BTreeSet<FreeKey>,
}

impl LruPolicy {
    pub fn new() -> Self {
        Self {
            free: BTreeSet::new(),
        }
    }
}

impl Default for LruPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl AllocationPolicy for LruPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lru
    }

    fn init(&mut self, _pool: &mut Pool, ip: IpId) {
        self.free.insert(free_key(None, ip));
    }

    fn allocate(
        &mut self,
        pool: &mut Pool,
        _tenants: &mut TenantTable,
        _tenant: TenantId,
        now: SimTime,
        _rng: &mut SimRng,
    ) -> Result<IpId, PoolExhausted> {
        let (_, ip) = self.free.pop_first().ok_or(PoolExhausted)?;
        pool.mark_allocated(ip, now);
        Ok(ip)
    }

    fn release(&mut self, pool: &mut Pool, _tenants: &mut TenantTable, ip: IpId, now: SimTime) {
        pool.mark_released(ip, now);
        self.free.insert(free_key(Some(now), ip));
    }

    fn free_count(&self) -> u64 {
        self.free.len() as u64
    }
}
