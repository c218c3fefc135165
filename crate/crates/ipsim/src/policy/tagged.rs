//! IP tagging: released IPs stay associated with their last tenant, and that
//! tenant gets them back first. Untagged demand falls through to LRU, so a
//! tenant's tagged IPs cannot be taken while anything older is free.

use super::tags::TagIndex;
use super::{free_key, AllocationPolicy, FreeKey, PoolExhausted};
use crate::config::PolicyKind;
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, Pool, TenantId, TenantTable};
use std::collections::BTreeSet;

pub struct TaggedPolicy {
    /// Every free IP, LRU-ordered, for the fallback path.
    free: BTreeSet<FreeKey>,
    /// Free IPs grouped by their tag, LRU-ordered within each group.
    tags: TagIndex,
}

impl TaggedPolicy {
    pub fn new() -> Self {
        Self {
            free: BTreeSet::new(),
            tags: TagIndex::default(),
        }
    }
}

impl Default for TaggedPolicy {
    fn default() -> Self {
        Self::new()
    }
}

impl AllocationPolicy for TaggedPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Tagged
    }

    fn init(&mut self, _pool: &mut Pool, ip: IpId) {
        self.free.insert(free_key(None, ip));
    }

    fn allocate(
        &mut self,
        pool: &mut Pool,
        _tenants: &mut TenantTable,
        tenant: TenantId,
        now: SimTime,
        _rng: &mut SimRng,
    ) -> Result<IpId, PoolExhausted> {
        let ip = if let Some(ip) = self.tags.pop_min(tenant) {
            self.free.remove(&free_key(pool.record(ip).released_at, ip));
            ip
        } else {
            let (key, ip) = *self.free.iter().next().ok_or(PoolExhausted)?;
            self.free.remove(&(key, ip));
            if let Some(owner) = pool.record(ip).tag {
                self.tags.remove(owner, &(key, ip));
            }
            ip
        };
        pool.record_mut(ip).tag = Some(tenant);
        pool.mark_allocated(ip, now);
        Ok(ip)
    }

    fn release(&mut self, pool: &mut Pool, _tenants: &mut TenantTable, ip: IpId, now: SimTime) {
        pool.mark_released(ip, now);
        let key = free_key(Some(now), ip);
        self.free.insert(key);
        let tag = pool
            .record(ip)
            .tag
            .expect("allocated IPs always carry a tag");
        self.tags.insert(tag, key);
    }

    fn free_count(&self) -> u64 {
        self.free.len() as u64
    }
}
