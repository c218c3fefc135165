//! Per-tenant index of free tagged IPs, ordered so the least recently
//! released IP within a tag comes first.

use super::FreeKey;
use crate::types::{IpId, TenantId};
use std::collections::{BTreeSet, HashMap};

#[derive(Default)]
pub(crate) struct TagIndex {
    map: HashMap<TenantId, BTreeSet<FreeKey>>,
}

impl TagIndex {
    pub fn insert(&mut self, tenant: TenantId, key: FreeKey) {
        self.map.entry(tenant).or_default().insert(key);
    }

    pub fn remove(&mut self, tenant: TenantId, key: &FreeKey) {
        if let Some(set) = self.map.get_mut(&tenant) {
            set.remove(key);
            if set.is_empty() {
                self.map.remove(&tenant);
            }
        }
    }

    /// Take the least recently released free IP tagged to `tenant`.
    pub fn pop_min(&mut self, tenant: TenantId) -> Option<IpId> {
        let set = self.map.get_mut(&tenant)?;
        let key = *set.iter().next()?;
        set.remove(&key);
        if set.is_empty() {
            self.map.remove(&tenant);
        }
        Some(key.1)
    }
}
