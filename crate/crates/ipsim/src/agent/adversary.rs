//! Pool-scanning adversary. Holds a fixed number of IPs at a time, keeps
//! each just long enough to observe its configuration, then releases and
//! re-allocates. In multi-tenant mode the allocating account rotates after
//! every full batch of allocations, defeating per-tenant tagging.

use super::{Agent, Observation, Request};
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, LatentConfig, TenantId};
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdversaryMode {
    /// All allocations under one account.
    Single,
    /// Rotate to a fresh account after each batch, cycling once the budget
    /// is exhausted.
    Multi,
}

pub struct AdversaryAgent {
    mode: AdversaryMode,
    concurrency: u64,
    hold_seconds: u64,
    tenant_budget: u64,
    /// First tenant id in this agent's reserved id range.
    tenant_base: u64,
    allocations_issued: u64,
    held: Vec<(IpId, SimTime, TenantId)>,
    seen: HashSet<IpId>,
}

impl AdversaryAgent {
    pub fn new(
        mode: AdversaryMode,
        concurrency: u64,
        hold_seconds: u64,
        tenant_budget: u64,
        tenant_base: u64,
    ) -> Self {
        assert!(concurrency > 0);
        let tenant_budget = match mode {
            AdversaryMode::Single => 1,
            AdversaryMode::Multi => tenant_budget.max(1),
        };
        Self {
            mode,
            concurrency,
            hold_seconds,
            tenant_budget,
            tenant_base,
            allocations_issued: 0,
            held: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn mode(&self) -> AdversaryMode {
        self.mode
    }

    pub fn unique_ips_seen(&self) -> u64 {
        self.seen.len() as u64
    }

    /// Account used for the next allocation: one batch of allocations per
    /// tenant, cycling through the budget.
    fn next_tenant(&self) -> TenantId {
        let batch = self.allocations_issued / self.concurrency;
        TenantId(self.tenant_base + batch % self.tenant_budget)
    }
}

impl Agent for AdversaryAgent {
    fn step(&mut self, now: SimTime, _rng: &mut SimRng, out: &mut Vec<Request>) {
        // Release everything held for the full observation window.
        let hold = self.hold_seconds;
        let mut i = 0;
        while i < self.held.len() {
            let (ip, acquired, tenant) = self.held[i];
            if now.saturating_sub(acquired) >= hold {
                out.push(Request::Release { tenant, ip });
                self.held.remove(i);
            } else {
                i += 1;
            }
        }
        // Top back up to the concurrency cap.
        let want = self.concurrency.saturating_sub(self.held.len() as u64);
        for _ in 0..want {
            let tenant = self.next_tenant();
            self.allocations_issued += 1;
            out.push(Request::Allocate { tenant, token: 0 });
        }
    }

    fn on_allocated(&mut self, tenant: TenantId, _token: u64, ip: IpId, now: SimTime) {
        debug_assert!((self.held.len() as u64) < self.concurrency);
        self.held.push((ip, now, tenant));
    }

    fn is_adversary(&self) -> bool {
        true
    }

    fn observe(&mut self, ip: IpId, configs: &mut [LatentConfig]) -> Observation {
        let first_sight = self.seen.insert(ip);
        let mut discovered = Vec::new();
        for cfg in configs.iter_mut() {
            if !cfg.discovered {
                cfg.discovered = true;
                discovered.push((cfg.config_id, cfg.created_by));
            }
        }
        Observation {
            first_sight,
            discovered,
        }
    }

    fn peak_concurrency(&self) -> u64 {
        self.concurrency
    }
}
