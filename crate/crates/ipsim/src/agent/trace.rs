//! Replay of a recorded allocation trace: one allocate at each event's start
//! time and a matching release at its end time.

use super::{Agent, Request};
use crate::ingest::AllocationEvent;
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, TenantId};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub struct TraceAgent {
    /// Events sorted by start time; `next` walks them exactly once.
    events: Vec<AllocationEvent>,
    next: usize,
    /// Granted events waiting for their release time; the sequence number
    /// keeps heap order canonical.
    held: BinaryHeap<Reverse<(SimTime, u64, TenantId, IpId)>>,
    grants: u64,
}

impl TraceAgent {
    /// `events` must already be sorted by start time with `end > start`,
    /// which is what the ingest pipeline produces.
    pub fn new(events: Vec<AllocationEvent>) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].start <= w[1].start));
        debug_assert!(events.iter().all(|e| e.end > e.start));
        Self {
            events,
            next: 0,
            held: BinaryHeap::new(),
            grants: 0,
        }
    }

    pub fn remaining_events(&self) -> usize {
        self.events.len() - self.next
    }
}

impl Agent for TraceAgent {
    fn step(&mut self, now: SimTime, _rng: &mut SimRng, out: &mut Vec<Request>) {
        while let Some(&Reverse((end, _, tenant, ip))) = self.held.peek() {
            if end <= now {
                self.held.pop();
                out.push(Request::Release { tenant, ip });
            } else {
                break;
            }
        }
        while self.next < self.events.len() && self.events[self.next].start <= now {
            let ev = &self.events[self.next];
            out.push(Request::Allocate {
                tenant: ev.tenant,
                token: self.next as u64,
            });
            self.next += 1;
        }
    }

    fn on_allocated(&mut self, tenant: TenantId, token: u64, ip: IpId, _now: SimTime) {
        let end = self.events[token as usize].end;
        self.grants += 1;
        self.held.push(Reverse((end, self.grants, tenant, ip)));
    }

    fn peak_concurrency(&self) -> u64 {
        crate::ingest::max_concurrency(&self.events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(tenant: u64, start: u64, end: u64) -> AllocationEvent {
        AllocationEvent {
            tenant: TenantId(tenant),
            start: SimTime(start),
            end: SimTime(end),
        }
    }

    #[test]
    fn allocates_and_releases_at_event_times() {
        let mut agent = TraceAgent::new(vec![event(3, 10, 20)]);
        let mut rng = SimRng::new(1);
        let mut out = Vec::new();

        agent.step(SimTime(9), &mut rng, &mut out);
        assert!(out.is_empty());

        agent.step(SimTime(10), &mut rng, &mut out);
        assert_eq!(
            out,
            vec![Request::Allocate {
                tenant: TenantId(3),
                token: 0
            }]
        );
        agent.on_allocated(TenantId(3), 0, IpId(7), SimTime(10));

        out.clear();
        agent.step(SimTime(19), &mut rng, &mut out);
        assert!(out.is_empty());

        agent.step(SimTime(20), &mut rng, &mut out);
        assert_eq!(
            out,
            vec![Request::Release {
                tenant: TenantId(3),
                ip: IpId(7)
            }]
        );
    }

    #[test]
    fn empty_trace_is_silent() {
        let mut agent = TraceAgent::new(Vec::new());
        let mut rng = SimRng::new(1);
        let mut out = Vec::new();
        for s in 0..100 {
            agent.step(SimTime(s), &mut rng, &mut out);
        }
        assert!(out.is_empty());
    }

    #[test]
    fn denied_event_is_dropped_without_release() {
        let mut agent = TraceAgent::new(vec![event(1, 5, 15), event(2, 5, 16)]);
        let mut rng = SimRng::new(1);
        let mut out = Vec::new();
        agent.step(SimTime(5), &mut rng, &mut out);
        assert_eq!(out.len(), 2);
        // Only the first request is granted.
        agent.on_allocated(TenantId(1), 0, IpId(0), SimTime(5));
        out.clear();
        agent.step(SimTime(16), &mut rng, &mut out);
        assert_eq!(out.len(), 1, "the denied event must not emit a release");
    }
}
