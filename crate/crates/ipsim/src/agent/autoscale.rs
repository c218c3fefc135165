//! Batched driver for autoscaling tenants. Each tenant follows its Fourier
//! demand curve: when the target rises the agent requests the difference,
//! when it falls the agent releases randomly chosen held IPs.

use super::{Agent, Request};
use crate::behavior::{BehaviorSpec, FourierEval};
use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{IpId, TenantId};

struct TenantState {
    id: TenantId,
    eval: FourierEval,
    target: u32,
    held: Vec<IpId>,
}

pub struct AutoscaleAgent {
    tenants: Vec<TenantState>,
    step_seconds: u64,
    /// Each tenant is re-evaluated every `eval_steps` steps, staggered by
    /// tenant index so the per-step work stays flat.
    eval_steps: u64,
}

impl AutoscaleAgent {
    /// `specs` pairs each tenant with its sampled behavior. Demand is
    /// re-evaluated per tenant every `eval_interval_seconds`, rounded down
    /// to whole steps.
    pub fn new(
        specs: Vec<(TenantId, BehaviorSpec)>,
        eval_interval_seconds: u64,
        step_seconds: u64,
    ) -> Self {
        assert!(step_seconds >= 1);
        let tenants = specs
            .into_iter()
            .map(|(id, spec)| TenantState {
                id,
                eval: FourierEval::new(&spec),
                target: 0,
                held: Vec::new(),
            })
            .collect();
        Self {
            tenants,
            step_seconds,
            eval_steps: (eval_interval_seconds / step_seconds).max(1),
        }
    }

    pub fn tenant_count(&self) -> usize {
        self.tenants.len()
    }

    pub fn held_count(&self) -> u64 {
        self.tenants.iter().map(|t| t.held.len() as u64).sum()
    }

    #[cfg(test)]
    fn due(&self, tenant_idx: usize, now_seconds: u64) -> bool {
        let step_index = now_seconds / self.step_seconds;
        step_index % self.eval_steps == tenant_idx as u64 % self.eval_steps
    }

    /// Peak total demand over one day under the same staggered evaluation
    /// the live run uses. Demand is periodic with a one-day base period, so
    /// the daily peak is the run peak.
    pub fn measure_peak_demand(&self) -> u64 {
        let mut targets = vec![0u64; self.tenants.len()];
        let mut sum = 0u64;
        let mut peak = 0u64;
        let mut now = 0u64;
        while now < crate::time::DAY_SECONDS {
            let t = SimTime(now).day_fraction();
            let mut i = (now / self.step_seconds % self.eval_steps) as usize;
            while i < self.tenants.len() {
                let next = self.tenants[i].eval.target(t) as u64;
                sum = sum - targets[i] + next;
                targets[i] = next;
                i += self.eval_steps as usize;
            }
            peak = peak.max(sum);
            now += self.step_seconds;
        }
        peak
    }
}

impl Agent for AutoscaleAgent {
    fn step(&mut self, now: SimTime, rng: &mut SimRng, out: &mut Vec<Request>) {
        let t = now.day_fraction();
        // Walk only this step's due tenants: those congruent to the step
        // index modulo the evaluation stride.
        let mut i = (now.seconds() / self.step_seconds % self.eval_steps) as usize;
        while i < self.tenants.len() {
            let tenant = &mut self.tenants[i];
            tenant.target = tenant.eval.target(t);
            let held = tenant.held.len() as i64;
            let deficit = tenant.target as i64 - held;
            if deficit > 0 {
                for _ in 0..deficit {
                    out.push(Request::Allocate {
                        tenant: tenant.id,
                        token: i as u64,
                    });
                }
            } else {
                for _ in 0..(-deficit) {
                    let pick = rng.gen_range(tenant.held.len() as u64) as usize;
                    let ip = tenant.held.swap_remove(pick);
                    out.push(Request::Release {
                        tenant: tenant.id,
                        ip,
                    });
                }
            }
            i += self.eval_steps as usize;
        }
    }

    fn on_allocated(&mut self, _tenant: TenantId, token: u64, ip: IpId, _now: SimTime) {
        self.tenants[token as usize].held.push(ip);
    }

    fn peak_concurrency(&self) -> u64 {
        self.measure_peak_demand()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::sample_behavior_spec;

    fn flat_agent(held: u32, s: u32) -> AutoscaleAgent {
        // Static tenant: s_min == s_max == s.
        let spec = BehaviorSpec::new(s, s, vec![1.0], vec![0.0]).unwrap();
        let mut agent = AutoscaleAgent::new(vec![(TenantId(1), spec)], 1, 1);
        agent.tenants[0].held = (0..held).map(IpId).collect();
        agent
    }

    #[test]
    fn requests_the_shortfall() {
        let mut agent = flat_agent(50, 53);
        let mut out = Vec::new();
        agent.step(SimTime(0), &mut SimRng::new(1), &mut out);
        assert_eq!(out.len(), 3);
        assert!(out
            .iter()
            .all(|r| matches!(r, Request::Allocate { tenant, .. } if *tenant == TenantId(1))));
    }

    #[test]
    fn releases_the_surplus_from_held_ips() {
        let mut agent = flat_agent(53, 50);
        let mut out = Vec::new();
        agent.step(SimTime(0), &mut SimRng::new(1), &mut out);
        assert_eq!(out.len(), 3);
        let mut released = Vec::new();
        for r in &out {
            match r {
                Request::Release { tenant, ip } => {
                    assert_eq!(*tenant, TenantId(1));
                    released.push(*ip);
                }
                _ => panic!("expected releases only"),
            }
        }
        released.sort();
        released.dedup();
        assert_eq!(released.len(), 3, "releases must target distinct held IPs");
        assert_eq!(agent.held_count(), 50);
    }

    #[test]
    fn no_requests_at_target() {
        let mut agent = flat_agent(50, 50);
        let mut out = Vec::new();
        agent.step(SimTime(0), &mut SimRng::new(1), &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn staggering_spreads_evaluations() {
        let mut rng = SimRng::new(4);
        let specs: Vec<_> = (0..10)
            .map(|i| (TenantId(i), sample_behavior_spec(&mut rng, 1, 9, 3, true)))
            .collect();
        let agent = AutoscaleAgent::new(specs, 60, 1);
        for i in 0..10usize {
            let due: Vec<u64> = (0..120).filter(|&s| agent.due(i, s)).collect();
            assert_eq!(due, vec![i as u64, i as u64 + 60]);
        }
    }

    #[test]
    fn stagger_works_with_coarse_steps() {
        let mut rng = SimRng::new(4);
        let specs: Vec<_> = (0..7)
            .map(|i| (TenantId(i), sample_behavior_spec(&mut rng, 1, 9, 3, true)))
            .collect();
        // 60 s evaluations at 60 s steps: every tenant is due every step.
        let agent = AutoscaleAgent::new(specs, 60, 60);
        for i in 0..7usize {
            for s in (0..600).step_by(60) {
                assert!(agent.due(i, s));
            }
        }
    }

    #[test]
    fn held_counts_track_targets_within_limits() {
        let mut rng = SimRng::new(21);
        let specs: Vec<_> = (0..20)
            .map(|i| (TenantId(i), sample_behavior_spec(&mut rng, 3, 15, 4, true)))
            .collect();
        let limits: Vec<(u32, u32)> = specs.iter().map(|(_, s)| (s.s_min, s.s_max)).collect();
        let mut agent = AutoscaleAgent::new(specs, 60, 1);
        let mut out = Vec::new();
        let mut next_ip = 0u32;
        // Grant every request; held must equal the last evaluated target,
        // which the limits clamp.
        for s in 0..(2 * crate::time::DAY_SECONDS / 60) {
            out.clear();
            agent.step(SimTime(s * 60), &mut rng, &mut out);
            for req in out.clone() {
                if let Request::Allocate { tenant, token } = req {
                    agent.on_allocated(tenant, token, IpId(next_ip), SimTime(s * 60));
                    next_ip += 1;
                }
            }
            for (i, t) in agent.tenants.iter().enumerate() {
                if t.target > 0 {
                    assert!(t.held.len() as u32 <= limits[i].1);
                    assert_eq!(t.held.len() as u32, t.target);
                    assert!(t.target >= limits[i].0 && t.target <= limits[i].1);
                }
            }
        }
    }

    #[test]
    fn peak_demand_bounds_sum_of_maxima() {
        let mut rng = SimRng::new(4);
        let specs: Vec<_> = (0..50)
            .map(|i| (TenantId(i), sample_behavior_spec(&mut rng, 2, 12, 4, true)))
            .collect();
        let cap: u64 = specs.iter().map(|(_, s)| s.s_max as u64).sum();
        let agent = AutoscaleAgent::new(specs, 60, 1);
        let peak = agent.measure_peak_demand();
        assert!(peak > 0 && peak <= cap);
    }
}
