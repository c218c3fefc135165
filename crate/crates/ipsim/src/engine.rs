//! The time-stepped simulator: advances the clock, routes agent requests to
//! the policy, manages the IP lifecycle and latent-configuration attachment,
//! and feeds the statistics collector.
//!
//! Within a step, agents are polled in roster order and all releases execute
//! before any allocation. On a benign release the engine samples latent
//! configuration from the completed allocation's duration; on an adversary
//! grant it lets the agent observe the IP's live configurations.

use crate::agent::{Agent, Request};
use crate::behavior::{sample_latent_config, LatentConfigModel};
use crate::policy::{AllocationPolicy, PoolExhausted};
use crate::rng::SimRng;
use crate::stats::{RunStats, StatsCollector};
use crate::time::{SimTime, DAY_SECONDS};
use crate::types::{IpId, Pool, TenantId, TenantTable};

/// RNG stream ids carved out of the run seed.
const STREAM_POLICY: u64 = 1;
const STREAM_CONFIG: u64 = 2;
const STREAM_STATS: u64 = 3;
const STREAM_AGENT_BASE: u64 = 1000;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("contract violation at {now}: {message}")]
    ContractViolation { now: SimTime, message: String },
}

pub struct EngineConfig {
    pub pool_size: u32,
    pub step_seconds: u64,
    pub warmup_days: u64,
    pub adversary_days: u64,
    pub p_c: f64,
    pub seed: u64,
    pub stats_interval_seconds: u64,
}

pub struct Simulation {
    now: SimTime,
    end: SimTime,
    adversary_start: SimTime,
    step_seconds: u64,
    pool: Pool,
    owners: Vec<Option<TenantId>>,
    allocated: u64,
    policy: Box<dyn AllocationPolicy>,
    tenants: TenantTable,
    agents: Vec<Box<dyn Agent>>,
    agent_rngs: Vec<SimRng>,
    policy_rng: SimRng,
    config_rng: SimRng,
    config_model: LatentConfigModel,
    next_config_id: u64,
    stats: StatsCollector,
    request_buf: Vec<(usize, Request)>,
    scratch_buf: Vec<Request>,
}

impl Simulation {
    pub fn new(
        cfg: EngineConfig,
        mut policy: Box<dyn AllocationPolicy>,
        agents: Vec<Box<dyn Agent>>,
    ) -> Self {
        let mut pool = Pool::new(cfg.pool_size);
        for i in 0..cfg.pool_size {
            policy.init(&mut pool, IpId(i));
        }
        let agent_rngs = (0..agents.len())
            .map(|i| SimRng::stream(cfg.seed, STREAM_AGENT_BASE + i as u64))
            .collect();
        let end = SimTime((cfg.warmup_days + cfg.adversary_days) * DAY_SECONDS);
        Self {
            now: SimTime::ZERO,
            end,
            adversary_start: SimTime(cfg.warmup_days * DAY_SECONDS),
            step_seconds: cfg.step_seconds,
            owners: vec![None; cfg.pool_size as usize],
            pool,
            allocated: 0,
            policy,
            tenants: TenantTable::new(),
            agents,
            agent_rngs,
            policy_rng: SimRng::stream(cfg.seed, STREAM_POLICY),
            config_rng: SimRng::stream(cfg.seed, STREAM_CONFIG),
            config_model: LatentConfigModel { p_c: cfg.p_c },
            next_config_id: 0,
            stats: StatsCollector::new(
                cfg.pool_size as u64,
                cfg.stats_interval_seconds,
                cfg.step_seconds,
                SimRng::stream(cfg.seed, STREAM_STATS),
            ),
            request_buf: Vec::new(),
            scratch_buf: Vec::new(),
        }
    }

    /// Run to completion and return the collected statistics.
    pub fn run(mut self) -> Result<RunStats, SimError> {
        while self.now < self.end {
            self.step()?;
        }
        debug_assert_eq!(
            self.allocated + self.policy.free_count(),
            self.pool.size() as u64,
            "free and allocated sets must partition the pool"
        );
        Ok(self.stats.finish(self.now, self.allocated))
    }

    fn step(&mut self) -> Result<(), SimError> {
        let now = self.now;
        // Collect this step's requests from every active agent.
        let mut requests = std::mem::take(&mut self.request_buf);
        let mut scratch = std::mem::take(&mut self.scratch_buf);
        requests.clear();
        for (idx, agent) in self.agents.iter_mut().enumerate() {
            if agent.is_adversary() && now < self.adversary_start {
                continue;
            }
            scratch.clear();
            agent.step(now, &mut self.agent_rngs[idx], &mut scratch);
            requests.extend(scratch.iter().map(|&r| (idx, r)));
        }

        // Releases first: they free capacity for this step's allocations.
        for &(agent_idx, req) in &requests {
            if let Request::Release { tenant, ip } = req {
                self.handle_release(agent_idx, tenant, ip)?;
            }
        }
        for &(agent_idx, req) in &requests {
            if let Request::Allocate { tenant, token } = req {
                self.handle_allocate(agent_idx, tenant, token);
            }
        }

        self.request_buf = requests;
        self.scratch_buf = scratch;
        self.stats.on_step_end(now, self.allocated);
        self.now = SimTime(now.0 + self.step_seconds);
        Ok(())
    }

    fn handle_release(
        &mut self,
        agent_idx: usize,
        tenant: TenantId,
        ip: IpId,
    ) -> Result<(), SimError> {
        let now = self.now;
        if self.owners[ip.0 as usize] != Some(tenant) {
            return Err(SimError::ContractViolation {
                now,
                message: format!(
                    "agent {agent_idx} released {ip:?} for {tenant:?} without holding it"
                ),
            });
        }
        let held_seconds = now.saturating_sub(self.pool.record(ip).allocated_at);
        self.owners[ip.0 as usize] = None;
        self.allocated -= 1;
        self.policy
            .release(&mut self.pool, &mut self.tenants, ip, now);
        self.stats.on_release();

        // Benign releases may leave configuration behind; adversarial ones
        // never do, so exploitation metrics count victim configs only.
        if !self.agents[agent_idx].is_adversary() {
            let rec = self.pool.record_mut(ip);
            rec.purge_expired_configs(now);
            if let Some(config) = sample_latent_config(
                &mut self.config_rng,
                self.config_model,
                held_seconds,
                now,
                tenant,
                self.next_config_id,
            ) {
                self.next_config_id += 1;
                rec.configs.push(config);
            }
        }
        Ok(())
    }

    fn handle_allocate(&mut self, agent_idx: usize, tenant: TenantId, token: u64) {
        let now = self.now;
        let ip = match self.policy.allocate(
            &mut self.pool,
            &mut self.tenants,
            tenant,
            now,
            &mut self.policy_rng,
        ) {
            Ok(ip) => ip,
            Err(PoolExhausted) => {
                self.stats.on_pool_exhausted();
                self.agents[agent_idx].on_denied(tenant, token);
                return;
            }
        };
        debug_assert!(self.owners[ip.0 as usize].is_none());
        self.owners[ip.0 as usize] = Some(tenant);
        self.allocated += 1;

        let free_duration = {
            let rec = self.pool.record(ip);
            rec.released_at.map(|r| now.saturating_sub(r))
        };
        self.stats.on_allocation(free_duration);

        let agent = &mut self.agents[agent_idx];
        if agent.is_adversary() {
            let rec = self.pool.record_mut(ip);
            rec.purge_expired_configs(now);
            let obs = agent.observe(ip, &mut rec.configs);
            self.stats
                .on_adversary_allocation(obs.first_sight, &obs.discovered, now);
        }
        agent.on_allocated(tenant, token, ip, now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Observation;
    use crate::config::PolicyKind;
    use crate::policy::make_policy;
    use crate::types::LatentConfig;

    fn engine_config(pool: u32, days: u64) -> EngineConfig {
        EngineConfig {
            pool_size: pool,
            step_seconds: 1,
            warmup_days: 0,
            adversary_days: days,
            p_c: 0.5,
            seed: 7,
            stats_interval_seconds: 60,
        }
    }

    /// Scripted agent: a list of (time, request) pairs.
    struct ScriptAgent {
        script: Vec<(u64, Request)>,
        granted: Vec<(u64, IpId)>,
        adversary: bool,
        observations: Vec<Observation>,
    }

    impl ScriptAgent {
        fn new(script: Vec<(u64, Request)>, adversary: bool) -> Self {
            Self {
                script,
                granted: Vec::new(),
                adversary,
                observations: Vec::new(),
            }
        }
    }

    impl Agent for ScriptAgent {
        fn step(&mut self, now: SimTime, _rng: &mut SimRng, out: &mut Vec<Request>) {
            for (t, r) in &self.script {
                if *t == now.seconds() {
                    out.push(*r);
                }
            }
        }

        fn on_allocated(&mut self, _tenant: TenantId, token: u64, ip: IpId, now: SimTime) {
            self.granted.push((now.seconds(), ip));
            let _ = token;
        }

        fn is_adversary(&self) -> bool {
            self.adversary
        }

        fn observe(&mut self, _ip: IpId, configs: &mut [LatentConfig]) -> Observation {
            let mut discovered = Vec::new();
            for c in configs.iter_mut() {
                if !c.discovered {
                    c.discovered = true;
                    discovered.push((c.config_id, c.created_by));
                }
            }
            let obs = Observation {
                first_sight: true,
                discovered,
            };
            self.observations.push(obs.clone());
            obs
        }

        fn peak_concurrency(&self) -> u64 {
            self.script.len() as u64
        }
    }

    #[test]
    fn zero_day_run_is_empty() {
        let sim = Simulation::new(
            engine_config(10, 0),
            make_policy(PolicyKind::Random, 10, 1800, 2.0),
            vec![],
        );
        let stats = sim.run().unwrap();
        assert_eq!(stats.total_allocations, 0);
        assert_eq!(stats.simulated_seconds, 0);
        assert!(stats.series.is_empty());
    }

    #[test]
    fn release_of_unheld_ip_is_a_contract_violation() {
        let agent = ScriptAgent::new(
            vec![(
                0,
                Request::Release {
                    tenant: TenantId(1),
                    ip: IpId(0),
                },
            )],
            false,
        );
        let sim = Simulation::new(
            engine_config(4, 1),
            make_policy(PolicyKind::Lru, 4, 1800, 2.0),
            vec![Box::new(agent)],
        );
        assert!(matches!(sim.run(), Err(SimError::ContractViolation { .. })));
    }

    #[test]
    fn releases_process_before_allocations_within_a_step() {
        // One IP: tenant 1 releases it at t=5 and tenant 2 allocates at t=5.
        let a = ScriptAgent::new(
            vec![
                (
                    0,
                    Request::Allocate {
                        tenant: TenantId(1),
                        token: 0,
                    },
                ),
                (
                    5,
                    Request::Release {
                        tenant: TenantId(1),
                        ip: IpId(0),
                    },
                ),
            ],
            false,
        );
        let b = ScriptAgent::new(
            vec![(
                5,
                Request::Allocate {
                    tenant: TenantId(2),
                    token: 0,
                },
            )],
            false,
        );
        let sim = Simulation::new(
            engine_config(1, 1),
            make_policy(PolicyKind::Lru, 1, 1800, 2.0),
            vec![Box::new(a), Box::new(b)],
        );
        let stats = sim.run().unwrap();
        assert_eq!(stats.total_allocations, 2);
        assert_eq!(stats.pool_exhausted, 0);
        // Same-step reuse means a zero-second free duration sample.
        assert_eq!(stats.free_duration_samples, vec![0]);
    }

    #[test]
    fn config_expiring_at_observation_instant_is_not_discovered() {
        // Benign holder releases at t=10; we plant a config dissociating at
        // exactly t=20 and have the adversary allocate at t=20.
        let benign = ScriptAgent::new(
            vec![
                (
                    0,
                    Request::Allocate {
                        tenant: TenantId(1),
                        token: 0,
                    },
                ),
                (
                    10,
                    Request::Release {
                        tenant: TenantId(1),
                        ip: IpId(0),
                    },
                ),
            ],
            false,
        );
        let adversary = ScriptAgent::new(
            vec![(
                20,
                Request::Allocate {
                    tenant: TenantId(100),
                    token: 0,
                },
            )],
            true,
        );
        let mut sim = Simulation::new(
            EngineConfig {
                p_c: 0.0,
                ..engine_config(1, 1)
            },
            make_policy(PolicyKind::Lru, 1, 1800, 2.0),
            vec![Box::new(benign), Box::new(adversary)],
        );
        // Plant the configuration by hand to pin its dissociation time.
        sim.pool.record_mut(IpId(0)).configs.push(LatentConfig {
            config_id: 9,
            created_by: TenantId(1),
            released_at: SimTime(10),
            dissociates_at: SimTime(20),
            discovered: false,
        });
        let stats = sim.run().unwrap();
        assert_eq!(stats.adversary_allocations, 1);
        assert_eq!(stats.adversary_unique_ips, 1);
        assert_eq!(
            stats.adversary_configs_discovered, 0,
            "exploitation requires allocation strictly before dissociation"
        );
        assert_eq!(stats.adversary_lc_allocations, 0);
    }

    #[test]
    fn benign_allocation_leaves_configs_intact() {
        // A benign tenant cycles through the IP carrying a live config; the
        // adversary still discovers it afterwards, so the benign allocation
        // neither cleared nor discovered it.
        let benign = ScriptAgent::new(
            vec![
                (
                    0,
                    Request::Allocate {
                        tenant: TenantId(1),
                        token: 0,
                    },
                ),
                (
                    10,
                    Request::Release {
                        tenant: TenantId(1),
                        ip: IpId(0),
                    },
                ),
            ],
            false,
        );
        let adversary = ScriptAgent::new(
            vec![(
                20,
                Request::Allocate {
                    tenant: TenantId(100),
                    token: 0,
                },
            )],
            true,
        );
        let mut sim = Simulation::new(
            EngineConfig {
                p_c: 0.0,
                ..engine_config(1, 1)
            },
            make_policy(PolicyKind::Lru, 1, 1800, 2.0),
            vec![Box::new(benign), Box::new(adversary)],
        );
        sim.pool.record_mut(IpId(0)).configs.push(LatentConfig {
            config_id: 3,
            created_by: TenantId(5),
            released_at: SimTime(0),
            dissociates_at: SimTime(1_000_000),
            discovered: false,
        });
        let stats = sim.run().unwrap();
        assert_eq!(stats.adversary_configs_discovered, 1);
        assert_eq!(stats.exploit_log.len(), 1);
        assert_eq!(stats.exploit_log[0].victim, TenantId(5));
        assert_eq!(stats.exploit_log[0].discovered_at, 20);
    }

    #[test]
    fn adversary_waits_for_warmup() {
        let adversary = ScriptAgent::new(
            vec![(
                0,
                Request::Allocate {
                    tenant: TenantId(100),
                    token: 0,
                },
            )],
            true,
        );
        let sim = Simulation::new(
            EngineConfig {
                warmup_days: 1,
                adversary_days: 0,
                ..engine_config(4, 0)
            },
            make_policy(PolicyKind::Lru, 4, 1800, 2.0),
            vec![Box::new(adversary)],
        );
        let stats = sim.run().unwrap();
        assert_eq!(
            stats.adversary_allocations, 0,
            "the adversary never steps before warm-up ends"
        );
    }
}
