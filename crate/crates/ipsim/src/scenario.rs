//! Named scenario construction and the parameter-sweep harness.
//!
//! A scenario builds a roster of agents from the run configuration, sizes
//! the pool against the roster's measured peak demand, and hands everything
//! to the engine. Roster order is part of the deterministic contract:
//! benign agents come first and the adversary last, so within a step the
//! adversary's requests are processed after benign traffic. Sweeps run one
//! scenario per axis value on a worker pool, with per-point seeds derived
//! deterministically from the base seed.

use crate::agent::{AdversaryAgent, AdversaryMode, Agent, AutoscaleAgent, TraceAgent};
use crate::behavior::sample_behavior_spec;
use crate::config::{RunConfig, ScenarioKind};
use crate::engine::{EngineConfig, SimError, Simulation};
use crate::ingest::{self, AllocationEvent};
use crate::policy::make_policy;
use crate::rng::SimRng;
use crate::stats::RunStats;
use crate::types::{derive_pool_size, TenantId};
use rayon::prelude::*;
use serde::Serialize;

/// Adversary accounts live far above any benign tenant id.
pub const ADVERSARY_TENANT_BASE: u64 = 1 << 40;

/// RNG stream id for sampling tenant behavior profiles.
const STREAM_TENANT_SAMPLING: u64 = 500;
/// Offset for per-sweep-point seed derivation.
const STREAM_SWEEP_BASE: u64 = 9000;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Build the simulation for a config. `trace` supplies events for
/// trace-replay runs constructed programmatically; otherwise the config's
/// `trace_path` is loaded.
pub fn build_simulation(
    cfg: &RunConfig,
    trace: Option<Vec<AllocationEvent>>,
) -> Result<Simulation, ScenarioError> {
    cfg.validate()?;
    let mut agents: Vec<Box<dyn Agent>> = Vec::new();
    let mut peak_demand = 0u64;

    match cfg.scenario {
        ScenarioKind::TraceReplay => {
            let events = match trace {
                Some(events) => events,
                None => {
                    let path = cfg.trace_path.as_ref().ok_or_else(|| {
                        crate::config::ConfigError::Invalid(
                            "trace-replay runs need trace_path".into(),
                        )
                    })?;
                    ingest::load_trace(path, 0.01)?.events
                }
            };
            peak_demand += ingest::max_concurrency(&events);
            agents.push(Box::new(TraceAgent::new(events)));
        }
        _ => {
            let mut rng = SimRng::stream(cfg.seed, STREAM_TENANT_SAMPLING);
            let specs = (0..cfg.tenants)
                .map(|i| {
                    let s_min = cfg.s_min_range.0
                        + rng.gen_range((cfg.s_min_range.1 - cfg.s_min_range.0 + 1) as u64) as u32;
                    let s_max = s_min
                        + cfg.s_max_extra.0
                        + rng.gen_range((cfg.s_max_extra.1 - cfg.s_max_extra.0 + 1) as u64) as u32;
                    let spec = sample_behavior_spec(
                        &mut rng,
                        s_min,
                        s_max,
                        cfg.fourier_terms,
                        cfg.bias_phase1,
                    );
                    (TenantId(i), spec)
                })
                .collect();
            let autoscale =
                AutoscaleAgent::new(specs, cfg.autoscale_eval_seconds, cfg.step_seconds);
            peak_demand += autoscale.measure_peak_demand();
            agents.push(Box::new(autoscale));
        }
    }

    if cfg.scenario.has_adversary() {
        let mode = match cfg.scenario {
            ScenarioKind::SingleTenant => AdversaryMode::Single,
            _ => AdversaryMode::Multi,
        };
        let adversary = AdversaryAgent::new(
            mode,
            cfg.adversary_concurrency,
            cfg.adversary_hold_seconds,
            cfg.adversary_tenant_budget,
            ADVERSARY_TENANT_BASE,
        );
        peak_demand += adversary.peak_concurrency();
        agents.push(Box::new(adversary));
    }

    let pool_size = cfg
        .pool_size
        .unwrap_or_else(|| derive_pool_size(peak_demand, cfg.ar_max));
    if pool_size > u32::MAX as u64 {
        return Err(crate::config::ConfigError::Invalid(format!(
            "pool of {pool_size} IPs exceeds the supported index space"
        ))
        .into());
    }
    let policy = make_policy(cfg.policy, pool_size as u32, cfg.d_reuse_seconds, cfg.alpha);
    Ok(Simulation::new(
        EngineConfig {
            pool_size: pool_size as u32,
            step_seconds: cfg.step_seconds,
            warmup_days: cfg.warmup_days,
            adversary_days: cfg.adversary_days,
            p_c: cfg.p_c,
            seed: cfg.seed,
            stats_interval_seconds: cfg.stats_interval_seconds,
        },
        policy,
        agents,
    ))
}

pub fn run_scenario(cfg: &RunConfig) -> Result<RunStats, ScenarioError> {
    Ok(build_simulation(cfg, None)?.run()?)
}

pub fn run_scenario_with_trace(
    cfg: &RunConfig,
    events: Vec<AllocationEvent>,
) -> Result<RunStats, ScenarioError> {
    Ok(build_simulation(cfg, Some(events))?.run()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    ArMax,
    Alpha,
    TenantBudget,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ArMax => "ar_max",
            SweepAxis::Alpha => "alpha",
            SweepAxis::TenantBudget => "tenant_budget",
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepAxis::ArMax => cfg.ar_max = value,
            SweepAxis::Alpha => cfg.alpha = value,
            SweepAxis::TenantBudget => cfg.adversary_tenant_budget = value.round() as u64,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ar_max" => Ok(SweepAxis::ArMax),
            "alpha" => Ok(SweepAxis::Alpha),
            "tenant_budget" => Ok(SweepAxis::TenantBudget),
            other => Err(format!(
                "unknown axis {other:?}; expected ar_max, alpha or tenant_budget"
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub unique_ip_yield: Option<f64>,
    pub lc_yield: Option<f64>,
    pub ar_max_observed: f64,
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub seed: u64,
    pub result: Result<SweepSummary, String>,
}

/// Run one simulation per axis value. Points execute on a dedicated worker
/// pool of `parallelism` threads; output order and content are independent
/// of the parallelism. Failed points carry their error and the sweep
/// continues.
pub fn run_sweep(
    base: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    parallelism: usize,
) -> Vec<SweepPoint> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(idx, &value)| {
                let mut cfg = base.clone();
                axis.apply(&mut cfg, value);
                let seed = SimRng::stream(base.seed, STREAM_SWEEP_BASE + idx as u64).next_u64();
                cfg.seed = seed;
                let result = run_scenario(&cfg)
                    .map(|stats| SweepSummary {
                        unique_ip_yield: stats.unique_ip_yield(),
                        lc_yield: stats.lc_yield(),
                        ar_max_observed: stats.ar_max_observed,
                    })
                    .map_err(|e| e.to_string());
                SweepPoint {
                    value,
                    seed,
                    result,
                }
            })
            .collect()
    })
}

/// Sweep results as CSV with a provenance header.
pub fn sweep_csv(axis: SweepAxis, points: &[SweepPoint], header_lines: &[String]) -> String {
    let mut out = String::new();
    for line in header_lines {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&format!(
        "{},seed,unique_ip_yield,lc_yield,ar_max_observed,status\n",
        axis.name()
    ));
    for p in points {
        match &p.result {
            Ok(s) => {
                let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},ok\n",
                    p.value,
                    p.seed,
                    fmt_opt(s.unique_ip_yield),
                    fmt_opt(s.lc_yield),
                    s.ar_max_observed
                ));
            }
            Err(e) => {
                out.push_str(&format!(
                    "{},{},,,,error: {}\n",
                    p.value,
                    p.seed,
                    e.replace(['\n', ','], ";")
                ));
            }
        }
    }
    out
}
