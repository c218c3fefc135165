//! Run configuration: the JSON document consumed by the CLI and the C API.
//!
//! A config fully determines a run together with its seed: identical configs
//! produce bit-identical statistics.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Random,
    Lru,
    Tagged,
    Segmented,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PolicyKind::Random => "random",
            PolicyKind::Lru => "lru",
            PolicyKind::Tagged => "tagged",
            PolicyKind::Segmented => "segmented",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Autoscaling tenants only; no adversary is active.
    Benign,
    /// Autoscaling tenants plus a pool scanner confined to one account.
    SingleTenant,
    /// Autoscaling tenants plus a scanner that rotates through accounts.
    MultiTenant,
    /// Replay of an ingested allocation trace, plus the rotating scanner.
    TraceReplay,
}

impl ScenarioKind {
    pub fn has_adversary(self) -> bool {
        !matches!(self, ScenarioKind::Benign)
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScenarioKind::Benign => "benign",
            ScenarioKind::SingleTenant => "single-tenant",
            ScenarioKind::MultiTenant => "multi-tenant",
            ScenarioKind::TraceReplay => "trace-replay",
        };
        f.write_str(s)
    }
}

fn default_ar_max() -> f64 {
    0.9
}
fn default_step_seconds() -> u64 {
    1
}
fn default_warmup_days() -> u64 {
    10
}
fn default_adversary_days() -> u64 {
    10
}
fn default_d_reuse() -> u64 {
    1800
}
fn default_alpha() -> f64 {
    2.0
}
fn default_p_c() -> f64 {
    0.5
}
fn default_tenants() -> u64 {
    1000
}
fn default_s_min_range() -> (u32, u32) {
    (2, 6)
}
fn default_s_max_extra() -> (u32, u32) {
    (3, 9)
}
fn default_fourier_terms() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_autoscale_eval() -> u64 {
    60
}
fn default_adversary_concurrency() -> u64 {
    60
}
fn default_adversary_hold() -> u64 {
    600
}
fn default_tenant_budget() -> u64 {
    10_000
}
fn default_stats_interval() -> u64 {
    60
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub policy: PolicyKind,
    pub seed: u64,

    /// Explicit pool size; when absent the pool is sized so the roster's
    /// measured peak demand lands at `ar_max`.
    #[serde(default)]
    pub pool_size: Option<u64>,
    #[serde(default = "default_ar_max")]
    pub ar_max: f64,
    #[serde(default = "default_step_seconds")]
    pub step_seconds: u64,
    #[serde(default = "default_warmup_days")]
    pub warmup_days: u64,
    #[serde(default = "default_adversary_days")]
    pub adversary_days: u64,
    /// Minimum seconds an IP must sit free before pseudorandom reallocation.
    #[serde(default = "default_d_reuse")]
    pub d_reuse_seconds: u64,
    /// Cooldown multiplier for the segmented policy.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Probability that a benign release leaves latent configuration behind.
    #[serde(default = "default_p_c")]
    pub p_c: f64,

    /// Number of autoscaling tenants (ignored for trace replay).
    #[serde(default = "default_tenants")]
    pub tenants: u64,
    /// Inclusive range each tenant's minimum server count is drawn from.
    #[serde(default = "default_s_min_range")]
    pub s_min_range: (u32, u32),
    /// Inclusive range of the extra span added on top of `s_min`.
    #[serde(default = "default_s_max_extra")]
    pub s_max_extra: (u32, u32),
    #[serde(default = "default_fourier_terms")]
    pub fourier_terms: usize,
    /// Restrict the lowest-frequency phase to [0, 0.5) so tenant demand
    /// peaks roughly align within the day.
    #[serde(default = "default_true")]
    pub bias_phase1: bool,
    /// Seconds between demand re-evaluations of any single tenant; tenants
    /// are staggered across this interval.
    #[serde(default = "default_autoscale_eval")]
    pub autoscale_eval_seconds: u64,

    #[serde(default = "default_adversary_concurrency")]
    pub adversary_concurrency: u64,
    #[serde(default = "default_adversary_hold")]
    pub adversary_hold_seconds: u64,
    /// Accounts available to the rotating scanner; 1 pins it to one account.
    #[serde(default = "default_tenant_budget")]
    pub adversary_tenant_budget: u64,

    /// Normalized trace CSV for `trace-replay` runs.
    #[serde(default)]
    pub trace_path: Option<PathBuf>,

    /// Sampling interval of the statistics time series.
    #[serde(default = "default_stats_interval")]
    pub stats_interval_seconds: u64,
}

impl RunConfig {
    /// A benign desk-scale template; callers override what they need.
    pub fn template(scenario: ScenarioKind, policy: PolicyKind, seed: u64) -> Self {
        let budget = match scenario {
            ScenarioKind::SingleTenant => 1,
            _ => default_tenant_budget(),
        };
        Self {
            scenario,
            policy,
            seed,
            pool_size: None,
            ar_max: default_ar_max(),
            step_seconds: default_step_seconds(),
            warmup_days: default_warmup_days(),
            adversary_days: default_adversary_days(),
            d_reuse_seconds: default_d_reuse(),
            alpha: default_alpha(),
            p_c: default_p_c(),
            tenants: default_tenants(),
            s_min_range: default_s_min_range(),
            s_max_extra: default_s_max_extra(),
            fourier_terms: default_fourier_terms(),
            bias_phase1: true,
            autoscale_eval_seconds: default_autoscale_eval(),
            adversary_concurrency: default_adversary_concurrency(),
            adversary_hold_seconds: default_adversary_hold(),
            adversary_tenant_budget: budget,
            trace_path: None,
            stats_interval_seconds: default_stats_interval(),
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.ar_max > 0.0 && self.ar_max <= 1.0) {
            return fail(format!("ar_max must be in (0,1], got {}", self.ar_max));
        }
        if self.pool_size == Some(0) {
            return fail("pool_size must be positive".into());
        }
        if self.step_seconds == 0 {
            return fail("step_seconds must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_c) {
            return fail(format!("p_c must be in [0,1], got {}", self.p_c));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return fail(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if self.fourier_terms == 0 {
            return fail("fourier_terms must be >= 1".into());
        }
        if self.s_min_range.0 > self.s_min_range.1 {
            return fail("s_min_range must be (lo, hi) with lo <= hi".into());
        }
        if self.s_max_extra.0 > self.s_max_extra.1 {
            return fail("s_max_extra must be (lo, hi) with lo <= hi".into());
        }
        if self.scenario.has_adversary() {
            if self.adversary_concurrency == 0 {
                return fail("adversary_concurrency must be positive".into());
            }
            if self.adversary_tenant_budget == 0 {
                return fail("adversary_tenant_budget must be positive".into());
            }
        }
        if self.stats_interval_seconds == 0 {
            return fail("stats_interval_seconds must be positive".into());
        }
        Ok(())
    }

    pub fn total_days(&self) -> u64 {
        self.warmup_days + self.adversary_days
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_round_trips_with_defaults() {
        let cfg =
            RunConfig::from_json_str(r#"{"scenario": "benign", "policy": "random", "seed": 7}"#)
                .unwrap();
        assert_eq!(cfg.ar_max, 0.9);
        assert_eq!(cfg.step_seconds, 1);
        assert_eq!(cfg.d_reuse_seconds, 1800);
        assert_eq!(cfg.p_c, 0.5);
        assert_eq!(cfg.warmup_days + cfg.adversary_days, 20);

        let json = serde_json::to_string(&cfg).unwrap();
        let again = RunConfig::from_json_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), json);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            r#"{"scenario": "benign", "policy": "random", "seed": 1, "ar_max": 0.0}"#,
            r#"{"scenario": "benign", "policy": "random", "seed": 1, "ar_max": 1.5}"#,
            r#"{"scenario": "benign", "policy": "random", "seed": 1, "pool_size": 0}"#,
            r#"{"scenario": "benign", "policy": "random", "seed": 1, "p_c": -0.1}"#,
            r#"{"scenario": "benign", "policy": "random", "seed": 1, "bogus_key": 3}"#,
        ] {
            assert!(RunConfig::from_json_str(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn single_tenant_template_pins_budget() {
        let cfg = RunConfig::template(ScenarioKind::SingleTenant, PolicyKind::Tagged, 1);
        assert_eq!(cfg.adversary_tenant_budget, 1);
        cfg.validate().unwrap();
    }
}
