//! Statistical models of benign tenant demand and of the configuration
//! tenants leave behind on released IPs.
//!
//! Demand is a randomized Fourier series with a one-day base period: each
//! tenant gets per-term amplitudes and phases, and its server target swings
//! between `s_min` and `s_max` over the day. Latent configuration is a
//! Bernoulli draw per release; when left behind, its lifetime is exponential
//! with mean equal to the allocation duration that just ended.

use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::{LatentConfig, TenantId};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Amplitudes this small are treated as a degenerate (all-zero) series.
const MIN_AMPLITUDE_SUM: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BehaviorError {
    #[error("s_max ({s_max}) must be >= s_min ({s_min})")]
    InvalidServerRange { s_min: u32, s_max: u32 },
    #[error("Fourier series needs at least one term")]
    NoTerms,
    #[error("amplitudes must not all be zero")]
    ZeroAmplitudes,
    #[error("amplitudes and phases must have equal length")]
    MismatchedTerms,
}

/// A tenant's autoscaling profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BehaviorSpec {
    pub s_min: u32,
    pub s_max: u32,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl BehaviorSpec {
    pub fn new(
        s_min: u32,
        s_max: u32,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
    ) -> Result<Self, BehaviorError> {
        if s_max < s_min {
            return Err(BehaviorError::InvalidServerRange { s_min, s_max });
        }
        if amplitudes.is_empty() {
            return Err(BehaviorError::NoTerms);
        }
        if amplitudes.len() != phases.len() {
            return Err(BehaviorError::MismatchedTerms);
        }
        if amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a / (i + 1) as f64)
            .sum::<f64>()
            < MIN_AMPLITUDE_SUM
        {
            return Err(BehaviorError::ZeroAmplitudes);
        }
        Ok(Self {
            s_min,
            s_max,
            amplitudes,
            phases,
        })
    }

    pub fn terms(&self) -> usize {
        self.amplitudes.len()
    }
}

/// Relative deviation from the mean server usage at day-fraction `t`:
/// a weighted sine series normalized so the result stays in [-1, 1].
pub fn fourier_deviation(t: f64, spec: &BehaviorSpec) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (idx, (&a, &phi)) in spec.amplitudes.iter().zip(&spec.phases).enumerate() {
        let i = (idx + 1) as f64;
        let w = a / i;
        num += w * (TAU * i * (t + phi)).sin();
        den += w;
    }
    num / den
}

/// Integer server target at day-fraction `t`: mean usage plus the scaled
/// deviation, rounded and clamped to the tenant's limits.
pub fn target_servers(t: f64, spec: &BehaviorSpec) -> u32 {
    let mid = (spec.s_max as f64 + spec.s_min as f64) / 2.0;
    let span = (spec.s_max - spec.s_min) as f64;
    let raw = (mid + span * fourier_deviation(t, spec)).round();
    (raw.max(spec.s_min as f64).min(spec.s_max as f64)) as u32
}

/// Precomputed fast evaluator for one spec. Expands each term with the angle
/// addition identity so a call costs one sin and one cos, with the harmonics
/// built by recurrence. Agrees with `fourier_deviation` to ~1e-12.
#[derive(Clone, Debug)]
pub struct FourierEval {
    weights: Vec<f64>,
    sin_phase: Vec<f64>,
    cos_phase: Vec<f64>,
    mid: f64,
    span: f64,
    s_min: u32,
    s_max: u32,
}

impl FourierEval {
    pub fn new(spec: &BehaviorSpec) -> Self {
        let den: f64 = spec
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a / (i + 1) as f64)
            .sum();
        let mut weights = Vec::with_capacity(spec.terms());
        let mut sin_phase = Vec::with_capacity(spec.terms());
        let mut cos_phase = Vec::with_capacity(spec.terms());
        for (idx, (&a, &phi)) in spec.amplitudes.iter().zip(&spec.phases).enumerate() {
            let i = (idx + 1) as f64;
            weights.push(a / i / den);
            let theta = TAU * i * phi;
            sin_phase.push(theta.sin());
            cos_phase.push(theta.cos());
        }
        Self {
            weights,
            sin_phase,
            cos_phase,
            mid: (spec.s_max as f64 + spec.s_min as f64) / 2.0,
            span: (spec.s_max - spec.s_min) as f64,
            s_min: spec.s_min,
            s_max: spec.s_max,
        }
    }

    pub fn deviation(&self, t: f64) -> f64 {
        let (sin1, cos1) = (TAU * t).sin_cos();
        let mut sin_i = sin1;
        let mut cos_i = cos1;
        let mut acc = 0.0;
        for k in 0..self.weights.len() {
            // sin(i*x + theta_i) by angle addition.
            acc += self.weights[k] * (sin_i * self.cos_phase[k] + cos_i * self.sin_phase[k]);
            let next_sin = sin_i * cos1 + cos_i * sin1;
            let next_cos = cos_i * cos1 - sin_i * sin1;
            sin_i = next_sin;
            cos_i = next_cos;
        }
        acc
    }

    pub fn target(&self, t: f64) -> u32 {
        let raw = (self.mid + self.span * self.deviation(t)).round();
        (raw.max(self.s_min as f64).min(self.s_max as f64)) as u32
    }
}

/// Sample a tenant profile: amplitudes and phases uniform on the unit
/// interval, with the lowest-frequency phase restricted to `[0, 0.5)` when
/// `bias_phase1` is set so tenant peaks roughly align within the day.
pub fn sample_behavior_spec(
    rng: &mut SimRng,
    s_min: u32,
    s_max: u32,
    n_terms: usize,
    bias_phase1: bool,
) -> BehaviorSpec {
    assert!(n_terms >= 1);
    assert!(s_max >= s_min);
    loop {
        let amplitudes: Vec<f64> = (0..n_terms).map(|_| rng.uniform()).collect();
        let mut phases: Vec<f64> = (0..n_terms).map(|_| rng.uniform()).collect();
        if bias_phase1 {
            phases[0] = rng.uniform() * 0.5;
        }
        match BehaviorSpec::new(s_min, s_max, amplitudes, phases) {
            Ok(spec) => return spec,
            Err(BehaviorError::ZeroAmplitudes) => continue,
            Err(e) => unreachable!("sampled spec invalid: {e}"),
        }
    }
}

/// Probability that a release leaves configuration behind.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LatentConfigModel {
    pub p_c: f64,
}

/// Draw the latent configuration left by a release, if any.
///
/// With probability `p_c` the release leaves a configuration whose lifetime
/// is exponential with mean `allocation_seconds`, rounded to whole seconds.
/// A zero rounded lifetime means no exploitable window, so no configuration.
pub fn sample_latent_config(
    rng: &mut SimRng,
    model: LatentConfigModel,
    allocation_seconds: u64,
    released_at: SimTime,
    tenant: TenantId,
    config_id: u64,
) -> Option<LatentConfig> {
    if !rng.gen_bool(model.p_c) {
        return None;
    }
    let lifetime = (-(allocation_seconds as f64) * rng.uniform_open().ln()).round() as u64;
    if lifetime == 0 {
        return None;
    }
    Some(LatentConfig {
        config_id,
        created_by: tenant,
        released_at,
        dissociates_at: released_at + lifetime,
        discovered: false,
    })
}
