//! Run statistics: time series sampled on a fixed interval, aggregate
//! counters, free-duration samples, the exploitation log, and the metric
//! definitions used to compare policies.

use crate::rng::SimRng;
use crate::time::SimTime;
use crate::types::TenantId;
use serde::{Deserialize, Serialize};

/// Exploitation log entries beyond this count are reservoir-sampled;
/// counters stay exact.
pub const EXPLOIT_LOG_CAP: usize = 1_000_000;

/// One sampled point of the run time series. `ar` is the peak allocation
/// ratio within the sampling window, so the series maximum equals the run
/// maximum; the cumulative adversary counters are absolute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub time_s: u64,
    pub ar: f64,
    pub adversary_allocations: u64,
    pub unique_ips: u64,
    pub configs_discovered: u64,
    pub lc_allocations: u64,
}

/// One discovered configuration: id, discovery time, victim tenant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploitRecord {
    pub config_id: u64,
    pub discovered_at: u64,
    pub victim: TenantId,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub simulated_seconds: u64,
    /// Allocations granted, overall and by adversarial agents.
    pub total_allocations: u64,
    pub total_releases: u64,
    pub held_at_end: u64,
    pub pool_size: u64,
    pub ar_max_observed: f64,
    pub pool_exhausted: u64,

    pub adversary_allocations: u64,
    pub adversary_unique_ips: u64,
    pub adversary_configs_discovered: u64,
    /// Allocations that returned a never-seen IP carrying live configuration.
    pub adversary_lc_allocations: u64,

    pub series: Vec<SeriesPoint>,
    /// Seconds each reused IP sat free before reallocation; first-ever
    /// allocations contribute no sample. Kept in memory for analysis but
    /// serialized only as the quantile summary below.
    #[serde(skip)]
    pub free_duration_samples: Vec<u32>,
    pub free_durations: Option<FreeDurationSummary>,
    pub exploit_log: Vec<ExploitRecord>,
    /// Total exploit entries seen, including ones sampled out of the log.
    pub exploit_entries_total: u64,
}

/// Nearest-rank quantile digest of the free-duration samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeDurationSummary {
    pub count: u64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    pub mean: f64,
}

impl FreeDurationSummary {
    fn from_cdf(cdf: &EmpiricalCdf, mean: f64) -> Self {
        Self {
            count: cdf.sample_count() as u64,
            min: cdf.min(),
            p25: cdf.quantile(0.25),
            p50: cdf.quantile(0.5),
            p75: cdf.quantile(0.75),
            p90: cdf.quantile(0.9),
            p99: cdf.quantile(0.99),
            max: cdf.max(),
            mean,
        }
    }
}

impl RunStats {
    /// Fraction of adversary allocations that returned a never-seen IP.
    pub fn unique_ip_yield(&self) -> Option<f64> {
        if self.adversary_allocations == 0 {
            None
        } else {
            Some(self.adversary_unique_ips as f64 / self.adversary_allocations as f64)
        }
    }

    /// Fraction of adversary allocations that returned a never-seen IP with
    /// live latent configuration.
    pub fn lc_yield(&self) -> Option<f64> {
        if self.adversary_allocations == 0 {
            None
        } else {
            Some(self.adversary_lc_allocations as f64 / self.adversary_allocations as f64)
        }
    }

    /// Unique-IP yield restricted to `[from, to)`, from the cumulative
    /// series: new unique IPs over allocations issued in the window.
    pub fn unique_ip_yield_between(&self, from: u64, to: u64) -> Option<f64> {
        let at = |limit: u64| {
            self.series
                .iter()
                .take_while(|p| p.time_s < limit)
                .last()
                .map(|p| (p.adversary_allocations, p.unique_ips))
                .unwrap_or((0, 0))
        };
        let (a0, u0) = at(from);
        let (a1, u1) = at(to);
        if a1 == a0 {
            None
        } else {
            Some((u1 - u0) as f64 / (a1 - a0) as f64)
        }
    }

    pub fn free_duration_distribution(&self) -> Option<EmpiricalCdf> {
        EmpiricalCdf::from_samples(self.free_duration_samples.iter().map(|&s| s as f64))
    }

    /// Recompute the serialized quantile digest from the raw samples.
    pub fn refresh_free_duration_summary(&mut self) {
        self.free_durations = self.free_duration_distribution().map(|cdf| {
            let mean = self
                .free_duration_samples
                .iter()
                .map(|&s| s as f64)
                .sum::<f64>()
                / self.free_duration_samples.len() as f64;
            FreeDurationSummary::from_cdf(&cdf, mean)
        });
    }

    /// Combine stats from two disjoint windows of the same scenario:
    /// counters add, samples and logs union, series concatenate in time.
    pub fn merge(mut self, other: RunStats) -> RunStats {
        self.simulated_seconds += other.simulated_seconds;
        self.total_allocations += other.total_allocations;
        self.total_releases += other.total_releases;
        self.held_at_end = other.held_at_end;
        self.pool_size = self.pool_size.max(other.pool_size);
        self.ar_max_observed = self.ar_max_observed.max(other.ar_max_observed);
        self.pool_exhausted += other.pool_exhausted;
        self.adversary_allocations += other.adversary_allocations;
        self.adversary_unique_ips += other.adversary_unique_ips;
        self.adversary_configs_discovered += other.adversary_configs_discovered;
        self.adversary_lc_allocations += other.adversary_lc_allocations;
        self.series.extend(other.series);
        self.series.sort_by_key(|p| p.time_s);
        self.free_duration_samples
            .extend(other.free_duration_samples);
        self.exploit_log.extend(other.exploit_log);
        self.exploit_entries_total += other.exploit_entries_total;
        self.refresh_free_duration_summary();
        self
    }

    /// The plot-ready series as CSV, prefixed with a provenance header.
    pub fn series_csv(&self, header_lines: &[String]) -> String {
        let mut out = String::new();
        for line in header_lines {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("time_s,ar,cumulative_unique_ips,cumulative_configs\n");
        for p in &self.series {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.time_s, p.ar, p.unique_ips, p.configs_discovered
            ));
        }
        out
    }
}

/// Sorted samples with nearest-rank quantile queries.
#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut sorted: Vec<f64> = samples.into_iter().collect();
        if sorted.is_empty() {
            return None;
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not be NaN"));
        Some(Self { sorted })
    }

    pub fn sample_count(&self) -> usize {
        self.sorted.len()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    /// Nearest-rank quantile: the ceil(q*n)-th order statistic, with q = 0
    /// mapping to the minimum.
    pub fn quantile(&self, q: f64) -> f64 {
        assert!((0.0..=1.0).contains(&q));
        let n = self.sorted.len();
        let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[rank - 1]
    }
}

/// Exponential maximum-likelihood fit: rate = n / sum(samples).
pub fn fit_exponential_mle(samples: &[f64]) -> Result<f64, MleError> {
    if samples.is_empty() {
        return Err(MleError::Empty);
    }
    if !samples.iter().all(|&s| s > 0.0) {
        return Err(MleError::NonPositiveSample);
    }
    let sum: f64 = samples.iter().sum();
    Ok(samples.len() as f64 / sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MleError {
    #[error("cannot fit an empty sample set")]
    Empty,
    #[error("samples must be positive")]
    NonPositiveSample,
}

/// Accumulator the engine feeds during a run.
pub struct StatsCollector {
    interval: u64,
    step_seconds: u64,
    pool_size: u64,
    window_end: u64,
    window_peak_allocated: u64,
    rng: SimRng,
    stats: RunStats,
}

impl StatsCollector {
    pub fn new(pool_size: u64, interval_seconds: u64, step_seconds: u64, rng: SimRng) -> Self {
        assert!(interval_seconds > 0 && step_seconds > 0);
        Self {
            interval: interval_seconds,
            step_seconds,
            pool_size,
            window_end: interval_seconds,
            window_peak_allocated: 0,
            rng,
            stats: RunStats {
                pool_size,
                ..RunStats::default()
            },
        }
    }

    pub fn on_allocation(&mut self, free_duration: Option<u64>) {
        self.stats.total_allocations += 1;
        if let Some(d) = free_duration {
            self.stats
                .free_duration_samples
                .push(d.min(u32::MAX as u64) as u32);
        }
    }

    pub fn on_release(&mut self) {
        self.stats.total_releases += 1;
    }

    pub fn on_pool_exhausted(&mut self) {
        self.stats.pool_exhausted += 1;
    }

    pub fn on_adversary_allocation(
        &mut self,
        first_sight: bool,
        discovered: &[(u64, TenantId)],
        now: SimTime,
    ) {
        self.stats.adversary_allocations += 1;
        if first_sight {
            self.stats.adversary_unique_ips += 1;
            if !discovered.is_empty() {
                self.stats.adversary_lc_allocations += 1;
            }
        }
        for &(config_id, victim) in discovered {
            self.stats.adversary_configs_discovered += 1;
            self.log_exploit(ExploitRecord {
                config_id,
                discovered_at: now.seconds(),
                victim,
            });
        }
    }

    fn log_exploit(&mut self, rec: ExploitRecord) {
        self.stats.exploit_entries_total += 1;
        if self.stats.exploit_log.len() < EXPLOIT_LOG_CAP {
            self.stats.exploit_log.push(rec);
        } else {
            // Reservoir sampling keeps the retained log uniform.
            let j = self.rng.gen_range(self.stats.exploit_entries_total);
            if (j as usize) < EXPLOIT_LOG_CAP {
                self.stats.exploit_log[j as usize] = rec;
            }
        }
    }

    /// Called once per step after all requests were processed. Flushes a
    /// series point when this step is the last one inside the current
    /// sampling window.
    pub fn on_step_end(&mut self, now: SimTime, allocated: u64) {
        self.window_peak_allocated = self.window_peak_allocated.max(allocated);
        let next_step = now.seconds() + self.step_seconds;
        if next_step >= self.window_end {
            self.flush_window(now.seconds());
            self.window_end = (next_step / self.interval + 1) * self.interval;
        }
    }

    fn flush_window(&mut self, time_s: u64) {
        let ar = crate::types::allocation_ratio(self.window_peak_allocated, self.pool_size);
        self.stats.ar_max_observed = self.stats.ar_max_observed.max(ar);
        self.stats.series.push(SeriesPoint {
            time_s,
            ar,
            adversary_allocations: self.stats.adversary_allocations,
            unique_ips: self.stats.adversary_unique_ips,
            configs_discovered: self.stats.adversary_configs_discovered,
            lc_allocations: self.stats.adversary_lc_allocations,
        });
        self.window_peak_allocated = 0;
    }

    pub fn finish(mut self, now: SimTime, held_at_end: u64) -> RunStats {
        if self.window_peak_allocated > 0 {
            self.flush_window(now.seconds());
        }
        self.stats.simulated_seconds = now.seconds();
        self.stats.held_at_end = held_at_end;
        self.stats.refresh_free_duration_summary();
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats_with(adv_allocs: u64, unique: u64, lc: u64) -> RunStats {
        RunStats {
            adversary_allocations: adv_allocs,
            adversary_unique_ips: unique,
            adversary_lc_allocations: lc,
            ..RunStats::default()
        }
    }

    #[test]
    fn unique_ip_yield_cases() {
        assert_eq!(stats_with(600, 600, 0).unique_ip_yield(), Some(1.0));
        assert_eq!(stats_with(600, 60, 0).unique_ip_yield(), Some(0.1));
        assert_eq!(stats_with(0, 0, 0).unique_ip_yield(), None);
    }

    #[test]
    fn lc_yield_is_bounded_by_unique_yield() {
        let s = stats_with(1000, 300, 120);
        assert_eq!(s.lc_yield(), Some(0.12));
        assert!(s.lc_yield() <= s.unique_ip_yield());
    }

    #[test]
    fn quantile_nearest_rank() {
        let cdf = EmpiricalCdf::from_samples([10.0, 20.0, 30.0]).unwrap();
        assert_eq!(cdf.quantile(0.5), 20.0);
        assert_eq!(cdf.quantile(0.0), 10.0);
        assert_eq!(cdf.quantile(1.0), 30.0);
        assert_eq!(cdf.min(), 10.0);
    }

    #[test]
    fn empty_distribution_is_absent() {
        assert!(EmpiricalCdf::from_samples(std::iter::empty()).is_none());
        assert!(RunStats::default().free_duration_distribution().is_none());
    }

    #[test]
    fn mle_examples() {
        assert_eq!(fit_exponential_mle(&[2.0, 2.0, 2.0]), Ok(0.5));
        assert_eq!(fit_exponential_mle(&[4.0]), Ok(0.25));
        assert_eq!(fit_exponential_mle(&[]), Err(MleError::Empty));
        assert_eq!(
            fit_exponential_mle(&[1.0, 0.0]),
            Err(MleError::NonPositiveSample)
        );
    }

    #[test]
    fn mle_recovers_mean_from_montecarlo_draws() {
        let mut rng = SimRng::new(15);
        let mean = 3600.0;
        let draws: Vec<f64> = (0..100_000)
            .map(|_| -mean * rng.uniform_open().ln())
            .collect();
        let rate = fit_exponential_mle(&draws).unwrap();
        let fitted_mean = 1.0 / rate;
        assert!(
            (fitted_mean - mean).abs() < mean * 0.02,
            "fitted {fitted_mean}"
        );
    }

    #[test]
    fn windowed_yield_uses_series_deltas() {
        let mut s = stats_with(200, 150, 0);
        s.series = vec![
            SeriesPoint {
                time_s: 60,
                ar: 0.5,
                adversary_allocations: 100,
                unique_ips: 100,
                configs_discovered: 0,
                lc_allocations: 0,
            },
            SeriesPoint {
                time_s: 120,
                ar: 0.5,
                adversary_allocations: 200,
                unique_ips: 150,
                configs_discovered: 0,
                lc_allocations: 0,
            },
        ];
        assert_eq!(s.unique_ip_yield_between(0, 61), Some(1.0));
        assert_eq!(s.unique_ip_yield_between(61, 121), Some(0.5));
        assert_eq!(s.unique_ip_yield_between(121, 200), None);
    }

    #[test]
    fn reservoir_keeps_counters_exact() {
        let mut c = StatsCollector::new(10, 60, 1, SimRng::new(1));
        for i in 0..100u64 {
            c.on_adversary_allocation(true, &[(i, TenantId(1))], SimTime(i));
        }
        let s = c.finish(SimTime(100), 0);
        assert_eq!(s.adversary_configs_discovered, 100);
        assert_eq!(s.exploit_entries_total, 100);
        assert_eq!(s.exploit_log.len(), 100);
    }

    proptest! {
        #[test]
        fn merge_is_consistent_with_concatenation(
            a in proptest::collection::vec(1u32..5000, 0..40),
            b in proptest::collection::vec(1u32..5000, 0..40),
        ) {
            let mk = |samples: &[u32], offset: u64| {
                let mut c = StatsCollector::new(100, 60, 1, SimRng::new(7));
                for (i, &s) in samples.iter().enumerate() {
                    c.on_allocation(Some(s as u64));
                    c.on_step_end(SimTime(offset + i as u64), 1);
                }
                c.finish(SimTime(offset + samples.len() as u64), 0)
            };
            let whole = mk(&[a.clone(), b.clone()].concat(), 0);
            let merged = mk(&a, 0).merge(mk(&b, a.len() as u64));
            prop_assert_eq!(whole.total_allocations, merged.total_allocations);
            let mut w = whole.free_duration_samples.clone();
            let mut m = merged.free_duration_samples.clone();
            w.sort();
            m.sort();
            prop_assert_eq!(w, m);
        }

        #[test]
        fn quantile_matches_naive_sort(
            samples in proptest::collection::vec(0.0f64..1e6, 1..200),
            q in 0.0f64..1.0,
        ) {
            let cdf = EmpiricalCdf::from_samples(samples.iter().copied()).unwrap();
            let mut sorted = samples.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
            prop_assert_eq!(cdf.quantile(q), sorted[rank - 1]);
        }
    }
}
