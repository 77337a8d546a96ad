//! Per-step latency of the streaming estimators.

use std::hint::black_box;
use std::time::Instant;

use relest_core::{IntegralEstimator, Semera};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::simulate_seed;

pub const MIN_ITERATIONS: usize = 10_000;

/// Steps timed together; per-step latency is the batch time divided by this.
pub const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub median_ns: f64,
    pub p99_ns: f64,
}

impl LatencyStats {
    fn from_samples(mut per_step_ns: Vec<f64>) -> Self {
        per_step_ns.sort_by(f64::total_cmp);
        let at = |q: f64| per_step_ns[((per_step_ns.len() - 1) as f64 * q).round() as usize];
        Self { median_ns: at(0.5), p99_ns: at(0.99) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub iterations: usize,
    pub semera: LatencyStats,
    pub integral: LatencyStats,
}

/// Time `iterations` steps of each estimator over a simulated noisy trace,
/// looping it as needed.
pub fn bench_step(cfg: &ExperimentConfig, iterations: usize) -> Result<BenchReport> {
    if iterations < MIN_ITERATIONS {
        return Err(Error::TooFewIterations { min: MIN_ITERATIONS, got: iterations });
    }
    let trace = simulate_seed(cfg, cfg.seeds[0])?;
    let data: Vec<(f64, f64)> = trace.samples.iter().map(|s| (s.u, s.iota)).collect();
    let resets = cfg.reset_indices();
    let mut is_reset = vec![false; data.len()];
    for &r in resets.iter().filter(|&&r| r > 0 && r < data.len()) {
        is_reset[r] = true;
    }
    let batches = iterations.div_ceil(BATCH);

    let mut semera = Semera::new(cfg.filter)?;
    let mut times = Vec::with_capacity(batches);
    let mut k = 0;
    for _ in 0..batches {
        let start = Instant::now();
        for _ in 0..BATCH {
            let (u, i) = data[k];
            black_box(semera.step(black_box(u), black_box(i))?);
            k = (k + 1) % data.len();
        }
        times.push(start.elapsed().as_nanos() as f64 / BATCH as f64);
    }
    let semera_stats = LatencyStats::from_samples(times);

    let mut integral = IntegralEstimator::from_filter_config(&cfg.filter, cfg.lambda0)?;
    let mut times = Vec::with_capacity(batches);
    let mut k = 0;
    for _ in 0..batches {
        let start = Instant::now();
        for _ in 0..BATCH {
            let (u, i) = data[k];
            black_box(integral.step(black_box(u), black_box(i), is_reset[k])?);
            k = (k + 1) % data.len();
        }
        times.push(start.elapsed().as_nanos() as f64 / BATCH as f64);
    }

    Ok(BenchReport {
        iterations: batches * BATCH,
        semera: semera_stats,
        integral: LatencyStats::from_samples(times),
    })
}
