//! Simulation and estimation pipelines, RMSE tables and replay.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use relest_core::actuator::{simulate, SimTrace};
use relest_core::observability::steps_since_observable;
use relest_core::{offline_estimate, EstimateFrame, FilterConfig, IntegralEstimator, Semera};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::io::{self, InputSample};

pub const SEMERA: &str = "semera";
pub const INTEGRAL: &str = "integral";
pub const INTEGRAL_OFFLINE: &str = "integral_offline";

/// Root-mean-square difference of two aligned sequences.
pub fn rmse(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::LengthMismatch(estimates.len(), truth.len()));
    }
    let sum: f64 = estimates.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum();
    Ok((sum / estimates.len() as f64).sqrt())
}

/// Frames from all three estimators for one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRun {
    pub semera: Vec<EstimateFrame>,
    pub integral: Vec<EstimateFrame>,
    pub offline: Vec<EstimateFrame>,
}

impl EstimatorRun {
    pub fn blocks(&self) -> [(&'static str, &[EstimateFrame]); 3] {
        [(SEMERA, &self.semera), (INTEGRAL, &self.integral), (INTEGRAL_OFFLINE, &self.offline)]
    }
}

/// Run every estimator over `u`/`iota`. `resets` are the sample indices where
/// an energizing operation starts; the offline estimator also closes a cycle
/// at the last sample. Frame times are shifted by `t0`.
pub fn estimate_all(
    u: &[f64],
    iota: &[f64],
    t0: f64,
    filter: &FilterConfig,
    lambda0: f64,
    resets: &[usize],
) -> Result<EstimatorRun> {
    if u.len() != iota.len() {
        return Err(Error::LengthMismatch(u.len(), iota.len()));
    }
    let shift = |mut f: EstimateFrame| {
        f.t += t0;
        f
    };

    let mut semera = Semera::new(*filter)?;
    let mut integral = IntegralEstimator::from_filter_config(filter, lambda0)?;
    let mut s_frames = Vec::with_capacity(u.len());
    let mut i_frames = Vec::with_capacity(u.len());
    let mut next_reset = resets.iter().peekable();
    for (k, (&uk, &ik)) in u.iter().zip(iota).enumerate() {
        while next_reset.next_if(|&&r| r < k).is_some() {}
        let reset = next_reset.next_if(|&&r| r == k).is_some();
        if let Some(f) = semera.step(uk, ik)? {
            s_frames.push(shift(f));
        }
        if let Some(f) = integral.step(uk, ik, reset)? {
            i_frames.push(shift(f));
        }
    }

    let mut bounds: Vec<usize> = resets.iter().copied().filter(|&r| r < u.len()).collect();
    if let Some(last) = u.len().checked_sub(1) {
        bounds.push(last);
    }
    bounds.sort_unstable();
    bounds.dedup();
    let offline = if bounds.len() >= 2 {
        offline_estimate(u, iota, &bounds, filter, lambda0)?.into_iter().map(shift).collect()
    } else {
        Vec::new()
    };
    Ok(EstimatorRun { semera: s_frames, integral: i_frames, offline })
}

/// Estimate a recorded `t,u,iota` stream. Energizing operations are taken
/// from the configured drive waveform, counted from the first sample.
pub fn replay(samples: &[InputSample], cfg: &ExperimentConfig) -> Result<EstimatorRun> {
    let u: Vec<f64> = samples.iter().map(|s| s.u).collect();
    let iota: Vec<f64> = samples.iter().map(|s| s.iota).collect();
    let t0 = samples.first().map_or(0.0, |s| s.t);
    estimate_all(&u, &iota, t0, &cfg.filter, cfg.lambda0, &cfg.reset_indices())
}

/// RMSE windows over half-open drive cycles `[cT, (c+1)T)`. The final
/// sample of a trace only closes the last cycle and belongs to neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// `t < split_time`.
    First,
    /// `split_time ≤ t < t_end`.
    After,
}

impl Window {
    pub fn as_str(self) -> &'static str {
        match self {
            Window::First => "first_operation",
            Window::After => "after_first_operation",
        }
    }

    fn contains(self, k: usize, split_index: usize, last_index: usize) -> bool {
        match self {
            Window::First => k < split_index && k < last_index,
            Window::After => k >= split_index && k < last_index,
        }
    }
}

/// `[r, l, λ]` RMSE of one estimator in one window, `None` when the window
/// holds no frames.
pub fn window_rmse(frames: &[EstimateFrame], trace: &SimTrace, window: Window, split: f64) -> Result<Option<[f64; 3]>> {
    let mut est = [Vec::new(), Vec::new(), Vec::new()];
    let mut truth = [Vec::new(), Vec::new(), Vec::new()];
    let split_index = (split / trace.delta).round() as usize;
    let last_index = trace.samples.len().saturating_sub(1);
    for f in frames {
        let k = (f.t / trace.delta).round() as usize;
        if !window.contains(k, split_index, last_index) {
            continue;
        }
        let s = trace.samples.get(k).ok_or(Error::LengthMismatch(frames.len(), trace.samples.len()))?;
        for (j, (e, t)) in [(f.r_hat, s.r), (f.l_hat, s.l), (f.lambda_hat, s.lambda)].into_iter().enumerate() {
            est[j].push(e);
            truth[j].push(t);
        }
    }
    if est[0].is_empty() {
        return Ok(None);
    }
    Ok(Some([rmse(&est[0], &truth[0])?, rmse(&est[1], &truth[1])?, rmse(&est[2], &truth[2])?]))
}

/// Per-estimator RMSE for one seed and window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowErrors {
    pub semera: Option<[f64; 3]>,
    pub integral: Option<[f64; 3]>,
    pub offline: Option<[f64; 3]>,
}

impl WindowErrors {
    pub fn compute(run: &EstimatorRun, trace: &SimTrace, window: Window, split: f64) -> Result<Self> {
        Ok(Self {
            semera: window_rmse(&run.semera, trace, window, split)?,
            integral: window_rmse(&run.integral, trace, window, split)?,
            offline: window_rmse(&run.offline, trace, window, split)?,
        })
    }
}

/// Mean (and spread across seeds) of `[r, l, λ]` RMSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseRow {
    pub mean: [f64; 3],
    /// Sample standard deviation across seeds; `None` for the ratio row.
    pub std: Option<[f64; 3]>,
}

impl RmseRow {
    fn aggregate(values: &[Option<[f64; 3]>]) -> Option<Self> {
        let vals: Option<Vec<[f64; 3]>> = values.iter().copied().collect();
        let vals = vals.filter(|v| !v.is_empty())?;
        let n = vals.len() as f64;
        let mean: [f64; 3] = std::array::from_fn(|j| vals.iter().map(|v| v[j]).sum::<f64>() / n);
        let std = std::array::from_fn(|j| {
            if vals.len() < 2 {
                0.0
            } else {
                (vals.iter().map(|v| (v[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            }
        });
        Some(Self { mean, std: Some(std) })
    }
}

/// Seed-averaged RMSE per estimator, plus the SEMERA / integral ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseTable {
    pub semera: Option<RmseRow>,
    pub integral: Option<RmseRow>,
    pub offline: Option<RmseRow>,
    pub ratio: Option<RmseRow>,
    pub n_seeds: usize,
}

impl RmseTable {
    pub fn aggregate(per_seed: &[WindowErrors]) -> Self {
        let col = |f: fn(&WindowErrors) -> Option<[f64; 3]>| per_seed.iter().map(f).collect::<Vec<_>>();
        let semera = RmseRow::aggregate(&col(|w| w.semera));
        let integral = RmseRow::aggregate(&col(|w| w.integral));
        let offline = RmseRow::aggregate(&col(|w| w.offline));
        let ratio = match (&semera, &integral) {
            (Some(s), Some(i)) => Some(RmseRow { mean: std::array::from_fn(|j| s.mean[j] / i.mean[j]), std: None }),
            _ => None,
        };
        Self { semera, integral, offline, ratio, n_seeds: per_seed.len() }
    }

    pub fn rows(&self) -> [(&'static str, Option<&RmseRow>); 4] {
        [
            (SEMERA, self.semera.as_ref()),
            (INTEGRAL, self.integral.as_ref()),
            (INTEGRAL_OFFLINE, self.offline.as_ref()),
            ("ratio_semera_over_integral", self.ratio.as_ref()),
        ]
    }
}

/// Everything produced for one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: SimTrace,
    pub estimates: EstimatorRun,
    pub first: WindowErrors,
    pub after: WindowErrors,
}

pub fn simulate_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SimTrace> {
    Ok(simulate(&cfg.actuator, &cfg.waveform, cfg.dt_sim, cfg.filter.delta, cfg.noise, seed)?)
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let trace = simulate_seed(cfg, seed)?;
    let estimates = estimate_all(
        &trace.measured_voltage(),
        &trace.measured_current(),
        0.0,
        &cfg.filter,
        cfg.lambda0,
        &cfg.reset_indices(),
    )?;
    let first = WindowErrors::compute(&estimates, &trace, Window::First, cfg.split_time)?;
    let after = WindowErrors::compute(&estimates, &trace, Window::After, cfg.split_time)?;
    Ok(SeedRun { seed, trace, estimates, first, after })
}

/// Write `trace.csv`, `estimates.csv`, `snr.csv` and `observability.csv`.
pub fn write_seed(dir: &Path, run: &SeedRun, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let create = |name: &str| {
        let path = dir.join(name);
        File::create(&path).map(BufWriter::new).map_err(Error::io(path))
    };
    io::write_trace(create("trace.csv")?, &run.trace)?;
    io::write_estimates(create("estimates.csv")?, &run.estimates.blocks())?;
    io::write_snr(create("snr.csv")?, &run.trace)?;
    let steps = steps_since_observable(&run.trace.true_current(), cfg.filter.delta, cfg.obs_rel_tol, cfg.obs_cap);
    io::write_observability(create("observability.csv")?, cfg.filter.delta, 0.0, "true", &steps)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SeedSummary {
    pub seed: u64,
    pub first: WindowErrors,
    pub after: WindowErrors,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub seeds: Vec<SeedSummary>,
    pub first: RmseTable,
    pub after: RmseTable,
}

/// Simulate and estimate every seed in parallel, then aggregate. With an
/// output directory, each seed writes to `seed_<n>/` and the tables go to
/// `rmse.csv`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let seeds: Vec<SeedSummary> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = run_seed(cfg, seed)?;
            if let Some(dir) = out_dir {
                write_seed(&dir.join(format!("seed_{seed}")), &run, cfg)?;
            }
            Ok(SeedSummary { seed, first: run.first, after: run.after })
        })
        .collect::<Result<_>>()?;

    let first = RmseTable::aggregate(&seeds.iter().map(|s| s.first).collect::<Vec<_>>());
    let after = RmseTable::aggregate(&seeds.iter().map(|s| s.after).collect::<Vec<_>>());
    if let Some(dir) = out_dir {
        let path = dir.join("rmse.csv");
        let file = File::create(&path).map(BufWriter::new).map_err(Error::io(&path))?;
        io::write_rmse(file, &[(Window::First, &first), (Window::After, &after)])?;
    }
    Ok(ExperimentReport { seeds, first, after })
}
