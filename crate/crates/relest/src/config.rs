//! Experiment configuration: flat `key = value` files with dotted keys.
//!
//! ```text
//! # comment
//! filter.r0_mean = 77.5
//! experiment.seeds = 0..20      # or 1, 5, 9
//! ```
//!
//! A file is applied on top of a preset, so it only needs the keys it changes.

use std::path::Path;
use std::str::FromStr;

use relest_core::actuator::{ActuatorParams, DriveWaveform, NoiseConfig};
use relest_core::FilterConfig;

use crate::error::{Error, Result};

const VALVE: &str = include_str!("../presets/valve.conf");
const RELAY: &str = include_str!("../presets/relay.conf");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Valve,
    Relay,
}

impl Preset {
    pub fn source(self) -> &'static str {
        match self {
            Preset::Valve => VALVE,
            Preset::Relay => RELAY,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valve" => Ok(Preset::Valve),
            "relay" => Ok(Preset::Relay),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub actuator: ActuatorParams,
    pub filter: FilterConfig,
    pub waveform: DriveWaveform,
    /// Noise injected by the simulator (the filter keeps its own assumptions).
    pub noise: NoiseConfig,
    /// Flux linkage at the start of each energizing operation.
    pub lambda0: f64,
    pub dt_sim: f64,
    pub seeds: Vec<u64>,
    /// Boundary between the "first operation" and "after" RMSE windows.
    pub split_time: f64,
    pub obs_rel_tol: f64,
    pub obs_cap: usize,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut cfg = Self::blank();
        cfg.apply_str(preset.source()).expect("bundled preset parses");
        cfg.validate().expect("bundled preset is valid");
        cfg
    }

    /// Load `path` on top of `base`.
    pub fn load(base: Preset, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let mut cfg = Self::preset(base);
        cfg.apply_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn blank() -> Self {
        Self {
            actuator: ActuatorParams::valve(),
            filter: FilterConfig::valve(),
            waveform: DriveWaveform::valve(),
            noise: NoiseConfig::default(),
            lambda0: 0.0,
            dt_sim: 1e-6,
            seeds: vec![0],
            split_time: 20e-3,
            obs_rel_tol: relest_core::observability::DEFAULT_REL_TOL,
            obs_cap: 50,
        }
    }

    /// Apply every `key = value` line of `text`. Later lines win.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::ConfigLine { line, msg: format!("expected `key = value`, got {content:?}") });
            };
            self.set(key.trim(), value.trim()).map_err(|msg| Error::ConfigLine { line, msg })?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
        }
        let a = &mut self.actuator;
        let f = &mut self.filter;
        let w = &mut self.waveform;
        match key {
            "actuator.turns" => a.turns = num(key, value)?,
            "actuator.k_air" => a.k_air = num(key, value)?,
            "actuator.r_iron0" => a.r_iron0 = num(key, value)?,
            "actuator.lambda_sat" => a.lambda_sat = num(key, value)?,
            "actuator.mass" => a.mass = num(key, value)?,
            "actuator.k_spring" => a.k_spring = num(key, value)?,
            "actuator.h_spring" => a.h_spring = num(key, value)?,
            "actuator.damping" => a.damping = num(key, value)?,
            "actuator.h_min" => a.h_min = num(key, value)?,
            "actuator.h_max" => a.h_max = num(key, value)?,
            "actuator.r_true" => a.r_true = num(key, value)?,
            "actuator.r_drift" => a.r_drift = num(key, value)?,
            "filter.r0_mean" => f.r0_mean = num(key, value)?,
            "filter.r0_std" => f.r0_std = num(key, value)?,
            "filter.l0_mean" => f.l0_mean = num(key, value)?,
            "filter.l0_std" => f.l0_std = num(key, value)?,
            "filter.rdot_std" => f.rdot_std = num(key, value)?,
            "filter.lddot_std" => f.lddot_std = num(key, value)?,
            "filter.v_noise_std" => f.v_noise_std = num(key, value)?,
            "filter.i_noise_std" => f.i_noise_std = num(key, value)?,
            "filter.delta" => f.delta = num(key, value)?,
            "filter.n_sigma" => f.n_sigma = num(key, value)?,
            "integral.lambda0" => self.lambda0 = num(key, value)?,
            "waveform.v_on" => w.v_on = num(key, value)?,
            "waveform.period" => w.period = num(key, value)?,
            "waveform.duty" => w.duty = num(key, value)?,
            "waveform.n_cycles" => w.n_cycles = num(key, value)?,
            "noise.v_std" => self.noise.v_std = num(key, value)?,
            "noise.i_std" => self.noise.i_std = num(key, value)?,
            "sim.dt" => self.dt_sim = num(key, value)?,
            "experiment.seeds" => self.seeds = parse_seeds(value)?,
            "experiment.split_time" => self.split_time = num(key, value)?,
            "obs.rel_tol" => self.obs_rel_tol = num(key, value)?,
            "obs.cap" => self.obs_cap = num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.actuator.validate()?;
        self.filter.validate()?;
        self.waveform.validate()?;
        if self.waveform.n_cycles == 0 {
            return Err(Error::Config("waveform.n_cycles must be at least 1".into()));
        }
        if !(self.noise.v_std >= 0.0) || !(self.noise.i_std >= 0.0) {
            return Err(Error::Config("noise standard deviations must be non-negative".into()));
        }
        if !(self.dt_sim > 0.0) || self.dt_sim > self.filter.delta {
            return Err(Error::Config("sim.dt must be positive and not exceed filter.delta".into()));
        }
        if !self.lambda0.is_finite() {
            return Err(Error::Config("integral.lambda0 must be finite".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds needs at least one seed".into()));
        }
        if !(self.split_time >= 0.0 && self.split_time <= self.waveform.duration()) {
            return Err(Error::Config("experiment.split_time must lie within the simulated duration".into()));
        }
        if !(self.obs_rel_tol > 0.0) || self.obs_cap == 0 {
            return Err(Error::Config("obs.rel_tol and obs.cap must be positive".into()));
        }
        Ok(())
    }

    /// Sample indices where an energizing operation starts.
    pub fn reset_indices(&self) -> Vec<usize> {
        self.waveform.rising_edges(self.filter.delta)
    }
}

/// `a..b` (half-open) or a comma-separated list.
fn parse_seeds(value: &str) -> std::result::Result<Vec<u64>, String> {
    let bad = || format!("experiment.seeds: cannot parse {value:?}");
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        return Ok((lo..hi).collect());
    }
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}
