//! Plunger-type solenoid simulator used as ground truth.
//!
//! Magnetic equivalent circuit with an air gap proportional to the plunger
//! position and a Fröhlich-Kennelly saturating iron path:
//!
//! ```text
//! ℛ(λ, h) = k_air h + ℛ_iron0 / (1 − |λ|/λ_sat)
//! N² i = λ ℛ
//! dλ/dt = v − r i
//! m dv_h/dt = −λ² k_air / (2N²) − k_s (h − h_s) − c v_h
//! ```
//!
//! The mechanics form a hybrid automaton: free motion, and two modes resting
//! on the stops `h_min` and `h_max` where only the flux evolves. Positive `h`
//! opens the gap.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Relative margin kept below `λ_sat`.
pub const SATURATION_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorParams {
    pub turns: u32,
    /// Air reluctance per metre of gap (H⁻¹/m).
    pub k_air: f64,
    /// Iron reluctance at zero flux (H⁻¹).
    pub r_iron0: f64,
    pub lambda_sat: f64,
    pub mass: f64,
    pub k_spring: f64,
    /// Gap length at zero spring force.
    pub h_spring: f64,
    pub damping: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Coil resistance at `t = 0`.
    pub r_true: f64,
    /// Linear resistance drift (Ω/s).
    pub r_drift: f64,
}

impl ActuatorParams {
    /// Solenoid valve with a 79 Ω coil.
    pub fn valve() -> Self {
        Self {
            turns: 1200,
            k_air: 2.7e10,
            r_iron0: 3.25e6,
            lambda_sat: 0.024,
            mass: 1.6e-3,
            k_spring: 37.0,
            h_spring: 22.5e-3,
            damping: 0.4,
            h_min: 0.0,
            h_max: 0.9e-3,
            r_true: 79.0,
            r_drift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.k_air,
            self.r_iron0,
            self.lambda_sat,
            self.mass,
            self.k_spring,
            self.h_spring,
            self.damping,
            self.h_max,
            self.r_true,
        ];
        if self.turns == 0 || positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("actuator constants must be positive and finite"));
        }
        if !(self.h_min >= 0.0) || !(self.h_min < self.h_max) {
            return Err(Error::Config("require 0 <= h_min < h_max"));
        }
        if !self.r_drift.is_finite() {
            return Err(Error::Config("resistance drift must be finite"));
        }
        Ok(())
    }

    #[inline]
    fn n2(&self) -> f64 {
        let n = f64::from(self.turns);
        n * n
    }

    pub fn resistance_at(&self, t: f64) -> f64 {
        self.r_true + self.r_drift * t
    }
}

/// Total reluctance of the magnetic circuit.
pub fn reluctance(lambda: f64, h: f64, p: &ActuatorParams) -> Result<f64> {
    let ratio = libm::fabs(lambda) / p.lambda_sat;
    if !(ratio < 1.0 - SATURATION_GUARD) {
        return Err(Error::Saturation { lambda, lambda_sat: p.lambda_sat });
    }
    Ok(p.k_air * h + p.r_iron0 / (1.0 - ratio))
}

/// Current from Hopkinson's law `N² i = λ ℛ`.
pub fn current_from_flux(lambda: f64, h: f64, p: &ActuatorParams) -> Result<f64> {
    Ok(lambda * reluctance(lambda, h, p)? / p.n2())
}

/// Apparent inductance `l = N²/ℛ`, so that `λ = l i`.
pub fn apparent_inductance(lambda: f64, h: f64, p: &ActuatorParams) -> Result<f64> {
    Ok(p.n2() / reluctance(lambda, h, p)?)
}

/// `dλ/dt = v − r i(λ, h)`.
pub fn flux_rhs(lambda: f64, h: f64, v: f64, r: f64, p: &ActuatorParams) -> Result<f64> {
    Ok(v - r * current_from_flux(lambda, h, p)?)
}

/// Magnetic force and total force on the plunger, `(f_mag, f_total)`.
pub fn forces(lambda: f64, h: f64, v_h: f64, p: &ActuatorParams) -> (f64, f64) {
    let f_mag = -lambda * lambda * p.k_air / (2.0 * p.n2());
    let f_total = f_mag - p.k_spring * (h - p.h_spring) - p.damping * v_h;
    (f_mag, f_total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Motion,
    AtMin,
    AtMax,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Motion => "MOTION",
            Mode::AtMin => "AT_MIN",
            Mode::AtMax => "AT_MAX",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub lambda: f64,
    pub h: f64,
    pub v_h: f64,
    pub mode: Mode,
    pub t: f64,
}

impl SimState {
    /// De-energized, resting against the open stop.
    pub fn at_rest(p: &ActuatorParams) -> Self {
        Self { lambda: 0.0, h: p.h_max, v_h: 0.0, mode: Mode::AtMax, t: 0.0 }
    }
}

type Deriv = [f64; 3];

fn motion_rhs(y: &Deriv, v: f64, r: f64, p: &ActuatorParams) -> Result<Deriv> {
    let (_, f_total) = forces(y[0], y[1], y[2], p);
    Ok([flux_rhs(y[0], y[1], v, r, p)?, y[2], f_total / p.mass])
}

fn rk4_motion(y: Deriv, v: f64, r: f64, dt: f64, p: &ActuatorParams) -> Result<Deriv> {
    let add = |a: &Deriv, b: &Deriv, s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = motion_rhs(&y, v, r, p)?;
    let k2 = motion_rhs(&add(&y, &k1, dt / 2.0), v, r, p)?;
    let k3 = motion_rhs(&add(&y, &k2, dt / 2.0), v, r, p)?;
    let k4 = motion_rhs(&add(&y, &k3, dt), v, r, p)?;
    Ok(core::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

fn rk4_flux(lambda: f64, h: f64, v: f64, r: f64, dt: f64, p: &ActuatorParams) -> Result<f64> {
    let k1 = flux_rhs(lambda, h, v, r, p)?;
    let k2 = flux_rhs(lambda + dt / 2.0 * k1, h, v, r, p)?;
    let k3 = flux_rhs(lambda + dt / 2.0 * k2, h, v, r, p)?;
    let k4 = flux_rhs(lambda + dt * k3, h, v, r, p)?;
    Ok(lambda + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Advance the hybrid automaton by one fixed RK4 step with supply voltage `v`.
///
/// The resistance is evaluated at the start of the step.
pub fn hybrid_step(state: &SimState, v: f64, dt: f64, p: &ActuatorParams) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::Config("integration step must be positive"));
    }
    let r = p.resistance_at(state.t);
    let step_err = |e: Error| match e {
        Error::Saturation { .. } => Error::StepTooLarge(dt),
        other => other,
    };
    let t = state.t + dt;
    let mut next = match state.mode {
        Mode::Motion => {
            let y = rk4_motion([state.lambda, state.h, state.v_h], v, r, dt, p).map_err(step_err)?;
            let mut s = SimState { lambda: y[0], h: y[1], v_h: y[2], mode: Mode::Motion, t };
            if s.h <= p.h_min {
                s = SimState { h: p.h_min, v_h: 0.0, mode: Mode::AtMin, ..s };
            } else if s.h >= p.h_max {
                s = SimState { h: p.h_max, v_h: 0.0, mode: Mode::AtMax, ..s };
            }
            s
        }
        Mode::AtMin | Mode::AtMax => {
            let lambda = rk4_flux(state.lambda, state.h, v, r, dt, p).map_err(step_err)?;
            let (_, f_total) = forces(lambda, state.h, 0.0, p);
            let leave = match state.mode {
                Mode::AtMin => f_total > 0.0,
                _ => f_total < 0.0,
            };
            SimState {
                lambda,
                h: state.h,
                v_h: 0.0,
                mode: if leave { Mode::Motion } else { state.mode },
                t,
            }
        }
    };
    if !(libm::fabs(next.lambda) < p.lambda_sat * (1.0 - SATURATION_GUARD)) {
        return Err(Error::StepTooLarge(dt));
    }
    next.h = next.h.clamp(p.h_min, p.h_max);
    Ok(next)
}

/// Periodic square-wave supply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveWaveform {
    pub v_on: f64,
    pub period: f64,
    pub duty: f64,
    pub n_cycles: u32,
}

impl DriveWaveform {
    /// 30 V, 20 ms period, 50 % duty, four cycles.
    pub fn valve() -> Self {
        Self { v_on: 30.0, period: 20e-3, duty: 0.5, n_cycles: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !(self.duty > 0.0 && self.duty < 1.0) || !self.v_on.is_finite() {
            return Err(Error::Config("waveform requires period > 0 and 0 < duty < 1"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.period * f64::from(self.n_cycles)
    }

    /// Sample indices of the rising edges (start of each energizing operation)
    /// for sampling period `delta`.
    pub fn rising_edges(&self, delta: f64) -> Vec<usize> {
        (0..self.n_cycles)
            .map(|c| libm::round(f64::from(c) * self.period / delta) as usize)
            .collect()
    }
}

/// Measurement noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseConfig {
    pub v_std: f64,
    pub i_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSample {
    pub t: f64,
    /// Supply voltage averaged over the sampling interval ending at `t`.
    pub v: f64,
    pub i: f64,
    pub u: f64,
    pub iota: f64,
    pub r: f64,
    pub l: f64,
    pub lambda: f64,
    pub h: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub delta: f64,
    pub samples: Vec<SimSample>,
}

impl SimTrace {
    pub fn measured_voltage(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.u).collect()
    }

    pub fn measured_current(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.iota).collect()
    }

    pub fn true_current(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.i).collect()
    }
}

/// Ratio of an integer multiple, or `None` when `a / b` is not (nearly) integral.
fn integer_ratio(a: f64, b: f64) -> Option<u64> {
    let q = a / b;
    let n = libm::round(q);
    (n >= 1.0 && libm::fabs(q - n) <= 1e-6 * n).then_some(n as u64)
}

/// Simulate the waveform from rest and sample it every `delta_sample`.
///
/// The trace holds `n_cycles · period / delta_sample + 1` samples starting at
/// `t = 0`. Noise is zero-mean Gaussian, drawn from a ChaCha8 stream seeded
/// with `seed`.
pub fn simulate(
    p: &ActuatorParams,
    waveform: &DriveWaveform,
    dt_sim: f64,
    delta_sample: f64,
    noise: NoiseConfig,
    seed: u64,
) -> Result<SimTrace> {
    p.validate()?;
    waveform.validate()?;
    if !(noise.v_std >= 0.0) || !(noise.i_std >= 0.0) {
        return Err(Error::Config("noise standard deviations must be non-negative"));
    }
    let sub = integer_ratio(delta_sample, dt_sim)
        .ok_or(Error::Config("dt_sim must divide the sampling period"))?;
    let period_steps = integer_ratio(waveform.period, dt_sim)
        .ok_or(Error::Config("dt_sim must divide the waveform period"))?;
    let on_steps = libm::round(waveform.duty * waveform.period / dt_sim) as u64;
    let total_steps = period_steps * u64::from(waveform.n_cycles);
    let n_samples = total_steps / sub + 1;
    let level = |q: u64| {
        if q < total_steps && q % period_steps < on_steps {
            waveform.v_on
        } else {
            0.0
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v_noise = Normal::new(0.0, noise.v_std).map_err(|_| Error::Config("invalid voltage noise"))?;
    let i_noise = Normal::new(0.0, noise.i_std).map_err(|_| Error::Config("invalid current noise"))?;

    let mut state = SimState::at_rest(p);
    let mut samples = Vec::with_capacity(n_samples as usize);
    let mut q = 0u64;
    for k in 0..n_samples {
        let mut v_sum = 0.0;
        if k > 0 {
            for _ in 0..sub {
                let v = level(q);
                state = hybrid_step(&state, v, dt_sim, p)?;
                state.t = (q + 1) as f64 * dt_sim;
                v_sum += v;
                q += 1;
            }
        }
        let t = k as f64 * delta_sample;
        let v = if k > 0 { v_sum / sub as f64 } else { 0.0 };
        let i = current_from_flux(state.lambda, state.h, p)?;
        let l = apparent_inductance(state.lambda, state.h, p)?;
        samples.push(SimSample {
            t,
            v,
            i,
            u: v + v_noise.sample(&mut rng),
            iota: i + i_noise.sample(&mut rng),
            r: p.resistance_at(t),
            l,
            lambda: state.lambda,
            h: state.h,
            mode: state.mode,
        });
    }
    Ok(SimTrace { delta: delta_sample, samples })
}

/// Signal-to-noise ratio in dB; `+∞` for a zero noise sample.
pub fn snr(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        return f64::INFINITY;
    }
    20.0 * libm::log10(libm::fabs(signal / noise))
}
