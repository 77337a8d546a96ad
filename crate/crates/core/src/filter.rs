//! Stochastic recursive estimator of resistance, inductance and flux linkage.
//!
//! The coil is modelled in discrete time as
//!
//! ```text
//! u_k = r_k ι_k + (l_k ι_k − l_{k−1} ι_{k−1}) / Δ + noise
//! ```
//!
//! with state `x = [r, l_k, l_{k−1}]`, a constant-resistance / linearly
//! evolving inductance process model, and a Kalman recursion whose gain is
//! estimated from the *measured* currents. A confidence-interval detector
//! marks steps where either current sample is indistinguishable from noise;
//! on those steps the published inductance falls back to the resting value.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, RowVector3, Vector3};

use crate::error::{Error, Result};

/// Quality flag attached to every published estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quality {
    /// Both current samples lie outside the noise confidence interval.
    Hq,
    /// At least one current sample may be noise only; expert rule applied.
    Lq,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Hq => "HQ",
            Quality::Lq => "LQ",
        }
    }
}

/// Estimator parameters.
///
/// All quantities are SI: Ω, H, Ω/s, H/s², V, A, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub r0_mean: f64,
    pub r0_std: f64,
    pub l0_mean: f64,
    pub l0_std: f64,
    /// Standard deviation of the resistance rate of change.
    pub rdot_std: f64,
    /// Standard deviation of the second time derivative of inductance.
    pub lddot_std: f64,
    pub v_noise_std: f64,
    pub i_noise_std: f64,
    /// Sampling period.
    pub delta: f64,
    /// Confidence-interval multiplier of the current noise detector.
    pub n_sigma: f64,
}

impl FilterConfig {
    /// Solenoid valve parameters.
    pub fn valve() -> Self {
        Self {
            r0_mean: 77.5,
            r0_std: 1.0,
            l0_mean: 50e-3,
            l0_std: 5e-3,
            rdot_std: 1.0,
            lddot_std: 1e8,
            v_noise_std: 15e-3,
            i_noise_std: 1e-3,
            delta: 50e-6,
            n_sigma: 3.29,
        }
    }

    /// Power relay parameters.
    pub fn relay() -> Self {
        Self {
            r0_mean: 1560.0,
            r0_std: 100.0,
            l0_mean: 1.0,
            l0_std: 250e-3,
            rdot_std: 20.0,
            lddot_std: 5e9,
            v_noise_std: 15e-3,
            i_noise_std: 0.05e-3,
            delta: 50e-6,
            n_sigma: 3.29,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.r0_mean,
            self.r0_std,
            self.l0_mean,
            self.l0_std,
            self.rdot_std,
            self.lddot_std,
            self.v_noise_std,
            self.i_noise_std,
            self.delta,
            self.n_sigma,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("filter parameters must be finite"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Config("sampling period must be positive"));
        }
        if !(self.n_sigma > 0.0) {
            return Err(Error::Config("n_sigma must be positive"));
        }
        if !(self.r0_mean > 0.0) || !(self.l0_mean > 0.0) {
            return Err(Error::Config("initial resistance and inductance must be positive"));
        }
        let stds = [
            self.r0_std,
            self.l0_std,
            self.rdot_std,
            self.lddot_std,
            self.v_noise_std,
            self.i_noise_std,
        ];
        if stds.iter().any(|s| *s < 0.0) {
            return Err(Error::Config("standard deviations must be non-negative"));
        }
        Ok(())
    }

    /// Half-width `n_σ σ_i` of the current noise confidence interval.
    #[inline]
    pub fn ci_threshold(&self) -> f64 {
        self.n_sigma * self.i_noise_std
    }
}

/// Confidence-interval detector shared by both estimators.
///
/// Strict inequality: a sample exactly on the threshold is low quality.
#[inline]
pub fn current_quality(iota_k: f64, iota_prev: f64, threshold: f64) -> Quality {
    if libm::fabs(iota_k) > threshold && libm::fabs(iota_prev) > threshold {
        Quality::Hq
    } else {
        Quality::Lq
    }
}

/// Observation row `[ι_k, ι_k/Δ, −ι_{k−1}/Δ]`.
#[inline]
pub fn observation_row(iota_k: f64, iota_prev: f64, delta: f64) -> RowVector3<f64> {
    RowVector3::new(iota_k, iota_k / delta, -iota_prev / delta)
}

/// State-dependent variance of the observation noise.
///
/// This is the exact variance of the lumped noise term when the state is `x`.
/// It is a diagnostic only; the gain uses `σ_v²`.
pub fn observation_noise_variance(x: &Vector3<f64>, config: &FilterConfig) -> f64 {
    let var_i = config.i_noise_std * config.i_noise_std;
    let d = config.delta;
    config.v_noise_std * config.v_noise_std
        + var_i * (x[0] * x[0] + 2.0 * x[0] * x[1] / d + (x[1] * x[1] + x[2] * x[2]) / (d * d))
}

/// State transition: constant `r`, linear extrapolation of `l`, shift of `l_{k−1}`.
pub fn transition_matrix() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 2.0, -1.0, 0.0, 1.0, 0.0)
}

pub fn process_input_matrix(delta: f64) -> Matrix3x2<f64> {
    Matrix3x2::new(delta, 0.0, 0.0, delta * delta, 0.0, 0.0)
}

/// `G Q Gᵀ` for the configured process noise.
pub fn process_noise(config: &FilterConfig) -> Matrix3<f64> {
    let g = process_input_matrix(config.delta);
    let q = Matrix2::new(
        config.rdot_std * config.rdot_std,
        0.0,
        0.0,
        config.lddot_std * config.lddot_std,
    );
    g * q * g.transpose()
}

/// Recursive filter state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    /// A priori estimate `[r, l_k, l_{k−1}]` for the next step.
    pub x_hat: Vector3<f64>,
    /// A priori covariance.
    pub sigma: Matrix3<f64>,
    /// Last registered current sample; `None` until `ι_0` arrives.
    pub prev_iota: Option<f64>,
    pub prev_r_hat: f64,
    /// Index of the last processed sample (0 is the registration sample).
    pub step_index: u64,
}

impl FilterState {
    /// Initial state `x̄_0 = [r̄_0, l̄_0, l̄_0]` with `l_{−1} = l_0` fully correlated.
    pub fn new(config: &FilterConfig) -> Result<Self> {
        config.validate()?;
        let var_r = config.r0_std * config.r0_std;
        let var_l = config.l0_std * config.l0_std;
        Ok(Self {
            x_hat: Vector3::new(config.r0_mean, config.l0_mean, config.l0_mean),
            sigma: Matrix3::new(var_r, 0.0, 0.0, 0.0, var_l, var_l, 0.0, var_l, var_l),
            prev_iota: None,
            prev_r_hat: config.r0_mean,
            step_index: 0,
        })
    }
}

/// One published estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateFrame {
    pub t: f64,
    pub r_hat: f64,
    pub l_hat: f64,
    pub lambda_hat: f64,
    pub quality: Quality,
}

/// Magnetic quantities derived from an estimate and the number of turns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedEstimates {
    pub phi_hat: f64,
    pub reluctance_hat: f64,
    pub turns: u32,
}

impl EstimateFrame {
    /// Flux `φ = λ/N` and reluctance `ℛ = N²/l`.
    pub fn derived(&self, turns: u32) -> Result<DerivedEstimates> {
        if turns == 0 {
            return Err(Error::Config("number of turns must be at least one"));
        }
        if !(self.l_hat > 0.0) {
            return Err(Error::NonPhysicalInductance(self.l_hat));
        }
        let n = f64::from(turns);
        Ok(DerivedEstimates {
            phi_hat: self.lambda_hat / n,
            reluctance_hat: n * n / self.l_hat,
            turns,
        })
    }
}

/// The streaming estimator: a [`FilterConfig`] plus its [`FilterState`].
#[derive(Debug, Clone)]
pub struct Semera {
    config: FilterConfig,
    state: FilterState,
    f: Matrix3<f64>,
    gqg: Matrix3<f64>,
}

impl Semera {
    pub fn new(config: FilterConfig) -> Result<Self> {
        let state = FilterState::new(&config)?;
        Ok(Self {
            config,
            state,
            f: transition_matrix(),
            gqg: process_noise(&config),
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn state(&self) -> &FilterState {
        &self.state
    }

    /// Process one voltage/current sample pair.
    ///
    /// The first call only registers `ι_0` and returns `None`; every later
    /// call returns the estimate for that sample.
    pub fn step(&mut self, u_k: f64, iota_k: f64) -> Result<Option<EstimateFrame>> {
        let Some(iota_prev) = self.state.prev_iota else {
            self.state.prev_iota = Some(iota_k);
            return Ok(None);
        };
        let cfg = &self.config;
        let st = &mut self.state;

        // Update with the estimated gain.
        let h = observation_row(iota_k, iota_prev, cfg.delta);
        let sigma_ht = st.sigma * h.transpose();
        let innovation_var = (h * sigma_ht)[0] + cfg.v_noise_std * cfg.v_noise_std;
        if innovation_var == 0.0 {
            return Err(Error::DegenerateInnovation);
        }
        let gain = sigma_ht / innovation_var;
        let innovation = u_k - (h * st.x_hat)[0];
        let x_post = st.x_hat + gain * innovation;
        let sigma_post = symmetrize((Matrix3::identity() - gain * h) * st.sigma);

        // Publish.
        let quality = current_quality(iota_k, iota_prev, cfg.ci_threshold());
        let (r_hat, l_hat) = match quality {
            Quality::Hq => (x_post[0], x_post[1]),
            Quality::Lq => (st.prev_r_hat, cfg.l0_mean),
        };
        st.step_index += 1;
        let frame = EstimateFrame {
            t: st.step_index as f64 * cfg.delta,
            r_hat,
            l_hat,
            lambda_hat: l_hat * iota_k,
            quality,
        };

        // Predict.
        st.x_hat = self.f * x_post;
        st.sigma = symmetrize(self.f * sigma_post * self.f.transpose() + self.gqg);
        st.prev_iota = Some(iota_k);
        st.prev_r_hat = r_hat;
        Ok(Some(frame))
    }
}

#[inline]
fn symmetrize(m: Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}
