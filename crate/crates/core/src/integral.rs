//! Cyclic integral estimator.
//!
//! Flux linkage is the open-loop integral of `u − r̄ ι`. The resistance `r̄`
//! is recomputed at the start of every energizing operation so that the flux
//! over the finished cycle closes (`λ̂_n = λ̂_{n+m}`):
//!
//! ```text
//! r̄ = Σ u_j / Σ ι_j    over the finished cycle
//! ```

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filter::{current_quality, EstimateFrame, FilterConfig, Quality};

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralState {
    pub r_bar: f64,
    pub s_u: f64,
    pub s_iota: f64,
    pub lambda0: f64,
    pub l0_mean: f64,
    pub prev_iota: Option<f64>,
    pub i_noise_std: f64,
    pub n_sigma: f64,
    pub delta: f64,
    /// Samples accumulated since the last reset.
    pub cycle_len: u64,
    pub step_index: u64,
}

impl IntegralState {
    pub fn new(
        r0_mean: f64,
        l0_mean: f64,
        lambda0: f64,
        i_noise_std: f64,
        delta: f64,
        n_sigma: f64,
    ) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config("sampling period must be positive"));
        }
        Ok(Self {
            r_bar: r0_mean,
            s_u: 0.0,
            s_iota: 0.0,
            lambda0,
            l0_mean,
            prev_iota: None,
            i_noise_std,
            n_sigma,
            delta,
            cycle_len: 0,
            step_index: 0,
        })
    }

    /// Flux estimate from the current sums and a given resistance.
    #[inline]
    pub fn flux_with(&self, r_bar: f64) -> f64 {
        self.lambda0 + self.delta * (self.s_u - r_bar * self.s_iota)
    }
}

/// Streaming wrapper around [`IntegralState`].
#[derive(Debug, Clone)]
pub struct IntegralEstimator {
    state: IntegralState,
}

impl IntegralEstimator {
    pub fn new(state: IntegralState) -> Self {
        Self { state }
    }

    /// Uses `r̄_0`, `l̄_0`, `σ_i`, `Δ` and `n_σ` from a filter configuration.
    pub fn from_filter_config(config: &FilterConfig, lambda0: f64) -> Result<Self> {
        config.validate()?;
        IntegralState::new(
            config.r0_mean,
            config.l0_mean,
            lambda0,
            config.i_noise_std,
            config.delta,
            config.n_sigma,
        )
        .map(Self::new)
    }

    pub fn state(&self) -> &IntegralState {
        &self.state
    }

    /// Process one sample. `reset` marks the start of an energizing
    /// operation; the flux reference `λ_0` then applies to this instant.
    ///
    /// The first call only registers `ι_0`. On error the state is unchanged.
    pub fn step(&mut self, u_k: f64, iota_k: f64, reset: bool) -> Result<Option<EstimateFrame>> {
        let st = &mut self.state;
        let Some(iota_prev) = st.prev_iota else {
            st.prev_iota = Some(iota_k);
            return Ok(None);
        };

        let s_u = st.s_u + u_k;
        let s_iota = st.s_iota + iota_k;
        let cycle_len = st.cycle_len + 1;
        let first_step = st.step_index == 0;

        let new_r_bar = if reset && !first_step {
            if s_iota == 0.0 {
                return Err(Error::ResetDegenerate);
            }
            let guard = 10.0 * st.n_sigma * st.i_noise_std * libm::sqrt(cycle_len as f64);
            if libm::fabs(s_iota) < guard {
                return Err(Error::IllConditionedReset { sum: libm::fabs(s_iota), guard });
            }
            Some(s_u / s_iota)
        } else {
            None
        };

        let lambda_hat = st.lambda0 + st.delta * (s_u - st.r_bar * s_iota);
        let quality = current_quality(iota_k, iota_prev, st.n_sigma * st.i_noise_std);
        let l_hat = match quality {
            Quality::Hq => lambda_hat / iota_k,
            Quality::Lq => st.l0_mean,
        };

        st.step_index += 1;
        st.prev_iota = Some(iota_k);
        if reset {
            if let Some(r) = new_r_bar {
                st.r_bar = r;
            }
            st.s_u = 0.0;
            st.s_iota = 0.0;
            st.cycle_len = 0;
        } else {
            st.s_u = s_u;
            st.s_iota = s_iota;
            st.cycle_len = cycle_len;
        }

        Ok(Some(EstimateFrame {
            t: st.step_index as f64 * st.delta,
            r_hat: st.r_bar,
            l_hat,
            lambda_hat,
            quality,
        }))
    }
}

/// Offline, non-causal integral estimate.
///
/// `boundaries` are sample indices where the flux equals `λ_0` (the start of
/// each energizing operation, plus the end of the last complete cycle). Cycle
/// `c` covers samples `boundaries[c]+1 ..= boundaries[c+1]` and is estimated
/// with its own resistance. Sample 0 only provides `ι_0`. Frames are returned
/// for samples `boundaries[0]+1 ..= boundaries.last()`.
pub fn offline_estimate(
    u: &[f64],
    iota: &[f64],
    boundaries: &[usize],
    config: &FilterConfig,
    lambda0: f64,
) -> Result<Vec<EstimateFrame>> {
    config.validate()?;
    if u.len() != iota.len() {
        return Err(Error::LengthMismatch(u.len(), iota.len()));
    }
    if boundaries.len() < 2 {
        return Err(Error::Boundaries("need at least two boundaries"));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Boundaries("boundaries must be strictly increasing"));
    }
    if *boundaries.last().unwrap() >= u.len() {
        return Err(Error::Boundaries("boundary beyond end of trace"));
    }

    let threshold = config.ci_threshold();
    let mut frames = Vec::with_capacity(boundaries.last().unwrap() - boundaries[0]);
    for (c, w) in boundaries.windows(2).enumerate() {
        let range = w[0] + 1..=w[1];
        let s_u: f64 = u[range.clone()].iter().sum();
        let s_iota: f64 = iota[range.clone()].iter().sum();
        if s_iota == 0.0 {
            return Err(Error::DegenerateCycle(c));
        }
        let r_bar = s_u / s_iota;
        let (mut acc_u, mut acc_i) = (0.0, 0.0);
        for k in range {
            acc_u += u[k];
            acc_i += iota[k];
            let lambda_hat = lambda0 + config.delta * (acc_u - r_bar * acc_i);
            let quality = current_quality(iota[k], iota[k - 1], threshold);
            let l_hat = match quality {
                Quality::Hq => lambda_hat / iota[k],
                Quality::Lq => config.l0_mean,
            };
            frames.push(EstimateFrame {
                t: k as f64 * config.delta,
                r_hat: r_bar,
                l_hat,
                lambda_hat,
                quality,
            });
        }
    }
    Ok(frames)
}
