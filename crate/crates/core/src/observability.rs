//! Structural observability of the `[r, l_k, l_{k−1}]` model.
//!
//! Rows use the *true* currents: `C_k = [i_k, i_k/Δ, −i_{k−1}/Δ]`. The
//! observability matrix over `[k, k+n]` stacks `C_{k+j} F^j` for
//! `j = 0..=n`, so a window needs the `n + 2` currents `i_{k−1} ..= i_{k+n}`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Matrix3x6, RowVector3};

use crate::error::{Error, Result};
use crate::filter::{observation_row, process_input_matrix, transition_matrix};

/// Default relative singular-value tolerance for rank decisions.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Output row over noiseless currents.
#[inline]
pub fn output_row(i_k: f64, i_prev: f64, delta: f64) -> RowVector3<f64> {
    observation_row(i_k, i_prev, delta)
}

/// `F^j` in closed form; valid for negative `j` too since `det F = 1`.
pub fn transition_power(j: i64) -> Matrix3<f64> {
    let j = j as f64;
    Matrix3::new(1.0, 0.0, 0.0, 0.0, j + 1.0, -j, 0.0, j, 1.0 - j)
}

fn check_len(currents: &[f64], needed: usize) -> Result<()> {
    if currents.len() < needed {
        return Err(Error::TooShort { needed, got: currents.len() });
    }
    Ok(())
}

fn window_rows(currents: &[f64], delta: f64) -> impl Iterator<Item = RowVector3<f64>> + '_ {
    currents
        .windows(2)
        .enumerate()
        .map(move |(j, w)| output_row(w[1], w[0], delta) * transition_power(j as i64))
}

/// Observability matrix for currents `[i_{k−1}, i_k, …, i_{k+n}]`.
pub fn obs_matrix(currents: &[f64], delta: f64) -> Result<DMatrix<f64>> {
    check_len(currents, 3)?;
    let rows: Vec<RowVector3<f64>> = window_rows(currents, delta).collect();
    Ok(DMatrix::from_fn(rows.len(), 3, |r, c| rows[r][c]))
}

/// Closed-form determinant of the three-row window `[k, k+2]`.
pub fn det_window(i_prev: f64, i_k: f64, i_k1: f64, i_k2: f64, delta: f64) -> f64 {
    (2.0 * i_prev * i_k1 * i_k1 + 2.0 * i_k * i_k * i_k2
        - i_k * i_k * i_k1
        - i_k * i_k1 * i_k1
        - i_prev * i_k * i_k2
        - i_prev * i_k1 * i_k2)
        / (delta * delta)
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if !(max > 0.0) {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Observability Gramian `Σ (C_i F^{i−k})ᵀ C_i F^{i−k}`.
pub fn gramian(currents: &[f64], delta: f64) -> Result<Matrix3<f64>> {
    check_len(currents, 3)?;
    Ok(window_rows(currents, delta).fold(Matrix3::zeros(), |acc, row| acc + row.transpose() * row))
}

/// Extreme eigenvalues of a symmetric 3×3 matrix, `(min, max)`.
///
/// These are the candidates for the uniform observability bounds `β₁`, `β₂`.
pub fn eigen_bounds(w: &Matrix3<f64>) -> (f64, f64) {
    let eig = w.symmetric_eigenvalues();
    (eig.min(), eig.max())
}

/// Alternative rows for a `[r, λ_k, λ_{k−1}]` state: `[i, 1/Δ, −1/Δ]`.
///
/// The last two columns are always proportional, so this model is never
/// observable.
pub fn lambda_state_rows(currents: &[f64], delta: f64) -> Result<DMatrix<f64>> {
    check_len(currents, 1)?;
    Ok(DMatrix::from_fn(currents.len(), 3, |r, c| match c {
        0 => currents[r],
        1 => 1.0 / delta,
        _ => -1.0 / delta,
    }))
}

/// Controllability matrix `[G  FG  F²G]` of the process model.
pub fn controllability_matrix(delta: f64) -> Matrix3x6<f64> {
    let f = transition_matrix();
    let g = process_input_matrix(delta);
    let mut m = Matrix3x6::zeros();
    m.fixed_view_mut::<3, 2>(0, 0).copy_from(&g);
    m.fixed_view_mut::<3, 2>(0, 2).copy_from(&(f * g));
    m.fixed_view_mut::<3, 2>(0, 4).copy_from(&(f * f * g));
    m
}

/// Summary of one observability window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilityReport {
    /// Index of `i_k` (the first row's current) in the analysed sequence.
    pub window_start: usize,
    /// `n`: the window spans `[k, k+n]`.
    pub window_len: usize,
    /// Closed-form determinant, only for `n = 2`.
    pub det3: Option<f64>,
    pub rank: usize,
    pub gramian_min_eig: f64,
    pub gramian_max_eig: f64,
}

/// Analyse the window `[start, start+n]`; needs `start ≥ 1`.
pub fn analyze_window(
    currents: &[f64],
    start: usize,
    n: usize,
    delta: f64,
    rel_tol: f64,
) -> Result<ObservabilityReport> {
    if start == 0 || n == 0 {
        return Err(Error::TooShort { needed: 3, got: n + 1 });
    }
    check_len(currents, start + n + 1)?;
    let window = &currents[start - 1..=start + n];
    let o = obs_matrix(window, delta)?;
    let w = o.transpose() * &o;
    let w = Matrix3::from_fn(|r, c| w[(r, c)]);
    let (min, max) = eigen_bounds(&w);
    Ok(ObservabilityReport {
        window_start: start,
        window_len: n,
        det3: (n == 2).then(|| det_window(window[0], window[1], window[2], window[3], delta)),
        rank: numeric_rank(&o, rel_tol),
        gramian_min_eig: min,
        gramian_max_eig: max,
    })
}

/// Upper-triangular factor of a tall 3-column matrix, built one row at a time
/// with Givens rotations.
#[derive(Debug, Clone, Default)]
struct RowQr {
    r: Matrix3<f64>,
}

impl RowQr {
    fn push(&mut self, row: RowVector3<f64>) {
        let mut a = row;
        for j in 0..3 {
            if a[j] == 0.0 {
                continue;
            }
            let (x, y) = (self.r[(j, j)], a[j]);
            let h = libm::hypot(x, y);
            let (c, s) = (x / h, y / h);
            for c2 in j..3 {
                let (rv, av) = (self.r[(j, c2)], a[c2]);
                self.r[(j, c2)] = c * rv + s * av;
                a[c2] = -s * rv + c * av;
            }
            a[j] = 0.0;
        }
    }

    fn full_rank(&self, rel_tol: f64) -> bool {
        let sv = self.r.singular_values();
        let max = sv.max();
        max > 0.0 && sv.min() > rel_tol * max
    }
}

/// For every sample `k`, the smallest `n ≥ 2` such that the window ending at
/// `k` (rows `k−n ..= k`) has rank 3. Samples with insufficient history or no
/// observable window within `cap` steps report `cap`.
pub fn steps_since_observable(currents: &[f64], delta: f64, rel_tol: f64, cap: usize) -> Vec<usize> {
    (0..currents.len())
        .map(|k| {
            // Rows C_m F^{m−k}; right-multiplying by the invertible F^{−(k−n)}
            // leaves the rank of the window unchanged.
            let mut qr = RowQr::default();
            let max_n = cap.min(k.saturating_sub(1));
            for n in 0..=max_n {
                let m = k - n;
                if m == 0 {
                    break;
                }
                let row = output_row(currents[m], currents[m - 1], delta) * transition_power(-(n as i64));
                qr.push(row);
                if n >= 2 && qr.full_rank(rel_tol) {
                    return n;
                }
            }
            cap
        })
        .collect()
}
