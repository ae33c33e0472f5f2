//! Per-DOF discrete Fourier analysis and PSD-threshold filtering.
//!
//! The forward transform is the unnormalized DFT
//! `X_k = sum_n x_n exp(-i 2 pi k n / Nt)`, the inverse carries the `1/Nt`
//! factor, and the power spectral density is `|X_k|^2 / Nt`. With that
//! normalization Parseval reads `sum_k PSD_k = sum_n x_n^2`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, RomError};
use crate::snapshot::SnapshotMatrix;

/// Relative tolerance for conjugate symmetry and for the imaginary residue
/// discarded after an inverse transform.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coefficients: Vec<Complex64>,
    pub dt: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Frequency of bin `k` in Hz.
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 / (self.len() as f64 * self.dt)
    }

    /// Largest deviation from `X_k = conj(X_{N-k})`, relative to `max |X_k|`.
    /// Also covers the imaginary part of the DC bin.
    pub fn symmetry_defect(&self) -> f64 {
        let c = &self.coefficients;
        let n = c.len();
        let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = c.first().map_or(0.0, |z| z.im.abs());
        for k in 1..n {
            worst = worst.max((c[k] - c[n - k].conj()).norm());
        }
        worst / scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdVector {
    pub values: Vec<f64>,
    /// Hz, `frequencies[k] = k / (Nt dt)`.
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Bins with PSD strictly below this are removed.
    pub psd_threshold: f64,
    /// Never remove bin 0.
    pub keep_dc: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { psd_threshold: 0.0, keep_dc: true }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.psd_threshold.is_finite() && self.psd_threshold >= 0.0) {
            return Err(RomError::InvalidInput(format!(
                "PSD threshold must be finite and >= 0, got {}",
                self.psd_threshold
            )));
        }
        Ok(())
    }
}

/// Forward/inverse plans for one transform length.
struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self { forward, inverse, scratch_len }
    }

    fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.scratch_len]
    }
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < 2 {
        return Err(RomError::InvalidInput(format!("DFT needs at least 2 samples, got {}", series.len())));
    }
    if let Some(n) = series.iter().position(|v| !v.is_finite()) {
        return Err(RomError::InvalidInput(format!("non-finite sample {} at index {n}", series[n])));
    }
    Ok(())
}

fn forward_in_place(plans: &Plans, buf: &mut [Complex64], scratch: &mut [Complex64]) {
    plans.forward.process_with_scratch(buf, scratch);
}

/// Inverse transform including the `1/N` factor; returns the real part after
/// checking the imaginary residue.
fn inverse_to_real(plans: &Plans, buf: &mut [Complex64], scratch: &mut [Complex64]) -> Result<Vec<f64>> {
    plans.inverse.process_with_scratch(buf, scratch);
    let inv_n = 1.0 / buf.len() as f64;
    let scale = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > SYMMETRY_TOLERANCE * scale && residue * inv_n > f64::MIN_POSITIVE {
        return Err(RomError::Numeric(format!(
            "inverse transform left imaginary residue {:e} (relative {:e})",
            residue * inv_n,
            residue / scale.max(f64::MIN_POSITIVE)
        )));
    }
    Ok(buf.iter().map(|z| z.re * inv_n).collect())
}

/// `X_k = sum_n x_n exp(-i 2 pi k n / N)` for any `N >= 2`, in
/// `O(N log N)`.
pub fn dft_forward(series: &[f64], dt: f64) -> Result<Spectrum> {
    check_series(series)?;
    let plans = Plans::new(series.len());
    let mut buf: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_in_place(&plans, &mut buf, &mut plans.scratch());
    Ok(Spectrum { coefficients: buf, dt })
}

/// Real series from a conjugate-symmetric spectrum.
pub fn dft_inverse(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let n = spectrum.len();
    if n < 2 {
        return Err(RomError::InvalidInput(format!("inverse DFT needs at least 2 coefficients, got {n}")));
    }
    if spectrum.coefficients.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(RomError::InvalidInput("non-finite Fourier coefficient".into()));
    }
    let defect = spectrum.symmetry_defect();
    if defect > SYMMETRY_TOLERANCE {
        return Err(RomError::InvalidInput(format!(
            "spectrum is not conjugate-symmetric (relative defect {defect:e})"
        )));
    }
    let plans = Plans::new(n);
    let mut buf = spectrum.coefficients.clone();
    inverse_to_real(&plans, &mut buf, &mut plans.scratch())
}

/// `PSD_k = |X_k|^2 / Nt`.
pub fn psd(spectrum: &Spectrum, n_time: usize) -> Result<PsdVector> {
    if spectrum.len() != n_time {
        return Err(RomError::Dimension(format!(
            "spectrum has {} bins but n_time is {n_time}",
            spectrum.len()
        )));
    }
    let nt = n_time as f64;
    Ok(PsdVector {
        values: spectrum.coefficients.iter().map(|z| z.norm_sqr() / nt).collect(),
        frequencies: (0..n_time).map(|k| spectrum.frequency(k)).collect(),
    })
}

/// PSD of every requested row of `s`.
pub fn psd_rows(s: &SnapshotMatrix, rows: &[usize]) -> Result<Vec<PsdVector>> {
    rows.iter()
        .map(|&r| {
            if r >= s.n_dof() {
                return Err(RomError::InvalidInput(format!(
                    "DOF index {r} out of range (Nc = {})",
                    s.n_dof()
                )));
            }
            let series: Vec<f64> = s.values().row(r).iter().copied().collect();
            psd(&dft_forward(&series, s.dt())?, s.n_time())
        })
        .collect()
}

/// Zero each conjugate pair `(k, N-k)` whose PSD is below the threshold.
/// Returns the number of bins removed.
fn threshold_bins(buf: &mut [Complex64], cfg: &FilterConfig) -> usize {
    let n = buf.len();
    let nt = n as f64;
    let mut removed = 0;
    for k in 0..=n / 2 {
        if k == 0 && cfg.keep_dc {
            continue;
        }
        let mirror = (n - k) % n;
        let power = buf[k].norm_sqr().max(buf[mirror].norm_sqr()) / nt;
        if power < cfg.psd_threshold {
            buf[k] = Complex64::default();
            removed += 1;
            if mirror != k {
                buf[mirror] = Complex64::default();
                removed += 1;
            }
        }
    }
    removed
}

fn filter_row(
    plans: &Plans,
    row: &mut [f64],
    cfg: &FilterConfig,
    buf: &mut Vec<Complex64>,
    scratch: &mut [Complex64],
) -> Result<()> {
    buf.clear();
    buf.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
    forward_in_place(plans, buf, scratch);
    if threshold_bins(buf, cfg) == 0 {
        // nothing cut: leave the row bit-identical
        return Ok(());
    }
    let out = inverse_to_real(plans, buf, scratch)?;
    row.copy_from_slice(&out);
    Ok(())
}

/// Filter a single real series.
pub fn filter_series(series: &[f64], cfg: &FilterConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_series(series)?;
    let plans = Plans::new(series.len());
    let mut row = series.to_vec();
    let mut buf = Vec::with_capacity(series.len());
    filter_row(&plans, &mut row, cfg, &mut buf, &mut plans.scratch())?;
    Ok(row)
}

/// Remove low-power frequency content from every DOF's time series.
///
/// Rows are processed independently (in parallel on the current rayon pool);
/// the result does not depend on the number of threads.
pub fn filter_snapshots(s: &SnapshotMatrix, cfg: &FilterConfig) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let nt = s.n_time();
    if nt < 2 {
        return Err(RomError::InvalidInput(format!("filtering needs at least 2 snapshots, got {nt}")));
    }
    let plans = Plans::new(nt);
    // transpose so each DOF's history is contiguous
    let mut rows: DMatrix<f64> = s.values().transpose();
    rows.as_mut_slice().par_chunks_mut(nt).try_for_each_init(
        || (Vec::with_capacity(nt), plans.scratch()),
        |(buf, scratch), row| filter_row(&plans, row, cfg, buf, scratch),
    )?;
    s.with_values(rows.transpose())
}
