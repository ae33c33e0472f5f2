//! Proper orthogonal decomposition of snapshot matrices.
//!
//! The basis is the leading left singular vectors of the snapshot matrix.
//! Truncation follows the cumulative energy criterion computed on the
//! singular values themselves, **not** their squares:
//!
//! ```text
//! E(n) = (sigma_1 + ... + sigma_n) / (sigma_1 + ... + sigma_N)
//! ```
//!
//! This gives larger mode counts than the squared-sigma variant used by many
//! codes for the same threshold.
//!
//! Basis file (`ROMPOD_1`, little-endian): magic, u64 Nc, u64 Nr, u64
//! spectrum length, the singular values, then the modes column-major. A
//! mean-centered basis appends the 4 bytes `MEAN` followed by Nc f64.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::binio::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{Result, RomError};
use crate::snapshot::{FieldKind, SnapshotMatrix};

pub const BASIS_MAGIC: &[u8; 8] = b"ROMPOD_1";
const MEAN_TAG: &[u8; 4] = b"MEAN";

const SVD_MAX_ITERATIONS: usize = 10_000;

/// Economy SVD `S = U diag(sigma) V^T` with non-increasing `sigma` and a
/// deterministic sign per singular pair: the largest-magnitude entry of each
/// left vector is non-negative (first such entry on ties).
#[derive(Debug, Clone)]
pub struct Svd {
    /// Nc x k, k = min(Nc, Nt)
    pub left: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Nt x k
    pub right: DMatrix<f64>,
}

pub fn compute_svd(s: &DMatrix<f64>) -> Result<Svd> {
    let k = s.nrows().min(s.ncols());
    if k == 0 {
        return Err(RomError::InvalidInput("SVD of an empty matrix".into()));
    }
    let svd = nalgebra::linalg::SVD::try_new(s.clone(), true, true, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or_else(|| {
            RomError::Numeric(format!(
                "SVD of {}x{} matrix did not converge in {SVD_MAX_ITERATIONS} iterations",
                s.nrows(),
                s.ncols()
            ))
        })?;
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");

    let mut order: Vec<usize> = (0..k).collect();
    // stable, so equal values keep the solver's order
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut left = DMatrix::zeros(s.nrows(), k);
    let mut right = DMatrix::zeros(s.ncols(), k);
    let mut singular_values = Vec::with_capacity(k);
    for (j, &src) in order.iter().enumerate() {
        let mut u_col = u.column(src).into_owned();
        let mut v_col = v_t.row(src).transpose();
        if u_col[sign_pivot(u_col.as_slice())] < 0.0 {
            u_col.neg_mut();
            v_col.neg_mut();
        }
        left.set_column(j, &u_col);
        right.set_column(j, &v_col);
        singular_values.push(svd.singular_values[src].max(0.0));
    }
    Ok(Svd { left, singular_values, right })
}

/// Index of the largest-magnitude entry, lowest index on ties.
fn sign_pivot(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1 { (i, x.abs()) } else { best })
        .0
}

/// `(sigma_1 + ... + sigma_n) / sum(sigma)`; an all-zero spectrum counts as
/// fully captured.
pub fn cumulative_energy(singular_values: &[f64], n: usize) -> Result<f64> {
    if n == 0 || n > singular_values.len() {
        return Err(RomError::InvalidInput(format!("mode count {n} outside 1..={}", singular_values.len())));
    }
    let total: f64 = singular_values.iter().sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    // summed in the same order as the total so E(len) == 1 exactly
    let partial: f64 = singular_values[..n].iter().sum();
    Ok(partial / total)
}

/// Smallest `n` with `cumulative_energy(n) >= delta`.
pub fn select_modes(singular_values: &[f64], delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(RomError::InvalidInput(format!("energy threshold must lie in (0, 1], got {delta}")));
    }
    if singular_values.is_empty() {
        return Err(RomError::InvalidInput("empty singular value spectrum".into()));
    }
    let total: f64 = singular_values.iter().sum();
    if total == 0.0 {
        return Ok(1);
    }
    let mut partial = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        partial += s;
        if partial / total >= delta {
            return Ok(i + 1);
        }
    }
    Ok(singular_values.len())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Cumulative energy threshold in (0, 1].
    Energy(f64),
    /// Explicit mode count.
    Modes(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    /// Nc x Nr, orthonormal columns.
    modes: DMatrix<f64>,
    singular_values: Vec<f64>,
    /// Snapshot count the basis was built from; unknown for bases read from
    /// file.
    source_n_time: Option<usize>,
    /// Subtracted before projection when the basis was built mean-centered.
    mean: Option<DVector<f64>>,
}

impl PodBasis {
    /// POD of the raw snapshots (no mean subtraction).
    pub fn fit(s: &SnapshotMatrix, truncation: Truncation) -> Result<Self> {
        Self::fit_with(s, truncation, false)
    }

    pub fn fit_with(s: &SnapshotMatrix, truncation: Truncation, center: bool) -> Result<Self> {
        let (data, mean) = if center {
            let mean = s.values().column_mean();
            let mut centered = s.values().clone();
            for mut col in centered.column_iter_mut() {
                col -= &mean;
            }
            (centered, Some(mean))
        } else {
            (s.values().clone(), None)
        };
        let svd = compute_svd(&data)?;
        let n_modes = match truncation {
            Truncation::Energy(delta) => select_modes(&svd.singular_values, delta)?,
            Truncation::Modes(n) => {
                if n == 0 || n > svd.singular_values.len() {
                    return Err(RomError::InvalidInput(format!(
                        "requested {n} modes, must be in 1..={}",
                        svd.singular_values.len()
                    )));
                }
                n
            }
        };
        Ok(Self {
            modes: svd.left.columns(0, n_modes).into_owned(),
            singular_values: svd.singular_values,
            source_n_time: Some(s.n_time()),
            mean,
        })
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn n_modes(&self) -> usize {
        self.modes.ncols()
    }

    pub fn n_dof(&self) -> usize {
        self.modes.nrows()
    }

    pub fn source_n_time(&self) -> Option<usize> {
        self.source_n_time
    }

    pub fn mean(&self) -> Option<&DVector<f64>> {
        self.mean.as_ref()
    }

    /// Same spectrum, first `n` modes only.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_modes() {
            return Err(RomError::InvalidInput(format!("cannot truncate {} modes to {n}", self.n_modes())));
        }
        Ok(Self { modes: self.modes.columns(0, n).into_owned(), ..self.clone() })
    }

    pub fn energy(&self) -> f64 {
        cumulative_energy(&self.singular_values, self.n_modes()).unwrap_or(1.0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.bytes(BASIS_MAGIC);
        w.u64(self.n_dof() as u64);
        w.u64(self.n_modes() as u64);
        w.u64(self.singular_values.len() as u64);
        w.f64_slice(&self.singular_values);
        w.f64_slice(self.modes.as_slice());
        if let Some(mean) = &self.mean {
            w.bytes(MEAN_TAG);
            w.f64_slice(mean.as_slice());
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(BASIS_MAGIC)?;
        let n_dof = r.usize("Nc")?;
        let n_modes = r.usize("Nr")?;
        let n_sigma = r.usize("spectrum length")?;
        if n_dof == 0 || n_modes == 0 || n_modes > n_sigma || n_sigma > n_dof {
            return Err(RomError::at_byte(
                8,
                format!("inconsistent header: Nc={n_dof}, Nr={n_modes}, spectrum length={n_sigma}"),
            ));
        }
        let singular_values = r.f64_vec(n_sigma, "singular values", |i| format!("index {i}"))?;
        let modes = r.f64_vec(
            n_dof.checked_mul(n_modes).ok_or_else(|| RomError::at_byte(8, "Nc*Nr overflows"))?,
            "modes",
            |i| format!("row {}, mode {}", i % n_dof, i / n_dof),
        )?;
        let mean = if r.remaining() > 0 {
            let at = r.position();
            if r.take(4, "mean tag")? != MEAN_TAG {
                return Err(RomError::at_byte(at, "unexpected trailing data after modes"));
            }
            let m = r.f64_vec(n_dof, "mean", |i| format!("row {i}"))?;
            Some(DVector::from_vec(m))
        } else {
            None
        };
        r.finish("basis")?;
        Ok(Self {
            modes: DMatrix::from_vec(n_dof, n_modes, modes),
            singular_values,
            source_n_time: None,
            mean,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

/// Modal coefficients over time, one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub coefficients: DMatrix<f64>,
    pub t0: f64,
    pub dt: f64,
    pub field: FieldKind,
    pub name: String,
}

impl ReducedTrajectory {
    pub fn n_modes(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn n_time(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + (i as f64 + 1.0) * self.dt
    }

    /// The last `len` columns, time stamps preserved.
    pub fn tail(&self, len: usize) -> Result<Self> {
        if len > self.n_time() {
            return Err(RomError::Dimension(format!(
                "asked for the last {len} of {} columns",
                self.n_time()
            )));
        }
        let start = self.n_time() - len;
        Ok(Self {
            coefficients: self.coefficients.columns(start, len).into_owned(),
            t0: self.t0 + start as f64 * self.dt,
            ..self.clone()
        })
    }
}

/// `C = U^T S` (after removing the basis mean, if any).
pub fn project(s: &SnapshotMatrix, basis: &PodBasis) -> Result<ReducedTrajectory> {
    if s.n_dof() != basis.n_dof() {
        return Err(RomError::Dimension(format!(
            "snapshots have {} DOFs, basis has {}",
            s.n_dof(),
            basis.n_dof()
        )));
    }
    let coefficients = match basis.mean() {
        Some(mean) => {
            let mut centered = s.values().clone();
            for mut col in centered.column_iter_mut() {
                col -= mean;
            }
            basis.modes().tr_mul(&centered)
        }
        None => basis.modes().tr_mul(s.values()),
    };
    Ok(ReducedTrajectory {
        coefficients,
        t0: s.t0(),
        dt: s.dt(),
        field: s.field(),
        name: s.name().to_owned(),
    })
}

/// `S_r = U C` (plus the basis mean, if any).
pub fn reconstruct(basis: &PodBasis, c: &ReducedTrajectory) -> Result<SnapshotMatrix> {
    if c.n_modes() != basis.n_modes() {
        return Err(RomError::Dimension(format!(
            "trajectory has {} modes, basis has {}",
            c.n_modes(),
            basis.n_modes()
        )));
    }
    let mut values = basis.modes() * &c.coefficients;
    if let Some(mean) = basis.mean() {
        for mut col in values.column_iter_mut() {
            col += mean;
        }
    }
    SnapshotMatrix::new(values, c.t0, c.dt, c.field, c.name.clone())
}
