//! Synthetic full-order snapshot generator.
//!
//! Each snapshot is a sum of separable space-time modes
//! `amplitude * sin(2 pi f t + phase) * profile` plus one coherent
//! high-frequency "jitter" pattern `jitter_amplitude * sin(2 pi f_j t) * r`,
//! where `r` is a unit vector drawn from [`SplitMix64`] seeded with the spec
//! seed. The jitter is what spectral filtering is expected to strip.

use nalgebra::DMatrix;

use crate::error::{Result, RomError};
use crate::rng::SplitMix64;
use crate::snapshot::{FieldKind, SnapshotMatrix};

/// Stream offset for random mode profiles: mode `m` uses seed
/// `seed ^ (PROFILE_STREAM * (m + 1))`.
const PROFILE_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// How a mode's spatial profile is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Unit vector `e_k`.
    Basis(usize),
    /// `sin(pi (k + 1) (j + 1/2) / Nc)`, normalized. Distinct `k < Nc` are
    /// mutually orthogonal.
    Sinusoid(usize),
    /// Uniform random entries, normalized.
    Random,
}

impl ProfileKind {
    pub fn resolve(self, n_dof: usize, seed: u64, mode_index: usize) -> Result<Vec<f64>> {
        match self {
            ProfileKind::Basis(k) => {
                if k >= n_dof {
                    return Err(RomError::InvalidInput(format!(
                        "basis:{k} out of range for {n_dof} degrees of freedom"
                    )));
                }
                let mut v = vec![0.0; n_dof];
                v[k] = 1.0;
                Ok(v)
            }
            ProfileKind::Sinusoid(k) => {
                let nc = n_dof as f64;
                let v: Vec<f64> = (0..n_dof)
                    .map(|j| (std::f64::consts::PI * (k as f64 + 1.0) * (j as f64 + 0.5) / nc).sin())
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    return Err(RomError::InvalidInput(format!(
                        "sinusoid:{k} vanishes on {n_dof} degrees of freedom"
                    )));
                }
                Ok(v.into_iter().map(|x| x / norm).collect())
            }
            ProfileKind::Random => {
                let stream = PROFILE_STREAM.wrapping_mul(mode_index as u64 + 1);
                Ok(SplitMix64::new(seed ^ stream).unit_vector(n_dof))
            }
        }
    }
}

impl std::str::FromStr for ProfileKind {
    type Err = RomError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || RomError::InvalidInput(format!("unknown profile kind {s:?}"));
        if s == "random" {
            return Ok(ProfileKind::Random);
        }
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let idx: usize = idx.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "basis" => Ok(ProfileKind::Basis(idx)),
            "sinusoid" => Ok(ProfileKind::Sinusoid(idx)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMode {
    pub spatial_profile: Vec<f64>,
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// radians
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_dof: usize,
    pub modes: Vec<SyntheticMode>,
    pub jitter_amplitude: f64,
    pub jitter_frequency: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// No modes, no jitter.
    pub fn empty(n_dof: usize, seed: u64) -> Self {
        Self { n_dof, modes: Vec::new(), jitter_amplitude: 0.0, jitter_frequency: 0.0, seed }
    }

    pub fn push_mode(
        &mut self,
        amplitude: f64,
        frequency: f64,
        phase: f64,
        profile: ProfileKind,
    ) -> Result<&mut Self> {
        let spatial_profile = profile.resolve(self.n_dof, self.seed, self.modes.len())?;
        self.modes.push(SyntheticMode { spatial_profile, amplitude, frequency, phase });
        Ok(self)
    }

    pub fn validate(&self, dt: f64) -> Result<()> {
        if self.n_dof == 0 {
            return Err(RomError::InvalidInput("n_dof must be at least 1".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(RomError::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        let nyquist = 0.5 / dt;
        for (m, mode) in self.modes.iter().enumerate() {
            if !(mode.frequency >= 0.0 && mode.frequency < nyquist) {
                return Err(RomError::InvalidInput(format!(
                    "mode {m}: frequency {} Hz not in [0, Nyquist = {nyquist} Hz)",
                    mode.frequency
                )));
            }
            if !(mode.amplitude.is_finite() && mode.phase.is_finite()) {
                return Err(RomError::InvalidInput(format!("mode {m}: amplitude and phase must be finite")));
            }
            if mode.spatial_profile.len() != self.n_dof {
                return Err(RomError::Dimension(format!(
                    "mode {m}: profile length {} != n_dof {}",
                    mode.spatial_profile.len(),
                    self.n_dof
                )));
            }
            let norm = mode.spatial_profile.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(RomError::InvalidInput(format!("mode {m}: profile norm {norm} is not 1")));
            }
            if let Some(other) = self.modes[..m].iter().position(|o| o.frequency == mode.frequency) {
                return Err(RomError::InvalidInput(format!(
                    "modes {other} and {m} share frequency {} Hz",
                    mode.frequency
                )));
            }
        }
        if !(self.jitter_amplitude.is_finite() && self.jitter_amplitude >= 0.0) {
            return Err(RomError::InvalidInput(format!(
                "jitter amplitude must be >= 0, got {}",
                self.jitter_amplitude
            )));
        }
        if !(self.jitter_frequency >= 0.0 && self.jitter_frequency < nyquist) {
            return Err(RomError::InvalidInput(format!(
                "jitter frequency {} Hz not in [0, Nyquist = {nyquist} Hz)",
                self.jitter_frequency
            )));
        }
        Ok(())
    }

    /// The jitter direction `r`.
    pub fn jitter_vector(&self) -> Vec<f64> {
        SplitMix64::new(self.seed).unit_vector(self.n_dof)
    }

    fn fill(&self, n_time: usize, dt: f64, t0: f64) -> Result<DMatrix<f64>> {
        self.validate(dt)?;
        let two_pi = 2.0 * std::f64::consts::PI;
        let r = self.jitter_vector();
        let mut values = DMatrix::zeros(self.n_dof, n_time);
        for i in 0..n_time {
            let t = t0 + (i as f64 + 1.0) * dt;
            let mut col = values.column_mut(i);
            for mode in &self.modes {
                let a = mode.amplitude * (two_pi * mode.frequency * t + mode.phase).sin();
                for (x, p) in col.iter_mut().zip(&mode.spatial_profile) {
                    *x += a * p;
                }
            }
            if self.jitter_amplitude > 0.0 {
                let a = self.jitter_amplitude * (two_pi * self.jitter_frequency * t).sin();
                for (x, p) in col.iter_mut().zip(&r) {
                    *x += a * p;
                }
            }
        }
        Ok(values)
    }
}

pub fn generate_eulerian(spec: &SyntheticSpec, n_time: usize, dt: f64, t0: f64) -> Result<SnapshotMatrix> {
    let values = spec.fill(n_time, dt, t0)?;
    SnapshotMatrix::new(values, t0, dt, FieldKind::EulerianScalar, "eps")
}

/// Particle positions, one matrix per coordinate; row `l` is particle `l` in
/// all three.
pub fn generate_lagrangian(
    spec_x: &SyntheticSpec,
    spec_y: &SyntheticSpec,
    spec_z: &SyntheticSpec,
    n_time: usize,
    dt: f64,
    t0: f64,
) -> Result<(SnapshotMatrix, SnapshotMatrix, SnapshotMatrix)> {
    if spec_y.n_dof != spec_x.n_dof || spec_z.n_dof != spec_x.n_dof {
        return Err(RomError::Dimension(format!(
            "particle counts differ across components: x={}, y={}, z={}",
            spec_x.n_dof, spec_y.n_dof, spec_z.n_dof
        )));
    }
    let make = |spec: &SyntheticSpec, field, name| -> Result<SnapshotMatrix> {
        SnapshotMatrix::new(spec.fill(n_time, dt, t0)?, t0, dt, field, name)
    };
    Ok((
        make(spec_x, FieldKind::LagrangianX, "x")?,
        make(spec_y, FieldKind::LagrangianY, "y")?,
        make(spec_z, FieldKind::LagrangianZ, "z")?,
    ))
}
