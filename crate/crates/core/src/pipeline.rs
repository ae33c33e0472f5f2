//! Offline (filter, POD, train) and online (rollout, reconstruct) phases plus
//! error metrics.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Result, RomError};
use crate::lstm::{predict_rollout, train, LstmModel, TrainingConfig};
use crate::pod::{project, reconstruct, PodBasis, ReducedTrajectory, Truncation};
use crate::report::ErrorReport;
use crate::snapshot::{split_train_validation, SnapshotMatrix, SplitSpec, TIME_SPACING_TOLERANCE};
use crate::spectral::{filter_snapshots, FilterConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub truncation: Truncation,
    pub split: SplitSpec,
    pub training: TrainingConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        match self.truncation {
            Truncation::Energy(d) if !(d > 0.0 && d <= 1.0) => {
                return Err(RomError::InvalidInput(format!("delta must lie in (0, 1], got {d}")));
            }
            Truncation::Modes(0) => {
                return Err(RomError::InvalidInput("n_modes must be positive".into()));
            }
            _ => {}
        }
        if self.split.n_train <= self.training.sequence_length {
            return Err(RomError::InvalidInput(format!(
                "insufficient training length: {} snapshots for sequence length {}",
                self.split.n_train, self.training.sequence_length
            )));
        }
        self.training.validate()
    }
}

/// Everything produced by the offline phase.
#[derive(Debug, Clone)]
pub struct RomArtifacts {
    pub basis: PodBasis,
    pub model: LstmModel,
    pub filtered_training: SnapshotMatrix,
    pub training_coefficients: ReducedTrajectory,
    pub loss_history: Vec<f64>,
    pub config: PipelineConfig,
    pub offline_seconds: f64,
}

/// Reconstructed forecast plus the wall-clock time of the online phase.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub coefficients: ReducedTrajectory,
    pub snapshots: SnapshotMatrix,
    pub seconds: f64,
}

/// Filter the training columns, fit the basis on them, project and train.
pub fn offline(s: &SnapshotMatrix, cfg: &PipelineConfig) -> Result<RomArtifacts> {
    cfg.validate()?;
    let start = Instant::now();
    let (train_raw, _) = split_train_validation(s, cfg.split)?;
    let filtered = filter_snapshots(&train_raw, &cfg.filter)?;
    let basis = PodBasis::fit(&filtered, cfg.truncation)?;
    let coefficients = project(&filtered, &basis)?;
    let (model, loss_history) = train(&coefficients, &cfg.training)?;
    Ok(RomArtifacts {
        basis,
        model,
        filtered_training: filtered,
        training_coefficients: coefficients,
        loss_history,
        config: cfg.clone(),
        offline_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Forecast `n_steps` snapshots past the training window.
pub fn online_predict(artifacts: &RomArtifacts, n_steps: usize) -> Result<Prediction> {
    if n_steps == 0 {
        return Err(RomError::InvalidInput("n_steps must be at least 1".into()));
    }
    forecast(&artifacts.model, &artifacts.basis, &artifacts.training_coefficients, n_steps)
}

/// Roll the model forward from the tail of `seed` and reconstruct. Time stamps
/// continue the seed's grid.
pub fn forecast(
    model: &LstmModel,
    basis: &PodBasis,
    seed: &ReducedTrajectory,
    n_steps: usize,
) -> Result<Prediction> {
    if model.output_size() != basis.n_modes() {
        return Err(RomError::Dimension(format!(
            "model predicts {} coefficients, basis has {} modes",
            model.output_size(),
            basis.n_modes()
        )));
    }
    let start = Instant::now();
    let c = predict_rollout(model, seed, n_steps)?;
    let coefficients = ReducedTrajectory {
        coefficients: c,
        t0: seed.time(seed.n_time() - 1),
        dt: seed.dt,
        field: seed.field,
        name: seed.name.clone(),
    };
    let snapshots = reconstruct(basis, &coefficients)?;
    Ok(Prediction { coefficients, snapshots, seconds: start.elapsed().as_secs_f64() })
}

/// Training-window reconstruction from projected coefficients.
pub fn identify(artifacts: &RomArtifacts) -> Result<SnapshotMatrix> {
    reconstruct(&artifacts.basis, &artifacts.training_coefficients)
}

/// Reference used for the training window when evaluating a ROM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdentificationReference {
    #[default]
    Filtered,
    Raw,
}

/// Identification over the training window followed by an `n_validation` step
/// forecast, both compared with the full-order data. The validation window is
/// always compared with raw snapshots.
pub fn evaluate(
    s: &SnapshotMatrix,
    artifacts: &RomArtifacts,
    reference: IdentificationReference,
) -> Result<(ErrorReport, SnapshotMatrix)> {
    let split = artifacts.config.split;
    let (train_raw, validation) = split_train_validation(s, split)?;
    let mut fom = match reference {
        IdentificationReference::Filtered => artifacts.filtered_training.clone(),
        IdentificationReference::Raw => train_raw,
    };
    let mut rom = identify(artifacts)?;
    let mut online_seconds = None;
    if split.n_validation > 0 {
        let pred = online_predict(artifacts, split.n_validation)?;
        online_seconds = Some(pred.seconds);
        fom = fom.concat(&validation)?;
        // rollout stamps are accumulated from the seed grid; use the source grid
        rom = SnapshotMatrix::new(
            rom.concat(&pred.snapshots)?.into_values(),
            s.t0(),
            s.dt(),
            s.field(),
            s.name(),
        )?;
    }
    let mut report = error_series(&fom, &rom, split.n_train)?;
    report.offline_seconds = Some(artifacts.offline_seconds);
    report.online_seconds = online_seconds;
    Ok((report, rom))
}

/// `100 * ||fom - rom|| / ||fom||`, optionally with per-entry weights
/// (`||v||^2 = sum w_i v_i^2`).
pub fn relative_l2_error(fom: &[f64], rom: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    if fom.len() != rom.len() {
        return Err(RomError::Dimension(format!(
            "FOM column has {} entries, ROM column has {}",
            fom.len(),
            rom.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != fom.len() {
            return Err(RomError::Dimension(format!(
                "{} weights for columns of length {}",
                w.len(),
                fom.len()
            )));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(RomError::InvalidInput("weights must be finite and non-negative".into()));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..fom.len() {
        let e = fom[i] - rom[i];
        num += weight(i) * e * e;
        den += weight(i) * fom[i] * fom[i];
    }
    if !(den > 0.0) {
        return Err(RomError::Numeric("FOM column has zero norm".into()));
    }
    Ok(100.0 * (num / den).sqrt())
}

/// Per-column relative error. Columns `0..n_train` form the training window,
/// the rest the validation window.
pub fn error_series(fom: &SnapshotMatrix, rom: &SnapshotMatrix, n_train: usize) -> Result<ErrorReport> {
    if fom.values().shape() != rom.values().shape() {
        return Err(RomError::Dimension(format!(
            "FOM is {:?}, ROM is {:?}",
            fom.values().shape(),
            rom.values().shape()
        )));
    }
    let tol = TIME_SPACING_TOLERANCE * fom.dt().abs().max(1.0);
    if (fom.t0() - rom.t0()).abs() > tol || (fom.dt() - rom.dt()).abs() > tol {
        return Err(RomError::Dimension(format!(
            "time grids differ: FOM (t0 {}, dt {}), ROM (t0 {}, dt {})",
            fom.t0(),
            fom.dt(),
            rom.t0(),
            rom.dt()
        )));
    }
    if n_train > fom.n_time() {
        return Err(RomError::InvalidInput(format!(
            "split index {n_train} exceeds {} columns",
            fom.n_time()
        )));
    }
    let errors = column_errors(fom.values(), rom.values())?;
    Ok(ErrorReport::new(fom.times(), errors, n_train))
}

fn column_errors(fom: &DMatrix<f64>, rom: &DMatrix<f64>) -> Result<Vec<f64>> {
    (0..fom.ncols())
        .map(|j| {
            relative_l2_error(fom.column(j).as_slice(), rom.column(j).as_slice(), None).map_err(|e| match e {
                RomError::Numeric(m) => RomError::Numeric(format!("column {j}: {m}")),
                other => other,
            })
        })
        .collect()
}

/// FOM time over online ROM time.
pub fn speedup(fom_seconds: f64, online_seconds: f64) -> Result<f64> {
    if !(online_seconds > 0.0) || !online_seconds.is_finite() {
        return Err(RomError::InvalidInput(format!("online time must be positive, got {online_seconds}")));
    }
    if !(fom_seconds >= 0.0) || !fom_seconds.is_finite() {
        return Err(RomError::InvalidInput(format!("FOM time must be non-negative, got {fom_seconds}")));
    }
    Ok(fom_seconds / online_seconds)
}
