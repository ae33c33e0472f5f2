//! LSTM forecasting of reduced coefficients.
//!
//! Training is one-step-ahead: each sample is a window of `s` consecutive
//! coefficient vectors and its target is the vector right after the window.
//! Prediction rolls the model out autoregressively, feeding each output back
//! as the newest window entry. Coefficients are min-max scaled to [-1, 1]
//! per mode with ranges fitted on the training data only.

mod adam;
mod io;
mod network;
mod scaler;

use nalgebra::{DMatrix, DVector};

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use io::MODEL_MAGIC;
pub use network::{
    backward_batch, cell_forward, forward_batch, forward_sequence, mse_loss, CellCache, Gate, LstmParams,
    SequenceCache,
};
pub use scaler::{MinMaxScaler, CONSTANT_RANGE_TOLERANCE};

use crate::error::{Result, RomError};
use crate::pod::ReducedTrajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub hidden_size: usize,
    /// Window length `s`.
    pub sequence_length: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Seeds the weight initialization.
    pub seed: u64,
    /// Feed normalized absolute time as an extra input feature.
    pub append_time: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            sequence_length: 10,
            learning_rate: 1e-3,
            epochs: 2000,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            append_time: false,
        }
    }
}

impl TrainingConfig {
    /// Settings used for the fluid volume fraction of the fluidized-bed
    /// benchmark.
    pub fn fluidized_bed_eulerian() -> Self {
        Self { hidden_size: 1024, sequence_length: 50, learning_rate: 2e-4, epochs: 3000, ..Self::default() }
    }

    /// Settings used for the particle position components.
    pub fn fluidized_bed_lagrangian() -> Self {
        Self { hidden_size: 10, sequence_length: 10, learning_rate: 1e-4, epochs: 3000, ..Self::default() }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RomError::InvalidInput(m));
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1".into());
        }
        if self.sequence_length == 0 {
            return bad("sequence_length must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.adam_epsilon > 0.0 && self.adam_epsilon.is_finite()) {
            return bad(format!("adam_epsilon must be > 0, got {}", self.adam_epsilon));
        }
        Ok(())
    }
}

/// Windowed supervised samples. Step `t` of every window is stored as one
/// matrix with a column per sample, which is the layout the batched forward
/// pass consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    /// `s` matrices of shape D_in x n_samples.
    pub steps: Vec<DMatrix<f64>>,
    /// D_out x n_samples; column `j` follows window `j`.
    pub targets: DMatrix<f64>,
}

impl SequenceDataset {
    /// Sample `j` reads input columns `j..j+s` and targets column `j+s`.
    pub fn from_series(inputs: &DMatrix<f64>, targets: &DMatrix<f64>, s: usize) -> Result<Self> {
        let nt = inputs.ncols();
        if targets.ncols() != nt {
            return Err(RomError::Dimension(format!(
                "inputs have {nt} time steps, targets {}",
                targets.ncols()
            )));
        }
        if s == 0 || nt <= s {
            return Err(RomError::InvalidInput(format!(
                "need more than s = {s} time steps to build windows, got {nt}"
            )));
        }
        let n = nt - s;
        let steps = (0..s).map(|t| inputs.columns(t, n).into_owned()).collect();
        Ok(Self { steps, targets: targets.columns(s, n).into_owned() })
    }

    pub fn n_samples(&self) -> usize {
        self.targets.ncols()
    }

    pub fn sequence_length(&self) -> usize {
        self.steps.len()
    }

    /// Input window of sample `j`, one column per step.
    pub fn window(&self, j: usize) -> DMatrix<f64> {
        let rows = self.steps[0].nrows();
        DMatrix::from_fn(rows, self.steps.len(), |r, t| self.steps[t][(r, j)])
    }

    pub fn target(&self, j: usize) -> DVector<f64> {
        self.targets.column(j).into_owned()
    }
}

/// Windows of the raw coefficient series (inputs and targets both `C`).
pub fn make_windows(c: &ReducedTrajectory, s: usize) -> Result<SequenceDataset> {
    SequenceDataset::from_series(&c.coefficients, &c.coefficients, s)
}

/// MSE and its gradient with respect to every parameter.
pub fn backward(params: &LstmParams, dataset: &SequenceDataset) -> Result<(f64, LstmParams)> {
    let (y, cache) = forward_batch(params, &dataset.steps)?;
    let loss = mse_loss(&y, &dataset.targets)?;
    let grads = backward_batch(params, &cache, &y, &dataset.targets)?;
    Ok((loss, grads))
}

/// Affine map of absolute time onto [-1, 1] over the training window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFeature {
    pub t_first: f64,
    pub t_last: f64,
}

impl TimeFeature {
    pub fn scale(&self, t: f64) -> f64 {
        let span = self.t_last - self.t_first;
        if span == 0.0 {
            0.0
        } else {
            2.0 * (t - self.t_first) / span - 1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub params: LstmParams,
    pub scaler: MinMaxScaler,
    /// Window length used in training; `None` when unknown.
    pub sequence_length: Option<usize>,
    pub time_feature: Option<TimeFeature>,
}

impl LstmModel {
    pub fn hidden_size(&self) -> usize {
        self.params.hidden_size()
    }

    /// Number of reduced coefficients (D).
    pub fn output_size(&self) -> usize {
        self.params.output_size()
    }

    /// Scaled model inputs for a coefficient trajectory.
    fn inputs(&self, c: &ReducedTrajectory) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let scaled = self.scaler.transform(&c.coefficients)?;
        let inputs = match &self.time_feature {
            None => scaled.clone(),
            Some(tf) => {
                let d = scaled.nrows();
                let mut m = scaled.clone().insert_row(d, 0.0);
                for j in 0..m.ncols() {
                    m[(d, j)] = tf.scale(c.time(j));
                }
                m
            }
        };
        Ok((inputs, scaled))
    }

    /// Scaled-space MSE of one-step predictions over all windows of `c`.
    pub fn loss_on(&self, c: &ReducedTrajectory) -> Result<f64> {
        let s = self
            .sequence_length
            .ok_or_else(|| RomError::InvalidInput("model does not record its sequence length".into()))?;
        let (inputs, scaled) = self.inputs(c)?;
        let ds = SequenceDataset::from_series(&inputs, &scaled, s)?;
        let (y, _) = forward_batch(&self.params, &ds.steps)?;
        mse_loss(&y, &ds.targets)
    }
}

/// Fit the scaler, build windows and run full-batch Adam for `cfg.epochs`.
/// Returns the model and the loss evaluated at the start of every epoch.
pub fn train(c_train: &ReducedTrajectory, cfg: &TrainingConfig) -> Result<(LstmModel, Vec<f64>)> {
    cfg.validate()?;
    let s = cfg.sequence_length;
    if c_train.n_time() <= s {
        return Err(RomError::InvalidInput(format!(
            "training trajectory has {} steps, need more than s = {s}",
            c_train.n_time()
        )));
    }
    if c_train.n_modes() == 0 {
        return Err(RomError::InvalidInput("trajectory has no modes".into()));
    }
    let scaler = MinMaxScaler::fit(&c_train.coefficients)?;
    let time_feature = cfg
        .append_time
        .then(|| TimeFeature { t_first: c_train.time(0), t_last: c_train.time(c_train.n_time() - 1) });
    let d = c_train.n_modes();
    let d_in = d + usize::from(time_feature.is_some());
    let mut model = LstmModel {
        params: LstmParams::glorot(d_in, cfg.hidden_size, d, cfg.seed),
        scaler,
        sequence_length: Some(s),
        time_feature,
    };
    let (inputs, scaled) = model.inputs(c_train)?;
    let dataset = SequenceDataset::from_series(&inputs, &scaled, s)?;

    let adam = cfg.adam();
    let mut state = AdamState::new(&model.params);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, grads) = backward(&model.params, &dataset)?;
        if !loss.is_finite() {
            return Err(RomError::Divergence { epoch, loss });
        }
        history.push(loss);
        adam_step(&mut model.params, &grads, &mut state, &adam);
    }
    Ok((model, history))
}

/// Closed-loop forecast of `n_steps` coefficient vectors following `seed`.
///
/// The last `s` columns of `seed` form the initial window (all of it when
/// the model does not know `s`). Output is D x n_steps in original units.
pub fn predict_rollout(model: &LstmModel, seed: &ReducedTrajectory, n_steps: usize) -> Result<DMatrix<f64>> {
    let d = model.output_size();
    if seed.n_modes() != d {
        return Err(RomError::Dimension(format!(
            "seed window has {} modes, model predicts {d}",
            seed.n_modes()
        )));
    }
    if n_steps == 0 {
        return Ok(DMatrix::zeros(d, 0));
    }
    let s = model.sequence_length.unwrap_or(seed.n_time());
    if s == 0 || seed.n_time() < s {
        return Err(RomError::InvalidInput(format!(
            "seed window has {} steps, model needs {s}",
            seed.n_time()
        )));
    }
    let seed = seed.tail(s)?;
    let (mut window, _) = model.inputs(&seed)?;
    let mut scaled_out = DMatrix::zeros(d, n_steps);
    for k in 0..n_steps {
        let y = forward_sequence(&model.params, &window)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(RomError::Numeric(format!("non-finite prediction at rollout step {k}")));
        }
        scaled_out.set_column(k, &y);
        // shift left, append the prediction as the newest step
        let rows = window.nrows();
        for j in 0..s - 1 {
            for r in 0..rows {
                window[(r, j)] = window[(r, j + 1)];
            }
        }
        window.view_mut((0, s - 1), (d, 1)).copy_from(&y);
        if let Some(tf) = &model.time_feature {
            window[(d, s - 1)] = tf.scale(seed.time(s + k));
        }
    }
    model.scaler.inverse_transform(&scaled_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::FieldKind;

    fn traj(coefficients: DMatrix<f64>) -> ReducedTrajectory {
        ReducedTrajectory {
            coefficients,
            t0: 0.0,
            dt: 0.01,
            field: FieldKind::EulerianScalar,
            name: "c".into(),
        }
    }

    #[test]
    fn windows_follow_one_step_ahead_layout() {
        let c = traj(DMatrix::from_fn(2, 5, |i, j| (10 * i + j + 1) as f64));
        let ds = make_windows(&c, 2).unwrap();
        assert_eq!(ds.n_samples(), 3);
        for j in 0..3 {
            let w = ds.window(j);
            assert_eq!(w.column(0), c.coefficients.column(j));
            assert_eq!(w.column(1), c.coefficients.column(j + 1));
            assert_eq!(ds.target(j), c.coefficients.column(j + 2).into_owned());
        }
        assert_eq!(make_windows(&c, 4).unwrap().n_samples(), 1);
        assert!(make_windows(&c, 5).is_err());
        let long = traj(DMatrix::zeros(3, 450));
        assert_eq!(make_windows(&long, 50).unwrap().n_samples(), 400);
    }

    #[test]
    fn config_validation() {
        let ok = TrainingConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainingConfig { epochs: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainingConfig { sequence_length: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainingConfig { learning_rate: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainingConfig { adam_beta2: 1.0, ..ok }.validate().is_err());
        let paper = TrainingConfig::fluidized_bed_eulerian();
        assert_eq!((paper.hidden_size, paper.sequence_length, paper.epochs), (1024, 50, 3000));
        assert_eq!(paper.learning_rate, 2e-4);
    }

    #[test]
    fn rollout_of_zero_model_is_bias() {
        let c = traj(DMatrix::from_fn(2, 6, |i, j| (i as f64 + 1.0) * j as f64));
        let mut params = LstmParams::zeros(2, 3, 2);
        params.head_b = DVector::from_vec(vec![0.5, -1.0]);
        let model = LstmModel {
            params,
            scaler: MinMaxScaler::fit(&c.coefficients).unwrap(),
            sequence_length: Some(3),
            time_feature: None,
        };
        let out = predict_rollout(&model, &c, 4).unwrap();
        for k in 0..4 {
            assert!((out[(0, k)] - model.scaler.unscale_value(0, 0.5)).abs() < 1e-15);
            assert!((out[(1, k)] - model.scaler.unscale_value(1, -1.0)).abs() < 1e-15);
        }
        assert_eq!(predict_rollout(&model, &c, 0).unwrap().ncols(), 0);
    }

    #[test]
    fn single_step_rollout_is_one_forward_pass() {
        let c = traj(DMatrix::from_fn(2, 8, |i, j| ((i + 1) as f64 * j as f64 * 0.3).sin()));
        let model = LstmModel {
            params: LstmParams::glorot(2, 4, 2, 3),
            scaler: MinMaxScaler::fit(&c.coefficients).unwrap(),
            sequence_length: Some(5),
            time_feature: None,
        };
        let out = predict_rollout(&model, &c, 1).unwrap();
        let window = model.scaler.transform(&c.tail(5).unwrap().coefficients).unwrap();
        let y = forward_sequence(&model.params, &window).unwrap();
        let expected =
            model.scaler.inverse_transform(&DMatrix::from_column_slice(2, 1, y.as_slice())).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn short_seed_rejected() {
        let c = traj(DMatrix::zeros(1, 3));
        let model = LstmModel {
            params: LstmParams::zeros(1, 2, 1),
            scaler: MinMaxScaler { min: vec![0.0], max: vec![1.0] },
            sequence_length: Some(4),
            time_feature: None,
        };
        assert!(predict_rollout(&model, &c, 2).is_err());
    }

    #[test]
    fn constant_series_is_learned() {
        let c = traj(DMatrix::from_element(2, 40, 3.25));
        let cfg = TrainingConfig {
            hidden_size: 4,
            sequence_length: 3,
            epochs: 200,
            learning_rate: 1e-2,
            seed: 1,
            ..TrainingConfig::default()
        };
        let (model, history) = train(&c, &cfg).unwrap();
        assert_eq!(history.len(), 200);
        assert!(history.iter().all(|l| l.is_finite()));
        assert!(model.loss_on(&c).unwrap() < 1e-8);
        let out = predict_rollout(&model, &c, 5).unwrap();
        assert!(out.iter().all(|&v| v == 3.25));
    }

    #[test]
    fn time_feature_trains_and_rolls_out() {
        let c = traj(DMatrix::from_fn(1, 30, |_, j| (j as f64 * 0.2).sin()));
        let cfg = TrainingConfig {
            hidden_size: 4,
            sequence_length: 4,
            epochs: 20,
            append_time: true,
            ..TrainingConfig::default()
        };
        let (model, _) = train(&c, &cfg).unwrap();
        assert_eq!(model.params.input_size(), 2);
        let tf = model.time_feature.unwrap();
        assert_eq!(tf.scale(c.time(0)), -1.0);
        assert_eq!(tf.scale(c.time(29)), 1.0);
        let out = predict_rollout(&model, &c, 3).unwrap();
        assert_eq!(out.shape(), (1, 3));
    }
}
