//! Reference datasets used by tests, benchmarks and the acceptance suite.
//!
//! All frequencies are whole numbers of cycles over the 4.5 s training window
//! sampled at `dt = 0.01`, so each tone falls on a single DFT bin.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::pod::ReducedTrajectory;
use crate::snapshot::{FieldKind, SnapshotMatrix};
use crate::synth::{generate_eulerian, ProfileKind, SyntheticSpec};

pub const DT: f64 = 0.01;
pub const N_TRAIN: usize = 450;
pub const N_VALIDATION: usize = 50;
/// Length of the training window in seconds.
pub const TRAIN_SPAN: f64 = N_TRAIN as f64 * DT;

/// Frequency with `cycles` whole periods over the training window.
pub fn bin_frequency(cycles: usize) -> f64 {
    cycles as f64 / TRAIN_SPAN
}

pub const STRONG_AMPLITUDE: f64 = 1.0;
pub const STRONG_FREQUENCY: f64 = 2.0;
pub const WEAK_AMPLITUDE: f64 = 0.05;
pub const WEAK_FREQUENCY: f64 = 30.0;

/// PSD of a pure tone of amplitude `a` on an exact bin of an `n`-sample record.
pub fn tone_psd(a: f64, n: usize) -> f64 {
    a * a * n as f64 / 4.0
}

/// Strong 2 Hz tone plus weak 30 Hz jitter, `N_TRAIN` samples. DOF `j`
/// carries both tones scaled by `1 + j / n_dof`, so on every row the strong
/// tone's PSD exceeds the returned threshold and the weak tone's stays below
/// it. Returns (signal, strong tone alone, threshold).
pub fn two_tone(n_dof: usize) -> Result<(SnapshotMatrix, SnapshotMatrix, f64)> {
    let gain = |j: usize| 1.0 + j as f64 / n_dof as f64;
    let tone =
        |a: f64, f: f64, phase: f64, i: usize| a * (2.0 * PI * f * (i as f64 + 1.0) * DT + phase).sin();
    let strong =
        DMatrix::from_fn(n_dof, N_TRAIN, |j, i| gain(j) * tone(STRONG_AMPLITUDE, STRONG_FREQUENCY, 0.3, i));
    let both = DMatrix::from_fn(n_dof, N_TRAIN, |j, i| {
        gain(j)
            * (tone(STRONG_AMPLITUDE, STRONG_FREQUENCY, 0.3, i)
                + tone(WEAK_AMPLITUDE, WEAK_FREQUENCY, 0.0, i))
    });
    let threshold = (tone_psd(STRONG_AMPLITUDE, N_TRAIN) * tone_psd(2.0 * WEAK_AMPLITUDE, N_TRAIN)).sqrt();
    let make = |v| SnapshotMatrix::new(v, 0.0, DT, FieldKind::EulerianScalar, "eps");
    Ok((make(both)?, make(strong)?, threshold))
}

pub const JITTER_NC: usize = 2700;
pub const JITTER_FREQUENCY: f64 = 30.0;
/// Jitter amplitude relative to the mean-field amplitude.
pub const JITTER_RELATIVE_AMPLITUDE: f64 = 0.05;
/// PSD threshold separating the jitter from the low-frequency modes on every
/// DOF of the jittered dataset.
pub const JITTER_THRESHOLD: f64 = 5e-4;

/// Spec of the jittered five-mode dataset: a steady mean field plus four slow
/// oscillations on orthonormal profiles, and coherent 30 Hz jitter of 5% of
/// the mean-field amplitude on a random direction.
pub fn jittered_modes_spec(n_dof: usize, seed: u64) -> Result<SyntheticSpec> {
    let mut spec = SyntheticSpec::empty(n_dof, seed);
    // steady mode: sin(pi / 2) = 1 at every t
    spec.push_mode(1.0, 0.0, PI / 2.0, ProfileKind::Sinusoid(0))?;
    #[allow(clippy::approx_constant)]
    let slow = [(0.7071, 2, 0.4), (0.4243, 3, 1.1), (0.2828, 5, 2.0), (0.2758, 7, 2.7)];
    for (k, &(a, cycles, phase)) in slow.iter().enumerate() {
        spec.push_mode(a, bin_frequency(cycles), phase, ProfileKind::Sinusoid(k + 1))?;
    }
    spec.jitter_amplitude = JITTER_RELATIVE_AMPLITUDE;
    spec.jitter_frequency = JITTER_FREQUENCY;
    Ok(spec)
}

/// `N_TRAIN + N_VALIDATION` snapshots of the jittered dataset on
/// `JITTER_NC` DOFs.
pub fn jittered_modes(seed: u64) -> Result<SnapshotMatrix> {
    let spec = jittered_modes_spec(JITTER_NC, seed)?;
    generate_eulerian(&spec, N_TRAIN + N_VALIDATION, DT, 0.0)
}

/// Frequency of the single-mode sinusoid fixture (2 cycles per window).
pub fn sinusoid_frequency() -> f64 {
    bin_frequency(2)
}

/// `cos(2 pi f t)` sampled at `t = t0 + (i + 1) dt`.
pub fn sinusoid_values(t0: f64, n: usize) -> Vec<f64> {
    let f = sinusoid_frequency();
    (0..n).map(|i| (2.0 * PI * f * (t0 + (i as f64 + 1.0) * DT)).cos()).collect()
}

/// One-mode coefficient series over the training window.
pub fn sinusoid_trajectory() -> ReducedTrajectory {
    ReducedTrajectory {
        coefficients: DMatrix::from_row_slice(1, N_TRAIN, &sinusoid_values(0.0, N_TRAIN)),
        t0: 0.0,
        dt: DT,
        field: FieldKind::EulerianScalar,
        name: "eps".into(),
    }
}

/// Constant-in-time field on `n_dof` DOFs.
pub fn constant_field(n_dof: usize, n_time: usize, value: f64) -> Result<SnapshotMatrix> {
    let values = DMatrix::from_fn(n_dof, n_time, |j, _| value * (1.0 + j as f64 / n_dof as f64));
    SnapshotMatrix::new(values, 0.0, DT, FieldKind::EulerianScalar, "eps")
}
