//! Workloads shared by the criterion benchmarks.

use rom_core::fixtures;
use rom_core::{project, PodBasis, ReducedTrajectory, Result, SnapshotMatrix, Truncation};

/// Field with a handful of slow modes plus fast jitter, `n_dof x 500`.
pub fn jittered_field(n_dof: usize) -> Result<SnapshotMatrix> {
    let spec = fixtures::jittered_modes_spec(n_dof, 1)?;
    rom_core::generate_eulerian(&spec, fixtures::N_TRAIN + fixtures::N_VALIDATION, fixtures::DT, 0.0)
}

/// Coefficients of the leading `n_modes` modes of [`jittered_field`] over the
/// training window.
pub fn coefficients(n_dof: usize, n_modes: usize) -> Result<ReducedTrajectory> {
    let s = jittered_field(n_dof)?.columns(0, fixtures::N_TRAIN)?;
    let basis = PodBasis::fit(&s, Truncation::Modes(n_modes))?;
    project(&s, &basis)
}
