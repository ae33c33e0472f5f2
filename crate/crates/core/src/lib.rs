//! Non-intrusive reduced-order modeling of unsteady fields.
//!
//! Snapshot data is filtered in frequency space, compressed with proper
//! orthogonal decomposition and the reduced coefficients are forecast with an
//! LSTM network trained with Adam.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binio;
pub mod error;
pub mod fixtures;
pub mod lstm;
pub mod pipeline;
pub mod plot;
pub mod pod;
pub mod report;
pub mod rng;
pub mod snapshot;
pub mod spectral;
pub mod synth;

pub use error::{Result, RomError};
pub use lstm::{predict_rollout, train, LstmModel, LstmParams, MinMaxScaler, TrainingConfig};
pub use pipeline::{
    error_series, evaluate, forecast, identify, offline, online_predict, relative_l2_error, speedup,
    IdentificationReference, PipelineConfig, Prediction, RomArtifacts,
};
pub use pod::{
    compute_svd, cumulative_energy, project, reconstruct, select_modes, PodBasis, ReducedTrajectory,
    Truncation,
};
pub use report::{ErrorReport, WindowStats};
pub use rng::SplitMix64;
pub use snapshot::{split_train_validation, FieldKind, SnapshotFormat, SnapshotMatrix, SplitSpec};
pub use spectral::{
    dft_forward, dft_inverse, filter_series, filter_snapshots, psd, psd_rows, FilterConfig, PsdVector,
    Spectrum,
};
pub use synth::{generate_eulerian, generate_lagrangian, ProfileKind, SyntheticMode, SyntheticSpec};
