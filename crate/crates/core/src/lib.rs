//! Spectral statistics of sample covariance matrices.
//!
//! This crate simulates random matrix ensembles with independent or banded-
//! dependent rows, computes empirical spectral distributions of the Gram
//! matrix `(1/n) A A^T`, and quantifies their convergence to the
//! Marchenko-Pastur law: exact Kolmogorov distances, the fixed-point
//! self-consistency residual of the averaged Stieltjes transform, moment
//! diagnostics for the dependence conditions, and the variance scaling of
//! the transform in the matrix size and dependence range.

pub mod diagnostics;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mp_law;
pub mod parallel;
pub mod quad;
pub mod rng;
pub mod spectral_stats;

pub use diagnostics::{
    estimate_c0, lemma_residual, norm_check, residual_from_samples, row_moments_mc,
    variance_scaling, C0Report, C0StandardErrors, NormCheck, ResidualReport, RowMomentsMc,
    VarianceCell, VarianceScalingTable,
};
pub use ensembles::{
    balanced_row, ensemble_moments, sample, EnsembleKind, EnsembleSpec, MatrixSample, Seed,
};
pub use error::{Error, Result};
pub use harness::{
    parse_config, parse_mp_eval_config, rate_fit, run_diagnose, run_normcheck, run_residual,
    run_sweep, run_to_rows, run_varcheck, EmittedReport, Experiment, ExperimentConfig, MetricRow,
    MpEvalConfig, OutputFormat, RateFit, ReferenceLaw, SweepResult, SweepRow,
};
pub use linalg::{
    eigenvalues_sym, gram, spectral_norm, zero_snap_threshold, RealMatrix, SymmetricMatrix,
    MAX_DIM,
};
pub use mp_law::{mp_stieltjes_fixed_point, mp_support, ComplexPoint, MpLaw, StieltjesGrid};
pub use spectral_stats::{
    average_esd, empirical_stieltjes, kolmogorov_distance, read_esd1, write_esd1, Esd, EsdRecord,
    SpectralSample,
};
