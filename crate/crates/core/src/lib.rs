//! Interacting particle systems on a path of `N` sites: local and global
//! transfer operators, their spectra, IPS zeta functions, and Monte Carlo
//! simulation of the Domany-Kinzel model.
//!
//! Configurations are bit strings with site 0 as the most significant
//! bit. The global operator sweeps the local operator across adjacent
//! pairs, the pair `(0, 1)` acting first.

pub mod config;
pub mod dk;
pub mod eigen;
pub mod error;
pub mod global;
pub mod io;
pub mod local;
pub mod matrix;
pub mod spectrum;
pub mod verify;
pub mod zeta;

pub use config::Configuration;
pub use dk::{
    dk_local_operator, dk_reference_spectrum_n3, dk_step, estimate_survival, rho_q1_closed,
    scan_critical, CriticalScanResult, DkParams, LatticeState, Region, ScanPoint, SurvivalEstimate,
};
pub use error::{Error, Result};
pub use global::{
    apply_matrix_free, block_views, build_global_kronecker, build_global_recursive, Blocks, Caps,
    GlobalOperator,
};
pub use local::{LocalOperator, OperatorClass};
pub use matrix::{CMatrix, SparseMatrix, C64};
pub use spectrum::{
    eig_dense, histogram, match_multisets, spec_union, t_case_spectrum, trace_closed_form,
    EigOptions, HistogramGrid, MatchReport, SpectrumMultiset, TraceValue,
};
pub use verify::VerificationReport;
pub use zeta::{
    c_r, power_traces, spectral_radius_estimate, trace_path_sum, zeta_det, zeta_log_series,
    ZetaSeries, ZetaValue,
};
