//! Three-term arithmetic progressions in Z/pZ.
//!
//! Exact and spectral progression counts, Bohr-set search and smoothing,
//! randomized rounding with spectral certificates, the affine-intersection
//! and two-interval constructions, and searches for sets that minimize the
//! number of progressions.

pub mod ap_count;
pub mod bohr;
pub mod constructions;
pub mod critical;
pub mod error;
pub mod exact;
pub mod fourier;
pub mod harness;
pub mod report;
pub mod rounding;
pub mod zpz;

pub use ap_count::{
    count_3aps_naive, count_3aps_spectral, split_spectrum, Ap3Count, SpectrumSplit,
};
pub use error::{Error, Result};
pub use fourier::{dft_set, dft_weights, inverse_dft, Spectrum};
pub use report::ExperimentReport;
pub use zpz::{longest_ap, ApRun, ApTriple, PrimeModulus, ResidueSet, WeightFunction};

/// Environment variable capping the worker threads used by parallel kernels.
pub const THREADS_ENV: &str = "AP3LAB_THREADS";
