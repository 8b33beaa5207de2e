//! Spectra of spiked random matrices with a two-block variance profile.
//!
//! The crate covers the model parameters ([`model`]), finite-N sampling
//! ([`sampler`]), the vector equation for the limiting resolvent ([`qve`]),
//! large-N predictions of the edge and the outlier ([`prediction`]),
//! eigenvalue diagnostics on sampled matrices ([`spectra`]) and Monte Carlo
//! experiments ([`experiments`]).

pub mod cli;
pub mod error;
pub mod experiments;
pub mod format;
pub mod matrix;
pub mod model;
pub mod prediction;
pub mod qve;
pub mod sampler;
pub mod spectra;

pub use error::{Error, ErrorClass, Result, SpecError};
pub use matrix::SymMatrix;
pub use model::{from_sbm, GsbmSpec, NoiseKind, SbmConversion, SbmParams, Shift};
pub use prediction::{
    critical_lambda, find_upper_edge, hidden_lambda1, hidden_threshold, predict_outlier, unbalanced_lambda1,
    unbalanced_threshold, EdgeMethod, EdgeResult, OutlierPrediction,
};
pub use qve::{density, solve_full, solve_reduced, DensityCurve, QveSolution};
pub use sampler::{sample_gsbm, sample_sbm_adjacency, sample_shifted_sbm, GsbmSample, SampleSeed};
