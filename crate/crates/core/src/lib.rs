//! AFDM integrated sensing: waveform synthesis, multi-target echo simulation
//! and joint range/velocity estimation by off-grid sparse Bayesian learning.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`). The `*64`
//! aliases below are what the estimator and the benchmark harness use.

pub mod afdm;
pub mod channel;
pub mod dictionary;
pub mod error;
pub mod linalg;
pub mod sbl;
pub mod scalar;

pub use afdm::{
    add_cpp, daft_demodulate, idaft_modulate, random_qam16, remove_cpp, AfdmConfig, AfdmParams, DafSymbol, Daft,
    TimeFrame, SPEED_OF_LIGHT,
};
pub use channel::{
    add_noise, add_noise_with, apply_sensing_channel, draw_targets, echo_matrix, observe, random_gain, target_from_physical,
    Target,
};
pub use dictionary::{atom, atom_derivative, build_dictionary, build_grids, measurement_matrix, Dictionary, VirtualGrid};
pub use error::{Error, Result};
pub use sbl::{
    run_integer_cs_baseline, run_offgrid_sbl, run_ongrid_baseline, BetaNumerator, CovarianceRoute, EstimateResult,
    KappaSweep, PriorParams, SblOptions, SblRun, TargetEstimate,
};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;

pub type AfdmConfig64 = AfdmConfig<f64>;
pub type AfdmConfig32 = AfdmConfig<f32>;
pub type AfdmParams64 = AfdmParams<f64>;
pub type AfdmParams32 = AfdmParams<f32>;
pub type Target64 = Target<f64>;
pub type Target32 = Target<f32>;
pub type VirtualGrid64 = VirtualGrid<f64>;
pub type VirtualGrid32 = VirtualGrid<f32>;
pub type Dictionary64 = Dictionary<f64>;
pub type Dictionary32 = Dictionary<f32>;
pub type SblOptions64 = SblOptions<f64>;
pub type EstimateResult64 = EstimateResult<f64>;
