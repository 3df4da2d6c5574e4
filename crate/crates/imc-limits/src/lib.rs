//! Energy, delay and accuracy limits of analog in-memory-computing (IMC)
//! dot-product architectures.
//!
//! The crate evaluates closed-form SNR and energy expressions for charge-summing
//! (QS) and charge-redistribution (QR) compute models, assigns ADC precision with
//! the minimum-precision criterion (MPC), and cross-checks the analytical noise
//! budgets against a die-level Monte Carlo simulator.
//!
//! Formula modules are generic over [`Scalar`] (`f32` or `f64`). The simulator
//! and the experiment runner work in `f64`.

pub mod architectures;
pub mod compute_models;
mod error;
pub mod montecarlo;
pub mod precision_rules;
pub mod snr_algebra;
pub mod sweep_runner;

pub use error::{Error, Result};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point type accepted by the formula modules.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub(crate) fn cnt<T: Scalar>(v: usize) -> T {
    T::from_usize(v).expect("count representable in scalar type")
}

pub type SignalModelF64 = snr_algebra::SignalModel<f64>;
pub type SignalModelF32 = snr_algebra::SignalModel<f32>;
pub type QuantizerSpecF64 = snr_algebra::QuantizerSpec<f64>;
pub type QuantizerSpecF32 = snr_algebra::QuantizerSpec<f32>;
pub type DotProductSpecF64 = snr_algebra::DotProductSpec<f64>;
pub type DotProductSpecF32 = snr_algebra::DotProductSpec<f32>;
pub type SnrReportF64 = snr_algebra::SnrReport<f64>;
pub type SnrReportF32 = snr_algebra::SnrReport<f32>;
pub type ClipStatsF64 = precision_rules::ClipStats<f64>;
pub type ClipStatsF32 = precision_rules::ClipStats<f32>;
pub type TechnologyProfileF64 = compute_models::TechnologyProfile<f64>;
pub type TechnologyProfileF32 = compute_models::TechnologyProfile<f32>;
pub type QsConfigF64 = compute_models::QsConfig<f64>;
pub type QsConfigF32 = compute_models::QsConfig<f32>;
pub type QrConfigF64 = compute_models::QrConfig<f64>;
pub type QrConfigF32 = compute_models::QrConfig<f32>;
pub type ArchitectureConfigF64 = architectures::ArchitectureConfig<f64>;
pub type ArchitectureConfigF32 = architectures::ArchitectureConfig<f32>;
pub type NoiseBudgetF64 = architectures::NoiseBudget<f64>;
pub type NoiseBudgetF32 = architectures::NoiseBudget<f32>;
