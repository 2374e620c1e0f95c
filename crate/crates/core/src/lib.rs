//! Sub-wavelength optical-disc read-out: vectorial focusing, π-phase bit
//! masks, far-field propagation, five-pixel gain detection and quantum
//! noise.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod disc;
pub mod error;
pub mod field;
pub mod focal;
pub mod noise;
pub mod propagation;
pub mod readout;
pub mod scalar;
pub mod special;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FieldProfile64 = field::FieldProfile<f64>;
pub type FieldProfile32 = field::FieldProfile<f32>;
pub type FocusSpec64 = focal::FocusSpec<f64>;
pub type FocusSpec32 = focal::FocusSpec<f32>;
pub type PropagationSpec64 = propagation::PropagationSpec<f64>;
pub type SignalMatrix64 = detection::SignalMatrix<f64>;
pub type NoiseParams64 = noise::NoiseParams<f64>;
pub type NoiseTable64 = noise::NoiseTable<f64>;
pub type SystemConfig64 = system::SystemConfig<f64>;
pub type System64 = system::System<f64>;
pub type System32 = system::System<f32>;
