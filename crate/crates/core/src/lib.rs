// SPDX-License-Identifier: Apache-2.0

//! Behavioral model of a ternary compute-in-memory SRAM array backed by
//! clustered three-level ReRAM: trit codec, device and restore physics,
//! array MAC engine, yield Monte Carlo, weight mapping, cost accounting and
//! an error-injection accuracy harness.
//!
//! Electrical and cost models are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix the scalar for common use.

// `!(x > 0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accuracy;
pub mod array;
pub mod device;
pub mod error;
pub mod mapper;
pub mod perf;
pub mod scalar;
pub mod trit;
pub mod yield_mc;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DeviceParamsF64 = device::DeviceParams<f64>;
pub type DeviceParamsF32 = device::DeviceParams<f32>;
pub type RestoreThresholdsF64 = device::RestoreThresholds<f64>;
pub type RestoreThresholdsF32 = device::RestoreThresholds<f32>;
pub type ModeSettingsF64 = device::ModeSettings<f64>;
pub type ModeSettingsF32 = device::ModeSettings<f32>;
pub type EnergyParamsF64 = perf::EnergyParams<f64>;
pub type EnergyParamsF32 = perf::EnergyParams<f32>;
pub type AreaParamsF64 = perf::AreaParams<f64>;
pub type AreaParamsF32 = perf::AreaParams<f32>;
pub type EnergyLedgerF64 = perf::EnergyLedger<f64>;
pub type EnergyLedgerF32 = perf::EnergyLedger<f32>;
