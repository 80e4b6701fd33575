//! OFDM sensing with random data payloads: signal model, matched and
//! reciprocal filter receivers, delay estimators, closed-form MSE theory,
//! sensing-aware constellation shaping, and a Monte-Carlo sweep harness.

pub mod constellation;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod harness;
pub mod receiver;
pub mod shaping;
pub mod sigmodel;
pub mod theory;

pub use error::{IsacError, Result};
