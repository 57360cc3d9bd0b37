use thiserror::Error;

use crate::nifrde_core::ScheduleViolation;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    Pole(f64),
    #[error("argument z = {z} unsupported: {reason}")]
    Range { z: f64, reason: String },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite state at grid index {index}{}", segment_suffix(*.segment))]
    NonFinite { segment: Option<usize>, index: usize },
    #[error("impulse index {k} outside 1..={p}")]
    Index { k: usize, p: usize },
    #[error("invalid impulse schedule: {0}")]
    Schedule(ScheduleViolation),
}

fn segment_suffix(segment: Option<usize>) -> String {
    match segment {
        Some(k) => format!(" in flow segment {k}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
