//! Caputo fractional differential equations with non-instantaneous impulses.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`
//! through [`scalar::Real`]); the aliases below fix it to `f64`.

pub mod builtin;
pub mod error;
pub mod fractional_calculus;
pub mod frde_solver;
pub mod lyapunov;
pub mod nifrde_core;
pub mod quadrature;
pub mod scalar;
pub mod special_functions;
pub mod stability;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GlWeights = fractional_calculus::GlWeights<f64>;
pub type LimitEstimate = fractional_calculus::LimitEstimate<f64>;
pub type FlowProblem = frde_solver::FlowProblem<f64>;
pub type FlowSolution = frde_solver::FlowSolution<f64>;
pub type VectorField = frde_solver::VectorField<f64>;
pub type ImpulseSchedule = nifrde_core::ImpulseSchedule<f64>;
pub type ImpulseMap = nifrde_core::ImpulseMap<f64>;
pub type NifrdeProblem = nifrde_core::NifrdeProblem<f64>;
pub type Trajectory = nifrde_core::Trajectory<f64>;
pub type Segment = nifrde_core::Segment<f64>;
pub type LyapunovSpec = lyapunov::LyapunovSpec<f64>;
pub type DiniEvalContext = lyapunov::DiniEvalContext<f64>;
pub type OperatorEstimate = lyapunov::OperatorEstimate<f64>;
pub type ClassKFunction = stability::ClassKFunction<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
pub type MLParams = special_functions::MLParams<f64>;
