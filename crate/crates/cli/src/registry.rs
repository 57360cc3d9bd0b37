//! Named built-in problems with their default parameters, Lyapunov
//! candidates and closed-form solutions where known.

use std::sync::Arc;

use nifrde::builtin::{self, EXAMPLE8_T0};
use nifrde::nifrde_core::SegmentKind;
use nifrde::{ImpulseSchedule, LyapunovSpec, NifrdeProblem};

use crate::config::{CandidateConfig, ScheduleConfig};
use crate::CliError;

pub const NAMES: [&str; 7] =
    ["example1-linear", "figure1-relaxation", "zero", "example5", "example6", "example7", "example8"];

/// Parameter overrides; `None` keeps the built-in default.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pub q: Option<f64>,
    pub a: Option<f64>,
    pub gains: Option<Vec<f64>>,
    pub x0: Option<f64>,
    pub t0: Option<f64>,
    pub horizon: Option<f64>,
    pub impulses: Option<usize>,
    pub schedule: Option<ScheduleConfig>,
}

type Exact = Box<dyn Fn(SegmentKind, (f64, f64), f64) -> nifrde::Result<f64>>;

pub struct Built {
    pub problem: NifrdeProblem,
    pub candidate: LyapunovSpec,
    /// Closed-form solution, evaluated per row: segment kind, segment
    /// interval, time.
    pub exact: Option<Exact>,
}

fn reject(name: &str, what: &str, present: bool) -> Result<(), CliError> {
    if present {
        Err(CliError::Config(format!("{name} does not take {what}")))
    } else {
        Ok(())
    }
}

pub fn build(name: &str, p: &Params) -> Result<Built, CliError> {
    let name = NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .ok_or_else(|| CliError::Config(format!("unknown builtin {name:?}; known: {}", NAMES.join(", "))))?;
    let q = p.q.unwrap_or(0.5);
    let x0 = p.x0.unwrap_or(if name == "zero" { 0.0 } else { 1.0 });
    if name != "example1-linear" {
        reject(name, "a schedule", p.schedule.is_some())?;
        reject(name, "gains", p.gains.is_some())?;
    }
    if !matches!(name, "example1-linear" | "example5" | "example6") {
        reject(name, "A", p.a.is_some())?;
    }
    if !matches!(name, "example1-linear" | "figure1-relaxation" | "zero") {
        reject(name, "a horizon", p.horizon.is_some())?;
    }
    if name != "example8" {
        reject(name, "an impulse count", p.impulses.is_some())?;
    }
    let mut exact: Option<Exact> = None;
    let mut candidate = LyapunovSpec::quadratic();
    let problem = match name {
        "example1-linear" => {
            let a = p.a.unwrap_or(-1.0);
            let schedule = match (&p.schedule, p.horizon) {
                (Some(s), None) => ImpulseSchedule::new(s.s.clone(), s.t.clone(), s.horizon)?,
                (Some(_), Some(_)) => return Err(CliError::Config("give either a schedule or a horizon".into())),
                (None, h) => {
                    let base = builtin::linear_example_schedule::<f64>();
                    ImpulseSchedule::new(base.s, base.t, h.unwrap_or(base.horizon))?
                }
            };
            let gains = p.gains.clone().unwrap_or_else(|| vec![0.5; schedule.impulse_count()]);
            let problem = builtin::linear_example(q, a, &gains, schedule.clone(), x0)?;
            exact = Some(Box::new(move |kind, (_, end), t| {
                // Impulse values are constant in t; evaluate at the interval end
                // where the schedule lookup is unambiguous.
                let at = if kind == SegmentKind::Impulse { end } else { t };
                builtin::linear_example_exact(q, a, &gains, &schedule, x0, at)
            }));
            problem
        }
        "figure1-relaxation" => {
            reject(name, "x0", p.x0.is_some())?;
            exact = Some(Box::new(move |_, _, t| builtin::relaxation_exact(q, t)));
            builtin::relaxation(q, p.horizon.unwrap_or(5.0))?
        }
        "zero" => builtin::zero_field_problem(q, p.horizon.unwrap_or(5.0), vec![x0])?,
        "example5" => builtin::example5(q, p.a.unwrap_or(-1.0), x0)?,
        "example6" => builtin::example6(q, p.a.unwrap_or(-0.5), x0)?,
        "example7" => builtin::example7(q, x0)?,
        "example8" => {
            reject(name, "q", p.q.is_some())?;
            candidate = builtin::example8_lyapunov();
            builtin::example8(p.impulses.unwrap_or(3), EXAMPLE8_T0, x0)?
        }
        _ => unreachable!("name validated above"),
    };
    let problem = match p.t0 {
        Some(t0) if t0 != problem.t0 => {
            exact = None;
            problem.with_initial(t0, vec![x0])?
        }
        _ => problem,
    };
    Ok(Built { problem, candidate, exact })
}

/// Applies a configured candidate, if any, over the built-in default.
pub fn candidate_from(cfg: &CandidateConfig, default: LyapunovSpec) -> Result<LyapunovSpec, CliError> {
    let spec = match cfg.form.as_deref() {
        None => default,
        Some("quadratic") => LyapunovSpec::quadratic(),
        Some("weighted_quadratic") => {
            let (c, s, k) = (cfg.m_const.unwrap_or(1.0), cfg.m_sin.unwrap_or(0.0), cfg.m_cos.unwrap_or(0.0));
            if c - s.abs() - k.abs() < 0.0 {
                return Err(CliError::Config("weight m(t) must be nonnegative".into()));
            }
            LyapunovSpec::weighted_quadratic(
                move |t: f64| c + s * t.sin() + k * t.cos(),
                Some(Arc::new(move |t: f64| s * t.cos() - k * t.sin())),
            )
        }
        Some(other) => return Err(CliError::Config(format!("unknown candidate form {other:?}"))),
    };
    Ok(match cfg.lipschitz_hint {
        Some(l) => spec.with_lipschitz_hint(l),
        None => spec,
    })
}
