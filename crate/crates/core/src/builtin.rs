//! Example problems: linear flows with gain impulses, the relaxation
//! equation, a cubic dissipative field and a sign-changing coefficient field.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frde_solver::VectorField;
use crate::lyapunov::LyapunovSpec;
use crate::nifrde_core::{ImpulseMap, ImpulseSchedule, Location, NifrdeProblem};
use crate::quadrature::composite_gauss_legendre;
use crate::scalar::Real;
use crate::special_functions::{ml_one, ml_two, MLParams};

/// `f(t, x) = A x`, applied componentwise.
pub fn linear_field<T: Real>(a: T) -> VectorField<T> {
    Arc::new(move |_, x: &[T]| x.iter().map(|&v| a * v).collect())
}

/// `f(t, x) = -a(t) x (1 + x²)`, componentwise.
pub fn cubic_field<T: Real>(a: impl Fn(T) -> T + Send + Sync + 'static) -> VectorField<T> {
    Arc::new(move |t, x: &[T]| x.iter().map(|&v| -a(t) * v * (T::one() + v * v)).collect())
}

/// `φ_k(t, x) = gain_k(t) · x` for each gain function.
pub fn gain_impulses<T: Real>(gains: Vec<Arc<dyn Fn(T) -> T + Send + Sync>>) -> Vec<ImpulseMap<T>> {
    gains
        .into_iter()
        .map(|g| Arc::new(move |t: T, x: &[T]| x.iter().map(|&v| g(t) * v).collect()) as ImpulseMap<T>)
        .collect()
}

/// `φ_k(t, x) = c_k · x` with constant gains.
pub fn constant_gain_impulses<T: Real>(gains: &[T]) -> Vec<ImpulseMap<T>> {
    gain_impulses(gains.iter().map(|&c| Arc::new(move |_: T| c) as Arc<dyn Fn(T) -> T + Send + Sync>).collect())
}

/// Flows `[0, 1]`, `[1.5, 2.5]`, `[3.5, 4.5]` separated by impulse intervals
/// of lengths 0.5 and 1.
pub fn linear_example_schedule<T: Real>() -> ImpulseSchedule<T> {
    let v = |x: f64| T::lit(x);
    ImpulseSchedule::new(vec![v(0.0), v(1.5), v(3.5)], vec![v(1.0), v(2.5)], v(4.5)).expect("valid schedule")
}

/// Scalar linear flow `D^q x = A x` with constant-gain impulses, from `t = 0`.
pub fn linear_example<T: Real>(q: T, a: T, gains: &[T], schedule: ImpulseSchedule<T>, x0: T) -> Result<NifrdeProblem<T>> {
    if gains.len() != schedule.impulse_count() {
        return Err(Error::Parameter(format!(
            "{} gains given for {} impulse intervals",
            gains.len(),
            schedule.impulse_count()
        )));
    }
    NifrdeProblem::new(q, schedule, linear_field(a), constant_gain_impulses(gains), T::zero(), vec![x0])
}

/// Closed-form solution of [`linear_example`] at `t`.
///
/// `x(t_k - 0) = x0 E_q(A t_1^q) Π_{i<k} a_i E_q(A (t_{i+1} - s_i)^q)`, the
/// impulse value is `a_k x(t_k - 0)` and flow `k` continues as
/// `a_k x(t_k - 0) E_q(A (t - s_k)^q)`.
pub fn linear_example_exact<T: Real>(q: T, a: T, gains: &[T], schedule: &ImpulseSchedule<T>, x0: T, t: T) -> Result<T> {
    let e = |len: T| ml_one(q, a * len.powf(q));
    let left_limit = |k: usize| -> Result<T> {
        let mut v = x0 * e(schedule.t[0])?;
        for i in 1..k {
            v = v * gains[i - 1] * e(schedule.t[i] - schedule.s[i])?;
        }
        Ok(v)
    };
    match schedule.locate(t)? {
        Location::Flow(0) => Ok(x0 * e(t)?),
        Location::Impulse(k) => Ok(gains[k - 1] * left_limit(k)?),
        Location::Flow(k) => Ok(gains[k - 1] * left_limit(k)? * e(t - schedule.s[k])?),
    }
}

/// No impulses, `D^q x = 1 - x`, `x(0) = 0`.
pub fn relaxation<T: Real>(q: T, horizon: T) -> Result<NifrdeProblem<T>> {
    let f: VectorField<T> = Arc::new(|_, x: &[T]| x.iter().map(|&v| T::one() - v).collect());
    NifrdeProblem::new(q, ImpulseSchedule::no_impulses(horizon)?, f, Vec::new(), T::zero(), vec![T::zero()])
}

/// `t^q E_{q,1+q}(-t^q)`, the solution of [`relaxation`].
pub fn relaxation_exact<T: Real>(q: T, t: T) -> Result<T> {
    if t == T::zero() {
        return Ok(T::zero());
    }
    Ok(t.powf(q) * ml_two(MLParams::new(q, T::one() + q)?, -t.powf(q))?)
}

/// `f ≡ 0`, no impulses.
pub fn zero_field_problem<T: Real>(q: T, horizon: T, x0: Vec<T>) -> Result<NifrdeProblem<T>> {
    let f: VectorField<T> = Arc::new(|_, x: &[T]| vec![T::zero(); x.len()]);
    NifrdeProblem::new(q, ImpulseSchedule::no_impulses(horizon)?, f, Vec::new(), T::zero(), x0)
}

/// Flows `[0, 1.5]`, `[2, 3]`, `[4.5, 6]`.
pub fn dissipative_schedule<T: Real>() -> ImpulseSchedule<T> {
    let v = |x: f64| T::lit(x);
    ImpulseSchedule::new(vec![v(0.0), v(2.0), v(4.5)], vec![v(1.5), v(3.0)], v(6.0)).expect("valid schedule")
}

/// `D^q x = A x` (`A < 0`) with `φ_1 = 0.9 cos(t) x`, `φ_2 = -0.6 x`.
pub fn example5<T: Real>(q: T, a: T, x0: T) -> Result<NifrdeProblem<T>> {
    let phi = gain_impulses(vec![Arc::new(|t: T| T::lit(0.9) * t.cos()), Arc::new(|_| T::lit(-0.6))]);
    NifrdeProblem::new(q, dissipative_schedule(), linear_field(a), phi, T::zero(), vec![x0])
}

/// `D^q x = A x` (`A ≤ 0`) with `φ_k = sin(t) x`.
pub fn example6<T: Real>(q: T, a: T, x0: T) -> Result<NifrdeProblem<T>> {
    let phi = gain_impulses(vec![Arc::new(|t: T| t.sin()), Arc::new(|t: T| t.sin())]);
    NifrdeProblem::new(q, dissipative_schedule(), linear_field(a), phi, T::zero(), vec![x0])
}

/// `D^q x = -(1 + 0.5 sin t) x (1 + x²)` with `φ_k = 0.8 cos(t) x`.
pub fn example7<T: Real>(q: T, x0: T) -> Result<NifrdeProblem<T>> {
    let field = cubic_field(|t: T| T::one() + T::lit(0.5) * t.sin());
    let gain = |t: T| T::lit(0.8) * t.cos();
    let phi = gain_impulses(vec![Arc::new(gain), Arc::new(gain)]);
    NifrdeProblem::new(q, dissipative_schedule(), field, phi, T::zero(), vec![x0])
}

/// `_0^{RL}D^{1/2} sin t = √t E_{2,3/2}(-t²) = (2/√π) ∫_0^{√t} cos(t - u²) du`.
///
/// The integral form has a smooth integrand and stays accurate for
/// arguments beyond the Mittag-Leffler evaluator's range.
pub fn rl_half_derivative_sin<T: Real>(t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    let root = t.sqrt();
    let panels = t.ceil().to_usize().unwrap_or(1) + 2;
    let integral = composite_gauss_legendre(|u: T| (t - u * u).cos(), T::zero(), root, panels, 32);
    T::lit(2.0) * integral / T::PI().sqrt()
}

/// `f(t) = 0.5 (-2/√(πt) + √t E_{2,1.5}(-t²)) / (2 - sin t)`, singular at 0.
pub fn example8_coefficient<T: Real>(t: T) -> T {
    let half = T::lit(0.5);
    let singular = -T::lit(2.0) / (T::PI() * t).sqrt();
    half * (singular + rl_half_derivative_sin(t)) / (T::lit(2.0) - t.sin())
}

/// `t_k = (4k - 1)π/2`, `s_k = (4k + 1)π/2` for `k = 1..=p`, horizon `t_{p+1}`.
pub fn example8_schedule<T: Real>(p: usize) -> ImpulseSchedule<T> {
    let half_pi = T::FRAC_PI_2();
    let point = |m: usize| T::from_count(m) * half_pi;
    let s = std::iter::once(T::zero()).chain((1..=p).map(|k| point(4 * k + 1))).collect();
    let t = (1..=p).map(|k| point(4 * k - 1)).collect();
    ImpulseSchedule::new(s, t, point(4 * (p + 1) - 1)).expect("valid schedule")
}

/// Default start time for [`example8`]: the coefficient is unbounded at 0,
/// which node-based solvers cannot evaluate.
pub const EXAMPLE8_T0: f64 = 0.05;

/// Order of [`example8`].
pub const EXAMPLE8_Q: f64 = 0.5;

/// `D^{1/2} x = x f(t)` with [`example8_coefficient`], `φ_k = 0.9 sin(t) x`.
pub fn example8<T: Real>(p: usize, t0: T, x0: T) -> Result<NifrdeProblem<T>> {
    let field: VectorField<T> = Arc::new(|t, x: &[T]| {
        let c = example8_coefficient(t);
        x.iter().map(|&v| v * c).collect()
    });
    let phi = gain_impulses((0..p).map(|_| Arc::new(|t: T| T::lit(0.9) * t.sin()) as Arc<dyn Fn(T) -> T + Send + Sync>).collect());
    NifrdeProblem::new(T::lit(EXAMPLE8_Q), example8_schedule(p), field, phi, t0, vec![x0])
}

/// `V(t, x) = (2 - sin t) x²`, the candidate used with [`example8`].
pub fn example8_lyapunov<T: Real>() -> LyapunovSpec<T> {
    LyapunovSpec::weighted_quadratic(|t: T| T::lit(2.0) - t.sin(), Some(Arc::new(|t: T| -t.cos())))
}

/// Caputo fractional Dini derivative of [`example8_lyapunov`] along
/// [`example8`] from `t0 = 0`, in closed form:
/// `2x²(2 - sin t) f(t) + x² (2/√(πt) - √t E_{2,1.5}(-t²)) - 2 x0²/√(πt)`.
///
/// The first two terms cancel, leaving `-2 x0²/√(πt) ≤ 0`.
pub fn example8_caputo_dini_closed<T: Real>(t: T, x: T, x0: T) -> T {
    let two = T::lit(2.0);
    let root = (T::PI() * t).sqrt();
    two * x * x * (two - t.sin()) * example8_coefficient(t) + x * x * (two / root - rl_half_derivative_sin(t))
        - two * x0 * x0 / root
}
