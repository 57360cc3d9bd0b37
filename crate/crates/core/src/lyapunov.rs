//! Lyapunov candidates and their two fractional derivatives along the
//! impulsive system: the Dini fractional derivative
//! `limsup (1/h^q)[V(t,x) - V(t-h, x - h^q f(t,x))]` and the Caputo
//! fractional Dini derivative, which weights the whole history of `V` with
//! Grünwald–Letnikov coefficients and subtracts the initial-data kernel.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractional_calculus::{
    caputo_derivative_quadrature, check_order, check_steps, extrapolate, rl_kernel, step_count, Differentiable,
    FiniteDifference, GlWeights, Smooth,
};
use crate::frde_solver::VectorField;
use crate::nifrde_core::{Location, NifrdeProblem};
use crate::scalar::{dot, CompensatedSum, Real};

pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type StateFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type GradientFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type TimeStateFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;

#[derive(Clone)]
pub enum LyapunovForm<T> {
    General(TimeStateFn<T>),
    /// `V(t, x) = m(t) g(x)`; `dm` and `grad_g` default to finite differences.
    Product {
        m: ScalarFn<T>,
        dm: Option<ScalarFn<T>>,
        g: StateFn<T>,
        grad_g: Option<GradientFn<T>>,
    },
    /// `V(x) = xᵀx`.
    Quadratic,
}

/// A Lyapunov candidate. Callables must be safe to invoke concurrently.
#[derive(Clone)]
pub struct LyapunovSpec<T> {
    pub form: LyapunovForm<T>,
    pub lipschitz_hint: Option<T>,
}

impl<T> fmt::Debug for LyapunovSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.form {
            LyapunovForm::General(_) => "general",
            LyapunovForm::Product { .. } => "product",
            LyapunovForm::Quadratic => "quadratic",
        };
        f.debug_struct("LyapunovSpec").field("form", &name).finish_non_exhaustive()
    }
}

fn squared<T: Real>(x: &[T]) -> T {
    dot(x, x)
}

impl<T: Real> LyapunovSpec<T> {
    pub fn quadratic() -> Self {
        Self { form: LyapunovForm::Quadratic, lipschitz_hint: None }
    }

    pub fn general(v: impl Fn(T, &[T]) -> T + Send + Sync + 'static) -> Self {
        Self { form: LyapunovForm::General(Arc::new(v)), lipschitz_hint: None }
    }

    pub fn product(
        m: impl Fn(T) -> T + Send + Sync + 'static,
        dm: Option<ScalarFn<T>>,
        g: impl Fn(&[T]) -> T + Send + Sync + 'static,
        grad_g: Option<GradientFn<T>>,
    ) -> Self {
        Self { form: LyapunovForm::Product { m: Arc::new(m), dm, g: Arc::new(g), grad_g }, lipschitz_hint: None }
    }

    /// `V(t, x) = m(t) xᵀx`.
    pub fn weighted_quadratic(m: impl Fn(T) -> T + Send + Sync + 'static, dm: Option<ScalarFn<T>>) -> Self {
        let grad: GradientFn<T> = Arc::new(|x: &[T]| x.iter().map(|&v| T::lit(2.0) * v).collect());
        Self::product(m, dm, squared, Some(grad))
    }

    pub fn with_lipschitz_hint(mut self, l: T) -> Self {
        self.lipschitz_hint = Some(l);
        self
    }

    pub fn value(&self, t: T, x: &[T]) -> T {
        match &self.form {
            LyapunovForm::General(v) => v(t, x),
            LyapunovForm::Product { m, g, .. } => m(t) * g(x),
            LyapunovForm::Quadratic => squared(x),
        }
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self.form, LyapunovForm::Quadratic)
    }

    /// `∇g(x) · f` for product and quadratic forms.
    fn directional(&self, x: &[T], f: &[T]) -> Option<T> {
        match &self.form {
            LyapunovForm::General(_) => None,
            LyapunovForm::Quadratic => Some(T::lit(2.0) * dot(x, f)),
            LyapunovForm::Product { g, grad_g, .. } => Some(match grad_g {
                Some(grad) => dot(&grad(x), f),
                None => {
                    let eps = T::epsilon().cbrt() * (T::one() + x.iter().fold(T::zero(), |a, v| a.max(v.abs())));
                    let shifted = |s: T| -> Vec<T> { x.iter().zip(f).map(|(&a, &b)| a + s * b).collect() };
                    (g(&shifted(eps)) - g(&shifted(-eps))) / (T::lit(2.0) * eps)
                }
            }),
        }
    }

    /// Closed form of the Dini fractional derivative: `m(t) ∇g(x)·f(t,x)`,
    /// which is `2 m(t) xᵀf` for weighted quadratics and `2 xᵀf` for `xᵀx`.
    pub fn dini_closed_form(&self, ctx: &DiniEvalContext<T>) -> Option<T> {
        let f = (ctx.f)(ctx.t, &ctx.x);
        let d = self.directional(&ctx.x, &f)?;
        Some(match &self.form {
            LyapunovForm::Product { m, .. } => m(ctx.t) * d,
            _ => d,
        })
    }

    /// Closed form of the Caputo fractional Dini derivative for product and
    /// quadratic candidates; see [`closed_form_product`].
    pub fn caputo_closed_form(&self, ctx: &DiniEvalContext<T>) -> Option<Result<T>> {
        match &self.form {
            LyapunovForm::General(_) => None,
            LyapunovForm::Quadratic => Some((|| {
                let f = (ctx.f)(ctx.t, &ctx.x);
                let k = rl_kernel(ctx.t0, ctx.t, ctx.q)?;
                Ok(T::lit(2.0) * dot(&ctx.x, &f) + (squared(&ctx.x) - squared(&ctx.x0)) * k)
            })()),
            LyapunovForm::Product { m, dm, g, .. } => {
                let frdg = |t: T, x: &[T]| self.directional(x, &(ctx.f)(t, x)).expect("product form");
                Some(match dm {
                    Some(dm) => {
                        let (m, dm) = (m.clone(), dm.clone());
                        closed_form_product(&Smooth::scalar(move |t| m(t), move |t| dm(t)), &**g, &frdg, ctx)
                    }
                    None => {
                        let m = m.clone();
                        closed_form_product(&FiniteDifference::scalar(move |t| m(t), ctx.t0, ctx.t), &**g, &frdg, ctx)
                    }
                })
            }
        }
    }

    /// Samples the class conditions on `times × states`.
    pub fn check_class(&self, times: &[T], states: &[Vec<T>]) -> ClassCheck<T> {
        let mut min_value = T::infinity();
        let mut max_at_zero = T::zero();
        let mut lipschitz = T::zero();
        for &t in times {
            if let Some(dim) = states.first().map(Vec::len) {
                max_at_zero = max_at_zero.max(self.value(t, &vec![T::zero(); dim]).abs());
            }
            for (i, x) in states.iter().enumerate() {
                let v = self.value(t, x);
                min_value = min_value.min(v);
                for y in &states[i + 1..] {
                    let dist = x.iter().zip(y).fold(T::zero(), |a, (&p, &q)| a.max((p - q).abs()));
                    if dist > T::zero() {
                        lipschitz = lipschitz.max((v - self.value(t, y)).abs() / dist);
                    }
                }
            }
        }
        ClassCheck {
            min_value,
            max_at_zero,
            lipschitz_ratio: lipschitz,
            lipschitz_ok: self.lipschitz_hint.map(|l| lipschitz <= l),
        }
    }
}

/// Outcome of [`LyapunovSpec::check_class`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCheck<T> {
    /// Smallest sampled value; must be `≥ 0`.
    pub min_value: T,
    /// Largest `|V(t, 0)|`; must be `0`.
    pub max_at_zero: T,
    /// Largest sampled difference quotient in `x` (sup norm).
    pub lipschitz_ratio: T,
    /// Comparison with the hint, when one was given.
    pub lipschitz_ok: Option<bool>,
}

impl<T: Real> ClassCheck<T> {
    pub fn passes(&self) -> bool {
        self.min_value >= T::zero() && self.max_at_zero == T::zero() && self.lipschitz_ok != Some(false)
    }
}

/// Evaluation point of the derivative operators.
#[derive(Clone)]
pub struct DiniEvalContext<T> {
    pub t: T,
    pub x: Vec<T>,
    pub t0: T,
    pub x0: Vec<T>,
    pub q: T,
    pub f: VectorField<T>,
    /// Left end of the flow interval containing `t`, clipped to `t0`;
    /// backward steps `t - h` may not go below it.
    pub flow_start: T,
}

impl<T: fmt::Debug> fmt::Debug for DiniEvalContext<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiniEvalContext")
            .field("t", &self.t)
            .field("x", &self.x)
            .field("t0", &self.t0)
            .field("x0", &self.x0)
            .field("q", &self.q)
            .finish_non_exhaustive()
    }
}

impl<T: Real> DiniEvalContext<T> {
    /// Context at `(t, x)` for `problem`; `t` must be interior to a flow
    /// interval and later than `t0`.
    pub fn new(problem: &NifrdeProblem<T>, t: T, x: Vec<T>) -> Result<Self> {
        if x.len() != problem.dim() {
            return Err(Error::Parameter("state has the wrong dimension".into()));
        }
        if !(t > problem.t0) {
            return Err(Error::Domain(format!("evaluation time {t} must exceed t0 = {}", problem.t0)));
        }
        let sched = &problem.schedule;
        match problem.locate(t)? {
            Location::Flow(k) if t > sched.flow_start(k) && t < sched.flow_end(k) => Ok(Self {
                t,
                x,
                t0: problem.t0,
                x0: problem.x0.clone(),
                q: problem.q,
                f: problem.f.clone(),
                flow_start: sched.flow_start(k).max(problem.t0),
            }),
            _ => Err(Error::Domain(format!("t = {t} is not interior to a flow interval"))),
        }
    }

    /// Context for a system without impulses started at `t0`.
    pub fn without_impulses(q: T, f: VectorField<T>, t0: T, x0: Vec<T>, t: T, x: Vec<T>) -> Result<Self> {
        check_order(q)?;
        if !(t > t0) || x.len() != x0.len() {
            return Err(Error::Domain(format!("need t > t0 and matching dimensions, got t = {t}, t0 = {t0}")));
        }
        Ok(Self { t, x, t0, x0, q, f, flow_start: t0 })
    }

    fn displaced(&self, h: T) -> Vec<T> {
        let hq = h.powf(self.q);
        let f = (self.f)(self.t, &self.x);
        self.x.iter().zip(f).map(|(&x, fx)| x - hq * fx).collect()
    }
}

/// Levels `k` of the steps `(t - t0)/2^k`.
pub const FIRST_LEVEL: i32 = 4;
pub const LEVELS: i32 = 9;
/// No step below `(t - t0)/2^MAX_LEVEL` is used.
pub const MAX_LEVEL: i32 = 14;

/// Steps `(t - t0)/2^k` for nine consecutive `k ≥ 4`, starting at the first
/// level whose step keeps `t - h` inside the flow interval, with `k ≤ 14`.
/// At least four steps are required.
pub fn operator_steps<T: Real>(ctx: &DiniEvalContext<T>) -> Result<Vec<T>> {
    let span = ctx.t - ctx.t0;
    let room = ctx.t - ctx.flow_start;
    let mut first = FIRST_LEVEL;
    while span / T::lit(2f64.powi(first)) > room && first <= MAX_LEVEL {
        first += 1;
    }
    let last = (first + LEVELS - 1).min(MAX_LEVEL);
    if last - first + 1 < 4 {
        return Err(Error::Domain(format!(
            "t = {} is too close to the start of its flow interval ({})",
            ctx.t, ctx.flow_start
        )));
    }
    Ok((first..=last).map(|k| span / T::lit(2f64.powi(k))).collect())
}

/// Error exponents `i + j q` (`i, j ≥ 0`) in increasing order, distinct,
/// shifted by `offset`, positive ones only, at most `count`.
fn exponent_lattice<T: Real>(q: T, offset: T, count: usize) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for i in 0..6 {
        for j in 0..12 {
            let e = T::from_count(i) + T::from_count(j) * q + offset;
            if e > T::lit(1e-9) {
                out.push(e);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    out.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-9));
    out.truncate(count);
    out
}

/// Exponents eliminated for the Dini fractional derivative: `i + (j-1) q`,
/// from the Taylor expansion of `V(t-h, x-h^q f)`.
pub fn dini_exponents<T: Real>(q: T) -> Vec<T> {
    exponent_lattice(q, -q, 6)
}

/// Exponents eliminated for the Caputo fractional Dini derivative:
/// `i + j q`, mixing the Grünwald–Letnikov expansion in `h` with the
/// displacement `h^q f`.
pub fn caputo_dini_exponents<T: Real>(q: T) -> Vec<T> {
    exponent_lattice(q, T::zero(), 6)
}

/// Extrapolated operator value with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorEstimate<T> {
    pub value: T,
    pub steps: Vec<T>,
    pub raw: Vec<T>,
    /// Spread of the last four entries of the final extrapolation column.
    pub oscillation: T,
    /// Closed form, when the candidate has one.
    pub closed_form: Option<T>,
}

impl<T: Real> OperatorEstimate<T> {
    /// `false` ("non-convergent") when the oscillation exceeds `10 · tol`.
    pub fn is_convergent(&self, tol: T) -> bool {
        self.oscillation <= T::lit(10.0) * tol
    }
}

fn resolve_steps<T: Real>(ctx: &DiniEvalContext<T>, steps: Option<&[T]>) -> Result<Vec<T>> {
    let steps = match steps {
        Some(s) => s.to_vec(),
        None => operator_steps(ctx)?,
    };
    check_steps(&steps, ctx.t - ctx.t0)?;
    if let Some(&h) = steps.iter().find(|&&h| ctx.t - h < ctx.flow_start) {
        return Err(Error::Domain(format!(
            "step h = {h} leaves the flow interval: t - h = {} < {}",
            ctx.t - h,
            ctx.flow_start
        )));
    }
    Ok(steps)
}

/// `limsup_{h→0+} (1/h^q)[V(t,x) - V(t-h, x - h^q f(t,x))]`, estimated on
/// `steps` (default [`operator_steps`]) and extrapolated with
/// [`dini_exponents`].
pub fn dini_fractional<T: Real>(v: &LyapunovSpec<T>, ctx: &DiniEvalContext<T>, steps: Option<&[T]>) -> Result<OperatorEstimate<T>> {
    check_order(ctx.q)?;
    let steps = resolve_steps(ctx, steps)?;
    let here = v.value(ctx.t, &ctx.x);
    let raw: Vec<T> = steps
        .iter()
        .map(|&h| (here - v.value(ctx.t - h, &ctx.displaced(h))) / h.powf(ctx.q))
        .collect();
    let (value, oscillation) = extrapolate(&steps, &raw, &dini_exponents(ctx.q));
    Ok(OperatorEstimate { value, steps, raw, oscillation, closed_form: v.dini_closed_form(ctx) })
}

/// `limsup (1/h^q)[V(t,x) + Σ_{r=1}^{⌊(t-t0)/h⌋} w_r V(t - r h, x - h^q f(t,x))]
/// - V(t0, x0) (t-t0)^{-q}/Γ(1-q)` with `w_r = (-1)^r C(q, r)`.
///
/// Backward samples `t - r h` reach back to `t0` across impulse intervals;
/// `V` is evaluated there by its own definition.
pub fn caputo_fractional_dini<T: Real>(
    v: &LyapunovSpec<T>,
    ctx: &DiniEvalContext<T>,
    steps: Option<&[T]>,
) -> Result<OperatorEstimate<T>> {
    check_order(ctx.q)?;
    let steps = resolve_steps(ctx, steps)?;
    let span = ctx.t - ctx.t0;
    let n_max = step_count(span, steps[steps.len() - 1]);
    let weights = GlWeights::new(ctx.q, n_max.max(1))?;
    let w = weights.as_slice();
    let kernel_term = v.value(ctx.t0, &ctx.x0) * rl_kernel(ctx.t0, ctx.t, ctx.q)?;
    let here = v.value(ctx.t, &ctx.x);
    let raw: Vec<T> = steps
        .iter()
        .map(|&h| {
            let y = ctx.displaced(h);
            let mut acc = CompensatedSum::new();
            acc.add(here);
            for (r, &wr) in w.iter().enumerate().take(step_count(span, h) + 1).skip(1) {
                acc.add(wr * v.value(ctx.t - T::from_count(r) * h, &y));
            }
            acc.value() / h.powf(ctx.q) - kernel_term
        })
        .collect();
    let (value, oscillation) = extrapolate(&steps, &raw, &caputo_dini_exponents(ctx.q));
    let closed_form = v.caputo_closed_form(ctx).transpose()?;
    Ok(OperatorEstimate { value, steps, raw, oscillation, closed_form })
}

/// `m(t)·frdg(t,x) + g(x)·_{t0}^C D^q m(t) + (g(x) - g(x0))·m(t0)·(t-t0)^{-q}/Γ(1-q)`,
/// with the Caputo derivative of `m` by quadrature.
pub fn closed_form_product<T: Real, M: Differentiable<T> + ?Sized>(
    m: &M,
    g: &dyn Fn(&[T]) -> T,
    frdg: &dyn Fn(T, &[T]) -> T,
    ctx: &DiniEvalContext<T>,
) -> Result<T> {
    let caputo_m = caputo_derivative_quadrature(m, ctx.t0, ctx.t, ctx.q)?[0];
    let k = rl_kernel(ctx.t0, ctx.t, ctx.q)?;
    Ok(m.value(ctx.t)[0] * frdg(ctx.t, &ctx.x) + g(&ctx.x) * caputo_m + (g(&ctx.x) - g(&ctx.x0)) * m.value(ctx.t0)[0] * k)
}

/// The weighted-quadratic formula with `m²` in place of `m`, as it appears
/// in some printed statements of this result:
/// `2 m²(t) xᵀf + xᵀx ·_{t0}^C D^q m²(t) + (xᵀx - x0ᵀx0) m²(t0) (t-t0)^{-q}/Γ(1-q)`.
///
/// It equals [`closed_form_product`] for the candidate `m²(t) xᵀx`, not for
/// `m(t) xᵀx`; kept only to reproduce that text.
pub fn printed_weighted_quadratic_variant<T: Real>(
    m: impl Fn(T) -> T + Send + Sync + 'static,
    dm: impl Fn(T) -> T + Send + Sync + 'static,
    ctx: &DiniEvalContext<T>,
) -> Result<T> {
    let m = Arc::new(m);
    let m2 = {
        let m = m.clone();
        move |t: T| m(t) * m(t)
    };
    let dm2 = move |t: T| T::lit(2.0) * m(t) * dm(t);
    let frdg = |t: T, x: &[T]| T::lit(2.0) * dot(x, &(ctx.f)(t, x));
    closed_form_product(&Smooth::scalar(m2, dm2), &squared, &frdg, ctx)
}

/// Smallest `V(t_k - 0, x) - V(t, φ_k(t, x))` over the samples, with its
/// witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseMargin<T> {
    pub margin: T,
    pub witness_t: T,
    pub witness_x: Vec<T>,
}

/// Samples the impulse condition `V(t, φ_k(t,x)) ≤ V(t_k - 0, x)` on
/// `sample_t × sample_x`. `V(t_k - 0, ·)` is `V(t_k, ·)` since candidates are
/// left-continuous there.
pub fn check_impulse_decrease<T: Real>(
    v: &LyapunovSpec<T>,
    p: &NifrdeProblem<T>,
    k: usize,
    sample_x: &[Vec<T>],
    sample_t: &[T],
) -> Result<ImpulseMargin<T>> {
    let (tk, sk) = p.schedule.impulse_interval(k)?;
    let mut worst = ImpulseMargin { margin: T::infinity(), witness_t: tk, witness_x: Vec::new() };
    for &t in sample_t {
        if !(t >= tk && t <= sk) {
            return Err(Error::Domain(format!("sample time {t} outside [{tk}, {sk}]")));
        }
        for x in sample_x {
            let margin = v.value(tk, x) - v.value(t, &(p.phi[k - 1])(t, x));
            if margin < worst.margin {
                worst = ImpulseMargin { margin, witness_t: t, witness_x: x.clone() };
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_lists() {
        let d = dini_exponents(0.5f64);
        assert_eq!(d, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        let c = caputo_dini_exponents(0.3f64);
        assert!((c[0] - 0.3).abs() < 1e-15 && (c[1] - 0.6).abs() < 1e-15 && (c[2] - 0.9).abs() < 1e-15);
        assert!((c[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn steps_respect_flow_start() {
        let f: VectorField<f64> = Arc::new(|_, x: &[f64]| vec![-x[0]]);
        let mut ctx = DiniEvalContext::without_impulses(0.5, f, 0.0, vec![1.0], 1.0, vec![1.0]).unwrap();
        let steps = operator_steps(&ctx).unwrap();
        assert_eq!(steps.len(), 9);
        assert_eq!(steps[0], 1.0 / 16.0);
        ctx.flow_start = 0.99;
        let steps = operator_steps(&ctx).unwrap();
        assert!(steps[0] <= 0.01 && steps.len() >= 4);
        ctx.flow_start = 0.99999;
        assert!(operator_steps(&ctx).is_err());
    }

    #[test]
    fn class_check_flags_negative_candidates() {
        let good = LyapunovSpec::<f64>::quadratic().with_lipschitz_hint(10.0);
        let states: Vec<Vec<f64>> = (-4..=4).map(|i| vec![i as f64 * 0.5]).collect();
        assert!(good.check_class(&[0.0, 1.0], &states).passes());
        let bad = LyapunovSpec::general(|_, x: &[f64]| x[0]);
        assert!(!bad.check_class(&[0.0], &states).passes());
    }
}
