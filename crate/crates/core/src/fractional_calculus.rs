//! Grünwald–Letnikov weights, Caputo derivatives by quadrature and the
//! Caputo fractional Dini derivative as an extrapolated limit.

use crate::error::{Error, Result};
use crate::quadrature::weakly_singular_vec;
use crate::scalar::{CompensatedSum, Real};
use crate::special_functions::{gamma, recip_gamma};

/// Weights `w_r = (-1)^r C(q, r)` for `r = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlWeights<T> {
    q: T,
    w: Vec<T>,
}

impl<T: Real> GlWeights<T> {
    pub fn new(q: T, n: usize) -> Result<Self> {
        check_order(q)?;
        if n == 0 {
            return Err(Error::Parameter("weight count N must be at least 1".into()));
        }
        let mut w = Vec::with_capacity(n + 1);
        w.push(T::one());
        for r in 1..=n {
            let rf = T::from_count(r);
            w.push(w[r - 1] * (rf - T::one() - q) / rf);
        }
        Ok(Self { q, w })
    }

    pub fn q(&self) -> T {
        self.q
    }

    /// Largest index `N`.
    pub fn order_count(&self) -> usize {
        self.w.len() - 1
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }
}

/// Shorthand for [`GlWeights::new`].
pub fn gl_weights<T: Real>(q: T, n: usize) -> Result<GlWeights<T>> {
    GlWeights::new(q, n)
}

pub(crate) fn check_order<T: Real>(q: T) -> Result<()> {
    if q > T::zero() && q < T::one() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("order q = {q} must lie in (0, 1)")))
    }
}

fn check_interval<T: Real>(t0: T, t: T) -> Result<()> {
    if t > t0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("need t > t0, got t = {t}, t0 = {t0}")))
    }
}

/// A vector-valued function of time with a first derivative.
pub trait Differentiable<T> {
    fn dim(&self) -> usize;
    fn value(&self, t: T) -> Vec<T>;
    fn derivative(&self, t: T) -> Vec<T>;
}

type VecFn<T> = Box<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// Function given together with its exact derivative.
pub struct Smooth<T> {
    dim: usize,
    value: VecFn<T>,
    derivative: VecFn<T>,
}

impl<T: Real> Smooth<T> {
    pub fn new(
        dim: usize,
        value: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
        derivative: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, value: Box::new(value), derivative: Box::new(derivative) }
    }

    pub fn scalar(
        value: impl Fn(T) -> T + Send + Sync + 'static,
        derivative: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::new(1, move |t| vec![value(t)], move |t| vec![derivative(t)])
    }
}

impl<T: Real> Differentiable<T> for Smooth<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, t: T) -> Vec<T> {
        (self.value)(t)
    }
    fn derivative(&self, t: T) -> Vec<T> {
        (self.derivative)(t)
    }
}

/// Function whose derivative is taken by fourth-order finite differences.
///
/// Central stencils are used in the interior of `[lo, hi]`; within two steps
/// of either end the one-sided fourth-order stencil keeps every evaluation
/// inside the interval.
pub struct FiniteDifference<T> {
    dim: usize,
    value: VecFn<T>,
    lo: T,
    hi: T,
    step: T,
}

impl<T: Real> FiniteDifference<T> {
    pub fn new(dim: usize, value: impl Fn(T) -> Vec<T> + Send + Sync + 'static, lo: T, hi: T) -> Self {
        let step = T::lit(1e-3) * (hi - lo).max(T::one());
        Self { dim, value: Box::new(value), lo, hi, step }
    }

    pub fn scalar(value: impl Fn(T) -> T + Send + Sync + 'static, lo: T, hi: T) -> Self {
        Self::new(1, move |t| vec![value(t)], lo, hi)
    }

    pub fn with_step(mut self, step: T) -> Self {
        self.step = step;
        self
    }
}

impl<T: Real> Differentiable<T> for FiniteDifference<T> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, t: T) -> Vec<T> {
        (self.value)(t)
    }
    fn derivative(&self, t: T) -> Vec<T> {
        let step = self.step.min((self.hi - self.lo) / T::lit(4.0));
        fourth_order_difference(&*self.value, self.dim, t, step, self.lo, self.hi)
    }
}

fn fourth_order_difference<T: Real>(f: &dyn Fn(T) -> Vec<T>, dim: usize, t: T, h: T, lo: T, hi: T) -> Vec<T> {
    let two = T::lit(2.0);
    let combine = |offsets: &[(f64, f64)], sign: T| {
        let mut out = vec![T::zero(); dim];
        for &(k, c) in offsets {
            for (o, v) in out.iter_mut().zip(f(t + sign * T::lit(k) * h)) {
                *o += T::lit(c) * v;
            }
        }
        out.into_iter().map(|v| sign * v / (T::lit(12.0) * h)).collect()
    };
    if t - two * h >= lo && t + two * h <= hi {
        combine(&[(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)], T::one())
    } else {
        let one_sided = [(0.0, -25.0), (1.0, 48.0), (2.0, -36.0), (3.0, 16.0), (4.0, -3.0)];
        if t - lo < hi - t {
            combine(&one_sided, T::one())
        } else {
            combine(&one_sided, -T::one())
        }
    }
}

/// Samples of a vector function on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    grid: Vec<T>,
    values: Vec<Vec<T>>,
    derivative_values: Option<Vec<Vec<T>>>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(grid: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Parameter(format!(
                "need at least two samples and matching lengths, got {} times and {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter(format!("grid not strictly increasing at index {}", i + 1)));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Parameter("samples have inconsistent dimensions".into()));
        }
        Ok(Self { grid, values, derivative_values: None })
    }

    pub fn with_derivatives(mut self, derivative_values: Vec<Vec<T>>) -> Result<Self> {
        if derivative_values.len() != self.grid.len() || derivative_values.iter().any(|d| d.len() != self.dim()) {
            return Err(Error::Parameter("derivative samples do not match the grid".into()));
        }
        self.derivative_values = Some(derivative_values);
        Ok(self)
    }

    pub fn t0(&self) -> T {
        self.grid[0]
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    fn cell(&self, t: T) -> usize {
        let i = self.grid.partition_point(|&g| g <= t);
        i.clamp(1, self.grid.len() - 1) - 1
    }

    /// Cubic Lagrange interpolation through the four nearest samples
    /// (linear when only two exist).
    fn interpolate(&self, t: T) -> Vec<T> {
        let n = self.grid.len();
        let i = self.cell(t);
        let (lo, hi) = if n < 4 {
            (i, i + 1)
        } else {
            let lo = i.saturating_sub(1).min(n - 4);
            (lo, lo + 3)
        };
        let mut out = vec![T::zero(); self.dim()];
        for j in lo..=hi {
            let mut basis = T::one();
            for k in lo..=hi {
                if k != j {
                    basis *= (t - self.grid[k]) / (self.grid[j] - self.grid[k]);
                }
            }
            for (o, v) in out.iter_mut().zip(&self.values[j]) {
                *o += basis * *v;
            }
        }
        out
    }
}

impl<T: Real> Differentiable<T> for SampledFunction<T> {
    fn dim(&self) -> usize {
        self.values[0].len()
    }

    fn value(&self, t: T) -> Vec<T> {
        self.interpolate(t)
    }

    /// Linear interpolation of supplied derivative samples, otherwise a
    /// fourth-order difference of the interpolant with one tenth of the local
    /// grid spacing as step.
    fn derivative(&self, t: T) -> Vec<T> {
        let i = self.cell(t);
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        match &self.derivative_values {
            Some(d) => {
                let w = ((t - a) / (b - a)).max(T::zero()).min(T::one());
                d[i].iter().zip(&d[i + 1]).map(|(&l, &r)| l + w * (r - l)).collect()
            }
            None => {
                let lo = self.grid[0];
                let hi = self.grid[self.grid.len() - 1];
                let h = (b - a) / T::lit(10.0);
                fourth_order_difference(&|s| self.interpolate(s), self.dim(), t, h, lo, hi)
            }
        }
    }
}

/// `(1/Γ(1-q)) ∫_{t0}^t (t-s)^{-q} m'(s) ds`, componentwise.
pub fn caputo_derivative_quadrature<T: Real, M: Differentiable<T> + ?Sized>(m: &M, t0: T, t: T, q: T) -> Result<Vec<T>> {
    check_order(q)?;
    check_interval(t0, t)?;
    let scale = recip_gamma(T::one() - q);
    let integral = weakly_singular_vec(|s| m.derivative(s), m.dim(), t0, t, T::one() - q);
    Ok(integral.into_iter().map(|v| v * scale).collect())
}

/// `(t - t0)^{-q} / Γ(1-q)`, the Riemann–Liouville derivative of the constant 1.
pub fn rl_kernel<T: Real>(t0: T, t: T, q: T) -> Result<T> {
    check_order(q)?;
    check_interval(t0, t)?;
    Ok((t - t0).powf(-q) / gamma(T::one() - q)?)
}

/// Steps `(t - t0)/2^k`, `k = 4..=12`.
pub fn default_dini_steps<T: Real>(t0: T, t: T) -> Vec<T> {
    (4..=12).map(|k| (t - t0) / T::lit(2f64.powi(k))).collect()
}

/// Error exponents eliminated by default when extrapolating the
/// Grünwald–Letnikov estimate: `h`, `h^{1+q}`, `h^2`, `h^{2+q}`, `h^3`.
pub fn default_dini_exponents<T: Real>(q: T) -> Vec<T> {
    let one = T::one();
    let two = T::lit(2.0);
    vec![one, one + q, two, two + q, T::lit(3.0)]
}

/// A limit estimated from a decreasing step sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate<T> {
    /// Extrapolated limit per component.
    pub value: Vec<T>,
    pub steps: Vec<T>,
    /// Unextrapolated value per step, `raw[i][component]`.
    pub raw: Vec<Vec<T>>,
    /// Largest spread (over components) of the last four entries of the final
    /// extrapolation column.
    pub oscillation: T,
}

impl<T: Real> LimitEstimate<T> {
    /// `false` when the oscillation exceeds ten times `tol`.
    pub fn is_convergent(&self, tol: T) -> bool {
        self.oscillation <= T::lit(10.0) * tol
    }

    pub(crate) fn from_raw(steps: Vec<T>, raw: Vec<Vec<T>>, exponents: &[T]) -> Self {
        let dim = raw.first().map_or(0, Vec::len);
        let mut value = Vec::with_capacity(dim);
        let mut oscillation = T::zero();
        for c in 0..dim {
            let column: Vec<T> = raw.iter().map(|r| r[c]).collect();
            let (v, osc) = extrapolate(&steps, &column, exponents);
            value.push(v);
            oscillation = oscillation.max(osc);
        }
        Self { value, steps, raw, oscillation }
    }
}

/// Richardson extrapolation eliminating error terms `h^p` for each `p` in
/// `exponents`, in order.
///
/// At most `len - 4` terms are eliminated so that four entries remain for the
/// oscillation indicator. Exact for geometric step sequences. Returns the
/// last entry of the final column and the spread of its last four entries.
pub fn extrapolate<T: Real>(steps: &[T], values: &[T], exponents: &[T]) -> (T, T) {
    assert_eq!(steps.len(), values.len(), "one value per step");
    if values.is_empty() {
        return (T::nan(), T::nan());
    }
    let mut col = values.to_vec();
    let eliminations = exponents.len().min(values.len().saturating_sub(4));
    for &p in exponents.iter().take(eliminations) {
        col = (0..col.len() - 1)
            .map(|k| {
                let factor = (steps[k] / steps[k + 1]).powf(p);
                (factor * col[k + 1] - col[k]) / (factor - T::one())
            })
            .collect();
    }
    let tail = &col[col.len().saturating_sub(4)..];
    let hi = tail.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = tail.iter().copied().fold(T::infinity(), T::min);
    (col[col.len() - 1], hi - lo)
}

/// Grünwald–Letnikov sum `(1/h^q) Σ_{r=0}^{⌊(t-t0)/h⌋} w_r (m(t - r h) - m(t0))`.
pub fn gl_difference<T: Real>(m: &dyn Fn(T) -> Vec<T>, base: &[T], weights: &GlWeights<T>, t: T, h: T, n: usize) -> Vec<T> {
    let mut acc = vec![CompensatedSum::new(); base.len()];
    for (r, &w) in weights.as_slice().iter().take(n + 1).enumerate() {
        let v = m(t - T::from_count(r) * h);
        for ((a, &x), &b) in acc.iter_mut().zip(&v).zip(base) {
            a.add(w * (x - b));
        }
    }
    let scale = h.powf(-weights.q());
    acc.iter().map(|a| a.value() * scale).collect()
}

/// Number of whole steps of size `h` in `span`, robust to rounding when
/// `span / h` is an integer.
pub(crate) fn step_count<T: Real>(span: T, h: T) -> usize {
    let ratio = span / h;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= T::lit(1e-9) * nearest.max(T::one()) { nearest } else { ratio.floor() };
    n.to_usize().unwrap_or(0)
}

pub(crate) fn check_steps<T: Real>(steps: &[T], span: T) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::Parameter("empty step sequence".into()));
    }
    if let Some(&h) = steps.iter().find(|&&h| !(h > T::zero() && h <= span)) {
        return Err(Error::Domain(format!("step h = {h} must lie in (0, {span}]")));
    }
    if steps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Parameter("step sequence must be strictly decreasing".into()));
    }
    Ok(())
}

/// Caputo fractional Dini derivative of `m` at `t`, estimated by applying the
/// Grünwald–Letnikov sum to `m - m(t0)` for each step and extrapolating
/// `h → 0` with [`default_dini_exponents`].
///
/// A step equal to `t - t0` is accepted since the sum then still reaches
/// `t0`; steps beyond it are rejected.
pub fn caputo_dini_estimate<T: Real>(m: impl Fn(T) -> Vec<T>, t0: T, t: T, q: T, steps: &[T]) -> Result<LimitEstimate<T>> {
    caputo_dini_estimate_with(m, t0, t, q, steps, &default_dini_exponents(q))
}

/// [`caputo_dini_estimate`] with explicit extrapolation exponents.
pub fn caputo_dini_estimate_with<T: Real>(
    m: impl Fn(T) -> Vec<T>,
    t0: T,
    t: T,
    q: T,
    steps: &[T],
    exponents: &[T],
) -> Result<LimitEstimate<T>> {
    check_order(q)?;
    check_interval(t0, t)?;
    check_steps(steps, t - t0)?;
    let n_max = step_count(t - t0, steps[steps.len() - 1]);
    let weights = GlWeights::new(q, n_max.max(1))?;
    let base = m(t0);
    let raw = steps
        .iter()
        .map(|&h| gl_difference(&m, &base, &weights, t, h, step_count(t - t0, h)))
        .collect();
    Ok(LimitEstimate::from_raw(steps.to_vec(), raw, exponents))
}
