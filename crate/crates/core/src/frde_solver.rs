//! Caputo initial value problems on a single interval, solved through the
//! equivalent Volterra integral equation
//! `x(t) = x0 + (1/Γ(q)) ∫_τ^t (t - s)^{q-1} f(s, x(s)) ds`
//! with the fractional Adams–Bashforth–Moulton predictor–corrector.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractional_calculus::check_order;
use crate::quadrature::legendre_rule;
use crate::scalar::{max_norm, CompensatedSum, Real};
use crate::special_functions::gamma;

/// Right-hand side `f(t, x)`.
pub type VectorField<T> = Arc<dyn Fn(T, &[T]) -> Vec<T> + Send + Sync>;

/// Smallest number of steps [`solve_frde`] accepts.
pub const MIN_STEPS: usize = 8;

#[derive(Clone)]
pub struct FlowProblem<T> {
    pub q: T,
    pub tau: T,
    pub t_end: T,
    pub x0: Vec<T>,
    pub f: VectorField<T>,
}

impl<T: Real> FlowProblem<T> {
    pub fn new(q: T, tau: T, t_end: T, x0: Vec<T>, f: VectorField<T>) -> Result<Self> {
        check_order(q)?;
        if !(t_end > tau) {
            return Err(Error::Domain(format!("flow interval [{tau}, {t_end}] is empty")));
        }
        if x0.is_empty() {
            return Err(Error::Parameter("state dimension must be at least 1".into()));
        }
        Ok(Self { q, tau, t_end, x0, f })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }
}

impl<T: fmt::Debug> fmt::Debug for FlowProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowProblem")
            .field("q", &self.q)
            .field("tau", &self.tau)
            .field("t_end", &self.t_end)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

/// Values on the uniform grid `tau + i (t_end - tau)/N`, `i = 0..=N`.
#[derive(Clone, Debug)]
pub struct FlowSolution<T> {
    problem: FlowProblem<T>,
    grid: Vec<T>,
    values: Vec<Vec<T>>,
}

impl<T: Real> FlowSolution<T> {
    /// Wraps externally produced node values (one per grid point, first equal
    /// to `x0`) so they can be checked with [`integral_residual`].
    pub fn from_values(problem: FlowProblem<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| v.len() != problem.dim()) {
            return Err(Error::Parameter("node values do not match the problem dimension".into()));
        }
        if values[0] != problem.x0 {
            return Err(Error::Parameter("first node value must equal x0".into()));
        }
        let grid = uniform_grid(problem.tau, problem.t_end, values.len() - 1);
        Ok(Self { problem, grid, values })
    }

    pub fn problem(&self) -> &FlowProblem<T> {
        &self.problem
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn step_size(&self) -> T {
        (self.problem.t_end - self.problem.tau) / T::from_count(self.steps())
    }

    pub fn last(&self) -> &[T] {
        &self.values[self.values.len() - 1]
    }

    /// Piecewise-linear interpolation; `t` is clamped to the interval.
    pub fn value_at(&self, t: T) -> Vec<T> {
        let h = self.step_size();
        let pos = ((t - self.problem.tau) / h).max(T::zero());
        let n = self.steps();
        let i = pos.floor().to_usize().unwrap_or(n).min(n - 1);
        let w = (pos - T::from_count(i)).min(T::one());
        self.values[i].iter().zip(&self.values[i + 1]).map(|(&a, &b)| a + w * (b - a)).collect()
    }
}

fn uniform_grid<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let h = (b - a) / T::from_count(n);
    (0..=n).map(|i| if i == n { b } else { a + h * T::from_count(i) }).collect()
}

/// Fractional Adams–Bashforth–Moulton with `n` uniform steps.
///
/// The predictor is the product rectangle rule and the corrector the product
/// trapezoidal rule, applied once per step. Cost is `O(n²)` field
/// combinations since the full history enters every step.
pub fn solve_frde<T: Real>(p: &FlowProblem<T>, n: usize) -> Result<FlowSolution<T>> {
    if n < MIN_STEPS {
        return Err(Error::Parameter(format!("need at least {MIN_STEPS} steps, got {n}")));
    }
    let q = p.q;
    let dim = p.dim();
    let grid = uniform_grid(p.tau, p.t_end, n);
    let h = (p.t_end - p.tau) / T::from_count(n);
    let hq = h.powf(q);
    let pred_scale = hq / gamma(q + T::one())?;
    let corr_scale = hq / gamma(q + T::lit(2.0))?;

    let q1 = q + T::one();
    let pw = |k: usize, e: T| T::from_count(k).powf(e);
    // b_k = (k+1)^q - k^q ; c_k = (k+2)^{q+1} - 2(k+1)^{q+1} + k^{q+1}
    let b: Vec<T> = (0..n).map(|k| pw(k + 1, q) - pw(k, q)).collect();
    let c: Vec<T> = (0..n).map(|k| pw(k + 2, q1) - T::lit(2.0) * pw(k + 1, q1) + pw(k, q1)).collect();

    let mut values = Vec::with_capacity(n + 1);
    let mut fs: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    values.push(p.x0.clone());
    fs.push(evaluate(p, grid[0], &p.x0, 0)?);

    for step in 0..n {
        let m = step + 1;
        let mut pred = vec![CompensatedSum::new(); dim];
        let mut corr = vec![CompensatedSum::new(); dim];
        let mf = T::from_count(step);
        // a_{0,m} = (m-1)^{q+1} - (m-1-q) m^q
        let a0 = mf.powf(q1) - (mf - q) * T::from_count(m).powf(q);
        for (j, fj) in fs.iter().enumerate() {
            let bw = b[step - j];
            let cw = if j == 0 { a0 } else { c[step - j] };
            for d in 0..dim {
                pred[d].add(bw * fj[d]);
                corr[d].add(cw * fj[d]);
            }
        }
        let predicted: Vec<T> = (0..dim).map(|d| p.x0[d] + pred_scale * pred[d].value()).collect();
        check_finite(&predicted, m)?;
        let fp = evaluate(p, grid[m], &predicted, m)?;
        let next: Vec<T> = (0..dim).map(|d| p.x0[d] + corr_scale * (corr[d].value() + fp[d])).collect();
        check_finite(&next, m)?;
        fs.push(evaluate(p, grid[m], &next, m)?);
        values.push(next);
    }
    Ok(FlowSolution { problem: p.clone(), grid, values })
}

fn evaluate<T: Real>(p: &FlowProblem<T>, t: T, x: &[T], index: usize) -> Result<Vec<T>> {
    let v = (p.f)(t, x);
    if v.len() != x.len() {
        return Err(Error::Parameter(format!("vector field returned {} components, expected {}", v.len(), x.len())));
    }
    check_finite(&v, index)?;
    Ok(v)
}

fn check_finite<T: Real>(v: &[T], index: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { segment: None, index })
    }
}

const RESIDUAL_NODES: usize = 8;

/// Largest `‖x(t) - x0 - (1/Γ(q)) ∫_τ^t (t-s)^{q-1} f(s, x(s)) ds‖∞` over
/// `sample_times`, with `x` the piecewise-linear interpolant of the nodes.
///
/// Each grid cell is integrated separately after the substitution
/// `u = (t - s)^q`, which makes the kernel constant and keeps the kinks of
/// the interpolant at cell boundaries.
pub fn integral_residual<T: Real>(sol: &FlowSolution<T>, sample_times: &[T]) -> Result<T> {
    let p = &sol.problem;
    let q = p.q;
    let inv_q = q.recip();
    let scale = (q * gamma(q)?).recip();
    let rule = legendre_rule(RESIDUAL_NODES);
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for &t in sample_times {
        if !(t > p.tau && t <= p.t_end) {
            return Err(Error::Domain(format!("sample time {t} outside ({}, {}]", p.tau, p.t_end)));
        }
        let mut acc = vec![CompensatedSum::new(); p.dim()];
        for w in sol.grid.windows(2) {
            let (a, b) = (w[0], w[1].min(t));
            if a >= t {
                break;
            }
            let (ulo, uhi) = ((t - b).powf(q), (t - a).powf(q));
            let (mid, half) = ((uhi + ulo) / two, (uhi - ulo) / two);
            for &(x, wt) in rule.iter() {
                let s = t - (mid + half * T::lit(x)).powf(inv_q);
                let fx = (p.f)(s, &sol.value_at(s));
                for (slot, v) in acc.iter_mut().zip(fx) {
                    slot.add(T::lit(wt) * half * v);
                }
            }
        }
        let xt = sol.value_at(t);
        let residual: Vec<T> = (0..p.dim()).map(|d| xt[d] - p.x0[d] - scale * acc[d].value()).collect();
        worst = worst.max(max_norm(&residual));
    }
    Ok(worst)
}
