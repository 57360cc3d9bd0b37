//! Checks of the comparison results and stability notions along computed
//! trajectories. Everything here works on finite samples: a "holds" verdict
//! means the sampled data are consistent with the statement, never a proof.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fractional_calculus::check_order;
use crate::frde_solver::{integral_residual, FlowProblem, FlowSolution};
use crate::lyapunov::{caputo_fractional_dini, DiniEvalContext, LyapunovSpec};
use crate::nifrde_core::{solve_nifrde, ImpulseSchedule, NifrdeProblem, SegmentKind, Trajectory};
use crate::quadrature::weakly_singular;
use crate::scalar::{dot, euclid_norm, Real};
use crate::special_functions::gamma;

/// Margin tolerance used when callers have no better estimate.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// A comparison function: continuous, zero at zero, strictly increasing.
#[derive(Clone)]
pub struct ClassKFunction<T> {
    pub name: String,
    a: Arc<dyn Fn(T) -> T + Send + Sync>,
    inverse: Option<Arc<dyn Fn(T) -> T + Send + Sync>>,
}

impl<T> fmt::Debug for ClassKFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassKFunction").field("name", &self.name).finish_non_exhaustive()
    }
}

impl<T: Real> ClassKFunction<T> {
    pub fn new(name: impl Into<String>, a: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self { name: name.into(), a: Arc::new(a), inverse: None }
    }

    pub fn with_inverse(mut self, inv: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }

    /// `u ↦ c u^p` with its inverse.
    pub fn power(c: T, p: T) -> Self {
        Self::new(format!("{c}*u^{p}"), move |u: T| c * u.powf(p)).with_inverse(move |v: T| (v / c).powf(p.recip()))
    }

    pub fn identity() -> Self {
        Self::power(T::one(), T::one())
    }

    /// `c ≡ 0`. Not in the class; accepted where the degenerate case is
    /// meaningful.
    pub fn zero() -> Self {
        Self::new("0", |_| T::zero())
    }

    pub fn eval(&self, u: T) -> T {
        (self.a)(u)
    }

    pub fn inverse(&self, v: T) -> Option<T> {
        self.inverse.as_ref().map(|inv| inv(v))
    }

    /// Checks `a(0) = 0` and strict increase on the sorted `grid`.
    pub fn validate(&self, grid: &[T]) -> Result<()> {
        if self.eval(T::zero()) != T::zero() {
            return Err(Error::Parameter(format!("{}: value at 0 is not 0", self.name)));
        }
        let mut pts: Vec<T> = grid.iter().copied().filter(|&u| u >= T::zero()).collect();
        pts.push(T::zero());
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        pts.dedup();
        for w in pts.windows(2) {
            if !(self.eval(w[1]) > self.eval(w[0])) {
                return Err(Error::Parameter(format!("{}: not strictly increasing near {}", self.name, w[1])));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness<T> {
    pub t: T,
    pub state: Vec<T>,
    /// Quantity compared at the witness, e.g. `V(t, x(t))`.
    pub value: T,
}

/// Outcome of one check. `verdict` is `Violated` exactly when
/// `worst_margin < -tolerance`; `Inconclusive` when nothing finite was
/// sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub name: String,
    pub verdict: Verdict,
    pub worst_margin: T,
    pub witness: Option<Witness<T>>,
    pub tolerance: T,
    pub parameters: Vec<(String, String)>,
}

impl<T: Real> StabilityReport<T> {
    /// Folds `(t, x, value, margin)` samples into a report; the worst sample
    /// becomes the witness.
    pub fn from_samples(name: impl Into<String>, tolerance: T, samples: impl IntoIterator<Item = (T, Vec<T>, T, T)>) -> Self {
        let mut worst: Option<(T, Witness<T>)> = None;
        let mut saw_nan = false;
        for (t, state, value, margin) in samples {
            if margin.is_nan() {
                saw_nan = true;
                continue;
            }
            if worst.as_ref().map_or(true, |(m, _)| margin < *m) {
                worst = Some((margin, Witness { t, state, value }));
            }
        }
        let (worst_margin, witness) = match worst {
            Some((m, w)) => (m, Some(w)),
            None => (T::nan(), None),
        };
        let verdict = if worst_margin < -tolerance {
            Verdict::Violated
        } else if witness.is_none() || saw_nan {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        };
        Self { name: name.into(), verdict, worst_margin, witness, tolerance, parameters: Vec::new() }
    }

    pub fn with_parameter(mut self, key: impl Into<String>, value: impl fmt::Display) -> Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub const CSV_HEADER: &'static str = "name,verdict,worst_margin,witness_t,witness_norm";

    /// `name,verdict,worst_margin,witness_t,witness_norm` with 12 significant
    /// digits; missing witness fields are left empty.
    pub fn csv_row(&self) -> String {
        self.fields().join(",")
    }

    /// The fields of [`Self::csv_row`].
    pub fn fields(&self) -> [String; 5] {
        let (t, norm) = match &self.witness {
            Some(w) => (format_sig(w.t), format_sig(euclid_norm(&w.state))),
            None => (String::new(), String::new()),
        };
        [self.name.clone(), self.verdict.to_string(), format_sig(self.worst_margin), t, norm]
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_sig<T: Real>(v: T) -> String {
    format!("{:.11e}", v.as_f64())
}

/// `V(t0, x0) - V(t, x(t))` at every stored sample.
pub fn verify_comparison<T: Real>(traj: &Trajectory<T>, v: &LyapunovSpec<T>, tol: T) -> StabilityReport<T> {
    let p = traj.problem();
    let v0 = v.value(p.t0, &p.x0);
    let samples = traj.points().map(|(_, _, t, x)| {
        let vt = v.value(t, x);
        (t, x.to_vec(), vt, v0 - vt)
    });
    StabilityReport::from_samples("comparison", tol, samples)
}

/// The piecewise bound with decay at every stored sample, in
/// [`Trajectory::points`] order:
/// `V(t0,x0) - (1/Γ(q)) [Σ_{completed flows i} ∫_{τ_i}^{t_{i+1}} (t_{i+1}-s)^{q-1} c(‖x(s)‖) ds
/// + ∫_{τ_k}^t (t-s)^{q-1} c(‖x(s)‖) ds]`, the last integral present only on flows.
pub fn decay_bound<T: Real>(traj: &Trajectory<T>, v: &LyapunovSpec<T>, c: &ClassKFunction<T>) -> Result<Vec<T>> {
    let p = traj.problem();
    let q = p.q;
    let inv_gamma = gamma(q)?.recip();
    let v0 = v.value(p.t0, &p.x0);
    let mut completed = T::zero();
    let mut out = Vec::new();
    for seg in traj.segments() {
        match seg.kind {
            SegmentKind::Impulse => out.extend(seg.grid.iter().map(|_| v0 - inv_gamma * completed)),
            SegmentKind::Flow => {
                let tau = seg.interval.0;
                let decay = |t: T| weakly_singular(|s: T| c.eval(euclid_norm(&seg.interpolate(s))), tau, t, q);
                let running: Vec<T> = seg
                    .grid
                    .par_iter()
                    .map(|&t| v0 - inv_gamma * (completed + if t > tau { decay(t) } else { T::zero() }))
                    .collect();
                out.extend(running);
                completed += decay(seg.interval.1);
            }
        }
    }
    Ok(out)
}

/// `decay_bound - V(t, x(t))` at every stored sample.
pub fn verify_comparison_decay<T: Real>(
    traj: &Trajectory<T>,
    v: &LyapunovSpec<T>,
    c: &ClassKFunction<T>,
    tol: T,
) -> Result<StabilityReport<T>> {
    let bound = decay_bound(traj, v, c)?;
    let samples = traj.points().zip(bound).map(|((_, _, t, x), b)| {
        let vt = v.value(t, x);
        (t, x.to_vec(), vt, b - vt)
    });
    Ok(StabilityReport::from_samples("comparison_decay", tol, samples).with_parameter("c", &c.name))
}

/// Per-condition margins of the quadratic comparison corollary.
#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport<T> {
    /// `-xᵀf(t, x)` on flow samples.
    pub flow_condition: StabilityReport<T>,
    /// `‖x(τ_k - 0)‖ - ‖x(t)‖` on impulse samples, `τ_k = max(t0, t_k)`.
    pub impulse_condition: StabilityReport<T>,
    /// `‖x0‖ - ‖x(t)‖` everywhere.
    pub conclusion: StabilityReport<T>,
}

impl<T: Real> CorollaryReport<T> {
    /// `Holds` when hypotheses and conclusion hold, `Violated` when the
    /// conclusion fails, `Inconclusive` when a hypothesis fails but the
    /// conclusion does not.
    pub fn verdict(&self) -> Verdict {
        if self.conclusion.verdict == Verdict::Violated {
            Verdict::Violated
        } else if [&self.flow_condition, &self.impulse_condition, &self.conclusion].iter().all(|r| r.holds()) {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn reports(&self) -> [&StabilityReport<T>; 3] {
        [&self.flow_condition, &self.impulse_condition, &self.conclusion]
    }
}

pub fn verify_quadratic_corollary<T: Real>(traj: &Trajectory<T>, tol: T) -> Result<CorollaryReport<T>> {
    let p = traj.problem();
    let mut flow = Vec::new();
    let mut impulse = Vec::new();
    for (kind, k, t, x) in traj.points() {
        match kind {
            SegmentKind::Flow => {
                let xf = dot(x, &(p.f)(t, x));
                flow.push((t, x.to_vec(), xf, -xf));
            }
            SegmentKind::Impulse => {
                let reference = euclid_norm(&traj.left_limit(k)?);
                let n = euclid_norm(x);
                impulse.push((t, x.to_vec(), n, reference - n));
            }
        }
    }
    let n0 = euclid_norm(&p.x0);
    let conclusion = traj.points().map(|(_, _, t, x)| {
        let n = euclid_norm(x);
        (t, x.to_vec(), n, n0 - n)
    });
    let mut impulse_condition = StabilityReport::from_samples("corollary_impulse", tol, impulse);
    if impulse_condition.witness.is_none() {
        // No impulse inside the horizon: the condition is vacuous.
        impulse_condition.verdict = Verdict::Holds;
        impulse_condition.worst_margin = T::zero();
    }
    Ok(CorollaryReport {
        flow_condition: StabilityReport::from_samples("corollary_flow", tol, flow),
        impulse_condition,
        conclusion: StabilityReport::from_samples("corollary_conclusion", tol, conclusion),
    })
}

/// `-(Caputo fractional Dini derivative)` of `v` at each `(t, x)` sample,
/// using the closed form when the candidate has one. A nonnegative margin
/// is the flow hypothesis of the comparison results.
pub fn verify_caputo_dini_sign<T: Real>(
    v: &LyapunovSpec<T>,
    p: &NifrdeProblem<T>,
    samples: &[(T, Vec<T>)],
    tol: T,
) -> Result<StabilityReport<T>> {
    let rows = samples
        .par_iter()
        .map(|(t, x)| {
            let ctx = DiniEvalContext::new(p, *t, x.clone())?;
            let d = match v.caputo_closed_form(&ctx) {
                Some(r) => r?,
                None => caputo_fractional_dini(v, &ctx, None)?.value,
            };
            Ok((*t, x.clone(), d, -d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport::from_samples("caputo_dini_sign", tol, rows))
}

/// The impulse hypothesis as a report; see
/// [`crate::lyapunov::check_impulse_decrease`].
pub fn verify_impulse_decrease<T: Real>(
    v: &LyapunovSpec<T>,
    p: &NifrdeProblem<T>,
    sample_x: &[Vec<T>],
    times_per_interval: usize,
    tol: T,
) -> Result<StabilityReport<T>> {
    let mut rows = Vec::new();
    for k in 1..=p.schedule.impulse_count() {
        let (a, b) = p.schedule.impulse_interval(k)?;
        let n = times_per_interval.max(1);
        let times: Vec<T> = (1..=n).map(|i| a + (b - a) * T::from_count(i) / T::from_count(n)).collect();
        let m = crate::lyapunov::check_impulse_decrease(v, p, k, sample_x, &times)?;
        let value = v.value(m.witness_t, &m.witness_x);
        rows.push((m.witness_t, m.witness_x, value, m.margin));
    }
    let mut report = StabilityReport::from_samples("impulse_decrease", tol, rows);
    if p.schedule.impulse_count() == 0 {
        report.verdict = Verdict::Holds;
        report.worst_margin = T::zero();
    }
    Ok(report)
}

/// `base + L · r`: `r` is the largest integral-equation residual of the flow
/// segments at a few interior times and `L` the Lipschitz hint of `v` (or a
/// finite-difference estimate of `|∇V|₁` over the trajectory).
pub fn solver_tolerance<T: Real>(traj: &Trajectory<T>, v: &LyapunovSpec<T>, base: T) -> Result<T> {
    let p = traj.problem();
    let mut residual = T::zero();
    for seg in traj.segments().iter().filter(|s| s.kind == SegmentKind::Flow) {
        let (tau, end) = seg.interval;
        let flow = FlowProblem::new(p.q, tau, end, seg.values[0].clone(), p.f.clone())?;
        let sol = FlowSolution::from_values(flow, seg.values.clone())?;
        let times: Vec<T> = (1..=4).map(|i| tau + (end - tau) * T::from_count(i) / T::lit(4.0)).collect();
        residual = residual.max(integral_residual(&sol, &times)?);
    }
    let lipschitz = match v.lipschitz_hint {
        Some(l) => l,
        None => traj.points().fold(T::zero(), |acc, (_, _, t, x)| {
            let h = T::lit(1e-6) * (T::one() + euclid_norm(x));
            let grad: T = (0..x.len())
                .map(|i| {
                    let mut up = x.to_vec();
                    let mut down = x.to_vec();
                    up[i] += h;
                    down[i] -= h;
                    ((v.value(t, &up) - v.value(t, &down)) / (h + h)).abs()
                })
                .sum();
            acc.max(grad)
        }),
    };
    Ok(base + lipschitz * residual)
}

/// Sampling plan for [`probe_uniform_stability`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig<T> {
    pub epsilon: T,
    /// Initial times; each must lie in a flow interval.
    pub t0_samples: Vec<T>,
    /// Candidate δ values, tried from largest to smallest.
    pub delta_grid: Vec<T>,
    /// Initial states are taken on `‖x0‖ = δ · r` for each `r` here.
    pub radius_fractions: Vec<T>,
    /// Directions per radius when the dimension exceeds 1.
    pub directions: usize,
    pub steps_per_unit: usize,
}

impl<T: Real> ProbeConfig<T> {
    /// δ grid `ε · {1, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01}`, radii
    /// `{0.5, 0.9, 0.99}`, 8 directions, 200 steps per unit time.
    pub fn new(epsilon: T, t0_samples: Vec<T>) -> Self {
        let lit = |v: f64| T::lit(v);
        Self {
            epsilon,
            t0_samples,
            delta_grid: [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01].iter().map(|&f| epsilon * lit(f)).collect(),
            radius_fractions: vec![lit(0.5), lit(0.9), lit(0.99)],
            directions: 8,
            steps_per_unit: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome<T> {
    /// Largest grid δ for which every sample stayed inside the ε-ball.
    pub delta: Option<T>,
    /// Margin `ε - sup ‖x(t)‖` at the found δ, or at the smallest δ tried.
    pub report: StabilityReport<T>,
    /// `(δ, largest sup ‖x(t)‖ over the samples)` for every δ tried.
    pub sweep: Vec<(T, T)>,
}

/// Unit directions: `±e_i` first, then a Kronecker sequence mapped to the
/// sphere. Deterministic.
pub fn sphere_directions<T: Real>(dim: usize, count: usize) -> Vec<Vec<T>> {
    if dim == 1 {
        return vec![vec![T::one()], vec![-T::one()]];
    }
    let mut out: Vec<Vec<T>> = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut e = vec![T::zero(); dim];
            e[i] = T::lit(sign);
            out.push(e);
        }
    }
    // Generalized golden ratio: root of x^{d+1} = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|j| phi.powi(-(j as i32))).collect();
    let mut n = 1usize;
    while out.len() < count.max(2 * dim) {
        let raw: Vec<f64> = alpha.iter().map(|a| 2.0 * ((0.5 + a * n as f64) % 1.0) - 1.0).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.1 {
            out.push(raw.iter().map(|v| T::lit(v / norm)).collect());
        }
        n += 1;
    }
    out.truncate(count.max(2 * dim));
    out
}

/// Largest δ in the grid such that every sampled `(t0, x0)` with
/// `‖x0‖ < δ` keeps `‖x(t; t0, x0)‖ < ε` up to the problem's horizon.
///
/// Statements are about the horizon only. A solve that fails counts as
/// leaving the ball. Samples run in parallel.
pub fn probe_uniform_stability<T: Real>(p: &NifrdeProblem<T>, cfg: &ProbeConfig<T>) -> Result<ProbeOutcome<T>> {
    if !(cfg.epsilon > T::zero()) {
        return Err(Error::Parameter("epsilon must be positive".into()));
    }
    let mut grid = cfg.delta_grid.clone();
    if grid.iter().any(|d| !(*d > T::zero())) || cfg.t0_samples.is_empty() {
        return Err(Error::Parameter("delta grid must be positive and t0 samples nonempty".into()));
    }
    grid.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    grid.dedup();
    for &t0 in &cfg.t0_samples {
        p.schedule.start_flow(t0)?;
    }
    let dirs = sphere_directions::<T>(p.dim(), cfg.directions);
    let mut sweep = Vec::new();
    let mut last_rows = Vec::new();
    for &delta in &grid {
        let mut jobs: Vec<(T, Vec<T>)> = Vec::new();
        for &t0 in &cfg.t0_samples {
            for &r in &cfg.radius_fractions {
                jobs.extend(dirs.iter().map(|d| (t0, d.iter().map(|&c| c * delta * r).collect())));
            }
        }
        let rows: Vec<(T, Vec<T>, T, T)> = jobs
            .into_par_iter()
            .map(|(t0, x0)| {
                let sup = p
                    .with_initial(t0, x0.clone())
                    .and_then(|prob| solve_nifrde(&prob, cfg.steps_per_unit))
                    .map(|traj| traj.points().map(|(_, _, _, x)| euclid_norm(x)).fold(T::zero(), T::max))
                    .unwrap_or(T::infinity());
                (t0, x0, sup, cfg.epsilon - sup)
            })
            .collect();
        let worst = rows.iter().map(|r| r.2).fold(T::zero(), T::max);
        sweep.push((delta, worst));
        let ok = worst < cfg.epsilon;
        last_rows = rows;
        if ok {
            let report = StabilityReport::from_samples("probe", T::zero(), last_rows)
                .with_parameter("epsilon", cfg.epsilon)
                .with_parameter("delta", delta)
                .with_parameter("horizon", p.schedule.horizon);
            return Ok(ProbeOutcome { delta: Some(delta), report, sweep });
        }
    }
    let mut report = StabilityReport::from_samples("probe", T::zero(), last_rows)
        .with_parameter("epsilon", cfg.epsilon)
        .with_parameter("horizon", p.schedule.horizon);
    report.verdict = Verdict::Violated;
    Ok(ProbeOutcome { delta: None, report, sweep })
}

/// `(a(α) q Γ(q) / c(γ))^{1/q} + M`, a time after which trajectories
/// starting in the α-ball have entered the γ-ball.
pub fn attraction_time_bound<T: Real>(
    a: &ClassKFunction<T>,
    c: &ClassKFunction<T>,
    alpha: T,
    gamma_radius: T,
    q: T,
    m: T,
) -> Result<T> {
    check_order(q)?;
    if !(alpha > T::zero() && gamma_radius > T::zero() && m >= T::zero()) {
        return Err(Error::Parameter("need alpha > 0, gamma > 0 and M >= 0".into()));
    }
    let cg = c.eval(gamma_radius);
    if cg == T::zero() {
        return Err(Error::Domain(format!("{}({gamma_radius}) = 0", c.name)));
    }
    Ok((a.eval(alpha) * q * gamma(q)? / cg).powf(q.recip()) + m)
}

/// `Σ (s_k - t_k)`, the total time spent in impulse intervals.
pub fn schedule_impulse_mass<T: Real>(s: &ImpulseSchedule<T>) -> T {
    s.t.iter().zip(&s.s[1..]).map(|(&t, &s)| s - t).fold(T::zero(), |a, b| a + b)
}
