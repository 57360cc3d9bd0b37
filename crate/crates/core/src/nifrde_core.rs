//! Caputo fractional equations with non-instantaneous impulses.
//!
//! The state follows the fractional flow on `(s_k, t_{k+1}]`, is given
//! explicitly by `φ_k(t, x(t_k - 0))` on `(t_k, s_k]`, and the flow restarts
//! at `s_k` with a fresh Caputo base point.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fractional_calculus::check_order;
use crate::frde_solver::{solve_frde, FlowProblem, FlowSolution, VectorField, MIN_STEPS};
use crate::scalar::{max_norm, Real};

/// Impulse map `φ_k(t, x)`.
pub type ImpulseMap<T> = Arc<dyn Fn(T, &[T]) -> Vec<T> + Send + Sync>;

/// First broken condition of an impulse schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleViolation {
    /// `s` must hold `p + 1` points when `t` holds `p`.
    Lengths { s: usize, t: usize },
    NonFinite,
    FirstPointNotZero { s0: f64 },
    /// `s_{k-1} < t_k` fails.
    EmptyFlow { k: usize, s_prev: f64, t_k: f64 },
    /// `t_k ≤ s_k` fails.
    ReversedImpulse { k: usize, t_k: f64, s_k: f64 },
    /// `horizon > s_p` fails.
    Horizon { horizon: f64, s_p: f64 },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lengths { s, t } => write!(f, "expected {} s-points for {t} t-points, got {s}", t + 1),
            Self::NonFinite => write!(f, "schedule contains a non-finite point"),
            Self::FirstPointNotZero { s0 } => write!(f, "s_0 = {s0}, expected 0"),
            Self::EmptyFlow { k, s_prev, t_k } => {
                write!(f, "s_{} < t_{k} fails: s_{} = {s_prev}, t_{k} = {t_k}", k - 1, k - 1)
            }
            Self::ReversedImpulse { k, t_k, s_k } => write!(f, "t_{k} <= s_{k} fails: t_{k} = {t_k}, s_{k} = {s_k}"),
            Self::Horizon { horizon, s_p } => write!(f, "horizon {horizon} must exceed the last point s_p = {s_p}"),
        }
    }
}

/// Points `0 = s_0 < t_1 ≤ s_1 < t_2 ≤ ... ≤ s_p < horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSchedule<T> {
    /// `s_0, ..., s_p`.
    pub s: Vec<T>,
    /// `t_1, ..., t_p`.
    pub t: Vec<T>,
    pub horizon: T,
}

/// Where a time falls relative to the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// `(s_k, t_{k+1}]`, or `[s_0, t_1]` for `k = 0`.
    Flow(usize),
    /// `(t_k, s_k]`.
    Impulse(usize),
}

impl<T: Real> ImpulseSchedule<T> {
    pub fn new(s: Vec<T>, t: Vec<T>, horizon: T) -> Result<Self> {
        let schedule = Self { s, t, horizon };
        validate_schedule(&schedule).map_err(Error::Schedule)?;
        Ok(schedule)
    }

    /// A schedule without impulses on `[0, horizon]`.
    pub fn no_impulses(horizon: T) -> Result<Self> {
        Self::new(vec![T::zero()], Vec::new(), horizon)
    }

    /// Number of impulse intervals `p`.
    pub fn impulse_count(&self) -> usize {
        self.t.len()
    }

    /// Right end of flow interval `k`: `t_{k+1}`, or the horizon for `k = p`.
    pub fn flow_end(&self, k: usize) -> T {
        self.t.get(k).copied().unwrap_or(self.horizon)
    }

    /// Left end of flow interval `k`: `s_k`.
    pub fn flow_start(&self, k: usize) -> T {
        self.s[k]
    }

    /// Impulse interval `(t_k, s_k]` for `k = 1..=p`.
    pub fn impulse_interval(&self, k: usize) -> Result<(T, T)> {
        if k == 0 || k > self.impulse_count() {
            return Err(Error::Index { k, p: self.impulse_count() });
        }
        Ok((self.t[k - 1], self.s[k]))
    }

    /// Classifies `t ∈ [0, horizon]`. A point `t_k` belongs to the flow that
    /// ends there (so `t_k = s_k` is a flow point), `s_k` to the impulse.
    pub fn locate(&self, time: T) -> Result<Location> {
        if !(time >= T::zero() && time <= self.horizon) {
            return Err(Error::Domain(format!("t = {time} outside [0, {}]", self.horizon)));
        }
        for k in 0..=self.impulse_count() {
            if time <= self.flow_end(k) {
                return Ok(Location::Flow(k));
            }
            if k < self.impulse_count() && time <= self.s[k + 1] {
                return Ok(Location::Impulse(k + 1));
            }
        }
        Ok(Location::Flow(self.impulse_count()))
    }

    /// Index `k` with `t0 ∈ [s_k, t_{k+1})`; the last flow also accepts its
    /// right end only if it is not the horizon.
    pub fn start_flow(&self, t0: T) -> Result<usize> {
        for k in 0..=self.impulse_count() {
            if t0 >= self.s[k] && t0 < self.flow_end(k) {
                return Ok(k);
            }
        }
        Err(Error::Domain(format!(
            "initial time {t0} is not in any flow interval [s_k, t_(k+1))"
        )))
    }
}

/// Checks `s_0 = 0` and the interleaving chain, reporting the first failure.
pub fn validate_schedule<T: Real>(schedule: &ImpulseSchedule<T>) -> std::result::Result<(), ScheduleViolation> {
    let ImpulseSchedule { s, t, horizon } = schedule;
    if s.len() != t.len() + 1 {
        return Err(ScheduleViolation::Lengths { s: s.len(), t: t.len() });
    }
    if s.iter().chain(t).chain(std::iter::once(horizon)).any(|v| !v.is_finite()) {
        return Err(ScheduleViolation::NonFinite);
    }
    if s[0] != T::zero() {
        return Err(ScheduleViolation::FirstPointNotZero { s0: s[0].as_f64() });
    }
    for k in 1..s.len() {
        let (s_prev, t_k, s_k) = (s[k - 1], t[k - 1], s[k]);
        if !(s_prev < t_k) {
            return Err(ScheduleViolation::EmptyFlow { k, s_prev: s_prev.as_f64(), t_k: t_k.as_f64() });
        }
        if !(t_k <= s_k) {
            return Err(ScheduleViolation::ReversedImpulse { k, t_k: t_k.as_f64(), s_k: s_k.as_f64() });
        }
    }
    let s_p = s[s.len() - 1];
    if !(*horizon > s_p) {
        return Err(ScheduleViolation::Horizon { horizon: horizon.as_f64(), s_p: s_p.as_f64() });
    }
    Ok(())
}

#[derive(Clone)]
pub struct NifrdeProblem<T> {
    pub q: T,
    pub schedule: ImpulseSchedule<T>,
    pub f: VectorField<T>,
    /// `phi[k - 1]` is `φ_k`.
    pub phi: Vec<ImpulseMap<T>>,
    pub t0: T,
    pub x0: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for NifrdeProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NifrdeProblem")
            .field("q", &self.q)
            .field("schedule", &self.schedule)
            .field("t0", &self.t0)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

impl<T: Real> NifrdeProblem<T> {
    pub fn new(
        q: T,
        schedule: ImpulseSchedule<T>,
        f: VectorField<T>,
        phi: Vec<ImpulseMap<T>>,
        t0: T,
        x0: Vec<T>,
    ) -> Result<Self> {
        check_order(q)?;
        validate_schedule(&schedule).map_err(Error::Schedule)?;
        if phi.len() != schedule.impulse_count() {
            return Err(Error::Parameter(format!(
                "{} impulse maps given for {} impulse intervals",
                phi.len(),
                schedule.impulse_count()
            )));
        }
        if x0.is_empty() {
            return Err(Error::Parameter("state dimension must be at least 1".into()));
        }
        schedule.start_flow(t0)?;
        Ok(Self { q, schedule, f, phi, t0, x0 })
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Same equation with other initial data.
    pub fn with_initial(&self, t0: T, x0: Vec<T>) -> Result<Self> {
        if x0.len() != self.dim() {
            return Err(Error::Parameter("initial state has the wrong dimension".into()));
        }
        self.schedule.start_flow(t0)?;
        Ok(Self { t0, x0, ..self.clone() })
    }

    /// Flow index containing `t0`.
    pub fn start_flow(&self) -> usize {
        self.schedule.start_flow(self.t0).expect("validated at construction")
    }

    /// Like [`ImpulseSchedule::locate`] but restricted to `[t0, horizon]`.
    pub fn locate(&self, time: T) -> Result<Location> {
        if time < self.t0 {
            return Err(Error::Domain(format!("t = {time} precedes t0 = {}", self.t0)));
        }
        self.schedule.locate(time)
    }

    /// Samples `f(t, 0)` on every flow interval and `φ_k(t, 0)` on every
    /// impulse interval; `true` when all vanish.
    pub fn zero_is_equilibrium(&self, samples: usize) -> bool {
        let zero = vec![T::zero(); self.dim()];
        let n = samples.max(2);
        let points = |a: T, b: T| (0..n).map(move |i| a + (b - a) * T::from_count(i) / T::from_count(n - 1));
        let flows_ok = (0..=self.schedule.impulse_count()).all(|k| {
            points(self.schedule.flow_start(k), self.schedule.flow_end(k)).all(|t| (self.f)(t, &zero).iter().all(|v| *v == T::zero()))
        });
        let impulses_ok = (1..=self.schedule.impulse_count()).all(|k| {
            let (a, b) = self.schedule.impulse_interval(k).expect("k in range");
            points(a, b).all(|t| (self.phi[k - 1])(t, &zero).iter().all(|v| *v == T::zero()))
        });
        flows_ok && impulses_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Flow,
    Impulse,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Flow => "flow",
            Self::Impulse => "impulse",
        })
    }
}

/// One piece of a trajectory.
#[derive(Debug, Clone)]
pub struct Segment<T> {
    pub kind: SegmentKind,
    pub index: usize,
    pub interval: (T, T),
    pub grid: Vec<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Real> Segment<T> {
    /// Linear interpolation on the segment grid, clamped at both ends.
    pub fn interpolate(&self, time: T) -> Vec<T> {
        let i = self.grid.partition_point(|&g| g <= time);
        if i == 0 {
            return self.values[0].clone();
        }
        if i == self.grid.len() {
            return self.values[i - 1].clone();
        }
        let (a, b) = (self.grid[i - 1], self.grid[i]);
        let w = (time - a) / (b - a);
        self.values[i - 1].iter().zip(&self.values[i]).map(|(&u, &v)| u + w * (v - u)).collect()
    }
}

/// Piecewise solution, segments ordered in time.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    problem: NifrdeProblem<T>,
    segments: Vec<Segment<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn problem(&self) -> &NifrdeProblem<T> {
        &self.problem
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    /// Replaces the stored values, keeping grids and segment layout. Used to
    /// feed externally modified trajectories to the verification routines.
    pub fn map_values(&self, mut g: impl FnMut(SegmentKind, usize, T, &[T]) -> Vec<T>) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|seg| Segment {
                values: seg.grid.iter().zip(&seg.values).map(|(&t, v)| g(seg.kind, seg.index, t, v)).collect(),
                ..seg.clone()
            })
            .collect();
        Self { problem: self.problem.clone(), segments }
    }

    /// Every stored sample as `(kind, k, t, x)` in time order.
    pub fn points(&self) -> impl Iterator<Item = (SegmentKind, usize, T, &[T])> {
        self.segments
            .iter()
            .flat_map(|s| s.grid.iter().zip(&s.values).map(move |(&t, v)| (s.kind, s.index, t, v.as_slice())))
    }

    pub fn flow_segment(&self, k: usize) -> Option<&Segment<T>> {
        self.segments.iter().find(|s| s.kind == SegmentKind::Flow && s.index == k)
    }

    /// `x(t_k - 0)`, the value of flow `k - 1` at its right end.
    pub fn left_limit(&self, k: usize) -> Result<Vec<T>> {
        let p = self.problem.schedule.impulse_count();
        if k == 0 || k > p {
            return Err(Error::Index { k, p });
        }
        let seg = self.flow_segment(k - 1).ok_or(Error::Index { k, p })?;
        Ok(seg.values[seg.values.len() - 1].clone())
    }

    /// State at `t ∈ [t0, horizon]`: linear interpolation on flows (left
    /// limit at `t_k`), the impulse map itself on `(t_k, s_k]`.
    pub fn value_at(&self, time: T) -> Result<Vec<T>> {
        match self.problem.locate(time)? {
            Location::Flow(k) => Ok(self.flow_segment(k).expect("flow after t0 is stored").interpolate(time)),
            Location::Impulse(k) => Ok((self.problem.phi[k - 1])(time, &self.left_limit(k)?)),
        }
    }

    /// Largest `‖x(t)‖∞` over all stored samples.
    pub fn sup_norm(&self) -> T {
        self.points().map(|(_, _, _, x)| max_norm(x)).fold(T::zero(), T::max)
    }
}

fn flow_steps<T: Real>(steps_per_unit: usize, len: T) -> usize {
    let n = (T::from_count(steps_per_unit) * len).ceil().to_usize().unwrap_or(MIN_STEPS);
    n.max(MIN_STEPS)
}

/// Composes the piecewise solution: a fractional flow from `t0`, then for
/// each later impulse `k` the explicit values `φ_k(t, x(t_k - 0))` on
/// `[t_k, s_k]` followed by a flow restarted at `s_k` from the impulse value
/// there (the very same stored vector).
///
/// Flows use `max(8, ⌈steps_per_unit · length⌉)` steps; impulse intervals are
/// sampled on `⌈steps_per_unit · length⌉ + 1` points (at least 2, or the
/// single point `s_k` when `t_k = s_k`). The first impulse sample sits at
/// `t_k` and holds the right limit there.
pub fn solve_nifrde<T: Real>(p: &NifrdeProblem<T>, steps_per_unit: usize) -> Result<Trajectory<T>> {
    if steps_per_unit == 0 {
        return Err(Error::Parameter("steps_per_unit must be positive".into()));
    }
    let sched = &p.schedule;
    let first = p.start_flow();
    let mut segments = Vec::new();
    let mut start = (p.t0, p.x0.clone());
    for k in first..=sched.impulse_count() {
        if k > first {
            let left = segments
                .last()
                .map(|s: &Segment<T>| s.values[s.values.len() - 1].clone())
                .expect("flow precedes impulse");
            let (a, b) = sched.impulse_interval(k)?;
            let grid: Vec<T> = if a == b {
                vec![b]
            } else {
                let n = (T::from_count(steps_per_unit) * (b - a)).ceil().to_usize().unwrap_or(1).max(1);
                (0..=n).map(|i| if i == n { b } else { a + (b - a) * T::from_count(i) / T::from_count(n) }).collect()
            };
            let values: Vec<Vec<T>> = grid.iter().map(|&t| (p.phi[k - 1])(t, &left)).collect();
            if let Some(i) = values.iter().position(|v| v.len() != p.dim() || v.iter().any(|x| !x.is_finite())) {
                return Err(Error::Domain(format!("impulse map {k} returned an invalid state at t = {}", grid[i])));
            }
            start = (b, values[values.len() - 1].clone());
            segments.push(Segment { kind: SegmentKind::Impulse, index: k, interval: (a, b), grid, values });
        }
        let (tau, x_start) = start.clone();
        let end = sched.flow_end(k);
        let flow = FlowProblem::new(p.q, tau, end, x_start, p.f.clone())?;
        let sol: FlowSolution<T> = solve_frde(&flow, flow_steps(steps_per_unit, end - tau)).map_err(|e| match e {
            Error::NonFinite { index, .. } => Error::NonFinite { segment: Some(k), index },
            other => other,
        })?;
        segments.push(Segment {
            kind: SegmentKind::Flow,
            index: k,
            interval: (tau, end),
            grid: sol.grid().to_vec(),
            values: sol.values().to_vec(),
        });
    }
    Ok(Trajectory { problem: p.clone(), segments })
}
