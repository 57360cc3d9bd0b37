//! Quadrature rules used throughout the crate.
//!
//! Gauss–Legendre rules are generated once in `f64` by Newton iteration on
//! the Legendre recurrence and cached; the adaptive Gauss–Kronrod (7/15)
//! integrator handles integrands with interior peaks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::scalar::{CompensatedSum, Real};

/// Nodes per panel for the composite rules.
pub const PANEL_NODES: usize = 64;

type Rule = Arc<[(f64, f64)]>;

fn compute_legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let mut rule = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    rule
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, sorted ascending.
pub fn legendre_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| compute_legendre_rule(n).into())
        .clone()
}

/// Gauss–Legendre with `nodes` points on a single interval.
pub fn gauss_legendre<T: Real>(f: impl Fn(T) -> T, a: T, b: T, nodes: usize) -> T {
    let rule = legendre_rule(nodes);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let mut acc = CompensatedSum::new();
    for &(x, w) in rule.iter() {
        acc.add(T::lit(w) * f(mid + half * T::lit(x)));
    }
    acc.value() * half
}

/// Composite Gauss–Legendre over `panels` equal panels.
pub fn composite_gauss_legendre<T: Real>(
    f: impl Fn(T) -> T,
    a: T,
    b: T,
    panels: usize,
    nodes: usize,
) -> T {
    let panels = panels.max(1);
    let width = (b - a) / T::from_count(panels);
    let mut acc = CompensatedSum::new();
    for j in 0..panels {
        let lo = a + width * T::from_count(j);
        let hi = if j + 1 == panels { b } else { lo + width };
        acc.add(gauss_legendre(&f, lo, hi, nodes));
    }
    acc.value()
}

/// Nodes and weights of a rule for `∫_a^t (t - s)^(nu - 1) g(s) ds`, `nu ∈ (0, 1]`.
///
/// The interval is split at its midpoint. On the right half the substitution
/// `u = (t - s)^nu` absorbs the kernel singularity exactly, so the integral
/// becomes `(1/nu) ∫ g(t - u^{1/nu}) du`; the first `u`-panel is further
/// graded towards `u = 0` where `u^{1/nu}` is least smooth. The left half is
/// covered by dyadic panels shrinking towards `a`, which keeps integrable
/// endpoint singularities of `g` itself (e.g. `g(s) ~ (s - a)^{q-1}`) under
/// control.
pub fn singular_rule<T: Real>(a: T, t: T, nu: T) -> Vec<(T, T)> {
    let mut rule = Vec::new();
    if t <= a {
        return rule;
    }
    let two = T::lit(2.0);
    let len = t - a;
    let half = len / two;
    let panels = (len * two).ceil().to_usize().unwrap_or(2).clamp(2, 256);

    let push_panel = |rule: &mut Vec<(T, T)>, lo: T, hi: T, nodes: usize, map: &dyn Fn(T) -> (T, T)| {
        let gl = legendre_rule(nodes);
        let h = (hi - lo) / two;
        let m = (hi + lo) / two;
        for &(x, w) in gl.iter() {
            let (s, jac) = map(m + h * T::lit(x));
            rule.push((s, T::lit(w) * h * jac));
        }
    };

    // Left half in s, kernel evaluated explicitly.
    let kernel = |s: T| ((t - s).powf(nu - T::one()), s);
    let left = |s: T| {
        let (k, s) = kernel(s);
        (s, k)
    };
    let left_pieces = panels.div_ceil(2);
    let first_width = half / T::from_count(left_pieces);
    for j in 1..left_pieces {
        let lo = a + first_width * T::from_count(j);
        let hi = if j + 1 == left_pieces { a + half } else { lo + first_width };
        push_panel(&mut rule, lo, hi, PANEL_NODES / 2, &left);
    }
    let floor = len * T::lit(2f64.powi(-24));
    let mut hi = first_width;
    while hi > floor && a + hi / two > a {
        let lo = hi / two;
        push_panel(&mut rule, a + lo, a + hi, 16, &left);
        hi = lo;
    }
    // Innermost piece: s = a + hi·v^10 turns (s - a)^γ into a smooth
    // function of v for any γ > -0.9.
    let power = T::lit(10.0);
    let width = hi;
    let innermost = |v: T| {
        let s = a + width * v.powf(power);
        let (k, s) = kernel(s);
        (s, k * width * power * v.powf(power - T::one()))
    };
    push_panel(&mut rule, T::zero(), T::one(), PANEL_NODES / 2, &innermost);

    // Right half in u = (t - s)^nu.
    let inv_nu = nu.recip();
    let right = |u: T| (t - u.powf(inv_nu), inv_nu);
    let upper = half.powf(nu);
    let right_pieces = panels.div_ceil(2);
    let width = upper / T::from_count(right_pieces);
    let mut hi = width;
    for _ in 0..12 {
        let lo = hi / two;
        push_panel(&mut rule, lo, hi, PANEL_NODES / 2, &right);
        hi = lo;
    }
    push_panel(&mut rule, T::zero(), hi, PANEL_NODES / 2, &right);
    for j in 1..right_pieces {
        let lo = width * T::from_count(j);
        let hi = if j + 1 == right_pieces { upper } else { lo + width };
        push_panel(&mut rule, lo, hi, PANEL_NODES, &right);
    }
    rule
}

/// Computes `∫_a^t (t - s)^(nu - 1) g(s) ds` for `nu ∈ (0, 1]` with [`singular_rule`].
pub fn weakly_singular<T: Real>(g: impl Fn(T) -> T, a: T, t: T, nu: T) -> T {
    let mut acc = CompensatedSum::new();
    for (s, w) in singular_rule(a, t, nu) {
        acc.add(w * g(s));
    }
    acc.value()
}

/// Vector-valued version of [`weakly_singular`].
pub fn weakly_singular_vec<T: Real>(g: impl Fn(T) -> Vec<T>, dim: usize, a: T, t: T, nu: T) -> Vec<T> {
    let mut acc = vec![CompensatedSum::new(); dim];
    for (s, w) in singular_rule(a, t, nu) {
        for (slot, v) in acc.iter_mut().zip(g(s)) {
            slot.add(w * v);
        }
    }
    acc.iter().map(|c| c.value()).collect()
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid);
    let mut kronrod = fc * T::lit(GK15_WEIGHTS[7]);
    let mut gauss = fc * T::lit(G7_WEIGHTS[3]);
    for i in 0..7 {
        let dx = half * T::lit(GK15_NODES[i]);
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += pair * T::lit(GK15_WEIGHTS[i]);
        if i % 2 == 1 {
            gauss += pair * T::lit(G7_WEIGHTS[i / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration by bisection.
///
/// Stops when the summed error estimate falls below
/// `max(abs_tol, rel_tol * |integral|)` or after `max_intervals` splits.
pub fn adaptive<T: Real>(f: impl Fn(T) -> T, a: T, b: T, abs_tol: T, rel_tol: T) -> T {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    for _ in 0..MAX_INTERVALS {
        let total: T = pieces.iter().map(|p| p.2).sum();
        let err: T = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = (lo + hi) / T::lit(2.0);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    let mut acc = CompensatedSum::new();
    for p in &pieces {
        acc.add(p.2);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64] {
            let rule = legendre_rule(n);
            let wsum: f64 = rule.iter().map(|r| r.1).sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n} weight sum {wsum}");
            let deg = 2 * n - 1;
            let integral: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((integral - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn weakly_singular_matches_beta_integral() {
        // ∫_0^1 (1-s)^{-1/2} s ds = B(2, 1/2) = 4/3
        let v = weakly_singular(|s: f64| s, 0.0, 1.0, 0.5);
        assert!((v - 4.0 / 3.0).abs() < 1e-13);
        // ∫_0^2 (2-s)^{-0.7} ds = 2^{0.3}/0.3
        let v = weakly_singular(|_s: f64| 1.0, 0.0, 2.0, 0.3);
        assert!((v - 2f64.powf(0.3) / 0.3).abs() < 1e-12);
        // Both ends singular: ∫_0^1 (1-s)^{-1/2} s^{-1/2} ds = π
        let v = weakly_singular(|s: f64| s.powf(-0.5), 0.0, 1.0, 0.5);
        assert!((v - std::f64::consts::PI).abs() < 1e-8, "{v}");
    }

    #[test]
    fn adaptive_handles_sharp_peak() {
        let f = |x: f64| 1.0 / (1e-4 + (x - 0.3) * (x - 0.3));
        let exact = (100.0 * 0.7f64).atan() * 100.0 + (100.0 * 0.3f64).atan() * 100.0;
        let v = adaptive(f, 0.0, 1.0, 1e-12, 1e-13);
        assert!((v - exact).abs() / exact < 1e-11, "{v} vs {exact}");
    }
}
