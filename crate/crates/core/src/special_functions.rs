//! Gamma and Mittag-Leffler functions.
//!
//! `E_{α,β}(z) = Σ_{k≥0} z^k / Γ(αk + β)` is summed directly (compensated)
//! whenever the terms stay small. For negative arguments with `α < 1` the
//! alternating series loses digits to cancellation, so those arguments go
//! through the real-line integral representation
//!
//! ```text
//! E_{α,β}(z) = 1/(απ) ∫_0^∞ χ^{(1-β)/α} e^{-χ^{1/α}}
//!              (χ sin(π(1-β)) - z sin(π(1-β+α))) / (χ² - 2χz cos(απ) + z²) dχ
//! ```
//!
//! valid for `|arg z| > απ` and `β < 1 + α`; larger `β` is first reduced with
//! `E_{α,β}(z) = (E_{α,β-α}(z) - 1/Γ(β-α)) / z`.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::{CompensatedSum, Real};

/// Largest `|z|` accepted by the Mittag-Leffler evaluators.
pub const ML_ARGUMENT_LIMIT: f64 = 50.0;

/// Baseline number of series terms before the adaptive extension kicks in.
const SERIES_TERMS: usize = 400;
const SERIES_TERMS_HARD_CAP: usize = 20_000;

/// Negative arguments with α < 1 switch to the integral representation
/// once the largest series term exceeds this magnitude.
const SERIES_PEAK_SWITCH: f64 = 10.0;

/// For α ≥ 1 and negative z the series is the only path; refuse arguments
/// whose largest term would wipe out more than six digits.
const SERIES_PEAK_LIMIT: f64 = 1e6;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}

fn lanczos_sum<T: Real>(shifted: T) -> T {
    let mut acc = T::lit(LANCZOS_COEFFS[0]);
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += T::lit(*c) / (shifted + T::from_count(i));
    }
    acc
}

/// Γ(x) for real `x` that is not a non-positive integer.
///
/// Positive integers up to 170 are returned as exact factorial products;
/// other arguments use a Lanczos approximation (g = 7, nine terms) with the
/// reflection formula below `x = 0.5`.
pub fn gamma<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return Err(Error::Parameter("gamma of NaN".into()));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x.as_f64()));
    }
    if x < T::lit(0.5) {
        let pi = T::PI();
        let g = gamma(T::one() - x)?;
        return Ok(pi / ((pi * x).sin() * g));
    }
    if x == x.round() && x <= T::lit(171.0) {
        let n = x.to_usize().unwrap_or(1);
        return Ok((1..n).fold(T::one(), |acc, k| acc * T::from_count(k)));
    }
    if x > T::lit(140.0) {
        return Ok(ln_gamma(x)?.exp());
    }
    let shifted = x - T::one();
    let t = shifted + T::lit(LANCZOS_G + 0.5);
    let sqrt_two_pi = (T::lit(2.0) * T::PI()).sqrt();
    Ok(sqrt_two_pi * t.powf(shifted + T::lit(0.5)) * (-t).exp() * lanczos_sum(shifted))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::Parameter(format!("ln_gamma requires x > 0, got {}", x.as_f64())));
    }
    if x < T::lit(0.5) {
        // ln Γ(x) = ln π - ln sin(πx) - ln Γ(1 - x)
        let pi = T::PI();
        return Ok(pi.ln() - (pi * x).sin().ln() - ln_gamma(T::one() - x)?);
    }
    let shifted = x - T::one();
    let t = shifted + T::lit(LANCZOS_G + 0.5);
    let half_ln_two_pi = T::lit(0.5) * (T::lit(2.0) * T::PI()).ln();
    Ok(half_ln_two_pi + (shifted + T::lit(0.5)) * t.ln() - t + lanczos_sum(shifted).ln())
}

/// `1/Γ(x)`, zero at the poles.
pub fn recip_gamma<T: Real>(x: T) -> T {
    if is_nonpositive_integer(x) {
        T::zero()
    } else {
        gamma(x).map(|g| g.recip()).unwrap_or(T::zero())
    }
}

/// Parameters `(α, β)` of the two-parameter Mittag-Leffler function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> MLParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::Parameter(format!("alpha must be positive, got {}", alpha.as_f64())));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be positive, got {}", beta.as_f64())));
        }
        Ok(Self { alpha, beta })
    }
}

/// One-parameter Mittag-Leffler function `E_q(z) = E_{q,1}(z)`, `q ∈ (0, 1]`.
pub fn ml_one<T: Real>(q: T, z: T) -> Result<T> {
    if !(q > T::zero() && q <= T::one()) {
        return Err(Error::Parameter(format!("order q must lie in (0, 1], got {}", q.as_f64())));
    }
    ml_two(MLParams::new(q, T::one())?, z)
}

/// Two-parameter Mittag-Leffler function `E_{α,β}(z)` for real `|z| ≤ 50`.
pub fn ml_two<T: Real>(p: MLParams<T>, z: T) -> Result<T> {
    let MLParams { alpha, beta } = MLParams::new(p.alpha, p.beta)?;
    if !z.is_finite() || z.abs() > T::lit(ML_ARGUMENT_LIMIT) {
        return Err(Error::Range { z: z.as_f64(), reason: format!("|z| exceeds {ML_ARGUMENT_LIMIT}") });
    }
    if z == T::zero() {
        return Ok(recip_gamma(beta));
    }
    let peak = series_peak_magnitude(alpha, beta, z)?;
    if z < T::zero() && alpha < T::one() && peak > T::lit(SERIES_PEAK_SWITCH) {
        return ml_negative_integral(alpha, beta, z);
    }
    if z > T::zero() {
        return ml_series(alpha, beta, z);
    }
    // α ≥ 1 with negative z: the series is exact up to cancellation, which
    // is bounded by the largest term.
    let closed = closed_form_negative(alpha, beta, z);
    if peak > T::lit(SERIES_PEAK_LIMIT) {
        return closed.ok_or_else(|| cancellation_error(z));
    }
    let sum = ml_series(alpha, beta, z)?;
    let rounding = peak * T::epsilon() * T::lit(16.0);
    if rounding <= working_tolerance::<T>() * sum.abs() {
        return Ok(sum);
    }
    closed.ok_or_else(|| cancellation_error(z))
}

/// Relative accuracy the evaluators promise in double precision.
pub const ML_RELATIVE_TOLERANCE: f64 = 1e-10;

/// [`ML_RELATIVE_TOLERANCE`], loosened to what single precision can carry.
fn working_tolerance<T: Real>() -> T {
    T::lit(ML_RELATIVE_TOLERANCE).max(T::epsilon() * T::lit(1e4))
}

fn cancellation_error<T: Real>(z: T) -> Error {
    Error::Range {
        z: z.as_f64(),
        reason: "alternating series cancellation exceeds working precision".into(),
    }
}

/// Elementary closed forms for `z < 0` when `α ∈ {1, 2}`.
fn closed_form_negative<T: Real>(alpha: T, beta: T, z: T) -> Option<T> {
    let is_int = beta == beta.round() && beta >= T::one();
    if alpha == T::one() && is_int {
        // E_{1,n+1}(z) = (E_{1,n}(z) - 1/Γ(n)) / z
        let n = beta.to_usize()?;
        let mut value = z.exp();
        let mut factorial = T::one();
        for k in 1..n {
            value = (value - factorial.recip()) / z;
            factorial = factorial * T::from_count(k);
        }
        return Some(value);
    }
    if alpha == T::lit(2.0) {
        let root = (-z).sqrt();
        if beta == T::one() {
            return Some(root.cos());
        }
        if beta == T::lit(2.0) {
            return Some(root.sin() / root);
        }
    }
    None
}

/// Magnitude of `z^k / Γ(αk + β)` as a log, valid for any k.
fn ln_term<T: Real>(alpha: T, beta: T, ln_abs_z: T, k: usize) -> Result<T> {
    let arg = alpha * T::from_count(k) + beta;
    Ok(T::from_count(k) * ln_abs_z - ln_gamma(arg)?)
}

/// Largest series term magnitude and the index where it occurs.
fn series_peak<T: Real>(alpha: T, beta: T, z: T) -> Result<(T, usize)> {
    let ln_abs_z = z.abs().ln();
    let mut best = ln_term(alpha, beta, ln_abs_z, 0)?;
    let mut best_k = 0;
    let mut k = 1;
    loop {
        let v = ln_term(alpha, beta, ln_abs_z, k)?;
        if v > best {
            best = v;
            best_k = k;
        } else if k > 2 * best_k + 8 {
            break;
        }
        k += 1;
        if k > SERIES_TERMS_HARD_CAP {
            break;
        }
    }
    Ok((best, best_k))
}

fn series_peak_magnitude<T: Real>(alpha: T, beta: T, z: T) -> Result<T> {
    let (ln_peak, _) = series_peak(alpha, beta, z)?;
    if ln_peak > T::lit(700.0) {
        return Ok(T::infinity());
    }
    Ok(ln_peak.exp())
}

fn ml_series<T: Real>(alpha: T, beta: T, z: T) -> Result<T> {
    let (ln_peak, peak_k) = series_peak(alpha, beta, z)?;
    let overflow = T::max_value().ln() - T::lit(2.0);
    if ln_peak > overflow {
        return Err(Error::Range { z: z.as_f64(), reason: "Mittag-Leffler value overflows".into() });
    }
    let cap = SERIES_TERMS.max(4 * peak_k + 50).min(SERIES_TERMS_HARD_CAP);
    let ln_abs_z = z.abs().ln();
    let negative = z < T::zero();
    let direct_limit = T::lit(170.0);
    let tol = T::epsilon() / T::lit(2.0);
    let mut acc = CompensatedSum::new();
    let mut power = T::one();
    let mut prev_mag = T::infinity();
    for k in 0..cap {
        let arg = alpha * T::from_count(k) + beta;
        let term = if arg < direct_limit && power.is_finite() {
            power * recip_gamma(arg)
        } else {
            let mag = ln_term(alpha, beta, ln_abs_z, k)?.exp();
            if negative && k % 2 == 1 {
                -mag
            } else {
                mag
            }
        };
        acc.add(term);
        power = power * z;
        let mag = term.abs();
        let sum = acc.value();
        if k > peak_k && mag <= prev_mag && mag <= tol * sum.abs() {
            return Ok(sum);
        }
        if k > peak_k && mag == T::zero() {
            return Ok(sum);
        }
        prev_mag = mag;
    }
    Err(Error::Range { z: z.as_f64(), reason: format!("series did not converge within {cap} terms") })
}

/// Integral representation for `z < 0`, `0 < α < 1`.
fn ml_negative_integral<T: Real>(alpha: T, beta: T, z: T) -> Result<T> {
    if beta >= T::one() + alpha {
        let lower = beta - alpha;
        let inner = ml_negative_integral(alpha, lower, z)?;
        return Ok((inner - recip_gamma(lower)) / z);
    }
    let pi = T::PI();
    let sin_a = (pi * (T::one() - beta)).sin();
    let sin_b = (pi * (T::one() - beta + alpha)).sin();
    let cos_ap = (alpha * pi).cos();
    // In w = χ^{1/α}: (1/π) w^{α-β} e^{-w} N(χ)/D(χ) dw.
    let smooth = |w: T| {
        let chi = w.powf(alpha);
        let num = chi * sin_a - z * sin_b;
        let den = chi * chi - T::lit(2.0) * chi * z * cos_ap + z * z;
        (-w).exp() * num / den
    };
    let gamma_exp = alpha - beta;
    let w_max = T::lit(60.0);
    let abs_tol = T::epsilon() * T::lit(1e-3);
    let rel_tol = T::epsilon() * T::lit(50.0);
    let value = if gamma_exp < T::zero() {
        // w^γ dw = dv/(γ+1) with w = v^{1/(γ+1)}
        let e1 = gamma_exp + T::one();
        let inv = e1.recip();
        let v_max = w_max.powf(e1);
        quadrature::adaptive(|v: T| smooth(v.powf(inv)), T::zero(), v_max, abs_tol, rel_tol) / e1
    } else {
        quadrature::adaptive(|w: T| w.powf(gamma_exp) * smooth(w), T::zero(), w_max, abs_tol, rel_tol)
    };
    Ok(value / pi)
}
