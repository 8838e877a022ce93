//! Special functions used by the channel model.
//!
//! Everything here is self-contained: Bessel `J0`/`I0`, the first-order
//! Marcum-Q function, the Gaussian tail and the exponential integral. Each
//! function works internally in a scaled domain where the unscaled form would
//! overflow and returns plain values.

use std::f64::consts::{FRAC_2_SQRT_PI, PI};

use crate::error::{domain, ensure_finite, ensure_nonneg, Error, Result};
use crate::quadrature::gauss_hermite_normal;

/// Truncation control for series evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    /// Target absolute error.
    pub abs_tol: f64,
    /// Budget of series terms before the evaluation gives up (or switches to
    /// an asymptotic route, where one exists).
    pub max_terms: usize,
}

impl Accuracy {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(domain(
                "Accuracy::new",
                format!("abs_tol must be > 0, got {abs_tol}"),
            ));
        }
        if max_terms == 0 {
            return Err(domain("Accuracy::new", "max_terms must be >= 1"));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

impl Default for Accuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

/// Bessel function of the first kind, order zero.
///
/// Uses Miller's backward recurrence normalised by
/// `1 = J0 + 2 Σ J_2k`, which keeps the absolute error near machine
/// precision for any argument size.
pub fn bessel_j0(x: f64) -> Result<f64> {
    ensure_finite("bessel_j0", "x", x)?;
    Ok(j0(x.abs()))
}

fn j0(x: f64) -> f64 {
    if x < 1e-3 {
        let y = 0.25 * x * x;
        return 1.0 - y * (1.0 - y * (0.25 - y / 36.0));
    }
    let start = 2 * ((0.55 * x + 20.0 + 4.0 * x.cbrt()).ceil() as usize);
    let two_over_x = 2.0 / x;
    let (mut above, mut cur) = (0.0_f64, 1e-30_f64);
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * cur - above;
        above = cur;
        cur = below;
        // cur now holds J_{k-1}
        if (k - 1) % 2 == 0 && k > 1 {
            even_sum += cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            even_sum *= 1e-250;
        }
    }
    cur / (cur + 2.0 * even_sum)
}

/// `1 − J0(x)` without cancellation for small `x`.
pub fn one_minus_bessel_j0(x: f64) -> Result<f64> {
    ensure_finite("one_minus_bessel_j0", "x", x)?;
    let x = x.abs();
    if x >= 1.0 {
        return Ok(1.0 - j0(x));
    }
    // 1 − J0(x) = −Σ_{k≥1} (−x²/4)^k / (k!)²
    let y = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= y / (kf * kf);
        sum -= term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// Modified Bessel function of the first kind, order zero.
///
/// Overflows to `+inf` above `x ≈ 713`; use [`bessel_i0_scaled`] there.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_i0_arg("bessel_i0", x)?;
    if x <= I0_SERIES_LIMIT {
        Ok(i0_series(x))
    } else {
        let scaled = i0_asymptotic_scaled(x);
        // split the exponential to delay overflow
        Ok(scaled * (0.5 * x).exp() * (0.5 * x).exp())
    }
}

/// Exponentially scaled `e^(−x) · I0(x)`.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_i0_arg("bessel_i0_scaled", x)?;
    if x <= I0_SERIES_LIMIT {
        Ok(i0_series(x) * (-x).exp())
    } else {
        Ok(i0_asymptotic_scaled(x))
    }
}

const I0_SERIES_LIMIT: f64 = 20.0;

fn check_i0_arg(op: &'static str, x: f64) -> Result<()> {
    ensure_nonneg(op, "x", x)
}

fn i0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= y / (k * k);
        sum += term;
        if term <= 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

// e^{-x} I0(x) ~ (2πx)^{-1/2} Σ ((2k−1)!!)² / (k! 8^k x^k)
fn i0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if next >= term || next <= 1e-17 * sum {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum / (2.0 * PI * x).sqrt()
}

/// First-order Marcum-Q function `Q1(a, b)` with default accuracy.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    marcum_q1_with(a, b, &Accuracy::default())
}

/// First-order Marcum-Q function `Q1(a, b)`.
///
/// Evaluated as the Poisson mixture
/// `Σ_k Pois(k; a²/2) · P(Pois(b²/2) ≤ k)`, summed only over index windows
/// outside of which the Bernstein tail bounds of both Poisson laws fall
/// below `abs_tol/8`. When the windows exceed `max_terms` (strongly
/// non-central arguments, `a` in the hundreds) the function switches to a
/// Gauss–Hermite integral over the quadrature component of the underlying
/// Rician variable, which is smooth in that regime.
pub fn marcum_q1_with(a: f64, b: f64, acc: &Accuracy) -> Result<f64> {
    check_q1_args(a, b)?;
    marcum_q1_impl(a, b, b - a, acc)
}

/// `Q1(a, b)` where the caller also supplies `gap = b − a`, computed more
/// accurately than the difference of the rounded arguments. Only the
/// strongly non-central route uses `gap`.
pub fn marcum_q1_gap(a: f64, b: f64, gap: f64, acc: &Accuracy) -> Result<f64> {
    check_q1_args(a, b)?;
    ensure_finite("marcum_q1", "gap", gap)?;
    marcum_q1_impl(a, b, gap, acc)
}

fn check_q1_args(a: f64, b: f64) -> Result<()> {
    ensure_nonneg("marcum_q1", "a", a)?;
    ensure_nonneg("marcum_q1", "b", b)
}

fn marcum_q1_impl(a: f64, b: f64, gap: f64, acc: &Accuracy) -> Result<f64> {
    if b == 0.0 {
        return Ok(1.0);
    }
    if a == 0.0 {
        return Ok((-0.5 * b * b).exp());
    }
    let tail = (8.0 / acc.abs_tol).ln();
    match q1_series(0.5 * a * a, 0.5 * b * b, tail, 0, acc.max_terms) {
        Some(q) => Ok(q),
        None if a >= 30.0 => Ok(q1_normal_mixture(a, b, gap)),
        None => Err(Error::NotConverged {
            op: "marcum_q1",
            max_terms: acc.max_terms,
        }),
    }
}

/// Index window `[lo, hi]` of a Poisson(`mean`) law outside of which each
/// tail has probability at most `e^(−tail)`.
fn poisson_window(mean: f64, tail: f64) -> (usize, usize) {
    let spread = (2.0 * mean * tail).sqrt();
    let lo = (mean - spread).floor().max(0.0) as usize;
    let hi = (mean + spread + 2.0 * tail / 3.0).ceil() as usize;
    (lo, hi)
}

/// Sum of Poisson weights over `[lo, hi]` relative to the mode, together
/// with the lowest index whose relative weight is still a normal float and
/// that weight. Weights below it are negligible.
fn poisson_mass(mean: f64, lo: usize, hi: usize) -> (f64, usize, f64) {
    const FLOOR: f64 = 1e-290;
    let mode = (mean.floor() as usize).clamp(lo, hi);
    let mut total = 1.0;
    let mut w = 1.0;
    for k in mode + 1..=hi {
        w *= mean / k as f64;
        if w < FLOOR {
            break;
        }
        total += w;
    }
    let (mut first, mut w_first) = (mode, 1.0);
    w = 1.0;
    for k in (lo..mode).rev() {
        w *= (k + 1) as f64 / mean;
        if w < FLOOR {
            break;
        }
        total += w;
        first = k;
        w_first = w;
    }
    (total, first, w_first)
}

/// Windowed Poisson-mixture sum. `pad` widens both windows by extra terms
/// on each side (used to check truncation). Returns `None` when the term
/// budget is exceeded.
pub(crate) fn q1_series(
    lambda: f64,
    y: f64,
    tail: f64,
    pad: usize,
    max_terms: usize,
) -> Option<f64> {
    let (llo, lhi) = poisson_window(lambda, tail);
    let (ylo, yhi) = poisson_window(y, tail);
    let (llo, lhi) = (llo.saturating_sub(pad), lhi + pad);
    let (ylo, yhi) = (ylo.saturating_sub(pad), yhi + pad);
    if lhi < ylo {
        return Some(0.0);
    }
    if llo > yhi {
        return Some(1.0);
    }
    if pad == 0 && (lhi - llo + 1) + (yhi - ylo + 1) > max_terms {
        return None;
    }
    let (l_total, l_first, l_w) = poisson_mass(lambda, llo, lhi);
    let (y_total, y_first, y_w) = poisson_mass(y, ylo, yhi);

    let mut p = l_w;
    let mut q = y_w;
    let mut j = y_first;
    let mut cum = 0.0;
    let mut acc = 0.0;
    for k in l_first..=lhi {
        while j <= k && j <= yhi {
            cum += q;
            j += 1;
            q *= y / j as f64;
        }
        let s = if k >= yhi { 1.0 } else { cum / y_total };
        acc += p * s;
        p *= lambda / (k + 1) as f64;
    }
    Some((acc / l_total).clamp(0.0, 1.0))
}

/// `Q1(a,b) = P((a + N1)² + N2² > b²)` integrated over `N2` by 64-node
/// Gauss–Hermite; the inner probability over `N1` is a pair of Gaussian
/// tails.
pub(crate) fn q1_normal_mixture(a: f64, b: f64, gap: f64) -> f64 {
    let rule = gauss_hermite_normal(64);
    let mut sum = 0.0;
    for (n, w) in rule.iter() {
        let inner = if n.abs() >= b {
            1.0
        } else {
            let s = ((b - n) * (b + n)).sqrt();
            // s − a written without cancellation
            let s_minus_a = gap - n * n / (s + b);
            q_tail(s_minus_a) + q_tail(s + a)
        };
        sum += w * inner;
    }
    sum.clamp(0.0, 1.0)
}

/// Standard normal upper tail `P(Z > x)`.
pub fn gaussian_q(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(domain("gaussian_q", "x is NaN"));
    }
    Ok(q_tail(x))
}

pub(crate) fn q_tail(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    let z = x.abs() * std::f64::consts::FRAC_1_SQRT_2;
    let upper = 0.5 * erfc_nonneg(z);
    if x >= 0.0 {
        upper
    } else {
        1.0 - upper
    }
}

fn erfc_nonneg(z: f64) -> f64 {
    if z < 2.5 {
        // erf(z) = 2/√π · e^{−z²} Σ (2z²)^n z / (1·3···(2n+1)), all terms positive
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut n = 1.0;
        while term > 1e-17 * sum {
            term *= 2.0 * z2 / (2.0 * n + 1.0);
            sum += term;
            n += 1.0;
        }
        1.0 - FRAC_2_SQRT_PI * (-z2).exp() * sum
    } else {
        // erfc(z) = e^{−z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
        let tiny = 1e-300;
        let mut f = z;
        let mut c = z;
        let mut d = 0.0;
        for n in 1..500 {
            let an = 0.5 * n as f64;
            d = z + an * d;
            if d.abs() < tiny {
                d = tiny;
            }
            d = 1.0 / d;
            c = z + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        0.5 * FRAC_2_SQRT_PI * (-z * z).exp() / f
    }
}

/// `e^x · E1(x)` for `x > 0`, where `E1` is the exponential integral.
pub fn exp_e1(x: f64) -> Result<f64> {
    ensure_finite("exp_e1", "x", x)?;
    if x <= 0.0 {
        return Err(domain("exp_e1", format!("x must be > 0, got {x}")));
    }
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x <= 1.0 {
        // E1(x) = −γ − ln x − Σ_{k≥1} (−x)^k / (k·k!)
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= -x / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(x.exp() * (-EULER_GAMMA - x.ln() - sum))
    } else {
        // continued fraction, modified Lentz
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(h)
    }
}
