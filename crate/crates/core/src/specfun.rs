//! Error function family on the real line and the Faddeeva function.
//!
//! Everything is built from three evaluators:
//!
//! * Maclaurin series for `erf` and Dawson's function near the origin,
//! * a trapezoidal rule for `(i/pi) * int exp(-t^2) / (z - t) dt` with the
//!   residue of the pole at `t = z` added back in closed form, valid for
//!   `0 <= Im z < pi / h` (node spacing `h = 1/2`),
//! * the Laplace continued fraction for `|z|` large.
//!
//! The trapezoidal sum converges geometrically like `exp(-pi^2 / h^2)`,
//! which is below `1e-17` for `h = 1/2`, so the same 29 nodes serve every
//! argument in the strip. The nodes are shifted by half a spacing whenever
//! `Re z` lies close to a node, which keeps all terms bounded.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_SQRT_PI, PI};

use crate::error::{ensure_finite, Error, Result};

pub const SQRT_PI: f64 = 1.772_453_850_905_516;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Node spacing of the trapezoidal rule.
const TRAP_H: f64 = 0.5;
/// Nodes `(n + delta) h` for `n` in `-TRAP_NODES..=TRAP_NODES`.
const TRAP_NODES: i32 = 14;
/// Upper edge (in `Im z`) of the trapezoidal region; must stay below `pi / h`.
const TRAP_MAX_IM: f64 = 6.0;
/// Beyond this `|Re z|` the continued fraction is used.
const TRAP_MAX_RE: f64 = 8.0;
/// Below this `|x|` the Maclaurin series are used for `erf` and Dawson.
const SERIES_MAX: f64 = 0.5;

/// A function value together with an a-priori bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult<T> {
    pub value: T,
    pub est_abs_error: f64,
}

fn bound(value_mag: f64, ulps: f64) -> f64 {
    ulps * f64::EPSILON * value_mag.max(1.0)
}

/// `erf(x) = 2/sqrt(pi) int_0^x exp(-s^2) ds`.
pub fn erf(x: f64) -> Result<f64> {
    erf_eval(x).map(|r| r.value)
}

pub fn erf_eval(x: f64) -> Result<EvalResult<f64>> {
    ensure_finite("x", x)?;
    let value = erf_unchecked(x);
    Ok(EvalResult {
        value,
        est_abs_error: bound(value.abs(), 16.0),
    })
}

pub(crate) fn erf_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_MAX {
        erf_series(ax)
    } else {
        1.0 - (-ax * ax).exp() * erfcx_nonneg(ax)
    };
    v.copysign(x)
}

/// `erfc(x) = 1 - erf(x)`.
pub fn erfc(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(if x < SERIES_MAX {
        1.0 - erf_unchecked(x)
    } else {
        (-x * x).exp() * erfcx_nonneg(x)
    })
}

/// Scaled complementary error function `exp(x^2) (1 - erf(x))`.
///
/// Negative arguments go through `erfcx(-x) = 2 exp(x^2) - erfcx(x)` and
/// fail with [`Error::Overflow`] once `exp(x^2)` is not representable.
pub fn erfcx(x: f64) -> Result<f64> {
    erfcx_eval(x).map(|r| r.value)
}

pub fn erfcx_eval(x: f64) -> Result<EvalResult<f64>> {
    ensure_finite("x", x)?;
    if x >= 0.0 {
        let value = erfcx_nonneg(x);
        return Ok(EvalResult {
            value,
            est_abs_error: bound(value, 16.0),
        });
    }
    let big = 2.0 * (x * x).exp();
    if !big.is_finite() {
        return Err(Error::Overflow(format!("erfcx({x}) exceeds f64 range")));
    }
    let value = big - erfcx_nonneg(-x);
    Ok(EvalResult {
        value,
        est_abs_error: bound(value, 8.0 + 4.0 * x * x),
    })
}

/// `erfcx` for `x >= 0`, no argument checks.
pub(crate) fn erfcx_nonneg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < TRAP_MAX_IM {
        erfcx_trapezoid(x)
    } else {
        INV_SQRT_PI / (x + erfcx_cf_tail(x))
    }
}

/// `1 - sqrt(pi) x erfcx(x)` for `x >= 0`, free of cancellation for large `x`
/// where it behaves like `1/(2x^2)`.
pub(crate) fn erfcx_defect(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < TRAP_MAX_IM {
        1.0 - SQRT_PI * x * erfcx_trapezoid(x)
    } else {
        let tail = erfcx_cf_tail(x);
        tail / (x + tail)
    }
}

/// Dawson's function `D(x) = exp(-x^2) int_0^x exp(y^2) dy`.
pub fn dawson(x: f64) -> Result<f64> {
    dawson_eval(x).map(|r| r.value)
}

pub fn dawson_eval(x: f64) -> Result<EvalResult<f64>> {
    ensure_finite("x", x)?;
    let value = dawson_unchecked(x);
    Ok(EvalResult {
        value,
        est_abs_error: bound(value.abs(), 16.0),
    })
}

pub(crate) fn dawson_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_MAX {
        dawson_series(ax)
    } else {
        0.5 * SQRT_PI * w_upper(Complex64::new(ax, 0.0)).im
    };
    v.copysign(x)
}

/// Dawson's function on the imaginary axis: returns `D(iy) / i`, which is
/// `(sqrt(pi)/2) exp(y^2) erf(y)`.
pub fn dawson_imag(y: f64) -> Result<f64> {
    ensure_finite("y", y)?;
    let v = 0.5 * SQRT_PI * (y * y).exp() * erf_unchecked(y);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("D(i*{y}) exceeds f64 range")))
    }
}

/// Faddeeva function `w(z) = exp(-z^2) (1 - erf(-iz))`.
pub fn faddeeva_w(z: Complex64) -> Result<Complex64> {
    faddeeva_w_eval(z).map(|r| r.value)
}

pub fn faddeeva_w_eval(z: Complex64) -> Result<EvalResult<Complex64>> {
    ensure_finite("Re z", z.re)?;
    ensure_finite("Im z", z.im)?;
    if z.re == 0.0 {
        // Imaginary axis: w(iy) = erfcx(y), exactly real.
        let r = erfcx_eval(z.im)?;
        return Ok(EvalResult {
            value: Complex64::new(r.value, 0.0),
            est_abs_error: r.est_abs_error,
        });
    }
    if z.im >= 0.0 {
        let value = w_upper(z);
        return Ok(EvalResult {
            value,
            est_abs_error: bound(value.norm(), 16.0),
        });
    }
    // Lower half-plane through w(z) = 2 exp(-z^2) - w(-z).
    let gauss = 2.0 * (-z * z).exp();
    if !(gauss.re.is_finite() && gauss.im.is_finite()) {
        return Err(Error::Overflow(format!("w({z}) exceeds f64 range")));
    }
    let reflected = w_upper(-z);
    let value = gauss - reflected;
    Ok(EvalResult {
        value,
        est_abs_error: bound(
            gauss.norm() * (4.0 + 2.0 * z.norm_sqr()) + reflected.norm(),
            16.0,
        ),
    })
}

/// `w(z)` for `Im z >= 0`, finite `z`.
pub(crate) fn w_upper(z: Complex64) -> Complex64 {
    debug_assert!(z.im >= 0.0);
    if z.im < TRAP_MAX_IM && z.re.abs() < TRAP_MAX_RE {
        w_trapezoid(z)
    } else {
        let mut w = w_continued_fraction(z);
        if z.im == 0.0 {
            // The fraction is purely imaginary on the real axis.
            w.re = (-z.re * z.re).exp();
        }
        w
    }
}

fn erf_series(x: f64) -> f64 {
    // 2/sqrt(pi) sum (-1)^n x^(2n+1) / (n! (2n+1))
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..60 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * sum
}

fn dawson_series(x: f64) -> f64 {
    // sum (-1)^n 2^n x^(2n+1) / (2n+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..60 {
        term *= -2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Real form of the trapezoidal rule on the imaginary axis. All terms are
/// positive, so there is no cancellation anywhere in `[0, pi/h)`.
fn erfcx_trapezoid(x: f64) -> f64 {
    let h = TRAP_H;
    let x2 = x * x;
    let mut sum = 0.0;
    for n in 0..=TRAP_NODES {
        let t = (n as f64 + 0.5) * h;
        sum += (-t * t).exp() / (x2 + t * t);
    }
    let damp = (-2.0 * PI * x / h).exp();
    let pole = 2.0 * (x2 - 2.0 * PI * x / h).exp() / (1.0 + damp);
    2.0 * h * x / PI * sum + pole
}

fn w_trapezoid(z: Complex64) -> Complex64 {
    let h = TRAP_H;
    let u = z.re / h;
    let frac = u - u.floor();
    let delta = if (0.25..=0.75).contains(&frac) { 0.0 } else { 0.5 };
    let mut sum = Complex64::new(0.0, 0.0);
    for n in -TRAP_NODES..=TRAP_NODES {
        let t = (n as f64 + delta) * h;
        sum += (-t * t).exp() / (z - t);
    }
    let sum = Complex64::new(0.0, h / PI) * sum;
    // Residue of the pole at t = z, summed over all aliased frequencies.
    let q = (Complex64::new(0.0, 2.0 * PI / h) * (z - delta * h)).exp();
    let pole = -2.0 * (-z * z).exp() * q / (1.0 - q);
    sum + pole
}

fn cf_depth(r: f64) -> usize {
    if r < 10.0 {
        48
    } else if r < 30.0 {
        24
    } else if r < 1e3 {
        10
    } else if r < 1e7 {
        4
    } else {
        1
    }
}

/// Tail `K(x)` of `erfcx(x) = 1 / (sqrt(pi) (x + K(x)))`.
fn erfcx_cf_tail(x: f64) -> f64 {
    let mut r = 0.0;
    for n in (1..=cf_depth(x)).rev() {
        r = 0.5 * n as f64 / (x + r);
    }
    r
}

fn w_continued_fraction(z: Complex64) -> Complex64 {
    let mut r = Complex64::new(0.0, 0.0);
    for n in (1..=cf_depth(z.norm())).rev() {
        r = 0.5 * n as f64 / (z - r);
    }
    Complex64::new(0.0, INV_SQRT_PI) / (z - r)
}
