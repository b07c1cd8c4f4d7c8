//! The slow branch `lambda*(k, tau)` of the spectrum of `T(k)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use crate::error::{ensure_finite, ensure_tau, Error, Result};
use crate::specfun::{self, erfcx_defect, erfcx_nonneg, SQRT_PI};

/// `sqrt(pi/2)`, the supremum of `k tau` on the discrete branch.
pub const S_CRIT: f64 = 1.253_314_137_315_500_3;

const ROOT_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionQuery {
    pub k: f64,
    pub tau: f64,
}

impl DispersionQuery {
    pub fn new(k: f64, tau: f64) -> Result<Self> {
        ensure_finite("k", k)?;
        ensure_tau(tau)?;
        Ok(Self { k, tau })
    }

    pub fn s(&self) -> f64 {
        self.k * self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionResult {
    pub k: f64,
    pub tau: f64,
    pub x_star: f64,
    pub lambda_star: f64,
    /// `sqrt(2/pi) k tau`.
    pub eps: f64,
    /// `|sqrt(pi/2) erfcx(|x*|) sign(x*) - k tau|`.
    pub residual: f64,
    pub in_range: bool,
}

impl DispersionResult {
    /// Spectral gap `lambda* + 1/tau = sqrt(2) k x*`.
    pub fn gap(&self) -> f64 {
        SQRT_2 * self.k * self.x_star
    }
}

/// Diagonal Green's function `g(z, 0) = int e^{-s^2/2} / (s - z) ds`
/// of the free Jacobi operator (Hermite weight normalised to `sqrt(2 pi)`).
pub fn g_diag(z: Complex64) -> Result<Complex64> {
    ensure_finite("Re z", z.re)?;
    ensure_finite("Im z", z.im)?;
    if z.im == 0.0 {
        return Err(Error::Domain(format!(
            "g(z, 0) is undefined on the real axis (z = {z})"
        )));
    }
    let c = Complex64::new(0.0, S_CRIT);
    if z.im > 0.0 {
        Ok(c * specfun::faddeeva_w(z / SQRT_2)?)
    } else {
        Ok(-c * specfun::faddeeva_w(-z / SQRT_2)?)
    }
}

/// The real function `e^{x^2} (sign(x) - erf(x))` whose level set defines `x*`.
/// Undefined at `x = 0`, where it jumps from `-1` to `1`.
pub fn g_tilde(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    if x == 0.0 {
        return Err(Error::Domain("g_tilde jumps at x = 0".into()));
    }
    Ok(erfcx_nonneg(x.abs()).copysign(x))
}

pub fn k_crit(tau: f64) -> Result<f64> {
    ensure_tau(tau)?;
    Ok(S_CRIT / tau)
}

/// Root of `sqrt(pi/2) e^{x^2} (sign(x) - erf(x)) = s`, odd in `s`.
pub fn solve_x_star(s: f64) -> Result<f64> {
    ensure_finite("s", s)?;
    if s == 0.0 {
        return Err(Error::Degenerate);
    }
    let a = s.abs();
    if a >= S_CRIT {
        return Err(Error::NoDiscreteSpectrum { k: a, k_crit: S_CRIT });
    }
    let x = solve_positive(a)?;
    Ok(x.copysign(s))
}

fn point_residual(x: f64, a: f64) -> f64 {
    (S_CRIT * erfcx_nonneg(x) - a).abs()
}

/// Safeguarded Newton on `erfcx(x) - target` for `0 < a < sqrt(pi/2)`.
fn solve_positive(a: f64) -> Result<f64> {
    let target = a / S_CRIT;
    let x0 = 1.0 / (SQRT_PI * target);
    let mut lo = 0.5 * x0;
    let mut hi = 2.0 * x0 + 1.0;
    if erfcx_nonneg(lo) < target {
        lo = 0.0;
    }
    // erfcx is decreasing, so f(lo) >= 0 >= f(hi).
    let f = |x: f64| erfcx_nonneg(x) - target;
    let mut x = x0.clamp(lo, hi);
    let mut last_step = f64::INFINITY;
    for it in 0..MAX_NEWTON {
        let fx = f(x);
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if fx == 0.0 {
            return Ok(x);
        }
        // f'(x) = 2x erfcx(x) - 2/sqrt(pi), written without cancellation.
        let dfx = -FRAC_2_SQRT_PI * erfcx_defect(x);
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        // Newton has stalled: switch to bisection.
        if it > 8 && step > 0.5 * last_step {
            x = 0.5 * (lo + hi);
        }
        last_step = step;
    }
    let r = point_residual(x, a);
    if r <= ROOT_TOL * a.max(1.0) {
        Ok(x)
    } else {
        Err(Error::Convergence {
            iterations: MAX_NEWTON,
            residual: r,
        })
    }
}

/// Slow eigenvalue `lambda*(k, tau) = -1/tau + sqrt(2) k x*(k tau)`.
pub fn lambda_star(q: DispersionQuery) -> Result<DispersionResult> {
    let q = DispersionQuery::new(q.k, q.tau)?;
    if q.k == 0.0 {
        return Err(Error::Degenerate);
    }
    let kc = S_CRIT / q.tau;
    if q.k.abs() >= kc {
        return Err(Error::NoDiscreteSpectrum {
            k: q.k,
            k_crit: kc,
        });
    }
    let s = q.s();
    let x = solve_x_star(s).map_err(|e| match e {
        // k tau can round up to sqrt(pi/2) although |k| < k_crit.
        Error::NoDiscreteSpectrum { .. } => Error::NoDiscreteSpectrum {
            k: q.k,
            k_crit: kc,
        },
        other => other,
    })?;
    // At the root sqrt(2) k x tau = sqrt(pi) |x| erfcx(|x|).
    let lambda = -erfcx_defect(x.abs()) / q.tau;
    Ok(DispersionResult {
        k: q.k,
        tau: q.tau,
        x_star: x,
        lambda_star: lambda,
        eps: (2.0 / PI).sqrt() * s,
        residual: point_residual(x.abs(), s.abs()),
        in_range: true,
    })
}

/// Evaluates [`lambda_star`] over many wave numbers in parallel. Entries
/// outside `0 < |k| < k_crit` come back with `in_range = false` and NaN fields.
pub fn sweep(ks: &[f64], tau: f64) -> Result<Vec<DispersionResult>> {
    use rayon::prelude::*;
    ensure_tau(tau)?;
    ks.par_iter()
        .map(|&k| match lambda_star(DispersionQuery { k, tau }) {
            Ok(r) => Ok(r),
            Err(Error::Degenerate) | Err(Error::NoDiscreteSpectrum { .. }) => {
                Ok(DispersionResult {
                    k,
                    tau,
                    x_star: f64::NAN,
                    lambda_star: f64::NAN,
                    eps: (2.0 / PI).sqrt() * k * tau,
                    residual: f64::NAN,
                    in_range: false,
                })
            }
            Err(e) => Err(e),
        })
        .collect()
}

/// Truncated small-`tau` expansion of `lambda*` at `order` 1, 3 or 5.
pub fn lambda_series(q: DispersionQuery, order: u32) -> Result<f64> {
    let q = DispersionQuery::new(q.k, q.tau)?;
    let k2 = q.k * q.k;
    let t = q.tau;
    let o1 = -k2 * t;
    let o3 = k2 * k2 * t * t * t;
    let o5 = -4.0 * k2 * k2 * k2 * t.powi(5);
    match order {
        1 => Ok(o1),
        3 => Ok(o1 + o3),
        5 => Ok(o1 + o3 + o5),
        _ => Err(Error::Domain(format!(
            "series order must be 1, 3 or 5, got {order}"
        ))),
    }
}

/// Coefficients of the small-`eps` inversion of `erfcx(1/y) = eps` and of the
/// induced expansion of `lambda*`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    /// `c_n` with `y*(eps) = sum c_n eps^n`, index `n = 0..=n_max`.
    pub y_star_coeffs: Vec<f64>,
    /// Exact `c_n / pi^{n/2}`.
    pub y_star_rational: Vec<BigRational>,
    /// `lambda_coeffs[p]` multiplies `k^{p+1} tau^p` in `lambda*`.
    pub lambda_coeffs: Vec<f64>,
    pub lambda_rational: Vec<BigRational>,
}

pub const MAX_BUERMANN_ORDER: usize = 12;

/// Lagrange-Buermann coefficients `c_n = (1/n!) d^{n-1}/dy^{n-1} (y/phi(y))^n`
/// at `y = 0`, with `phi(y) = erfcx(1/y)`.
///
/// The derivatives are read off the asymptotic expansion
/// `phi(y) = (y/sqrt(pi)) sum_m (-1)^m (2m-1)!! (y^2/2)^m`, in exact arithmetic.
pub fn buermann_coefficients(n_max: usize) -> Result<SeriesCoefficients> {
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if n_max > MAX_BUERMANN_ORDER {
        return Err(Error::Conditioning(format!(
            "n_max = {n_max} exceeds {MAX_BUERMANN_ORDER}"
        )));
    }
    let len = n_max + 1;
    // P(y) = sqrt(pi) phi(y) / y
    let mut p = vec![BigRational::zero(); len];
    let mut dfact = BigInt::one();
    for m in 0..len / 2 + 1 {
        if 2 * m >= len {
            break;
        }
        if m > 0 {
            dfact *= BigInt::from(2 * m - 1);
        }
        let mut c = BigRational::new(dfact.clone(), BigInt::one() << m);
        if m % 2 == 1 {
            c = -c;
        }
        p[2 * m] = c;
    }
    let inv = series_inverse(&p);
    // r_n = [y^{n-1}] P^{-n} / n
    let mut r = vec![BigRational::zero(); len];
    let mut pow = vec![BigRational::zero(); len];
    pow[0] = BigRational::one();
    for n in 1..len {
        pow = series_mul(&pow, &inv);
        r[n] = pow[n - 1].clone() / BigRational::from_integer(BigInt::from(n));
    }
    let y_star_coeffs: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(n, c)| c.to_f64().unwrap_or(f64::NAN) * PI.powf(0.5 * n as f64))
        .collect();

    // lambda* tau = -u/(1+u) in s = k tau, u = sum_{n>=2} (c_n/c_1) eps^{n-1};
    // eps^{n-1} pi^{(n-1)/2} = 2^{(n-1)/2} s^{n-1}, rational for odd n.
    let mut u = vec![BigRational::zero(); len];
    for n in 2..len {
        if r[n].is_zero() {
            continue;
        }
        if n % 2 == 0 {
            return Err(Error::Numeric(format!(
                "unexpected even-order inversion coefficient c_{n}"
            )));
        }
        let two_pow = BigRational::from_integer(BigInt::one() << ((n - 1) / 2));
        u[n - 1] = &r[n] * two_pow;
    }
    let mut one_plus_u = u.clone();
    one_plus_u[0] = BigRational::one();
    let lam_tau: Vec<BigRational> = series_mul(&u, &series_inverse(&one_plus_u))
        .into_iter()
        .map(|c| -c)
        .collect();
    // lambda* = sum_m a_m k^m tau^{m-1}; drop m = 0 (which vanishes).
    let lambda_rational: Vec<BigRational> = lam_tau[1..n_max].to_vec();
    let lambda_coeffs = lambda_rational
        .iter()
        .map(|c| c.to_f64().unwrap_or(f64::NAN))
        .collect();
    Ok(SeriesCoefficients {
        y_star_coeffs,
        y_star_rational: r,
        lambda_coeffs,
        lambda_rational,
    })
}

fn series_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().min(b.len());
    let mut out = vec![BigRational::zero(); n];
    for i in 0..n {
        if a[i].is_zero() {
            continue;
        }
        for j in 0..n - i {
            if !b[j].is_zero() {
                out[i + j] += &a[i] * &b[j];
            }
        }
    }
    out
}

/// Reciprocal of a power series with non-zero constant term.
fn series_inverse(a: &[BigRational]) -> Vec<BigRational> {
    let n = a.len();
    let mut out = vec![BigRational::zero(); n];
    out[0] = a[0].recip();
    for m in 1..n {
        let mut acc = BigRational::zero();
        for j in 1..=m {
            if !a[j].is_zero() {
                acc += &a[j] * &out[m - j];
            }
        }
        out[m] = -acc * &out[0];
    }
    out
}
