//! Truncations of the moment operator `T(k)` and its slow eigenpair.
//!
//! `T(k)` acts on the Hermite moments `(f_0, f_1, ...)` as
//! `(T f)_n = -i k (sqrt(n) f_{n-1} + sqrt(n+1) f_{n+1}) - f_n / tau` for
//! `n >= 1` with the relaxation term absent at `n = 0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::dispersion::{self, DispersionQuery, S_CRIT};
use crate::error::{ensure_finite, ensure_tau, Error, Result};
use crate::specfun;
use crate::tridiag::{norm2, sym_matvec, TriLu};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Target of the inverse iteration: `||T v - lambda v|| <= EIG_TOL ||v||`.
pub const EIG_TOL: f64 = 1e-10;
/// Forward recurrence results above this residual switch to the backward sweep.
pub const RECURRENCE_TOL: f64 = 1e-8;
/// Largest coefficient index supported by [`eigenvector_generating`].
pub const GENERATING_MAX: usize = 60;

/// Leading `n x n` block of `T(k)`, a complex symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub n: usize,
    pub k: f64,
    pub tau: f64,
    pub diag: Vec<Complex64>,
    pub offdiag: Vec<Complex64>,
}

pub fn build_truncated(k: f64, tau: f64, n: usize) -> Result<TruncatedOperator> {
    ensure_finite("k", k)?;
    ensure_tau(tau)?;
    if n < 2 {
        return Err(Error::Domain(format!("truncation size must be >= 2, got {n}")));
    }
    let mut diag = vec![Complex64::new(-1.0 / tau, 0.0); n];
    diag[0] = ZERO;
    let offdiag = (0..n - 1)
        .map(|j| Complex64::new(0.0, -k * ((j + 1) as f64).sqrt()))
        .collect();
    Ok(TruncatedOperator {
        n,
        k,
        tau,
        diag,
        offdiag,
    })
}

impl TruncatedOperator {
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        sym_matvec(&self.diag, &self.offdiag, x)
    }

    /// `||T v - lambda v|| / ||v||` after zero-padding or truncating `v` to `n`.
    pub fn residual_rel(&self, lambda: Complex64, v: &[Complex64]) -> f64 {
        let mut x = v.to_vec();
        x.resize(self.n, ZERO);
        let tv = self.matvec(&x);
        let r: Vec<Complex64> = tv.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
        norm2(&r) / norm2(&x)
    }

    /// Row-sum bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i > 0 {
                    s += self.offdiag[i - 1].norm();
                }
                if i + 1 < self.n {
                    s += self.offdiag[i].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diag.clone()));
        for (j, &o) in self.offdiag.iter().enumerate() {
            m[(j, j + 1)] = o;
            m[(j + 1, j)] = o;
        }
        m
    }

    /// Isolated slow eigenpair near `guess`; see [`slow_eigenvalue_truncated`].
    pub fn slow_eigenpair(&self, guess: Complex64, max_iter: usize) -> Result<SlowEigenvector> {
        slow_eigenvalue_truncated(self, guess, max_iter).map(|(_, v)| v)
    }
}

/// The rescaled operator `T_1 = S - R_1/(i k tau)`, whose spectrum maps onto
/// that of `T(k)` through `lambda = -i k zeta - 1/tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledOperator {
    pub n: usize,
    pub k: f64,
    pub tau: f64,
    pub diag: Vec<Complex64>,
    pub offdiag: Vec<Complex64>,
}

pub fn build_rescaled(k: f64, tau: f64, n: usize) -> Result<RescaledOperator> {
    ensure_finite("k", k)?;
    ensure_tau(tau)?;
    if k == 0.0 {
        return Err(Error::Degenerate);
    }
    if n < 2 {
        return Err(Error::Domain(format!("truncation size must be >= 2, got {n}")));
    }
    let mut diag = vec![ZERO; n];
    diag[0] = -ONE / Complex64::new(0.0, k * tau);
    let offdiag = (0..n - 1)
        .map(|j| Complex64::new(((j + 1) as f64).sqrt(), 0.0))
        .collect();
    Ok(RescaledOperator {
        n,
        k,
        tau,
        diag,
        offdiag,
    })
}

impl RescaledOperator {
    /// Eigenvalue of `T_1` nearest `guess`, by the same inverse iteration.
    pub fn eigenvalue_near(&self, guess: Complex64, max_iter: usize) -> Result<Complex64> {
        let scale = 1.0 + self.diag[0].norm() + 2.0 * (self.n as f64).sqrt();
        inverse_iteration(&self.diag, &self.offdiag, guess, max_iter, scale).map(|r| r.lambda)
    }

    /// Maps an eigenvalue of `T_1` to the corresponding eigenvalue of `T(k)`.
    pub fn map_to_t(&self, zeta: Complex64) -> Complex64 {
        Complex64::new(0.0, -self.k) * zeta - 1.0 / self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    RecurrenceForward,
    RecurrenceBackward,
    GeneratingFunction,
    InverseIteration,
}

impl EigenMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EigenMethod::RecurrenceForward => "recurrence_forward",
            EigenMethod::RecurrenceBackward => "recurrence_backward",
            EigenMethod::GeneratingFunction => "generating_function",
            EigenMethod::InverseIteration => "inverse_iteration",
        }
    }
}

/// Slow-mode moment coefficients, normalised to `coeffs[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowEigenvector {
    pub k: f64,
    pub tau: f64,
    pub coeffs: Vec<Complex64>,
    pub lambda: Complex64,
    /// `||T_n f - lambda f|| / ||f||` with `n = coeffs.len()`.
    pub residual_rel: f64,
    pub method: EigenMethod,
}

impl SlowEigenvector {
    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// Residual against another truncation of the same `T(k)`.
    pub fn residual_against(&self, n: usize) -> Result<f64> {
        Ok(build_truncated(self.k, self.tau, n)?.residual_rel(self.lambda, &self.coeffs))
    }

    /// `|coeffs[n-1]| / max_j |coeffs[j]|`.
    pub fn tail_ratio(&self) -> f64 {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs.last().map_or(0.0, |c| c.norm()) / max
    }
}

/// Shift recommended for the slow eigenvalue: the order-5 series for
/// `|k tau| <= 0.2`, the root-solved value otherwise.
pub fn default_guess(k: f64, tau: f64) -> Result<Complex64> {
    let q = DispersionQuery::new(k, tau)?;
    if k == 0.0 {
        return Ok(ZERO);
    }
    if q.s().abs() <= 0.2 {
        return Ok(Complex64::new(dispersion::lambda_series(q, 5)?, 0.0));
    }
    Ok(Complex64::new(dispersion::lambda_star(q)?.lambda_star, 0.0))
}

struct IterResult {
    lambda: Complex64,
    vector: Vec<Complex64>,
}

fn rayleigh(diag: &[Complex64], off: &[Complex64], v: &[Complex64]) -> Complex64 {
    let tv = sym_matvec(diag, off, v);
    let num: Complex64 = v.iter().zip(&tv).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    num / den
}

fn residual_of(diag: &[Complex64], off: &[Complex64], lambda: Complex64, v: &[Complex64]) -> f64 {
    let tv = sym_matvec(diag, off, v);
    let r: Vec<Complex64> = tv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
    norm2(&r) / norm2(v)
}

fn normalize(v: &mut [Complex64]) {
    let s = norm2(v);
    v.iter_mut().for_each(|x| *x /= s);
}

fn shifted_lu(diag: &[Complex64], off: &[Complex64], shift: Complex64, scale: f64) -> TriLu {
    let d: Vec<Complex64> = diag.iter().map(|x| x - shift).collect();
    TriLu::factor(off, &d, off, f64::EPSILON * f64::EPSILON * scale)
}

/// Fixed-shift inverse iteration followed by one Rayleigh-quotient step.
fn inverse_iteration(
    diag: &[Complex64],
    off: &[Complex64],
    guess: Complex64,
    max_iter: usize,
    scale: f64,
) -> Result<IterResult> {
    let n = diag.len();
    let mut v = vec![ZERO; n];
    v[0] = ONE;
    let lu = shifted_lu(diag, off, guess, scale);
    if lu.singular_at.is_some() {
        // The shift is an eigenvalue of the matrix.
        lu.solve_in_place(&mut v);
        normalize(&mut v);
        return Ok(IterResult {
            lambda: guess,
            vector: v,
        });
    }
    let mut lambda = guess;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..max_iter.max(1) {
        lu.solve_in_place(&mut v);
        normalize(&mut v);
        lambda = rayleigh(diag, off, &v);
        residual = residual_of(diag, off, lambda, &v);
        if residual <= EIG_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: max_iter,
            residual,
        });
    }
    // Rayleigh refinement.
    let lu = shifted_lu(diag, off, lambda, scale);
    let mut w = v.clone();
    lu.solve_in_place(&mut w);
    if w.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        normalize(&mut w);
        let mu = rayleigh(diag, off, &w);
        let r = residual_of(diag, off, mu, &w);
        if r <= residual {
            return Ok(IterResult {
                lambda: mu,
                vector: w,
            });
        }
    }
    Ok(IterResult { lambda, vector: v })
}

/// Estimate of the eigenvalue nearest `lambda` other than `lambda` itself,
/// by inverse iteration with the slow direction projected out in the
/// bilinear form `x^T y` (eigenvectors of a complex symmetric matrix are
/// orthogonal in it).
fn nearest_other(
    diag: &[Complex64],
    off: &[Complex64],
    lambda: Complex64,
    v: &[Complex64],
    scale: f64,
) -> Complex64 {
    let n = diag.len();
    if n < 2 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    let vtv: Complex64 = v.iter().map(|a| a * a).sum();
    let project = |x: &mut Vec<Complex64>| {
        let c: Complex64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<Complex64>() / vtv;
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= c * vi);
    };
    let h = 1e-3 * (1.0 + lambda.norm());
    let lu = shifted_lu(diag, off, lambda + Complex64::new(h, h), scale);
    let mut x: Vec<Complex64> = (0..n).map(|j| Complex64::new(1.0, 0.3 * j as f64)).collect();
    project(&mut x);
    for _ in 0..30 {
        lu.solve_in_place(&mut x);
        project(&mut x);
        normalize(&mut x);
    }
    rayleigh(diag, off, &x)
}

/// Isolated eigenpair of `op` nearest `guess` by shift-invert inverse
/// iteration with complex tridiagonal LU solves.
pub fn slow_eigenvalue_truncated(
    op: &TruncatedOperator,
    guess: Complex64,
    max_iter: usize,
) -> Result<(Complex64, SlowEigenvector)> {
    ensure_finite("Re guess", guess.re)?;
    ensure_finite("Im guess", guess.im)?;
    let scale = op.norm_bound().max(1.0);
    let it = inverse_iteration(&op.diag, &op.offdiag, guess, max_iter, scale)?;
    let other = nearest_other(&op.diag, &op.offdiag, it.lambda, &it.vector, scale);
    if (other - it.lambda).norm() <= 10.0 * EIG_TOL * scale {
        return Err(Error::Conditioning(format!(
            "eigenvalue {} is not isolated (another estimate at {other})",
            it.lambda
        )));
    }
    let mut coeffs = it.vector;
    let c0 = coeffs[0];
    if c0.norm() > 0.0 {
        coeffs.iter_mut().for_each(|x| *x /= c0);
    }
    let vec = SlowEigenvector {
        k: op.k,
        tau: op.tau,
        residual_rel: op.residual_rel(it.lambda, &coeffs),
        coeffs,
        lambda: it.lambda,
        method: EigenMethod::InverseIteration,
    };
    Ok((it.lambda, vec))
}

/// Eigenvalues of the dense truncation, sorted by descending real part.
pub fn ritz_values(op: &TruncatedOperator) -> Result<Vec<Complex64>> {
    let m = op.to_dense();
    let ev = m
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("dense eigenvalue solve failed".into()))?;
    let mut out: Vec<Complex64> = ev.iter().copied().collect();
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// `mu(k) = (1/tau + lambda) / (i k)`.
pub fn mu(k: f64, tau: f64, lambda: f64) -> Complex64 {
    Complex64::new(0.0, -(1.0 / tau + lambda) / k)
}

/// `sigma(k) = mu(k) - lambda/(i k) = 1/(i k tau)`.
pub fn sigma(k: f64, tau: f64) -> Complex64 {
    Complex64::new(0.0, -1.0 / (k * tau))
}

fn check_eigen_args(k: f64, tau: f64, lambda: f64) -> Result<()> {
    ensure_finite("k", k)?;
    ensure_tau(tau)?;
    ensure_finite("lambda", lambda)?;
    if k == 0.0 {
        return Err(Error::Degenerate);
    }
    if (k * tau).abs() >= S_CRIT {
        return Err(Error::NoDiscreteSpectrum {
            k,
            k_crit: S_CRIT / tau,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecurrenceDirection {
    Forward,
    /// Backward sweep from the hard truncation `f_n = 0`.
    Backward,
    /// Forward, switching to backward when the residual exceeds [`RECURRENCE_TOL`].
    Auto,
}

/// Slow eigenvector from the three-term recurrence of the moment equations,
/// `sqrt(n+1) f_{n+1} = -sqrt(n) f_{n-1} - mu f_n` with `f_0 = 1` and
/// `f_1 = i lambda / k`.
pub fn eigenvector_recurrence(k: f64, tau: f64, lambda: f64, n: usize) -> Result<SlowEigenvector> {
    eigenvector_recurrence_with(k, tau, lambda, n, RecurrenceDirection::Auto)
}

pub fn eigenvector_recurrence_with(
    k: f64,
    tau: f64,
    lambda: f64,
    n: usize,
    direction: RecurrenceDirection,
) -> Result<SlowEigenvector> {
    check_eigen_args(k, tau, lambda)?;
    let op = build_truncated(k, tau, n)?;
    let m = mu(k, tau, lambda);
    let lam = Complex64::new(lambda, 0.0);
    let make = |coeffs: Vec<Complex64>, method| SlowEigenvector {
        k,
        tau,
        residual_rel: op.residual_rel(lam, &coeffs),
        coeffs,
        lambda: lam,
        method,
    };
    let forward = || {
        let mut f = vec![ZERO; n];
        f[0] = ONE;
        f[1] = Complex64::new(0.0, lambda / k);
        for j in 1..n - 1 {
            let jf = j as f64;
            f[j + 1] = -(jf.sqrt() * f[j - 1] + m * f[j]) / (jf + 1.0).sqrt();
        }
        make(f, EigenMethod::RecurrenceForward)
    };
    let backward = || {
        let mut f = vec![ZERO; n + 1];
        f[n - 1] = ONE;
        for j in (1..n).rev() {
            let jf = j as f64;
            f[j - 1] = -(m * f[j] + (jf + 1.0).sqrt() * f[j + 1]) / jf.sqrt();
            if f[j - 1].norm() > 1e150 {
                f[j - 1..].iter_mut().for_each(|x| *x *= 1e-150);
            }
        }
        f.truncate(n);
        let f0 = f[0];
        f.iter_mut().for_each(|x| *x /= f0);
        make(f, EigenMethod::RecurrenceBackward)
    };
    let v = match direction {
        RecurrenceDirection::Forward => forward(),
        RecurrenceDirection::Backward => backward(),
        RecurrenceDirection::Auto => {
            let v = forward();
            if v.residual_rel <= RECURRENCE_TOL {
                v
            } else {
                backward()
            }
        }
    };
    if v.coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::Numeric("recurrence produced non-finite coefficients".into()));
    }
    Ok(v)
}

/// Slow eigenvector `f_0..=f_{n_max}` from the Taylor coefficients of the
/// generating function
/// `Gamma(z) = e^{-z(2 mu + z)/2} (1 - sqrt(2) sigma D(mu/sqrt(2))) + sqrt(2) sigma D((mu + z)/sqrt(2))`
/// with `f_n = sqrt(n!) [z^n] Gamma`.
///
/// The Gaussian factor is expanded about `0` and Dawson's function about
/// `mu/sqrt(2)`, where it is evaluated on the imaginary axis. The two parts
/// cancel in the high coefficients; a propagated rounding bound above
/// `1e-6` of the vector norm is reported as a conditioning error.
pub fn eigenvector_generating(k: f64, tau: f64, lambda: f64, n_max: usize) -> Result<SlowEigenvector> {
    check_eigen_args(k, tau, lambda)?;
    if n_max > GENERATING_MAX {
        return Err(Error::Resource(format!(
            "generating-function coefficients are limited to n_max <= {GENERATING_MAX}, got {n_max}"
        )));
    }
    let len = n_max + 1;
    let m = mu(k, tau, lambda);
    let s = sigma(k, tau);
    // a = mu/sqrt(2) = -i b
    let a = m / SQRT_2;
    let b = -a.im;
    let d_a = Complex64::new(0.0, -specfun::dawson_imag(b)?);
    let amp = ONE - SQRT_2 * s * d_a;

    // Series in h = z/sqrt(2). Gaussian factor e^{-h^2} e^{-2 a h}.
    let mut lin = vec![ZERO; len];
    lin[0] = ONE;
    for j in 1..len {
        lin[j] = lin[j - 1] * (-2.0 * a) / j as f64;
    }
    let mut quad = vec![0.0; len];
    quad[0] = 1.0;
    for j in (2..len).step_by(2) {
        quad[j] = -quad[j - 2] / (j / 2) as f64;
    }
    let mut gauss = vec![ZERO; len];
    for i in 0..len {
        for j in (0..len - i).step_by(2) {
            gauss[i + j] += lin[i] * quad[j];
        }
    }
    // Taylor coefficients of D about a from D' = 1 - 2 x D.
    let mut daw = vec![ZERO; len];
    daw[0] = d_a;
    if len > 1 {
        daw[1] = ONE - 2.0 * a * d_a;
    }
    for j in 1..len.saturating_sub(1) {
        daw[j + 1] = (-2.0 * a * daw[j] - 2.0 * daw[j - 1]) / (j + 1) as f64;
    }

    let mut coeffs = vec![ZERO; len];
    let mut bound = vec![0.0; len];
    // sqrt(n!) / 2^{n/2}
    let mut scale = 1.0;
    for j in 0..len {
        if j > 0 {
            scale *= (j as f64 / 2.0).sqrt();
        }
        let p = amp * gauss[j];
        let q = SQRT_2 * s * daw[j];
        coeffs[j] = (p + q) * scale;
        bound[j] = 8.0 * (j as f64 + 1.0) * f64::EPSILON * (p.norm() + q.norm()) * scale;
    }
    let c0 = coeffs[0];
    coeffs.iter_mut().for_each(|c| *c /= c0);
    let err = bound.iter().map(|x| x * x).sum::<f64>().sqrt() / c0.norm() / norm2(&coeffs);
    if !(err <= 1e-6) {
        return Err(Error::Conditioning(format!(
            "generating-function coefficients lost accuracy (bound {err:e})"
        )));
    }
    let lam = Complex64::new(lambda, 0.0);
    let op = build_truncated(k, tau, len.max(2))?;
    Ok(SlowEigenvector {
        k,
        tau,
        residual_rel: op.residual_rel(lam, &coeffs),
        coeffs,
        lambda: lam,
        method: EigenMethod::GeneratingFunction,
    })
}

/// Normwise relative distance `||a - b|| / ||b||` over the first `n` entries.
pub fn relative_distance(a: &[Complex64], b: &[Complex64], n: usize) -> f64 {
    let n = n.min(a.len()).min(b.len());
    let d: Vec<Complex64> = a[..n].iter().zip(&b[..n]).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(&b[..n])
}
