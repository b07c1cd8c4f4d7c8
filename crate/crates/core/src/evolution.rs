//! Density evolution on a periodic domain under the exact closure, the
//! Chapman-Enskog truncations and the truncated kinetic moment system.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::dispersion::{self, DispersionQuery, S_CRIT};
use crate::error::{ensure_finite, ensure_tau, Error, Result};
use crate::operator::{self, build_truncated, TruncatedOperator};
use crate::tridiag::norm2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `rho = (2 pi)^{1/4} f_0` for the normalised Hermite basis.
pub fn density_scale() -> f64 {
    (2.0 * PI).powf(0.25)
}

/// RK4 is stable for `h |z| <= RK4_RADIUS` with `Re z <= 0`.
pub const RK4_RADIUS: f64 = 2.5;
/// Smallest moment truncation accepted by [`kinetic_evolve`].
pub const MIN_MOMENTS: usize = 16;

/// A real periodic density on `[0, length)` with its discrete Fourier
/// coefficients `modes[j] = (1/n) sum_m samples[m] e^{-2 pi i j m / n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub length: f64,
    pub n_grid: usize,
    pub samples: Vec<f64>,
    pub modes: Vec<Complex64>,
}

fn check_grid(length: f64, n: usize) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Config(format!("domain length must be > 0, got {length}")));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Config(format!("grid size must be a power of two >= 2, got {n}")));
    }
    Ok(())
}

impl SpectralField {
    pub fn from_samples(length: f64, samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        check_grid(length, n)?;
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("field samples must be finite".into()));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let inv = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= inv);
        Ok(Self {
            length,
            n_grid: n,
            samples,
            modes: buf,
        })
    }

    /// Builds the field from Fourier coefficients, which must be conjugate
    /// symmetric up to rounding (the imaginary part of the samples is dropped).
    pub fn from_modes(length: f64, modes: Vec<Complex64>) -> Result<Self> {
        let n = modes.len();
        check_grid(length, n)?;
        if modes.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numeric("non-finite Fourier coefficient".into()));
        }
        let mut buf = modes.clone();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        Ok(Self {
            length,
            n_grid: n,
            samples: buf.iter().map(|c| c.re).collect(),
            modes,
        })
    }

    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(length, n)?;
        let h = length / n as f64;
        Self::from_samples(length, (0..n).map(|j| f(j as f64 * h)).collect())
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.length / self.n_grid as f64
    }

    /// Signed index of mode `j`: `j` for `j <= n/2`, `j - n` above.
    pub fn signed_index(&self, j: usize) -> i64 {
        if j <= self.n_grid / 2 {
            j as i64
        } else {
            j as i64 - self.n_grid as i64
        }
    }

    pub fn wave_number(&self, j: usize) -> f64 {
        2.0 * PI * self.signed_index(j) as f64 / self.length
    }

    /// Discrete `l2` norm `sqrt(sum |rho_j|^2 / n)`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.n_grid as f64).sqrt()
    }

    /// Largest violation of `modes[n-j] = conj(modes[j])`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_grid;
        (0..n)
            .map(|j| (self.modes[(n - j) % n] - self.modes[j].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Hermite moments of one Fourier mode at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub k: f64,
    pub n: usize,
    pub coeffs: Vec<Complex64>,
    pub t: f64,
}

impl MomentState {
    /// Local equilibrium `f = rho_hat M(v)`: only `f_0` is populated.
    pub fn equilibrium(k: f64, n: usize, rho_hat: Complex64) -> Self {
        let mut coeffs = vec![ZERO; n];
        coeffs[0] = rho_hat / density_scale();
        Self { k, n, coeffs, t: 0.0 }
    }

    /// Arbitrary Hermite coefficients at `t = 0`.
    pub fn from_coeffs(k: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Domain("need at least two moments".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("non-finite moment".into()));
        }
        ensure_finite("k", k)?;
        Ok(Self { k, n: coeffs.len(), coeffs, t: 0.0 })
    }

    /// White start: real and imaginary parts of every moment uniform in
    /// `[-amp/2, amp/2)`, drawn from ChaCha8 with the given seed and stream.
    pub fn white(k: f64, n: usize, amp: f64, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let coeffs = (0..n)
            .map(|_| amp * Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        Self::from_coeffs(k, coeffs)
    }

    pub fn density(&self) -> Complex64 {
        self.coeffs[0] * density_scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    ClosureExact,
    CeOrder1,
    CeOrder3,
    CeOrder5,
    KineticTruncated,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::ClosureExact => "closure_exact",
            Model::CeOrder1 => "ce_order1",
            Model::CeOrder3 => "ce_order3",
            Model::CeOrder5 => "ce_order5",
            Model::KineticTruncated => "kinetic_truncated",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "closure_exact" | "closure" => Model::ClosureExact,
            "ce_order1" => Model::CeOrder1,
            "ce_order3" => Model::CeOrder3,
            "ce_order5" => Model::CeOrder5,
            "kinetic_truncated" | "kinetic" => Model::KineticTruncated,
            _ => return Err(Error::Config(format!("unknown model '{s}'"))),
        })
    }

    fn ce_order(&self) -> Option<u32> {
        match self {
            Model::CeOrder1 => Some(1),
            Model::CeOrder3 => Some(3),
            Model::CeOrder5 => Some(5),
            _ => None,
        }
    }
}

/// Treatment of modes with `|k| >= k_crit` under the exact closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupercriticalPolicy {
    /// Decay at the essential-spectrum rate `e^{-t/tau}`.
    DampEssential,
    /// Remove the mode for `t > 0`.
    ZeroMode,
}

impl SupercriticalPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            SupercriticalPolicy::DampEssential => "damp_essential",
            SupercriticalPolicy::ZeroMode => "zero_mode",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "damp_essential" => Ok(SupercriticalPolicy::DampEssential),
            "zero_mode" => Ok(SupercriticalPolicy::ZeroMode),
            _ => Err(Error::Config(format!("unknown supercritical policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub model: Model,
    pub tau: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_moments: usize,
    pub supercritical_policy: SupercriticalPolicy,
    /// Record every `save_every`-th step.
    pub save_every: usize,
}

impl EvolveConfig {
    pub fn new(model: Model, tau: f64, dt: f64, t_end: f64) -> Self {
        Self {
            model,
            tau,
            dt,
            t_end,
            n_moments: 64,
            supercritical_policy: SupercriticalPolicy::DampEssential,
            save_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_tau(self.tau).map_err(|e| Error::Config(e.to_string()))?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.save_every == 0 {
            return Err(Error::Config("save_every must be >= 1".into()));
        }
        if self.model == Model::KineticTruncated && self.n_moments < MIN_MOMENTS {
            return Err(Error::Config(format!(
                "kinetic model needs n_moments >= {MIN_MOMENTS}, got {}",
                self.n_moments
            )));
        }
        Ok(())
    }

    /// Number of steps and the step actually taken (`t_end / steps`).
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, 0.0);
        }
        let steps = (self.t_end / self.dt).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }

    /// Output times `0, h s, 2 h s, ...` plus `t_end`.
    pub fn output_times(&self) -> Vec<f64> {
        let (steps, h) = self.steps();
        let mut out: Vec<f64> = (0..=steps)
            .filter(|i| i % self.save_every == 0 || *i == steps)
            .map(|i| if i == steps { self.t_end } else { i as f64 * h })
            .collect();
        out.dedup();
        out
    }

    /// Largest stable step for `T_n(k)`.
    pub fn stability_limit(&self, k: f64) -> f64 {
        kinetic_step_limit(k, self.tau, self.n_moments)
    }
}

/// `RK4_RADIUS / (1/tau + 2 |k| sqrt(n))`, from a bound on the spectral radius.
pub fn kinetic_step_limit(k: f64, tau: f64, n: usize) -> f64 {
    RK4_RADIUS / (1.0 / tau + 2.0 * k.abs() * (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

/// Per-mode exponent of the exact closure; `None` marks a zeroed mode.
pub fn closure_rate(k: f64, tau: f64, policy: SupercriticalPolicy) -> Result<Option<f64>> {
    if k == 0.0 {
        return Ok(Some(0.0));
    }
    match dispersion::lambda_star(DispersionQuery::new(k, tau)?) {
        Ok(r) => Ok(Some(r.lambda_star)),
        Err(Error::NoDiscreteSpectrum { .. }) => Ok(match policy {
            SupercriticalPolicy::DampEssential => Some(-1.0 / tau),
            SupercriticalPolicy::ZeroMode => None,
        }),
        Err(e) => Err(e),
    }
}

fn exponential_trajectory(
    field0: &SpectralField,
    cfg: &EvolveConfig,
    rates: &[Option<f64>],
) -> Result<Trajectory<SpectralField>> {
    let times = cfg.output_times();
    let states = times
        .par_iter()
        .map(|&t| {
            let modes: Vec<Complex64> = field0
                .modes
                .iter()
                .zip(rates)
                .map(|(&c, r)| match r {
                    _ if t == 0.0 || c == ZERO => c,
                    Some(rate) => c * (rate * t).exp(),
                    None => ZERO,
                })
                .collect();
            if modes.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::Numeric(format!("mode amplitude overflowed at t = {t}")));
            }
            SpectralField::from_modes(field0.length, modes)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, states })
}

/// `rho_hat(k, t) = e^{lambda*(k) t} rho_hat(k, 0)` for every mode.
pub fn closure_evolve(field0: &SpectralField, cfg: &EvolveConfig) -> Result<Trajectory<SpectralField>> {
    cfg.validate()?;
    if cfg.model != Model::ClosureExact {
        return Err(Error::Config(format!("closure_evolve got model {}", cfg.model.name())));
    }
    let rates = (0..field0.n_grid)
        .into_par_iter()
        .map(|j| closure_rate(field0.wave_number(j), cfg.tau, cfg.supercritical_policy))
        .collect::<Result<Vec<_>>>()?;
    exponential_trajectory(field0, cfg, &rates)
}

/// Exact per-mode exponentials with the truncated series multiplier.
pub fn ce_evolve(field0: &SpectralField, cfg: &EvolveConfig) -> Result<Trajectory<SpectralField>> {
    cfg.validate()?;
    let order = cfg
        .model
        .ce_order()
        .ok_or_else(|| Error::Config(format!("ce_evolve got model {}", cfg.model.name())))?;
    let rates = (0..field0.n_grid)
        .map(|j| {
            dispersion::lambda_series(DispersionQuery::new(field0.wave_number(j), cfg.tau)?, order).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    exponential_trajectory(field0, cfg, &rates)
}

fn rk4_step(op: &TruncatedOperator, y: &mut [Complex64], h: f64, tmp: &mut [Vec<Complex64>; 2]) {
    let n = y.len();
    let k1 = op.matvec(y);
    for i in 0..n {
        tmp[0][i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = op.matvec(&tmp[0]);
    for i in 0..n {
        tmp[0][i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = op.matvec(&tmp[0]);
    for i in 0..n {
        tmp[0][i] = y[i] + h * k3[i];
    }
    let k4 = op.matvec(&tmp[0]);
    for i in 0..n {
        tmp[1][i] = k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i];
        y[i] += h / 6.0 * tmp[1][i];
    }
}

/// Integrates `dF/dt = T_n(k) F` with classical RK4 and hard truncation
/// `f_n = 0`.
pub fn kinetic_evolve(state0: &MomentState, cfg: &EvolveConfig) -> Result<Trajectory<MomentState>> {
    cfg.validate()?;
    if cfg.model != Model::KineticTruncated {
        return Err(Error::Config(format!("kinetic_evolve got model {}", cfg.model.name())));
    }
    if state0.coeffs.len() != cfg.n_moments {
        return Err(Error::Config(format!(
            "state has {} moments, config expects {}",
            state0.coeffs.len(),
            cfg.n_moments
        )));
    }
    let (steps, h) = cfg.steps();
    let limit = cfg.stability_limit(state0.k);
    if h > limit {
        return Err(Error::Config(format!(
            "dt = {h} exceeds the RK4 stability limit {limit} at k = {}",
            state0.k
        )));
    }
    let op = build_truncated(state0.k, cfg.tau, cfg.n_moments)?;
    let mut y = state0.coeffs.clone();
    let mut tmp = [vec![ZERO; y.len()], vec![ZERO; y.len()]];
    let mut times = vec![0.0];
    let mut states = vec![MomentState {
        t: 0.0,
        ..state0.clone()
    }];
    for i in 1..=steps {
        rk4_step(&op, &mut y, h, &mut tmp);
        if i % cfg.save_every == 0 || i == steps {
            if y.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::Numeric(format!("kinetic state diverged at step {i}")));
            }
            let t = if i == steps { cfg.t_end } else { i as f64 * h };
            times.push(t);
            states.push(MomentState {
                k: state0.k,
                n: cfg.n_moments,
                coeffs: y.clone(),
                t,
            });
        }
    }
    Ok(Trajectory { times, states })
}

/// Kinetic evolution of a density field started in local equilibrium.
pub fn kinetic_evolve_field(field0: &SpectralField, cfg: &EvolveConfig) -> Result<Trajectory<SpectralField>> {
    cfg.validate()?;
    let per_mode = (0..field0.n_grid)
        .into_par_iter()
        .map(|j| {
            let c = field0.modes[j];
            let k = field0.wave_number(j);
            let state = MomentState::equilibrium(k, cfg.n_moments, c);
            kinetic_evolve(&state, cfg).map(|tr| tr.states.iter().map(|s| s.density()).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let times = cfg.output_times();
    let states = (0..times.len())
        .map(|i| SpectralField::from_modes(field0.length, per_mode.iter().map(|m| m[i]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times, states })
}

/// Dispatches on `cfg.model`.
pub fn evolve(field0: &SpectralField, cfg: &EvolveConfig) -> Result<Trajectory<SpectralField>> {
    match cfg.model {
        Model::ClosureExact => closure_evolve(field0, cfg),
        Model::CeOrder1 | Model::CeOrder3 | Model::CeOrder5 => ce_evolve(field0, cfg),
        Model::KineticTruncated => kinetic_evolve_field(field0, cfg),
    }
}

/// Gauss-Hermite rule for `int g(v) e^{-v^2/2} dv` (Golub-Welsch).
pub fn gauss_hermite(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::Domain("quadrature order must be >= 1".into()));
    }
    let mut j = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        let b = (i as f64).sqrt();
        j[(i - 1, i)] = b;
        j[(i, i - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], (2.0 * PI).sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// Normalised Hermite functions `H_0(v), ..., H_{n-1}(v)` with
/// `int H_a H_b e^{-v^2/2} dv = delta_ab`.
pub fn hermite_normalized(v: f64, n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    if n == 0 {
        return h;
    }
    h[0] = 1.0 / density_scale();
    if n > 1 {
        h[1] = v * h[0];
    }
    for j in 1..n.saturating_sub(1) {
        let jf = j as f64;
        h[j + 1] = (v * h[j] - jf.sqrt() * h[j - 1]) / (jf + 1.0).sqrt();
    }
    h
}

fn check_quadrature(n: usize, m: usize) -> Result<()> {
    if m < 2 * n {
        return Err(Error::Domain(format!(
            "quadrature order {m} is below 2n = {} for {n} moments",
            2 * n
        )));
    }
    Ok(())
}

/// `f_j = int f(v) H_j(v) dv`, `j < n`, for a distribution `f` that decays
/// like the Maxwellian, using an `m`-point rule.
pub fn hermite_project(f_of_v: impl Fn(f64) -> f64, n: usize, m: usize) -> Result<Vec<f64>> {
    hermite_project_weighted(|v| f_of_v(v) * (0.5 * v * v).exp(), n, m)
}

/// As [`hermite_project`] for `g(v) = f(v) e^{v^2/2}` given directly.
pub fn hermite_project_weighted(g: impl Fn(f64) -> f64, n: usize, m: usize) -> Result<Vec<f64>> {
    check_quadrature(n, m)?;
    let (nodes, weights) = gauss_hermite(m)?;
    let samples: Vec<f64> = nodes.iter().map(|&v| g(v)).collect();
    project_samples(&nodes, &weights, &samples, n)
}

/// Projection from values of `g = f e^{v^2/2}` at the nodes of [`gauss_hermite`].
pub fn hermite_project_sampled(samples: &[f64], n: usize) -> Result<Vec<f64>> {
    check_quadrature(n, samples.len())?;
    let (nodes, weights) = gauss_hermite(samples.len())?;
    project_samples(&nodes, &weights, samples, n)
}

fn project_samples(nodes: &[f64], weights: &[f64], g: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n];
    for ((&v, &w), &gv) in nodes.iter().zip(weights).zip(g) {
        ensure_finite("profile value", gv)?;
        for (o, h) in out.iter_mut().zip(hermite_normalized(v, n)) {
            *o += w * gv * h;
        }
    }
    Ok(out)
}

/// One row of [`attraction_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttractionRow {
    pub mode: usize,
    pub k: f64,
    pub excluded: bool,
    pub lambda_star: f64,
    /// `lambda* + 1/tau`.
    pub gap: f64,
    /// Envelope slope of `ln |rho_kin - rho_slow|` after `0.2 tau`.
    pub fitted_rate: f64,
    /// `|rho_kin - rho_closure| / |rho_closure|` at `t_end`, closure started at `rho_hat(0)`.
    pub mismatch: f64,
    /// Same against the closure started from the slow projection.
    pub projected_mismatch: f64,
}

/// Kinetic evolution of one mode compared against the
/// slow-mode closure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAttraction {
    pub times: Vec<f64>,
    /// `|rho_kin(t) - e^{lambda* t} c v_0 (2 pi)^{1/4}|`.
    pub deviation: Vec<f64>,
    pub kinetic: Vec<Complex64>,
    /// Density carried by the slow mode at `t = 0`: `c v_0 (2 pi)^{1/4}`
    /// with `c` the amplitude of `F(0)` along `v` in the bilinear form.
    pub slow_density: Complex64,
    pub lambda_star: f64,
    /// Slow eigenvalue of the truncation itself.
    pub lambda_truncated: Complex64,
    pub fitted_rate: f64,
}

/// Start of the fit window in units of `tau`.
pub const FIT_START: f64 = 0.2;

/// Least-squares slope of `ln y` against `t` over `t >= t0` where `y > floor`.
pub fn fit_log_slope(t: &[f64], y: &[f64], t0: f64, floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(&ti, &yi)| ti >= t0 && yi > floor)
        .map(|(&ti, &yi)| (ti, yi.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

/// Slope of the decay envelope: `[t0, t_last]` is cut into blocks of width
/// `block`, and a line is fitted to `ln max y` per block at the time of that
/// maximum. Oscillating signals with near-zero crossings fit cleanly this way.
pub fn fit_log_envelope(t: &[f64], y: &[f64], t0: f64, block: f64, floor: f64) -> f64 {
    if !(block > 0.0) {
        return f64::NAN;
    }
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    let mut current: Option<(usize, f64, f64)> = None;
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < t0 || !yi.is_finite() {
            continue;
        }
        let b = ((ti - t0) / block).floor() as usize;
        match current {
            Some((cb, _, my)) if cb == b => {
                if yi > my {
                    current = Some((b, ti, yi));
                }
            }
            _ => {
                if let Some((_, pt, py)) = current {
                    peaks.push((pt, py));
                }
                current = Some((b, ti, yi));
            }
        }
    }
    if let Some((_, pt, py)) = current {
        peaks.push((pt, py));
    }
    let (pt, py): (Vec<f64>, Vec<f64>) = peaks.into_iter().unzip();
    fit_log_slope(&pt, &py, t0, floor)
}

/// Runs the kinetic system for a single subcritical mode from `state0` and
/// measures its approach to the slow manifold.
pub fn mode_attraction(state0: &MomentState, tau: f64, t_end: f64, dt: f64) -> Result<ModeAttraction> {
    let k = state0.k;
    let n_moments = state0.n;
    let r = dispersion::lambda_star(DispersionQuery::new(k, tau)?)?;
    let op = build_truncated(k, tau, n_moments)?;
    let guess = operator::default_guess(k, tau)?;
    let (lam_n, slow) = operator::slow_eigenvalue_truncated(&op, guess, 100)?;
    let v = &slow.coeffs;
    let num: Complex64 = v.iter().zip(&state0.coeffs).map(|(a, b)| a * b).sum();
    let den: Complex64 = v.iter().map(|a| a * a).sum();
    let c = num / den;
    let mut cfg = EvolveConfig::new(Model::KineticTruncated, tau, dt, t_end);
    cfg.n_moments = n_moments;
    let tr = kinetic_evolve(state0, &cfg)?;
    let scale = density_scale();
    let kinetic: Vec<Complex64> = tr.states.iter().map(|s| s.density()).collect();
    let slow_density = c * v[0] * scale;
    let deviation: Vec<f64> = tr
        .times
        .iter()
        .zip(&kinetic)
        .map(|(&t, &rk)| (rk - (lam_n * t).exp() * slow_density).norm())
        .collect();
    let size = norm2(&state0.coeffs) * scale;
    let floor = ENVELOPE_FLOOR * size.max(f64::MIN_POSITIVE);
    let fitted_rate = fit_log_envelope(&tr.times, &deviation, FIT_START * tau, tau, floor);
    Ok(ModeAttraction {
        times: tr.times,
        deviation,
        kinetic,
        slow_density,
        lambda_star: r.lambda_star,
        lambda_truncated: lam_n,
        fitted_rate,
    })
}

/// Relative level below which deviation samples are ignored by the fit. It
/// sits above the rounding plateau of the integrator and the error of the
/// slow projection.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Kinetic initial state used per mode by [`attraction_report_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractionStart {
    /// Local equilibrium carrying the field's Fourier coefficient.
    Equilibrium,
    /// [`MomentState::white`] scaled by the mode's amplitude; mode `j` uses
    /// stream `j`.
    White { seed: u64 },
}

impl AttractionStart {
    pub fn name(&self) -> &'static str {
        match self {
            AttractionStart::Equilibrium => "equilibrium",
            AttractionStart::White { .. } => "white",
        }
    }
}

/// Per-mode attraction diagnostics for the populated modes `j = 1..=n/2`,
/// each started from local equilibrium.
pub fn attraction_report(field0: &SpectralField, tau: f64, n_moments: usize, t_end: f64) -> Result<Vec<AttractionRow>> {
    attraction_report_with(field0, tau, n_moments, t_end, AttractionStart::Equilibrium)
}

/// [`attraction_report`] with a choice of kinetic start.
pub fn attraction_report_with(
    field0: &SpectralField,
    tau: f64,
    n_moments: usize,
    t_end: f64,
    start: AttractionStart,
) -> Result<Vec<AttractionRow>> {
    ensure_tau(tau)?;
    if n_moments < MIN_MOMENTS {
        return Err(Error::Config(format!("n_moments must be >= {MIN_MOMENTS}")));
    }
    let scale = field0.modes.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let populated: Vec<usize> = (1..=field0.n_grid / 2)
        .filter(|&j| field0.modes[j].norm() > 1e-14 * scale && scale > 0.0)
        .collect();
    populated
        .par_iter()
        .map(|&j| {
            let k = field0.wave_number(j).abs();
            let rho0 = field0.modes[j];
            if k * tau >= S_CRIT {
                return Ok(AttractionRow {
                    mode: j,
                    k,
                    excluded: true,
                    lambda_star: f64::NAN,
                    gap: f64::NAN,
                    fitted_rate: f64::NAN,
                    mismatch: f64::NAN,
                    projected_mismatch: f64::NAN,
                });
            }
            let dt = attraction_step(k, tau, n_moments);
            let state0 = match start {
                AttractionStart::Equilibrium => MomentState::equilibrium(k, n_moments, rho0),
                AttractionStart::White { seed } => MomentState::white(k, n_moments, rho0.norm(), seed, j as u64)?,
            };
            let rho0 = state0.density();
            let a = mode_attraction(&state0, tau, t_end, dt)?;
            let t = *a.times.last().unwrap_or(&0.0);
            let end = *a.kinetic.last().unwrap_or(&rho0);
            let closure = rho0 * (a.lambda_star * t).exp();
            let slow_end = a.slow_density_at_end();
            let projected = (end - slow_end).norm();
            Ok(AttractionRow {
                mode: j,
                k,
                excluded: false,
                lambda_star: a.lambda_star,
                gap: a.lambda_star + 1.0 / tau,
                fitted_rate: a.fitted_rate,
                mismatch: (end - closure).norm() / closure.norm(),
                projected_mismatch: projected / slow_end.norm(),
            })
        })
        .collect()
}

impl ModeAttraction {
    pub fn slow_density_at_end(&self) -> Complex64 {
        let t = *self.times.last().unwrap_or(&0.0);
        self.slow_density * (self.lambda_truncated * t).exp()
    }
}

/// Step used by [`attraction_report`]: `tau/400`, capped by stability.
pub fn attraction_step(k: f64, tau: f64, n: usize) -> f64 {
    (tau / 400.0).min(0.5 * kinetic_step_limit(k, tau, n))
}

/// Relative departure `|| F/||F|| - v/||v|| ||` with the phase of `F`
/// aligned to `v` first.
pub fn ray_departure(f: &[Complex64], v: &[Complex64]) -> f64 {
    let dot: Complex64 = v.iter().zip(f).map(|(a, b)| a.conj() * b).sum();
    let phase = if dot.norm() > 0.0 { dot / dot.norm() } else { Complex64::new(1.0, 0.0) };
    let nf = norm2(f);
    let nv = norm2(v);
    let d: Vec<Complex64> = f.iter().zip(v).map(|(a, b)| a / (nf * phase) - b / nv).collect();
    norm2(&d)
}
