//! Chapman-Enskog expansion of the raw velocity moments
//! `M_n = int v^n f dv` in powers of `tau`.
//!
//! Writing `M_n = sum_j tau^j m_{n,j}` with `m_{n,j} = r_{n,j} (ik)^j rho` and
//! collecting powers of `tau` in
//! `d/dt M_n = -ik M_{n+1} - (M_n - M_n^eq)/tau`, `d/dt rho = -ik M_1`, gives
//!
//! * `r_{n,0} = (n-1)!!` for even `n` and `0` for odd `n`,
//! * `r_{n,p+1} = -r_{n+1,p} + sum_{i+j=p} r_{n,j} r_{1,i}`,
//!
//! and the density multiplier `d/dt rho = -sum_j r_{1,j} (ik)^{j+1} tau^j rho`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{ensure_finite, ensure_tau, Error, Result};

pub const MAX_CE_ORDER: usize = 7;

/// `(l-1)!!` for even `l`, `0` for odd `l` (per unit density).
pub fn equilibrium_moment(l: i64) -> Result<BigRational> {
    if l < 0 {
        return Err(Error::Domain(format!("moment index must be >= 0, got {l}")));
    }
    Ok(BigRational::from_integer(double_factorial_even(l as usize)))
}

fn double_factorial_even(l: usize) -> BigInt {
    if l % 2 == 1 {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    let mut m = 1usize;
    while m < l {
        acc *= BigInt::from(m);
        m += 2;
    }
    acc
}

/// Generator of the raw-moment system truncated to `n` moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub n: usize,
    pub k: f64,
    pub tau: f64,
    pub rows: DMatrix<Complex64>,
}

pub fn build_moment_matrix(k: f64, tau: f64, n: usize) -> Result<MomentMatrix> {
    ensure_finite("k", k)?;
    ensure_tau(tau)?;
    if n < 2 {
        return Err(Error::Domain(format!("moment count must be >= 2, got {n}")));
    }
    let mut rows = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for l in 0..n {
        if l > 0 {
            rows[(l, l)] = Complex64::new(-1.0 / tau, 0.0);
        }
        if l + 1 < n {
            rows[(l, l + 1)] = Complex64::new(0.0, -k);
        }
        if l >= 2 && l % 2 == 0 {
            let eq = double_factorial_even(l).to_f64().unwrap_or(f64::INFINITY);
            rows[(l, 0)] += Complex64::new(eq / tau, 0.0);
        }
    }
    Ok(MomentMatrix { n, k, tau, rows })
}

/// One term `coeff * k^k_power * tau^tau_power` of the density multiplier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CETerm {
    pub tau_power: u32,
    pub k_power: u32,
    pub coeff: BigRational,
}

/// Density multiplier of the Chapman-Enskog expansion through `max_tau_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct CEMultiplier {
    pub max_tau_order: usize,
    /// Non-zero terms, ascending in `tau_power`.
    pub terms: Vec<CETerm>,
    /// `r[n][j]` for `n + j <= max_tau_order + 1`.
    r: Vec<Vec<BigRational>>,
}

impl CEMultiplier {
    /// Coefficient `r` with `m_{n,j} = r (ik)^j rho`, if it was computed.
    pub fn moment_coefficient(&self, n: usize, j: usize) -> Option<&BigRational> {
        self.r.get(n).and_then(|row| row.get(j))
    }

    /// `m_{n,j}` per unit density at wave number `k`.
    pub fn moment(&self, n: usize, j: usize, k: f64) -> Option<Complex64> {
        let r = self.moment_coefficient(n, j)?.to_f64()?;
        Some(r * Complex64::new(0.0, k).powu(j as u32))
    }

    /// The multiplier evaluated at `(k, tau)`.
    pub fn evaluate(&self, k: f64, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff.to_f64().unwrap_or(f64::NAN) * k.powi(t.k_power as i32) * tau.powi(t.tau_power as i32)
            })
            .sum()
    }

    /// Terms with `tau_power <= order`.
    pub fn truncated(&self, order: u32) -> Vec<CETerm> {
        self.terms.iter().filter(|t| t.tau_power <= order).cloned().collect()
    }
}

/// Runs the recursion in exact rational arithmetic.
pub fn ce_recursion(max_tau_order: usize) -> Result<CEMultiplier> {
    if max_tau_order > MAX_CE_ORDER {
        return Err(Error::Resource(format!(
            "Chapman-Enskog order {max_tau_order} exceeds {MAX_CE_ORDER}"
        )));
    }
    let jmax = max_tau_order;
    let nmax = jmax + 1;
    let mut r: Vec<Vec<BigRational>> = (0..=nmax + 1)
        .map(|n| vec![BigRational::zero(); (nmax + 1 - n.min(nmax + 1)).max(1)])
        .collect();
    for (n, row) in r.iter_mut().enumerate() {
        row[0] = BigRational::from_integer(double_factorial_even(n));
    }
    // Layer p+1 needs layer p at n+1 and the r_{1,i}, i <= p, already final.
    for p in 0..jmax {
        for n in 0..=(nmax - p - 1) {
            let mut v = -r[n + 1][p].clone();
            for j in 0..=p {
                let (a, b) = (&r[n][j], &r[1][p - j]);
                if !a.is_zero() && !b.is_zero() {
                    v += a * b;
                }
            }
            r[n][p + 1] = v;
        }
    }
    let mut terms = Vec::new();
    for j in 0..=jmax {
        let c = &r[1][j];
        if c.is_zero() {
            continue;
        }
        if j % 2 == 0 {
            return Err(Error::Numeric(format!(
                "parity violated: imaginary multiplier term at tau^{j}"
            )));
        }
        // -(ik)^{j+1} = -(-1)^{(j+1)/2} k^{j+1}
        let sign_neg = ((j + 1) / 2) % 2 == 0;
        let coeff = if sign_neg { -c.clone() } else { c.clone() };
        terms.push(CETerm {
            tau_power: j as u32,
            k_power: j as u32 + 1,
            coeff,
        });
    }
    Ok(CEMultiplier {
        max_tau_order,
        terms,
        r,
    })
}

/// Formats an exact rational as `p` or `p/q`.
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// `true` when every odd equilibrium moment up to `l_max` vanishes.
pub fn odd_moments_vanish(l_max: i64) -> bool {
    (0..=l_max)
        .filter(|l| l % 2 == 1)
        .all(|l| equilibrium_moment(l).map(|m| m.is_zero()).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(x: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(x))
    }

    #[test]
    fn equilibrium_values() {
        assert_eq!(equilibrium_moment(0).unwrap(), int(1));
        assert_eq!(equilibrium_moment(2).unwrap(), int(1));
        assert_eq!(equilibrium_moment(3).unwrap(), int(0));
        assert_eq!(equilibrium_moment(4).unwrap(), int(3));
        assert_eq!(equilibrium_moment(8).unwrap(), int(105));
        assert!(equilibrium_moment(-1).is_err());
        assert!(odd_moments_vanish(41));
    }

    #[test]
    fn moment_matrix_block() {
        let m = build_moment_matrix(2.0, 0.5, 6).unwrap();
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(m.rows[(0, 0)], c(0.0, 0.0));
        assert_eq!(m.rows[(0, 1)], c(0.0, -2.0));
        assert_eq!(m.rows[(1, 0)], c(0.0, 0.0));
        assert_eq!(m.rows[(1, 1)], c(-2.0, 0.0));
        assert_eq!(m.rows[(2, 0)], c(2.0, 0.0));
        assert_eq!(m.rows[(3, 0)], c(0.0, 0.0));
        assert_eq!(m.rows[(4, 0)], c(6.0, 0.0));
        assert_eq!(m.rows[(5, 4)], c(0.0, 0.0));
        assert!(build_moment_matrix(1.0, 0.1, 1).is_err());
    }

    #[test]
    fn multiplier_low_orders() {
        let m = ce_recursion(3).unwrap();
        assert_eq!(
            m.terms,
            vec![
                CETerm { tau_power: 1, k_power: 2, coeff: int(-1) },
                CETerm { tau_power: 3, k_power: 4, coeff: int(1) },
            ]
        );
        assert_eq!(ce_recursion(1).unwrap().terms.len(), 1);
    }

    #[test]
    fn first_moment_coefficients() {
        let m = ce_recursion(5).unwrap();
        assert_eq!(m.moment_coefficient(1, 0), Some(&int(0)));
        // m_{1,1} = -ik, m_{1,2} = 0, m_{1,3} = -(ik)^3 = i k^3
        assert_eq!(m.moment_coefficient(1, 1), Some(&int(-1)));
        assert_eq!(m.moment_coefficient(1, 2), Some(&int(0)));
        assert_eq!(m.moment_coefficient(1, 3), Some(&int(-1)));
        let m13 = m.moment(1, 3, 2.0).unwrap();
        assert!((m13 - Complex64::new(0.0, 8.0)).norm() < 1e-15);
    }

    #[test]
    fn order_limit() {
        assert!(matches!(ce_recursion(8), Err(Error::Resource(_))));
        assert!(ce_recursion(7).is_ok());
    }

    #[test]
    fn rational_format() {
        assert_eq!(format_rational(&int(-4)), "-4");
        assert_eq!(format_rational(&BigRational::new(BigInt::from(3), BigInt::from(8))), "3/8");
    }
}
