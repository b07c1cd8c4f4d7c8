//! Fixed-point big-integer reference implementations used as test oracles.
//! A value `a` stands for `a / 2^bits`.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug)]
pub struct Fx {
    pub bits: u64,
}

impl Fx {
    pub fn new(bits: u64) -> Self {
        Self { bits }
    }

    pub fn one(&self) -> BigInt {
        BigInt::one() << self.bits
    }

    pub fn from_f64(&self, x: f64) -> BigInt {
        let r = BigRational::from_float(x).expect("finite");
        (r.numer() << self.bits) / r.denom()
    }

    pub fn from_int(&self, n: i64) -> BigInt {
        BigInt::from(n) << self.bits
    }

    pub fn to_f64(&self, a: &BigInt) -> f64 {
        BigRational::new(a.clone(), self.one()).to_f64().unwrap()
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a * b) >> self.bits
    }

    pub fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        (a << self.bits) / b
    }

    pub fn sqrt(&self, a: &BigInt) -> BigInt {
        (a << self.bits).sqrt()
    }

    fn atan_inv(&self, n: i64) -> BigInt {
        let n2 = BigInt::from(n * n);
        let mut power = self.one() / n;
        let mut sum = BigInt::zero();
        let mut k: i64 = 0;
        while !power.is_zero() {
            let t = &power / (2 * k + 1);
            if k % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
            power /= &n2;
            k += 1;
        }
        sum
    }

    /// Machin's formula.
    pub fn pi(&self) -> BigInt {
        let g = Fx::new(self.bits + 16);
        let p = g.atan_inv(5) * 16 - g.atan_inv(239) * 4;
        p >> 16
    }

    pub fn exp(&self, a: &BigInt) -> BigInt {
        if a.is_negative() {
            return self.div(&self.one(), &self.exp(&-a));
        }
        let r = (a.bits() as i64 - self.bits as i64 + 4).max(0) as u64;
        let g = Fx::new(self.bits + r + 16);
        let y = (a << (r + 16)) >> r;
        let mut term = g.one();
        let mut sum = g.one();
        let mut n = 1u64;
        while !term.is_zero() {
            term = g.mul(&term, &y) / n;
            sum += &term;
            n += 1;
        }
        for _ in 0..r {
            sum = g.mul(&sum, &sum);
        }
        sum >> (r + 16)
    }

    /// `(cos b, sin b)` by direct Taylor series; fine for moderate `|b|`.
    pub fn cos_sin(&self, b: &BigInt) -> (BigInt, BigInt) {
        let mut term = self.one();
        let mut c = BigInt::zero();
        let mut s = BigInt::zero();
        let mut n = 0u64;
        while !term.is_zero() || n < 2 {
            match n % 4 {
                0 => c += &term,
                1 => s += &term,
                2 => c -= &term,
                _ => s -= &term,
            }
            n += 1;
            term = self.mul(&term, b) / n;
        }
        (c, s)
    }
}

fn bits_for(x2: f64, factor: f64) -> u64 {
    (factor * x2 * std::f64::consts::LOG2_E).ceil() as u64 + 160
}

/// `sum_n (-1)^n x^{2n+1} / (n! (2n+1))` (alternating) or the positive
/// variant.
fn odd_series(fx: &Fx, x: &BigInt, alternating: bool) -> BigInt {
    let x2 = fx.mul(x, x);
    let mut t = x.clone();
    let mut sum = BigInt::zero();
    let mut n: u64 = 0;
    loop {
        let term = &t / (2 * n + 1);
        if term.is_zero() && n > 0 {
            break;
        }
        if alternating && n % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        n += 1;
        t = fx.mul(&t, &x2) / n;
    }
    sum
}

fn erf_fixed(fx: &Fx, x: &BigInt) -> BigInt {
    let s = odd_series(fx, x, true);
    let sqrt_pi = fx.sqrt(&fx.pi());
    fx.div(&(s * 2), &sqrt_pi)
}

/// erf from its Maclaurin series.
pub fn erf(x: f64) -> f64 {
    let fx = Fx::new(bits_for(x * x, 1.0));
    fx.to_f64(&erf_fixed(&fx, &fx.from_f64(x)))
}

/// `e^{x^2} (1 - erf x)` for `x <= 8` by the series, beyond that by the
/// asymptotic expansion truncated at its smallest term.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        let fx = Fx::new(bits_for(x * x, 2.0));
        let xb = fx.from_f64(x);
        let e = fx.exp(&fx.mul(&xb, &xb));
        return fx.to_f64(&(e * 2)) - erfcx(-x);
    }
    if x <= 8.0 {
        let fx = Fx::new(bits_for(x * x, 2.0));
        let xb = fx.from_f64(x);
        let c = fx.one() - erf_fixed(&fx, &xb);
        let e = fx.exp(&fx.mul(&xb, &xb));
        return fx.to_f64(&fx.mul(&e, &c));
    }
    let fx = Fx::new(256);
    let xb = fx.from_f64(x);
    let inv2x2 = fx.div(&fx.one(), &(fx.mul(&xb, &xb) * 2));
    let mut term = fx.one();
    let mut sum = fx.one();
    let mut n: i64 = 1;
    loop {
        let next = fx.mul(&term, &inv2x2) * (2 * n - 1);
        if next.abs() >= term.abs() || next.is_zero() {
            break;
        }
        term = -next;
        sum += &term;
        n += 1;
    }
    let sqrt_pi = fx.sqrt(&fx.pi());
    fx.to_f64(&fx.div(&sum, &fx.mul(&xb, &sqrt_pi)))
}

/// `1 - erf x` computed with enough bits to survive the cancellation.
pub fn erfc(x: f64) -> f64 {
    let fx = Fx::new(bits_for(x * x, 2.0));
    let xb = fx.from_f64(x);
    fx.to_f64(&(fx.one() - erf_fixed(&fx, &xb)))
}

/// Dawson's function `e^{-x^2} sum x^{2n+1} / (n! (2n+1))`; every term is
/// positive.
pub fn dawson(x: f64) -> f64 {
    let fx = Fx::new(bits_for(x * x, 1.0));
    let xb = fx.from_f64(x);
    let s = odd_series(&fx, &xb, false);
    let e = fx.exp(&-fx.mul(&xb, &xb));
    fx.to_f64(&fx.mul(&e, &s))
}

/// `w(z) = e^{-z^2} (1 + (2i/sqrt(pi)) sum z^{2n+1} / (n! (2n+1)))`.
pub fn faddeeva_w(z: Complex64) -> Complex64 {
    let fx = Fx::new(bits_for(z.norm_sqr(), 2.0));
    let (x, y) = (fx.from_f64(z.re), fx.from_f64(z.im));
    let z2 = (fx.mul(&x, &x) - fx.mul(&y, &y), fx.mul(&x, &y) * 2);
    let mut t = (x.clone(), y.clone());
    let mut s = (BigInt::zero(), BigInt::zero());
    let mut n: u64 = 0;
    loop {
        let a = &t.0 / (2 * n + 1);
        let b = &t.1 / (2 * n + 1);
        if a.is_zero() && b.is_zero() && n > 0 {
            break;
        }
        s.0 += a;
        s.1 += b;
        n += 1;
        let re = fx.mul(&t.0, &z2.0) - fx.mul(&t.1, &z2.1);
        let im = fx.mul(&t.0, &z2.1) + fx.mul(&t.1, &z2.0);
        t = (re / n, im / n);
    }
    let sqrt_pi = fx.sqrt(&fx.pi());
    let k = fx.div(&fx.from_int(2), &sqrt_pi);
    // 1 + i k s
    let inner = (fx.one() - fx.mul(&k, &s.1), fx.mul(&k, &s.0));
    let mag = fx.exp(&-z2.0.clone());
    let (c, sn) = fx.cos_sin(&-z2.1.clone());
    let e = (fx.mul(&mag, &c), fx.mul(&mag, &sn));
    let re = fx.mul(&e.0, &inner.0) - fx.mul(&e.1, &inner.1);
    let im = fx.mul(&e.0, &inner.1) + fx.mul(&e.1, &inner.0);
    Complex64::new(fx.to_f64(&re), fx.to_f64(&im))
}

/// Relative error against the reference `b`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn rel_c(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Log-spaced grid of `n` points in `[a, b]`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}
