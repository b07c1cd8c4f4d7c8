//! Complex tridiagonal LU with partial pivoting (the LAPACK `gttrf`/`gtts2`
//! scheme, which introduces one extra superdiagonal).

use num_complex::Complex64;

pub(crate) struct TriLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
    /// Index of the first exactly zero pivot, which was replaced by `tiny`.
    pub singular_at: Option<usize>,
}

impl TriLu {
    /// Factors `tridiag(sub, diag, sup)`; zero pivots are replaced by `tiny`.
    pub fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], tiny: f64) -> Self {
        let n = diag.len();
        debug_assert!(sub.len() + 1 == n && sup.len() + 1 == n);
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let mut singular_at = None;
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] == Complex64::new(0.0, 0.0) {
                    singular_at.get_or_insert(i);
                    d[i] = Complex64::new(tiny, 0.0);
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == Complex64::new(0.0, 0.0) {
            singular_at.get_or_insert(n - 1);
            d[n - 1] = Complex64::new(tiny, 0.0);
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
            singular_at,
        }
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// `y = A x` for the symmetric tridiagonal `A = tridiag(off, diag, off)`.
pub(crate) fn sym_matvec(diag: &[Complex64], off: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut y: Vec<Complex64> = diag.iter().zip(x).map(|(d, v)| d * v).collect();
    for j in 0..n.saturating_sub(1) {
        y[j] += off[j] * x[j + 1];
        y[j + 1] += off[j] * x[j];
    }
    y
}

pub(crate) fn norm2(x: &[Complex64]) -> f64 {
    // Scaled to avoid overflow for unnormalised iterates.
    let scale = x.iter().map(|v| v.re.abs().max(v.im.abs())).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale).norm_sqr()).sum::<f64>().sqrt()
}
