//! Dense complex linear-algebra helpers shared by every module.
//!
//! Scalar math goes through `libm` so results do not depend on the host's
//! standard library.

use alloc::vec::Vec;
use nalgebra::linalg::{Cholesky, SymmetricEigen};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const LN_2: f64 = core::f64::consts::LN_2;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn log2_1p(x: f64) -> f64 {
    libm::log1p(x) / LN_2
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `e^{j theta}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::new(libm::cos(theta), libm::sin(theta))
}

/// Phase angle of `z` in `(-pi, pi]`.
#[inline]
pub fn arg(z: C64) -> f64 {
    libm::atan2(z.im, z.re)
}

#[inline]
pub fn abs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Real inner product `Re tr(A^H B)`.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn fro_norm(a: &CMat) -> f64 {
    sqrt(a.iter().map(|z| z.norm_sqr()).sum())
}

pub fn vec_norm(v: &CVec) -> f64 {
    sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    let ah = a.adjoint();
    (a + ah).scale(0.5)
}

/// Largest entrywise deviation `|A - A^H|`.
pub fn hermitian_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    if a.ncols() != n {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = abs(a[(i, j)] - a[(j, i)].conj());
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

/// `a a^H`.
pub fn outer(a: &CVec) -> CMat {
    a * a.adjoint()
}

/// `a^H X a` for Hermitian `X` (real part).
pub fn quad_form(x: &CMat, a: &CVec) -> f64 {
    a.dotc(&(x * a)).re
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Cyclic complex Jacobi sweeps that drive the Hermitian `m` to diagonal
/// form, accumulating the rotations into the columns of `v`.
fn jacobi_polish(m: &mut CMat, v: &mut CMat) {
    let n = m.nrows();
    let scale = fro_norm(m).max(f64::MIN_POSITIVE);
    for _ in 0..30 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if sqrt(off) <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = abs(apq);
                if r <= 1e-19 * scale {
                    continue;
                }
                let phase = apq.unscale(r).conj();
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                let (jpp, jpq) = (C64::new(c, 0.0), C64::new(s, 0.0));
                let (jqp, jqq) = (phase.scale(-s), phase.scale(c));
                for k in 0..n {
                    let (xp, xq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = xp * jpp + xq * jqp;
                    m[(k, q)] = xp * jpq + xq * jqq;
                    let (yp, yq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = yp * jpp + yq * jqp;
                    v[(k, q)] = yp * jpq + yq * jqq;
                }
                for k in 0..n {
                    let (xp, xq) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = jpp.conj() * xp + jqp.conj() * xq;
                    m[(q, k)] = jpq.conj() * xp + jqq.conj() * xq;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
            }
        }
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored column-wise, in the order of `values`.
    pub vectors: CMat,
}

impl HermEig {
    pub fn new(a: &CMat) -> Self {
        let n = a.nrows();
        if n == 0 {
            return Self { values: Vec::new(), vectors: CMat::zeros(0, 0) };
        }
        let h = hermitian_part(a);
        let mut basis = SymmetricEigen::new(h.clone()).eigenvectors;
        let mut m = hermitian_part(&(basis.adjoint() * &h * &basis));
        jacobi_polish(&mut m, &mut basis);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
        let values = order.iter().map(|&i| m[(i, i)].re).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &basis.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(f(lambda)) V^H`.
    pub fn rebuild(&self, f: impl Fn(f64) -> f64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.vectors.adjoint()
    }

    /// Factor `F` with `F F^H` equal to the positive part of the matrix,
    /// dropping eigenvalues below `rel_floor * max(|lambda|)`.
    pub fn psd_factor(&self, rel_floor: f64) -> CMat {
        let n = self.vectors.nrows();
        let top = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = top * rel_floor;
        let keep: Vec<usize> = (0..self.values.len()).filter(|&k| self.values[k] > floor && self.values[k] > 0.0).collect();
        let mut f = CMat::zeros(n, keep.len());
        for (dst, &k) in keep.iter().enumerate() {
            let s = sqrt(self.values[k]);
            f.set_column(dst, &(self.vectors.column(k) * C64::new(s, 0.0)));
        }
        f
    }
}

/// `log det(M)` in nats for Hermitian positive definite `M`.
pub fn logdet_hpd(m: &CMat) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    Some((0..m.nrows()).map(|i| 2.0 * ln(l[(i, i)].re)).sum())
}

/// Pairwise (cascade) summation, independent of how the caller shards work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error `s / sqrt(n)`.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, sqrt(var / n as f64))
}

pub fn cvec_from_fn(n: usize, f: impl FnMut(usize) -> C64) -> CVec {
    let mut f = f;
    DVector::from_fn(n, |i, _| f(i))
}
