//! Gauss–Laguerre quadrature and the rank-one eavesdropper expectation `F1`.
//!
//! `F1(t, n) = E[ln(1 + t X)]` for `X ~ Gamma(n, 1)`, which is the mean of
//! `ln(1 + rho_e |H^H g|^2)` when `H` has `n` i.i.d. CN(0,1) columns and
//! `t = rho_e |g|^2`.

use alloc::vec::Vec;
use once_cell::race::OnceBox;

use crate::error::{invalid, Result};
use crate::linalg::{exp, lgamma, ln, ln_1p};

/// `(L_n(z), L_{n-1}(z))` by the three-term recurrence.
fn laguerre_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
    }
    (p1, p2)
}

/// Nodes and weights for `int_0^inf f(x) e^{-x} dx`.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Rule of the given order via Newton iteration on Laguerre polynomials.
    pub fn new(order: usize) -> Self {
        let n = order;
        let nf = n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut z = 0.0f64;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2])
                }
            };
            for _ in 0..100 {
                let (p1, p2) = laguerre_pair(n, z);
                let pp = nf * (p1 - p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z {
                    break;
                }
            }
            let (_, p2) = laguerre_pair(n, z);
            nodes.push(z);
            // w_i = x_i / ((n+1)^2 L_{n+1}(x_i)^2) expressed through L_{n-1}.
            weights.push(z / (nf * nf * p2 * p2));
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Order of the rule used by [`f1_with_derivs`].
pub const F1_ORDER: usize = 96;

fn f1_rule() -> &'static GaussLaguerre {
    static RULE: OnceBox<GaussLaguerre> = OnceBox::new();
    RULE.get_or_init(|| alloc::boxed::Box::new(GaussLaguerre::new(F1_ORDER)))
}

/// `ln(1 + t x)` without overflow for very large `t x`.
fn log1p_prod(t: f64, x: f64) -> f64 {
    let tx = t * x;
    if tx > 1e12 {
        ln(t) + ln(x) + ln_1p(1.0 / tx)
    } else {
        ln_1p(tx)
    }
}

/// `F1(t, n)` and its first two derivatives in `t`, all in nats.
pub fn f1_with_derivs(t: f64, n1: usize) -> Result<(f64, f64, f64)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("F1 needs a finite nonnegative argument"));
    }
    if n1 == 0 {
        return Err(invalid("F1 needs a positive degree"));
    }
    let rule = f1_rule();
    let lg = lgamma(n1 as f64);
    let m = (n1 - 1) as f64;
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        // x^(n-1) / (n-1)! in log space keeps the largest nodes finite.
        let base = w * exp(m * ln(x) - lg);
        let inv = 1.0 / (1.0 + t * x);
        v += base * log1p_prod(t, x);
        d1 += base * x * inv;
        d2 -= base * x * x * inv * inv;
    }
    Ok((v, d1, d2))
}

/// `F1(t, n)` in nats.
pub fn f1(t: f64, n1: usize) -> Result<f64> {
    Ok(f1_with_derivs(t, n1)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_factorial_moments() {
        let r = GaussLaguerre::new(F1_ORDER);
        let mut fact = 1.0;
        for k in 0..25 {
            if k > 0 {
                fact *= k as f64;
            }
            let got = r.integrate(|x| libm::pow(x, k as f64));
            assert!((got / fact - 1.0).abs() < 1e-10, "k={k}: {got} vs {fact}");
        }
    }

    #[test]
    fn nodes_increasing_and_positive() {
        let r = GaussLaguerre::new(F1_ORDER);
        assert!(r.nodes[0] > 0.0);
        assert!(r.nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_argument() {
        for n in [1, 2, 10] {
            let (v, d1, d2) = f1_with_derivs(0.0, n).unwrap();
            assert_eq!(v, 0.0);
            assert!((d1 - n as f64).abs() < 1e-10);
            assert!(d2 <= 0.0);
        }
    }

    #[test]
    fn single_degree_matches_exponential_integral() {
        // F1(t, 1) = e^{1/t} E1(1/t); at t = 1 this is 0.596347362323194...
        let v = f1(1.0, 1).unwrap();
        assert!((v - 0.596_347_362_323_194_1).abs() < 1e-4, "{v}");
    }

    #[test]
    fn negative_rejected() {
        assert!(f1(-1e-3, 2).is_err());
        assert!(f1(1.0, 0).is_err());
    }
}
