//! Truncated Taylor arithmetic.
//!
//! A univariate series is a slice `c` with `c[k] = f^(k)(x0) / k!`. A [`Jet`]
//! holds the bivariate coefficients `∂^(i,j) f / (i! j!)` for `i <= o1`, `j <= o2`.

use crate::fourier::C64;
use crate::grid::MultiIndex;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Product of two series truncated to `a.len()` terms.
pub fn mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    (0..n).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect()
}

/// Quotient `a / b`; requires `b[0] != 0`.
pub fn div(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut q = vec![ZERO; n];
    for k in 0..n {
        let mut acc = a[k];
        for j in 1..=k {
            acc -= b[j] * q[k - j];
        }
        q[k] = acc / b[0];
    }
    q
}

pub fn exp(a: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut e = vec![ZERO; n];
    e[0] = a[0].exp();
    for k in 1..n {
        let mut acc = ZERO;
        for j in 1..=k {
            acc += a[j] * e[k - j] * j as f64;
        }
        e[k] = acc / k as f64;
    }
    e
}

/// Natural logarithm; requires `a[0] != 0`.
pub fn ln(a: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut l = vec![ZERO; n];
    l[0] = a[0].ln();
    for k in 1..n {
        let mut acc = a[k] * k as f64;
        for j in 1..k {
            acc -= l[j] * a[k - j] * j as f64;
        }
        l[k] = acc / (a[0] * k as f64);
    }
    l
}

/// Series of `x` around `x0`.
pub fn variable(x0: C64, len: usize) -> Vec<C64> {
    let mut v = vec![ZERO; len];
    v[0] = x0;
    if len > 1 {
        v[1] = C64::new(1.0, 0.0);
    }
    v
}

/// Rescales a series in `y` to a series in `x` with `y = λ x + const`.
pub fn chain_linear(mut a: Vec<C64>, lambda: f64) -> Vec<C64> {
    let mut p = 1.0;
    for c in a.iter_mut() {
        *c *= p;
        p *= lambda;
    }
    a
}

/// Bivariate truncated Taylor jet.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: [usize; 2],
    coeffs: Vec<C64>,
}

impl Jet {
    pub fn zeros(order: [usize; 2]) -> Self {
        Self { order, coeffs: vec![ZERO; (order[0] + 1) * (order[1] + 1)] }
    }

    pub fn constant(v: C64, order: [usize; 2]) -> Self {
        let mut j = Self::zeros(order);
        j.coeffs[0] = v;
        j
    }

    /// Jet from row-major coefficients `∂^(i,j) f / (i! j!)`.
    pub fn from_coeffs(order: [usize; 2], coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), (order[0] + 1) * (order[1] + 1));
        Self { order, coeffs }
    }

    /// Jet of a function of the first coordinate only.
    pub fn from_x1(series: &[C64], order: [usize; 2]) -> Self {
        let mut j = Self::zeros(order);
        for i in 0..=order[0] {
            j.coeffs[i * (order[1] + 1)] = series[i];
        }
        j
    }

    /// Jet of `f(x1) g(x2)`.
    pub fn outer(f: &[C64], g: &[C64], order: [usize; 2]) -> Self {
        let mut j = Self::zeros(order);
        for a in 0..=order[0] {
            for b in 0..=order[1] {
                j.coeffs[a * (order[1] + 1) + b] = f[a] * g[b];
            }
        }
        j
    }

    pub fn order(&self) -> [usize; 2] {
        self.order
    }

    #[inline]
    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        self.coeffs[i * (self.order[1] + 1) + j]
    }

    #[inline]
    fn coeff_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        let w = self.order[1] + 1;
        &mut self.coeffs[i * w + j]
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// `∂^α f` at the expansion point.
    pub fn derivative(&self, alpha: MultiIndex) -> C64 {
        let [a, b] = alpha.0;
        self.coeff(a, b) * (factorial(a) * factorial(b))
    }

    pub fn scale(mut self, s: C64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let [o1, o2] = self.order;
        let mut out = Jet::zeros(self.order);
        for i in 0..=o1 {
            for j in 0..=o2 {
                let mut acc = ZERO;
                for p in 0..=i {
                    for q in 0..=j {
                        acc += self.coeff(p, q) * other.coeff(i - p, j - q);
                    }
                }
                *out.coeff_mut(i, j) = acc;
            }
        }
        out
    }

    /// Jet of `∂^α f` of order `self.order - α`.
    pub fn shift(&self, alpha: MultiIndex) -> Jet {
        let [a, b] = alpha.0;
        let order = [self.order[0] - a, self.order[1] - b];
        let mut out = Jet::zeros(order);
        for i in 0..=order[0] {
            for j in 0..=order[1] {
                let w = factorial(i + a) / factorial(i) * factorial(j + b) / factorial(j);
                *out.coeff_mut(i, j) = self.coeff(i + a, j + b) * w;
            }
        }
        out
    }

    /// Truncates to a smaller order.
    pub fn truncate(&self, order: [usize; 2]) -> Jet {
        let mut out = Jet::zeros(order);
        for i in 0..=order[0] {
            for j in 0..=order[1] {
                *out.coeff_mut(i, j) = self.coeff(i, j);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn exp_of_variable_gives_exp_series() {
        let x = variable(C64::new(0.3, 0.0), 6);
        let e = exp(&x);
        for (k, c) in e.iter().enumerate() {
            assert!((c.re - 0.3f64.exp() / factorial(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let a = re(&[0.5, -0.2, 0.7, 0.1, 0.0]);
        let back = ln(&exp(&a));
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn div_inverts_mul() {
        let a = re(&[1.0, 2.0, 3.0, 4.0]);
        let b = re(&[2.0, -1.0, 0.5, 0.25]);
        let q = div(&mul(&a, &b), &b);
        for (x, y) in a.iter().zip(&q) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn shift_gives_derivatives() {
        // f = x1^3 x2^2 around (1, 2)
        let fx = mul(&mul(&variable(C64::new(1.0, 0.0), 4), &variable(C64::new(1.0, 0.0), 4)), &variable(C64::new(1.0, 0.0), 4));
        let gy = mul(&variable(C64::new(2.0, 0.0), 4), &variable(C64::new(2.0, 0.0), 4));
        let jet = Jet::outer(&fx, &gy, [3, 3]);
        // ∂x1 ∂x2 f = 3 x1^2 * 2 x2 = 12
        assert!((jet.derivative(MultiIndex([1, 1])).re - 12.0).abs() < 1e-12);
        let d = jet.shift(MultiIndex([1, 0]));
        assert!((d.value().re - 12.0).abs() < 1e-12); // 3 * 1 * 4
    }
}
