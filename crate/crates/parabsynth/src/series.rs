//! Truncated power series over complex coefficients.
//!
//! A series is a `Vec<C>` whose entry `k` multiplies `x^k`.

use crate::C;

pub fn eval(coeffs: &[C], x: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub fn eval_deriv(coeffs: &[C], x: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * x + c * k as f64;
    }
    acc
}

pub fn deriv(a: &[C]) -> Vec<C> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

fn zeros(n: usize) -> Vec<C> {
    vec![C::new(0.0, 0.0); n]
}

/// Product truncated to `n` coefficients.
pub fn mul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = zeros(n);
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == C::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Quotient truncated to `n` coefficients; needs `b[0] != 0`.
pub fn div(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = zeros(n);
    let b0 = b[0];
    for k in 0..n {
        let mut s = if k < a.len() { a[k] } else { C::new(0.0, 0.0) };
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            s -= b[j] * out[k - j];
        }
        out[k] = s / b0;
    }
    out
}

/// `a ∘ b` for `b[0] = 0`, truncated to `n` coefficients.
pub fn compose(a: &[C], b: &[C], n: usize) -> Vec<C> {
    let mut out = zeros(n);
    let mut power = zeros(n);
    power[0] = C::new(1.0, 0.0);
    for (k, &ak) in a.iter().enumerate() {
        if k > 0 {
            power = mul(&power, b, n);
        }
        if k >= n && b.first().copied().unwrap_or_default() == C::new(0.0, 0.0) {
            break;
        }
        for (o, &p) in out.iter_mut().zip(power.iter()) {
            *o += ak * p;
        }
    }
    out
}

/// Compositional inverse of `a` with `a[0] = 0`, `a[1] != 0`.
pub fn reversion(a: &[C], n: usize) -> Vec<C> {
    let mut b = zeros(n);
    if n < 2 {
        return b;
    }
    let a1 = a[1];
    b[1] = C::new(1.0, 0.0) / a1;
    for k in 2..n {
        let c = compose(a, &b[..=k], k + 1);
        b[k] -= c[k] / a1;
    }
    b
}

/// Coefficients of `p(x0 + t)` as a polynomial in `t`.
pub fn shift(p: &[C], x0: C) -> Vec<C> {
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let t = q[j + 1] * x0;
            q[j] += t;
        }
    }
    q
}

/// Polynomial product without truncation.
pub fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    mul(a, b, a.len() + b.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn shift_matches_direct_evaluation() {
        let p = vec![c(1.0), C::new(0.5, 2.0), c(-3.0), c(0.25)];
        let x0 = C::new(0.3, -0.7);
        let q = shift(&p, x0);
        let t = C::new(0.11, 0.05);
        assert!((eval(&q, t) - eval(&p, x0 + t)).norm() < 1e-14);
    }

    #[test]
    fn div_inverts_mul() {
        let a = vec![c(1.0), c(2.0), C::new(0.0, 1.0)];
        let b = vec![c(2.0), c(-1.0)];
        let p = mul(&a, &b, 8);
        let q = div(&p, &b, 8);
        for k in 0..3 {
            assert!((q[k] - a[k]).norm() < 1e-14);
        }
        for v in &q[3..] {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn reversion_of_linear_plus_square() {
        // inverse of x + x^2 is sum (-1)^(k-1) Catalan(k-1) x^k
        let a = vec![c(0.0), c(1.0), c(1.0)];
        let b = reversion(&a, 8);
        let expected = [0.0, 1.0, -1.0, 2.0, -5.0, 14.0, -42.0, 132.0];
        for (bk, e) in b.iter().zip(expected) {
            assert!((bk - c(e)).norm() < 1e-10, "{bk} vs {e}");
        }
    }
}
