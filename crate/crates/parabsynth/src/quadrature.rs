//! Gauss–Legendre rules and adaptive segment integration.

use std::f64::consts::PI;

use crate::C;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes by Newton on `P_n`.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n.div_ceil(2) {
            let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Fixed-rule integral of `f` along the segment `a → b`.
    pub fn segment<E, F>(&self, f: &F, a: C, b: C) -> Result<C, E>
    where
        F: Fn(C) -> Result<C, E>,
    {
        let mid = (a + b) / 2.0;
        let half = (b - a) / 2.0;
        let mut s = C::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(mid + half * *x)? * *w;
        }
        Ok(s * half)
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdaptiveError<E> {
    Integrand(E),
    NotConverged,
}

/// Adaptive bisection with a 16-point rule.
pub fn integrate_segment<E, F>(f: &F, a: C, b: C, tol: f64) -> Result<C, AdaptiveError<E>>
where
    F: Fn(C) -> Result<C, E>,
{
    let rule = GaussLegendre::new(16);
    let whole = rule.segment(f, a, b).map_err(AdaptiveError::Integrand)?;
    refine(&rule, f, a, b, whole, tol, 0)
}

fn refine<E, F>(
    rule: &GaussLegendre,
    f: &F,
    a: C,
    b: C,
    whole: C,
    tol: f64,
    depth: usize,
) -> Result<C, AdaptiveError<E>>
where
    F: Fn(C) -> Result<C, E>,
{
    let m = (a + b) / 2.0;
    let left = rule.segment(f, a, m).map_err(AdaptiveError::Integrand)?;
    let right = rule.segment(f, m, b).map_err(AdaptiveError::Integrand)?;
    let sum = left + right;
    if (sum - whole).norm() <= tol * (1.0 + sum.norm()) {
        return Ok(sum);
    }
    if depth >= 40 {
        return Err(AdaptiveError::NotConverged);
    }
    Ok(refine(rule, f, a, m, left, tol / 2.0, depth + 1)? + refine(rule, f, m, b, right, tol / 2.0, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let g = GaussLegendre::new(8);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 15 is exact for 8 points
        let v: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let f = |z: C| -> Result<C, ()> { Ok(1.0 / (z * z + 1e-4)) };
        let v = integrate_segment(&f, C::new(-1.0, 0.0), C::new(1.0, 0.0), 1e-12).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v.re - exact).abs() < 1e-8 * exact);
    }
}
