//! Quadrature helpers: Gauss-Legendre panels and adaptive Simpson.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f`.
    #[inline]
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl5() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(5))
}

pub fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

pub fn gl64() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(64))
}

/// Splits `[lo, hi]` at the sorted interior `breaks` and into panels no
/// longer than `max_len`, integrating each with `rule`.
pub fn integrate_panels(
    rule: &GaussLegendre,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    max_len: f64,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mut total = 0.0;
    let mut left = lo;
    let inner = breaks.iter().copied().filter(|&b| b > lo && b < hi);
    for right in inner.chain(std::iter::once(hi)) {
        if right <= left {
            continue;
        }
        let pieces = ((right - left) / max_len).ceil().max(1.0) as usize;
        let h = (right - left) / pieces as f64;
        for k in 0..pieces {
            let a = left + k as f64 * h;
            let b = if k + 1 == pieces { right } else { a + h };
            total += rule.integrate(a, b, &mut f);
        }
        left = right;
    }
    total
}

/// Adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure { lo: a, hi: b, depth: 0 });
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_polynomials_exact() {
        for n in [1, 2, 5, 16, 64] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} s={s}");
            // exact for degree 2n-1
            let deg = 2 * n - 1;
            let v = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn panels_respect_breaks() {
        // step function with a jump at 0.3
        let v = integrate_panels(gl5(), 0.0, 1.0, &[0.3], 0.25, |x| if x < 0.3 { 1.0 } else { 2.0 });
        assert!((v - (0.3 + 1.4)).abs() < 1e-13);
        let e = integrate_panels(gl16(), 0.0, 10.0, &[], 0.1, |x| (-x).exp());
        assert!((e - (1.0 - (-10.0f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn simpson_converges_and_fails_with_depth_cap() {
        let mut f = |x: f64| x.sin();
        let v = adaptive_simpson(&mut f, 0.0, std::f64::consts::PI, 1e-10, 40).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let mut g = |x: f64| if x < 0.123456 { 0.0 } else { 1.0 };
        assert!(matches!(
            adaptive_simpson(&mut g, 0.0, 1.0, 1e-14, 3),
            Err(Error::QuadratureFailure { .. })
        ));
    }
}
