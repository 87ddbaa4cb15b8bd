//! Nonnegative test functions on (0, ∞) and time-weighted segment integrals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gl5};

use super::KernelCurve;

/// A nonnegative test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `θ`.
    Constant { theta: f64 },
    /// `min(slope x, cap)` for `x ≥ 0`; `cap` may be infinite.
    CappedLinear { slope: f64, cap: f64 },
    /// `1` on `[lo, hi)`, `0` elsewhere.
    Indicator { lo: f64, hi: f64 },
    /// `U_s f` given by a solved cumulant curve.
    #[serde(skip)]
    Evolved(Arc<Evolved>),
}

/// `x ↦ f(x − s) 1{x > s} + C(s) − C((s − x)⁺)` where `C` is the
/// cumulative of a kernel curve.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolved {
    pub base: TestFunction,
    pub s: f64,
    pub curve: Arc<KernelCurve>,
}

impl TestFunction {
    pub fn constant(theta: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("constant test function needs theta >= 0, got {theta}")));
        }
        Ok(Self::Constant { theta })
    }

    pub fn capped_linear(slope: f64, cap: f64) -> Result<Self> {
        if !(slope >= 0.0 && slope.is_finite()) || !(cap >= 0.0) {
            return Err(Error::InvalidArgument(format!("capped linear needs slope, cap >= 0, got ({slope}, {cap})")));
        }
        Ok(Self::CappedLinear { slope, cap })
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) {
            return Err(Error::InvalidArgument(format!("indicator needs 0 <= lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self::Indicator { lo, hi })
    }

    pub fn evolved(base: TestFunction, s: f64, curve: Arc<KernelCurve>) -> Self {
        Self::Evolved(Arc::new(Evolved { base, s, curve }))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant { theta } => *theta,
            Self::CappedLinear { slope, cap } => (slope * x.max(0.0)).min(*cap),
            Self::Indicator { lo, hi } => {
                if x >= *lo && x < *hi {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Evolved(e) => {
                let head = if x > e.s { e.base.eval(x - e.s) } else { 0.0 };
                head + e.curve.cumulative_at(e.s) - e.curve.cumulative_at((e.s - x).max(0.0))
            }
        }
    }

    /// Points where the function or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Constant { .. } => vec![],
            Self::CappedLinear { slope, cap } => {
                if *slope > 0.0 && cap.is_finite() {
                    vec![cap / slope]
                } else {
                    vec![]
                }
            }
            Self::Indicator { lo, hi } => {
                if hi.is_finite() {
                    vec![*lo, *hi]
                } else {
                    vec![*lo]
                }
            }
            Self::Evolved(e) => {
                let mut b: Vec<f64> = e.base.breakpoints().into_iter().map(|x| x + e.s).collect();
                b.push(e.s);
                b
            }
        }
    }

    /// A point beyond which the function is constant, if any.
    pub fn constant_from(&self) -> Option<f64> {
        match self {
            Self::Constant { .. } => Some(0.0),
            Self::CappedLinear { slope, cap } => {
                if *slope == 0.0 || *cap == 0.0 {
                    Some(0.0)
                } else if cap.is_finite() {
                    Some(cap / slope)
                } else {
                    None
                }
            }
            Self::Indicator { hi, .. } => hi.is_finite().then_some(*hi),
            Self::Evolved(e) => e.base.constant_from().map(|x| x + e.s),
        }
    }

    /// `sup_x f(x)/x`; infinite when `f` does not vanish at 0+.
    pub fn rho_bound(&self) -> f64 {
        match self {
            Self::Constant { theta } => {
                if *theta == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::CappedLinear { slope, cap } => {
                if *cap == 0.0 {
                    0.0
                } else {
                    *slope
                }
            }
            Self::Indicator { lo, .. } => {
                if *lo > 0.0 {
                    1.0 / lo
                } else {
                    f64::INFINITY
                }
            }
            Self::Evolved(_) => f64::INFINITY,
        }
    }

    /// Polynomial of degree at most one between breakpoints.
    pub fn is_piecewise_linear(&self) -> bool {
        !matches!(self, Self::Evolved(_))
    }

    /// Right end of the support, `∞` if unbounded.
    pub fn support_end(&self) -> f64 {
        match self {
            Self::Constant { theta } if *theta == 0.0 => 0.0,
            Self::CappedLinear { slope, cap } if *slope == 0.0 || *cap == 0.0 => 0.0,
            Self::Indicator { hi, .. } => *hi,
            _ => f64::INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.support_end() == 0.0
    }
}

/// `∫_{t0}^{t1} h(t) f(d − t) dt`.
///
/// For piecewise-linear `h` and `f` the integrand is a quadratic between
/// the merged breakpoints and five-point Gauss-Legendre is exact; any other
/// pair falls back to adaptive Simpson to 1e-10.
pub fn segment_integral(h: &TestFunction, f: &TestFunction, t0: f64, t1: f64, d: f64) -> Result<f64> {
    if !(t1 > t0) {
        return Ok(0.0);
    }
    let mut breaks: Vec<f64> = h.breakpoints();
    breaks.extend(f.breakpoints().into_iter().map(|b| d - b));
    breaks.retain(|&b| b > t0 && b < t1);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let rule = gl5();
    let exact = h.is_piecewise_linear() && f.is_piecewise_linear();
    let mut total = 0.0;
    let mut left = t0;
    for right in breaks.into_iter().chain(std::iter::once(t1)) {
        if exact {
            total += rule.integrate(left, right, |t| h.eval(t) * f.eval(d - t));
        } else {
            let mut g = |t: f64| h.eval(t) * f.eval(d - t);
            total += adaptive_simpson(&mut g, left, right, 1e-10, 40)?;
        }
        left = right;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_breakpoints() {
        let f = TestFunction::capped_linear(1.0, 10.0).unwrap();
        assert_eq!(f.eval(3.0), 3.0);
        assert_eq!(f.eval(12.0), 10.0);
        assert_eq!(f.breakpoints(), vec![10.0]);
        assert_eq!(f.constant_from(), Some(10.0));
        assert_eq!(f.rho_bound(), 1.0);
        let i = TestFunction::indicator(0.0, 0.5).unwrap();
        assert_eq!(i.eval(0.0), 1.0);
        assert_eq!(i.eval(0.5), 0.0);
        assert_eq!(TestFunction::constant(2.0).unwrap().rho_bound(), f64::INFINITY);
        assert!(TestFunction::indicator(1.0, 1.0).is_err());
    }

    #[test]
    fn segment_integrals_are_exact() {
        let one = TestFunction::constant(1.0).unwrap();
        let f = TestFunction::capped_linear(1.0, 5.0).unwrap();
        // ∫_0^1 min(3 - t, 5) dt = 2.5
        assert!((segment_integral(&one, &f, 0.0, 1.0, 3.0).unwrap() - 2.5).abs() < 1e-14);
        // ∫_0^7 min(s, 5) ds = 12.5 + 10
        assert!((segment_integral(&one, &f, 0.0, 7.0, 7.0).unwrap() - 22.5).abs() < 1e-12);
        let h = TestFunction::indicator(0.0, 0.5).unwrap();
        assert!((segment_integral(&h, &one, 0.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let h = TestFunction::capped_linear(2.0, 1.0).unwrap();
        // ∫_0^1 min(2t,1)·(2 - t) dt
        let exact = (0.5 * 0.5f64.powi(2) * 2.0 * 2.0 - 2.0 * 0.5f64.powi(3) / 3.0) + (1.0 - 0.5 * (1.0 - 0.25));
        assert!((segment_integral(&h, &TestFunction::capped_linear(1.0, 100.0).unwrap(), 0.0, 1.0, 2.0).unwrap() - exact).abs() < 1e-13);
    }
}
