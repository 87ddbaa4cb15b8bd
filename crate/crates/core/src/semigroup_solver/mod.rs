//! Evolution equations of the branching systems.
//!
//! Each equation has the form
//!
//! ```text
//! V_t f(x) = f(x − t) 1{x > t} + ∫_{(t − x)⁺}^t G(r) dr
//! ```
//!
//! with a position-independent kernel `G`, so only the one-dimensional
//! curve `G` on a uniform time grid is computed ([`KernelCurve`]). The
//! cumulant `U_t f` is found by Picard iteration, the first moment `π_t f`
//! by forward marching and the weighted occupation functional `ω_t` by
//! backward marching from the end of the time weight's support.

mod cumulant;
mod moment;
mod occupation;
mod test_function;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{JumpMeasure, LevyModel, Orientation};
use crate::quad::gl5;

pub use cumulant::{solve_finite_rate_u, solve_single_birth_u, CumulantSolution};
pub use moment::{solve_finite_rate_moment, solve_moment_pi, MomentSolution};
pub use occupation::{solve_occupation, OccupationSolution};
pub use test_function::{segment_integral, Evolved, TestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Cumulant,
    Moment,
    Occupation,
}

/// Kernel values `G(jΔ)`, `j = 0..=N`, and their cumulative integral.
/// `G` is linear between grid points, so the cumulative is piecewise
/// quadratic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCurve {
    pub step: f64,
    pub horizon: f64,
    pub values: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub flavor: Flavor,
    pub iterations: usize,
    pub residual: f64,
    pub tol: f64,
}

impl KernelCurve {
    fn new(step: f64, values: Vec<f64>, flavor: Flavor) -> Self {
        let cumulative = cumulate(&values, step);
        Self {
            step,
            horizon: step * (values.len() - 1) as f64,
            values,
            cumulative,
            flavor,
            iterations: 0,
            residual: 0.0,
            tol: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    /// `∫_0^r G`; NaN beyond the horizon.
    pub fn cumulative_at(&self, r: f64) -> f64 {
        cumulative_at(&self.values, &self.cumulative, self.step, r)
    }

    /// `G(r)` by linear interpolation.
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.values.len() - 1;
        let pos = r / self.step;
        if !(pos >= 0.0) || pos > n as f64 + 1e-9 {
            return f64::NAN;
        }
        let i = (pos.floor() as usize).min(n.saturating_sub(1));
        if n == 0 {
            return self.values[0];
        }
        let th = pos - i as f64;
        self.values[i] * (1.0 - th) + self.values[i + 1] * th
    }
}

fn cumulate(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * step * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

#[inline]
fn cumulative_at(values: &[f64], cumulative: &[f64], step: f64, r: f64) -> f64 {
    let n = values.len() - 1;
    let pos = r / step;
    if pos <= 0.0 {
        return 0.0;
    }
    if pos > n as f64 + 1e-9 {
        return f64::NAN;
    }
    if n == 0 {
        return 0.0;
    }
    let i = (pos.floor() as usize).min(n - 1);
    let th = (pos - i as f64).min(1.0);
    cumulative[i] + step * th * (values[i] + 0.5 * th * (values[i + 1] - values[i]))
}

/// Grid and stopping parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub step: f64,
    pub tol: f64,
    pub max_sweeps: usize,
    /// Keep every Picard iterate of the kernel (for monotonicity checks).
    #[serde(default)]
    pub record_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { step: 1e-3, tol: 1e-10, max_sweeps: 200, record_iterates: false }
    }
}

impl SolverOptions {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }

    fn nodes(&self, horizon: f64) -> Result<usize> {
        if !(self.step > 0.0) || !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "solver needs step > 0 and a finite horizon > 0, got ({}, {horizon})",
                self.step
            )));
        }
        Ok(((horizon / self.step) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Offspring mechanism of the finite-rate system: each particle branches at
/// rate `α`; a branching event produces `k` children with probability
/// `pmf[k]`, placed independently according to `η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffspringLaw {
    pub pmf: Vec<f64>,
    pub alpha: f64,
    pub eta: JumpMeasure,
}

impl OffspringLaw {
    pub fn new(pmf: Vec<f64>, alpha: f64, eta: JumpMeasure) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("offspring pmf must be a nonempty nonnegative vector".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("offspring pmf sums to {total}, not 1")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("branching rate must be > 0, got {alpha}")));
        }
        if eta.is_zero() {
            return Err(Error::InvalidArgument("position law has zero mass".into()));
        }
        Ok(Self { pmf, alpha, eta: eta.normalized() })
    }

    /// Parameters under which the finite-rate system coincides with the
    /// single-birth system of a model with finite jump measure:
    /// `g(z) = z`, `α = Π̄(0)/c`, `η = Π/Π̄(0)`.
    pub fn single_birth(model: &LevyModel) -> Result<Self> {
        let mass = model.measure().total_mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument("single-birth parameters need 0 < Π(0,∞) < ∞".into()));
        }
        Self::new(vec![0.0, 1.0], mass / model.drift(), model.measure().clone())
    }

    /// `g(z) = Σ p_k z^k`.
    pub fn g(&self, z: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, &p| acc * z + p)
    }

    /// `g′(1) = Σ k p_k`.
    pub fn mean_offspring(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Inverse-CDF draw of the number of children from a uniform `u`.
    pub fn sample_count(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.pmf.len() - 1
    }
}

pub(crate) fn check_regime(model: &LevyModel) -> Result<()> {
    let mean = model.mean_jump();
    if model.orientation() != Orientation::SubordinatorNegativeDrift || mean >= model.drift() {
        return Err(Error::InvalidRegime { mean, drift: model.drift() });
    }
    Ok(())
}

/// Quadrature points `(z, weight · ν(dz))` of a measure, grouped by grid
/// cell `(kΔ, (k+1)Δ]`.
pub(crate) struct CellQuadrature {
    pub cells: Vec<Vec<(f64, f64)>>,
}

impl CellQuadrature {
    pub fn new(measure: &JumpMeasure, step: f64, n: usize) -> Self {
        let mut cells = vec![Vec::new(); n];
        match &measure.kind {
            crate::levy_model::JumpKind::Atoms { atoms } => {
                for &(z, w) in atoms {
                    if z < measure.cutoff {
                        continue;
                    }
                    let k = ((z / step - 1e-9).ceil() as usize).saturating_sub(1);
                    if k < n {
                        cells[k].push((z, w));
                    }
                }
            }
            _ => {
                let rule = gl5();
                for (k, cell) in cells.iter_mut().enumerate() {
                    let (lo, hi) = (k as f64 * step, (k + 1) as f64 * step);
                    let mut left = lo;
                    for right in measure.breakpoints(lo, hi).into_iter().chain(std::iter::once(hi)) {
                        let half = 0.5 * (right - left);
                        let mid = 0.5 * (right + left);
                        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                            let z = mid + half * x;
                            let d = measure.density(z).unwrap_or(0.0);
                            if d > 0.0 {
                                cell.push((z, w * half * d));
                            }
                        }
                        left = right;
                    }
                }
            }
        }
        Self { cells }
    }
}

/// `ν((r, ∞))` and `∫_{(r,∞)} φ(f(z − r)) ν(dz)` at every grid node.
pub(crate) fn outer_integrals(
    measure: &JumpMeasure,
    f: &TestFunction,
    step: f64,
    n: usize,
    phi: impl Fn(f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let fb = f.breakpoints();
    let upper = measure.effective_upper(1e-17);
    let mut tails = Vec::with_capacity(n + 1);
    let mut outer = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let r = i as f64 * step;
        tails.push(measure.tail(r));
        let breaks: Vec<f64> = fb.iter().map(|b| b + r).collect();
        let g = |z: f64| phi(f.eval(z - r));
        let v = match f.constant_from() {
            Some(x0) => {
                measure.integrate(r, r + x0, &breaks, g) + phi(f.eval(x0 + 1.0)) * measure.tail(r + x0)
            }
            None => {
                let hi = (r + upper).max(r + 1.0);
                measure.integrate(r, hi, &breaks, g)
            }
        };
        outer.push(v);
    }
    (tails, outer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_is_exact_for_linear_kernels() {
        let step = 0.1;
        let values: Vec<f64> = (0..=10).map(|j| 1.0 + 2.0 * j as f64 * step).collect();
        let c = KernelCurve::new(step, values, Flavor::Cumulant);
        for r in [0.0, 0.05, 0.37, 1.0] {
            assert!((c.cumulative_at(r) - (r + r * r)).abs() < 1e-14);
        }
        assert!(c.cumulative_at(1.5).is_nan());
        assert!((c.value_at(0.37) - 1.74).abs() < 1e-14);
    }

    #[test]
    fn offspring_generating_function() {
        let law = OffspringLaw::new(vec![0.5, 0.0, 0.5], 1.0, JumpMeasure::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap();
        assert_eq!(law.g(0.5), 0.625);
        assert_eq!(law.mean_offspring(), 1.0);
        assert_eq!(law.sample_count(0.2), 0);
        assert_eq!(law.sample_count(0.7), 2);
        assert!(OffspringLaw::new(vec![0.5], 1.0, JumpMeasure::exponential(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn cell_quadrature_recovers_mass() {
        let m = JumpMeasure::exponential(1.0, 1.0).unwrap();
        let q = CellQuadrature::new(&m, 0.01, 100);
        let mass: f64 = q.cells.iter().flatten().map(|p| p.1).sum();
        assert!((mass - (1.0 - (-1.0f64).exp())).abs() < 1e-13);
        let a = JumpMeasure::atoms(vec![(0.5, 1.0), (0.01, 2.0), (3.0, 1.0)]).unwrap();
        let q = CellQuadrature::new(&a, 0.01, 100);
        assert_eq!(q.cells[0], vec![(0.01, 2.0)]);
        assert_eq!(q.cells[49], vec![(0.5, 1.0)]);
    }
}
