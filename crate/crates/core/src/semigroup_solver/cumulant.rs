//! Picard iteration for the cumulant `U_t f`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy_model::{JumpMeasure, LevyModel};

use super::{
    check_regime, cumulate, cumulative_at, outer_integrals, CellQuadrature, Flavor, KernelCurve,
    OffspringLaw, SolverOptions, TestFunction,
};

/// Solved cumulant: `U_t f(x) = f(x − t) 1{x > t} + C(t) − C((t − x)⁺)`.
#[derive(Clone, Debug)]
pub struct CumulantSolution {
    pub curve: Arc<KernelCurve>,
    pub f: TestFunction,
    /// Kernel after each sweep, when requested.
    pub iterates: Vec<Vec<f64>>,
}

impl CumulantSolution {
    pub fn u(&self, t: f64, x: f64) -> f64 {
        let head = if x > t { self.f.eval(x - t) } else { 0.0 };
        head + self.curve.cumulative_at(t) - self.curve.cumulative_at((t - x).max(0.0))
    }

    /// `U_t f(x)` computed from the `k`-th recorded iterate of the kernel.
    pub fn u_iterate(&self, k: usize, t: f64, x: f64) -> f64 {
        let g = &self.iterates[k];
        let c = cumulate(g, self.curve.step);
        let head = if x > t { self.f.eval(x - t) } else { 0.0 };
        head + cumulative_at(g, &c, self.curve.step, t) - cumulative_at(g, &c, self.curve.step, (t - x).max(0.0))
    }

    /// `x ↦ U_s f(x)` as a test function.
    pub fn as_test_function(&self, s: f64) -> TestFunction {
        TestFunction::evolved(self.f.clone(), s, self.curve.clone())
    }

    pub fn horizon(&self) -> f64 {
        self.curve.horizon
    }
}

/// Solves `U_t f(x) = f(x − t)1{x > t} + c⁻¹ ∫_0^t 1{x > t − s} ⟨Π, 1 − e^{−U_s f}⟩ ds`
/// on `[0, horizon]`.
pub fn solve_single_birth_u(
    model: &LevyModel,
    f: &TestFunction,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<CumulantSolution> {
    check_regime(model)?;
    let kappa = 1.0 / model.drift();
    let total = model.measure().total_mass();
    picard(model.measure(), f, horizon, opts, |s| kappa * (total - s))
}

/// Solves `U_t f(x) = f(x − t)1{x > t} + α ∫_0^t 1{x > t − s} [1 − g(⟨η, e^{−U_s f}⟩)] ds`.
pub fn solve_finite_rate_u(
    offspring: &OffspringLaw,
    f: &TestFunction,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<CumulantSolution> {
    let alpha = offspring.alpha;
    picard(&offspring.eta, f, horizon, opts, |s| alpha * (1.0 - offspring.g(s)))
}

/// Global Picard sweeps on the kernel. `link` maps `⟨ν, e^{−u(r,·)}⟩` to
/// the kernel value.
fn picard(
    measure: &JumpMeasure,
    f: &TestFunction,
    horizon: f64,
    opts: &SolverOptions,
    link: impl Fn(f64) -> f64,
) -> Result<CumulantSolution> {
    let n = opts.nodes(horizon)?;
    let step = opts.step;
    let cells = CellQuadrature::new(measure, step, n);
    let (_, outer) = outer_integrals(measure, f, step, n, |v| (-v).exp());
    let mut g = vec![0.0; n + 1];
    let mut c = cumulate(&g, step);
    let mut iterates = Vec::new();
    if opts.record_iterates {
        iterates.push(g.clone());
    }
    let mut residual = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let mut next = vec![0.0; n + 1];
        for (i, out) in next.iter_mut().enumerate() {
            let r = i as f64 * step;
            let ci = c[i];
            let mut inner = 0.0;
            for cell in &cells.cells[..i] {
                for &(z, w) in cell {
                    inner += w * (cumulative_at(&g, &c, step, r - z) - ci).exp();
                }
            }
            *out = link(inner + (-ci).exp() * outer[i]);
        }
        residual = next.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        g = next;
        c = cumulate(&g, step);
        if opts.record_iterates {
            iterates.push(g.clone());
        }
        if residual < opts.tol {
            let mut curve = KernelCurve::new(step, g, Flavor::Cumulant);
            curve.iterations = sweep;
            curve.residual = residual;
            curve.tol = opts.tol;
            return Ok(CumulantSolution { curve: Arc::new(curve), f: f.clone(), iterates });
        }
    }
    Err(Error::NotConverged { sweeps: opts.max_sweeps, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{JumpMeasure, Orientation};

    fn model_a() -> LevyModel {
        LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, 2.0)
            .unwrap()
    }

    /// `U_t θ(x)` for `x > t` from the geometric law of the total mass.
    fn geometric_oracle(model: &LevyModel, theta: f64, t: f64) -> f64 {
        let w = model.scale_w(t + 0.01, 1e-12).unwrap().eval(t);
        let p = 1.0 / (model.drift() * w);
        let e = (-theta).exp();
        -(p * e / (1.0 - (1.0 - p) * e)).ln()
    }

    #[test]
    fn zero_function_and_zero_measure() {
        let m = model_a();
        let zero = TestFunction::constant(0.0).unwrap();
        let s = solve_single_birth_u(&m, &zero, 1.0, &SolverOptions::with_step(0.01)).unwrap();
        assert!(s.curve.values.iter().all(|&v| v.abs() < 1e-14));
        let pure = LevyModel::new(2.0, JumpMeasure::zero(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let f = TestFunction::capped_linear(1.0, 3.0).unwrap();
        let s = solve_single_birth_u(&pure, &f, 1.0, &SolverOptions::with_step(0.01)).unwrap();
        assert_eq!(s.u(0.5, 2.0), f.eval(1.5));
        assert_eq!(s.u(0.5, 0.3), 0.0);
    }

    #[test]
    fn constant_function_matches_geometric_law() {
        let m = model_a();
        let theta = 2f64.ln();
        let s = solve_single_birth_u(&m, &TestFunction::constant(theta).unwrap(), 1.0, &SolverOptions::with_step(0.005))
            .unwrap();
        let exact = geometric_oracle(&m, theta, 1.0);
        assert!((s.u(1.0, 2.0) - exact).abs() < 1e-4, "{} vs {exact}", s.u(1.0, 2.0));
    }

    #[test]
    fn picard_iterates_increase() {
        let m = model_a();
        let opts = SolverOptions { step: 0.02, record_iterates: true, ..SolverOptions::default() };
        let s = solve_single_birth_u(&m, &TestFunction::capped_linear(1.0, 2.0).unwrap(), 1.0, &opts).unwrap();
        for w in s.iterates.windows(2) {
            assert!(w[0].iter().zip(&w[1]).all(|(a, b)| *b >= a - 1e-15));
        }
    }

    #[test]
    fn finite_rate_reproduces_single_birth() {
        let m = model_a();
        let f = TestFunction::capped_linear(1.0, 2.0).unwrap();
        let opts = SolverOptions::with_step(0.01);
        let a = solve_single_birth_u(&m, &f, 1.0, &opts).unwrap();
        let b = solve_finite_rate_u(&OffspringLaw::single_birth(&m).unwrap(), &f, 1.0, &opts).unwrap();
        for (x, y) in a.curve.values.iter().zip(&b.curve.values) {
            assert!((x - y).abs() <= 2e-10);
        }
    }

    #[test]
    fn no_births_without_offspring() {
        let law = OffspringLaw::new(vec![1.0], 3.0, JumpMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        let f = TestFunction::capped_linear(1.0, 2.0).unwrap();
        let s = solve_finite_rate_u(&law, &f, 1.0, &SolverOptions::with_step(0.01)).unwrap();
        assert_eq!(s.u(0.4, 1.0), f.eval(0.6));
    }

    #[test]
    fn supercritical_model_rejected() {
        let b = LevyModel::new(1.0, JumpMeasure::exponential(2.0, 1.0).unwrap(), Orientation::NegativeSubordinatorPositiveDrift, 0.0)
            .unwrap();
        let f = TestFunction::constant(1.0).unwrap();
        assert!(matches!(
            solve_single_birth_u(&b, &f, 1.0, &SolverOptions::default()),
            Err(Error::InvalidRegime { .. })
        ));
        assert!(solve_single_birth_u(&b.tilt(), &f, 0.5, &SolverOptions::with_step(0.01)).is_ok());
    }

    #[test]
    fn sweep_cap_reports_residual() {
        let opts = SolverOptions { step: 0.05, max_sweeps: 1, ..SolverOptions::default() };
        let r = solve_single_birth_u(&model_a(), &TestFunction::constant(1.0).unwrap(), 1.0, &opts);
        assert!(matches!(r, Err(Error::NotConverged { sweeps: 1, residual }) if residual > 0.0));
    }
}
