//! First-moment semigroup `π_t f` by forward marching.

use std::sync::Arc;

use crate::error::Result;
use crate::levy_model::{JumpMeasure, LevyModel};

use super::{check_regime, outer_integrals, CellQuadrature, Flavor, KernelCurve, OffspringLaw, SolverOptions, TestFunction};

/// `π_t f(x) = f(x − t) 1{x > t} + D(t) − D((t − x)⁺)` with `D` the
/// cumulative of the moment kernel `M`.
#[derive(Clone, Debug)]
pub struct MomentSolution {
    pub curve: Arc<KernelCurve>,
    pub f: TestFunction,
}

impl MomentSolution {
    pub fn pi(&self, t: f64, x: f64) -> f64 {
        let head = if x > t { self.f.eval(x - t) } else { 0.0 };
        head + self.curve.cumulative_at(t) - self.curve.cumulative_at((t - x).max(0.0))
    }

    pub fn horizon(&self) -> f64 {
        self.curve.horizon
    }
}

/// `M(r) = c⁻¹ ⟨Π, π_r f⟩`.
pub fn solve_moment_pi(model: &LevyModel, f: &TestFunction, horizon: f64, opts: &SolverOptions) -> Result<MomentSolution> {
    check_regime(model)?;
    march(model.measure(), 1.0 / model.drift(), f, horizon, opts)
}

/// `M(r) = α g′(1) ⟨η, π_r f⟩`.
pub fn solve_finite_rate_moment(
    offspring: &OffspringLaw,
    f: &TestFunction,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<MomentSolution> {
    march(&offspring.eta, offspring.alpha * offspring.mean_offspring(), f, horizon, opts)
}

fn march(measure: &JumpMeasure, kappa: f64, f: &TestFunction, horizon: f64, opts: &SolverOptions) -> Result<MomentSolution> {
    let n = opts.nodes(horizon)?;
    let step = opts.step;
    let cells = CellQuadrature::new(measure, step, n);
    let (_, outer) = outer_integrals(measure, f, step, n, |v| v);
    let total = measure.total_mass();
    let mut m = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    // D at r − z where r − z lies in cell j = i − k − 1.
    let d_at = |m: &[f64], d: &[f64], s: f64| -> f64 {
        let j = ((s / step).floor() as usize).min(n - 1);
        let th = (s / step - j as f64).clamp(0.0, 1.0);
        d[j] + step * th * (m[j] + 0.5 * th * (m[j + 1] - m[j]))
    };
    for i in 0..=n {
        let r = i as f64 * step;
        let residual = |mi: f64, m: &mut [f64], d: &mut [f64]| -> f64 {
            m[i] = mi;
            d[i] = if i == 0 { 0.0 } else { d[i - 1] + 0.5 * step * (m[i - 1] + mi) };
            let mut inner = 0.0;
            for cell in &cells.cells[..i] {
                for &(z, w) in cell {
                    inner += w * d_at(m, d, r - z);
                }
            }
            kappa * (outer[i] + d[i] * total - inner)
        };
        let r0 = residual(0.0, &mut m, &mut d);
        let r1 = residual(1.0, &mut m, &mut d);
        let mi = r0 / (1.0 - (r1 - r0));
        m[i] = mi;
        d[i] = if i == 0 { 0.0 } else { d[i - 1] + 0.5 * step * (m[i - 1] + mi) };
    }
    let curve = KernelCurve::new(step, m, Flavor::Moment);
    Ok(MomentSolution { curve: Arc::new(curve), f: f.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{JumpMeasure, Orientation};
    use crate::semigroup_solver::solve_single_birth_u;

    fn model_a() -> LevyModel {
        LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, 1.0)
            .unwrap()
    }

    #[test]
    fn zero_measure_is_pure_transport() {
        let m = LevyModel::new(1.0, JumpMeasure::zero(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let f = TestFunction::capped_linear(1.0, 10.0).unwrap();
        let s = solve_moment_pi(&m, &f, 1.0, &SolverOptions::with_step(0.01)).unwrap();
        assert_eq!(s.pi(0.5, 3.0), 2.5);
        assert_eq!(s.pi(0.5, 0.2), 0.0);
    }

    #[test]
    fn constant_one_moment_matches_geometric_mean() {
        // E⟨X_t,1⟩ for a > t is 1/p = c W(t).
        let m = model_a();
        let s = solve_moment_pi(&m, &TestFunction::constant(1.0).unwrap(), 1.0, &SolverOptions::with_step(0.005)).unwrap();
        let w = m.scale_w(1.01, 1e-12).unwrap().eval(1.0);
        assert!((s.pi(1.0, 2.0) - 2.0 * w).abs() < 1e-5, "{} vs {}", s.pi(1.0, 2.0), 2.0 * w);
    }

    #[test]
    fn rho_bound_and_ordering() {
        let m = model_a();
        let f = TestFunction::capped_linear(1.0, 10.0).unwrap();
        let opts = SolverOptions::with_step(0.01);
        let pi = solve_moment_pi(&m, &f, 1.0, &opts).unwrap();
        let u = solve_single_birth_u(&m, &f, 1.0, &opts).unwrap();
        for j in 0..=100 {
            let t = j as f64 * 0.01;
            for k in 1..=200 {
                let x = k as f64 * 0.05;
                assert!(pi.pi(t, x) / x <= 1.0 / (2.0 - 1.0) + 1e-9);
                assert!(u.u(t, x) <= pi.pi(t, x) + 1e-12);
            }
        }
    }

    #[test]
    fn finite_rate_moment_matches_single_birth() {
        let m = model_a();
        let f = TestFunction::capped_linear(1.0, 10.0).unwrap();
        let opts = SolverOptions::with_step(0.01);
        let a = solve_moment_pi(&m, &f, 1.0, &opts).unwrap();
        let b = solve_finite_rate_moment(&OffspringLaw::single_birth(&m).unwrap(), &f, 1.0, &opts).unwrap();
        for (x, y) in a.curve.values.iter().zip(&b.curve.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
