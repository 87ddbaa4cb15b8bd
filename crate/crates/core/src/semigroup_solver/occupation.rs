//! Weighted occupation functional by backward marching in time.

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;

use super::{check_regime, segment_integral, CellQuadrature, SolverOptions, TestFunction};

/// `ω_t(x) = A(t, x) + L(t) − L(t + min(x, T − t))` where
/// `A(t, x) = ∫_0^{min(x, T−t)} h(t + r) f(x − r) dr` and `L(s) = ∫_s^T K`,
/// `K = c⁻¹ ⟨Π, 1 − e^{−ω}⟩`.
#[derive(Clone, Debug)]
pub struct OccupationSolution {
    pub step: f64,
    pub horizon: f64,
    /// `K` at the grid nodes.
    pub kernel: Vec<f64>,
    /// `L` at the grid nodes.
    pub tail_integral: Vec<f64>,
    pub h: TestFunction,
    pub f: TestFunction,
}

impl OccupationSolution {
    fn l_at(&self, s: f64) -> f64 {
        l_at(&self.kernel, &self.tail_integral, self.step, s)
    }

    pub fn omega(&self, t: f64, x: f64) -> Result<f64> {
        if t >= self.horizon {
            return Ok(0.0);
        }
        let m = x.min(self.horizon - t);
        let a = segment_integral(&self.h, &self.f, t, t + m, x + t)?;
        Ok(a + self.l_at(t) - self.l_at(t + m))
    }

    /// `ω_0(x)`; `E_a exp(−∫ h(t)⟨X_t, f⟩ dt) = exp(−ω_0(a))`.
    pub fn omega0(&self, x: f64) -> Result<f64> {
        self.omega(0.0, x)
    }
}

#[inline]
fn l_at(k: &[f64], l: &[f64], step: f64, s: f64) -> f64 {
    let n = k.len() - 1;
    let pos = s / step;
    if pos >= n as f64 {
        return 0.0;
    }
    let j = (pos.max(0.0).floor() as usize).min(n - 1);
    let th = (pos - j as f64).clamp(0.0, 1.0);
    l[j + 1] + step * ((1.0 - th) * k[j] + 0.5 * (1.0 - th * th) * (k[j + 1] - k[j]))
}

/// Solves the occupation equation for a time weight `h` with compact
/// support; `ω ≡ 0` from the end of the support on.
pub fn solve_occupation(
    model: &LevyModel,
    h: &TestFunction,
    f: &TestFunction,
    opts: &SolverOptions,
) -> Result<OccupationSolution> {
    check_regime(model)?;
    let end = h.support_end();
    if !end.is_finite() {
        return Err(Error::UnsupportedHorizon);
    }
    let step = opts.step;
    let measure = model.measure();
    let kappa = 1.0 / model.drift();
    if end == 0.0 {
        return Ok(OccupationSolution {
            step,
            horizon: 0.0,
            kernel: vec![0.0, 0.0],
            tail_integral: vec![0.0, 0.0],
            h: h.clone(),
            f: f.clone(),
        });
    }
    let n = opts.nodes(end)?;
    let horizon = n as f64 * step;
    let cells = CellQuadrature::new(measure, step, n);
    let upper = measure.effective_upper(1e-17);
    let mut k = vec![0.0; n + 1];
    let mut l = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let t = i as f64 * step;
        let room = horizon - t;
        // z in (0, room]: ω = A(t, z) + L(t) − L(t + z)
        let mut near: Vec<(f64, f64, f64)> = Vec::new();
        for cell in &cells.cells[..n - i] {
            for &(z, w) in cell {
                near.push((z, w, segment_integral(h, f, t, t + z, z + t)?));
            }
        }
        // z > room: ω = A(t, z) + L(t), A evaluated over the whole window
        let a_far = |z: f64| segment_integral(h, f, t, horizon, z + t).unwrap_or(f64::NAN);
        let (far_hi, far_tail) = match f.constant_from() {
            Some(x0) => (room + x0, Some(a_far(room + x0 + 1.0))),
            None => ((room + upper).max(room + 1.0), None),
        };
        let mut breaks: Vec<f64> = f.breakpoints().into_iter().map(|b| b + room).collect();
        breaks.extend(h.breakpoints().into_iter().map(|b| b - t));
        let mut far_pts: Vec<(f64, f64)> = Vec::new();
        measure.integrate(room, far_hi, &breaks, |z| {
            far_pts.push((z, a_far(z)));
            0.0
        });
        // The quadrature visits the points in the same order on every call,
        // so the cached A values are reused by position.
        let far_total = |lt: f64| -> f64 {
            let mut idx = 0usize;
            let mut v = measure.integrate(room, far_hi, &breaks, |_| {
                let a = far_pts[idx].1;
                idx += 1;
                1.0 - (-(a + lt)).exp()
            });
            if let Some(a_inf) = far_tail {
                v += (1.0 - (-(a_inf + lt)).exp()) * measure.tail(far_hi);
            }
            v
        };
        let mut ki = k[i + 1];
        for _ in 0..200 {
            k[i] = ki;
            l[i] = l[i + 1] + 0.5 * step * (k[i] + k[i + 1]);
            let lt = l[i];
            let mut hsum = 0.0;
            for &(z, w, a) in &near {
                hsum += w * (1.0 - (-(a + lt - l_at(&k, &l, step, t + z))).exp());
            }
            hsum += far_total(lt);
            let next = kappa * hsum;
            let done = (next - ki).abs() <= 1e-15 * next.abs().max(1.0);
            ki = next;
            if done {
                break;
            }
        }
        k[i] = ki;
        l[i] = l[i + 1] + 0.5 * step * (k[i] + k[i + 1]);
    }
    Ok(OccupationSolution { step, horizon, kernel: k, tail_integral: l, h: h.clone(), f: f.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{JumpMeasure, Orientation};

    #[test]
    fn zero_weight_gives_zero() {
        let m = LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let h = TestFunction::constant(0.0).unwrap();
        let s = solve_occupation(&m, &h, &TestFunction::constant(1.0).unwrap(), &SolverOptions::default()).unwrap();
        assert_eq!(s.omega0(1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_particle_without_jumps() {
        let m = LevyModel::new(2.0, JumpMeasure::zero(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let h = TestFunction::indicator(0.0, 1.0).unwrap();
        let s = solve_occupation(&m, &h, &TestFunction::constant(1.0).unwrap(), &SolverOptions::with_step(0.01)).unwrap();
        assert!((s.omega0(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(((-s.omega0(1.0).unwrap()).exp() - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn unbounded_weight_rejected() {
        let m = LevyModel::new(2.0, JumpMeasure::zero(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let h = TestFunction::constant(1.0).unwrap();
        let r = solve_occupation(&m, &h, &h, &SolverOptions::default());
        assert_eq!(r.unwrap_err(), Error::UnsupportedHorizon);
    }

    #[test]
    fn total_occupation_matches_hitting_transform() {
        // h = 1 on [0, T) with T large and f ≡ q: E exp(−q ∫⟨X,1⟩) = e^{−aΦ(qc)}
        // up to the mass beyond T, which is negligible here.
        let m = LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let q = 0.5;
        let h = TestFunction::indicator(0.0, 25.0).unwrap();
        let f = TestFunction::constant(q).unwrap();
        let s = solve_occupation(&m, &h, &f, &SolverOptions::with_step(0.02)).unwrap();
        let exact = -m.phi(q * 2.0).unwrap();
        assert!((-s.omega0(1.0).unwrap() - exact).abs() < 1e-4, "{} vs {exact}", -s.omega0(1.0).unwrap());
    }
}
