//! Lévy triplet data for bounded-variation one-sided processes: the jump
//! measure Π, the Laplace exponent ψ, its right inverse Φ, exponential
//! tilting and the scale function W.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gl16, integrate_panels};

/// Default grid step of the scale function table.
pub const DEFAULT_SCALE_STEP: f64 = 1e-3;

const PANEL: f64 = 0.1;

/// The shape of a jump measure on (0, ∞).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpKind {
    /// Density `rate * decay * exp(-decay z)`; total mass `rate`.
    Exponential { rate: f64, decay: f64 },
    /// Point masses `(size, weight)`, sorted by size.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Piecewise-linear density through `points`, zero below the first
    /// point, continued past the last point by `d_n exp(-tail_decay (z - z_n))`.
    Tabulated { points: Vec<(f64, f64)>, tail_decay: f64 },
}

/// A jump measure, optionally restricted to `[cutoff, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpMeasure {
    pub kind: JumpKind,
    #[serde(default)]
    pub cutoff: f64,
}

impl JumpMeasure {
    pub fn exponential(rate: f64, decay: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) || !(decay > 0.0 && decay.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "exponential measure needs rate >= 0 and decay > 0, got ({rate}, {decay})"
            )));
        }
        Ok(Self { kind: JumpKind::Exponential { rate, decay }, cutoff: 0.0 })
    }

    /// A finite collection of atoms; an empty list is the zero measure.
    pub fn atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(z, w) in &atoms {
            if !(z > 0.0 && z.is_finite()) || !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "atoms need positive finite size and weight, got ({z}, {w})"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { kind: JumpKind::Atoms { atoms }, cutoff: 0.0 })
    }

    pub fn zero() -> Self {
        Self { kind: JumpKind::Atoms { atoms: Vec::new() }, cutoff: 0.0 }
    }

    /// Tabulated density. The exponential tail is fitted through the last
    /// two points and must decay, otherwise the first moment is infinite.
    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidModel("tabulated density needs at least two points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidModel("tabulated grid points must be distinct".into()));
            }
        }
        for &(z, d) in &points {
            if !(z > 0.0 && z.is_finite()) || !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "tabulated density needs z > 0 and d >= 0, got ({z}, {d})"
                )));
            }
        }
        let n = points.len();
        let (z1, d1) = points[n - 2];
        let (z2, d2) = points[n - 1];
        let tail_decay = if d2 == 0.0 {
            f64::INFINITY
        } else if d1 > d2 {
            (d1 / d2).ln() / (z2 - z1)
        } else {
            return Err(Error::InvalidModel(
                "tabulated density tail does not decay; first moment would be infinite".into(),
            ));
        };
        Ok(Self { kind: JumpKind::Tabulated { points, tail_decay }, cutoff: 0.0 })
    }

    /// Restriction to `[eps, ∞)`.
    pub fn truncated(&self, eps: f64) -> Self {
        Self { kind: self.kind.clone(), cutoff: self.cutoff.max(eps.max(0.0)) }
    }

    /// `e^{-phi z} Π(dz)`.
    pub fn tilted(&self, phi: f64) -> Self {
        let kind = match &self.kind {
            JumpKind::Exponential { rate, decay } => JumpKind::Exponential {
                rate: rate * decay / (decay + phi),
                decay: decay + phi,
            },
            JumpKind::Atoms { atoms } => JumpKind::Atoms {
                atoms: atoms.iter().map(|&(z, w)| (z, w * (-phi * z).exp())).collect(),
            },
            JumpKind::Tabulated { points, tail_decay } => JumpKind::Tabulated {
                points: points.iter().map(|&(z, d)| (z, d * (-phi * z).exp())).collect(),
                tail_decay: tail_decay + phi,
            },
        };
        Self { kind, cutoff: self.cutoff }
    }

    /// `k Π(dz)`.
    pub fn scaled(&self, k: f64) -> Self {
        let kind = match &self.kind {
            JumpKind::Exponential { rate, decay } => {
                JumpKind::Exponential { rate: rate * k, decay: *decay }
            }
            JumpKind::Atoms { atoms } => {
                JumpKind::Atoms { atoms: atoms.iter().map(|&(z, w)| (z, w * k)).collect() }
            }
            JumpKind::Tabulated { points, tail_decay } => JumpKind::Tabulated {
                points: points.iter().map(|&(z, d)| (z, d * k)).collect(),
                tail_decay: *tail_decay,
            },
        };
        Self { kind, cutoff: self.cutoff }
    }

    /// Probability measure proportional to Π; the zero measure stays zero.
    pub fn normalized(&self) -> Self {
        let m = self.total_mass();
        if m > 0.0 {
            self.scaled(1.0 / m)
        } else {
            self.clone()
        }
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.kind, JumpKind::Atoms { .. })
    }

    pub fn is_zero(&self) -> bool {
        self.total_mass() == 0.0
    }

    /// Jump density at `z`, `None` for atomic measures.
    pub fn density(&self, z: f64) -> Option<f64> {
        if z < self.cutoff || z <= 0.0 {
            return if self.has_density() { Some(0.0) } else { None };
        }
        match &self.kind {
            JumpKind::Exponential { rate, decay } => Some(rate * decay * (-decay * z).exp()),
            JumpKind::Atoms { .. } => None,
            JumpKind::Tabulated { points, tail_decay } => Some(tab_density(points, *tail_decay, z)),
        }
    }

    /// Π((x, ∞)).
    pub fn tail(&self, x: f64) -> f64 {
        self.tail_impl(x, false)
    }

    /// Π([x, ∞)).
    pub fn tail_closed(&self, x: f64) -> f64 {
        self.tail_impl(x, true)
    }

    fn tail_impl(&self, x: f64, closed: bool) -> f64 {
        let x = x.max(0.0);
        match &self.kind {
            JumpKind::Exponential { rate, decay } => rate * (-decay * x.max(self.cutoff)).exp(),
            JumpKind::Atoms { atoms } => atoms
                .iter()
                .filter(|&&(z, _)| z >= self.cutoff && (z > x || (closed && z == x)))
                .map(|&(_, w)| w)
                .sum(),
            JumpKind::Tabulated { points, tail_decay } => {
                tab_tail(points, *tail_decay, x.max(self.cutoff))
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.tail(0.0)
    }

    /// ⟨Π, ρ⟩ = ∫ z Π(dz).
    pub fn mean(&self) -> f64 {
        self.mean_exp(0.0)
    }

    /// ∫ z e^{-βz} Π(dz).
    pub fn mean_exp(&self, beta: f64) -> f64 {
        let eps = self.cutoff;
        match &self.kind {
            JumpKind::Exponential { rate, decay } => {
                let nu = decay + beta;
                rate * decay * (-nu * eps).exp() * (eps / nu + 1.0 / (nu * nu))
            }
            JumpKind::Atoms { atoms } => atoms
                .iter()
                .filter(|&&(z, _)| z >= eps)
                .map(|&(z, w)| z * w * (-beta * z).exp())
                .sum(),
            JumpKind::Tabulated { points, tail_decay } => {
                let (body, start, ds) = self.tab_body(points, *tail_decay, |z| z * (-beta * z).exp());
                let nu = tail_decay + beta;
                body + if nu.is_finite() {
                    ds * (-beta * start).exp() * (start / nu + 1.0 / (nu * nu))
                } else {
                    0.0
                }
            }
        }
    }

    /// ∫ (1 - e^{-βz}) Π(dz).
    pub fn laplace(&self, beta: f64) -> f64 {
        let eps = self.cutoff;
        match &self.kind {
            JumpKind::Exponential { rate, decay } => {
                rate * (-decay * eps).exp()
                    - rate * decay / (beta + decay) * (-(beta + decay) * eps).exp()
            }
            JumpKind::Atoms { atoms } => atoms
                .iter()
                .filter(|&&(z, _)| z >= eps)
                .map(|&(z, w)| w * -(-beta * z).exp_m1())
                .sum(),
            JumpKind::Tabulated { points, tail_decay } => {
                let (body, start, ds) =
                    self.tab_body(points, *tail_decay, |z| -(-beta * z).exp_m1());
                body + if tail_decay.is_finite() {
                    ds / tail_decay - ds * (-beta * start).exp() / (tail_decay + beta)
                } else {
                    0.0
                }
            }
        }
    }

    /// Integral of `weight(z) * density(z)` over the tabulated grid (above
    /// the cutoff); also returns the tail start and the density there.
    fn tab_body(
        &self,
        points: &[(f64, f64)],
        tail_decay: f64,
        weight: impl Fn(f64) -> f64,
    ) -> (f64, f64, f64) {
        let eps = self.cutoff;
        let mut body = 0.0;
        for w in points.windows(2) {
            let (a, b) = (w[0].0.max(eps), w[1].0);
            if b <= a {
                continue;
            }
            body += integrate_panels(gl16(), a, b, &[], PANEL, |z| {
                weight(z) * tab_density(points, tail_decay, z)
            });
        }
        let zn = points[points.len() - 1].0;
        let start = zn.max(eps);
        (body, start, tab_density(points, tail_decay, start))
    }

    /// Breakpoints of the measure inside `(lo, hi)`: the cutoff and, for
    /// tabulated densities, the grid points.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if self.cutoff > lo && self.cutoff < hi {
            out.push(self.cutoff);
        }
        if let JumpKind::Tabulated { points, .. } = &self.kind {
            out.extend(points.iter().map(|p| p.0).filter(|&z| z > lo && z < hi));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// ∫_{(lo, hi]} g dΠ. Density kinds use 16-point Gauss-Legendre panels
    /// split at `breaks` and at the measure's own breakpoints.
    pub fn integrate(&self, lo: f64, hi: f64, breaks: &[f64], mut g: impl FnMut(f64) -> f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        match &self.kind {
            JumpKind::Atoms { atoms } => atoms
                .iter()
                .filter(|&&(z, _)| z >= self.cutoff && z > lo && z <= hi)
                .map(|&(z, w)| w * g(z))
                .sum(),
            _ => {
                let lo = lo.max(self.cutoff).max(0.0);
                if !(hi > lo) {
                    return 0.0;
                }
                let mut all = self.breakpoints(lo, hi);
                all.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
                all.sort_by(f64::total_cmp);
                all.dedup();
                let max_len = match &self.kind {
                    JumpKind::Exponential { decay, .. } => PANEL.min(1.0 / decay),
                    JumpKind::Tabulated { tail_decay, .. } => PANEL.min(1.0 / tail_decay),
                    _ => PANEL,
                };
                integrate_panels(gl16(), lo, hi, &all, max_len, |z| {
                    g(z) * self.density(z).unwrap_or(0.0)
                })
            }
        }
    }

    /// A level beyond which the remaining mass is below `rel` times the total.
    pub fn effective_upper(&self, rel: f64) -> f64 {
        let eps = self.cutoff;
        match &self.kind {
            JumpKind::Exponential { decay, .. } => eps + (1.0 / rel).ln() / decay,
            JumpKind::Atoms { atoms } => atoms.last().map_or(0.0, |a| a.0),
            JumpKind::Tabulated { points, tail_decay } => {
                let zn = points[points.len() - 1].0.max(eps);
                if tail_decay.is_finite() {
                    zn + (1.0 / rel).ln() / tail_decay
                } else {
                    zn
                }
            }
        }
    }
}

fn tab_density(points: &[(f64, f64)], tail_decay: f64, z: f64) -> f64 {
    let n = points.len();
    if z < points[0].0 {
        return 0.0;
    }
    let (zn, dn) = points[n - 1];
    if z >= zn {
        return if tail_decay.is_finite() { dn * (-tail_decay * (z - zn)).exp() } else if z == zn { dn } else { 0.0 };
    }
    let i = points.partition_point(|p| p.0 <= z) - 1;
    let (a, da) = points[i];
    let (b, db) = points[i + 1];
    da + (db - da) * (z - a) / (b - a)
}

fn tab_tail(points: &[(f64, f64)], tail_decay: f64, x: f64) -> f64 {
    let n = points.len();
    let (zn, dn) = points[n - 1];
    let mut total = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0].0.max(x), w[1].0);
        if b <= a {
            continue;
        }
        let da = tab_density(points, tail_decay, a);
        let db = w[1].1;
        total += 0.5 * (da + db) * (b - a);
    }
    if tail_decay.is_finite() {
        let s = zn.max(x);
        total += dn * (-tail_decay * (s - zn)).exp() / tail_decay;
    }
    total
}

/// ⟨Π, ρ⟩ for a jump measure.
pub fn mean_jump(measure: &JumpMeasure) -> f64 {
    measure.mean()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `S_t = a + (subordinator) - c t`, started at `a > 0`.
    SubordinatorNegativeDrift,
    /// `S*_t = c t - (subordinator)`, started at 0.
    NegativeSubordinatorPositiveDrift,
}

/// Drift, jump measure, orientation and start level.
///
/// `start` may be left at 0 for a subordinator-type model obtained by
/// tilting; it must be set (see [`LevyModel::with_start`]) before paths are
/// simulated.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyModel {
    drift: f64,
    measure: JumpMeasure,
    orientation: Orientation,
    start: f64,
    phi0: f64,
}

impl LevyModel {
    pub fn new(drift: f64, measure: JumpMeasure, orientation: Orientation, start: f64) -> Result<Self> {
        if !(drift > 0.0 && drift.is_finite()) {
            return Err(Error::InvalidModel(format!("drift must be positive, got {drift}")));
        }
        let mean = measure.mean();
        if !mean.is_finite() {
            return Err(Error::InvalidModel("mean jump size is infinite".into()));
        }
        match orientation {
            Orientation::SubordinatorNegativeDrift => {
                if !(start >= 0.0 && start.is_finite()) {
                    return Err(Error::InvalidModel(format!("start must be >= 0, got {start}")));
                }
                if mean == drift {
                    return Err(Error::InvalidModel(format!(
                        "critical drift not supported (mean jump {mean} = c = {drift})"
                    )));
                }
                if mean > drift {
                    return Err(Error::InvalidModel(format!(
                        "subordinator with negative drift needs mean jump {mean} < c = {drift}"
                    )));
                }
            }
            Orientation::NegativeSubordinatorPositiveDrift => {
                if start != 0.0 {
                    return Err(Error::InvalidModel("negative subordinator starts at 0".into()));
                }
                if mean == drift {
                    return Err(Error::InvalidModel(format!(
                        "critical drift not supported (mean jump {mean} = c = {drift})"
                    )));
                }
                if mean < drift {
                    return Err(Error::InvalidModel(format!(
                        "negative subordinator with positive drift needs c = {drift} < mean jump {mean}"
                    )));
                }
            }
        }
        let mut model = Self { drift, measure, orientation, start, phi0: 0.0 };
        if mean > drift {
            model.phi0 = model.positive_root()?;
        }
        Ok(model)
    }

    pub fn with_start(&self, start: f64) -> Result<Self> {
        Self::new(self.drift, self.measure.clone(), self.orientation, start)
    }

    /// Same drift and orientation with the measure restricted to `[eps, ∞)`.
    pub fn truncated(&self, eps: f64) -> Result<Self> {
        Self::new(self.drift, self.measure.truncated(eps), self.orientation, self.start)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn measure(&self) -> &JumpMeasure {
        &self.measure
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn mean_jump(&self) -> f64 {
        self.measure.mean()
    }

    pub fn is_subcritical(&self) -> bool {
        self.mean_jump() < self.drift
    }

    /// ψ(β) = cβ − ∫(1−e^{−βz})Π(dz).
    pub fn laplace_exponent(&self, beta: f64) -> f64 {
        self.drift * beta - self.measure.laplace(beta)
    }

    /// ψ′(β) = c − ∫ z e^{−βz} Π(dz).
    pub fn laplace_exponent_deriv(&self, beta: f64) -> f64 {
        self.drift - self.measure.mean_exp(beta)
    }

    /// Φ(0): zero below the critical drift, the positive root of ψ above it.
    pub fn phi_zero(&self) -> f64 {
        self.phi0
    }

    /// Φ(q) = sup{β ≥ 0 : ψ(β) = q}.
    pub fn phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("phi needs q >= 0, got {q}")));
        }
        if q == 0.0 {
            return Ok(self.phi0);
        }
        // ψ(β + Φ(0)) is the exponent of the tilted, subcritical model; its
        // linear bounds bracket the root.
        let shift = self.phi0;
        let sub_mean = self.drift - self.laplace_exponent_deriv(shift);
        let lo = q / self.drift;
        let hi = q / (self.drift - sub_mean);
        let f = |b: f64| self.laplace_exponent(b + shift) - q;
        let root = bisect_polish(f, |b| self.laplace_exponent_deriv(b + shift), lo, hi)?;
        Ok(root + shift)
    }

    fn positive_root(&self) -> Result<f64> {
        let psi = |b: f64| self.laplace_exponent(b);
        let mut hi = 1.0;
        let mut k = 0;
        while psi(hi) <= 0.0 {
            hi *= 2.0;
            k += 1;
            if k > 200 {
                return Err(Error::ConvergenceFailure { what: "phi(0) upper bracket", iterations: k });
            }
        }
        let mut lo = hi;
        k = 0;
        while psi(lo) >= 0.0 {
            lo *= 0.5;
            k += 1;
            if k > 200 {
                return Err(Error::ConvergenceFailure { what: "phi(0) lower bracket", iterations: k });
            }
        }
        bisect_polish(psi, |b| self.laplace_exponent_deriv(b), lo, hi)
    }

    /// The subcritical model with measure e^{−Φ(0)z}Π(dz) and the same drift.
    pub fn tilt(&self) -> LevyModel {
        LevyModel {
            drift: self.drift,
            measure: self.measure.tilted(self.phi0),
            orientation: Orientation::SubordinatorNegativeDrift,
            start: match self.orientation {
                Orientation::SubordinatorNegativeDrift => self.start,
                Orientation::NegativeSubordinatorPositiveDrift => 0.0,
            },
            phi0: 0.0,
        }
    }

    /// Scale function table on `[0, x_max]` with the default grid step.
    pub fn scale_w(&self, x_max: f64, tol: f64) -> Result<ScaleTable> {
        ScaleTable::build(self, x_max, tol, DEFAULT_SCALE_STEP)
    }

    pub fn scale_w_with_step(&self, x_max: f64, tol: f64, step: f64) -> Result<ScaleTable> {
        ScaleTable::build(self, x_max, tol, step)
    }
}

/// Bisection on a sign change in `[lo, hi]` down to width 1e-12 (relative
/// above 1), then Newton steps kept inside the final bracket.
fn bisect_polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::ConvergenceFailure { what: "root bracket", iterations: 0 });
    }
    let increasing = fhi > 0.0;
    let mut it = 0;
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
        if it > 400 {
            return Err(Error::ConvergenceFailure { what: "bisection", iterations: it });
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let nx = x - f(x) / d;
        if nx < lo || nx > hi {
            break;
        }
        x = nx;
    }
    Ok(x)
}

/// Scale function W on a uniform grid.
///
/// The subcritical part is the renewal series `W = c⁻¹ Σ K_n` with
/// `K_0 = 1`, `K_n = κ * K_{n−1}`, `κ = Π̄/c`, each convolution done by the
/// trapezoid rule. A supercritical model is reduced to its tilted version
/// and multiplied back by `e^{Φ(0)x}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleTable {
    pub step: f64,
    /// W of the subcritical (possibly tilted) model at `j * step`.
    pub values: Vec<f64>,
    /// Index of the last series term added.
    pub terms: usize,
    /// Bound on the series remainder.
    pub error_bound: f64,
    /// Φ(0); zero for subcritical models.
    pub exp_rate: f64,
    pub drift: f64,
}

impl ScaleTable {
    fn build(model: &LevyModel, x_max: f64, tol: f64, step: f64) -> Result<Self> {
        if !(x_max >= 0.0) || !(step > 0.0) || !(tol > 0.0) {
            return Err(Error::InvalidArgument("scale table needs x_max >= 0, step > 0, tol > 0".into()));
        }
        let sub = model.tilt();
        let c = sub.drift;
        let theta = sub.mean_jump() / c;
        if theta >= 1.0 {
            return Err(Error::ConvergenceFailure { what: "scale series (theta >= 1)", iterations: 0 });
        }
        let m = (x_max / step).ceil() as usize;
        let kappa: Vec<f64> = (0..=m).map(|j| sub.measure.tail(j as f64 * step) / c).collect();
        let mut term = vec![1.0; m + 1];
        let mut sum = term.clone();
        let mut n = 0;
        let mut bound = f64::INFINITY;
        let cap = 100_000;
        while n < cap {
            let sup = term.iter().fold(0.0f64, |a, &b| a.max(b));
            // sup K_{n+1} <= theta sup K_n, so the remainder after K_n is
            // at most c⁻¹ theta sup K_n / (1 - theta).
            bound = theta * sup / ((1.0 - theta) * c);
            if bound < tol || theta == 0.0 {
                if theta == 0.0 {
                    bound = 0.0;
                }
                break;
            }
            let next = convolve_trapezoid(&kappa, &term, step);
            for (s, v) in sum.iter_mut().zip(&next) {
                *s += v;
            }
            term = next;
            n += 1;
        }
        if n >= cap {
            return Err(Error::ConvergenceFailure { what: "scale series", iterations: n });
        }
        let values = sum.into_iter().map(|s| s / c).collect();
        Ok(Self { step, values, terms: n, error_bound: bound, exp_rate: model.phi0, drift: c })
    }

    pub fn x_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// W(x) with W = 0 on (−∞, 0). Linear interpolation between grid
    /// points; NaN beyond the table.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let pos = x / self.step;
        let i = pos.floor() as usize;
        let sub = if i + 1 >= self.values.len() {
            if i < self.values.len() && (pos - i as f64) < 1e-9 {
                self.values[i]
            } else if (x - self.x_max()).abs() <= 1e-9 * self.x_max().max(1.0) {
                *self.values.last().unwrap()
            } else {
                return f64::NAN;
            }
        } else {
            let w = pos - i as f64;
            self.values[i] * (1.0 - w) + self.values[i + 1] * w
        };
        sub * (self.exp_rate * x).exp()
    }
}

fn convolve_trapezoid(kernel: &[f64], f: &[f64], step: f64) -> Vec<f64> {
    let m = f.len();
    let mut out = vec![0.0; m];
    for i in 1..m {
        let mut s = 0.5 * (kernel[0] * f[i] + kernel[i] * f[0]);
        let (k, g) = (&kernel[1..i], &f[1..i]);
        s += k.iter().zip(g.iter().rev()).map(|(a, b)| a * b).sum::<f64>();
        out[i] = s * step;
    }
    out
}
