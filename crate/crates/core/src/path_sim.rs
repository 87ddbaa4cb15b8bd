//! Exact simulation of killed bounded-variation paths.
//!
//! Jumps below the truncation level `ε` are dropped, so a path is a finite
//! list of jump events separated by linear drift segments. A spectrally
//! positive path starts at `a > 0`, drifts down at rate `c` and is killed
//! when it reaches 0 continuously. A spectrally negative path starts at 0,
//! drifts up and is killed by the first jump that takes it to or below 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{JumpKind, JumpMeasure, LevyModel, Orientation};
use crate::rng::StreamRng;

/// Default cap on the number of jumps in one path.
pub const DEFAULT_EVENT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub pre_level: f64,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub index: u64,
    pub seed: u64,
    pub orientation: Orientation,
    pub drift: f64,
    pub start: f64,
    pub truncation: f64,
    /// Π(ε, ∞): jump rate of the simulated measure.
    pub jump_rate: f64,
    /// ∫_0^ε z Π(dz): drift removed by the truncation.
    pub dropped_drift: f64,
    pub events: Vec<JumpEvent>,
    /// First passage τ₀⁻.
    pub tau0: f64,
}

impl PathRecord {
    fn sign(&self) -> f64 {
        match self.orientation {
            Orientation::SubordinatorNegativeDrift => 1.0,
            Orientation::NegativeSubordinatorPositiveDrift => -1.0,
        }
    }

    /// Post-jump level of event `i`.
    pub fn post_level(&self, i: usize) -> f64 {
        let e = &self.events[i];
        e.pre_level + self.sign() * e.size
    }

    /// Right-continuous level at path time `s ∈ [0, τ₀⁻]`; `None` after the kill.
    pub fn level_at(&self, s: f64) -> Option<f64> {
        if s < 0.0 || s > self.tau0 {
            return None;
        }
        let k = self.events.partition_point(|e| e.time <= s);
        let (t0, l0) = if k == 0 {
            (0.0, self.start)
        } else {
            (self.events[k - 1].time, self.post_level(k - 1))
        };
        Some(l0 - self.sign() * self.drift * (s - t0))
    }

    /// Level just before the killing time.
    pub fn level_before_kill(&self) -> f64 {
        match self.orientation {
            Orientation::SubordinatorNegativeDrift => {
                let (t0, l0) = match self.events.last() {
                    Some(_) => (self.events[self.events.len() - 1].time, self.post_level(self.events.len() - 1)),
                    None => (0.0, self.start),
                };
                l0 - self.drift * (self.tau0 - t0)
            }
            Orientation::NegativeSubordinatorPositiveDrift => {
                self.events.last().map_or(0.0, |e| e.pre_level)
            }
        }
    }

    /// `a + Σ z` for the first orientation, `Σ z` for the second; equals
    /// `c τ₀⁻` on every path up to rounding.
    pub fn jump_total(&self) -> f64 {
        let s: f64 = self.events.iter().map(|e| e.size).sum();
        match self.orientation {
            Orientation::SubordinatorNegativeDrift => self.start + s,
            Orientation::NegativeSubordinatorPositiveDrift => s,
        }
    }
}

/// First passage data of a path across `x` (downwards) and `t` (upwards).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExitTimes {
    pub tau_down: f64,
    pub tau_up: f64,
    /// Pre- and post-jump levels of the crossing jump, if the crossing that
    /// happens by a jump occurs before the kill.
    pub jump_pre_level: Option<f64>,
    pub jump_post_level: Option<f64>,
}

impl ExitTimes {
    /// `S_{τ⁺} − t` for an upward jump crossing.
    pub fn overshoot(&self, upper: f64) -> Option<f64> {
        self.jump_post_level.map(|p| p - upper)
    }
}

/// τ_x⁻ and τ_t⁺ computed from the event list; `∞` when the level is not
/// crossed before the kill.
pub fn exit_times(path: &PathRecord, lower: f64, upper: f64) -> ExitTimes {
    let c = path.drift;
    let mut out = ExitTimes {
        tau_down: f64::INFINITY,
        tau_up: f64::INFINITY,
        jump_pre_level: None,
        jump_post_level: None,
    };
    match path.orientation {
        Orientation::SubordinatorNegativeDrift => {
            // down: continuous
            if path.start <= lower {
                out.tau_down = 0.0;
            } else {
                let (mut s0, mut l0) = (0.0, path.start);
                let mut found = false;
                for (i, e) in path.events.iter().enumerate() {
                    if e.pre_level <= lower {
                        out.tau_down = s0 + (l0 - lower) / c;
                        found = true;
                        break;
                    }
                    s0 = e.time;
                    l0 = path.post_level(i);
                }
                if !found && lower >= 0.0 {
                    out.tau_down = s0 + (l0 - lower) / c;
                }
            }
            // up: by jumps
            if path.start > upper {
                out.tau_up = 0.0;
            } else if let Some((i, e)) =
                path.events.iter().enumerate().find(|(i, _)| path.post_level(*i) > upper)
            {
                out.tau_up = e.time;
                out.jump_pre_level = Some(e.pre_level);
                out.jump_post_level = Some(path.post_level(i));
            }
        }
        Orientation::NegativeSubordinatorPositiveDrift => {
            // down: by jumps
            if path.start < lower {
                out.tau_down = 0.0;
            } else if let Some((i, e)) =
                path.events.iter().enumerate().find(|(i, _)| path.post_level(*i) <= lower)
            {
                out.tau_down = e.time;
                out.jump_pre_level = Some(e.pre_level);
                out.jump_post_level = Some(path.post_level(i));
            }
            // up: continuous
            if path.start > upper {
                out.tau_up = 0.0;
            } else {
                let (mut s0, mut l0) = (0.0, path.start);
                for (i, e) in path.events.iter().enumerate() {
                    if e.pre_level > upper {
                        out.tau_up = s0 + (upper - l0) / c;
                        break;
                    }
                    s0 = e.time;
                    l0 = path.post_level(i);
                }
            }
        }
    }
    out
}

/// Sampler for the normalized restriction of a jump measure to `[ε, ∞)`.
#[derive(Clone, Debug)]
pub enum JumpSampler {
    Empty,
    Exponential { cutoff: f64, decay: f64 },
    Alias { sizes: Vec<f64>, prob: Vec<f64>, alias: Vec<usize> },
    Tabulated { segments: Vec<Segment>, cumulative: Vec<f64>, tail: Option<(f64, f64)> },
}

/// One linear piece of a tabulated density.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
}

impl JumpSampler {
    pub fn new(measure: &JumpMeasure) -> Self {
        if measure.total_mass() <= 0.0 {
            return Self::Empty;
        }
        let eps = measure.cutoff;
        match &measure.kind {
            JumpKind::Exponential { decay, .. } => Self::Exponential { cutoff: eps, decay: *decay },
            JumpKind::Atoms { atoms } => {
                let kept: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.0 >= eps).collect();
                let (sizes, prob, alias) = vose(&kept);
                Self::Alias { sizes, prob, alias }
            }
            JumpKind::Tabulated { points, tail_decay } => {
                let mut segments = Vec::new();
                let mut cumulative = Vec::new();
                let mut acc = 0.0;
                for w in points.windows(2) {
                    let (lo, hi) = (w[0].0.max(eps), w[1].0);
                    if hi <= lo {
                        continue;
                    }
                    let d_lo = measure.density(lo).unwrap_or(0.0);
                    let d_hi = w[1].1;
                    acc += 0.5 * (d_lo + d_hi) * (hi - lo);
                    segments.push(Segment { lo, hi, d_lo, d_hi });
                    cumulative.push(acc);
                }
                let zn = points[points.len() - 1].0.max(eps);
                let tail = if tail_decay.is_finite() {
                    let dn = measure.density(zn).unwrap_or(0.0);
                    acc += dn / tail_decay;
                    cumulative.push(acc);
                    Some((zn, *tail_decay))
                } else {
                    None
                };
                Self::Tabulated { segments, cumulative, tail }
            }
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match self {
            Self::Empty => f64::NAN,
            Self::Exponential { cutoff, decay } => cutoff + rng.exp(*decay),
            Self::Alias { sizes, prob, alias } => {
                let i = rng.below(sizes.len());
                if rng.uniform() < prob[i] {
                    sizes[i]
                } else {
                    sizes[alias[i]]
                }
            }
            Self::Tabulated { segments, cumulative, tail } => {
                let total = *cumulative.last().unwrap();
                let u = rng.uniform() * total;
                let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                if k == segments.len() {
                    let (zn, decay) = tail.unwrap();
                    return zn + rng.exp(decay);
                }
                let seg = segments[k];
                let before = if k == 0 { 0.0 } else { cumulative[k - 1] };
                let m = u - before;
                let slope = (seg.d_hi - seg.d_lo) / (seg.hi - seg.lo);
                let y = if slope.abs() < 1e-14 {
                    m / seg.d_lo
                } else {
                    (-seg.d_lo + (seg.d_lo * seg.d_lo + 2.0 * slope * m).max(0.0).sqrt()) / slope
                };
                (seg.lo + y).clamp(seg.lo, seg.hi)
            }
        }
    }
}

/// Vose alias table.
fn vose(atoms: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let n = atoms.len();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let mut scaled: Vec<f64> = atoms.iter().map(|a| a.1 * n as f64 / total).collect();
    let mut prob = vec![1.0; n];
    let mut alias: Vec<usize> = (0..n).collect();
    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
    while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
        prob[s] = scaled[s];
        alias[s] = l;
        scaled[l] -= 1.0 - scaled[s];
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    (atoms.iter().map(|a| a.0).collect(), prob, alias)
}

/// Largest ε with dropped drift ∫_0^ε zΠ(dz) ≤ 1e−4·c, provided the jump
/// rate Π(ε, ∞) stays below 10⁶.
pub fn default_truncation(model: &LevyModel) -> Result<f64> {
    let m = model.measure();
    let full = m.mean();
    let budget = 1e-4 * model.drift();
    let dropped = |e: f64| full - m.truncated(e).mean();
    let mut hi = m.effective_upper(1e-12).max(1e-12);
    if dropped(hi) <= budget {
        // still need ε > 0 and no dropped atoms worth mentioning
        hi = hi.min(1.0);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dropped(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps = lo.max(f64::MIN_POSITIVE);
    if m.tail(eps) > 1e6 {
        return Err(Error::InvalidModel(format!(
            "truncation {eps:e} leaves a jump rate above 1e6"
        )));
    }
    Ok(eps)
}

/// Reusable simulator for one model and truncation level.
#[derive(Clone, Debug)]
pub struct PathSimulator {
    model: LevyModel,
    truncation: f64,
    rate: f64,
    dropped_drift: f64,
    sampler: JumpSampler,
    budget: usize,
}

impl PathSimulator {
    pub fn new(model: &LevyModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("truncation must be > 0, got {eps}")));
        }
        let measure = model.measure().truncated(eps);
        let rate = measure.total_mass();
        if model.orientation() == Orientation::SubordinatorNegativeDrift && !(model.start() > 0.0) {
            return Err(Error::InvalidModel("paths of the subordinator need a start level > 0".into()));
        }
        if model.orientation() == Orientation::NegativeSubordinatorPositiveDrift && rate == 0.0 {
            return Err(Error::InvalidModel("no jumps above the truncation: the path is never killed".into()));
        }
        Ok(Self {
            model: model.clone(),
            truncation: eps,
            rate,
            dropped_drift: model.measure().mean() - measure.mean(),
            sampler: JumpSampler::new(&measure),
            budget: DEFAULT_EVENT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    fn record(&self, seed: u64, index: u64, events: Vec<JumpEvent>, tau0: f64) -> PathRecord {
        PathRecord {
            index,
            seed,
            orientation: self.model.orientation(),
            drift: self.model.drift(),
            start: self.model.start(),
            truncation: self.truncation,
            jump_rate: self.rate,
            dropped_drift: self.dropped_drift,
            events,
            tau0,
        }
    }

    /// Path `index` of the batch keyed by `seed`.
    pub fn simulate(&self, seed: u64, index: u64) -> Result<PathRecord> {
        let mut rng = StreamRng::new(seed, index);
        self.simulate_with(&mut rng, seed, index)
    }

    pub fn simulate_with(&self, rng: &mut StreamRng, seed: u64, index: u64) -> Result<PathRecord> {
        let c = self.model.drift();
        let mut events = Vec::new();
        let mut t = 0.0;
        match self.model.orientation() {
            Orientation::SubordinatorNegativeDrift => {
                let mut level = self.model.start();
                loop {
                    let gap = if self.rate > 0.0 { rng.exp(self.rate) } else { f64::INFINITY };
                    if level - c * gap <= 0.0 {
                        let tau0 = t + level / c;
                        return Ok(self.record(seed, index, events, tau0));
                    }
                    t += gap;
                    level -= c * gap;
                    let z = self.sampler.sample(rng);
                    events.push(JumpEvent { time: t, pre_level: level, size: z });
                    level += z;
                    if events.len() > self.budget {
                        return Err(Error::PathBudgetExceeded { index: Some(index), budget: self.budget });
                    }
                }
            }
            Orientation::NegativeSubordinatorPositiveDrift => {
                let mut level = 0.0;
                loop {
                    let gap = rng.exp(self.rate);
                    t += gap;
                    level += c * gap;
                    let z = self.sampler.sample(rng);
                    events.push(JumpEvent { time: t, pre_level: level, size: z });
                    level -= z;
                    if level <= 0.0 {
                        return Ok(self.record(seed, index, events, t));
                    }
                    if events.len() > self.budget {
                        return Err(Error::PathBudgetExceeded { index: Some(index), budget: self.budget });
                    }
                }
            }
        }
    }
}

/// One path with stream `(seed, 0)`.
pub fn simulate_path(model: &LevyModel, eps: f64, seed: u64) -> Result<PathRecord> {
    PathSimulator::new(model, eps)?.simulate(seed, 0)
}

/// `n_paths` paths; path `k` uses stream `(seed, k)`. Output is in index
/// order whatever the thread schedule.
pub fn batch_simulate(model: &LevyModel, eps: f64, n_paths: usize, seed: u64) -> Result<Vec<PathRecord>> {
    batch_map(model, eps, n_paths, seed, |p| p)
}

/// Simulates `n_paths` paths and maps each to `f(path)` without keeping the
/// paths; results are in index order.
pub fn batch_map<T: Send>(
    model: &LevyModel,
    eps: f64,
    n_paths: usize,
    seed: u64,
    f: impl Fn(PathRecord) -> T + Sync + Send,
) -> Result<Vec<T>> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be >= 1".into()));
    }
    let sim = PathSimulator::new(model, eps)?;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|k| sim.simulate(seed, k).map(&f))
        .collect()
}

/// Two subordinator paths driven by one Poisson random measure: the fine
/// path keeps every jump `≥ eps_fine`, the coarse path only jumps
/// `≥ eps_coarse`. Pathwise the coarse level never exceeds the fine level.
pub fn simulate_coupled(
    model: &LevyModel,
    eps_fine: f64,
    eps_coarse: f64,
    seed: u64,
    index: u64,
) -> Result<(PathRecord, PathRecord)> {
    if model.orientation() != Orientation::SubordinatorNegativeDrift {
        return Err(Error::InvalidModel("coupling is defined for the subordinator orientation".into()));
    }
    if !(eps_fine > 0.0 && eps_coarse >= eps_fine) {
        return Err(Error::InvalidArgument("need 0 < eps_fine <= eps_coarse".into()));
    }
    let fine = PathSimulator::new(model, eps_fine)?;
    let coarse = PathSimulator::new(model, eps_coarse)?;
    let c = model.drift();
    let mut rng = StreamRng::new(seed, index);
    let mut t = 0.0;
    let mut level = [model.start(); 2];
    let mut tau: [Option<f64>; 2] = [None, None];
    let mut events: [Vec<JumpEvent>; 2] = [Vec::new(), Vec::new()];
    let mut count = 0usize;
    while tau[0].is_none() || tau[1].is_none() {
        let gap = if fine.rate > 0.0 { rng.exp(fine.rate) } else { f64::INFINITY };
        for k in 0..2 {
            if tau[k].is_none() && level[k] - c * gap <= 0.0 {
                tau[k] = Some(t + level[k] / c);
            }
        }
        if tau[0].is_some() && tau[1].is_some() {
            break;
        }
        t += gap;
        let z = fine.sampler.sample(&mut rng);
        for k in 0..2 {
            if tau[k].is_some() {
                continue;
            }
            level[k] -= c * gap;
            if k == 0 || z >= eps_coarse {
                events[k].push(JumpEvent { time: t, pre_level: level[k], size: z });
                level[k] += z;
            }
        }
        count += 1;
        if count > fine.budget {
            return Err(Error::PathBudgetExceeded { index: Some(index), budget: fine.budget });
        }
    }
    let [ev_f, ev_c] = events;
    Ok((
        fine.record(seed, index, ev_f, tau[0].unwrap()),
        coarse.record(seed, index, ev_c, tau[1].unwrap()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpMeasure;

    fn model_a(a: f64) -> LevyModel {
        LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, a)
            .unwrap()
    }

    fn model_b() -> LevyModel {
        LevyModel::new(1.0, JumpMeasure::exponential(2.0, 1.0).unwrap(), Orientation::NegativeSubordinatorPositiveDrift, 0.0)
            .unwrap()
    }

    pub(crate) fn handmade(a: f64, c: f64, events: Vec<JumpEvent>) -> PathRecord {
        let last = events.last().map(|e| (e.time, e.pre_level + e.size)).unwrap_or((0.0, a));
        PathRecord {
            index: 0,
            seed: 0,
            orientation: Orientation::SubordinatorNegativeDrift,
            drift: c,
            start: a,
            truncation: 1e-9,
            jump_rate: 0.0,
            dropped_drift: 0.0,
            tau0: last.0 + last.1 / c,
            events,
        }
    }

    #[test]
    fn pure_drift_path() {
        // measure with no mass above the truncation
        let m = LevyModel::new(2.0, JumpMeasure::atoms(vec![(0.5, 1.0)]).unwrap(), Orientation::SubordinatorNegativeDrift, 1.0).unwrap();
        let p = simulate_path(&m, 1.0, 3).unwrap();
        assert!(p.events.is_empty());
        assert_eq!(p.tau0, 0.5);
        let e = exit_times(&p, 0.0, 2.0);
        assert_eq!(e.tau_down, 0.5);
        assert_eq!(e.tau_up, f64::INFINITY);
    }

    #[test]
    fn one_event_exit_times() {
        let p = handmade(1.0, 2.0, vec![JumpEvent { time: 0.15, pre_level: 0.7, size: 2.0 }]);
        assert!((p.tau0 - 1.5).abs() < 1e-15);
        let e = exit_times(&p, 0.0, 2.0);
        assert_eq!(e.tau_up, 0.15);
        assert!((e.overshoot(2.0).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(e.jump_pre_level, Some(0.7));
        assert!((e.tau_down - 1.5).abs() < 1e-15);
        // the path stays above 0.8 until the jump, crosses 0.5 afterwards
        let e = exit_times(&p, 0.5, 3.0);
        assert!((e.tau_down - 1.25).abs() < 1e-14);
        let e = exit_times(&p, 0.8, 3.0);
        assert!((e.tau_down - 0.1).abs() < 1e-14);
        assert_eq!(e.tau_up, f64::INFINITY);
    }

    #[test]
    fn killed_at_zero_with_accounting_identity() {
        let m = model_a(1.0);
        let sim = PathSimulator::new(&m, 1e-9).unwrap();
        for k in 0..2000 {
            let p = sim.simulate(5, k).unwrap();
            assert!(p.level_before_kill().abs() < 1e-9);
            assert!((2.0 * p.tau0 - p.jump_total()).abs() < 1e-9);
            assert!(p.events.iter().all(|e| e.pre_level > 0.0));
            assert!(p.events.windows(2).all(|w| w[0].time < w[1].time));
        }
    }

    #[test]
    fn negative_orientation_final_jump_straddles_zero() {
        let m = model_b();
        let sim = PathSimulator::new(&m, 1e-9).unwrap();
        for k in 0..2000 {
            let p = sim.simulate(9, k).unwrap();
            let n = p.events.len();
            assert!(n >= 1);
            for (i, e) in p.events.iter().enumerate() {
                assert!(e.pre_level > 0.0);
                if i + 1 < n {
                    assert!(p.post_level(i) > 0.0);
                }
            }
            assert!(p.post_level(n - 1) <= 0.0);
            assert_eq!(p.tau0, p.events[n - 1].time);
            assert!((p.drift * p.tau0 - p.jump_total() - p.post_level(n - 1)).abs() < 1e-9);
        }
    }

    #[test]
    fn batch_is_deterministic_and_indexed() {
        let m = model_a(1.0);
        let a = batch_simulate(&m, 1e-6, 64, 42).unwrap();
        let b = batch_simulate(&m, 1e-6, 64, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], simulate_path(&m, 1e-6, 42).unwrap());
        for (k, p) in a.iter().enumerate() {
            assert_eq!(p.index, k as u64);
        }
        let c = batch_simulate(&m, 1e-6, 64, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn budget_guard() {
        let m = model_a(50.0);
        let sim = PathSimulator::new(&m, 1e-9).unwrap().with_budget(3);
        assert!(matches!(sim.simulate(1, 7), Err(Error::PathBudgetExceeded { index: Some(7), .. })));
    }

    #[test]
    fn coupled_paths_are_ordered() {
        let m = model_a(1.0);
        for k in 0..500 {
            let (fine, coarse) = simulate_coupled(&m, 0.01, 0.1, 17, k).unwrap();
            assert!(coarse.tau0 <= fine.tau0);
            let mut times: Vec<f64> = fine.events.iter().map(|e| e.time).collect();
            times.push(coarse.tau0);
            for s in times.into_iter().filter(|&s| s <= coarse.tau0) {
                assert!(coarse.level_at(s).unwrap() <= fine.level_at(s).unwrap() + 1e-12);
            }
            assert!(coarse.events.iter().all(|e| e.size >= 0.1));
        }
    }

    #[test]
    fn samplers_match_their_measures() {
        let mut rng = StreamRng::new(3, 3);
        let atoms = JumpMeasure::atoms(vec![(1.0, 1.0), (2.0, 3.0)]).unwrap();
        let s = JumpSampler::new(&atoms);
        let n = 40_000;
        let twos = (0..n).filter(|_| s.sample(&mut rng) == 2.0).count() as f64 / n as f64;
        assert!((twos - 0.75).abs() < 0.01);
        let tab = JumpMeasure::tabulated(vec![(0.5, 1.0), (1.0, 2.0), (2.0, 1.0), (3.0, 0.5)]).unwrap();
        let s = JumpSampler::new(&tab);
        let mean: f64 = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        let exact = tab.mean() / tab.total_mass();
        assert!((mean - exact).abs() < 0.03, "{mean} vs {exact}");
        let e = JumpMeasure::exponential(1.0, 2.0).unwrap().truncated(0.3);
        let s = JumpSampler::new(&e);
        assert!((0..1000).all(|_| s.sample(&mut rng) >= 0.3));
    }

    #[test]
    fn default_truncation_meets_drift_budget() {
        let m = model_a(1.0);
        let eps = default_truncation(&m).unwrap();
        let dropped = m.measure().mean() - m.measure().truncated(eps).mean();
        assert!(dropped <= 2e-4 * (1.0 + 1e-9));
        assert!(eps > 0.01 && eps < 0.03, "{eps}");
    }
}
