//! Direct event-driven simulation of the finite-rate branching system.
//!
//! A particle at position `x` lives `x` time units, branches at Poisson
//! rate `α` during its life, and each branching event produces `k`
//! children with probability `p_k`, at independent positions drawn from
//! `η`. Particles are processed from a queue ordered by (birth time, id).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching_extract::AtomMeasure;
use crate::error::{Error, Result};
use crate::path_sim::JumpSampler;
use crate::rng::{domain, StreamRng};
use crate::semigroup_solver::OffspringLaw;

pub const DEFAULT_POPULATION_BUDGET: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEvent {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    pub position: f64,
}

impl ParticleEvent {
    pub fn death(&self) -> f64 {
        self.birth + self.position
    }
}

/// A branching event of particle `particle` at `time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthEvent {
    pub particle: usize,
    pub time: f64,
    pub children: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CmjRun {
    pub snapshots: Vec<AtomMeasure>,
    pub particles: Vec<ParticleEvent>,
    pub births: Vec<BirthEvent>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmjOptions {
    pub horizon: f64,
    pub budget: usize,
    /// Keep the particle and birth logs; snapshots are always kept.
    pub keep_log: bool,
}

impl CmjOptions {
    pub fn new(horizon: f64) -> Self {
        Self { horizon, budget: DEFAULT_POPULATION_BUDGET, keep_log: true }
    }
}

#[derive(PartialEq)]
struct Pending {
    birth: f64,
    id: usize,
    parent: Option<usize>,
    position: f64,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (birth, id)
        other.birth.total_cmp(&self.birth).then(other.id.cmp(&self.id))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One replica with stream `(seed, stream)`. Births at or after the
/// horizon are not generated; `levels` must lie in `[0, horizon]`.
pub fn simulate_cmj(
    offspring: &OffspringLaw,
    initial: &[f64],
    levels: &[f64],
    opts: &CmjOptions,
    seed: u64,
    stream: u64,
) -> Result<CmjRun> {
    let sampler = JumpSampler::new(&offspring.eta);
    simulate_with(offspring, &sampler, initial, levels, opts, seed, stream)
}

fn simulate_with(
    offspring: &OffspringLaw,
    sampler: &JumpSampler,
    initial: &[f64],
    levels: &[f64],
    opts: &CmjOptions,
    seed: u64,
    stream: u64,
) -> Result<CmjRun> {
    if initial.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("initial atoms must be positive and finite".into()));
    }
    if levels.iter().any(|&t| !(t >= 0.0 && t <= opts.horizon)) {
        return Err(Error::InvalidArgument(format!("snapshot levels must lie in [0, {}]", opts.horizon)));
    }
    let mut rng = StreamRng::with_domain(seed, domain::CMJ, stream);
    let mut queue = BinaryHeap::new();
    for (id, &x) in initial.iter().enumerate() {
        queue.push(Pending { birth: 0.0, id, parent: None, position: x });
    }
    let mut next_id = initial.len();
    let mut snaps: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
    let mut run = CmjRun::default();
    while let Some(p) = queue.pop() {
        let death = p.birth + p.position;
        for (k, &t) in levels.iter().enumerate() {
            if p.birth <= t && t < death {
                snaps[k].push(death - t);
            }
        }
        if opts.keep_log {
            run.particles.push(ParticleEvent { id: p.id, parent: p.parent, birth: p.birth, position: p.position });
        }
        let stop = death.min(opts.horizon);
        let mut s = p.birth;
        loop {
            s += rng.exp(offspring.alpha);
            if s >= stop {
                break;
            }
            let k = offspring.sample_count(rng.uniform());
            for _ in 0..k {
                let x = sampler.sample(&mut rng);
                queue.push(Pending { birth: s, id: next_id, parent: Some(p.id), position: x });
                next_id += 1;
            }
            if opts.keep_log {
                run.births.push(BirthEvent { particle: p.id, time: s, children: k });
            }
            if next_id > opts.budget {
                return Err(Error::PopulationBudgetExceeded { budget: opts.budget });
            }
        }
    }
    run.snapshots = levels.iter().zip(snaps).map(|(&t, atoms)| AtomMeasure::new(t, atoms)).collect();
    Ok(run)
}

/// `n` independent replicas; replica `k` uses stream `(seed, k)`.
pub fn batch_cmj(
    offspring: &OffspringLaw,
    initial: &[f64],
    levels: &[f64],
    opts: &CmjOptions,
    seed: u64,
    n: usize,
) -> Result<Vec<CmjRun>> {
    let sampler = JumpSampler::new(&offspring.eta);
    (0..n as u64)
        .into_par_iter()
        .map(|k| simulate_with(offspring, &sampler, initial, levels, opts, seed, k))
        .collect()
}

/// `Z(t) = #{particles with birth ≤ t < death}` on a grid.
pub fn total_mass_series(particles: &[ParticleEvent], grid: &[f64]) -> Vec<usize> {
    grid.iter()
        .map(|&t| particles.iter().filter(|p| p.birth <= t && t < p.death()).count())
        .collect()
}

/// Waiting times between successive branching events of one particle,
/// starting from its birth. Only gaps that start at least `window` before
/// the particle's death are kept, so that censoring by death is negligible
/// once `α · window` is large.
pub fn inter_birth_gaps(run: &CmjRun, window: f64) -> Vec<f64> {
    let mut by_particle: Vec<Vec<f64>> = vec![Vec::new(); run.particles.iter().map(|p| p.id + 1).max().unwrap_or(0)];
    for b in &run.births {
        by_particle[b.particle].push(b.time);
    }
    let mut gaps = Vec::new();
    for p in &run.particles {
        let mut prev = p.birth;
        for &s in &by_particle[p.id] {
            if prev > p.death() - window {
                break;
            }
            gaps.push(s - prev);
            prev = s;
        }
    }
    gaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpMeasure;

    #[test]
    fn no_births_without_offspring() {
        let law = OffspringLaw::new(vec![1.0], 2.0, JumpMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        let run = simulate_cmj(&law, &[1.0], &[0.0, 0.5, 1.0], &CmjOptions::new(2.0), 1, 0).unwrap();
        assert_eq!(run.snapshots[0].atoms, vec![1.0]);
        assert_eq!(run.snapshots[1].atoms, vec![0.5]);
        assert!(run.snapshots[2].is_empty());
        assert_eq!(run.particles.len(), 1);
        assert!(run.births.iter().all(|b| b.children == 0));
        assert_eq!(total_mass_series(&run.particles, &[0.0, 0.5, 0.99, 1.0]), vec![1, 1, 1, 0]);
    }

    #[test]
    fn children_born_inside_parent_life() {
        let law = OffspringLaw::new(vec![0.5, 0.0, 0.5], 1.0, JumpMeasure::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap();
        let run = simulate_cmj(&law, &[1.0, 2.0], &[0.0], &CmjOptions::new(3.0), 4, 2).unwrap();
        assert_eq!(total_mass_series(&run.particles, &[0.0]), vec![2]);
        for p in &run.particles {
            if let Some(q) = p.parent {
                let par = run.particles.iter().find(|x| x.id == q).unwrap();
                assert!(par.birth <= p.birth && p.birth < par.death());
                assert!(p.birth < 3.0);
            }
        }
    }

    #[test]
    fn replicas_are_reproducible() {
        let law = OffspringLaw::new(vec![0.3, 0.7], 1.0, JumpMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
        let a = batch_cmj(&law, &[1.0], &[0.5], &CmjOptions::new(1.0), 9, 50).unwrap();
        let b = batch_cmj(&law, &[1.0], &[0.5], &CmjOptions::new(1.0), 9, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn explosion_guard() {
        let law = OffspringLaw::new(vec![0.0, 0.0, 0.0, 1.0], 5.0, JumpMeasure::atoms(vec![(5.0, 1.0)]).unwrap()).unwrap();
        let opts = CmjOptions { budget: 1000, ..CmjOptions::new(5.0) };
        assert!(matches!(
            simulate_cmj(&law, &[5.0], &[], &opts, 0, 0),
            Err(Error::PopulationBudgetExceeded { budget: 1000 })
        ));
    }
}
