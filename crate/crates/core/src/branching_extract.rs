//! Reading the branching systems off a killed path.
//!
//! For the subordinator orientation every jump from `ℓ` to `ℓ + z` is a
//! particle born at level `ℓ` with initial position `z`, and the ancestor is
//! born at 0 with position `a`. A particle with death level `d` sits at
//! `d − t` in `X_t` while `birth ≤ t < d`. For the negative orientation a
//! jump from `ℓ` down to `ℓ − z` is a particle alive on `[ℓ − z, ℓ)` with
//! position `ℓ − t`; the killing jump is included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::Orientation;
use crate::path_sim::PathRecord;
use crate::semigroup_solver::{segment_integral, TestFunction};

/// A finite multiset of positive atoms, sorted ascending.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomMeasure {
    pub level: f64,
    pub atoms: Vec<f64>,
}

impl PartialEq for AtomMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| (a - b).abs() <= 1e-12)
    }
}

impl AtomMeasure {
    pub fn new(level: f64, mut atoms: Vec<f64>) -> Self {
        atoms.sort_by(f64::total_cmp);
        Self { level, atoms }
    }

    /// `⟨μ, 1⟩`.
    pub fn total_mass(&self) -> usize {
        self.atoms.len()
    }

    /// `⟨μ, f⟩`.
    pub fn integral(&self, f: &TestFunction) -> f64 {
        self.atoms.iter().map(|&x| f.eval(x)).sum()
    }

    /// `⟨μ, ρ⟩`.
    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// One particle: alive on `[birth, death)` with position `death − t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub birth: f64,
    pub death: f64,
}

/// Particles of the path in time order (ancestor first for the
/// subordinator orientation).
pub fn particles(path: &PathRecord) -> Vec<Particle> {
    match path.orientation {
        Orientation::SubordinatorNegativeDrift => std::iter::once(Particle { birth: 0.0, death: path.start })
            .chain(path.events.iter().map(|e| Particle { birth: e.pre_level, death: e.pre_level + e.size }))
            .collect(),
        Orientation::NegativeSubordinatorPositiveDrift => path
            .events
            .iter()
            .map(|e| Particle { birth: (e.pre_level - e.size).max(0.0), death: e.pre_level })
            .collect(),
    }
}

/// Positions at level `t` in time order of the straddling jumps.
pub fn straddles(path: &PathRecord, t: f64) -> Vec<f64> {
    match path.orientation {
        Orientation::SubordinatorNegativeDrift => {
            let mut out = Vec::new();
            if t < path.start {
                out.push(path.start - t);
            }
            for e in &path.events {
                let top = e.pre_level + e.size;
                if e.pre_level <= t && t < top {
                    out.push(top - t);
                }
            }
            out
        }
        Orientation::NegativeSubordinatorPositiveDrift => path
            .events
            .iter()
            .filter(|e| e.pre_level - e.size <= t && t < e.pre_level)
            .map(|e| e.pre_level - t)
            .collect(),
    }
}

fn expect(path: &PathRecord, o: Orientation) -> Result<()> {
    if path.orientation != o {
        return Err(Error::InvalidArgument(format!("path has orientation {:?}, expected {o:?}", path.orientation)));
    }
    Ok(())
}

/// `X_t = Σ_{u ∈ J(t)} δ_{S_u − t}` with the ancestor counted while `t < a`.
pub fn extract_x(path: &PathRecord, t: f64) -> Result<AtomMeasure> {
    expect(path, Orientation::SubordinatorNegativeDrift)?;
    Ok(AtomMeasure::new(t, straddles(path, t)))
}

/// `X*_t = Σ δ_{S*_{u−} − t}` over downward jumps with `S*_u ≤ t < S*_{u−}`.
pub fn extract_xstar(path: &PathRecord, t: f64) -> Result<AtomMeasure> {
    expect(path, Orientation::NegativeSubordinatorPositiveDrift)?;
    Ok(AtomMeasure::new(t, straddles(path, t)))
}

/// `∫_0^∞ h(t) ⟨X_t, f⟩ dt` (or the same for `X*`), integrated particle
/// by particle.
pub fn occupation(path: &PathRecord, h: &TestFunction, f: &TestFunction) -> Result<f64> {
    let end = h.support_end();
    let mut total = 0.0;
    for p in particles(path) {
        let hi = p.death.min(end);
        total += segment_integral(h, f, p.birth, hi, p.death)?;
    }
    Ok(total)
}

/// Splitting tree of a subordinator path. Node 0 is the ancestor; node
/// `i + 1` is the particle born at event `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenealogyTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub parent: Option<usize>,
    pub birth: f64,
    pub position: f64,
    pub death: f64,
}

impl GenealogyTree {
    /// Positions at level `t` read off the node intervals.
    pub fn slice(&self, t: f64) -> AtomMeasure {
        let atoms = self.nodes.iter().filter(|n| n.birth <= t && t < n.death).map(|n| n.death - t).collect();
        AtomMeasure::new(t, atoms)
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&j| self.nodes[j].parent == Some(node)).collect()
    }
}

/// The parent of each event is the latest earlier event (or the ancestor)
/// whose interval `[ℓ, ℓ + z)` contains its birth level.
///
/// Open intervals are kept on a stack: when the path has gone below a
/// stacked jump's pre-level that jump can no longer be the latest parent
/// of anything, because any later return above it passes through a newer
/// jump.
pub fn genealogy(path: &PathRecord) -> Result<GenealogyTree> {
    expect(path, Orientation::SubordinatorNegativeDrift)?;
    let mut nodes = Vec::with_capacity(path.events.len() + 1);
    nodes.push(TreeNode { parent: None, birth: 0.0, position: path.start, death: path.start });
    let mut stack: Vec<usize> = vec![0];
    for (i, e) in path.events.iter().enumerate() {
        let level = e.pre_level;
        while let Some(&top) = stack.last() {
            if nodes[top].birth > level {
                stack.pop();
            } else {
                break;
            }
        }
        let parent = match stack.last() {
            Some(&top) if level < nodes[top].death => top,
            _ => return Err(Error::OrphanEvent { index: i, level }),
        };
        nodes.push(TreeNode { parent: Some(parent), birth: level, position: e.size, death: level + e.size });
        stack.push(i + 1);
    }
    Ok(GenealogyTree { nodes })
}
