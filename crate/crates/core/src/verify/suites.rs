//! Named check suites. Each suite simulates what it needs from one model
//! and returns its check records in a fixed order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::checks::*;
use crate::branching_extract::{extract_x, occupation, straddles};
use crate::cmj_sim::{batch_cmj, inter_birth_gaps, simulate_cmj, CmjOptions};
use crate::error::{Error, Result};
use crate::formulas::{xstar_occupation_laplace, InitialLaw, SubordinatorFormulas, XStarFormulas};
use crate::levy_model::{JumpMeasure, LevyModel, Orientation};
use crate::path_sim::{batch_map, exit_times, simulate_coupled, PathSimulator};
use crate::rng::{domain, StreamRng};
use crate::semigroup_solver::{
    solve_finite_rate_moment, solve_finite_rate_u, solve_moment_pi, solve_occupation, solve_single_birth_u,
    OffspringLaw, SolverOptions, TestFunction,
};

/// Truncation used by the CMJ cross-route checks.
pub const CMJ_TRUNCATION: f64 = 0.1;
/// Seed offset separating the second sample of two-sample checks.
const SECOND_SIDE: u64 = 0x5ec0_4d5a_3b1e_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Hitting,
    Exit,
    Geometric,
    Atoms,
    Occupation,
    Xstar,
    Reversal,
    CmjCross,
    SolverCross,
    All,
}

impl Suite {
    pub const EACH: [Suite; 9] = [
        Suite::Hitting,
        Suite::Exit,
        Suite::Geometric,
        Suite::Atoms,
        Suite::Occupation,
        Suite::Xstar,
        Suite::Reversal,
        Suite::CmjCross,
        Suite::SolverCross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hitting => "hitting",
            Suite::Exit => "exit",
            Suite::Geometric => "geometric",
            Suite::Atoms => "atoms",
            Suite::Occupation => "occupation",
            Suite::Xstar => "xstar",
            Suite::Reversal => "reversal",
            Suite::CmjCross => "cmj_cross",
            Suite::SolverCross => "solver_cross",
            Suite::All => "all",
        }
    }

    /// Orientation the suite runs on; `None` for `all`.
    pub fn orientation(self) -> Option<Orientation> {
        match self {
            Suite::Xstar | Suite::Reversal => Some(Orientation::NegativeSubordinatorPositiveDrift),
            Suite::All => None,
            _ => Some(Orientation::SubordinatorNegativeDrift),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub n_paths: usize,
    pub n_two_sample: usize,
    pub seed: u64,
    /// Jump truncation for path simulation.
    pub eps: f64,
    /// Levels `t` at which the measure-valued process is read.
    pub levels: Vec<f64>,
    /// Upper barrier of the two-sided exit checks.
    pub upper: f64,
    pub q_values: Vec<f64>,
    pub thresholds: Thresholds,
    pub solver: SolverOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_two_sample: 10_000,
            seed: 20_240_917,
            eps: 1e-9,
            levels: vec![1.0],
            upper: 2.0,
            q_values: vec![0.5, 1.5, 3.0],
            thresholds: Thresholds::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl SuiteConfig {
    fn max_level(&self) -> f64 {
        self.levels.iter().cloned().fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("levels must be a non-empty list of positive numbers".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        Ok(())
    }
}

/// Runs one suite (or, for [`Suite::All`], every suite matching the model's
/// orientation) and returns the records.
pub fn run_checks(suite: Suite, model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    cfg.validate()?;
    if suite == Suite::All {
        let mut out = Vec::new();
        for s in Suite::EACH.iter().filter(|s| s.orientation() == Some(model.orientation())) {
            out.extend(run_checks(*s, model, cfg)?);
        }
        return Ok(out);
    }
    if suite.orientation() != Some(model.orientation()) {
        return Err(Error::InvalidModel(format!(
            "suite {suite} needs the {:?} orientation",
            suite.orientation().unwrap()
        )));
    }
    let ctx = |e: Error| match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("suite {suite}: {m}")),
        other => other,
    };
    match suite {
        Suite::Hitting => hitting(model, cfg),
        Suite::Exit => exit(model, cfg),
        Suite::Geometric => geometric(model, cfg),
        Suite::Atoms => atoms(model, cfg),
        Suite::Occupation => occupation_suite(model, cfg),
        Suite::Xstar => xstar(model, cfg),
        Suite::Reversal => reversal(model, cfg),
        Suite::CmjCross => cmj_cross(model, cfg),
        Suite::SolverCross => solver_cross(model, cfg),
        Suite::All => unreachable!(),
    }
    .map_err(ctx)
}

fn formulas(model: &LevyModel, cfg: &SuiteConfig) -> Result<SubordinatorFormulas> {
    let reach = model.start().max(cfg.upper).max(cfg.max_level());
    SubordinatorFormulas::new(model, reach + 1.0)
}

/// Edges `0, w, 2w, …` until the predicted mass beyond the last edge is
/// below `1e−3`, with `w` a tenth of the mean jump.
fn predicted_edges(model: &LevyModel, bin_mass: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let m = model.measure();
    let w = 0.1 * m.mean() / m.total_mass();
    let mut edges = vec![0.0];
    let mut mass = 0.0;
    while mass < 1.0 - 1e-3 && edges.len() < 400 {
        let lo = *edges.last().unwrap();
        mass += bin_mass(lo, lo + w);
        edges.push(lo + w);
    }
    edges
}

fn fmt_level(x: f64) -> String {
    format!("{x}")
}

fn hitting(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let a = model.start();
    let fm = formulas(model, cfg)?;
    let tau = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| p.tau0)?;
    cfg.q_values
        .iter()
        .map(|&q| {
            check_scalar_laplace(
                &format!("hitting a={} q={q}", fmt_level(a)),
                &tau,
                q,
                fm.hitting_laplace(a, q)?,
                &cfg.thresholds,
            )
        })
        .collect()
}

fn exit(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let (x, t) = (model.start(), cfg.upper);
    let fm = formulas(model, cfg)?;
    let rows = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| {
        let e = exit_times(&p, 0.0, t);
        (e.tau_down < e.tau_up, e.overshoot(t))
    })?;
    let down: Vec<bool> = rows.iter().map(|r| r.0).collect();
    let mut out = vec![check_proportion(
        &format!("exit down-before-up x={x} t={t}"),
        &down,
        fm.exit_down_prob(x, t)?,
        &cfg.thresholds,
    )?];
    if x < t {
        let over: Vec<f64> = rows.iter().filter(|r| !r.0).filter_map(|r| r.1).collect();
        let mass = |z0: f64, z1: f64| fm.first_atom_bin_mass(t, x, z0, z1);
        let edges = predicted_edges(model, mass);
        out.push(check_density(&format!("exit overshoot x={x} t={t}"), &over, &edges, mass, &cfg.thresholds)?);
    }
    Ok(out)
}

fn geometric(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let a = model.start();
    let fm = formulas(model, cfg)?;
    let levels = cfg.levels.clone();
    let counts = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| {
        levels.iter().map(|&t| straddles(&p, t).len()).collect::<Vec<_>>()
    })?;
    cfg.levels
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let n: Vec<usize> = counts.iter().map(|c| c[k]).collect();
            check_pmf(&format!("total mass a={a} t={t}"), &n, &fm.total_mass_pmf(t, a)?, &cfg.thresholds)
        })
        .collect()
}

fn atoms(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let a = model.start();
    let fm = formulas(model, cfg)?;
    let levels = cfg.levels.clone();
    let per_path = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| {
        levels.iter().map(|&t| straddles(&p, t)).collect::<Vec<_>>()
    })?;
    let mut out = Vec::new();
    for (k, &t) in cfg.levels.iter().enumerate() {
        let mut first = Vec::new();
        let mut others = Vec::new();
        for s in per_path.iter().map(|p| &p[k]) {
            if let Some((&head, rest)) = s.split_first() {
                if a <= t {
                    first.push(head);
                }
                others.extend_from_slice(rest);
            }
        }
        let mass = |z0: f64, z1: f64| fm.atom_bin_mass(t, z0, z1);
        let edges = predicted_edges(model, mass);
        out.push(
            check_density(&format!("atoms a={a} t={t}"), &others, &edges, mass, &cfg.thresholds)?
                .with_note(format!("{} non-ancestor atoms", others.len())),
        );
        if a <= t {
            let mass = |z0: f64, z1: f64| fm.first_atom_bin_mass(t, a, z0, z1);
            let edges = predicted_edges(model, mass);
            out.push(check_density(&format!("first atom a={a} t={t}"), &first, &edges, mass, &cfg.thresholds)?);
        }
    }
    Ok(out)
}

fn occupation_suite(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let a = model.start();
    let c = model.drift();
    let fm = formulas(model, cfg)?;
    let one = TestFunction::constant(1.0)?;
    let h = TestFunction::indicator(0.0, cfg.max_level())?;
    let f = TestFunction::capped_linear(1.0, 5.0)?;
    let rows = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| -> Result<(f64, f64, f64)> {
        let total = occupation(&p, &one, &one)?;
        Ok(((total - c * p.tau0).abs(), total, occupation(&p, &h, &f)?))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let mut out = vec![check_holds("pathwise occupation = c tau0", worst <= 1e-9, worst, 1e-9)];
    let totals: Vec<f64> = rows.iter().map(|r| r.1).collect();
    for &q in &cfg.q_values {
        out.push(check_scalar_laplace(
            &format!("total occupation a={a} q={q}"),
            &totals,
            q,
            fm.occupation_laplace(a, q)?,
            &cfg.thresholds,
        )?);
    }
    let sol = solve_occupation(&model.truncated(cfg.eps)?, &h, &f, &cfg.solver)?;
    let weighted: Vec<f64> = rows.iter().map(|r| r.2).collect();
    out.push(check_laplace_functional(
        &format!("weighted occupation a={a} h=1[0,{}] f=min(x,5)", cfg.max_level()),
        &weighted,
        sol.omega0(a)?,
        &cfg.thresholds,
    )?);
    let bare = LevyModel::new(c, JumpMeasure::zero(), Orientation::SubordinatorNegativeDrift, a)?;
    let hand = solve_occupation(&bare, &TestFunction::indicator(0.0, 1.0)?, &one, &cfg.solver)?;
    let x = a.max(1.0);
    out.push(check_close("occupation without jumps x>=1", (-hand.omega0(x)?).exp(), (-1.0f64).exp(), 1e-6));
    Ok(out)
}

fn xstar(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let c = model.drift();
    let levels = cfg.levels.clone();
    let rows = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| {
        (p.level_before_kill(), p.tau0, levels.iter().map(|&t| straddles(&p, t)).collect::<Vec<_>>())
    })?;
    let law = InitialLaw::new(model)?;
    let start: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mass = |a0: f64, a1: f64| law.bin_mass(a0, a1);
    let mut out = vec![check_density("initial law", &start, &predicted_edges(model, mass), mass, &cfg.thresholds)?];
    let occ: Vec<f64> = rows.iter().map(|r| c * r.1).collect();
    out.push(check_scalar_laplace("total occupation q=1", &occ, 1.0, xstar_occupation_laplace(model, 1.0)?, &cfg.thresholds)?);
    for (k, &t) in cfg.levels.iter().enumerate() {
        let xf = XStarFormulas::new(model, t)?;
        let counts: Vec<usize> = rows.iter().map(|r| r.2[k].len()).collect();
        out.push(check_pmf(&format!("total mass t={t}"), &counts, &xf.pmf(), &cfg.thresholds)?);
        let mut last = Vec::new();
        let mut others = Vec::new();
        for s in rows.iter().map(|r| &r.2[k]) {
            if let Some((&l, rest)) = s.split_last() {
                last.push(l);
                others.extend_from_slice(rest);
            }
        }
        let h = |y0: f64, y1: f64| xf.last_atom_bin_mass(y0, y1);
        out.push(check_density(&format!("last atom t={t}"), &last, &predicted_edges(model, h), h, &cfg.thresholds)?);
        let g = |y0: f64, y1: f64| xf.other_atom_bin_mass(y0, y1);
        out.push(check_density(&format!("other atoms t={t}"), &others, &predicted_edges(model, g), g, &cfg.thresholds)?);
    }
    Ok(out)
}

fn reversal(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let n = cfg.n_two_sample;
    let f = TestFunction::capped_linear(1.0, 10.0)?;
    let levels = cfg.levels.clone();
    let read = |atoms: Vec<Vec<f64>>| -> Vec<(f64, f64)> {
        atoms.into_iter().map(|s| (s.len() as f64, s.iter().map(|&x| f.eval(x)).sum())).collect()
    };
    let direct = batch_map(model, cfg.eps, n, cfg.seed, |p| read(levels.iter().map(|&t| straddles(&p, t)).collect()))?;
    let law = InitialLaw::new(model)?;
    let tilted = model.tilt();
    let seed = cfg.seed ^ SECOND_SIDE;
    let reversed = (0..n as u64)
        .map(|k| -> Result<Vec<(f64, f64)>> {
            let y = law.sample(&mut StreamRng::with_domain(seed, domain::INITIAL_LAW, k));
            let path = PathSimulator::new(&tilted.with_start(y)?, cfg.eps)?.simulate(seed, k)?;
            let atoms = levels.iter().map(|&t| extract_x(&path, t).map(|m| m.atoms)).collect::<Result<Vec<_>>>()?;
            Ok(read(atoms))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (k, &t) in cfg.levels.iter().enumerate() {
        let col = |rows: &[Vec<(f64, f64)>], j: usize| -> Vec<f64> {
            rows.iter().map(|r| if j == 0 { r[k].0 } else { r[k].1 }).collect()
        };
        out.push(check_two_sample(
            &format!("reversal total mass t={t}"),
            &col(&direct, 0),
            &col(&reversed, 0),
            Some((cfg.seed, 1.0)),
            &cfg.thresholds,
        )?);
        out.push(check_two_sample(
            &format!("reversal <X,min(x,10)> t={t}"),
            &col(&direct, 1),
            &col(&reversed, 1),
            Some((cfg.seed, 1e-6)),
            &cfg.thresholds,
        )?);
    }
    Ok(out)
}

fn cmj_cross(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let a = model.start();
    let n = cfg.n_two_sample;
    let th = &cfg.thresholds;
    let f = TestFunction::capped_linear(1.0, 10.0)?;
    let horizon = cfg.max_level();
    let mut out = Vec::new();

    let levels = cfg.levels.clone();
    let levy = batch_map(model, CMJ_TRUNCATION, n, cfg.seed, |p| {
        levels.iter().map(|&t| straddles(&p, t)).collect::<Vec<_>>()
    })?;
    let offspring = OffspringLaw::single_birth(&model.truncated(CMJ_TRUNCATION)?)?;
    let opts = CmjOptions { keep_log: false, ..CmjOptions::new(horizon) };
    let cmj = batch_cmj(&offspring, &[a], &cfg.levels, &opts, cfg.seed ^ SECOND_SIDE, n)?;
    for (k, &t) in cfg.levels.iter().enumerate() {
        let lc: Vec<f64> = levy.iter().map(|s| s[k].len() as f64).collect();
        let cc: Vec<f64> = cmj.iter().map(|r| r.snapshots[k].total_mass() as f64).collect();
        out.push(check_two_sample(&format!("cmj vs path total mass t={t}"), &lc, &cc, Some((cfg.seed, 1.0)), th)?);
        let lf: Vec<f64> = levy.iter().map(|s| s[k].iter().map(|&x| f.eval(x)).sum()).collect();
        let cf: Vec<f64> = cmj.iter().map(|r| r.snapshots[k].integral(&f)).collect();
        out.push(check_two_sample(&format!("cmj vs path <X,min(x,10)> t={t}"), &lf, &cf, Some((cfg.seed, 1e-6)), th)?);
    }

    // binary splitting g(z) = (1 + z²)/2 at rate 1, children at 1
    let binary = OffspringLaw::new(vec![0.5, 0.0, 0.5], 1.0, JumpMeasure::atoms(vec![(1.0, 1.0)])?)?;
    let runs = batch_cmj(&binary, &[1.0], &cfg.levels, &opts, cfg.seed, cfg.n_paths)?;
    let u = solve_finite_rate_u(&binary, &f, horizon, &cfg.solver)?;
    let pi = solve_finite_rate_moment(&binary, &f, horizon, &cfg.solver)?;
    for (k, &t) in cfg.levels.iter().enumerate() {
        let vals: Vec<f64> = runs.iter().map(|r| r.snapshots[k].integral(&f)).collect();
        out.push(check_laplace_functional(&format!("binary cmj laplace t={t}"), &vals, u.u(t, 1.0), th)?);
        out.push(check_moment(&format!("binary cmj moment t={t}"), &vals, pi.pi(t, 1.0), th)?);
    }

    // waiting times between branchings are Exp(α)
    let alpha = 5.0;
    let clock = OffspringLaw::new(vec![1.0], alpha, JumpMeasure::atoms(vec![(1.0, 1.0)])?)?;
    let run = simulate_cmj(&clock, &vec![10.0; 400], &[], &CmjOptions::new(10.0), cfg.seed, 0)?;
    let gaps = inter_birth_gaps(&run, 5.0);
    out.push(check_cdf("branching clock memoryless", &gaps, |x| -(-alpha * x).exp_m1(), th)?);
    Ok(out)
}

fn solver_cross(model: &LevyModel, cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let a = model.start();
    let th = &cfg.thresholds;
    let t = cfg.max_level();
    let opts = cfg.solver;
    let truncated = model.truncated(cfg.eps)?;
    let fm = formulas(model, cfg)?;
    let mut out = Vec::new();

    // constant test function: closed form, Picard and Monte Carlo
    let theta = std::f64::consts::LN_2;
    let constant = TestFunction::constant(theta)?;
    let pmf = fm.total_mass_pmf(t, a)?;
    let pgf: f64 = pmf.iter().enumerate().map(|(n, p)| p * (-theta * n as f64).exp()).sum();
    let closed = -pgf.ln();
    let picard = solve_single_birth_u(&truncated, &constant, t, &opts)?.u(t, a);
    out.push(check_close(&format!("picard vs closed form a={a} t={t}"), picard, closed, 1e-3));

    let capped = TestFunction::capped_linear(1.0, 10.0)?;
    let half = 0.5 * t;
    let rows = batch_map(model, cfg.eps, cfg.n_paths, cfg.seed, |p| {
        let n = straddles(&p, t).len() as f64;
        let m: Vec<f64> = [half, t].iter().map(|&s| straddles(&p, s).iter().map(|&x| capped.eval(x)).sum()).collect();
        (theta * n, m[0], m[1])
    })?;
    let lf: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mc = check_laplace_functional(&format!("laplace functional theta=ln2 a={a} t={t}"), &lf, picard, th)?;
    let mc_u = -mc.estimate.ln();
    let closure = (mc_u - picard).abs() <= (mc_u - closed).abs() + (closed - picard).abs() + 1e-15;
    out.push(mc);
    out.push(check_holds("triangulation closure", closure, (mc_u - picard).abs(), (mc_u - closed).abs() + (closed - picard).abs()));

    let pi = solve_moment_pi(&truncated, &capped, t, &opts)?;
    let u = solve_single_birth_u(&truncated, &capped, t, &SolverOptions { record_iterates: true, ..opts })?;
    for (j, &s) in [half, t].iter().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|r| if j == 0 { r.1 } else { r.2 }).collect();
        out.push(check_moment(&format!("moment min(x,10) a={a} t={s}"), &vals, pi.pi(s, a), th)?);
    }
    let xs: Vec<f64> = (1..=400).map(|k| k as f64 * 0.05).collect();
    let nodes: Vec<f64> = (0..=u.curve.len()).step_by(10).map(|j| u.curve.node(j).min(t)).collect();
    let worst = nodes.iter().flat_map(|&s| xs.iter().map(move |&x| (s, x))).map(|(s, x)| u.u(s, x) - pi.pi(s, x)).fold(f64::MIN, f64::max);
    out.push(check_holds("U <= pi on grid", worst <= 1e-12, worst, 0.0));

    // Picard iterates increase at every node
    let drop = u
        .iterates
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(p, q)| p - q))
        .fold(0.0, f64::max);
    out.push(check_holds("picard iterates nondecreasing", drop <= 1e-12, drop, 1e-12));

    // ρ-bound with 1% slack
    let m = model.measure().mean();
    let bound = capped.rho_bound() / (model.drift() - m) * 1.01;
    let ratio = nodes.iter().flat_map(|&s| xs.iter().map(move |&x| (s, x))).map(|(s, x)| u.u(s, x) / x).fold(0.0, f64::max);
    out.push(check_holds("rho bound", ratio <= bound, ratio, bound));

    // t ↦ U_t f(x + t) nondecreasing
    let mut dip: f64 = 0.0;
    for &x in xs.iter().step_by(4) {
        for w in nodes.windows(2) {
            dip = dip.max(u.u(w[0], x + w[0]) - u.u(w[1], x + w[1]));
        }
    }
    out.push(check_holds("U_t f(x+t) nondecreasing in t", dip <= 1e-12, dip, 1e-12));

    // semigroup defect at two grid steps
    let defect = |step: f64| -> Result<f64> {
        let o = SolverOptions { step, record_iterates: false, ..opts };
        let s1 = 0.3137 * t;
        let s2 = t - s1;
        let whole = solve_single_birth_u(&truncated, &capped, t, &o)?;
        let inner = solve_single_birth_u(&truncated, &capped, s1, &o)?.as_test_function(s1);
        let outer = solve_single_birth_u(&truncated, &inner, s2, &o)?;
        Ok(xs.iter().map(|&x| (whole.u(t, x) - outer.u(s2, x)).abs()).fold(0.0, f64::max))
    };
    let (coarse, fine) = (defect(0.01)?, defect(0.005)?);
    let rate = coarse / fine;
    out.push(
        check_holds("semigroup defect halves with the step", (1.6..=2.4).contains(&rate), rate, 2.0)
            .with_note(format!("defect {coarse:e} at step 0.01, {fine:e} at step 0.005")),
    );

    // truncation monotonicity, pathwise and for the solver
    let worst = (0..cfg.n_two_sample as u64)
        .map(|k| -> Result<f64> {
            let (fine, coarse) = simulate_coupled(model, 0.01, 0.1, cfg.seed, k)?;
            let times = fine.events.iter().chain(&coarse.events).map(|e| e.time).chain([0.0, fine.tau0, coarse.tau0]);
            Ok(times
                .map(|s| coarse.level_at(s).unwrap_or(0.0) - fine.level_at(s).unwrap_or(0.0))
                .fold(f64::MIN, f64::max))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::MIN, f64::max);
    out.push(check_holds("coupled paths: eps=0.1 below eps=0.01", worst <= 1e-12, worst, 0.0));
    let u_fine = solve_single_birth_u(&model.truncated(0.01)?, &capped, t, &opts)?;
    let u_coarse = solve_single_birth_u(&model.truncated(0.1)?, &capped, t, &opts)?;
    let gap = nodes
        .iter()
        .flat_map(|&s| xs.iter().map(move |&x| (s, x)))
        .map(|(s, x)| u_coarse.u(s, x) - u_fine.u(s, x))
        .fold(f64::MIN, f64::max);
    out.push(check_holds("solver: U(eps=0.01) >= U(eps=0.1)", gap <= 1e-12, gap, 0.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::EACH.iter().chain(std::iter::once(&Suite::All)) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn wrong_orientation_rejected() {
        let b = LevyModel::new(1.0, JumpMeasure::exponential(2.0, 1.0).unwrap(), Orientation::NegativeSubordinatorPositiveDrift, 0.0)
            .unwrap();
        assert!(matches!(run_checks(Suite::Hitting, &b, &SuiteConfig::default()), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn small_hitting_run_is_reproducible() {
        let a = LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, 1.0)
            .unwrap();
        let cfg = SuiteConfig { n_paths: 2000, ..SuiteConfig::default() };
        let r1 = run_checks(Suite::Hitting, &a, &cfg).unwrap();
        let r2 = run_checks(Suite::Hitting, &a, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.len(), 3);
    }
}
