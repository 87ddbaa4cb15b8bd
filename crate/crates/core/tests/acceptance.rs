//! Acceptance suite for the two reference models. Every criterion prints
//! one PASS/FAIL line; the test fails if any criterion fails.
//!
//! Model A: c = 2, Π(dz) = e^{−z} dz, subordinator with negative drift.
//! Model B: c = 1, Π(dz) = 2e^{−z} dz, negative subordinator with positive
//! drift started at 0.

use std::time::Instant;

use levy_branching::semigroup_solver::{solve_single_birth_u, SolverOptions, TestFunction};
use levy_branching::verify::{run_suite, CheckRecord, McReport, Suite, SuiteConfig};
use levy_branching::{InitialLaw, JumpMeasure, LevyModel, Orientation};

fn model_a(a: f64) -> LevyModel {
    LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, a).unwrap()
}

fn model_b() -> LevyModel {
    LevyModel::new(1.0, JumpMeasure::exponential(2.0, 1.0).unwrap(), Orientation::NegativeSubordinatorPositiveDrift, 0.0)
        .unwrap()
}

/// Model A scale function.
fn w_a(x: f64) -> f64 {
    1.0 - 0.5 * (-x / 2.0).exp()
}

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new(id: usize, title: &'static str) -> Self {
        Self { id, title, pass: true, lines: Vec::new() }
    }

    fn record(&mut self, c: &CheckRecord) {
        self.pass &= c.pass;
        self.lines.push(describe(c));
    }

    fn info(&mut self, c: &CheckRecord) {
        self.lines.push(format!("{} (informational)", describe(c)));
    }

    fn require(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.lines.push(format!("{what}: {}", if ok { "ok" } else { "violated" }));
    }
}

fn describe(c: &CheckRecord) -> String {
    let p = c.p_value.map(|p| format!(" p={p:.4}")).unwrap_or_default();
    format!(
        "{}: estimate {:.6} predicted {:.6} stat {:.4}{p} -> {}{}",
        c.name,
        c.estimate,
        c.predicted,
        c.statistic,
        if c.pass { "pass" } else { "fail" },
        if c.note.is_empty() { String::new() } else { format!(" [{}]", c.note) }
    )
}

fn get<'a>(r: &'a McReport, prefix: &str) -> &'a CheckRecord {
    r.checks
        .iter()
        .find(|c| c.name.starts_with(prefix))
        .unwrap_or_else(|| panic!("no check {prefix:?} in suite {}", r.suite))
}

fn run(suite: Suite, model: &LevyModel, cfg: &SuiteConfig) -> McReport {
    run_suite(suite, model, cfg).unwrap_or_else(|e| panic!("suite {suite} failed to run: {e}"))
}

#[test]
fn acceptance() {
    let started = Instant::now();
    let cfg = SuiteConfig::default();
    let mut out = Vec::new();

    // 1 and 14 share one occupation run on Model A started at 2
    let occ = run(Suite::Occupation, &model_a(2.0), &cfg);
    let mut c1 = Outcome::new(1, "pathwise occupation identity");
    c1.record(get(&occ, "pathwise occupation"));
    c1.require(occ.runtime_secs < 30.0, format!("runtime {:.1}s < 30s", occ.runtime_secs));
    for c in occ.checks.iter().filter(|c| c.name.starts_with("total occupation")) {
        c1.info(c);
    }
    out.push(c1);

    let mut c2 = Outcome::new(2, "hitting-time Laplace transform");
    let hit = run(Suite::Hitting, &model_a(1.0), &cfg);
    for q in ["0.5", "1.5", "3"] {
        c2.record(get(&hit, &format!("hitting a=1 q={q}")));
    }
    let target = get(&hit, "hitting a=1 q=1.5").predicted;
    c2.require((target - (-1.0f64).exp()).abs() < 1e-9, format!("prediction at q=1.5 is e^-1 ({target:.12})"));
    out.push(c2);

    let mut c3 = Outcome::new(3, "two-sided exit");
    let exit = run(Suite::Exit, &model_a(1.0), &cfg);
    let down = get(&exit, "exit down-before-up");
    c3.record(down);
    let oracle = w_a(1.0) / w_a(2.0);
    c3.require((down.predicted - oracle).abs() < 1e-6, format!("prediction equals W(1)/W(2) = {oracle:.6}"));
    c3.info(get(&exit, "exit overshoot"));
    out.push(c3);

    let mut c4 = Outcome::new(4, "geometric total mass");
    let g2 = run(Suite::Geometric, &model_a(2.0), &cfg);
    c4.record(get(&g2, "total mass a=2 t=1"));
    let g05 = run(Suite::Geometric, &model_a(0.5), &cfg);
    c4.record(get(&g05, "total mass a=0.5 t=1"));
    let f = levy_branching::SubordinatorFormulas::new(&model_a(2.0), 3.0).unwrap();
    let p = 1.0 / (2.0 * w_a(1.0));
    let pmf = f.total_mass_pmf(1.0, 2.0).unwrap();
    c4.require((pmf[1] - p).abs() < 1e-6 && pmf[0] == 0.0, format!("P(N=1) = 1/(2W(1)) = {p:.6}"));
    let pmf = f.total_mass_pmf(1.0, 0.5).unwrap();
    let none = w_a(0.5) / w_a(1.0);
    c4.require((pmf[0] - none).abs() < 1e-6, format!("P(N=0) = W(0.5)/W(1) = {none:.6}"));
    out.push(c4);

    let mut c5 = Outcome::new(5, "non-ancestor atom density");
    let atoms = run(Suite::Atoms, &model_a(2.0), &cfg);
    let rec = get(&atoms, "atoms a=2 t=1");
    c5.record(rec);
    c5.require(rec.n >= 20_000, format!("{} atoms >= 20000", rec.n));
    out.push(c5);

    // 6 to 9 share one solver run
    let sc = run(Suite::SolverCross, &model_a(2.0), &cfg);
    let mut c6 = Outcome::new(6, "Laplace functional triangulation");
    let picard = get(&sc, "picard vs closed form");
    c6.record(picard);
    let theta = std::f64::consts::LN_2;
    let closed = -(p * (-theta).exp() / (1.0 - (1.0 - p) * (-theta).exp())).ln();
    c6.require((picard.estimate - closed).abs() <= 1e-3, format!("Picard {:.6} vs geometric {closed:.6}", picard.estimate));
    c6.record(get(&sc, "laplace functional theta=ln2"));
    c6.record(get(&sc, "triangulation closure"));
    let opts = SolverOptions { step: 1e-3, tol: 1e-10, ..SolverOptions::default() };
    let t0 = Instant::now();
    let u = solve_single_birth_u(&model_a(2.0), &TestFunction::constant(theta).unwrap(), 1.0, &opts).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    c6.require(secs < 10.0, format!("solver at step 1e-3 took {secs:.2}s < 10s"));
    c6.require((u.u(1.0, 2.0) - closed).abs() <= 1e-3, format!("U_1 f(2) = {:.6}", u.u(1.0, 2.0)));
    out.push(c6);

    let mut c7 = Outcome::new(7, "moment formula");
    c7.record(get(&sc, "moment min(x,10) a=2 t=0.5"));
    c7.record(get(&sc, "moment min(x,10) a=2 t=1"));
    c7.record(get(&sc, "U <= pi"));
    out.push(c7);

    let mut c8 = Outcome::new(8, "solver laws");
    for name in ["semigroup defect", "picard iterates", "rho bound", "U_t f(x+t)"] {
        c8.record(get(&sc, name));
    }
    out.push(c8);

    let mut c9 = Outcome::new(9, "truncation monotonicity");
    c9.record(get(&sc, "coupled paths"));
    c9.record(get(&sc, "solver: U(eps=0.01)"));
    out.push(c9);

    let xs = run(Suite::Xstar, &model_b(), &cfg);
    let mut c10 = Outcome::new(10, "X* initial law");
    c10.record(get(&xs, "initial law"));
    let law = InitialLaw::new(&model_b()).unwrap();
    let dev = [0.1, 0.5, 1.0, 2.0].iter().map(|&a| (law.density(a) - 2.0 * (-2.0 * a).exp()).abs()).fold(0.0, f64::max);
    c10.require(dev < 1e-12, format!("density equals 2e^(-2a) (max deviation {dev:.1e})"));
    for name in ["total mass t=1", "last atom", "other atoms"] {
        c10.info(get(&xs, name));
    }
    out.push(c10);

    let mut c11 = Outcome::new(11, "X* total occupation");
    let occ_b = get(&xs, "total occupation q=1");
    c11.record(occ_b);
    let oracle = 1.0 - 1.0 / (1.0 + 2f64.sqrt());
    c11.require((occ_b.predicted - oracle).abs() < 1e-9, format!("prediction 1 - 1/(1+sqrt 2) = {oracle:.5}"));
    out.push(c11);

    let mut c12 = Outcome::new(12, "time-reversal equivalence");
    let rev = run(Suite::Reversal, &model_b(), &cfg);
    c12.record(get(&rev, "reversal total mass t=1"));
    c12.info(get(&rev, "reversal <X,min(x,10)>"));
    out.push(c12);

    let mut c13 = Outcome::new(13, "CMJ cross-route");
    let cmj = run(Suite::CmjCross, &model_a(2.0), &cfg);
    c13.record(get(&cmj, "cmj vs path total mass t=1"));
    c13.record(get(&cmj, "cmj vs path <X,min(x,10)> t=1"));
    c13.record(get(&cmj, "binary cmj laplace t=1"));
    c13.info(get(&cmj, "binary cmj moment"));
    c13.info(get(&cmj, "branching clock memoryless"));
    out.push(c13);

    let mut c14 = Outcome::new(14, "occupation equation");
    c14.record(get(&occ, "weighted occupation"));
    c14.record(get(&occ, "occupation without jumps"));
    out.push(c14);

    let total = started.elapsed().as_secs_f64();
    println!();
    for o in &out {
        println!("[{}] {:>2} {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.title);
        for l in &o.lines {
            println!("         {l}");
        }
    }
    let failed: Vec<usize> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance: {} of {} criteria passed in {total:.1}s", out.len() - failed.len(), out.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
