use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use levy_branching::branching_extract::{extract_x, extract_xstar, genealogy};
use levy_branching::cmj_sim::{batch_cmj, CmjOptions};
use levy_branching::io::{read_paths, write_atoms, write_event_log, write_genealogy, write_grid, write_paths, Header, PathHeader};
use levy_branching::path_sim::batch_simulate;
use levy_branching::rng::GENERATOR_ID;
use levy_branching::semigroup_solver::{solve_moment_pi, solve_occupation, solve_single_birth_u};
use levy_branching::verify::{run_suite, McReport};
use levy_branching::{AtomMeasure, JumpMeasure, LevyModel, Orientation};

use crate::config::{Equation, RunConfig};

/// A validated configuration together with its model and hash.
pub struct Job {
    pub cfg: RunConfig,
    pub model: LevyModel,
    pub hash: String,
}

impl Job {
    fn out_dir(&self) -> Result<PathBuf> {
        let dir = PathBuf::from(&self.cfg.output.dir);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn header(&self) -> Header {
        Header::new()
            .with("config_hash", &self.hash)
            .with("seed", self.cfg.rng.seed)
            .with("generator", GENERATOR_ID)
            .with("model_hash", levy_branching::io::model_hash(&self.model))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn describe_measure(m: &JumpMeasure) -> String {
    use levy_branching::levy_model::JumpKind;
    let cut = if m.cutoff > 0.0 { format!(" restricted to [{}, inf)", m.cutoff) } else { String::new() };
    let body = match &m.kind {
        JumpKind::Exponential { rate, decay } => format!("exponential(rate={}, decay={})", fmt(*rate), fmt(*decay)),
        JumpKind::Atoms { atoms } => format!("atoms({} points)", atoms.len()),
        JumpKind::Tabulated { points, tail_decay } => {
            format!("tabulated({} points, tail decay {})", points.len(), fmt(*tail_decay))
        }
    };
    body + &cut
}

fn fmt(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    format!("{r}")
}

pub fn model_info(job: &Job) -> Result<()> {
    let m = &job.model;
    let c = m.drift();
    let mean = m.mean_jump();
    println!("orientation: {:?}", m.orientation());
    println!("c = {}", fmt(c));
    println!("measure: {}", describe_measure(m.measure()));
    println!("⟨Π,ρ⟩ = {}", fmt(mean));
    let regime = if mean < c {
        format!("subcritical (⟨Π,ρ⟩={} < c={})", fmt(mean), fmt(c))
    } else {
        format!("supercritical (⟨Π,ρ⟩={} > c={})", fmt(mean), fmt(c))
    };
    println!("regime: {regime}");
    println!("Φ(0) = {}", fmt(m.phi_zero()));
    if m.orientation() == Orientation::SubordinatorNegativeDrift {
        println!("start a = {}", fmt(m.start()));
    }
    println!("ψ table:");
    for beta in [0.5, 1.0, 2.0, 4.0] {
        println!("  ψ({beta}) = {:.9}", m.laplace_exponent(beta));
    }
    let x_max = job.cfg.grid.x_max;
    let w = m.scale_w(x_max, 1e-10)?;
    println!("W table (step {}, error bound {:.1e}):", w.step, w.error_bound);
    for x in [0.0, 0.5, 1.0, 2.0, x_max] {
        if x <= x_max {
            println!("  W({x}) = {:.9}", w.eval(x));
        }
    }
    if m.phi_zero() > 0.0 {
        let t = m.tilt();
        println!("tilted model: c = {}, measure {}", fmt(t.drift()), describe_measure(t.measure()));
    }
    Ok(())
}

pub fn simulate(job: &Job) -> Result<()> {
    let cfg = &job.cfg;
    let paths = batch_simulate(&job.model, cfg.eps, cfg.simulate.paths, cfg.rng.seed)?;
    let file = job.out_dir()?.join("paths.jsonl");
    let mut header = PathHeader::new(&job.model, cfg.eps, cfg.rng.seed);
    header.config_hash = Some(job.hash.clone());
    let mut w = create(&file)?;
    write_paths(&mut w, &header, &paths)?;
    w.flush()?;
    let n = paths.len() as f64;
    let mean_tau = paths.iter().map(|p| p.tau0).sum::<f64>() / n;
    let mean_events = paths.iter().map(|p| p.events.len()).sum::<usize>() as f64 / n;
    println!("simulated {} paths: mean tau0 {mean_tau:.6}, mean jumps {mean_events:.3}", paths.len());
    println!("wrote {}", file.display());
    Ok(())
}

pub fn extract(job: &Job, input: Option<&Path>) -> Result<()> {
    let cfg = &job.cfg;
    let dir = job.out_dir()?;
    let input = input
        .map(Path::to_path_buf)
        .or_else(|| cfg.extract.input.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| dir.join("paths.jsonl"));
    let reader = BufReader::new(File::open(&input).with_context(|| format!("opening {}", input.display()))?);
    let (ph, paths) = read_paths(reader)?;
    let mut rows: Vec<(u64, AtomMeasure)> = Vec::new();
    for p in &paths {
        for &t in &cfg.extract.levels {
            let m = match p.orientation {
                Orientation::SubordinatorNegativeDrift => extract_x(p, t)?,
                Orientation::NegativeSubordinatorPositiveDrift => extract_xstar(p, t)?,
            };
            rows.push((p.index, m));
        }
    }
    let header = job.header().with("paths_file", input.display()).with("paths_model_hash", &ph.model_hash);
    let file = dir.join("atoms.tsv");
    let mut w = create(&file)?;
    write_atoms(&mut w, &header, rows.iter().map(|(i, m)| (*i, m)))?;
    w.flush()?;
    println!("extracted {} measures from {} paths into {}", rows.len(), paths.len(), file.display());
    for &t in &cfg.extract.levels {
        let masses: Vec<usize> = rows.iter().filter(|r| r.1.level == t).map(|r| r.1.total_mass()).collect();
        let mean = masses.iter().sum::<usize>() as f64 / masses.len().max(1) as f64;
        println!("  t = {t}: mean total mass {mean:.6}");
    }
    for p in paths.iter().take(cfg.extract.genealogy_paths) {
        if p.orientation != Orientation::SubordinatorNegativeDrift {
            bail!("genealogy export needs subordinator paths");
        }
        let tree = genealogy(p)?;
        let file = dir.join(format!("genealogy_{}.tsv", p.index));
        let mut w = create(&file)?;
        write_genealogy(&mut w, &header.clone().with("path_index", p.index), &tree)?;
        w.flush()?;
    }
    Ok(())
}

pub fn solve(job: &Job) -> Result<()> {
    let cfg = &job.cfg;
    let model = job.model.truncated(cfg.eps)?;
    let opts = cfg.solver_options();
    let horizon = cfg.grid.horizon;
    let f = &cfg.solve.f;
    let dir = job.out_dir()?;
    let header = job
        .header()
        .with("equation", format!("{:?}", cfg.solve.equation).to_lowercase())
        .with("horizon", horizon)
        .with("f", serde_json::to_string(f)?);
    let xs: Vec<f64> = (0..=1000).map(|k| k as f64 * cfg.grid.x_max / 1000.0).collect();
    let a = model.start();
    let (values, at_start, label): (Vec<f64>, f64, &str) = match cfg.solve.equation {
        Equation::Cumulant => {
            let s = solve_single_birth_u(&model, f, horizon, &opts)?;
            let mut w = create(&dir.join("grid.tsv"))?;
            write_grid(&mut w, &header, &s.curve)?;
            w.flush()?;
            (xs.iter().map(|&x| s.u(horizon, x)).collect(), s.u(horizon, a), "U")
        }
        Equation::Moment => {
            let s = solve_moment_pi(&model, f, horizon, &opts)?;
            let mut w = create(&dir.join("grid.tsv"))?;
            write_grid(&mut w, &header, &s.curve)?;
            w.flush()?;
            (xs.iter().map(|&x| s.pi(horizon, x)).collect(), s.pi(horizon, a), "pi")
        }
        Equation::Occupation => {
            let h = cfg.solve.h.as_ref().expect("validated");
            let s = solve_occupation(&model, h, f, &opts)?;
            let mut w = create(&dir.join("grid.tsv"))?;
            header.clone().with("step", s.step).write_to(&mut w)?;
            writeln!(w, "t\tK\tL")?;
            for (j, (k, l)) in s.kernel.iter().zip(&s.tail_integral).enumerate() {
                writeln!(w, "{}\t{k}\t{l}", (j as f64 * s.step).min(s.horizon))?;
            }
            w.flush()?;
            let vals = xs.iter().map(|&x| s.omega0(x)).collect::<levy_branching::Result<Vec<_>>>()?;
            (vals, s.omega0(a)?, "omega0")
        }
    };
    let mut w = create(&dir.join("values.tsv"))?;
    header.write_to(&mut w)?;
    writeln!(w, "x\t{label}")?;
    for (x, v) in xs.iter().zip(&values) {
        writeln!(w, "{x}\t{v}")?;
    }
    w.flush()?;
    match cfg.solve.equation {
        Equation::Occupation => println!("{label}({a}) = {at_start:.9}, exp(-{label}) = {:.9}", (-at_start).exp()),
        _ => println!("{label}_{horizon} f({a}) = {at_start:.9}, exp(-{label}) = {:.9}", (-at_start).exp()),
    }
    println!("wrote {} and {}", dir.join("grid.tsv").display(), dir.join("values.tsv").display());
    Ok(())
}

pub fn cmj(job: &Job) -> Result<()> {
    let cfg = &job.cfg;
    let spec = &cfg.cmj;
    let offspring = job.cfg.offspring(&job.model)?;
    let initial = spec.initial.clone().unwrap_or_else(|| vec![job.model.start()]);
    let horizon = spec.horizon.unwrap_or_else(|| spec.levels.iter().cloned().fold(0.0, f64::max));
    let opts = CmjOptions { horizon, budget: spec.budget, keep_log: true };
    let runs = batch_cmj(&offspring, &initial, &spec.levels, &opts, cfg.rng.seed, spec.replicas)?;
    let dir = job.out_dir()?;
    let header = job.header().with("horizon", horizon).with("replicas", spec.replicas);
    let mut w = create(&dir.join("events.jsonl"))?;
    let json_header: serde_json::Map<String, serde_json::Value> =
        header.fields.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect();
    write_event_log(&mut w, &json_header, &runs[0].particles)?;
    w.flush()?;
    let mut w = create(&dir.join("snapshots.tsv"))?;
    write_atoms(&mut w, &header, runs.iter().enumerate().flat_map(|(k, r)| r.snapshots.iter().map(move |m| (k as u64, m))))?;
    w.flush()?;
    let births: usize = runs.iter().map(|r| r.particles.len()).sum();
    println!("{} replicas, {births} particles in total", runs.len());
    for (k, &t) in spec.levels.iter().enumerate() {
        let mean = runs.iter().map(|r| r.snapshots[k].total_mass()).sum::<usize>() as f64 / runs.len() as f64;
        println!("  t = {t}: mean population {mean:.6}");
    }
    println!("wrote {} and {}", dir.join("events.jsonl").display(), dir.join("snapshots.tsv").display());
    Ok(())
}

/// Runs the configured suite; returns whether every check passed.
pub fn verify(job: &Job) -> Result<bool> {
    let cfg = &job.cfg;
    let suite = cfg.suite()?;
    let report: McReport =
        run_suite(suite, &job.model, &cfg.suite_config()).with_context(|| format!("suite {suite} on {}", cfg.name))?;
    let dir = job.out_dir()?;
    let stem = format!("report_{}_{}", cfg.name, suite);
    let json = dir.join(format!("{stem}.json"));
    let tsv = dir.join(format!("{stem}.tsv"));
    let mut w = create(&json)?;
    writeln!(w, "{}", report_json(job, &report)?)?;
    w.flush()?;
    let mut w = create(&tsv)?;
    job.header().write_to(&mut w)?;
    w.write_all(report.to_tsv().as_bytes())?;
    w.flush()?;
    println!("{} / {}: {} checks in {:.1}s", cfg.name, suite, report.checks.len(), report.runtime_secs);
    for c in &report.checks {
        let p = c.p_value.map(|p| format!(" p={p:.4}")).unwrap_or_default();
        println!(
            "  [{}] {:<48} est {:.6} pred {:.6} stat {:.4}{p}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.estimate,
            c.predicted,
            c.statistic
        );
    }
    println!("wrote {} and {}", json.display(), tsv.display());
    Ok(report.passed())
}

fn report_json(job: &Job, report: &McReport) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    v["config_hash"] = serde_json::Value::String(job.hash.clone());
    Ok(serde_json::to_string_pretty(&v)?)
}
