use levy_branching::branching_extract::{genealogy, straddles};
use levy_branching::cmj_sim::{simulate_cmj, CmjOptions};
use levy_branching::io::{read_paths, write_paths, PathHeader};
use levy_branching::verify::{run_suite, Suite, SuiteConfig};
use levy_branching::*;

fn model_a(a: f64) -> LevyModel {
    LevyModel::new(2.0, JumpMeasure::exponential(1.0, 1.0).unwrap(), Orientation::SubordinatorNegativeDrift, a).unwrap()
}

#[test]
fn level_zero_is_the_initial_atom() {
    for p in batch_simulate(&model_a(2.0), 1e-9, 200, 9).unwrap() {
        let x0 = extract_x(&p, 0.0).unwrap();
        assert_eq!(x0.atoms, vec![2.0]);
    }
}

#[test]
fn genealogy_slices_agree_with_extraction() {
    let paths = batch_simulate(&model_a(1.5), 1e-9, 300, 21).unwrap();
    for p in &paths {
        let tree = genealogy(p).unwrap();
        for t in [0.25, 0.5, 1.0, 2.0] {
            assert_eq!(tree.slice(t), extract_x(p, t).unwrap());
        }
    }
}

#[test]
fn stored_paths_give_the_same_atoms() {
    let m = model_a(2.0);
    let paths = batch_simulate(&m, 1e-9, 50, 3).unwrap();
    let mut buf = Vec::new();
    write_paths(&mut buf, &PathHeader::new(&m, 1e-9, 3), &paths).unwrap();
    let (_, back) = read_paths(&buf[..]).unwrap();
    for (a, b) in paths.iter().zip(&back) {
        assert_eq!(straddles(a, 1.0), straddles(b, 1.0));
    }
}

#[test]
fn childless_cmj_keeps_only_ancestors() {
    let law = semigroup_solver::OffspringLaw::new(vec![1.0], 3.0, JumpMeasure::exponential(1.0, 1.0).unwrap()).unwrap();
    let run = simulate_cmj(&law, &[1.0, 2.0, 0.5], &[0.25], &CmjOptions::new(3.0), 5, 0).unwrap();
    assert_eq!(run.particles.len(), 3);
    assert!(run.particles.iter().all(|p| p.parent.is_none()));
    assert!(run.births.iter().all(|b| b.children == 0));
}

#[test]
fn reports_are_byte_identical_for_equal_inputs() {
    let cfg = SuiteConfig { n_paths: 5_000, n_two_sample: 2_000, ..SuiteConfig::default() };
    let m = model_a(2.0);
    let r1 = run_suite(Suite::Geometric, &m, &cfg).unwrap();
    let r2 = run_suite(Suite::Geometric, &m, &cfg).unwrap();
    assert_eq!(r1.to_json(), r2.to_json());
    assert_eq!(r1.to_tsv(), r2.to_tsv());
    let other = run_suite(Suite::Geometric, &m, &SuiteConfig { seed: cfg.seed + 1, ..cfg.clone() }).unwrap();
    assert_ne!(r1.to_json(), other.to_json());
}

#[test]
fn xstar_paths_start_from_the_initial_law_atom() {
    let b = LevyModel::new(1.0, JumpMeasure::exponential(2.0, 1.0).unwrap(), Orientation::NegativeSubordinatorPositiveDrift, 0.0)
        .unwrap();
    for p in batch_simulate(&b, 1e-9, 200, 17).unwrap() {
        let x0 = extract_xstar(&p, 0.0).unwrap();
        assert_eq!(x0.atoms, vec![p.level_before_kill()]);
        let occ = occupation(&p, &TestFunction::constant(1.0).unwrap(), &TestFunction::constant(1.0).unwrap()).unwrap();
        assert!((occ - p.drift * p.tau0).abs() < 1e-9);
    }
}
