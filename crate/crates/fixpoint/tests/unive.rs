use fixpoint::encoding::enumerate_alphabet;
use fixpoint::params::solve_toy_unive;
use fixpoint::ppa::PeriodicConfig;
use fixpoint::rules::library::{make_unive, UniveOptions};
use fixpoint::simulation::{simulated_rule, unive_spec, verify_simulation, ClauseStatus, VerifyOptions};
use fixpoint::turing::toys;
use std::time::Instant;

#[test]
fn swap11_forward_backward_all_directions() {
    let p = toys::swap11();
    let w = solve_toy_unive(&[1, 1], &p, &p, 0).unwrap();
    eprintln!("S={} T={} U={} k={:?}", w.s, w.t, w.u, w.k);
    let spec = unive_spec(&w);
    let letters = enumerate_alphabet(&[1, 1]);
    for nu in [[-1i8, 0], [0, 1], [1, -1]] {
        let t0 = Instant::now();
        let f = make_unive(&w, &nu, &p, &p, UniveOptions { force: false, son_father_check: true }).unwrap();
        let g = simulated_rule(&nu, &[1, 1], &p, &p);
        for b in [
            PeriodicConfig::new(vec![letters[3].clone()]),
            PeriodicConfig::new(vec![letters[7].clone(), letters[20].clone()]),
        ] {
            let r = verify_simulation(&f.rule, &g, &spec, &b, &VerifyOptions::default());
            assert!(r.passed(), "{nu:?} {}: {}", b.to_text(), r.to_ndjson());
        }
        eprintln!("{nu:?}: {:?}", t0.elapsed());
    }
}

fn perturbations(c: &PeriodicConfig, k: &[usize], n: usize, seed: u64) -> Vec<PeriodicConfig> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut x = c.clone();
            let cell = rng.gen_range(0..x.period());
            let f = rng.gen_range(0..k.len());
            x.cells[cell][f] = (0..k[f]).map(|_| rng.gen_range(0..5u8)).collect();
            x
        })
        .collect()
}

#[test]
fn swap11_disjointness_and_completeness() {
    let p = toys::swap11();
    let w = solve_toy_unive(&[1, 1], &p, &p, 0).unwrap();
    let spec = unive_spec(&w);
    let nu = [1i8, -1];
    let f = make_unive(&w, &nu, &p, &p, UniveOptions { force: false, son_father_check: true }).unwrap();
    let g = simulated_rule(&nu, &[1, 1], &p, &p);
    let letters = enumerate_alphabet(&[1, 1]);
    let b = PeriodicConfig::new(vec![letters[4].clone()]);
    let c = spec.encode(&b).unwrap();
    let t0 = Instant::now();
    let opts =
        VerifyOptions { disjointness: true, completeness: perturbations(&c, &w.k, 200, 7), completeness_periods: 2 };
    let r = verify_simulation(&f.rule, &g, &spec, &b, &opts);
    eprintln!("{:?} survivors={}", t0.elapsed(), r.survivors);
    assert!(r.passed(), "{}", r.to_ndjson());
}

#[test]
fn without_son_father_check_completeness_fails() {
    let p = toys::swap11();
    let w = solve_toy_unive(&[1, 1], &p, &p, 0).unwrap();
    let spec = unive_spec(&w);
    let nu = [1i8, -1];
    let f = make_unive(&w, &nu, &p, &p, UniveOptions { force: false, son_father_check: false }).unwrap();
    let g = simulated_rule(&nu, &[1, 1], &p, &p);
    let b = PeriodicConfig::new(vec![enumerate_alphabet(&[1, 1])[4].clone()]);
    let c = spec.encode(&b).unwrap();
    let opts =
        VerifyOptions { disjointness: false, completeness: perturbations(&c, &w.k, 200, 7), completeness_periods: 2 };
    let r = verify_simulation(&f.rule, &g, &spec, &b, &opts);
    assert!(!r.passed());
    assert!(r.clauses.iter().any(|c| c.clause == "completeness" && c.status != ClauseStatus::Pass));
}

#[test]
fn periods_transfer_and_phases() {
    use fixpoint::simulation::*;
    use std::sync::Arc;
    let p = toys::swap11();
    let w = solve_toy_unive(&[1, 1], &p, &p, 0).unwrap();
    let spec = unive_spec(&w);
    for nu in [[0i8, 0], [1, 0], [1, -1]] {
        let f = make_unive(&w, &nu, &p, &p, UniveOptions { force: false, son_father_check: true }).unwrap();
        let g = simulated_rule(&nu, &[1, 1], &p, &p);
        let l = enumerate_alphabet(&[1, 1]);
        let b = PeriodicConfig::new(vec![l[1].clone(), l[5].clone()]);
        let t0 = Instant::now();
        let pt = period_transfer_check(&f.rule, &g, &spec, &b, 3).unwrap();
        eprintln!("{nu:?} {:?} {:?} {:?}", pt.simulated, pt.simulating, t0.elapsed());
        assert!(pt.matches);
        let c = spec.encode(&b).unwrap();
        let x = fixpoint::ppa::iterate(&f.rule, &c, 5).unwrap().shift(3);
        let tower = [
            TowerLevel { rule: &f.rule, spec: spec.clone() },
            TowerLevel { rule: &g, spec: SimulationSpec::new(1, 1, 0, Arc::new(IdentityCodec::default())) },
        ];
        assert_eq!(nested_rock_membership(&tower, &x, 2).unwrap(), vec![(3, 5), (0, 0)]);
    }
}
