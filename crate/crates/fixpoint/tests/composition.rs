use fixpoint::encoding::{enumerate_alphabet, Letter, Word};
use fixpoint::params::solve_toy_unive;
use fixpoint::ppa::{iterate, Automaton, PeriodicConfig, StepReject};
use fixpoint::rules::library::{make_unive, UniveOptions};
use fixpoint::simulation::*;
use fixpoint::turing::toys;
use std::sync::Arc;

/// `σ^d ∘ G`.
struct Shifted<'a> {
    inner: &'a dyn Automaton,
    d: i64,
}

impl Automaton for Shifted<'_> {
    fn step_forward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        Ok(self.inner.step_forward(c)?.shift(self.d))
    }
    fn step_backward(&self, c: &PeriodicConfig) -> Result<PeriodicConfig, StepReject> {
        self.inner.step_backward(&c.shift(-self.d))
    }
    fn local_rule(&self, _: &[Word], _: &[Word], _: &[Word]) -> Option<Letter> {
        unimplemented!("not a radius-1 rule")
    }
}

/// Level 0 is the toy unive run with a macro-shift `D0`, so it
/// `(S0, T0, D0·S0)`-simulates `σ^{D0} G`; level 1 is the identity decoding
/// with `(1, T1, Q1)`.
#[test]
fn two_level_tower_offset_is_measured() {
    let p = toys::swap11();
    let w = solve_toy_unive(&[1, 1], &p, &p, 0).unwrap();
    let nu = [1i8, 0];
    let f = make_unive(&w, &nu, &p, &p, UniveOptions { force: false, son_father_check: true }).unwrap();
    let g = simulated_rule(&nu, &[1, 1], &p, &p);
    let l = enumerate_alphabet(&[1, 1]);
    let b = PeriodicConfig::new(vec![l[2].clone(), l[9].clone(), l[17].clone()]);
    let c = unive_spec(&w).encode(&b).unwrap();
    for (d0, t1, q1) in [(1i64, 2u64, 1i64), (2, 2, -1), (1, 3, 2)] {
        let h1 = Shifted { inner: &g, d: d0 };
        let spec0 = SimulationSpec { q: d0 * w.s as i64, ..unive_spec(&w) };
        let spec1 = SimulationSpec::new(1, t1, q1, Arc::new(IdentityCodec::default()));
        let comp = compose_specs(&[spec0.clone(), spec1.clone()]);
        let levels = [(spec0.s, spec0.t, spec0.q), (1, t1, q1)];
        assert_eq!(comp.q, geometric_offset(&levels));
        assert_eq!((comp.s, comp.t), (w.s, w.t * t1));
        // H2 = σ^{Q1} H1^{T1}, computed directly on the simulated level.
        let h2b = iterate(&h1, &b, t1 as i64).unwrap().shift(q1);
        let end = iterate(&f.rule, &c, comp.t as i64).unwrap();
        let period = end.period() as i64;
        let hits: Vec<i64> = (0..period).filter(|&s| comp.decode(&end.shift(s)).is_ok_and(|x| x == h2b)).collect();
        assert_eq!(hits, vec![comp.q.rem_euclid(period)], "D0={d0} T1={t1} Q1={q1}");
        // The alternative order Q0 + Q1·T0 is not the measured offset.
        assert_ne!((spec0.q + q1 * spec0.t as i64).rem_euclid(period), hits[0]);
    }
}
