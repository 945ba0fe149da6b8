use super::ast::*;
use super::compile::{compile_to_tm, step_bound, DEFAULT_COMPILE_BUDGET};
use super::eval::{eval_program, Compiled, Env};
use super::parse::parse;
use super::print::print;
use crate::encoding::{enumerate_alphabet, Letter};
use crate::ppa::Permutation;
use crate::turing::{tm_run, toys, RunOutcome};
use proptest::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;

fn w(s: &str) -> Vec<u8> {
    s.bytes().map(|b| b - b'0').collect()
}

fn compiled(src: &str) -> Compiled {
    Compiled::new(parse(src).unwrap(), Arc::new(Env::new())).unwrap()
}

const COORDI: &str = "fields Addr, Addr_+1:+1, Clock, Clock_+1:+1
check bina(Addr_+1) = bina(Addr) && bina(Clock_+1) = bina(Clock)
incr 3 -> Addr_+1
incr 4 -> Clock
incr 4 -> Clock_+1
";

#[test]
fn parse_check_node() {
    let p = parse("fields Tape\ncheck Tape = '3'").unwrap();
    assert_eq!(p.body, Perm::Seq(vec![Perm::Check(Cond::TermEq(Term::Field(0), Term::Const(vec![3])))]));
}

#[test]
fn parse_coordi_has_four_lines() {
    let p = parse(COORDI).unwrap();
    assert_eq!(p.body.lines().len(), 4);
    assert_eq!(p.directions(), vec![0, 1, 0, 1]);
    assert!(matches!(p.body.lines()[1], Perm::Incr { field: 1, decrement: false, .. }));
}

#[test]
fn parse_errors_carry_positions() {
    let e = parse("fields Tape\ncheck Tap = '3'").unwrap_err();
    assert_eq!((e.line, e.col), (2, 7));
    assert!(e.msg.contains("unknown field label"));
    assert!(parse("fields A\nif true\nexch A, A").is_err());
    assert!(parse("fields A\nendif").is_err());
    assert!(parse("fields A, A").is_err());
    assert!(parse("fields A\nwrite '5' -> A").is_err());
    assert!(parse("fields A\nfrobnicate A").is_err());
}

#[test]
fn elsif_desugars_to_exclusive_guards() {
    let p = parse("fields A\nif bina(A) = 0\nexch A, A\nelsif bina(A) = 1\nendif").unwrap();
    let lines = p.body.lines();
    assert_eq!(lines.len(), 2);
    let Perm::If(g, _) = &lines[1] else { panic!() };
    assert!(matches!(g, Cond::And(_, b) if matches!(**b, Cond::Not(_))));
}

#[test]
fn print_round_trips_every_construct() {
    let src = "fields A, B:+1, C:-1, D
# every construct once
check !(A = B) || (bina(A) + 2 * len(C) >= off([1, 2], 1) && instates(B, D))
check emp(''; A, B) && halt(D, 3, chi(A, cat(B, '4')))
incr S[bina(A) - 1] % 5 -> A
decr (-2) + 9 / 3 -> B
run D on A, B, C
unrun '0110' on A, C, B
write at(A, 1) -> B
unwrite bin(off(own(2), 2)) -> C
exch A, D
apply alpha[bina(A)] on B, C
unapply alpha[off(K[3], 0)] on $2
if bina(A) < 3
  if true
  endif
elsif bina(A) != 4
  exch B, C
endif
";
    let p = parse(src).unwrap();
    let printed = print(&p);
    assert_eq!(parse(&printed).unwrap(), p);
    assert_eq!(print(&parse(&printed).unwrap()), printed);
}

#[test]
fn increment_examples() {
    let c = compiled("fields A\nincr 4 -> A");
    assert_eq!(c.forward(&[w("41")]).unwrap(), vec![w("10")]);
    assert_eq!(c.forward(&[w("11")]).unwrap(), vec![w("44")]);
    assert!(c.forward(&[w("01")]).is_err(), "leading zero is not canonical");
    assert!(c.forward(&[w("44")]).is_ok());
    assert!(c.forward(&[w("001")]).is_err(), "leading zero is not canonical");
}

#[test]
fn write_rejects_nonempty_target() {
    let c = compiled("fields A, B\nwrite A -> B");
    assert_eq!(c.forward(&[w("1"), w("44")]).unwrap(), vec![w("1"), w("41")]);
    assert!(c.forward(&[w("1"), w("40")]).is_err());
    assert!(c.forward(&[w("10"), w("4")]).is_err(), "does not fit");
    let c = compiled("fields A\nwrite A -> A");
    assert!(c.forward(&[w("4")]).is_ok());
    assert!(c.forward(&[w("1")]).is_err());
}

#[test]
fn invert_is_syntactic() {
    let p = parse("fields A, B\ncheck A = B\nincr 3 -> A\nwrite A -> B").unwrap();
    let q = p.invert();
    assert_eq!(q.body.lines()[0], Perm::Write { term: Term::Field(0), field: 1, inverse: true });
    assert_eq!(q.body.lines()[2], p.body.lines()[0]);
    assert_eq!(q.invert(), p);
}

#[test]
fn increment_inverse_exhaustive() {
    for m in 1..=8 {
        let c = compiled(&format!("fields A\nincr {m} -> A"));
        for len in 0..=4 {
            for u in enumerate_alphabet(&[len]) {
                if let Ok(v) = c.forward(&u) {
                    assert_eq!(c.backward(&v).unwrap(), u);
                }
            }
        }
    }
}

#[test]
fn guard_flip_rejects() {
    let c = compiled("fields A\nif bina(A) = 0\nincr 2 -> A\nendif");
    assert!(c.forward(&[w("4")]).is_err());
    assert_eq!(c.forward(&[w("1")]).unwrap(), vec![w("1")]);
    let c = compiled("fields A\nif bina(A) < 5\nincr 8 -> A\nendif");
    assert!(c.forward(&[w("4100")]).is_err(), "4 -> 5 leaves the guard");
    assert_eq!(c.forward(&[w("4411")]).unwrap(), vec![w("4100")]);
}

#[test]
fn parameter_changes_reject() {
    let c = compiled("fields A\nincr bina(A) + 2 -> A");
    for u in enumerate_alphabet(&[3]) {
        assert!(c.forward(&u).is_err());
    }
    let c = compiled("fields A, B\nincr len(A) + bina(B) -> B");
    assert_eq!(c.forward(&[w("4"), w("44")]).unwrap(), vec![w("4"), w("44")]);
    assert!(c.forward(&[w("44"), w("44")]).is_err(), "modulus grows from 2 to 3");
    let c = compiled("fields A\nwrite cat(A, '0') -> A");
    assert!(c.forward(&[w("44")]).is_err());
}

#[test]
fn out_of_range_field_rejects() {
    let c = compiled("fields A, B, C\nexch A, $9");
    for u in enumerate_alphabet(&[1, 0, 1]) {
        assert!(c.forward(&u).is_err());
    }
    assert!(c.forward(&[w("1")]).is_err(), "wrong field count");
}

#[test]
fn reject_reports_line() {
    let c = compiled("fields A, B\nexch A, B\ncheck A = '0'");
    let r = c.forward(&[w("1"), w("1")]).unwrap_err();
    assert_eq!(r.line, Some(2));
    let r = c.backward(&[w("1"), w("1")]).unwrap_err();
    assert_eq!(r.line, Some(2));
}

#[test]
fn run_steps_the_machine() {
    let p = toys::identity();
    let code: String = p.encode().iter().map(|d| char::from(b'0' + d)).collect();
    let c = compiled(&format!("fields T, M:-1, P:+1\nrun '{code}' on T, M, P"));
    let out = c.forward(&[w("2"), w("44444444444440"), w("44444444444444")]).unwrap();
    assert_eq!(out[0], w("2"));
    assert!(c.backward(&out).unwrap() == vec![w("2"), w("44444444444440"), w("44444444444444")]);
}

#[test]
fn missing_sequences_are_reported() {
    let p = parse("fields A\nincr S[0] -> A").unwrap();
    assert_eq!(Compiled::new(p.clone(), Arc::new(Env::new())).unwrap_err(), vec!["S".to_string()]);
    let env = Env::new().with_int("S", |n| (n >= 0).then_some(n + 3));
    let c = Compiled::new(p, Arc::new(env)).unwrap();
    assert_eq!(c.forward(&[w("01")]).unwrap_err().reason, "field is not a canonical binary number");
    assert_eq!(c.forward(&[w("10")]).unwrap(), vec![w("44")]);
}

const SAMPLE: &str = "fields A, B, C
check bina(A) < 3 || C = '1'
if bina(A) = 1
  exch B, C
elsif C = '4'
  write A -> C
endif
incr 3 -> A
if emp(''; C)
  decr 2 -> B
endif
";

#[test]
fn injective_and_inverse_on_sample() {
    let c = compiled(SAMPLE);
    let mut images: HashMap<Letter, Letter> = HashMap::new();
    for u in enumerate_alphabet(&[2, 1, 1]) {
        if let Ok(v) = c.forward(&u) {
            assert_eq!(c.backward(&v).unwrap(), u);
            assert!(images.insert(v, u).is_none());
        }
    }
    assert!(images.len() > 10);
    for u in enumerate_alphabet(&[2, 1, 1]) {
        if let Ok(v) = c.backward(&u) {
            assert_eq!(c.forward(&v).unwrap(), u);
        }
    }
}

/// Runs the compiled machines against the interpreter on every letter.
fn differential(src: &str, k: &[usize], env: Env) {
    let p = parse(src).unwrap();
    let env = Arc::new(env);
    let tm = compile_to_tm(&p, k, &env, DEFAULT_COMPILE_BUDGET).unwrap();
    let inv = p.invert();
    let cap = step_bound(&p, k);
    for u in enumerate_alphabet(k) {
        for (machine, prog) in [(&tm.forward, &p), (&tm.backward, &inv)] {
            let want = eval_program(prog, &u, &env).ok();
            match tm_run(machine, &u, cap) {
                RunOutcome::Accepted { output, .. } => {
                    assert_eq!(Some(output), want, "{src} on {u:?}")
                }
                RunOutcome::Rejected { .. } => assert_eq!(want, None, "{src} on {u:?}"),
                other => panic!("{src} on {u:?}: {other:?}"),
            }
        }
    }
    assert!(tm.forward_measure.states <= tm.forward_measure.size);
    assert!(tm.forward_measure.time.max_steps <= cap);
}

#[test]
fn compile_identity_and_exchange() {
    differential("fields A", &[1], Env::new());
    differential("fields A, B\nexch A, B", &[1, 1], Env::new());
    let p = parse("fields A, B\nexch A, B").unwrap();
    let tm = compile_to_tm(&p, &[1, 1], &Env::new(), DEFAULT_COMPILE_BUDGET).unwrap();
    assert_eq!(
        tm_run(&tm.forward, &[w("1"), w("3")], 100),
        RunOutcome::Accepted { output: vec![w("3"), w("1")], steps: 18 }
    );
    assert!(matches!(tm_run(&tm.forward, &[w("1")], 100), RunOutcome::Rejected { .. }));
    assert!(matches!(tm_run(&tm.forward, &[w("1"), w("33")], 100), RunOutcome::Rejected { .. }));
}

#[test]
fn compile_every_primitive() {
    differential("fields A, B\ncheck bina(A) >= bina(B)", &[2, 2], Env::new());
    differential("fields A, B\nincr 3 -> A\ndecr bina(B) + 1 -> B", &[2, 2], Env::new());
    differential("fields A, B\nwrite A -> B\nunwrite '1' -> A", &[1, 2], Env::new());
    differential("fields A, B, C\nexch A, C", &[1, 2, 1], Env::new());
    differential("fields A, B\nif A = '1'\nexch A, B\nendif", &[1, 1], Env::new());
    differential("fields A, B, C\nexch A, $9", &[1, 1, 1], Env::new());
    let prog = toys::halts_at(2);
    let code: String = prog.encode().iter().map(|d| char::from(b'0' + d)).collect();
    differential(&format!("fields T, M:-1, P:+1\nrun '{code}' on T, M, P"), &[1, 1, 1], Env::new());
    differential(&format!("fields T\ncheck halt('{code}', bina(T), '1')"), &[3], Env::new());
    let flip: Arc<dyn Permutation> = Arc::new(compiled("fields X\nincr 2 -> X"));
    let env = Env::new().with_perm("alpha", move |n| (n == 0).then(|| flip.clone()));
    differential("fields A, B\napply alpha[len(B) - 1] on A", &[2, 1], env);
}

#[test]
fn compile_budget_is_explicit() {
    let p = parse("fields A").unwrap();
    assert!(compile_to_tm(&p, &[4, 4], &Env::new(), DEFAULT_COMPILE_BUDGET).is_err());
}

#[test]
fn measure_empty_alphabet_is_flagged() {
    let p = parse("fields A\ncheck '0' = '1'").unwrap();
    let tm = compile_to_tm(&p, &[1], &Env::new(), DEFAULT_COMPILE_BUDGET).unwrap();
    assert!(tm.forward_measure.time.empty_accepted_set);
    assert_eq!(tm.forward_measure.time.max_steps, 0);
    let p = parse("fields A").unwrap();
    let tm = compile_to_tm(&p, &[1], &Env::new(), DEFAULT_COMPILE_BUDGET).unwrap();
    assert_eq!(tm.forward_measure.time.max_steps, 2 * 4 + 2);
}

fn arb_val(fields: usize) -> impl Strategy<Value = Val> {
    let leaf = prop_oneof![
        (-3i128..20).prop_map(Val::Const),
        (0..fields).prop_map(|i| Val::Bina(Box::new(Term::Field(i)))),
        (0..fields).prop_map(|i| Val::Num(Box::new(Term::Field(i)))),
        (0..fields).prop_map(|i| Val::Len(Box::new(Term::Field(i)))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), 0..5usize).prop_map(|(a, b, o)| {
                let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Mod][o];
                Val::Arith(op, Box::new(a), Box::new(b))
            }),
            (prop::collection::vec(inner.clone(), 0..3), inner.clone())
                .prop_map(|(k, i)| { Val::Offset { k: KVec::Explicit(k), i: Box::new(i) } }),
        ]
    })
}

fn arb_term(fields: usize) -> impl Strategy<Value = Term> {
    let leaf =
        prop_oneof![prop::collection::vec(0u8..5, 0..4).prop_map(Term::Const), (0..fields).prop_map(Term::Field),];
    leaf.prop_recursive(2, 8, 3, move |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Term::Chi),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Term::Cat),
            (inner, arb_val(fields)).prop_map(|(t, v)| Term::At(Box::new(t), Box::new(v))),
            arb_val(fields).prop_map(|v| Term::Bin(Box::new(v))),
        ]
    })
}

fn arb_cond(fields: usize) -> impl Strategy<Value = Cond> {
    let leaf = prop_oneof![
        Just(Cond::True),
        (arb_val(fields), arb_val(fields), 0..6usize).prop_map(|(a, b, o)| {
            Cond::Cmp([CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge][o], a, b)
        }),
        (arb_term(fields), arb_term(fields)).prop_map(|(a, b)| Cond::TermEq(a, b)),
        (arb_term(fields), prop::collection::vec(0..fields, 1..3)).prop_map(|(t, f)| Cond::Emp(t, f)),
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Cond::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Cond::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Cond::Not(Box::new(a))),
        ]
    })
}

fn arb_perm(fields: usize) -> impl Strategy<Value = Perm> {
    let leaf = prop_oneof![
        arb_cond(fields).prop_map(Perm::Check),
        (arb_val(fields), 0..fields, any::<bool>()).prop_map(|(m, f, d)| Perm::Incr {
            modulus: m,
            field: f,
            decrement: d
        }),
        (arb_term(fields), 0..fields, any::<bool>()).prop_map(|(t, f, i)| Perm::Write {
            term: t,
            field: f,
            inverse: i
        }),
        (0..fields, 0..fields).prop_map(|(a, b)| Perm::Exch(a, b)),
    ];
    leaf.prop_recursive(2, 12, 4, move |inner| {
        (arb_cond(fields), prop::collection::vec(inner, 0..4))
            .prop_map(|(q, body)| Perm::If(q, Box::new(Perm::Seq(body))))
    })
}

fn arb_program() -> impl Strategy<Value = PermProgram> {
    prop::collection::vec(arb_perm(3), 0..5).prop_map(|body| PermProgram {
        fields: ["A", "B_+1", "C_-1"]
            .iter()
            .zip([0, 1, -1])
            .map(|(l, d)| FieldDecl { label: l.to_string(), dir: d })
            .collect(),
        body: Perm::Seq(body),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_programs_parse_back(p in arb_program()) {
        prop_assert_eq!(parse(&print(&p)).unwrap(), p);
    }

    #[test]
    fn random_programs_are_injective(p in arb_program()) {
        let c = Compiled::new(p, Arc::new(Env::new())).unwrap();
        let mut seen: HashMap<Letter, Letter> = HashMap::new();
        for u in enumerate_alphabet(&[2, 1, 1]) {
            if let Ok(v) = c.forward(&u) {
                prop_assert_eq!(c.backward(&v).unwrap(), u.clone());
                prop_assert!(seen.insert(v, u.clone()).is_none());
            }
            if let Ok(v) = c.backward(&u) {
                prop_assert_eq!(c.forward(&v).unwrap(), u);
            }
        }
    }
}
