use fixpoint::encoding::{bin_encode, sharp_pad, LengthVector, Letter, Word};
use fixpoint::ppa::{iterate, PeriodicConfig};
use fixpoint::rules::gamma_u::head_field_len;
use fixpoint::rules::library::{
    intru_fields, make_intru, restrict_level, toy_hsim_colony, toy_hsim_layout, LevelSeqs, RuleInstance,
};
use fixpoint::rules::reductions::HaltingReduction;
use fixpoint::simulation::{Codec, ColonyCodec};
use fixpoint::turing::toys;
use std::time::Instant;

struct Toy {
    s: u64,
    t: u64,
    code: Word,
    k: Box<dyn Fn(u64) -> LengthVector>,
    inst: RuleInstance,
}

fn toy(h: usize, depth: u64) -> Toy {
    let p = toys::trivial_identity();
    let code = p.encode();
    let (head, pl) = (head_field_len(&p), code.len());
    let (s, t) = toy_hsim_colony(depth, 1, head, pl, Some(1));
    let k = move |n: u64| toy_hsim_layout(n, s, t, head, pl, Some(1));
    let seqs = LevelSeqs::constant(move |n| Some(k(n)), s, t, 1);
    let inst = make_intru(&seqs, HaltingReduction::new(toys::halts_at(h)).perm_seq()).unwrap();
    Toy { s, t, code, k: Box::new(k), inst }
}

fn labels() -> Vec<&'static str> {
    intru_fields().iter().map(|f| f.0).collect()
}

/// A level-`n+1` letter with the level-`n+1` constants and empty other fields.
fn upper_letter(toy: &Toy, n: u64) -> Letter {
    let k = (toy.k)(n + 1);
    let labels = labels();
    let mut u: Letter = k.iter().map(|&l| vec![4; l]).collect();
    let at = |l: &str| labels.iter().position(|x| *x == l).unwrap();
    u[at("Tape")] = vec![3];
    u[at("Level")] = sharp_pad(k[at("Level")], &bin_encode((n + 1).into())).unwrap();
    u[at("Prog")] = toy.code.clone();
    u[at("RevProg")] = toy.code.clone();
    for f in ["OTape_-1", "OTape", "OTape_+1"] {
        u[at(f)] = vec![0];
    }
    u
}

fn level_codec(toy: &Toy, n: u64) -> ColonyCodec {
    let labels = labels();
    let k = (toy.k)(n);
    let at = |l: &str| labels.iter().position(|x| *x == l).unwrap();
    let level = sharp_pad(k[at("Level")], &bin_encode(n.into())).unwrap();
    ColonyCodec::from_labels(&labels, k, toy.s as usize, 0, (toy.k)(n + 1))
        .with_constant(at("Level"), level)
        .with_constant(at("Prog"), toy.code.clone())
        .with_constant(at("RevProg"), toy.code.clone())
        .with_constant(at("OTape_-1"), vec![0])
        .with_constant(at("OTape"), vec![0])
        .with_constant(at("OTape_+1"), vec![0])
}

#[test]
fn level_instantiations_follow_the_halting_time() {
    let h = 6;
    let tw = toy(h, 12);
    eprintln!("S={} T={}", tw.s, tw.t);
    for n in [0, h as u64 - 1, h as u64, h as u64 + 3] {
        let t0 = Instant::now();
        let rule = restrict_level(tw.inst.clone(), n, (tw.k)(n), &tw.code, &tw.code).rule;
        let codec = level_codec(&tw, n);
        let b = PeriodicConfig::new(vec![upper_letter(&tw, n)]);
        let c = codec.encode(&b).unwrap();
        let run = iterate(&rule, &c, 2 * tw.t as i64);
        if (n as usize) < h {
            let end = run.unwrap_or_else(|e| panic!("n={n}: {e}"));
            assert_eq!(codec.decode(&end).unwrap(), b);
        } else {
            let e = run.unwrap_err();
            assert!(e.time < 2 * tw.t as i64, "n={n}: {e}");
        }
        eprintln!("n={n} {:?}", t0.elapsed());
    }
}
