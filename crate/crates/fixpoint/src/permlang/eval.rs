//! Reversible interpreter: every statement denotes an injective partial
//! map on letters, and any undefined subterm rejects.

use super::ast::*;
use crate::encoding::{bin_decode, bin_encode, chi_encode, field_offset, sharp_pad, sharp_strip, Letter, Word};
use crate::ppa::{LocalReject, Permutation};
use crate::rules::gamma_u::{gamma_backward, gamma_forward, lift_padded};
use crate::turing::{tm_run, RunOutcome, TmProgram};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub type IntSeq = Arc<dyn Fn(i128) -> Option<i128> + Send + Sync>;
pub type LayoutSeq = Arc<dyn Fn(i128) -> Option<Vec<usize>> + Send + Sync>;
pub type PermSeq = Arc<dyn Fn(i128) -> Option<Arc<dyn Permutation>> + Send + Sync>;

/// Registered sequences and a cache of decoded programs.
#[derive(Default)]
pub struct Env {
    ints: HashMap<String, IntSeq>,
    layouts: HashMap<String, LayoutSeq>,
    perms: HashMap<String, PermSeq>,
    programs: Mutex<HashMap<Word, Option<Arc<TmProgram>>>>,
}

impl std::fmt::Debug for Env {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Env")
            .field("ints", &self.ints.keys().collect::<Vec<_>>())
            .field("layouts", &self.layouts.keys().collect::<Vec<_>>())
            .field("perms", &self.perms.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_int(mut self, name: &str, f: impl Fn(i128) -> Option<i128> + Send + Sync + 'static) -> Self {
        self.ints.insert(name.to_string(), Arc::new(f));
        self
    }

    pub fn with_layout(mut self, name: &str, f: impl Fn(i128) -> Option<Vec<usize>> + Send + Sync + 'static) -> Self {
        self.layouts.insert(name.to_string(), Arc::new(f));
        self
    }

    pub fn with_perm(
        mut self,
        name: &str,
        f: impl Fn(i128) -> Option<Arc<dyn Permutation>> + Send + Sync + 'static,
    ) -> Self {
        self.perms.insert(name.to_string(), Arc::new(f));
        self
    }

    /// Decodes a program code, caching the result.
    pub fn program(&self, code: &[u8]) -> Option<Arc<TmProgram>> {
        let mut cache = self.programs.lock().expect("program cache poisoned");
        if let Some(p) = cache.get(code) {
            return p.clone();
        }
        let p = TmProgram::decode(code).ok().map(Arc::new);
        cache.insert(code.to_vec(), p.clone());
        p
    }

    /// Names referenced by `p` that are not registered.
    pub fn missing_names(&self, p: &Perm) -> Vec<String> {
        let mut out = Vec::new();
        walk_perm(p, &mut |kind, name| {
            let known = match kind {
                NameKind::Int => self.ints.contains_key(name),
                NameKind::Layout => self.layouts.contains_key(name),
                NameKind::Perm => self.perms.contains_key(name),
            };
            if !known && !out.iter().any(|n: &String| n == name) {
                out.push(name.to_string());
            }
        });
        out
    }
}

enum NameKind {
    Int,
    Layout,
    Perm,
}

fn walk_perm(p: &Perm, f: &mut dyn FnMut(NameKind, &str)) {
    match p {
        Perm::Check(q) => walk_cond(q, f),
        Perm::Incr { modulus, .. } => walk_val(modulus, f),
        Perm::RunTm { prog, .. } => walk_term(prog, f),
        Perm::Write { term, .. } => walk_term(term, f),
        Perm::Exch(..) => {}
        Perm::If(q, a) => {
            walk_cond(q, f);
            walk_perm(a, f);
        }
        Perm::Seq(ps) => ps.iter().for_each(|p| walk_perm(p, f)),
        Perm::Apply { name, index, .. } => {
            f(NameKind::Perm, name);
            walk_val(index, f);
        }
    }
}

fn walk_cond(q: &Cond, f: &mut dyn FnMut(NameKind, &str)) {
    match q {
        Cond::True => {}
        Cond::Cmp(_, a, b) => {
            walk_val(a, f);
            walk_val(b, f);
        }
        Cond::TermEq(a, b) | Cond::InStates(a, b) => {
            walk_term(a, f);
            walk_term(b, f);
        }
        Cond::Emp(t, _) => walk_term(t, f),
        Cond::Halt(p, v, t) => {
            walk_term(p, f);
            walk_val(v, f);
            walk_term(t, f);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            walk_cond(a, f);
            walk_cond(b, f);
        }
        Cond::Not(a) => walk_cond(a, f),
    }
}

fn walk_term(t: &Term, f: &mut dyn FnMut(NameKind, &str)) {
    match t {
        Term::Const(_) | Term::Field(_) => {}
        Term::Chi(ts) | Term::Cat(ts) => ts.iter().for_each(|t| walk_term(t, f)),
        Term::At(t, v) => {
            walk_term(t, f);
            walk_val(v, f);
        }
        Term::Bin(v) => walk_val(v, f),
    }
}

fn walk_val(v: &Val, f: &mut dyn FnMut(NameKind, &str)) {
    match v {
        Val::Const(_) => {}
        Val::Bina(t) | Val::Len(t) | Val::Num(t) => walk_term(t, f),
        Val::Offset { k, i } => {
            match k {
                KVec::Explicit(vs) => vs.iter().for_each(|v| walk_val(v, f)),
                KVec::OwnLengths(_) => {}
                KVec::Seq(name, i) => {
                    f(NameKind::Layout, name);
                    walk_val(i, f);
                }
            }
            walk_val(i, f);
        }
        Val::SeqAt(name, i) => {
            f(NameKind::Int, name);
            walk_val(i, f);
        }
        Val::Arith(_, a, b) => {
            walk_val(a, f);
            walk_val(b, f);
        }
    }
}

type R<T> = Result<T, String>;

fn field(u: &[Word], i: usize) -> R<&Word> {
    u.get(i).ok_or_else(|| format!("field {i} does not exist"))
}

fn strip(w: &[u8]) -> R<&[u8]> {
    sharp_strip(w).map_err(|e| e.to_string())
}

/// Evaluates a term.
pub fn eval_term(t: &Term, u: &[Word], env: &Env) -> R<Word> {
    match t {
        Term::Const(w) => Ok(w.clone()),
        Term::Field(i) => field(u, *i).cloned(),
        Term::Chi(ts) => {
            let parts = ts.iter().map(|t| eval_term(t, u, env)).collect::<R<Vec<_>>>()?;
            Ok(chi_encode(&parts))
        }
        Term::Cat(ts) => {
            let mut out = Word::new();
            for t in ts {
                out.extend(eval_term(t, u, env)?);
            }
            Ok(out)
        }
        Term::At(t, v) => {
            let w = eval_term(t, u, env)?;
            let i = eval_val(v, u, env)?;
            Ok(usize::try_from(i).ok().and_then(|i| w.get(i)).map(|&s| vec![s]).unwrap_or_default())
        }
        Term::Bin(v) => {
            let n = eval_val(v, u, env)?;
            let n = u128::try_from(n).map_err(|_| "bin of a negative value".to_string())?;
            Ok(bin_encode(n))
        }
    }
}

/// Evaluates a valuation.
pub fn eval_val(v: &Val, u: &[Word], env: &Env) -> R<i128> {
    match v {
        Val::Const(n) => Ok(*n),
        Val::Bina(t) => {
            let w = eval_term(t, u, env)?;
            let s = strip(&w)?;
            let n = bin_decode(s).map_err(|e| e.to_string())?;
            i128::try_from(n).map_err(|_| "binary value overflows".to_string())
        }
        Val::Len(t) => Ok(eval_term(t, u, env)?.len() as i128),
        Val::Num(t) => {
            let w = eval_term(t, u, env)?;
            strip(&w)?
                .iter()
                .try_fold(0i128, |acc, &d| acc.checked_mul(5)?.checked_add(i128::from(d)))
                .ok_or_else(|| "numeric value overflows".to_string())
        }
        Val::Offset { k, i } => {
            let k: Vec<usize> = match k {
                KVec::Explicit(vs) => vs
                    .iter()
                    .map(|v| eval_val(v, u, env).and_then(|n| usize::try_from(n).map_err(|_| "negative length".into())))
                    .collect::<R<_>>()?,
                KVec::OwnLengths(m) => {
                    if *m > u.len() {
                        return Err(format!("own({m}) exceeds the field count"));
                    }
                    u[..*m].iter().map(Vec::len).collect()
                }
                KVec::Seq(name, i) => {
                    let n = eval_val(i, u, env)?;
                    let f = env.layouts.get(name).ok_or_else(|| format!("unknown layout sequence {name}"))?;
                    f(n).ok_or_else(|| format!("{name}[{n}] undefined"))?
                }
            };
            let i = eval_val(i, u, env)?;
            let i = usize::try_from(i).map_err(|_| "negative field index".to_string())?;
            field_offset(&k, i).map(|o| o as i128).map_err(|e| e.to_string())
        }
        Val::SeqAt(name, i) => {
            let n = eval_val(i, u, env)?;
            let f = env.ints.get(name).ok_or_else(|| format!("unknown sequence {name}"))?;
            f(n).ok_or_else(|| format!("{name}[{n}] undefined"))
        }
        Val::Arith(op, a, b) => {
            let (a, b) = (eval_val(a, u, env)?, eval_val(b, u, env)?);
            let r = match op {
                ArithOp::Add => a.checked_add(b),
                ArithOp::Sub => a.checked_sub(b),
                ArithOp::Mul => a.checked_mul(b),
                ArithOp::Div => a.checked_div_euclid(b),
                ArithOp::Mod => a.checked_rem_euclid(b),
            };
            r.ok_or_else(|| "arithmetic undefined".to_string())
        }
    }
}

fn program_of(t: &Term, u: &[Word], env: &Env) -> R<Arc<TmProgram>> {
    let w = eval_term(t, u, env)?;
    let code = strip(&w)?;
    env.program(code).ok_or_else(|| "program term does not decode".to_string())
}

/// Evaluates a condition.
pub fn eval_cond(q: &Cond, u: &[Word], env: &Env) -> R<bool> {
    match q {
        Cond::True => Ok(true),
        Cond::Cmp(op, a, b) => Ok(op.holds(eval_val(a, u, env)?, eval_val(b, u, env)?)),
        Cond::TermEq(a, b) => Ok(eval_term(a, u, env)? == eval_term(b, u, env)?),
        Cond::InStates(t, p) => {
            let w = eval_term(t, u, env)?;
            let s = strip(&w)?.to_vec();
            Ok(program_of(p, u, env)?.is_live_state(&s))
        }
        Cond::Emp(t, fs) => {
            let w = eval_term(t, u, env)?;
            for &i in fs {
                if strip(field(u, i)?)? != w.as_slice() {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Cond::Halt(p, v, t) => {
            let prog = program_of(p, u, env)?;
            let steps = eval_val(v, u, env)?;
            let steps = usize::try_from(steps).map_err(|_| "negative step bound".to_string())?;
            let input = eval_term(t, u, env)?;
            Ok(matches!(tm_run(&prog, &[input], steps), RunOutcome::Running))
        }
        Cond::And(a, b) => Ok(eval_cond(a, u, env)? && eval_cond(b, u, env)?),
        Cond::Or(a, b) => Ok(eval_cond(a, u, env)? || eval_cond(b, u, env)?),
        Cond::Not(a) => Ok(!eval_cond(a, u, env)?),
    }
}

fn canonical_value(w: &[u8]) -> R<u128> {
    let s = strip(w)?;
    let n = bin_decode(s).map_err(|e| e.to_string())?;
    if bin_encode(n) != s {
        return Err("field is not a canonical binary number".into());
    }
    Ok(n)
}

/// Applies a statement in place.
pub fn eval_perm(p: &Perm, u: &mut Letter, env: &Env) -> R<()> {
    match p {
        Perm::Check(q) => {
            if eval_cond(q, u, env)? {
                Ok(())
            } else {
                Err("check failed".into())
            }
        }
        Perm::Incr { modulus, field: i, decrement } => {
            let m = eval_val(modulus, u, env)?;
            let old = field(u, *i)?;
            let n = canonical_value(old)?;
            let m = u128::try_from(m).ok().filter(|&m| m > 0).ok_or("modulus must be positive")?;
            if n >= m {
                return Err("counter not below its modulus".into());
            }
            let next = if *decrement { (n + m - 1) % m } else { (n + 1) % m };
            let len = old.len();
            u[*i] = sharp_pad(len, &bin_encode(next)).map_err(|e| e.to_string())?;
            if eval_val(modulus, u, env)? != m as i128 {
                return Err("modulus changed by the update".into());
            }
            Ok(())
        }
        Perm::RunTm { prog, tape, hm, hp, inverse } => {
            let before = eval_term(prog, u, env)?;
            let program = program_of(prog, u, env)?;
            let (a, m, pl) = (field(u, *tape)?, field(u, *hm)?, field(u, *hp)?);
            if tape == hm || tape == hp || hm == hp {
                return Err("run needs three distinct fields".into());
            }
            let image = if *inverse {
                lift_padded(|a, m, p| gamma_backward(&program, a, m, p), a, m, pl)
            } else {
                lift_padded(|a, m, p| gamma_forward(&program, a, m, p), a, m, pl)
            };
            let (a2, m2, p2) = image.ok_or("machine transition undefined")?;
            u[*tape] = a2;
            u[*hm] = m2;
            u[*hp] = p2;
            if eval_term(prog, u, env)? != before {
                return Err("program changed by its own run".into());
            }
            Ok(())
        }
        Perm::Write { term, field: i, inverse } => {
            let t = eval_term(term, u, env)?;
            let value = strip(&t)?.to_vec();
            let old = field(u, *i)?;
            let len = old.len();
            let content = strip(old)?;
            if *inverse {
                if content != value.as_slice() {
                    return Err("field differs from the erased term".into());
                }
                u[*i] = vec![crate::encoding::PAD; len];
            } else {
                if !content.is_empty() {
                    return Err("write target is not empty".into());
                }
                u[*i] = sharp_pad(len, &value).map_err(|e| e.to_string())?;
            }
            if eval_term(term, u, env)? != t {
                return Err("written term depends on its target".into());
            }
            Ok(())
        }
        Perm::Exch(a, b) => {
            let (x, y) = (field(u, *a)?, field(u, *b)?);
            if x.len() != y.len() {
                return Err("exchanged fields differ in length".into());
            }
            u.swap(*a, *b);
            Ok(())
        }
        Perm::If(q, body) => {
            if !eval_cond(q, u, env)? {
                return Ok(());
            }
            eval_perm(body, u, env)?;
            if eval_cond(q, u, env)? {
                Ok(())
            } else {
                Err("guard flipped by its body".into())
            }
        }
        Perm::Seq(ps) => ps.iter().try_for_each(|p| eval_perm(p, u, env)),
        Perm::Apply { name, index, fields, inverse } => {
            let n = eval_val(index, u, env)?;
            let f = env.perms.get(name).ok_or_else(|| format!("unknown permutation sequence {name}"))?;
            let alpha = f(n).ok_or_else(|| format!("{name}[{n}] undefined"))?;
            let sub = fields.iter().map(|&i| field(u, i).cloned()).collect::<R<Vec<_>>>()?;
            let img = if *inverse { alpha.backward(&sub) } else { alpha.forward(&sub) }.map_err(|r| r.reason)?;
            if img.len() != sub.len() || img.iter().zip(&sub).any(|(a, b)| a.len() != b.len()) {
                return Err("applied permutation changed lengths".into());
            }
            for (&i, w) in fields.iter().zip(img) {
                u[i] = w;
            }
            if eval_val(index, u, env)? != n {
                return Err("applied permutation changed its index".into());
            }
            Ok(())
        }
    }
}

/// A program together with its inverse and environment.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub program: PermProgram,
    pub inverse: PermProgram,
    pub env: Arc<Env>,
}

impl Compiled {
    /// Fails with the unregistered sequence names.
    pub fn new(program: PermProgram, env: Arc<Env>) -> Result<Self, Vec<String>> {
        let missing = env.missing_names(&program.body);
        if !missing.is_empty() {
            return Err(missing);
        }
        let inverse = program.invert();
        Ok(Compiled { program, inverse, env })
    }

    fn run(&self, p: &PermProgram, u: &[Word], reverse_lines: bool) -> Result<Letter, LocalReject> {
        if u.len() != p.fields.len() {
            return Err(LocalReject::new(format!("letter has {} fields, program has {}", u.len(), p.fields.len())));
        }
        let mut w = u.to_vec();
        let lines = p.body.lines();
        for (j, line) in lines.iter().enumerate() {
            eval_perm(line, &mut w, &self.env).map_err(|reason| LocalReject {
                line: Some(if reverse_lines { lines.len() - j } else { j + 1 }),
                reason,
            })?;
        }
        Ok(w)
    }
}

impl Permutation for Compiled {
    fn forward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        self.run(&self.program, u, false)
    }

    fn backward(&self, u: &[Word]) -> Result<Letter, LocalReject> {
        self.run(&self.inverse, u, true)
    }
}

/// Evaluates a whole program once, without an inverse.
pub fn eval_program(p: &PermProgram, u: &[Word], env: &Env) -> Result<Letter, String> {
    if u.len() != p.fields.len() {
        return Err("field count mismatch".into());
    }
    let mut w = u.to_vec();
    eval_perm(&p.body, &mut w, env)?;
    Ok(w)
}
