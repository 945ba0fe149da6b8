//! Pretty printer producing source accepted by [`super::parse::parse`].

use super::ast::*;
use std::fmt::Write as _;

fn word(w: &[u8]) -> String {
    format!("'{}'", w.iter().map(|d| char::from(b'0' + d)).collect::<String>())
}

struct Printer<'a> {
    fields: &'a [FieldDecl],
    out: String,
}

impl Printer<'_> {
    fn field(&self, i: usize) -> String {
        match self.fields.get(i) {
            Some(f) => f.label.clone(),
            None => format!("${i}"),
        }
    }

    fn fields(&self, fs: &[usize]) -> String {
        fs.iter().map(|&i| self.field(i)).collect::<Vec<_>>().join(", ")
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Const(w) => word(w),
            Term::Field(i) => self.field(*i),
            Term::Chi(ts) => format!("chi({})", self.terms(ts)),
            Term::Cat(ts) => format!("cat({})", self.terms(ts)),
            Term::At(t, v) => format!("at({}, {})", self.term(t), self.val(v)),
            Term::Bin(v) => format!("bin({})", self.val(v)),
        }
    }

    fn terms(&self, ts: &[Term]) -> String {
        ts.iter().map(|t| self.term(t)).collect::<Vec<_>>().join(", ")
    }

    fn val(&self, v: &Val) -> String {
        match v {
            Val::Const(n) if *n < 0 => format!("({n})"),
            Val::Const(n) => n.to_string(),
            Val::Bina(t) => format!("bina({})", self.term(t)),
            Val::Len(t) => format!("len({})", self.term(t)),
            Val::Num(t) => format!("num({})", self.term(t)),
            Val::Offset { k, i } => format!("off({}, {})", self.kvec(k), self.val(i)),
            Val::SeqAt(name, i) => format!("{name}[{}]", self.val(i)),
            Val::Arith(op, a, b) => {
                let o = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Div => "/",
                    ArithOp::Mod => "%",
                };
                format!("({} {o} {})", self.val(a), self.val(b))
            }
        }
    }

    fn kvec(&self, k: &KVec) -> String {
        match k {
            KVec::Explicit(vs) => format!("[{}]", vs.iter().map(|v| self.val(v)).collect::<Vec<_>>().join(", ")),
            KVec::OwnLengths(m) => format!("own({m})"),
            KVec::Seq(name, i) => format!("{name}[{}]", self.val(i)),
        }
    }

    fn cond(&self, q: &Cond) -> String {
        match q {
            Cond::True => "true".into(),
            Cond::Cmp(op, a, b) => {
                let o = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Ne => "!=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                format!("{} {o} {}", self.val(a), self.val(b))
            }
            Cond::TermEq(a, b) => format!("{} = {}", self.term(a), self.term(b)),
            Cond::InStates(t, p) => format!("instates({}, {})", self.term(t), self.term(p)),
            Cond::Emp(t, fs) => format!("emp({}; {})", self.term(t), self.fields(fs)),
            Cond::Halt(p, v, t) => {
                format!("halt({}, {}, {})", self.term(p), self.val(v), self.term(t))
            }
            Cond::And(a, b) => format!("({} && {})", self.cond(a), self.cond(b)),
            Cond::Or(a, b) => format!("({} || {})", self.cond(a), self.cond(b)),
            Cond::Not(a) => format!("!({})", self.cond(a)),
        }
    }

    fn line(&mut self, depth: usize, s: &str) {
        let _ = writeln!(self.out, "{}{s}", "  ".repeat(depth));
    }

    fn perm(&mut self, depth: usize, p: &Perm) {
        match p {
            Perm::Check(q) => {
                let s = format!("check {}", self.cond(q));
                self.line(depth, &s);
            }
            Perm::Incr { modulus, field, decrement } => {
                let kw = if *decrement { "decr" } else { "incr" };
                let s = format!("{kw} {} -> {}", self.val(modulus), self.field(*field));
                self.line(depth, &s);
            }
            Perm::RunTm { prog, tape, hm, hp, inverse } => {
                let kw = if *inverse { "unrun" } else { "run" };
                let s = format!("{kw} {} on {}", self.term(prog), self.fields(&[*tape, *hm, *hp]));
                self.line(depth, &s);
            }
            Perm::Write { term, field, inverse } => {
                let kw = if *inverse { "unwrite" } else { "write" };
                let s = format!("{kw} {} -> {}", self.term(term), self.field(*field));
                self.line(depth, &s);
            }
            Perm::Exch(a, b) => {
                let s = format!("exch {}, {}", self.field(*a), self.field(*b));
                self.line(depth, &s);
            }
            Perm::Apply { name, index, fields, inverse } => {
                let kw = if *inverse { "unapply" } else { "apply" };
                let s = format!("{kw} {name}[{}] on {}", self.val(index), self.fields(fields));
                self.line(depth, &s);
            }
            Perm::If(q, body) => {
                let s = format!("if {}", self.cond(q));
                self.line(depth, &s);
                for p in body.lines() {
                    self.perm(depth + 1, p);
                }
                self.line(depth, "endif");
            }
            Perm::Seq(ps) => {
                for p in ps {
                    self.perm(depth, p);
                }
            }
        }
    }
}

/// Renders a program as source text.
pub fn print(p: &PermProgram) -> String {
    let mut pr = Printer { fields: &p.fields, out: String::new() };
    let header: Vec<String> = p
        .fields
        .iter()
        .map(|f| match f.dir {
            0 => f.label.clone(),
            1 => format!("{}:+1", f.label),
            d => format!("{}:{d}", f.label),
        })
        .collect();
    pr.out.push_str(&format!("fields {}\n", header.join(", ")));
    pr.perm(0, &p.body);
    pr.out
}
