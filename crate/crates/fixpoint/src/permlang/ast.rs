//! Abstract syntax of permutation programs and syntactic inversion.

use crate::encoding::Word;

/// A word-valued term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// A constant word.
    Const(Word),
    /// The raw content of a field, padding included.
    Field(usize),
    /// `Chi(t₁, …, t_m)`.
    Chi(Vec<Term>),
    /// The symbol of `t` at 0-based index `v`, or `ε` out of range.
    At(Box<Term>, Box<Val>),
    /// Concatenation.
    Cat(Vec<Term>),
    /// `bin(v)`.
    Bin(Box<Val>),
}

/// Layout vectors usable in offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KVec {
    Explicit(Vec<Val>),
    /// Lengths of the first `m` fields of the current letter.
    OwnLengths(usize),
    /// A registered layout sequence at an index.
    Seq(String, Box<Val>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

/// An integer-valued valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Const(i128),
    /// `bina(t)`, the binary value of the stripped term.
    Bina(Box<Term>),
    /// Raw length.
    Len(Box<Term>),
    /// `num(t)`, the base-5 value of the stripped term.
    Num(Box<Term>),
    /// Layout offset `l_{k,i}`.
    Offset {
        k: KVec,
        i: Box<Val>,
    },
    /// A registered integer sequence at an index.
    SeqAt(String, Box<Val>),
    Arith(ArithOp, Box<Val>, Box<Val>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, a: i128, b: i128) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

/// A boolean condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    True,
    Cmp(CmpOp, Val, Val),
    /// Equality of raw terms.
    TermEq(Term, Term),
    /// The stripped term is a live state of the program term.
    InStates(Term, Term),
    /// Every listed field strips to the stripped term.
    Emp(Term, Vec<usize>),
    /// The program neither accepts nor rejects within `v` steps on `Chi(t)`.
    Halt(Term, Val, Term),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

/// A permutation statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Perm {
    Check(Cond),
    /// Adds one modulo `modulus` to a field, or subtracts with `decrement`.
    Incr {
        modulus: Val,
        field: usize,
        decrement: bool,
    },
    /// One `γ_U` step (or its inverse) of the program term on three fields.
    RunTm {
        prog: Term,
        tape: usize,
        hm: usize,
        hp: usize,
        inverse: bool,
    },
    /// Writes `t` into an empty field, or empties a field holding `t`.
    Write {
        term: Term,
        field: usize,
        inverse: bool,
    },
    Exch(usize, usize),
    If(Cond, Box<Perm>),
    Seq(Vec<Perm>),
    /// A registered permutation sequence member applied to some fields.
    Apply {
        name: String,
        index: Val,
        fields: Vec<usize>,
        inverse: bool,
    },
}

/// A field declaration: label and motion direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub label: String,
    pub dir: i8,
}

/// A complete program: field table and body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermProgram {
    pub fields: Vec<FieldDecl>,
    pub body: Perm,
}

impl Perm {
    /// The syntactic inverse.
    pub fn invert(&self) -> Perm {
        match self {
            Perm::Check(_) | Perm::Exch(..) => self.clone(),
            Perm::Incr { modulus, field, decrement } => {
                Perm::Incr { modulus: modulus.clone(), field: *field, decrement: !decrement }
            }
            Perm::RunTm { prog, tape, hm, hp, inverse } => {
                Perm::RunTm { prog: prog.clone(), tape: *tape, hm: *hm, hp: *hp, inverse: !inverse }
            }
            Perm::Write { term, field, inverse } => {
                Perm::Write { term: term.clone(), field: *field, inverse: !inverse }
            }
            Perm::If(q, a) => Perm::If(q.clone(), Box::new(a.invert())),
            Perm::Seq(ps) => Perm::Seq(ps.iter().rev().map(Perm::invert).collect()),
            Perm::Apply { name, index, fields, inverse } => {
                Perm::Apply { name: name.clone(), index: index.clone(), fields: fields.clone(), inverse: !inverse }
            }
        }
    }

    /// Top-level lines: members of a sequence, or the node itself.
    pub fn lines(&self) -> &[Perm] {
        match self {
            Perm::Seq(ps) => ps,
            other => std::slice::from_ref(other),
        }
    }
}

impl PermProgram {
    pub fn invert(&self) -> PermProgram {
        PermProgram { fields: self.fields.clone(), body: self.body.invert() }
    }

    pub fn directions(&self) -> Vec<i8> {
        self.fields.iter().map(|f| f.dir).collect()
    }

    pub fn field_index(&self, label: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.label == label)
    }
}
