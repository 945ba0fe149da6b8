//! Concrete syntax: one statement per line, `if`/`elsif`/`endif` blocks,
//! `#` comments, and a leading `fields` header.
//!
//! ```text
//! fields Addr, Addr_+1:+1, Clock, Clock_+1:+1
//! check bina(Addr_+1) = bina(Addr) && bina(Clock_+1) = bina(Clock)
//! incr 4 -> Addr_+1
//! ```

use super::ast::*;
use crate::encoding::Word;
use thiserror::Error;

/// A syntax or reference error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i128),
    Word(Word),
    Index(usize),
    Punct(&'static str),
}

const PUNCTS: [&str; 22] = [
    "->", "!=", "<=", ">=", "&&", "||", "(", ")", "[", "]", ",", ";", ":", "=", "<", ">", "!", "+", "-", "*", "/", "%",
];

const KEYWORDS: [&str; 28] = [
    "fields", "check", "incr", "decr", "run", "unrun", "write", "unwrite", "exch", "apply", "unapply", "if", "elsif",
    "endif", "on", "true", "instates", "emp", "halt", "chi", "at", "cat", "bin", "bina", "len", "num", "off", "own",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn lex(line_no: usize, src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: &str| ParseError { line: line_no, col: col + 1, msg: msg.to_string() };
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            // Suffixes such as `_+1`, `_-1` or `_x`.
            while i < chars.len() && chars[i] == '_' {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                let body = j;
                while j < chars.len() && chars[j].is_ascii_alphanumeric() {
                    j += 1;
                }
                if j == body {
                    return Err(err(i, "malformed identifier suffix"));
                }
                i = j;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse::<i128>().map_err(|_| err(start, "integer out of range"))?;
            out.push((Tok::Int(n), start));
        } else if c == '\'' {
            i += 1;
            let mut w = Word::new();
            while i < chars.len() && chars[i] != '\'' {
                match chars[i].to_digit(10) {
                    Some(d) if d <= 4 => w.push(d as u8),
                    _ => return Err(err(i, "word symbols must be digits 0..4")),
                }
                i += 1;
            }
            if i == chars.len() {
                return Err(err(start, "unterminated word"));
            }
            i += 1;
            out.push((Tok::Word(w), start));
        } else if c == '$' {
            i += 1;
            let b = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if b == i {
                return Err(err(start, "expected field number after $"));
            }
            let s: String = chars[b..i].iter().collect();
            let n = s.parse::<usize>().map_err(|_| err(start, "field number out of range"))?;
            out.push((Tok::Index(n), start));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let p = PUNCTS.iter().find(|p| rest.starts_with(*p)).ok_or_else(|| err(i, "unexpected character"))?;
            i += p.len();
            out.push((Tok::Punct(p), start));
            continue;
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    fields: &'a [FieldDecl],
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let col = self.toks.get(self.pos).map(|t| t.1 + 1).unwrap_or_else(|| self.toks.last().map_or(1, |t| t.1 + 2));
        Err(ParseError { line: self.line, col, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{k}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn int(&mut self) -> PResult<i128> {
        let neg = self.eat_punct("-");
        if !neg {
            self.eat_punct("+");
        }
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => self.err("expected integer"),
        }
    }

    fn end(&self) -> PResult<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            self.err("unexpected trailing tokens")
        }
    }

    fn is_field_label(&self, s: &str) -> bool {
        self.fields.iter().any(|f| f.label == s)
    }

    fn field(&mut self) -> PResult<usize> {
        match self.peek().cloned() {
            Some(Tok::Index(n)) => {
                self.pos += 1;
                Ok(n)
            }
            Some(Tok::Ident(s)) => match self.fields.iter().position(|f| f.label == s) {
                Some(i) => {
                    self.pos += 1;
                    Ok(i)
                }
                None => self.err(format!("unknown field label `{s}`")),
            },
            _ => self.err("expected field"),
        }
    }

    fn field_list(&mut self) -> PResult<Vec<usize>> {
        let mut out = vec![self.field()?];
        while self.eat_punct(",") {
            out.push(self.field()?);
        }
        Ok(out)
    }

    fn term_start(&self) -> bool {
        match self.peek() {
            Some(Tok::Word(_)) | Some(Tok::Index(_)) => true,
            Some(Tok::Ident(s)) => {
                matches!(s.as_str(), "chi" | "at" | "cat" | "bin")
                    || (self.is_field_label(s) && !matches!(self.peek_at(1), Some(Tok::Punct("["))))
            }
            _ => false,
        }
    }

    fn term_args(&mut self) -> PResult<Vec<Term>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if self.eat_punct(")") {
            return Ok(out);
        }
        out.push(self.term()?);
        while self.eat_punct(",") {
            out.push(self.term()?);
        }
        self.expect_punct(")")?;
        Ok(out)
    }

    fn term(&mut self) -> PResult<Term> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) => {
                self.pos += 1;
                Ok(Term::Const(w))
            }
            Some(Tok::Index(_)) => Ok(Term::Field(self.field()?)),
            Some(Tok::Ident(s)) => match s.as_str() {
                "chi" => {
                    self.pos += 1;
                    Ok(Term::Chi(self.term_args()?))
                }
                "cat" => {
                    self.pos += 1;
                    Ok(Term::Cat(self.term_args()?))
                }
                "at" => {
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let t = self.term()?;
                    self.expect_punct(",")?;
                    let v = self.val()?;
                    self.expect_punct(")")?;
                    Ok(Term::At(Box::new(t), Box::new(v)))
                }
                "bin" => {
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let v = self.val()?;
                    self.expect_punct(")")?;
                    Ok(Term::Bin(Box::new(v)))
                }
                _ => Ok(Term::Field(self.field()?)),
            },
            _ => self.err("expected term"),
        }
    }

    fn val(&mut self) -> PResult<Val> {
        let mut lhs = self.val_mul()?;
        loop {
            let op = if self.eat_punct("+") {
                ArithOp::Add
            } else if self.eat_punct("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.val_mul()?;
            lhs = Val::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn val_mul(&mut self) -> PResult<Val> {
        let mut lhs = self.val_atom()?;
        loop {
            let op = if self.eat_punct("*") {
                ArithOp::Mul
            } else if self.eat_punct("/") {
                ArithOp::Div
            } else if self.eat_punct("%") {
                ArithOp::Mod
            } else {
                return Ok(lhs);
            };
            let rhs = self.val_atom()?;
            lhs = Val::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term_arg(&mut self) -> PResult<Term> {
        self.expect_punct("(")?;
        let t = self.term()?;
        self.expect_punct(")")?;
        Ok(t)
    }

    fn val_atom(&mut self) -> PResult<Val> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Val::Const(n))
            }
            Some(Tok::Punct("-")) => {
                self.pos += 1;
                let v = self.val_atom()?;
                Ok(match v {
                    Val::Const(n) => Val::Const(-n),
                    v => Val::Arith(ArithOp::Sub, Box::new(Val::Const(0)), Box::new(v)),
                })
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let v = self.val()?;
                self.expect_punct(")")?;
                Ok(v)
            }
            Some(Tok::Ident(s)) => match s.as_str() {
                "bina" => {
                    self.pos += 1;
                    Ok(Val::Bina(Box::new(self.term_arg()?)))
                }
                "len" => {
                    self.pos += 1;
                    Ok(Val::Len(Box::new(self.term_arg()?)))
                }
                "num" => {
                    self.pos += 1;
                    Ok(Val::Num(Box::new(self.term_arg()?)))
                }
                "off" => {
                    self.pos += 1;
                    self.expect_punct("(")?;
                    let k = self.kvec()?;
                    self.expect_punct(",")?;
                    let i = self.val()?;
                    self.expect_punct(")")?;
                    Ok(Val::Offset { k, i: Box::new(i) })
                }
                _ if KEYWORDS.contains(&s.as_str()) || self.is_field_label(&s) => self.err("expected valuation"),
                _ if !matches!(self.peek_at(1), Some(Tok::Punct("["))) => {
                    self.err(format!("unknown field label `{s}`"))
                }
                _ => {
                    self.pos += 1;
                    self.expect_punct("[")?;
                    let i = self.val()?;
                    self.expect_punct("]")?;
                    Ok(Val::SeqAt(s, Box::new(i)))
                }
            },
            _ => self.err("expected valuation"),
        }
    }

    fn kvec(&mut self) -> PResult<KVec> {
        if self.eat_punct("[") {
            let mut out = Vec::new();
            if !self.eat_punct("]") {
                out.push(self.val()?);
                while self.eat_punct(",") {
                    out.push(self.val()?);
                }
                self.expect_punct("]")?;
            }
            return Ok(KVec::Explicit(out));
        }
        if self.is_kw("own") {
            self.pos += 1;
            self.expect_punct("(")?;
            let m = self.int()?;
            self.expect_punct(")")?;
            return usize::try_from(m).map(KVec::OwnLengths).or_else(|_| self.err("negative field count"));
        }
        let name = self.ident()?;
        self.expect_punct("[")?;
        let i = self.val()?;
        self.expect_punct("]")?;
        Ok(KVec::Seq(name, Box::new(i)))
    }

    fn cmp_op(&mut self) -> PResult<CmpOp> {
        let op = match self.peek() {
            Some(Tok::Punct("=")) => CmpOp::Eq,
            Some(Tok::Punct("!=")) => CmpOp::Ne,
            Some(Tok::Punct("<")) => CmpOp::Lt,
            Some(Tok::Punct("<=")) => CmpOp::Le,
            Some(Tok::Punct(">")) => CmpOp::Gt,
            Some(Tok::Punct(">=")) => CmpOp::Ge,
            _ => return self.err("expected comparison operator"),
        };
        self.pos += 1;
        Ok(op)
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_and()?;
        while self.eat_punct("||") {
            let rhs = self.cond_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<Cond> {
        let mut lhs = self.cond_atom()?;
        while self.eat_punct("&&") {
            let rhs = self.cond_atom()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> PResult<Cond> {
        if self.term_start() {
            let a = self.term()?;
            let op = self.cmp_op()?;
            let b = self.term()?;
            return match op {
                CmpOp::Eq => Ok(Cond::TermEq(a, b)),
                CmpOp::Ne => Ok(Cond::Not(Box::new(Cond::TermEq(a, b)))),
                _ => self.err("terms only compare with `=` or `!=`"),
            };
        }
        let a = self.val()?;
        let op = self.cmp_op()?;
        let b = self.val()?;
        Ok(Cond::Cmp(op, a, b))
    }

    fn cond_atom(&mut self) -> PResult<Cond> {
        if self.eat_punct("!") {
            return Ok(Cond::Not(Box::new(self.cond_atom()?)));
        }
        if self.is_kw("true") {
            self.pos += 1;
            return Ok(Cond::True);
        }
        if self.is_kw("instates") {
            self.pos += 1;
            self.expect_punct("(")?;
            let t = self.term()?;
            self.expect_punct(",")?;
            let p = self.term()?;
            self.expect_punct(")")?;
            return Ok(Cond::InStates(t, p));
        }
        if self.is_kw("emp") {
            self.pos += 1;
            self.expect_punct("(")?;
            let t = self.term()?;
            self.expect_punct(";")?;
            let fs = self.field_list()?;
            self.expect_punct(")")?;
            return Ok(Cond::Emp(t, fs));
        }
        if self.is_kw("halt") {
            self.pos += 1;
            self.expect_punct("(")?;
            let p = self.term()?;
            self.expect_punct(",")?;
            let v = self.val()?;
            self.expect_punct(",")?;
            let t = self.term()?;
            self.expect_punct(")")?;
            return Ok(Cond::Halt(p, v, t));
        }
        if self.is_punct("(") {
            let save = self.pos;
            if let Ok(c) = self.comparison() {
                return Ok(c);
            }
            self.pos = save;
            self.pos += 1;
            let c = self.cond()?;
            self.expect_punct(")")?;
            return Ok(c);
        }
        self.comparison()
    }
}

fn parse_header(line_no: usize, toks: Vec<(Tok, usize)>) -> PResult<Vec<FieldDecl>> {
    let mut c = Cursor { toks, pos: 0, line: line_no, fields: &[] };
    c.expect_kw("fields")?;
    let mut out: Vec<FieldDecl> = Vec::new();
    if c.pos == c.toks.len() {
        return Ok(out);
    }
    loop {
        let label = c.ident()?;
        if KEYWORDS.contains(&label.as_str()) {
            c.pos -= 1;
            return c.err(format!("`{label}` is a keyword"));
        }
        if out.iter().any(|f| f.label == label) {
            c.pos -= 1;
            return c.err(format!("duplicate field label `{label}`"));
        }
        let dir = if c.eat_punct(":") {
            let d = c.int()?;
            if !(-1..=1).contains(&d) {
                c.pos -= 1;
                return c.err("direction must be -1, 0 or +1");
            }
            d as i8
        } else {
            0
        };
        out.push(FieldDecl { label, dir });
        if !c.eat_punct(",") {
            break;
        }
    }
    c.end()?;
    Ok(out)
}

enum Frame {
    Top(Vec<Perm>),
    /// Guards seen so far in the chain, and the open branch body.
    Chain {
        guards: Vec<Cond>,
        body: Vec<Perm>,
        done: Vec<Perm>,
        line: usize,
    },
}

fn chain_guard(guards: &[Cond]) -> Cond {
    let (last, prev) = guards.split_last().expect("nonempty chain");
    prev.iter().fold(last.clone(), |acc, g| Cond::And(Box::new(acc), Box::new(Cond::Not(Box::new(g.clone())))))
}

fn push(stack: &mut [Frame], p: Perm) {
    match stack.last_mut().expect("stack never empty") {
        Frame::Top(v) => v.push(p),
        Frame::Chain { body, .. } => body.push(p),
    }
}

/// Parses a program.
pub fn parse(src: &str) -> Result<PermProgram, ParseError> {
    let mut fields: Option<Vec<FieldDecl>> = None;
    let mut stack = vec![Frame::Top(Vec::new())];
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(line_no, raw)?;
        if toks.is_empty() {
            continue;
        }
        let Some(decls) = &fields else {
            fields = Some(parse_header(line_no, toks)?);
            continue;
        };
        let mut c = Cursor { toks, pos: 0, line: line_no, fields: decls };
        let kw = match c.peek() {
            Some(Tok::Ident(s)) => s.clone(),
            _ => return c.err("expected statement"),
        };
        c.pos += 1;
        match kw.as_str() {
            "check" => {
                let q = c.cond()?;
                c.end()?;
                push(&mut stack, Perm::Check(q));
            }
            "incr" | "decr" => {
                let v = c.val()?;
                c.expect_punct("->")?;
                let f = c.field()?;
                c.end()?;
                push(&mut stack, Perm::Incr { modulus: v, field: f, decrement: kw == "decr" });
            }
            "run" | "unrun" => {
                let prog = c.term()?;
                c.expect_kw("on")?;
                let fs = c.field_list()?;
                if fs.len() != 3 {
                    return c.err("run takes Tape, Head_-1, Head_+1");
                }
                c.end()?;
                push(&mut stack, Perm::RunTm { prog, tape: fs[0], hm: fs[1], hp: fs[2], inverse: kw == "unrun" });
            }
            "write" | "unwrite" => {
                let t = c.term()?;
                c.expect_punct("->")?;
                let f = c.field()?;
                c.end()?;
                push(&mut stack, Perm::Write { term: t, field: f, inverse: kw == "unwrite" });
            }
            "exch" => {
                let a = c.field()?;
                c.expect_punct(",")?;
                let b = c.field()?;
                c.end()?;
                push(&mut stack, Perm::Exch(a, b));
            }
            "apply" | "unapply" => {
                let name = c.ident()?;
                c.expect_punct("[")?;
                let index = c.val()?;
                c.expect_punct("]")?;
                c.expect_kw("on")?;
                let fs = c.field_list()?;
                c.end()?;
                push(&mut stack, Perm::Apply { name, index, fields: fs, inverse: kw == "unapply" });
            }
            "if" => {
                let q = c.cond()?;
                c.end()?;
                stack.push(Frame::Chain { guards: vec![q], body: Vec::new(), done: Vec::new(), line: line_no });
            }
            "elsif" => {
                let q = c.cond()?;
                c.end()?;
                match stack.last_mut() {
                    Some(Frame::Chain { guards, body, done, .. }) => {
                        done.push(Perm::If(chain_guard(guards), Box::new(Perm::Seq(std::mem::take(body)))));
                        guards.push(q);
                    }
                    _ => return Err(ParseError { line: line_no, col: 1, msg: "elsif without if".into() }),
                }
            }
            "endif" => {
                c.end()?;
                match stack.pop() {
                    Some(Frame::Chain { guards, body, mut done, .. }) => {
                        done.push(Perm::If(chain_guard(&guards), Box::new(Perm::Seq(body))));
                        for p in done {
                            push(&mut stack, p);
                        }
                    }
                    _ => return Err(ParseError { line: line_no, col: 1, msg: "endif without if".into() }),
                }
            }
            other => {
                c.pos -= 1;
                return c.err(format!("unknown statement `{other}`"));
            }
        }
    }
    if stack.len() > 1 {
        if let Some(Frame::Chain { line, .. }) = stack.last() {
            return Err(ParseError { line: *line, col: 1, msg: "unterminated if block".into() });
        }
    }
    let Some(fields) = fields else {
        return Err(ParseError { line: 1, col: 1, msg: "missing fields header".into() });
    };
    match stack.pop() {
        Some(Frame::Top(body)) => Ok(PermProgram { fields, body: Perm::Seq(body) }),
        _ => unreachable!("only the top frame remains"),
    }
}
