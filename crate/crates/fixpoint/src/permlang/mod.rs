//! A small language of reversible letter permutations: syntax, parser,
//! printer, reversible interpreter and a compiler to Turing machines.

pub mod ast;
pub mod compile;
pub mod eval;
pub mod parse;
pub mod print;

pub use ast::{Cond, FieldDecl, Perm, PermProgram, Term, Val};
pub use compile::{compile_to_tm, measure_program, CompileError, CompiledTm, Measurement};
pub use eval::{eval_program, Compiled, Env};
pub use parse::{parse, ParseError};
pub use print::print;

#[cfg(test)]
mod tests;
