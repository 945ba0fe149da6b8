//! Reversible partial partition automata and the machinery for
//! hierarchical self-simulation: symbol encodings, a Turing machine
//! model and its reversible cellular embedding, a permutation language,
//! a rule library, simulation verification, parameter solving and
//! expansive-direction arithmetic.

pub mod directions;
pub mod encoding;
pub mod params;
pub mod permlang;
pub mod ppa;
pub mod rules;
pub mod simulation;
pub mod suites;
pub mod turing;
