//! The rule library: the Turing machine embedding and the generators for
//! the self-simulating rules.

pub mod gamma_u;
pub mod library;
pub mod listings;
pub mod reductions;
