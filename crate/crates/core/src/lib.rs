//! Exact local Whittaker newform values for GL(2) over unramified p-adic
//! fields, their p-adic valuations, and checkers for valuation lower bounds.

pub mod error;
pub mod util;
pub mod local_arith;
pub mod cyclo;
pub mod valuation;
pub mod characters;
pub mod gauss_eps;
pub mod reps;
pub mod whittaker;
pub mod bounds;
pub mod cli;
