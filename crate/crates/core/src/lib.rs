//! Numerical toolkit for exponential sums over powers modulo primes and the
//! large-sieve style statistics built from them.

pub mod arith;
pub mod chirp;
pub mod digits;
pub mod equidist;
pub mod error;
pub mod expsum;
pub mod generators;
pub mod primes;
pub mod report;
pub mod stats;

pub use error::{Error, Result};
