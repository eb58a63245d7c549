//! Cooperative minimum-storage regenerating (MSR) array codes.
//!
//! The code stacks `d + h - k` copies of a Vandermonde parity-check array
//! code with node size `(d - k + 1)^n`. Any `h` failed nodes are rebuilt
//! from any `d` helpers in two rounds:
//!
//! 1. each failed node downloads `s^n` symbols from every helper and solves
//!    for part of itself plus one combination per other failed node;
//! 2. the failed nodes swap those combinations, `s^n` symbols per ordered
//!    pair, and finish.
//!
//! The total traffic, `h (d + h - 1) s^n` symbols, equals the cooperative
//! cut-set bound. [`bounds`] computes the bounds and meters transcripts;
//! [`cluster`] runs the protocol over metered in-process channels.

pub mod bounds;
pub mod cli;
pub mod cluster;
pub mod code;
pub mod error;
pub mod field;
pub mod io;
pub mod repair;

pub use code::{
    encode, mds_decode, parity_residual, CodeParams, Codeword, NodeVector, ParamOptions,
};
pub use error::{Error, Result};
pub use field::{Field, Symbol};
