//! Test-driven repair of defects that can be fixed by negating a single
//! predicate at selected executions.
//!
//! The pipeline: run the failing tests while negating each comparison site
//! according to a fixed set of execution patterns ([`search`]), record program
//! state at the site and label it negate/keep ([`features`]), learn when to
//! negate with a decision tree ([`dtree`]), and turn the tree into a source
//! guard `cond ^ (DNF)` ([`synth`]).
//!
//! The crate is `no_std` (it needs `alloc`); file IO and the command line live
//! in the companion `flipfix` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dtree;
pub mod features;
pub mod interp;
pub mod minilang;
pub mod patterns;
pub mod search;
pub mod synth;
pub mod value;

pub use value::Value;
