//! Structural controllability of switched linear systems.
//!
//! Given only the zero/nonzero patterns of the subsystem pairs `(A_i, B_i)`,
//! this crate decides whether some realization is controllable and produces
//! checkable evidence:
//!
//! * input reachability and maximum S-disjoint edge sets on the colored
//!   union graph ([`unigraph`]);
//! * generalized stem/bud (cactus) certificates and a lower bound on the
//!   generic controllable-subspace dimension ([`cactus`]);
//! * the multi-layer dynamic graph and maximum linkings, which bound the
//!   same dimension from above ([`mdg`]);
//! * a randomized finite-field oracle for the dimension itself ([`rankcore`]).
//!
//! [`checker::check`] combines all of them into a [`checker::Verdict`].

pub mod cactus;
pub mod checker;
pub mod dot;
pub mod field;
pub mod fixtures;
pub mod flow;
pub mod matching;
pub mod mdg;
pub mod model;
pub mod random;
pub mod rankcore;
pub mod unigraph;

pub use model::{parse_system, sample_realization, FieldTag, Realization, StructuredMatrix, SwitchedStructure};
