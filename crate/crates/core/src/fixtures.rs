//! Reference systems used in tests, examples and the CLI test corpus.

use crate::model::{parse_system, SwitchedStructure};

/// Three states, two subsystems; only subsystem 1 has a nonzero input.
/// Structurally controllable although every weighted LTI reduction is not.
pub const THREE_STATE_JSON: &str = include_str!("../fixtures/three_state.json");

/// Two-mode boost converter pattern.
pub const BOOST_JSON: &str = include_str!("../fixtures/boost_converter.json");

/// A system with no nonzero entries at all.
pub const EMPTY_JSON: &str = include_str!("../fixtures/empty.json");

/// Ten states, two subsystems, no parallel edges, every state input-reachable.
/// Built by search so that grank `[A_1, A_2, B_1, B_2]` is 9, the generic
/// controllable dimension is 8, a generalized cactus covers
/// `{x1..x6, x9, x10}` and a single-subsystem cactus covers `{x1..x5, x9}`.
pub const TEN_STATE_JSON: &str = include_str!("../fixtures/ten_state.json");

pub fn three_state() -> SwitchedStructure {
    parse_system(THREE_STATE_JSON).expect("fixture parses")
}

pub fn boost_converter() -> SwitchedStructure {
    parse_system(BOOST_JSON).expect("fixture parses")
}

pub fn empty() -> SwitchedStructure {
    parse_system(EMPTY_JSON).expect("fixture parses")
}

pub fn ten_state() -> SwitchedStructure {
    parse_system(TEN_STATE_JSON).expect("fixture parses")
}
