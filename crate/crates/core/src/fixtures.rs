//! Bundled example economies and the matchings discussed with them.

use crate::dsl::{parse, OrdinalBlock};
use crate::economy::Economy;

pub const EXAMPLE1_TEXT: &str = include_str!("../fixtures/example1.econ");
pub const EXAMPLE2_TEXT: &str = include_str!("../fixtures/example2.econ");
pub const EMPTY_TEXT: &str = include_str!("../fixtures/empty.econ");

/// Parses a bundled fixture; the texts are fixed, so failure is a bug.
fn load(text: &str) -> (Economy, Vec<OrdinalBlock>) {
    parse(text).expect("bundled fixture parses")
}

pub fn example1() -> Economy {
    load(EXAMPLE1_TEXT).0
}

pub fn example2() -> Economy {
    load(EXAMPLE2_TEXT).0
}

pub fn empty() -> Economy {
    load(EMPTY_TEXT).0
}

/// Matchings of the first example.
pub mod ex1 {
    /// The rational expectations solution that fails consistency.
    pub const M_STAR: &str = "t=1: a1-b1 a2-b2 | t=2: a3-b3 a4-b4";
    /// Solution of the market where a2 arrives late.
    pub const M_A2: &str = "t=1: a1-b1 | t=2: a2-b2 a3-b3 a4-b4";
    /// Solution of the market where b1 arrives late.
    pub const M_B1: &str = "t=1: a3-b2 | t=2: a1-b1 a2-b4 a4-b3";
    /// Nobody matches early; the static stable matching follows.
    pub const M_EMPTY: &str = "t=1: | t=2: a1-b2 a2-b4 a3-b3 a4-b1";
    /// The unique stable matching of all eight agents at once.
    pub const STATIC_STABLE: &str = "a1-b2 a2-b4 a3-b3 a4-b1";
    pub const DA_WITHOUT_A1: &str = "a2-b4 a3-b3 a4-b1";
    pub const DA_WITHOUT_A2: &str = "a1-b4 a3-b3 a4-b1";
}

/// Matchings of the second example.
pub mod ex2 {
    /// Dynamically stable, but not under the CVR refinement.
    pub const M_L: &str = "t=1: a2-b2 | t=2: a1-b3 a3-b1 a4-b4";
    /// What a2 fears under plain dynamic stability.
    pub const M_C: &str = "t=1: a1-b1 | t=2: a2-b2 a3-b4 a4-b3";
    /// CVR-dynamically stable.
    pub const M_R: &str = "t=1: | t=2: a1-b3 a2-b4 a3-b1 a4-b2";
}
