//! Compact agent sets.
//!
//! Agents are addressed by their declaration index, so an economy holds at
//! most [`MAX_AGENTS`] agents and a set fits in one machine word.

use std::fmt;

/// Upper bound on the number of agents in one economy.
pub const MAX_AGENTS: usize = 64;

/// Index of an agent in declaration order.
pub type AgentIx = usize;

/// A set of agent indices backed by a `u64` bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentSet(u64);

impl AgentSet {
    pub const EMPTY: AgentSet = AgentSet(0);

    pub fn from_bits(bits: u64) -> Self {
        AgentSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(k: AgentIx) -> Self {
        AgentSet(1 << k)
    }

    pub fn contains(self, k: AgentIx) -> bool {
        k < MAX_AGENTS && self.0 & (1 << k) != 0
    }

    pub fn with(self, k: AgentIx) -> Self {
        AgentSet(self.0 | (1 << k))
    }

    pub fn without(self, k: AgentIx) -> Self {
        AgentSet(self.0 & !(1 << k))
    }

    pub fn union(self, other: AgentSet) -> Self {
        AgentSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AgentSet) -> Self {
        AgentSet(self.0 & other.0)
    }

    pub fn minus(self, other: AgentSet) -> Self {
        AgentSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AgentSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = AgentIx> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(k)
        })
    }

    pub fn to_vec(self) -> Vec<AgentIx> {
        self.iter().collect()
    }
}

impl FromIterator<AgentIx> for AgentSet {
    fn from_iter<I: IntoIterator<Item = AgentIx>>(iter: I) -> Self {
        iter.into_iter().fold(AgentSet::EMPTY, AgentSet::with)
    }
}

impl fmt::Debug for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
