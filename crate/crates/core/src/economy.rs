//! Economies, agents, arrival schedules and discounted payoffs.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::agents::{AgentIx, AgentSet, MAX_AGENTS};
use crate::error::{Error, Result};
use crate::matching::DynamicMatching;

/// Exact rational number used for every utility and discount factor.
pub type Rational = BigRational;

/// Build a rational from a numerator and a nonzero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Build an integral rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
        })
    }
}

/// Agent identity: a side and a name unique within the economy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId {
    pub side: Side,
    pub name: String,
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Value of a dynamic matching to one agent, discounted to some period.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Payoff(pub Rational);

impl Payoff {
    pub fn zero() -> Self {
        Payoff(Rational::zero())
    }

    /// Multiply by `delta^n`.
    pub fn discount(&self, delta: &Rational, n: usize) -> Payoff {
        Payoff(&self.0 * delta.clone().pow(n as u32))
    }
}

impl fmt::Display for Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Discount factors and utilities, indexed by agent declaration order.
///
/// `utility[k][j]` is what `k` gets from ending up with `j`; entries for
/// same-side agents other than `k` itself are never read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferenceProfile {
    delta: Vec<Rational>,
    utility: Vec<Vec<Rational>>,
}

impl PreferenceProfile {
    pub fn delta(&self, k: AgentIx) -> &Rational {
        &self.delta[k]
    }

    pub fn utility(&self, k: AgentIx, partner: AgentIx) -> &Rational {
        &self.utility[k][partner]
    }
}

/// A length-`T` economy: agents with arrival periods plus preferences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Economy {
    horizon: usize,
    agents: Vec<AgentId>,
    arrival: Vec<usize>,
    prefs: PreferenceProfile,
    index: HashMap<String, AgentIx>,
}

impl Economy {
    pub fn builder(horizon: usize) -> EconomyBuilder {
        EconomyBuilder::new(horizon)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn id(&self, k: AgentIx) -> &AgentId {
        &self.agents[k]
    }

    pub fn name(&self, k: AgentIx) -> &str {
        &self.agents[k].name
    }

    pub fn side(&self, k: AgentIx) -> Side {
        self.agents[k].side
    }

    pub fn arrival(&self, k: AgentIx) -> usize {
        self.arrival[k]
    }

    pub fn delta(&self, k: AgentIx) -> &Rational {
        self.prefs.delta(k)
    }

    /// `u(k, partner)` for side-A owners and `v(partner, k)` for side B.
    pub fn utility(&self, k: AgentIx, partner: AgentIx) -> &Rational {
        self.prefs.utility(k, partner)
    }

    pub fn prefs(&self) -> &PreferenceProfile {
        &self.prefs
    }

    pub fn index_of(&self, name: &str) -> Option<AgentIx> {
        self.index.get(name).copied()
    }

    pub fn agent_ix(&self, name: &str) -> Result<AgentIx> {
        self.index_of(name).ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    pub fn all(&self) -> AgentSet {
        (0..self.len()).collect()
    }

    pub fn side_set(&self, side: Side) -> AgentSet {
        (0..self.len()).filter(|&k| self.side(k) == side).collect()
    }

    /// Agents arriving exactly at `t`.
    pub fn arrivals(&self, t: usize) -> AgentSet {
        (0..self.len()).filter(|&k| self.arrival[k] == t).collect()
    }

    /// Agents arriving at or before `t`.
    pub fn arrived_by(&self, t: usize) -> AgentSet {
        (0..self.len()).filter(|&k| self.arrival[k] <= t).collect()
    }

    /// `delta_k^delay * u(k, partner)`, or zero when `partner` is `None`.
    pub fn discounted(&self, k: AgentIx, partner: Option<AgentIx>, delay: usize) -> Rational {
        match partner {
            None => Rational::zero(),
            Some(j) => self.delta(k).clone().pow(delay as u32) * self.utility(k, j),
        }
    }

    /// The sub-economy on `keep`, with arrivals shifted so that period
    /// `from` becomes period 1. Agents in `keep` arriving before `from` are
    /// placed at period 1; agents listed in `late` are placed at period 2.
    pub(crate) fn sub_economy(&self, keep: AgentSet, late: AgentSet, from: usize) -> Economy {
        let members: Vec<AgentIx> = keep.union(late).iter().collect();
        let horizon = self.horizon + 1 - from;
        let agents = members.iter().map(|&k| self.agents[k].clone()).collect();
        let arrival = members
            .iter()
            .map(|&k| {
                if late.contains(k) {
                    2
                } else {
                    self.arrival[k].max(from) + 1 - from
                }
            })
            .collect();
        let delta = members.iter().map(|&k| self.delta(k).clone()).collect();
        let utility = members
            .iter()
            .map(|&k| members.iter().map(|&j| self.utility(k, j).clone()).collect())
            .collect();
        Economy::from_parts(horizon, agents, arrival, PreferenceProfile { delta, utility })
    }

    fn from_parts(horizon: usize, agents: Vec<AgentId>, arrival: Vec<usize>, prefs: PreferenceProfile) -> Economy {
        let index = agents.iter().enumerate().map(|(k, a)| (a.name.clone(), k)).collect();
        Economy {
            horizon,
            agents,
            arrival,
            prefs,
            index,
        }
    }
}

/// Incremental constructor for [`Economy`].
///
/// Utilities not set explicitly default to `-1` for opposite-side partners.
#[derive(Clone, Debug)]
pub struct EconomyBuilder {
    horizon: usize,
    agents: Vec<(AgentId, usize, Rational)>,
    utilities: Vec<(String, String, Rational)>,
}

impl EconomyBuilder {
    pub fn new(horizon: usize) -> Self {
        EconomyBuilder {
            horizon,
            agents: Vec::new(),
            utilities: Vec::new(),
        }
    }

    pub fn agent(mut self, name: &str, side: Side, arrives: usize, delta: Rational) -> Self {
        self.add_agent(name, side, arrives, delta);
        self
    }

    pub fn utility(mut self, owner: &str, partner: &str, value: Rational) -> Self {
        self.set_utility(owner, partner, value);
        self
    }

    pub fn add_agent(&mut self, name: &str, side: Side, arrives: usize, delta: Rational) {
        let id = AgentId {
            side,
            name: name.to_string(),
        };
        self.agents.push((id, arrives, delta));
    }

    pub fn set_utility(&mut self, owner: &str, partner: &str, value: Rational) {
        self.utilities.push((owner.to_string(), partner.to_string(), value));
    }

    pub fn build(self) -> Result<Economy> {
        let invalid = |msg: String| Error::InvalidEconomy(msg);
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1".into()));
        }
        if self.agents.len() > MAX_AGENTS {
            return Err(invalid(format!("at most {MAX_AGENTS} agents are supported")));
        }
        let mut index = HashMap::new();
        for (k, (id, arrives, delta)) in self.agents.iter().enumerate() {
            if id.name.is_empty() {
                return Err(invalid("empty agent name".into()));
            }
            if index.insert(id.name.clone(), k).is_some() {
                return Err(invalid(format!("duplicate agent `{}`", id.name)));
            }
            if *arrives == 0 || *arrives > self.horizon {
                return Err(invalid(format!(
                    "agent `{}` arrives at {arrives}, outside 1..={}",
                    id.name, self.horizon
                )));
            }
            if delta.is_negative() || *delta > Rational::one() {
                return Err(invalid(format!("discount of `{}` outside [0, 1]", id.name)));
            }
        }
        let n = self.agents.len();
        let mut utility = vec![vec![-Rational::one(); n]; n];
        for (k, row) in utility.iter_mut().enumerate() {
            row[k] = Rational::zero();
        }
        for (owner, partner, value) in self.utilities {
            let k = *index.get(&owner).ok_or(Error::UnknownAgent(owner.clone()))?;
            let j = *index.get(&partner).ok_or(Error::UnknownAgent(partner.clone()))?;
            if self.agents[k].0.side == self.agents[j].0.side {
                return Err(invalid(format!("`{owner}` and `{partner}` are on the same side")));
            }
            utility[k][j] = value;
        }
        let (agents, arrival, delta) = self.agents.into_iter().fold(
            (Vec::new(), Vec::new(), Vec::new()),
            |(mut ids, mut arr, mut del), (id, a, d)| {
                ids.push(id);
                arr.push(a);
                del.push(d);
                (ids, arr, del)
            },
        );
        Ok(Economy::from_parts(
            self.horizon,
            agents,
            arrival,
            PreferenceProfile { delta, utility },
        ))
    }
}

fn check_available(econ: &Economy, m: &DynamicMatching, k: AgentIx, t: usize) -> Result<()> {
    if k >= econ.len() {
        return Err(Error::UnknownAgent(format!("#{k}")));
    }
    let matched_before = m.formation_of(k).is_some_and(|f| f.period < t);
    if matched_before || econ.arrival(k) > t {
        return Err(Error::NotAvailable {
            agent: econ.name(k).to_string(),
            period: t,
        });
    }
    Ok(())
}

/// First period `s >= t` at which `k` is matched under `m`, or `T` if never.
pub fn first_match_date(econ: &Economy, m: &DynamicMatching, k: AgentIx, t: usize) -> Result<usize> {
    check_available(econ, m, k, t)?;
    Ok(m.formation_of(k).map_or(econ.horizon(), |f| f.period))
}

/// `k`'s payoff from `m` evaluated at period `t`.
pub fn payoff(econ: &Economy, m: &DynamicMatching, k: AgentIx, t: usize) -> Result<Payoff> {
    let date = first_match_date(econ, m, k, t)?;
    Ok(Payoff(econ.discounted(k, m.final_partner(k), date - t)))
}

/// True iff nobody ends up with a partner worth less than staying single.
pub fn is_individually_rational(econ: &Economy, m: &DynamicMatching) -> bool {
    m.formations()
        .iter()
        .all(|f| !econ.utility(f.a, f.b).is_negative() && !econ.utility(f.b, f.a).is_negative())
}
