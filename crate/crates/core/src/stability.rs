//! One-period markets: stability, deferred acceptance, and the static
//! economies induced by conjectures.

use std::collections::VecDeque;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::agents::{AgentIx, AgentSet};
use crate::economy::{payoff, Economy, Rational, Side};
use crate::error::{Error, Result};
use crate::framework::ConjectureSet;
use crate::matching::{available_agents, period_pairings, History};

/// What an agent left with an empty conjecture set is assumed to require.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyPolicy {
    /// No requirement at all: the agent accepts anything.
    #[default]
    Vacuous,
    /// The requirement can never be met.
    Strict,
}

impl EmptyPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            EmptyPolicy::Vacuous => "vacuous",
            EmptyPolicy::Strict => "strict",
        }
    }
}

/// Reservation value of an agent in a one-period market.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Threshold {
    /// Below every utility.
    Unbounded,
    AtLeast(Rational),
    /// Above every utility.
    Unreachable,
}

impl Threshold {
    pub fn zero() -> Self {
        Threshold::AtLeast(Rational::zero())
    }

    pub fn empty(policy: EmptyPolicy) -> Self {
        match policy {
            EmptyPolicy::Vacuous => Threshold::Unbounded,
            EmptyPolicy::Strict => Threshold::Unreachable,
        }
    }

    /// Weak acceptability: `value >= self`.
    pub fn admits(&self, value: &Rational) -> bool {
        match self {
            Threshold::Unbounded => true,
            Threshold::AtLeast(r) => value >= r,
            Threshold::Unreachable => false,
        }
    }

    /// Strict improvement over staying single: `value > self`.
    pub fn is_beaten_by(&self, value: &Rational) -> bool {
        match self {
            Threshold::Unbounded => true,
            Threshold::AtLeast(r) => value > r,
            Threshold::Unreachable => false,
        }
    }
}

/// A one-period matching as `(a, b)` pairs sorted by the side-A agent.
pub type StaticMatching = Vec<(AgentIx, AgentIx)>;

/// A one-period market over a subset of an economy's agents.
///
/// Agents keep their parent-economy indices; utilities are read from the
/// parent's preference profile with no discounting.
#[derive(Clone, Debug)]
pub struct StaticEconomy<'e> {
    econ: &'e Economy,
    pub side_a: Vec<AgentIx>,
    pub side_b: Vec<AgentIx>,
    thresholds: Vec<Threshold>,
}

impl<'e> StaticEconomy<'e> {
    /// All agents of `econ` at once, with threshold 0.
    pub fn of(econ: &'e Economy) -> Self {
        Self::over(econ, econ.all())
    }

    /// The agents in `members`, with threshold 0.
    pub fn over(econ: &'e Economy, members: AgentSet) -> Self {
        StaticEconomy {
            econ,
            side_a: members.intersection(econ.side_set(Side::A)).to_vec(),
            side_b: members.intersection(econ.side_set(Side::B)).to_vec(),
            thresholds: vec![Threshold::zero(); econ.len()],
        }
    }

    pub fn economy(&self) -> &'e Economy {
        self.econ
    }

    pub fn threshold(&self, k: AgentIx) -> &Threshold {
        &self.thresholds[k]
    }

    pub fn set_threshold(&mut self, k: AgentIx, threshold: Threshold) {
        self.thresholds[k] = threshold;
    }

    pub fn members(&self) -> AgentSet {
        self.side_a.iter().chain(&self.side_b).copied().collect()
    }

    fn utility(&self, k: AgentIx, j: AgentIx) -> &Rational {
        self.econ.utility(k, j)
    }

    /// Individually rational with respect to thresholds and free of blocking pairs.
    pub fn is_stable(&self, m: &[(AgentIx, AgentIx)]) -> bool {
        let mut partner = vec![None; self.econ.len()];
        for &(a, b) in m {
            if !self.thresholds[a].admits(self.utility(a, b)) || !self.thresholds[b].admits(self.utility(b, a)) {
                return false;
            }
            partner[a] = Some(b);
            partner[b] = Some(a);
        }
        let prefers = |k: AgentIx, j: AgentIx| match partner[k] {
            Some(p) => self.utility(k, j) > self.utility(k, p),
            None => self.thresholds[k].is_beaten_by(self.utility(k, j)),
        };
        for &a in &self.side_a {
            for &b in &self.side_b {
                if partner[a] != Some(b) && prefers(a, b) && prefers(b, a) {
                    return false;
                }
            }
        }
        true
    }

    /// Every stable matching, by exhaustive filtering.
    pub fn stable_set(&self) -> Vec<StaticMatching> {
        period_pairings(&self.side_a, &self.side_b)
            .into_iter()
            .filter(|m| self.is_stable(m))
            .collect()
    }

    /// Acceptable partners of `k` from the given side, best first.
    fn ranked_acceptable(&self, k: AgentIx, others: &[AgentIx]) -> Result<Vec<AgentIx>> {
        let mut list: Vec<AgentIx> = others
            .iter()
            .copied()
            .filter(|&j| self.thresholds[k].admits(self.utility(k, j)))
            .collect();
        list.sort_by(|&x, &y| self.utility(k, y).cmp(self.utility(k, x)));
        for w in list.windows(2) {
            if self.utility(k, w[0]) == self.utility(k, w[1]) {
                return Err(Error::TiesPresent(format!(
                    "`{}` is indifferent between `{}` and `{}`",
                    self.econ.name(k),
                    self.econ.name(w[0]),
                    self.econ.name(w[1])
                )));
            }
        }
        Ok(list)
    }

    /// Deferred acceptance with `proposing` making offers.
    pub fn deferred_acceptance(&self, proposing: Side) -> Result<StaticMatching> {
        let (proposers, receivers) = match proposing {
            Side::A => (&self.side_a, &self.side_b),
            Side::B => (&self.side_b, &self.side_a),
        };
        let mut lists = Vec::with_capacity(proposers.len());
        for &p in proposers {
            lists.push(self.ranked_acceptable(p, receivers)?);
        }
        for &r in receivers {
            self.ranked_acceptable(r, proposers)?;
        }
        let mut next = vec![0usize; proposers.len()];
        let mut held: Vec<Option<usize>> = vec![None; self.econ.len()];
        let mut free: VecDeque<usize> = (0..proposers.len()).collect();
        while let Some(i) = free.pop_front() {
            let p = proposers[i];
            let Some(&r) = lists[i].get(next[i]) else { continue };
            next[i] += 1;
            if !self.thresholds[r].admits(self.utility(r, p)) {
                free.push_back(i);
                continue;
            }
            match held[r] {
                None => held[r] = Some(i),
                Some(h) if self.utility(r, p) > self.utility(r, proposers[h]) => {
                    held[r] = Some(i);
                    free.push_back(h);
                }
                Some(_) => free.push_back(i),
            }
        }
        let mut m: StaticMatching = receivers
            .iter()
            .filter_map(|&r| held[r].map(|i| (proposers[i], r)))
            .map(|(p, r)| if proposing == Side::A { (p, r) } else { (r, p) })
            .collect();
        m.sort();
        Ok(m)
    }
}

/// True iff every matching in `set` leaves the same agents of `members` single.
pub fn same_unmatched(members: AgentSet, set: &[StaticMatching]) -> bool {
    let unmatched = |m: &StaticMatching| m.iter().fold(members, |s, &(a, b)| s.without(a).without(b));
    set.windows(2).all(|w| unmatched(&w[0]) == unmatched(&w[1]))
}

/// The one-period market at `h.t` whose thresholds are each available agent's
/// worst conjectured payoff.
pub fn induced_one_period_economy<'e>(
    econ: &'e Economy,
    h: &History,
    conjectures: &[ConjectureSet],
    policy: EmptyPolicy,
) -> Result<StaticEconomy<'e>> {
    let (a, b) = available_agents(econ, h)?;
    let mut out = StaticEconomy::over(econ, a.union(b));
    for k in a.union(b).iter() {
        let set = conjectures
            .iter()
            .find(|c| c.owner == k)
            .ok_or_else(|| Error::InvalidConjecture(format!("no conjecture set for `{}`", econ.name(k))))?;
        if set.at != *h {
            return Err(Error::InvalidConjecture(format!(
                "conjecture for `{}` is at another history",
                econ.name(k)
            )));
        }
        let mut worst: Option<Rational> = None;
        for m in &set.matchings {
            if !m.extends(h) || m.partner_at(k, h.t).is_some() {
                return Err(Error::InvalidConjecture(format!(
                    "conjectured matching does not leave `{}` single at period {}",
                    econ.name(k),
                    h.t
                )));
            }
            let value = payoff(econ, m, k, h.t)?.0;
            if worst.as_ref().is_none_or(|w| value < *w) {
                worst = Some(value);
            }
        }
        out.set_threshold(k, worst.map_or(Threshold::empty(policy), Threshold::AtLeast));
    }
    Ok(out)
}
