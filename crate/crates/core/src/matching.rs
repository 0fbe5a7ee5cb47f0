//! Dynamic matchings, histories, continuation economies and enumeration.

use std::fmt::Write as _;

use crate::agents::{AgentIx, AgentSet};
use crate::economy::{Economy, Side};
use crate::error::{Error, Result};

/// Default cap on the number of matchings any single enumeration may produce.
pub const DEFAULT_MAX_MATCHINGS: usize = 10_000_000;

/// A pair `(a, b)` formed at `period` and kept until the end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Formation {
    pub period: usize,
    pub a: AgentIx,
    pub b: AgentIx,
}

/// A period-`t` matching: an involution on the agents arrived by `t`.
///
/// `image[k]` is `None` for agents outside the domain (not yet arrived) and
/// `Some(k)` for agents single at `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodMatching {
    pub t: usize,
    pub image: Vec<Option<AgentIx>>,
}

impl PeriodMatching {
    /// Checks the matching conditions for period `t` on its own.
    pub fn validate(&self, econ: &Economy) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMatching(format!("period {}: {msg}", self.t)));
        if self.image.len() != econ.len() {
            return bad("wrong number of agents".into());
        }
        let domain = econ.arrived_by(self.t);
        for (k, img) in self.image.iter().enumerate() {
            match *img {
                None if domain.contains(k) => return bad(format!("`{}` has no image", econ.name(k))),
                None => {}
                Some(_) if !domain.contains(k) => return bad(format!("`{}` has not arrived", econ.name(k))),
                Some(j) if j == k => {}
                Some(j) => {
                    if j >= econ.len() || !domain.contains(j) {
                        return bad(format!("`{}` mapped outside the domain", econ.name(k)));
                    }
                    if econ.side(j) == econ.side(k) {
                        return bad(format!("`{}` mapped to its own side", econ.name(k)));
                    }
                    if self.image[j] != Some(k) {
                        return bad(format!("not an involution at `{}`", econ.name(k)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Matched pairs `(a, b)` with `a` on side A, in index order of `a`.
    pub fn pairs(&self, econ: &Economy) -> Vec<(AgentIx, AgentIx)> {
        self.image
            .iter()
            .enumerate()
            .filter_map(|(k, img)| match *img {
                Some(j) if j != k && econ.side(k) == Side::A => Some((k, j)),
                _ => None,
            })
            .collect()
    }
}

/// Checks the feasibility and irreversibility conditions on a full sequence
/// of period matchings.
pub fn validate_periods(econ: &Economy, periods: &[PeriodMatching]) -> Result<()> {
    if periods.len() != econ.horizon() {
        return Err(Error::InvalidMatching(format!(
            "expected {} periods, got {}",
            econ.horizon(),
            periods.len()
        )));
    }
    for (i, m) in periods.iter().enumerate() {
        if m.t != i + 1 {
            return Err(Error::InvalidMatching("periods out of order".into()));
        }
        m.validate(econ)?;
    }
    for (i, m) in periods.iter().enumerate() {
        for (k, img) in m.image.iter().enumerate() {
            if let Some(j) = *img {
                if j != k && periods[i + 1..].iter().any(|later| later.image[k] != Some(j)) {
                    return Err(Error::InvalidMatching(format!(
                        "`{}` leaves its partner after period {}",
                        econ.name(k),
                        m.t
                    )));
                }
            }
        }
    }
    Ok(())
}

/// A dynamic matching, stored as the list of pairs with their formation dates.
///
/// Irreversibility makes the formation list a complete description; the
/// per-period view is available through [`DynamicMatching::period_matching`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DynamicMatching {
    horizon: usize,
    formations: Vec<Formation>,
}

impl DynamicMatching {
    /// Everyone single in every period.
    pub fn empty(horizon: usize) -> Self {
        DynamicMatching {
            horizon,
            formations: Vec::new(),
        }
    }

    pub fn from_formations(econ: &Economy, mut formations: Vec<Formation>) -> Result<Self> {
        formations.sort();
        check_formations(econ, &formations, econ.horizon() + 1)?;
        Ok(DynamicMatching {
            horizon: econ.horizon(),
            formations,
        })
    }

    pub fn from_period_matchings(econ: &Economy, periods: &[PeriodMatching]) -> Result<Self> {
        validate_periods(econ, periods)?;
        let mut seen = AgentSet::EMPTY;
        let mut formations = Vec::new();
        for m in periods {
            for (a, b) in m.pairs(econ) {
                if !seen.contains(a) {
                    seen = seen.with(a).with(b);
                    formations.push(Formation { period: m.t, a, b });
                }
            }
        }
        Self::from_formations(econ, formations)
    }

    /// Build without validation; callers guarantee feasibility.
    pub(crate) fn from_sorted_unchecked(horizon: usize, formations: Vec<Formation>) -> Self {
        DynamicMatching { horizon, formations }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Pairs sorted by period, then by side-A agent.
    pub fn formations(&self) -> &[Formation] {
        &self.formations
    }

    pub fn formation_of(&self, k: AgentIx) -> Option<Formation> {
        self.formations.iter().copied().find(|f| f.a == k || f.b == k)
    }

    /// `m_T(k)`, or `None` if `k` is never matched.
    pub fn final_partner(&self, k: AgentIx) -> Option<AgentIx> {
        self.formation_of(k).map(|f| if f.a == k { f.b } else { f.a })
    }

    /// `m_t(k)` for a matched agent, `None` if `k` is single at `t`.
    pub fn partner_at(&self, k: AgentIx, t: usize) -> Option<AgentIx> {
        self.formation_of(k)
            .filter(|f| f.period <= t)
            .map(|f| if f.a == k { f.b } else { f.a })
    }

    /// Agents matched at or before `t`.
    pub fn matched_by(&self, t: usize) -> AgentSet {
        self.formations
            .iter()
            .filter(|f| f.period <= t)
            .fold(AgentSet::EMPTY, |s, f| s.with(f.a).with(f.b))
    }

    pub fn period_matching(&self, econ: &Economy, t: usize) -> PeriodMatching {
        let domain = econ.arrived_by(t);
        let image = (0..econ.len())
            .map(|k| domain.contains(k).then(|| self.partner_at(k, t).unwrap_or(k)))
            .collect();
        PeriodMatching { t, image }
    }

    pub fn period_matchings(&self, econ: &Economy) -> Vec<PeriodMatching> {
        (1..=self.horizon).map(|t| self.period_matching(econ, t)).collect()
    }

    /// The history `m^{t-1}` seen at the start of period `t`.
    pub fn prefix(&self, t: usize) -> History {
        History {
            t,
            formations: self.formations.iter().copied().filter(|f| f.period < t).collect(),
        }
    }

    /// True iff `self` agrees with `h` before `h.t` and forms nothing else earlier.
    pub fn extends(&self, h: &History) -> bool {
        self.prefix(h.t).formations == h.formations
    }
}

fn check_formations(econ: &Economy, formations: &[Formation], before: usize) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidMatching(msg));
    let mut used = AgentSet::EMPTY;
    for f in formations {
        if f.a >= econ.len() || f.b >= econ.len() {
            return bad("unknown agent index".into());
        }
        if econ.side(f.a) != Side::A || econ.side(f.b) != Side::B {
            return bad(format!("pair {}-{} is not an A-B pair", econ.name(f.a), econ.name(f.b)));
        }
        if f.period == 0 || f.period >= before {
            return bad(format!(
                "pair {}-{} formed at invalid period {}",
                econ.name(f.a),
                econ.name(f.b),
                f.period
            ));
        }
        if econ.arrival(f.a) > f.period || econ.arrival(f.b) > f.period {
            return bad(format!(
                "pair {}-{} formed before arrival",
                econ.name(f.a),
                econ.name(f.b)
            ));
        }
        if used.contains(f.a) || used.contains(f.b) {
            return bad(format!("agent matched twice in {}-{}", econ.name(f.a), econ.name(f.b)));
        }
        used = used.with(f.a).with(f.b);
    }
    Ok(())
}

/// Matches formed strictly before period `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History {
    pub t: usize,
    formations: Vec<Formation>,
}

impl History {
    /// The empty history at period 1.
    pub fn root() -> Self {
        History {
            t: 1,
            formations: Vec::new(),
        }
    }

    pub fn new(econ: &Economy, t: usize, mut formations: Vec<Formation>) -> Result<Self> {
        if t == 0 || t > econ.horizon() {
            return Err(Error::InvalidHistory(format!(
                "period {t} outside 1..={}",
                econ.horizon()
            )));
        }
        formations.sort();
        check_formations(econ, &formations, t).map_err(|e| Error::InvalidHistory(e.to_string()))?;
        Ok(History { t, formations })
    }

    pub fn formations(&self) -> &[Formation] {
        &self.formations
    }

    pub fn matched(&self) -> AgentSet {
        self.formations
            .iter()
            .fold(AgentSet::EMPTY, |s, f| s.with(f.a).with(f.b))
    }

    fn validate(&self, econ: &Economy) -> Result<()> {
        History::new(econ, self.t, self.formations.clone()).map(|_| ())
    }
}

/// Agents who can match at `h.t`: side A and side B.
pub fn available_agents(econ: &Economy, h: &History) -> Result<(AgentSet, AgentSet)> {
    h.validate(econ)?;
    let pool = econ.arrived_by(h.t).minus(h.matched());
    Ok((
        pool.intersection(econ.side_set(Side::A)),
        pool.intersection(econ.side_set(Side::B)),
    ))
}

/// Canonical memo key for the continuation of an economy.
///
/// `pool` holds the agents available at `t`. Agents in `deferred` sit out
/// period `t` and join the pool at `t + 1`. The remaining arrival schedule is
/// the economy's own schedule after `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContinuationKey {
    pub t: usize,
    pub pool: AgentSet,
    pub deferred: AgentSet,
}

impl ContinuationKey {
    pub fn root(econ: &Economy) -> Self {
        ContinuationKey {
            t: 1,
            pool: econ.arrivals(1),
            deferred: AgentSet::EMPTY,
        }
    }

    pub fn for_history(econ: &Economy, h: &History) -> Result<Self> {
        let (a, b) = available_agents(econ, h)?;
        Ok(ContinuationKey {
            t: h.t,
            pool: a.union(b),
            deferred: AgentSet::EMPTY,
        })
    }

    /// The state after the agents in `matched` leave at the end of period `t`.
    pub fn next(&self, econ: &Economy, matched: AgentSet) -> Option<Self> {
        (self.t < econ.horizon()).then(|| ContinuationKey {
            t: self.t + 1,
            pool: self
                .pool
                .minus(matched)
                .union(econ.arrivals(self.t + 1))
                .union(self.deferred),
            deferred: AgentSet::EMPTY,
        })
    }

    /// The same state with `k` sitting out the current period.
    pub fn defer(&self, econ: &Economy, k: AgentIx) -> Self {
        let deferred = if self.t < econ.horizon() {
            self.deferred.with(k)
        } else {
            self.deferred
        };
        ContinuationKey {
            t: self.t,
            pool: self.pool.without(k),
            deferred,
        }
    }

    /// Everyone who may still match from `t` on.
    pub fn participants(&self, econ: &Economy) -> AgentSet {
        let later = (self.t + 1..=econ.horizon()).fold(AgentSet::EMPTY, |s, p| s.union(econ.arrivals(p)));
        self.pool.union(self.deferred).union(later)
    }

    pub fn pool_side(&self, econ: &Economy, side: Side) -> AgentSet {
        self.pool.intersection(econ.side_set(side))
    }
}

/// A continuation economy together with its provenance.
#[derive(Clone, Debug)]
pub struct Continuation {
    pub economy: Economy,
    pub key: ContinuationKey,
    /// `members[i]` is the parent-economy index of the continuation's agent `i`.
    pub members: Vec<AgentIx>,
}

impl Continuation {
    pub fn from_key(econ: &Economy, key: ContinuationKey) -> Self {
        let later = (key.t + 1..=econ.horizon()).fold(AgentSet::EMPTY, |s, p| s.union(econ.arrivals(p)));
        let economy = econ.sub_economy(key.pool.union(later), key.deferred, key.t);
        let members = key.participants(econ).to_vec();
        Continuation { economy, key, members }
    }

    fn local(&self, k: AgentIx) -> Option<AgentIx> {
        self.members.iter().position(|&m| m == k)
    }
}

/// The economy that starts at `h.t` with the agents available then.
pub fn continuation_economy(econ: &Economy, h: &History) -> Result<Continuation> {
    let key = ContinuationKey::for_history(econ, h)?;
    Ok(Continuation::from_key(econ, key))
}

/// The part of `m` played out in `sub`, with periods renumbered from 1.
pub fn restrict(econ: &Economy, m: &DynamicMatching, sub: &Continuation) -> Result<DynamicMatching> {
    let key = sub.key;
    let not_cont = |msg: &str| Error::NotAContinuation(msg.to_string());
    let before = m.prefix(key.t);
    let available = econ.arrived_by(key.t).minus(before.matched());
    if available != key.pool.union(key.deferred.intersection(econ.arrived_by(key.t))) {
        return Err(not_cont("available agents differ"));
    }
    let mut formations = Vec::new();
    for f in m.formations().iter().filter(|f| f.period >= key.t) {
        if f.period == key.t && (key.deferred.contains(f.a) || key.deferred.contains(f.b)) {
            return Err(not_cont("a deferred agent matches in the first period"));
        }
        let (a, b) = match (sub.local(f.a), sub.local(f.b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(not_cont("matching involves agents outside the continuation")),
        };
        formations.push(Formation {
            period: f.period + 1 - key.t,
            a,
            b,
        });
    }
    if key.t == econ.horizon() && !key.deferred.is_empty() {
        return Err(not_cont("deferred agents at the last period"));
    }
    DynamicMatching::from_formations(&sub.economy, formations)
}

/// Every one-period matching over the given side-A and side-B pools, in
/// lexicographic order: each side-A agent in turn is first left single and
/// then paired with each free side-B agent in order.
pub fn period_pairings(side_a: &[AgentIx], side_b: &[AgentIx]) -> Vec<Vec<(AgentIx, AgentIx)>> {
    fn go(
        side_a: &[AgentIx],
        side_b: &[AgentIx],
        used: &mut Vec<bool>,
        current: &mut Vec<(AgentIx, AgentIx)>,
        out: &mut Vec<Vec<(AgentIx, AgentIx)>>,
    ) {
        let Some((&a, rest)) = side_a.split_first() else {
            out.push(current.clone());
            return;
        };
        go(rest, side_b, used, current, out);
        for (i, &b) in side_b.iter().enumerate() {
            if !used[i] {
                used[i] = true;
                current.push((a, b));
                go(rest, side_b, used, current, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        side_a,
        side_b,
        &mut vec![false; side_b.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// All dynamic matchings extending `h`. With `unmatched = Some(k)`, only those
/// leaving `k` single at period `h.t`.
pub fn enumerate_matchings(
    econ: &Economy,
    h: &History,
    unmatched: Option<AgentIx>,
    cap: usize,
) -> Result<Vec<DynamicMatching>> {
    let key = ContinuationKey::for_history(econ, h)?;
    if let Some(k) = unmatched {
        if !key.pool.contains(k) {
            let agent = econ.agents().get(k).map_or(format!("#{k}"), |a| a.name.clone());
            return Err(Error::NotAvailable { agent, period: h.t });
        }
    }
    let mut out = Vec::new();
    let mut prefix = h.formations().to_vec();
    extend(econ, key, unmatched, cap, &mut prefix, &mut out)?;
    Ok(out)
}

fn extend(
    econ: &Economy,
    key: ContinuationKey,
    unmatched: Option<AgentIx>,
    cap: usize,
    prefix: &mut Vec<Formation>,
    out: &mut Vec<DynamicMatching>,
) -> Result<()> {
    let pool_a = key.pool_side(econ, Side::A).to_vec();
    let pool_b = key.pool_side(econ, Side::B).to_vec();
    for pairs in period_pairings(&pool_a, &pool_b) {
        if let Some(k) = unmatched {
            if pairs.iter().any(|&(a, b)| a == k || b == k) {
                continue;
            }
        }
        let mark = prefix.len();
        let mut matched = AgentSet::EMPTY;
        for &(a, b) in &pairs {
            prefix.push(Formation { period: key.t, a, b });
            matched = matched.with(a).with(b);
        }
        match key.next(econ, matched) {
            Some(next) => extend(econ, next, None, cap, prefix, out)?,
            None => {
                if out.len() >= cap {
                    return Err(Error::SizeLimitExceeded {
                        cap,
                        what: "dynamic matchings".into(),
                    });
                }
                out.push(DynamicMatching::from_sorted_unchecked(econ.horizon(), prefix.clone()));
            }
        }
        prefix.truncate(mark);
    }
    Ok(())
}

/// Renders `m` as `t=1: a1-b1 a2-b2 | t=2: a3-b3`, listing each pair at its
/// formation period.
pub fn format_matching(econ: &Economy, m: &DynamicMatching) -> String {
    let mut out = String::new();
    for t in 1..=m.horizon() {
        if t > 1 {
            out.push_str(" | ");
        }
        let _ = write!(out, "t={t}:");
        for f in m.formations().iter().filter(|f| f.period == t) {
            let _ = write!(out, " {}-{}", econ.name(f.a), econ.name(f.b));
        }
    }
    out
}

/// Parses the text form produced by [`format_matching`]. Periods may be
/// omitted, and a pair may name its side-B agent first.
pub fn parse_matching(econ: &Economy, text: &str) -> Result<DynamicMatching> {
    let bad = |msg: String| Error::BadMatchingSpec(msg);
    let mut formations = Vec::new();
    for block in text.split('|') {
        let block = block.trim();
        if block.is_empty() {
            continue;
        }
        let (head, body) = block
            .split_once(':')
            .ok_or_else(|| bad(format!("missing `t=<period>:` in `{block}`")))?;
        let period: usize = head
            .trim()
            .strip_prefix("t=")
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| bad(format!("bad period header `{head}`")))?;
        for pair in body.split_whitespace() {
            let (x, y) = pair.split_once('-').ok_or_else(|| bad(format!("bad pair `{pair}`")))?;
            let x = econ.index_of(x).ok_or_else(|| bad(format!("unknown agent `{x}`")))?;
            let y = econ.index_of(y).ok_or_else(|| bad(format!("unknown agent `{y}`")))?;
            let (a, b) = if econ.side(x) == Side::A { (x, y) } else { (y, x) };
            formations.push(Formation { period, a, b });
        }
    }
    DynamicMatching::from_formations(econ, formations).map_err(|e| bad(e.to_string()))
}
