//! Memoized solver core shared by every conjecture family.
//!
//! The engine works on continuation states ([`ContinuationKey`]) and
//! continuation plans ([`Plan`]): a plan fixes the pairs formed in each
//! remaining period and shares its tail with every other plan that continues
//! the same way. Payoff comparisons inside the engine go through integer rank
//! tables; each comparison involves a single agent, so ranking that agent's
//! discounted utilities is exact.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use indexmap::IndexSet;
use serde::Serialize;

use crate::agents::{AgentIx, AgentSet};
use crate::concepts::{Concept, CvrTrace, SdsTrace};
use crate::economy::{Economy, Rational, Side};
use crate::error::{Error, Result};
use crate::matching::{period_pairings, ContinuationKey, DynamicMatching, Formation, History, DEFAULT_MAX_MATCHINGS};
use crate::stability::EmptyPolicy;

/// Where an agent ends up under a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Single,
    Matched { partner: AgentIx, period: usize },
}

/// Worst element of a conjecture set, or a marker for the empty set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Worst {
    Empty,
    Outcome(Outcome),
}

/// The pairs formed from some period on, with shared tails.
#[derive(Clone)]
pub struct Plan(Arc<PlanNode>);

struct PlanNode {
    period: usize,
    pairs: Arc<[(AgentIx, AgentIx)]>,
    matched: AgentSet,
    tail: Option<Plan>,
    hash: u64,
}

impl Plan {
    pub fn new(period: usize, pairs: Arc<[(AgentIx, AgentIx)]>, tail: Option<Plan>) -> Plan {
        let mut h = DefaultHasher::new();
        period.hash(&mut h);
        pairs.hash(&mut h);
        tail.as_ref().map(|p| p.0.hash).hash(&mut h);
        let matched = pairs.iter().fold(AgentSet::EMPTY, |s, &(a, b)| s.with(a).with(b));
        Plan(Arc::new(PlanNode {
            period,
            pairs,
            matched,
            tail,
            hash: h.finish(),
        }))
    }

    /// A plan forming no pairs in periods `from..=horizon`.
    pub fn all_single(from: usize, horizon: usize) -> Plan {
        let empty: Arc<[(AgentIx, AgentIx)]> = Arc::from(Vec::new());
        (from..=horizon)
            .rev()
            .fold(None, |tail, t| Some(Plan::new(t, empty.clone(), tail)))
            .expect("from <= horizon")
    }

    /// The plan that `m` follows from period `from` on.
    pub fn from_matching(m: &DynamicMatching, from: usize) -> Plan {
        let mut tail = None;
        for t in (from..=m.horizon()).rev() {
            let pairs: Vec<_> = m
                .formations()
                .iter()
                .filter(|f| f.period == t)
                .map(|f| (f.a, f.b))
                .collect();
            tail = Some(Plan::new(t, Arc::from(pairs), tail));
        }
        tail.expect("from <= horizon")
    }

    pub fn period(&self) -> usize {
        self.0.period
    }

    pub fn pairs(&self) -> &[(AgentIx, AgentIx)] {
        &self.0.pairs
    }

    pub fn first_matched(&self) -> AgentSet {
        self.0.matched
    }

    pub fn first_period(&self) -> PeriodPairs {
        PeriodPairs {
            pairs: self.0.pairs.clone(),
            matched: self.0.matched,
        }
    }

    pub fn tail(&self) -> Option<&Plan> {
        self.0.tail.as_ref()
    }

    pub fn outcome(&self, k: AgentIx) -> Outcome {
        let mut node = Some(self);
        while let Some(p) = node {
            if p.0.matched.contains(k) {
                let &(a, b) = p.pairs().iter().find(|&&(a, b)| a == k || b == k).expect("matched");
                return Outcome::Matched {
                    partner: if a == k { b } else { a },
                    period: p.period(),
                };
            }
            node = p.tail();
        }
        Outcome::Single
    }

    /// True iff no pair is formed in any period of the plan.
    pub fn is_all_single(&self) -> bool {
        let mut node = Some(self);
        while let Some(p) = node {
            if !p.pairs().is_empty() {
                return false;
            }
            node = p.tail();
        }
        true
    }

    pub fn formations(&self) -> Vec<Formation> {
        let mut out = Vec::new();
        let mut node = Some(self);
        while let Some(p) = node {
            out.extend(p.pairs().iter().map(|&(a, b)| Formation {
                period: p.period(),
                a,
                b,
            }));
            node = p.tail();
        }
        out
    }

    /// The full matching obtained by playing `h` and then this plan.
    pub fn to_matching(&self, horizon: usize, h: &History) -> DynamicMatching {
        let mut formations = h.formations().to_vec();
        formations.extend(self.formations());
        formations.sort();
        DynamicMatching::from_sorted_unchecked(horizon, formations)
    }
}

impl PartialEq for Plan {
    fn eq(&self, other: &Plan) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.period == other.0.period
                && self.0.pairs == other.0.pairs
                && self.0.tail == other.0.tail)
    }
}

impl Eq for Plan {}

impl Hash for Plan {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl std::fmt::Debug for Plan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.formations()).finish()
    }
}

/// Insertion-ordered set of plans.
pub type PlanSet = IndexSet<Plan>;

/// One period's pairs over a pool.
#[derive(Clone, Debug)]
pub struct PeriodPairs {
    pub pairs: Arc<[(AgentIx, AgentIx)]>,
    pub matched: AgentSet,
}

/// Per-agent order of every discounted utility the agent can receive.
#[derive(Clone, Debug)]
pub struct RankTable {
    n: usize,
    horizon: usize,
    rank: Vec<i32>,
    zero: Vec<i32>,
}

impl RankTable {
    pub fn new(econ: &Economy) -> Self {
        let n = econ.len();
        let horizon = econ.horizon();
        let mut rank = vec![0; n * n * horizon];
        let mut zero = vec![0; n];
        for k in 0..n {
            let mut values = BTreeSet::new();
            values.insert(econ.discounted(k, None, 0));
            let partners: Vec<AgentIx> = (0..n).filter(|&j| econ.side(j) != econ.side(k)).collect();
            for &j in &partners {
                for d in 0..horizon {
                    values.insert(econ.discounted(k, Some(j), d));
                }
            }
            let values: Vec<Rational> = values.into_iter().collect();
            let pos = |r: &Rational| values.binary_search(r).expect("value present") as i32;
            zero[k] = pos(&econ.discounted(k, None, 0));
            for &j in &partners {
                for d in 0..horizon {
                    rank[(k * n + j) * horizon + d] = pos(&econ.discounted(k, Some(j), d));
                }
            }
        }
        RankTable { n, horizon, rank, zero }
    }

    /// Rank of `delta_k^delay * u(k, partner)`.
    pub fn at(&self, k: AgentIx, partner: AgentIx, delay: usize) -> i32 {
        self.rank[(k * self.n + partner) * self.horizon + delay]
    }

    pub fn zero(&self, k: AgentIx) -> i32 {
        self.zero[k]
    }

    /// Rank of `k`'s payoff from `outcome`, evaluated at period `t`.
    pub fn outcome(&self, k: AgentIx, outcome: &Outcome, t: usize) -> i32 {
        match *outcome {
            Outcome::Single => self.zero[k],
            Outcome::Matched { partner, period } => self.at(k, partner, period - t),
        }
    }
}

/// Rank sentinel below every payoff.
pub const LEVEL_MIN: i32 = i32::MIN;
/// Rank sentinel above every payoff.
pub const LEVEL_MAX: i32 = i32::MAX;

/// Worst conjectured outcome of every agent in a state's pool.
#[derive(Clone, Debug)]
pub struct Thresholds {
    pub t: usize,
    /// Indexed by agent; `None` outside the pool.
    pub worst: Vec<Option<Worst>>,
    pub levels: Vec<i32>,
}

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SolverConfig {
    pub empty_conjectures: EmptyPolicy,
    pub max_matchings: usize,
    /// Worker threads for parallel filters; 0 picks a default.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            empty_conjectures: EmptyPolicy::Vacuous,
            max_matchings: DEFAULT_MAX_MATCHINGS,
            threads: 0,
        }
    }
}

/// A rule producing conjecture sets, for families beyond the built-in concepts.
pub trait ConjectureRule: Send + Sync {
    fn name(&self) -> String;

    /// Plans from `key` in which `owner` stays single at `key.t`.
    fn conjectures(&self, engine: &mut Engine<'_>, key: &ContinuationKey, owner: AgentIx) -> Result<Vec<Plan>>;
}

/// A family of conjectures: one per agent per history.
#[derive(Clone)]
pub enum ConjectureFamily {
    Concept(Concept),
    Custom(Arc<dyn ConjectureRule>),
}

impl ConjectureFamily {
    pub fn name(&self) -> String {
        match self {
            ConjectureFamily::Concept(c) => c.name().to_string(),
            ConjectureFamily::Custom(rule) => format!("custom:{}", rule.name()),
        }
    }
}

impl From<Concept> for ConjectureFamily {
    fn from(c: Concept) -> Self {
        ConjectureFamily::Concept(c)
    }
}

/// Diagnostic counters collected while solving.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EngineStats {
    pub states_solved: usize,
    pub lone_wolf_checks: usize,
    pub lone_wolf_violations: usize,
}

/// Stable first-period pairings of one state, with the continuation sets.
#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    pub plans: PlanSet,
    /// Stable first periods whose continuation has no solution.
    pub empty_continuations: Vec<Arc<[(AgentIx, AgentIx)]>>,
}

type MemoKey = (String, ContinuationKey);

/// Memo store and solver for one economy.
pub struct Engine<'e> {
    pub(crate) econ: &'e Economy,
    pub(crate) config: SolverConfig,
    pub(crate) ranks: RankTable,
    pub(crate) side_a: AgentSet,
    pairings: HashMap<AgentSet, Arc<Vec<PeriodPairs>>>,
    solutions: HashMap<MemoKey, Arc<PlanSet>>,
    thresholds: HashMap<MemoKey, Arc<Thresholds>>,
    worst_in: HashMap<MemoKey, Arc<Vec<Worst>>>,
    custom: HashMap<(String, ContinuationKey, AgentIx), Arc<PlanSet>>,
    plan_counts: HashMap<ContinuationKey, u128>,
    pub(crate) cvr: HashMap<ContinuationKey, Arc<CvrTrace>>,
    pub(crate) sds: HashMap<ContinuationKey, Arc<SdsTrace>>,
    pub(crate) stats: EngineStats,
}

impl<'e> Engine<'e> {
    pub fn new(econ: &'e Economy, config: SolverConfig) -> Self {
        Engine {
            econ,
            config,
            ranks: RankTable::new(econ),
            side_a: econ.side_set(Side::A),
            pairings: HashMap::new(),
            solutions: HashMap::new(),
            thresholds: HashMap::new(),
            worst_in: HashMap::new(),
            custom: HashMap::new(),
            plan_counts: HashMap::new(),
            cvr: HashMap::new(),
            sds: HashMap::new(),
            stats: EngineStats::default(),
        }
    }

    pub fn economy(&self) -> &'e Economy {
        self.econ
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn ranks(&self) -> &RankTable {
        &self.ranks
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn root(&self) -> ContinuationKey {
        ContinuationKey::root(self.econ)
    }

    pub fn next(&self, key: &ContinuationKey, matched: AgentSet) -> Option<ContinuationKey> {
        key.next(self.econ, matched)
    }

    pub fn defer(&self, key: &ContinuationKey, k: AgentIx) -> ContinuationKey {
        key.defer(self.econ, k)
    }

    pub(crate) fn size_error(&self, what: &str) -> Error {
        Error::SizeLimitExceeded {
            cap: self.config.max_matchings,
            what: what.to_string(),
        }
    }

    /// Rank used for an agent whose conjecture set is `worst`.
    pub fn level(&self, k: AgentIx, worst: &Worst, t: usize) -> i32 {
        match worst {
            Worst::Empty => match self.config.empty_conjectures {
                EmptyPolicy::Vacuous => LEVEL_MIN,
                EmptyPolicy::Strict => LEVEL_MAX,
            },
            Worst::Outcome(o) => self.ranks.outcome(k, o, t),
        }
    }

    /// The worst of `outcomes` for `k`, judged at period `t`.
    pub fn min_outcome(&self, k: AgentIx, t: usize, outcomes: impl IntoIterator<Item = Outcome>) -> Worst {
        let mut best: Option<(i32, Outcome)> = None;
        for o in outcomes {
            let r = self.ranks.outcome(k, &o, t);
            if best.is_none_or(|(b, _)| r < b) {
                best = Some((r, o));
            }
        }
        best.map_or(Worst::Empty, |(_, o)| Worst::Outcome(o))
    }

    /// Every period matching over `pool`, in enumeration order.
    pub fn pairings(&mut self, pool: AgentSet) -> Result<Arc<Vec<PeriodPairs>>> {
        if let Some(p) = self.pairings.get(&pool) {
            return Ok(p.clone());
        }
        let side_a = pool.intersection(self.side_a).to_vec();
        let side_b = pool.minus(self.side_a).to_vec();
        if partial_injections(side_a.len(), side_b.len()) > self.config.max_matchings as u128 {
            return Err(self.size_error("period matchings of one pool"));
        }
        let list: Vec<PeriodPairs> = period_pairings(&side_a, &side_b)
            .into_iter()
            .map(|pairs| {
                let matched = pairs.iter().fold(AgentSet::EMPTY, |s, &(a, b)| s.with(a).with(b));
                PeriodPairs {
                    pairs: Arc::from(pairs),
                    matched,
                }
            })
            .collect();
        let list = Arc::new(list);
        self.pairings.insert(pool, list.clone());
        Ok(list)
    }

    /// Number of plans from `key`, saturating.
    pub fn count_plans(&mut self, key: &ContinuationKey) -> Result<u128> {
        if let Some(&c) = self.plan_counts.get(key) {
            return Ok(c);
        }
        let mut total: u128 = 0;
        for mu in self.pairings(key.pool)?.iter() {
            let c = match self.next(key, mu.matched) {
                None => 1,
                Some(nk) => self.count_plans(&nk)?,
            };
            total = total.saturating_add(c);
        }
        self.plan_counts.insert(*key, total);
        Ok(total)
    }

    /// Ranks each pool agent attaches to its own first-period partner.
    fn partner_values(&self, mu: &PeriodPairs, values: &mut [i32]) {
        for &(a, b) in mu.pairs.iter() {
            values[a] = self.ranks.at(a, b, 0);
            values[b] = self.ranks.at(b, a, 0);
        }
    }

    /// Stability of `mu` among the agents it matches, against `levels`.
    pub fn stable_among_matched(&self, mu: &PeriodPairs, levels: &[i32]) -> bool {
        let r = &self.ranks;
        for &(a, b) in mu.pairs.iter() {
            if r.at(a, b, 0) < levels[a] || r.at(b, a, 0) < levels[b] {
                return false;
            }
        }
        for &(a, pa) in mu.pairs.iter() {
            for &(b_owner, b) in mu.pairs.iter() {
                if b_owner == a {
                    continue;
                }
                if r.at(a, b, 0) > r.at(a, pa, 0) && r.at(b, a, 0) > r.at(b, b_owner, 0) {
                    return false;
                }
            }
        }
        true
    }

    /// Full one-period stability of `mu` over the pool, singles valued at `levels`.
    pub fn stable_in_pool(&self, key: &ContinuationKey, mu: &PeriodPairs, levels: &[i32]) -> bool {
        if !self.stable_among_matched(mu, levels) {
            return false;
        }
        let mut values = levels.to_vec();
        self.partner_values(mu, &mut values);
        let singles = key.pool.minus(mu.matched);
        self.no_block_with_singles(key, singles, &values)
    }

    fn no_block_with_singles(&self, key: &ContinuationKey, singles: AgentSet, values: &[i32]) -> bool {
        let r = &self.ranks;
        let pool_a = key.pool.intersection(self.side_a);
        let pool_b = key.pool.minus(self.side_a);
        for a in pool_a.iter() {
            let a_single = singles.contains(a);
            for b in pool_b.iter() {
                if (a_single || singles.contains(b)) && r.at(a, b, 0) > values[a] && r.at(b, a, 0) > values[b] {
                    return false;
                }
            }
        }
        true
    }

    /// Solution set of `fam` from `key`, computed period by period.
    pub fn solutions(&mut self, fam: &ConjectureFamily, key: &ContinuationKey) -> Result<Arc<PlanSet>> {
        let memo = (fam.name(), *key);
        if let Some(s) = self.solutions.get(&memo) {
            return Ok(s.clone());
        }
        let th = self.thresholds(fam, key)?;
        let set = Arc::new(self.assemble(fam, key, &th.levels)?);
        self.stats.states_solved += 1;
        self.solutions.insert(memo, set.clone());
        Ok(set)
    }

    /// Plans whose first period clears every agent's threshold and has no
    /// blocking pair, followed by a solution of the continuation.
    fn assemble(&mut self, fam: &ConjectureFamily, key: &ContinuationKey, levels: &[i32]) -> Result<PlanSet> {
        let t = key.t;
        let mut out = PlanSet::new();
        let mut values = vec![0i32; self.econ.len()];
        for mu in self.pairings(key.pool)?.iter() {
            if !self.stable_among_matched(mu, levels) {
                continue;
            }
            self.partner_values(mu, &mut values);
            let singles = key.pool.minus(mu.matched);
            let tails: Vec<Option<Plan>> = match self.next(key, mu.matched) {
                None => vec![None],
                Some(nk) => self.solutions(fam, &nk)?.iter().cloned().map(Some).collect(),
            };
            'tail: for tail in tails {
                for k in singles.iter() {
                    let o = tail.as_ref().map_or(Outcome::Single, |p| p.outcome(k));
                    values[k] = self.ranks.outcome(k, &o, t);
                    if values[k] < levels[k] {
                        continue 'tail;
                    }
                }
                if !self.no_block_with_singles(key, singles, &values) {
                    continue;
                }
                if out.len() >= self.config.max_matchings {
                    return Err(self.size_error("solution set"));
                }
                out.insert(Plan::new(t, mu.pairs.clone(), tail));
            }
        }
        Ok(out)
    }

    /// Worst conjectured outcome for every pool agent of `key`.
    pub fn thresholds(&mut self, fam: &ConjectureFamily, key: &ContinuationKey) -> Result<Arc<Thresholds>> {
        let memo = (fam.name(), *key);
        if let Some(th) = self.thresholds.get(&memo) {
            return Ok(th.clone());
        }
        let n = self.econ.len();
        let mut worst = vec![None; n];
        let mut levels = vec![LEVEL_MIN; n];
        for k in key.pool.iter() {
            let w = match fam {
                ConjectureFamily::Concept(c) => self.concept_worst(*c, key, k)?,
                ConjectureFamily::Custom(rule) => {
                    let set = self.custom_conjectures(rule, key, k)?;
                    self.min_outcome(k, key.t, set.iter().map(|p| p.outcome(k)))
                }
            };
            levels[k] = self.level(k, &w, key.t);
            worst[k] = Some(w);
        }
        let th = Arc::new(Thresholds {
            t: key.t,
            worst,
            levels,
        });
        self.thresholds.insert(memo, th.clone());
        Ok(th)
    }

    fn custom_conjectures(
        &mut self,
        rule: &Arc<dyn ConjectureRule>,
        key: &ContinuationKey,
        k: AgentIx,
    ) -> Result<Arc<PlanSet>> {
        let memo = (rule.name(), *key, k);
        if let Some(s) = self.custom.get(&memo) {
            return Ok(s.clone());
        }
        let plans = rule.conjectures(self, key, k)?;
        for p in &plans {
            if p.period() != key.t || p.first_matched().contains(k) || !p.first_matched().is_subset(key.pool) {
                return Err(Error::InvalidConjecture(format!(
                    "rule `{}` produced a plan that does not leave `{}` single at period {}",
                    rule.name(),
                    self.econ.name(k),
                    key.t
                )));
            }
        }
        let set = Arc::new(plans.into_iter().collect::<PlanSet>());
        self.custom.insert(memo, set.clone());
        Ok(set)
    }

    /// Worst outcome of every agent over the solutions from `key`.
    pub fn worst_in_solutions(&mut self, fam: &ConjectureFamily, key: &ContinuationKey) -> Result<Arc<Vec<Worst>>> {
        let memo = (fam.name(), *key);
        if let Some(w) = self.worst_in.get(&memo) {
            return Ok(w.clone());
        }
        let set = self.solutions(fam, key)?;
        let mut worst = vec![Worst::Empty; self.econ.len()];
        for (k, w) in worst.iter_mut().enumerate() {
            *w = self.min_outcome(k, key.t, set.iter().map(|p| p.outcome(k)));
        }
        let worst = Arc::new(worst);
        self.worst_in.insert(memo, worst.clone());
        Ok(worst)
    }

    /// Explicit conjecture set of `k` at `key`.
    pub fn conjectures(&mut self, fam: &ConjectureFamily, key: &ContinuationKey, k: AgentIx) -> Result<Arc<PlanSet>> {
        match fam {
            ConjectureFamily::Concept(c) => self.concept_conjectures(*c, key, k),
            ConjectureFamily::Custom(rule) => self.custom_conjectures(rule, key, k),
        }
    }

    /// Whether `plan` belongs to `k`'s conjecture set at `key`.
    pub fn conjecture_contains(
        &mut self,
        fam: &ConjectureFamily,
        key: &ContinuationKey,
        k: AgentIx,
        plan: &Plan,
    ) -> Result<bool> {
        if plan.period() != key.t || plan.first_matched().contains(k) || !plan.first_matched().is_subset(key.pool) {
            return Ok(false);
        }
        match fam {
            ConjectureFamily::Concept(c) => self.concept_contains(*c, key, k, plan),
            ConjectureFamily::Custom(rule) => Ok(self.custom_conjectures(rule, key, k)?.contains(plan)),
        }
    }

    /// Period pairings over the pool that are stable against `levels`,
    /// recording whether they agree on who stays single.
    pub fn stable_pairings(&mut self, key: &ContinuationKey, levels: &[i32]) -> Result<Vec<PeriodPairs>> {
        let stable: Vec<PeriodPairs> = self
            .pairings(key.pool)?
            .iter()
            .filter(|mu| self.stable_in_pool(key, mu, levels))
            .cloned()
            .collect();
        self.stats.lone_wolf_checks += 1;
        if stable.windows(2).any(|w| w[0].matched != w[1].matched) {
            self.stats.lone_wolf_violations += 1;
        }
        Ok(stable)
    }

    /// Stable first periods against `levels`, each followed by every solution
    /// of its continuation.
    pub fn candidates_with(
        &mut self,
        fam: &ConjectureFamily,
        key: &ContinuationKey,
        levels: &[i32],
    ) -> Result<CandidateSet> {
        let mut out = CandidateSet::default();
        for mu in self.stable_pairings(key, levels)? {
            match self.next(key, mu.matched) {
                None => {
                    out.plans.insert(Plan::new(key.t, mu.pairs.clone(), None));
                }
                Some(nk) => {
                    let tails = self.solutions(fam, &nk)?;
                    if tails.is_empty() {
                        out.empty_continuations.push(mu.pairs.clone());
                    }
                    for tail in tails.iter() {
                        if out.plans.len() >= self.config.max_matchings {
                            return Err(self.size_error("candidate set"));
                        }
                        out.plans.insert(Plan::new(key.t, mu.pairs.clone(), Some(tail.clone())));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Candidate plans of `fam` at `key`.
    pub fn candidates(&mut self, fam: &ConjectureFamily, key: &ContinuationKey) -> Result<CandidateSet> {
        let th = self.thresholds(fam, key)?;
        self.candidates_with(fam, key, &th.levels)
    }
}

/// Number of one-period matchings between pools of sizes `na` and `nb`.
pub fn partial_injections(na: usize, nb: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for k in 0..=na.min(nb) {
        if k > 0 {
            // C(na,k) C(nb,k) k! from the previous term.
            term = term * (na - k + 1) as u128 * (nb - k + 1) as u128 / k as u128;
        }
        total = total.saturating_add(term);
    }
    total
}
