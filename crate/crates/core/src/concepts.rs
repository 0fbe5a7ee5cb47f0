//! The named solution concepts and their conjecture rules.
//!
//! | concept  | an agent left single at `t` fears...                                   |
//! |----------|------------------------------------------------------------------------|
//! | `stable` | staying single forever                                                 |
//! | `agree`  | any continuation that is itself an `agree` solution                     |
//! | `re`     | any solution of the market where the agent arrives one period later     |
//! | `ds`     | a period stable among those matching, followed by a `ds` continuation   |
//! | `cvr-ds` | as `ds`, with the period judged against everyone's own fears (fixed point) |
//! | `sds`    | `re`-style fears, widened until every candidate is feared by its singles |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentIx, AgentSet};
use crate::economy::Economy;
use crate::engine::{ConjectureFamily, Engine, EngineStats, Outcome, PeriodPairs, Plan, PlanSet, SolverConfig, Worst};
use crate::error::{Error, Result};
use crate::framework::{
    candidate_set, check_consistency, filter_with_witnesses, phi_solution_set, BlockWitness, ConsistencyVerdict,
};
use crate::matching::{Continuation, ContinuationKey, DynamicMatching};
use crate::stability::{StaticEconomy, Threshold};

/// Built-in solution concepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Concept {
    /// Conjectures are perpetual singleness; period-by-period stability.
    #[serde(rename = "stable")]
    Stable,
    #[serde(rename = "agree")]
    Agree,
    #[serde(rename = "re")]
    Re,
    #[serde(rename = "ds")]
    Ds,
    #[serde(rename = "cvr-ds")]
    CvrDs,
    #[serde(rename = "sds")]
    Sds,
}

impl Concept {
    pub const ALL: [Concept; 6] = [
        Concept::Stable,
        Concept::Agree,
        Concept::Re,
        Concept::Ds,
        Concept::CvrDs,
        Concept::Sds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Concept::Stable => "stable",
            Concept::Agree => "agree",
            Concept::Re => "re",
            Concept::Ds => "ds",
            Concept::CvrDs => "cvr-ds",
            Concept::Sds => "sds",
        }
    }

    pub fn family(self) -> ConjectureFamily {
        ConjectureFamily::Concept(self)
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Concept {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Concept::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown concept `{s}`"))
    }
}

/// An economy in which some period-1 arrivals sit out period 1.
#[derive(Clone, Debug)]
pub struct DeferredEconomy {
    pub base: Economy,
    pub deferred: AgentSet,
}

impl DeferredEconomy {
    pub fn new(base: Economy, names: &[&str]) -> Result<Self> {
        let mut deferred = AgentSet::EMPTY;
        for name in names {
            let k = base.agent_ix(name)?;
            if base.arrival(k) != 1 {
                return Err(Error::NotAvailable {
                    agent: name.to_string(),
                    period: 1,
                });
            }
            deferred = deferred.with(k);
        }
        Ok(DeferredEconomy { base, deferred })
    }

    /// The state of the base economy's engine that this economy corresponds to.
    pub fn key(&self) -> ContinuationKey {
        self.deferred
            .iter()
            .fold(ContinuationKey::root(&self.base), |key, k| key.defer(&self.base, k))
    }

    /// A standalone economy with the deferred agents arriving at period 2.
    pub fn to_economy(&self) -> Economy {
        Continuation::from_key(&self.base, self.key()).economy
    }
}

/// Rational-valued check that `pairs` is stable among the agents it matches,
/// each agent requiring at least its threshold.
pub fn stability_among_matched(econ: &Economy, pairs: &[(AgentIx, AgentIx)], thresholds: &[Threshold]) -> bool {
    let members: AgentSet = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut sub = StaticEconomy::over(econ, members);
    for k in members.iter() {
        sub.set_threshold(k, thresholds[k].clone());
    }
    sub.is_stable(pairs)
}

/// Record of the decreasing iteration defining `cvr-ds` conjectures at one state.
#[derive(Debug)]
pub struct CvrTrace {
    pub key: ContinuationKey,
    pub pairings: Arc<Vec<PeriodPairs>>,
    /// Whether each pairing's continuation has at least one solution.
    pub continuation_nonempty: Vec<bool>,
    /// Worst continuation outcome of each agent after each pairing.
    continuation_worst: Vec<Option<Arc<Vec<Worst>>>>,
    /// `rounds[n - 1][i]`: pairing `i` survives into iterate `n`.
    pub rounds: Vec<Vec<bool>>,
    /// `worst[n][k]`: worst outcome of `k` over iterate `n`; iterate 0 is
    /// every plan leaving `k` single.
    pub worst: Vec<Vec<Worst>>,
    /// The limit reproduces itself when its own thresholds are applied.
    pub identity_holds: bool,
}

impl CvrTrace {
    /// Number of iterates after the initial one.
    pub fn iterations(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_round(&self) -> &[bool] {
        self.rounds.last().expect("at least one round")
    }

    /// Whether pairing `i` followed by a solution belongs to iterate `n >= 1` for `k`.
    pub fn in_iterate(&self, n: usize, i: usize, k: AgentIx) -> bool {
        self.rounds[n - 1][i] && !self.pairings[i].matched.contains(k)
    }

    fn continuation_outcome(&self, i: usize, k: AgentIx) -> Outcome {
        match &self.continuation_worst[i] {
            None => Outcome::Single,
            Some(w) => match w[k] {
                Worst::Outcome(o) => o,
                Worst::Empty => Outcome::Single,
            },
        }
    }
}

/// Record of the increasing iteration defining `sds` conjectures at one state.
#[derive(Debug)]
pub struct SdsTrace {
    pub key: ContinuationKey,
    pub agents: Vec<AgentIx>,
    /// `iterates[n][i]` is the set for `agents[i]` after round `n`; the last
    /// entry is the fixed point.
    pub iterates: Vec<Vec<Arc<PlanSet>>>,
}

impl SdsTrace {
    pub fn limit(&self, k: AgentIx) -> Option<&Arc<PlanSet>> {
        let i = self.agents.iter().position(|&a| a == k)?;
        Some(&self.iterates.last().expect("nonempty")[i])
    }
}

impl<'e> Engine<'e> {
    fn zero_levels(&self) -> Vec<i32> {
        (0..self.econ.len()).map(|k| self.ranks.zero(k)).collect()
    }

    /// Passes the first-period test of concepts that restrict period `t`.
    fn first_period_ok(&mut self, c: Concept, key: &ContinuationKey, mu: &PeriodPairs) -> Result<bool> {
        Ok(match c {
            Concept::Ds => self.stable_among_matched(mu, &self.zero_levels()),
            Concept::CvrDs => {
                let trace = self.cvr_trace(key)?;
                let levels = self.trace_levels(key, trace.worst.last().expect("nonempty"));
                self.stable_among_matched(mu, &levels)
            }
            _ => true,
        })
    }

    fn trace_levels(&self, key: &ContinuationKey, worst: &[Worst]) -> Vec<i32> {
        let mut levels = vec![crate::engine::LEVEL_MIN; self.econ.len()];
        for k in key.pool.iter() {
            levels[k] = self.level(k, &worst[k], key.t);
        }
        levels
    }

    /// Worst outcome of `k` over pairings leaving it single that pass the
    /// concept's first-period test, each followed by a continuation solution.
    fn worst_over_pairings(&mut self, c: Concept, key: &ContinuationKey, k: AgentIx) -> Result<Worst> {
        let fam = c.family();
        let mut outcomes = Vec::new();
        for mu in self.pairings(key.pool)?.iter() {
            if mu.matched.contains(k) || !self.first_period_ok(c, key, mu)? {
                continue;
            }
            match self.next(key, mu.matched) {
                None => outcomes.push(Outcome::Single),
                Some(nk) => {
                    if let Worst::Outcome(o) = self.worst_in_solutions(&fam, &nk)?[k] {
                        outcomes.push(o);
                    }
                }
            }
        }
        Ok(self.min_outcome(k, key.t, outcomes))
    }

    pub(crate) fn concept_worst(&mut self, c: Concept, key: &ContinuationKey, k: AgentIx) -> Result<Worst> {
        match c {
            Concept::Stable => Ok(Worst::Outcome(Outcome::Single)),
            Concept::Agree | Concept::Ds => self.worst_over_pairings(c, key, k),
            Concept::Re => {
                let deferred = self.defer(key, k);
                Ok(self.worst_in_solutions(&c.family(), &deferred)?[k])
            }
            Concept::CvrDs => Ok(self.cvr_trace(key)?.worst.last().expect("nonempty")[k]),
            Concept::Sds => {
                let trace = self.sds_trace(key)?;
                let set = trace.limit(k).expect("pool agent").clone();
                Ok(self.min_outcome(k, key.t, set.iter().map(|p| p.outcome(k))))
            }
        }
    }

    fn tail_is_solution(&mut self, c: Concept, key: &ContinuationKey, plan: &Plan) -> Result<bool> {
        match (self.next(key, plan.first_matched()), plan.tail()) {
            (None, None) => Ok(true),
            (Some(nk), Some(tail)) => Ok(self.solutions(&c.family(), &nk)?.contains(tail)),
            _ => Ok(false),
        }
    }

    pub(crate) fn concept_contains(
        &mut self,
        c: Concept,
        key: &ContinuationKey,
        k: AgentIx,
        plan: &Plan,
    ) -> Result<bool> {
        match c {
            Concept::Stable => Ok(plan.is_all_single()),
            Concept::Agree | Concept::Ds | Concept::CvrDs => {
                let mu = plan.first_period();
                Ok(self.first_period_ok(c, key, &mu)? && self.tail_is_solution(c, key, plan)?)
            }
            Concept::Re => {
                let deferred = self.defer(key, k);
                Ok(self.solutions(&c.family(), &deferred)?.contains(plan))
            }
            Concept::Sds => Ok(self.sds_trace(key)?.limit(k).is_some_and(|s| s.contains(plan))),
        }
    }

    pub(crate) fn concept_conjectures(
        &mut self,
        c: Concept,
        key: &ContinuationKey,
        k: AgentIx,
    ) -> Result<Arc<PlanSet>> {
        if !key.pool.contains(k) {
            return Err(Error::NotAvailable {
                agent: self.econ.name(k).to_string(),
                period: key.t,
            });
        }
        match c {
            Concept::Stable => Ok(Arc::new(
                [Plan::all_single(key.t, self.econ.horizon())].into_iter().collect(),
            )),
            Concept::Re => self.solutions(&c.family(), &self.defer(key, k)),
            Concept::Sds => Ok(self.sds_trace(key)?.limit(k).expect("pool agent").clone()),
            Concept::Agree | Concept::Ds | Concept::CvrDs => {
                let fam = c.family();
                let mut out = PlanSet::new();
                for mu in self.pairings(key.pool)?.iter() {
                    if mu.matched.contains(k) || !self.first_period_ok(c, key, mu)? {
                        continue;
                    }
                    match self.next(key, mu.matched) {
                        None => {
                            out.insert(Plan::new(key.t, mu.pairs.clone(), None));
                        }
                        Some(nk) => {
                            for tail in self.solutions(&fam, &nk)?.iter() {
                                if out.len() >= self.config.max_matchings {
                                    return Err(self.size_error("conjecture set"));
                                }
                                out.insert(Plan::new(key.t, mu.pairs.clone(), Some(tail.clone())));
                            }
                        }
                    }
                }
                Ok(Arc::new(out))
            }
        }
    }

    /// Worst outcome `k` could meet under any plan leaving it single at `key.t`:
    /// staying single, or pairing with any reachable partner at any later date.
    pub fn worst_any(&self, key: &ContinuationKey, k: AgentIx) -> Worst {
        let econ = self.econ;
        let mut outcomes = vec![Outcome::Single];
        for j in key.participants(econ).iter() {
            if econ.side(j) == econ.side(k) {
                continue;
            }
            let earliest = (key.t + 1).max(econ.arrival(j));
            for period in earliest..=econ.horizon() {
                outcomes.push(Outcome::Matched { partner: j, period });
            }
        }
        self.min_outcome(k, key.t, outcomes)
    }

    /// The decreasing iteration for `cvr-ds` conjectures at `key`.
    pub fn cvr_trace(&mut self, key: &ContinuationKey) -> Result<Arc<CvrTrace>> {
        if let Some(trace) = self.cvr.get(key) {
            return Ok(trace.clone());
        }
        let fam = Concept::CvrDs.family();
        let pairings = self.pairings(key.pool)?;
        let mut continuation_nonempty = Vec::with_capacity(pairings.len());
        let mut continuation_worst = Vec::with_capacity(pairings.len());
        let mut solution_counts = Vec::with_capacity(pairings.len());
        let mut plan_counts = Vec::with_capacity(pairings.len());
        for mu in pairings.iter() {
            match self.next(key, mu.matched) {
                None => {
                    continuation_nonempty.push(true);
                    continuation_worst.push(None);
                    solution_counts.push(1u128);
                    plan_counts.push(1u128);
                }
                Some(nk) => {
                    let sols = self.solutions(&fam, &nk)?;
                    continuation_nonempty.push(!sols.is_empty());
                    solution_counts.push(sols.len() as u128);
                    continuation_worst.push(Some(self.worst_in_solutions(&fam, &nk)?));
                    plan_counts.push(self.count_plans(&nk)?);
                }
            }
        }
        let mut trace = CvrTrace {
            key: *key,
            pairings: pairings.clone(),
            continuation_nonempty,
            continuation_worst,
            rounds: Vec::new(),
            worst: Vec::new(),
            identity_holds: false,
        };
        let n_agents = self.econ.len();
        let mut initial = vec![Worst::Empty; n_agents];
        for k in key.pool.iter() {
            initial[k] = self.worst_any(key, k);
        }
        trace.worst.push(initial);
        loop {
            let levels = self.trace_levels(key, trace.worst.last().expect("nonempty"));
            let round = self.cvr_round(&trace, &levels);
            let worst = self.cvr_worst(key, &trace, &round);
            let converged = match trace.rounds.last() {
                Some(prev) => same_iterate(key.pool, &pairings, prev, &round),
                None => key.pool.iter().all(|k| {
                    let (all, kept) = pairings
                        .iter()
                        .enumerate()
                        .filter(|(_, mu)| !mu.matched.contains(k))
                        .fold((0u128, 0u128), |(all, kept), (i, _)| {
                            (
                                all + plan_counts[i],
                                kept + if round[i] { solution_counts[i] } else { 0 },
                            )
                        });
                    all == kept
                }),
            };
            trace.rounds.push(round);
            trace.worst.push(worst);
            if converged {
                break;
            }
        }
        let levels = self.trace_levels(key, trace.worst.last().expect("nonempty"));
        let again = self.cvr_round(&trace, &levels);
        trace.identity_holds = same_iterate(key.pool, &pairings, trace.final_round(), &again);
        for k in key.pool.iter() {
            if trace.worst.last().expect("nonempty")[k] == Worst::Empty {
                return Err(Error::EmptyFixedPoint(self.econ.name(k).to_string()));
            }
        }
        let trace = Arc::new(trace);
        self.cvr.insert(*key, trace.clone());
        Ok(trace)
    }

    fn cvr_round(&self, trace: &CvrTrace, levels: &[i32]) -> Vec<bool> {
        trace
            .pairings
            .iter()
            .enumerate()
            .map(|(i, mu)| trace.continuation_nonempty[i] && self.stable_among_matched(mu, levels))
            .collect()
    }

    fn cvr_worst(&self, key: &ContinuationKey, trace: &CvrTrace, round: &[bool]) -> Vec<Worst> {
        let mut worst = vec![Worst::Empty; self.econ.len()];
        for k in key.pool.iter() {
            let outcomes = trace
                .pairings
                .iter()
                .enumerate()
                .filter(|&(i, mu)| round[i] && !mu.matched.contains(k))
                .map(|(i, _)| trace.continuation_outcome(i, k));
            worst[k] = self.min_outcome(k, key.t, outcomes);
        }
        worst
    }

    /// The increasing iteration for `sds` conjectures at `key`.
    pub fn sds_trace(&mut self, key: &ContinuationKey) -> Result<Arc<SdsTrace>> {
        if let Some(trace) = self.sds.get(key) {
            return Ok(trace.clone());
        }
        let fam = Concept::Sds.family();
        let agents = key.pool.to_vec();
        let mut first = Vec::with_capacity(agents.len());
        for &k in &agents {
            let deferred = self.defer(key, k);
            first.push(self.solutions(&fam, &deferred)?);
        }
        let mut iterates = vec![first];
        loop {
            let prev = iterates.last().expect("nonempty").clone();
            let mut levels = vec![crate::engine::LEVEL_MIN; self.econ.len()];
            for (i, &k) in agents.iter().enumerate() {
                let w = self.min_outcome(k, key.t, prev[i].iter().map(|p| p.outcome(k)));
                levels[k] = self.level(k, &w, key.t);
            }
            let candidates = self.candidates_with(&fam, key, &levels)?.plans;
            let mut grew = false;
            let mut next = Vec::with_capacity(agents.len());
            for (i, &k) in agents.iter().enumerate() {
                let added: Vec<&Plan> = candidates
                    .iter()
                    .filter(|p| !p.first_matched().contains(k) && !prev[i].contains(*p))
                    .collect();
                if added.is_empty() {
                    next.push(prev[i].clone());
                } else {
                    grew = true;
                    let mut set = (*prev[i]).clone();
                    set.extend(added.into_iter().cloned());
                    next.push(Arc::new(set));
                }
            }
            if !grew {
                break;
            }
            iterates.push(next);
        }
        let trace = Arc::new(SdsTrace {
            key: *key,
            agents,
            iterates,
        });
        self.sds.insert(*key, trace.clone());
        Ok(trace)
    }
}

/// Two rounds define the same iterate when they agree on every pairing that
/// leaves someone in the pool single.
fn same_iterate(pool: AgentSet, pairings: &[PeriodPairs], a: &[bool], b: &[bool]) -> bool {
    pairings
        .iter()
        .enumerate()
        .all(|(i, mu)| mu.matched == pool || a[i] == b[i])
}

/// Everything computed for one economy and concept.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub concept: Concept,
    pub config: SolverConfig,
    /// Solutions from the period-by-period recursion, sorted.
    pub solutions: Vec<DynamicMatching>,
    pub candidates: Vec<DynamicMatching>,
    /// Stable first periods whose continuation has no solution.
    pub empty_continuations: usize,
    /// Consistency at each candidate, in candidate order.
    pub consistency: Vec<ConsistencyVerdict>,
    /// Number of dynamic matchings examined by the direct filter.
    pub enumerated: usize,
    /// Matchings failing the direct check, each with its first violation.
    pub rejected: Vec<(DynamicMatching, BlockWitness)>,
    /// The direct filter and the recursion returned the same set.
    pub definitions_agree: bool,
    pub stats: EngineStats,
}

/// Solve `econ` under `concept`, cross-checking the two characterizations.
pub fn solve(econ: &Economy, concept: Concept, config: SolverConfig) -> Result<SolveReport> {
    let mut engine = Engine::new(econ, config);
    let fam = concept.family();
    let solutions = phi_solution_set(&mut engine, &fam)?;
    let (filtered, rejected, enumerated) = filter_with_witnesses(&mut engine, &fam)?;
    let cands = candidate_set(&mut engine, &fam)?;
    let mut consistency = Vec::with_capacity(cands.matchings.len());
    for m in &cands.matchings {
        consistency.push(check_consistency(&mut engine, &fam, m)?);
    }
    Ok(SolveReport {
        concept,
        config,
        definitions_agree: filtered == solutions,
        solutions,
        candidates: cands.matchings,
        empty_continuations: cands.empty_continuations,
        consistency,
        enumerated,
        rejected,
        stats: engine.stats().clone(),
    })
}
