//! Conjecture sets, solution checks, candidate matchings and consistency.
//!
//! A matching is a solution for a conjecture family when, in every period,
//! no available agent does worse than everything it conjectures and no
//! available pair would rather match each other now. [`phi_solution_set`]
//! builds the set period by period; [`phi_solution_set_filter`] checks every
//! matching directly. The two are cross-checked in tests.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::agents::AgentIx;
use crate::concepts::Concept;
use crate::economy::{payoff, Economy, Payoff, Side};
use crate::engine::{ConjectureFamily, Engine, Plan, Thresholds, Worst};
use crate::error::{Error, Result};
use crate::matching::{enumerate_matchings, ContinuationKey, DynamicMatching, History};
use crate::stability::EmptyPolicy;

/// The matchings an agent considers possible if it stays single at `at.t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjectureSet {
    pub owner: AgentIx,
    pub at: History,
    pub matchings: Vec<DynamicMatching>,
}

/// `k`'s conjecture set under `fam` after history `h`.
pub fn conjecture_set(
    engine: &mut Engine<'_>,
    fam: &ConjectureFamily,
    h: &History,
    k: AgentIx,
) -> Result<ConjectureSet> {
    let econ = engine.economy();
    let key = ContinuationKey::for_history(econ, h)?;
    if !key.pool.contains(k) {
        let agent = econ.agents().get(k).map_or(format!("#{k}"), |a| a.name.clone());
        return Err(Error::NotAvailable { agent, period: h.t });
    }
    let plans = engine.conjectures(fam, &key, k)?;
    let mut matchings: Vec<DynamicMatching> = plans.iter().map(|p| p.to_matching(econ.horizon(), h)).collect();
    matchings.sort();
    Ok(ConjectureSet {
        owner: k,
        at: h.clone(),
        matchings,
    })
}

/// Conjectures that only require the continuation to be an `agree` solution.
pub fn agree_conjectures(engine: &mut Engine<'_>, h: &History, k: AgentIx) -> Result<ConjectureSet> {
    conjecture_set(engine, &Concept::Agree.family(), h, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessKind {
    IndividualA,
    IndividualB,
    Pair,
}

impl WitnessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WitnessKind::IndividualA => "individual-a",
            WitnessKind::IndividualB => "individual-b",
            WitnessKind::Pair => "pair",
        }
    }
}

/// One side of a violated comparison: `alternative > current` for `agent`.
///
/// For individual blocks the alternative is the agent's worst conjectured
/// payoff, or `None` when its conjecture set is empty under the strict policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub agent: AgentIx,
    pub alternative: Option<Payoff>,
    pub current: Payoff,
}

/// First violation found when checking a matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockWitness {
    pub kind: WitnessKind,
    pub period: usize,
    pub agents: Vec<AgentIx>,
    pub comparisons: Vec<Comparison>,
}

impl BlockWitness {
    /// Recomputes the witness from the economy and matching. Individual
    /// blocks take the conjectured value from the witness itself.
    pub fn replay(&self, econ: &Economy, m: &DynamicMatching) -> bool {
        let t = self.period;
        self.comparisons.iter().all(|c| {
            let Ok(current) = payoff(econ, m, c.agent, t) else {
                return false;
            };
            let alternative = match (self.kind, &self.agents[..]) {
                (WitnessKind::Pair, &[a, b]) => {
                    let other = if c.agent == a { b } else { a };
                    Some(Payoff(econ.utility(c.agent, other).clone()))
                }
                _ => c.alternative.clone(),
            };
            current == c.current && alternative == c.alternative && alternative.is_none_or(|alt| alt > current)
        })
    }
}

/// Verdict of the direct solution check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolutionVerdict {
    Solution,
    Blocked(BlockWitness),
}

/// Direct checker over precomputed thresholds; shareable across threads.
pub struct DirectChecker<'a> {
    econ: &'a Economy,
    policy: EmptyPolicy,
    thresholds: HashMap<ContinuationKey, Arc<Thresholds>>,
}

fn key_at(econ: &Economy, m: &DynamicMatching, t: usize) -> ContinuationKey {
    ContinuationKey {
        t,
        pool: econ.arrived_by(t).minus(m.matched_by(t - 1)),
        deferred: crate::agents::AgentSet::EMPTY,
    }
}

impl<'a> DirectChecker<'a> {
    /// Computes the thresholds every period of every matching in `ms` needs.
    pub fn prepare(engine: &mut Engine<'a>, fam: &ConjectureFamily, ms: &[DynamicMatching]) -> Result<Self> {
        let econ = engine.economy();
        let mut thresholds = HashMap::new();
        for m in ms {
            for t in 1..=econ.horizon() {
                let key = key_at(econ, m, t);
                if let Entry::Vacant(slot) = thresholds.entry(key) {
                    slot.insert(engine.thresholds(fam, &key)?);
                }
            }
        }
        Ok(DirectChecker {
            econ,
            policy: engine.config().empty_conjectures,
            thresholds,
        })
    }

    /// Checks every period of `m` with exact payoffs; individual blocks come
    /// before pair blocks within a period.
    pub fn check(&self, m: &DynamicMatching) -> SolutionVerdict {
        let econ = self.econ;
        for t in 1..=econ.horizon() {
            let key = key_at(econ, m, t);
            let th = &self.thresholds[&key];
            let current: Vec<(AgentIx, Payoff)> = key
                .pool
                .iter()
                .map(|k| (k, payoff(econ, m, k, t).expect("pool agent is available")))
                .collect();
            let value = |k: AgentIx| &current.iter().find(|(j, _)| *j == k).expect("pool agent").1;
            for (k, now) in &current {
                let alternative = match th.worst[*k].expect("pool agent") {
                    Worst::Empty => match self.policy {
                        EmptyPolicy::Vacuous => continue,
                        EmptyPolicy::Strict => None,
                    },
                    Worst::Outcome(o) => {
                        let (partner, delay) = match o {
                            crate::engine::Outcome::Single => (None, 0),
                            crate::engine::Outcome::Matched { partner, period } => (Some(partner), period - t),
                        };
                        let alt = Payoff(econ.discounted(*k, partner, delay));
                        if *now >= alt {
                            continue;
                        }
                        Some(alt)
                    }
                };
                let kind = if econ.side(*k) == Side::A {
                    WitnessKind::IndividualA
                } else {
                    WitnessKind::IndividualB
                };
                return SolutionVerdict::Blocked(BlockWitness {
                    kind,
                    period: t,
                    agents: vec![*k],
                    comparisons: vec![Comparison {
                        agent: *k,
                        alternative,
                        current: now.clone(),
                    }],
                });
            }
            for a in key.pool_side(econ, Side::A).iter() {
                for b in key.pool_side(econ, Side::B).iter() {
                    let (ua, vb) = (econ.utility(a, b), econ.utility(b, a));
                    if ua > &value(a).0 && vb > &value(b).0 {
                        return SolutionVerdict::Blocked(BlockWitness {
                            kind: WitnessKind::Pair,
                            period: t,
                            agents: vec![a, b],
                            comparisons: vec![
                                Comparison {
                                    agent: a,
                                    alternative: Some(Payoff(ua.clone())),
                                    current: value(a).clone(),
                                },
                                Comparison {
                                    agent: b,
                                    alternative: Some(Payoff(vb.clone())),
                                    current: value(b).clone(),
                                },
                            ],
                        });
                    }
                }
            }
        }
        SolutionVerdict::Solution
    }
}

/// Checks `m` directly against every period's conjectures and blocking pairs.
pub fn is_phi_solution(
    engine: &mut Engine<'_>,
    fam: &ConjectureFamily,
    m: &DynamicMatching,
) -> Result<SolutionVerdict> {
    DynamicMatching::from_formations(engine.economy(), m.formations().to_vec())?;
    let checker = DirectChecker::prepare(engine, fam, std::slice::from_ref(m))?;
    Ok(checker.check(m))
}

fn plans_to_sorted(engine: &Engine<'_>, plans: impl Iterator<Item = Plan>) -> Vec<DynamicMatching> {
    let horizon = engine.economy().horizon();
    let root = History::root();
    let mut out: Vec<DynamicMatching> = plans.map(|p| p.to_matching(horizon, &root)).collect();
    out.sort();
    out
}

/// Solutions built period by period from continuation solutions, sorted.
pub fn phi_solution_set(engine: &mut Engine<'_>, fam: &ConjectureFamily) -> Result<Vec<DynamicMatching>> {
    let root = engine.root();
    let set = engine.solutions(fam, &root)?;
    Ok(plans_to_sorted(engine, set.iter().cloned()))
}

/// Every matching checked directly: the solutions (sorted), each rejected
/// matching with its witness (enumeration order), and the number examined.
#[allow(clippy::type_complexity)]
pub fn filter_with_witnesses(
    engine: &mut Engine<'_>,
    fam: &ConjectureFamily,
) -> Result<(Vec<DynamicMatching>, Vec<(DynamicMatching, BlockWitness)>, usize)> {
    let econ = engine.economy();
    let all = enumerate_matchings(econ, &History::root(), None, engine.config().max_matchings)?;
    let checker = DirectChecker::prepare(engine, fam, &all)?;
    let run = || all.par_iter().map(|m| checker.check(m)).collect::<Vec<_>>();
    let verdicts = match engine.config().threads {
        0 => run(),
        n => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidEconomy(format!("thread pool: {e}")))?
            .install(run),
    };
    let mut solutions = Vec::new();
    let mut rejected = Vec::new();
    for (m, verdict) in all.iter().zip(verdicts) {
        match verdict {
            SolutionVerdict::Solution => solutions.push(m.clone()),
            SolutionVerdict::Blocked(w) => rejected.push((m.clone(), w)),
        }
    }
    solutions.sort();
    Ok((solutions, rejected, all.len()))
}

/// Solutions found by checking every matching directly, sorted.
pub fn phi_solution_set_filter(engine: &mut Engine<'_>, fam: &ConjectureFamily) -> Result<Vec<DynamicMatching>> {
    Ok(filter_with_witnesses(engine, fam)?.0)
}

/// Candidate matchings of the whole economy.
#[derive(Clone, Debug, Default)]
pub struct Candidates {
    pub matchings: Vec<DynamicMatching>,
    /// Stable first periods whose continuation has no solution.
    pub empty_continuations: usize,
}

/// First periods stable in the one-period market induced by `fam`'s
/// conjectures, each followed by every continuation solution.
pub fn candidate_set(engine: &mut Engine<'_>, fam: &ConjectureFamily) -> Result<Candidates> {
    let root = engine.root();
    let set = engine.candidates(fam, &root)?;
    Ok(Candidates {
        matchings: plans_to_sorted(engine, set.plans.into_iter()),
        empty_continuations: set.empty_continuations.len(),
    })
}

/// True iff every period of `m` is stable in the one-period market induced
/// at the history `m` itself produces.
pub fn is_periodwise_candidate(engine: &mut Engine<'_>, fam: &ConjectureFamily, m: &DynamicMatching) -> Result<bool> {
    let econ = engine.economy();
    for t in 1..=econ.horizon() {
        let key = key_at(econ, m, t);
        let th = engine.thresholds(fam, &key)?;
        let mu = Plan::from_matching(m, t).first_period();
        if !engine.stable_in_pool(&key, &mu, &th.levels) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Consistency of one candidate: who was checked and who failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyVerdict {
    pub pass: bool,
    /// `(period, agent)` for every available agent left single.
    pub checked: Vec<(usize, AgentIx)>,
    pub failures: Vec<(usize, AgentIx)>,
}

/// At every period, each available agent that `m_star` leaves single must
/// count `m_star` among its own conjectures.
pub fn check_consistency(
    engine: &mut Engine<'_>,
    fam: &ConjectureFamily,
    m_star: &DynamicMatching,
) -> Result<ConsistencyVerdict> {
    let econ = engine.economy();
    DynamicMatching::from_formations(econ, m_star.formations().to_vec())?;
    let root = engine.root();
    if !engine
        .candidates(fam, &root)?
        .plans
        .contains(&Plan::from_matching(m_star, 1))
    {
        return Err(Error::NotACandidate(crate::matching::format_matching(econ, m_star)));
    }
    consistency_along(engine, fam, m_star)
}

fn consistency_along(
    engine: &mut Engine<'_>,
    fam: &ConjectureFamily,
    m: &DynamicMatching,
) -> Result<ConsistencyVerdict> {
    let econ = engine.economy();
    let mut checked = Vec::new();
    let mut failures = Vec::new();
    for t in 1..=econ.horizon() {
        let key = key_at(econ, m, t);
        let plan = Plan::from_matching(m, t);
        for k in key.pool.iter() {
            if plan.first_matched().contains(k) {
                continue;
            }
            checked.push((t, k));
            if !engine.conjecture_contains(fam, &key, k, &plan)? {
                failures.push((t, k));
            }
        }
    }
    Ok(ConsistencyVerdict {
        pass: failures.is_empty(),
        checked,
        failures,
    })
}

/// Consistency required at every solution rather than only at candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedVerdict {
    pub pass: bool,
    pub solutions_checked: usize,
    /// First violation in sorted solution order: matching, period, agent.
    pub violation: Option<(DynamicMatching, usize, AgentIx)>,
    pub violations: usize,
}

pub fn check_generalized_consistency(engine: &mut Engine<'_>, fam: &ConjectureFamily) -> Result<GeneralizedVerdict> {
    let solutions = phi_solution_set(engine, fam)?;
    let mut violation = None;
    let mut violations = 0;
    for m in &solutions {
        let v = consistency_along(engine, fam, m)?;
        if let Some(&(t, k)) = v.failures.first() {
            violations += 1;
            violation.get_or_insert((m.clone(), t, k));
        }
    }
    Ok(GeneralizedVerdict {
        pass: violations == 0,
        solutions_checked: solutions.len(),
        violation,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::int;
    use crate::engine::SolverConfig;
    use crate::matching::Formation;

    fn one_by_one(u: i64, v: i64) -> Economy {
        Economy::builder(1)
            .agent("a", Side::A, 1, int(1))
            .agent("b", Side::B, 1, int(1))
            .utility("a", "b", int(u))
            .utility("b", "a", int(v))
            .build()
            .unwrap()
    }

    #[test]
    fn immediate_match_is_the_only_candidate_under_singleness() {
        let econ = one_by_one(2, 3);
        let mut engine = Engine::new(&econ, SolverConfig::default());
        let fam = Concept::Stable.family();
        let cands = candidate_set(&mut engine, &fam).unwrap();
        let paired = DynamicMatching::from_formations(&econ, vec![Formation { period: 1, a: 0, b: 1 }]).unwrap();
        assert_eq!(cands.matchings, vec![paired.clone()]);
        assert_eq!(phi_solution_set(&mut engine, &fam).unwrap(), vec![paired]);
    }

    #[test]
    fn witnesses_replay() {
        let econ = one_by_one(2, 3);
        let mut engine = Engine::new(&econ, SolverConfig::default());
        let single = DynamicMatching::empty(1);
        let SolutionVerdict::Blocked(w) = is_phi_solution(&mut engine, &Concept::Re.family(), &single).unwrap() else {
            panic!("unmatched pair should block");
        };
        assert_eq!(w.kind, WitnessKind::Pair);
        assert!(w.replay(&econ, &single));
    }

    #[test]
    fn everyone_single_passes_when_nobody_is_acceptable() {
        let econ = one_by_one(-1, -1);
        let mut engine = Engine::new(&econ, SolverConfig::default());
        for c in Concept::ALL {
            let fam = c.family();
            let single = DynamicMatching::empty(1);
            assert_eq!(
                is_phi_solution(&mut engine, &fam, &single).unwrap(),
                SolutionVerdict::Solution
            );
            let v = check_consistency(&mut engine, &fam, &single).unwrap();
            assert!(v.pass, "{c}");
            assert_eq!(v.checked, vec![(1, 0), (1, 1)]);
        }
    }

    #[test]
    fn non_candidates_are_refused() {
        let econ = one_by_one(2, 3);
        let mut engine = Engine::new(&econ, SolverConfig::default());
        let single = DynamicMatching::empty(1);
        assert!(matches!(
            check_consistency(&mut engine, &Concept::Stable.family(), &single),
            Err(Error::NotACandidate(_))
        ));
    }

    #[test]
    fn empty_economy_has_the_empty_matching() {
        let econ = Economy::builder(2).build().unwrap();
        let mut engine = Engine::new(&econ, SolverConfig::default());
        for c in Concept::ALL {
            let fam = c.family();
            assert_eq!(
                phi_solution_set(&mut engine, &fam).unwrap(),
                vec![DynamicMatching::empty(2)]
            );
            assert_eq!(
                phi_solution_set_filter(&mut engine, &fam).unwrap(),
                vec![DynamicMatching::empty(2)]
            );
        }
    }
}
