//! Acceptance suite: one line per criterion, then a single assertion.
//!
//! Every comparison is exact (rational arithmetic, set equality), so the
//! pinned tolerance is zero throughout. Corpus sizes and seeds are pinned
//! below so reruns examine the same economies.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use dynmatch::dsl::{parse_document, validate_ordinal};
use dynmatch::engine::PlanSet;
use dynmatch::framework::{candidate_set, check_consistency, filter_with_witnesses, phi_solution_set};
use dynmatch::matching::enumerate_matchings;
use dynmatch::stability::StaticMatching;
use dynmatch::{
    fixtures, reproduce, solve, Concept, ConjectureFamily, ConjectureRule, ContinuationKey, DynamicMatching, Economy,
    Engine, History, Plan, Side, SolverConfig, StaticEconomy,
};
use rand::Rng;

/// Exact comparisons only.
const TOLERANCE: u32 = 0;
const CORPUS_SEED: u64 = 0x5eed_0001;
const CORPUS_SIZE: usize = 300;
const STATIC_SEED: u64 = 0x5eed_0002;
const STATIC_ECONOMIES: usize = 200;
const STATIC_MAX_SIDE: usize = 4;
const RULE_SEED: u64 = 0x5eed_0003;
const FAMILIES_PER_ECONOMY: u64 = 3;
const DA_SEED: u64 = 0x5eed_0004;
const DA_ECONOMIES: usize = 300;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: dynmatch::Error) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let claims = reproduce::example1_claims(&fixtures::example1(), SolverConfig::default());
    claims_outcome(&claims)
}

fn criterion_2() -> Outcome {
    let claims = reproduce::example2_claims(&fixtures::example2(), SolverConfig::default());
    claims_outcome(&claims)
}

fn claims_outcome(claims: &[reproduce::Claim]) -> Outcome {
    for c in claims {
        println!(
            "    {} {}: {} ({})",
            c.id,
            if c.pass { "pass" } else { "FAIL" },
            c.statement,
            c.detail
        );
    }
    let passed = claims.iter().filter(|c| c.pass).count();
    ensure(passed == claims.len(), || {
        format!("{passed}/{} sub-claims", claims.len())
    })?;
    Ok(format!("{passed}/{} sub-claims", claims.len()))
}

/// Keeps a pseudo-random nonempty subset of the one-period plans leaving the
/// owner single.
struct RandomSubset {
    seed: u64,
}

impl ConjectureRule for RandomSubset {
    fn name(&self) -> String {
        format!("random-subset-{}", self.seed)
    }

    fn conjectures(&self, engine: &mut Engine<'_>, key: &ContinuationKey, owner: usize) -> dynmatch::Result<Vec<Plan>> {
        let all: Vec<Plan> = engine
            .pairings(key.pool)?
            .iter()
            .filter(|mu| !mu.matched.contains(owner))
            .map(|mu| Plan::new(key.t, mu.pairs.clone(), None))
            .collect();
        let mut r = common::rng(self.seed ^ key.pool.bits().rotate_left(17) ^ (owner as u64) << 40);
        let mut kept: Vec<Plan> = all.iter().filter(|_| r.gen_bool(0.5)).cloned().collect();
        if kept.is_empty() {
            kept.push(all[r.gen_range(0..all.len())].clone());
        }
        Ok(kept)
    }
}

fn as_static(econ: &Economy, m: &DynamicMatching) -> StaticMatching {
    let mut out: StaticMatching = m
        .formations()
        .iter()
        .map(|f| {
            if econ.side(f.a) == Side::A {
                (f.a, f.b)
            } else {
                (f.b, f.a)
            }
        })
        .collect();
    out.sort();
    out
}

fn criterion_3() -> Outcome {
    let mut r = common::rng(STATIC_SEED);
    let mut families = 0;
    for i in 0..STATIC_ECONOMIES {
        let econ = common::economy(&mut r, 1, STATIC_MAX_SIDE);
        let stable: BTreeSet<StaticMatching> = StaticEconomy::of(&econ).stable_set().into_iter().collect();
        for f in 0..FAMILIES_PER_ECONOMY {
            let fam = ConjectureFamily::Custom(Arc::new(RandomSubset {
                seed: RULE_SEED + 1000 * i as u64 + f,
            }));
            let mut engine = Engine::new(&econ, SolverConfig::default());
            let rec: BTreeSet<_> = phi_solution_set(&mut engine, &fam)
                .map_err(err)?
                .iter()
                .map(|m| as_static(&econ, m))
                .collect();
            let direct: BTreeSet<_> = filter_with_witnesses(&mut engine, &fam)
                .map_err(err)?
                .0
                .iter()
                .map(|m| as_static(&econ, m))
                .collect();
            ensure(rec == stable && direct == stable, || {
                format!(
                    "economy {i}, family {f}: {} recursive / {} direct vs {} stable",
                    rec.len(),
                    direct.len(),
                    stable.len()
                )
            })?;
            families += 1;
        }
    }
    Ok(format!(
        "{STATIC_ECONOMIES} economies, {families} conjecture families, all equal to the stable set"
    ))
}

fn criterion_4(corpus: &[Economy]) -> Outcome {
    let fam = Concept::Agree.family();
    let mut candidates = 0;
    for (i, econ) in corpus.iter().enumerate() {
        let mut engine = Engine::new(econ, SolverConfig::default());
        let sols = phi_solution_set(&mut engine, &fam).map_err(err)?;
        ensure(!sols.is_empty(), || format!("economy {i}: no agree solution"))?;
        for m in candidate_set(&mut engine, &fam).map_err(err)?.matchings {
            let v = check_consistency(&mut engine, &fam, &m).map_err(err)?;
            ensure(v.pass && sols.contains(&m), || {
                format!("economy {i}: candidate fails consistency or is not a solution")
            })?;
            candidates += 1;
        }
    }
    Ok(format!(
        "{} economies nonempty, {candidates} candidates consistent and solutions",
        corpus.len()
    ))
}

fn criterion_5(corpus: &[Economy]) -> Outcome {
    let (cvr, ds) = (Concept::CvrDs.family(), Concept::Ds.family());
    let mut traces = 0;
    for (i, econ) in corpus.iter().enumerate() {
        let mut engine = Engine::new(econ, SolverConfig::default());
        let refined = phi_solution_set(&mut engine, &cvr).map_err(err)?;
        let plain = phi_solution_set(&mut engine, &ds).map_err(err)?;
        ensure(!refined.is_empty(), || format!("economy {i}: cvr-ds empty"))?;
        ensure(refined.iter().all(|m| plain.contains(m)), || {
            format!("economy {i}: cvr-ds not within ds")
        })?;
        for key in common::reachable_keys(&mut engine, false) {
            let trace = engine.cvr_trace(&key).map_err(err)?;
            ensure(trace.identity_holds, || {
                format!("economy {i}: fixed-point identity fails at {key:?}")
            })?;
            for n in 1..trace.rounds.len() {
                for (j, mu) in trace.pairings.iter().enumerate() {
                    let grows = trace.rounds[n][j] && !trace.rounds[n - 1][j] && mu.matched != key.pool;
                    ensure(!grows, || format!("economy {i}: iterate {} grows at {key:?}", n + 1))?;
                }
            }
            traces += 1;
        }
    }
    let econ = fixtures::example2();
    let mut engine = Engine::new(&econ, SolverConfig::default());
    let refined = phi_solution_set(&mut engine, &cvr).map_err(err)?;
    let plain = phi_solution_set(&mut engine, &ds).map_err(err)?;
    ensure(refined.len() < plain.len(), || {
        "no strict inclusion on the second example".into()
    })?;
    Ok(format!(
        "{} economies nonempty and within ds, {traces} traces decreasing with identity; second example {} < {}",
        corpus.len(),
        refined.len(),
        plain.len()
    ))
}

fn criterion_6(corpus: &[Economy]) -> Outcome {
    let fam = Concept::Sds.family();
    let mut traces = 0;
    let mut candidates = 0;
    for (i, econ) in corpus.iter().enumerate() {
        let report = solve(econ, Concept::Sds, SolverConfig::default()).map_err(err)?;
        ensure(!report.solutions.is_empty(), || format!("economy {i}: sds empty"))?;
        ensure(report.consistency.iter().all(|v| v.pass), || {
            format!("economy {i}: sds candidate inconsistent")
        })?;
        candidates += report.consistency.len();
        let mut engine = Engine::new(econ, SolverConfig::default());
        for key in common::reachable_keys(&mut engine, true) {
            let trace = engine.sds_trace(&key).map_err(err)?;
            for n in 1..trace.iterates.len() {
                for (j, set) in trace.iterates[n].iter().enumerate() {
                    let prev: &PlanSet = &trace.iterates[n - 1][j];
                    ensure(prev.iter().all(|p| set.contains(p)), || {
                        format!("economy {i}: iterate {n} shrinks")
                    })?;
                }
            }
            // The limit already holds every candidate it induces.
            let mut levels = vec![dynmatch::engine::LEVEL_MIN; econ.len()];
            for &k in &trace.agents {
                let limit = trace.limit(k).expect("pool agent");
                let w = engine.min_outcome(k, key.t, limit.iter().map(|p| p.outcome(k)));
                levels[k] = engine.level(k, &w, key.t);
            }
            let induced = engine.candidates_with(&fam, &key, &levels).map_err(err)?.plans;
            for &k in &trace.agents {
                let limit = trace.limit(k).expect("pool agent");
                let closed = induced
                    .iter()
                    .filter(|p| !p.first_matched().contains(k))
                    .all(|p| limit.contains(p));
                ensure(closed, || format!("economy {i}: limit not closed at {key:?}"))?;
            }
            traces += 1;
        }
    }
    Ok(format!(
        "{} economies nonempty, {candidates} candidates consistent, {traces} traces increasing and closed",
        corpus.len()
    ))
}

fn criterion_7(corpus: &[Economy]) -> Outcome {
    let mut solves = 0;
    let mut lone_wolf_checks = 0;
    let mut histories = 0;
    for (i, econ) in corpus.iter().enumerate() {
        for c in Concept::ALL {
            let report = solve(econ, c, SolverConfig::default()).map_err(err)?;
            ensure(report.definitions_agree, || {
                format!("economy {i}: {c} filter and recursion differ")
            })?;
            ensure(report.stats.lone_wolf_violations == 0, || {
                format!("economy {i}: {c} lone wolf violated")
            })?;
            lone_wolf_checks += report.stats.lone_wolf_checks;
            solves += 1;
        }
        let all = enumerate_matchings(econ, &History::root(), None, usize::MAX).map_err(err)?;
        let mut seen = BTreeSet::new();
        for m in &all {
            for t in 1..=econ.horizon() {
                let h = m.prefix(t);
                if !seen.insert((t, h.formations().to_vec())) {
                    continue;
                }
                let pool = dynmatch::ContinuationKey::for_history(econ, &h).map_err(err)?.pool;
                for k in pool.iter() {
                    let constrained = enumerate_matchings(econ, &h, Some(k), usize::MAX).map_err(err)?;
                    let filtered: Vec<_> = all
                        .iter()
                        .filter(|x| x.extends(&h) && x.partner_at(k, t).is_none())
                        .cloned()
                        .collect();
                    let mut constrained = constrained;
                    constrained.sort();
                    let mut filtered = filtered;
                    filtered.sort();
                    ensure(constrained == filtered, || {
                        format!("economy {i}: enumerations differ at t={t}")
                    })?;
                }
                histories += 1;
            }
        }
    }
    let mut r = common::rng(DA_SEED);
    for i in 0..DA_ECONOMIES {
        let econ = common::strict_static(&mut r, STATIC_MAX_SIDE);
        let s = StaticEconomy::of(&econ);
        let stable = s.stable_set();
        for side in [Side::A, Side::B] {
            let da = s.deferred_acceptance(side).map_err(err)?;
            ensure(stable.contains(&da), || {
                format!("static economy {i}: deferred acceptance not stable")
            })?;
        }
    }
    Ok(format!(
        "{solves} solves agree, {lone_wolf_checks} lone wolf checks, {histories} histories enumerated both ways, {DA_ECONOMIES} deferred acceptance runs"
    ))
}

fn criterion_8() -> Outcome {
    let mut comparisons = 0;
    for (name, text) in [
        ("example1", fixtures::EXAMPLE1_TEXT),
        ("example2", fixtures::EXAMPLE2_TEXT),
        ("empty", fixtures::EMPTY_TEXT),
    ] {
        let doc = parse_document(text).map_err(|e| format!("{name}: {e}"))?;
        let canonical = doc.serialize();
        let again = parse_document(&canonical).map_err(|e| format!("{name} canonical: {e}"))?;
        ensure(again == doc, || format!("{name}: parse of serialize differs"))?;
        ensure(again.serialize() == canonical, || {
            format!("{name}: canonical text not fixed")
        })?;
        let econ = doc.to_economy().map_err(err)?;
        ensure(name == "empty" || !doc.ordinals.is_empty(), || {
            format!("{name}: no ordinal blocks")
        })?;
        comparisons += validate_ordinal(&econ, &doc.ordinals).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("3 fixtures round-trip, {comparisons} ordinal comparisons hold"))
}

#[test]
fn acceptance() {
    let corpus = common::corpus(CORPUS_SEED, CORPUS_SIZE);
    println!("acceptance: tolerance {TOLERANCE} (exact), corpus seed {CORPUS_SEED:#x}, {CORPUS_SIZE} economies");
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "first example reproduces", criterion_1()),
        (2, "second example reproduces", criterion_2()),
        (3, "one-period solutions equal the stable set", criterion_3()),
        (
            4,
            "agree solutions exist and candidates are consistent",
            criterion_4(&corpus),
        ),
        (5, "cvr-ds fixed point", criterion_5(&corpus)),
        (6, "sds expansion", criterion_6(&corpus)),
        (7, "oracle equivalences", criterion_7(&corpus)),
        (8, "economy files", criterion_8()),
    ];
    let mut failed = Vec::new();
    for (n, title, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} PASS: {title}: {detail}"),
            Err(detail) => {
                println!("criterion {n} FAIL: {title}: {detail}");
                failed.push(*n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
