//! Worked examples on the bundled fixtures.

use dynmatch::concepts::stability_among_matched;
use dynmatch::economy::{first_match_date, is_individually_rational, payoff};
use dynmatch::fixtures::{self, ex1, ex2};
use dynmatch::framework::{
    candidate_set, check_consistency, check_generalized_consistency, conjecture_set, is_phi_solution, phi_solution_set,
    SolutionVerdict,
};
use dynmatch::matching::{available_agents, continuation_economy, enumerate_matchings, restrict, validate_periods};
use dynmatch::stability::induced_one_period_economy;
use dynmatch::{
    parse_matching, AgentSet, Concept, DynamicMatching, Economy, EmptyPolicy, Engine, Payoff, Plan, SolverConfig,
    Threshold,
};

fn ix(econ: &Economy, name: &str) -> usize {
    econ.agent_ix(name).unwrap()
}

fn set(econ: &Economy, names: &[&str]) -> AgentSet {
    names.iter().map(|n| ix(econ, n)).collect()
}

fn names(econ: &Economy, s: AgentSet) -> Vec<&str> {
    s.iter().map(|k| econ.name(k)).collect()
}

#[test]
fn fixture_arrivals() {
    let e1 = fixtures::example1();
    assert_eq!(names(&e1, e1.arrivals(1)), ["a1", "a2", "a3", "b1", "b2"]);
    assert_eq!(names(&e1, e1.arrivals(2)), ["a4", "b3", "b4"]);
    let e2 = fixtures::example2();
    assert_eq!(names(&e2, e2.arrivals(1)), ["a1", "a2", "b1", "b2"]);
    assert_eq!(names(&e2, e2.arrivals(2)), ["a3", "a4", "b3", "b4"]);
    assert!(fixtures::empty().is_empty());
}

#[test]
fn match_dates_and_payoffs() {
    let e2 = fixtures::example2();
    let ml = parse_matching(&e2, ex2::M_L).unwrap();
    assert_eq!(first_match_date(&e2, &ml, ix(&e2, "a1"), 1).unwrap(), 2);
    assert_eq!(first_match_date(&e2, &ml, ix(&e2, "a2"), 1).unwrap(), 1);
    let mr = parse_matching(&e2, ex2::M_R).unwrap();
    assert!(is_individually_rational(&e2, &mr));

    let e1 = fixtures::example1();
    let m = parse_matching(&e1, ex1::M_STAR).unwrap();
    let (a1, b1) = (ix(&e1, "a1"), ix(&e1, "b1"));
    assert_eq!(payoff(&e1, &m, a1, 1).unwrap(), Payoff(e1.utility(a1, b1).clone()));
}

#[test]
fn histories_and_continuations() {
    let e2 = fixtures::example2();
    let ml = parse_matching(&e2, ex2::M_L).unwrap();
    let (a, b) = available_agents(&e2, &ml.prefix(2)).unwrap();
    assert_eq!(
        (names(&e2, a), names(&e2, b)),
        (vec!["a1", "a3", "a4"], vec!["b1", "b3", "b4"])
    );

    let e1 = fixtures::example1();
    let m = parse_matching(&e1, ex1::M_STAR).unwrap();
    let h = m.prefix(2);
    let (a, b) = available_agents(&e1, &h).unwrap();
    assert_eq!((names(&e1, a), names(&e1, b)), (vec!["a3", "a4"], vec!["b3", "b4"]));
    let cont = continuation_economy(&e1, &h).unwrap();
    assert_eq!(cont.economy.horizon(), 1);
    assert_eq!(cont.economy.len(), 4);
    let tail = restrict(&e1, &m, &cont).unwrap();
    assert_eq!(dynmatch::format_matching(&cont.economy, &tail), "t=1: a3-b3 a4-b4");

    let root = continuation_economy(&e1, &dynmatch::History::root()).unwrap();
    assert_eq!(restrict(&e1, &m, &root).unwrap().formations(), m.formations());
}

#[test]
fn constrained_enumeration_leaves_agent_single() {
    let e2 = fixtures::example2();
    let a2 = ix(&e2, "a2");
    let all = enumerate_matchings(&e2, &dynmatch::History::root(), Some(a2), usize::MAX).unwrap();
    assert!(!all.is_empty());
    for m in &all {
        assert_eq!(m.partner_at(a2, 1), None);
        validate_periods(&e2, &m.period_matchings(&e2)).unwrap();
    }
}

#[test]
fn re_conjectures_set_the_period_one_market() {
    let e1 = fixtures::example1();
    let mut engine = Engine::new(&e1, SolverConfig::default());
    let fam = Concept::Re.family();
    let h = dynmatch::History::root();
    let sets: Vec<_> = e1
        .arrivals(1)
        .iter()
        .map(|k| conjecture_set(&mut engine, &fam, &h, k).unwrap())
        .collect();
    let market = induced_one_period_economy(&e1, &h, &sets, EmptyPolicy::Vacuous).unwrap();
    let (a2, b2) = (ix(&e1, "a2"), ix(&e1, "b2"));
    let expected = e1.delta(a2) * e1.utility(a2, b2);
    assert_eq!(market.threshold(a2), &Threshold::AtLeast(expected.clone()));
    let better: Vec<&str> = e1
        .arrivals(1)
        .iter()
        .filter(|&j| e1.side(j) != e1.side(a2) && *e1.utility(a2, j) > expected)
        .map(|j| e1.name(j))
        .collect();
    assert_eq!(better, ["b2"]);
}

#[test]
fn re_conjectures_of_late_arrivals() {
    let e1 = fixtures::example1();
    let mut engine = Engine::new(&e1, SolverConfig::default());
    let fam = Concept::Re.family();
    let root = engine.root();
    let (a2, b1, a3, a4) = (ix(&e1, "a2"), ix(&e1, "b1"), ix(&e1, "a3"), ix(&e1, "a4"));

    let m_a2 = parse_matching(&e1, ex1::M_A2).unwrap();
    assert!(engine
        .conjecture_contains(&fam, &root, a2, &Plan::from_matching(&m_a2, 1))
        .unwrap());
    let m_b1 = parse_matching(&e1, ex1::M_B1).unwrap();
    assert!(engine
        .conjecture_contains(&fam, &root, b1, &Plan::from_matching(&m_b1, 1))
        .unwrap());

    let m_star = parse_matching(&e1, ex1::M_STAR).unwrap();
    let a3_set = conjecture_set(&mut engine, &fam, &dynmatch::History::root(), a3).unwrap();
    assert!(!a3_set.matchings.is_empty());
    assert!(!a3_set.matchings.contains(&m_star));
    assert!(a3_set.matchings.iter().all(|m| m.final_partner(b1) == Some(a4)));
}

#[test]
fn first_example_solutions() {
    let e1 = fixtures::example1();
    let fam = Concept::Re.family();
    let mut engine = Engine::new(&e1, SolverConfig::default());
    let m_star = parse_matching(&e1, ex1::M_STAR).unwrap();
    assert_eq!(
        is_phi_solution(&mut engine, &fam, &m_star).unwrap(),
        SolutionVerdict::Solution
    );
    assert!(candidate_set(&mut engine, &fam).unwrap().matchings.contains(&m_star));
    let cc = check_consistency(&mut engine, &fam, &m_star).unwrap();
    assert_eq!(cc.failures, vec![(1, ix(&e1, "a3"))]);
    assert!(!check_generalized_consistency(&mut engine, &fam).unwrap().pass);

    // Under agree conjectures a3 does entertain m*.
    let agree = Concept::Agree.family();
    let a3_set = conjecture_set(&mut engine, &agree, &dynmatch::History::root(), ix(&e1, "a3")).unwrap();
    assert!(a3_set.matchings.contains(&m_star));
}

#[test]
fn sds_expansion_admits_m_star_for_a3() {
    let e1 = fixtures::example1();
    let mut engine = Engine::new(&e1, SolverConfig::default());
    let root = engine.root();
    let trace = engine.sds_trace(&root).unwrap();
    let a3 = ix(&e1, "a3");
    let i = trace.agents.iter().position(|&k| k == a3).unwrap();
    let m_star = Plan::from_matching(&parse_matching(&e1, ex1::M_STAR).unwrap(), 1);
    assert!(!trace.iterates[0][i].contains(&m_star));
    assert!(trace.limit(a3).unwrap().contains(&m_star));
    assert!(trace.iterates.len() >= 2);
}

#[test]
fn second_example_conjectures() {
    let e2 = fixtures::example2();
    let mut engine = Engine::new(&e2, SolverConfig::default());
    let root = engine.root();
    let a2 = ix(&e2, "a2");
    let mc = Plan::from_matching(&parse_matching(&e2, ex2::M_C).unwrap(), 1);
    assert!(engine
        .conjecture_contains(&Concept::Ds.family(), &root, a2, &mc)
        .unwrap());
    assert!(!engine
        .conjecture_contains(&Concept::CvrDs.family(), &root, a2, &mc)
        .unwrap());

    // a1 can wait for b3, so pairing it with b1 now is not stable among the matched.
    let (a1, b1, b3) = (ix(&e2, "a1"), ix(&e2, "b1"), ix(&e2, "b3"));
    let mut th = vec![Threshold::zero(); e2.len()];
    th[a1] = Threshold::AtLeast(e2.delta(a1) * e2.utility(a1, b3));
    assert!(!stability_among_matched(&e2, &[(a1, b1)], &th));
    assert!(stability_among_matched(
        &e2,
        &[(a1, b1)],
        &vec![Threshold::zero(); e2.len()]
    ));
    assert!(stability_among_matched(&e2, &[], &th));

    // m^L falls to an individual objection that rests on a2's conjectures.
    let ml = parse_matching(&e2, ex2::M_L).unwrap();
    match is_phi_solution(&mut engine, &Concept::CvrDs.family(), &ml).unwrap() {
        SolutionVerdict::Blocked(w) => {
            assert!(w.agents.contains(&a2));
            assert!(w.replay(&e2, &ml));
        }
        SolutionVerdict::Solution => panic!("m^L should be blocked"),
    }
}

#[test]
fn second_example_solution_sets() {
    let e2 = fixtures::example2();
    let mut engine = Engine::new(&e2, SolverConfig::default());
    let (ml, mr) = (
        parse_matching(&e2, ex2::M_L).unwrap(),
        parse_matching(&e2, ex2::M_R).unwrap(),
    );
    let cvr = phi_solution_set(&mut engine, &Concept::CvrDs.family()).unwrap();
    let ds = phi_solution_set(&mut engine, &Concept::Ds.family()).unwrap();
    assert!(cvr.contains(&mr) && !cvr.contains(&ml));
    assert!(ds.contains(&ml) && ds.contains(&mr));
    assert!(
        check_generalized_consistency(&mut engine, &Concept::CvrDs.family())
            .unwrap()
            .pass
    );
}

#[test]
fn deferred_economies_validate_names() {
    let e1 = fixtures::example1();
    assert!(dynmatch::DeferredEconomy::new(e1.clone(), &["zz"]).is_err());
    // a4 already arrives in period 2.
    assert!(dynmatch::DeferredEconomy::new(e1, &["a4"]).is_err());
}

#[test]
fn static_matching_of_the_first_example() {
    let e1 = fixtures::example1();
    let m = parse_matching(&e1, ex1::M_EMPTY).unwrap();
    assert_eq!(m.matched_by(1), AgentSet::EMPTY);
    assert_eq!(m.matched_by(2), e1.all());
    assert_eq!(DynamicMatching::empty(2).formations().len(), 0);
    assert!(set(&e1, &["a1", "b2"]).is_subset(m.matched_by(2)));
}
