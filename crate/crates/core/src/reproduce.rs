//! The claims made about the two bundled examples, as executable checks.

use crate::agents::AgentSet;
use crate::concepts::{Concept, DeferredEconomy};
use crate::economy::{Economy, Side};
use crate::engine::{Engine, Plan, SolverConfig};
use crate::error::{Error, Result};
use crate::fixtures::{ex1, ex2};
use crate::framework::{
    candidate_set, check_consistency, check_generalized_consistency, conjecture_set, phi_solution_set,
};
use crate::matching::{format_matching, parse_matching, History};
use crate::stability::{StaticEconomy, StaticMatching};

/// One checked statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub id: &'static str,
    pub statement: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn claim(id: &'static str, statement: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Claim {
    match run() {
        Ok((pass, detail)) => Claim {
            id,
            statement,
            pass,
            detail,
        },
        Err(e) => Claim {
            id,
            statement,
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn static_pairs(econ: &Economy, text: &str) -> Result<StaticMatching> {
    let mut out = Vec::new();
    for pair in text.split_whitespace() {
        let (x, y) = pair
            .split_once('-')
            .ok_or_else(|| Error::BadMatchingSpec(pair.to_string()))?;
        let (x, y) = (econ.agent_ix(x)?, econ.agent_ix(y)?);
        out.push(if econ.side(x) == Side::A { (x, y) } else { (y, x) });
    }
    out.sort();
    Ok(out)
}

fn show_static(econ: &Economy, m: &StaticMatching) -> String {
    let pairs: Vec<String> = m
        .iter()
        .map(|&(a, b)| format!("{}-{}", econ.name(a), econ.name(b)))
        .collect();
    format!("{{{}}}", pairs.join(" "))
}

fn members(econ: &Economy, names: &[&str]) -> Result<AgentSet> {
    names.iter().map(|n| econ.agent_ix(n)).collect()
}

/// Six claims about the first example.
pub fn example1_claims(econ: &Economy, config: SolverConfig) -> Vec<Claim> {
    let re = Concept::Re.family();
    vec![
        claim(
            "1a",
            "all eight agents at once have exactly one stable matching",
            || {
                let stable = StaticEconomy::of(econ).stable_set();
                let expect = static_pairs(econ, ex1::STATIC_STABLE)?;
                let shown: Vec<String> = stable.iter().map(|m| show_static(econ, m)).collect();
                Ok((stable == vec![expect], format!("stable set = [{}]", shown.join(", "))))
            },
        ),
        claim("1b", "side-A deferred acceptance on the two six-agent markets", || {
            let first = StaticEconomy::over(econ, members(econ, &["a2", "a3", "a4", "b1", "b3", "b4"])?)
                .deferred_acceptance(Side::A)?;
            let second = StaticEconomy::over(econ, members(econ, &["a1", "a3", "a4", "b1", "b3", "b4"])?)
                .deferred_acceptance(Side::A)?;
            let pass =
                first == static_pairs(econ, ex1::DA_WITHOUT_A1)? && second == static_pairs(econ, ex1::DA_WITHOUT_A2)?;
            Ok((
                pass,
                format!("{} and {}", show_static(econ, &first), show_static(econ, &second)),
            ))
        }),
        claim(
            "1c",
            "m_a2 and m_b1 are rational expectations solutions when a2 or b1 arrives late",
            || {
                let mut detail = Vec::new();
                let mut pass = true;
                for (late, text) in [("a2", ex1::M_A2), ("b1", ex1::M_B1)] {
                    let sub = DeferredEconomy::new(econ.clone(), &[late])?.to_economy();
                    let m = parse_matching(&sub, text)?;
                    let mut engine = Engine::new(&sub, config);
                    let sols = phi_solution_set(&mut engine, &re)?;
                    let found = sols.contains(&m);
                    pass &= found;
                    detail.push(format!("{late} late: {} solutions, contains = {found}", sols.len()));
                }
                Ok((pass, detail.join("; ")))
            },
        ),
        claim(
            "1d",
            "with a3 and b1 arriving late, b1 ends with a4 in every rational expectations solution",
            || {
                let sub = DeferredEconomy::new(econ.clone(), &["a3", "b1"])?.to_economy();
                let (b1, a4) = (sub.agent_ix("b1")?, sub.agent_ix("a4")?);
                let mut engine = Engine::new(&sub, config);
                let sols = phi_solution_set(&mut engine, &re)?;
                let with_a4 = sols.iter().filter(|m| m.final_partner(b1) == Some(a4)).count();
                Ok((
                    !sols.is_empty() && with_a4 == sols.len(),
                    format!("{with_a4} of {} solutions pair b1 with a4", sols.len()),
                ))
            },
        ),
        claim("1e", "m* is a candidate and a rational expectations solution", || {
            let m = parse_matching(econ, ex1::M_STAR)?;
            let mut engine = Engine::new(econ, config);
            let cands = candidate_set(&mut engine, &re)?.matchings;
            let sols = phi_solution_set(&mut engine, &re)?;
            let (c, s) = (cands.contains(&m), sols.contains(&m));
            Ok((
                c && s,
                format!(
                    "candidate = {c} ({} candidates), solution = {s} ({} solutions)",
                    cands.len(),
                    sols.len()
                ),
            ))
        }),
        claim(
            "1f",
            "consistency fails at m* exactly for a3 in period 1, and fails in general",
            || {
                let m = parse_matching(econ, ex1::M_STAR)?;
                let a3 = econ.agent_ix("a3")?;
                let mut engine = Engine::new(econ, config);
                let cc = check_consistency(&mut engine, &re, &m)?;
                let general = check_generalized_consistency(&mut engine, &re)?;
                let failures: Vec<String> = cc
                    .failures
                    .iter()
                    .map(|&(t, k)| format!("(t={t}, {})", econ.name(k)))
                    .collect();
                let pass = cc.failures == vec![(1, a3)] && !general.pass;
                Ok((
                    pass,
                    format!(
                        "failures = [{}]; generalized: {} of {} solutions violate",
                        failures.join(", "),
                        general.violations,
                        general.solutions_checked
                    ),
                ))
            },
        ),
    ]
}

/// Three claims about the second example.
pub fn example2_claims(econ: &Economy, config: SolverConfig) -> Vec<Claim> {
    let ds = Concept::Ds.family();
    let cvr = Concept::CvrDs.family();
    vec![
        claim("2a", "m^L is dynamically stable", || {
            let m = parse_matching(econ, ex2::M_L)?;
            let mut engine = Engine::new(econ, config);
            let sols = phi_solution_set(&mut engine, &ds)?;
            Ok((
                sols.contains(&m),
                format!("{} dynamically stable matchings", sols.len()),
            ))
        }),
        claim(
            "2b",
            "a2 fears m^C under dynamic stability but not under the CVR refinement",
            || {
                let m = parse_matching(econ, ex2::M_C)?;
                let a2 = econ.agent_ix("a2")?;
                let mut engine = Engine::new(econ, config);
                let under_ds = conjecture_set(&mut engine, &ds, &History::root(), a2)?
                    .matchings
                    .contains(&m);
                let under_cvr = conjecture_set(&mut engine, &cvr, &History::root(), a2)?
                    .matchings
                    .contains(&m);
                let root = engine.root();
                let direct = engine.conjecture_contains(&cvr, &root, a2, &Plan::from_matching(&m, 1))?;
                Ok((
                    under_ds && !under_cvr && !direct,
                    format!("in ds conjectures = {under_ds}, in cvr-ds conjectures = {under_cvr}"),
                ))
            },
        ),
        claim(
            "2c",
            "m^L is not CVR-dynamically stable, m^R is, and the refinement is strict",
            || {
                let (ml, mr) = (parse_matching(econ, ex2::M_L)?, parse_matching(econ, ex2::M_R)?);
                let mut engine = Engine::new(econ, config);
                let refined = phi_solution_set(&mut engine, &cvr)?;
                let plain = phi_solution_set(&mut engine, &ds)?;
                let subset = refined.iter().all(|m| plain.contains(m));
                let pass = !refined.contains(&ml) && refined.contains(&mr) && subset && refined.len() < plain.len();
                let shown: Vec<String> = refined.iter().map(|m| format_matching(econ, m)).collect();
                Ok((
                    pass,
                    format!(
                        "cvr-ds = [{}] ({} vs {} ds)",
                        shown.join("; "),
                        refined.len(),
                        plain.len()
                    ),
                ))
            },
        ),
    ]
}
