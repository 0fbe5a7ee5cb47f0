//! Random economies shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dynmatch::{ContinuationKey, Economy, Engine, Rational, Side};
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A rational in `[lo, hi]` with a small random denominator.
pub fn rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    let den = rng.gen_range(1..=7i64);
    let num = rng.gen_range(lo * den..=hi * den);
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Discount factor in `(0, 1)`.
pub fn delta(rng: &mut ChaCha8Rng) -> Rational {
    let den = rng.gen_range(2..=11i64);
    let num = rng.gen_range(1..den);
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Up to `per_period` agents per side arrive in each of `horizon` periods,
/// with utilities drawn from `[-2, 3]`.
///
/// Preferences are strict: for each agent, every discounted utility
/// `delta^d * u` with `d < horizon` differs from every other and from zero.
pub fn economy(rng: &mut ChaCha8Rng, horizon: usize, per_period: usize) -> Economy {
    economy_in(rng, horizon, per_period, -2)
}

/// As [`economy`], with utilities drawn from `[lo, 3]`.
pub fn economy_in(rng: &mut ChaCha8Rng, horizon: usize, per_period: usize, lo: i64) -> Economy {
    let mut b = Economy::builder(horizon);
    let mut sides: [Vec<(String, Rational)>; 2] = [Vec::new(), Vec::new()];
    for t in 1..=horizon {
        for (s, side) in [Side::A, Side::B].into_iter().enumerate() {
            for _ in 0..rng.gen_range(0..=per_period) {
                let name = format!("{}{}", if s == 0 { 'a' } else { 'b' }, sides[s].len() + 1);
                let d = delta(rng);
                b.add_agent(&name, side, t, d.clone());
                sides[s].push((name, d));
            }
        }
    }
    for (mine, theirs) in [(0, 1), (1, 0)] {
        for (k, d) in &sides[mine] {
            let values = loop {
                let values: Vec<Rational> = sides[theirs].iter().map(|_| rational(rng, lo, 3)).collect();
                if strict(&values, d, horizon) {
                    break values;
                }
            };
            for ((j, _), v) in sides[theirs].iter().zip(values) {
                b.set_utility(k, j, v);
            }
        }
    }
    b.build().expect("generated economies are valid")
}

fn strict(values: &[Rational], delta: &Rational, horizon: usize) -> bool {
    let mut seen = BTreeSet::new();
    seen.insert(Rational::from_integer(0.into()));
    for u in values {
        let mut x = u.clone();
        for _ in 0..horizon {
            if !seen.insert(x.clone()) {
                return false;
            }
            x *= delta;
        }
    }
    true
}

/// One-period economy whose utilities are pairwise distinct and nonzero for
/// every agent, so deferred acceptance applies.
pub fn strict_static(rng: &mut ChaCha8Rng, max_side: usize) -> Economy {
    use rand::seq::SliceRandom;
    let (na, nb) = (rng.gen_range(0..=max_side), rng.gen_range(0..=max_side));
    let mut b = Economy::builder(1);
    let a: Vec<String> = (1..=na).map(|i| format!("a{i}")).collect();
    let bs: Vec<String> = (1..=nb).map(|i| format!("b{i}")).collect();
    for n in &a {
        b.add_agent(n, Side::A, 1, Rational::from_integer(1.into()));
    }
    for n in &bs {
        b.add_agent(n, Side::B, 1, Rational::from_integer(1.into()));
    }
    for (mine, theirs) in [(&a, &bs), (&bs, &a)] {
        for k in mine.iter() {
            let mut values: Vec<i64> = (-2..=(theirs.len() as i64 + 2)).filter(|&v| v != 0).collect();
            values.shuffle(rng);
            for (j, v) in theirs.iter().zip(values) {
                b.set_utility(k, j, Rational::from_integer(v.into()));
            }
        }
    }
    b.build().expect("generated economies are valid")
}

/// The shared random corpus: `T <= 3` and at most three agents per side per
/// period. Three-period economies take at most two per side per period,
/// which keeps the exhaustive filter under a few seconds each. Every other
/// economy draws utilities from `[0, 3]` only, so that most partners are
/// acceptable and stable sets with several members occur.
pub fn corpus(seed: u64, count: usize) -> Vec<Economy> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let lo = if i % 2 == 0 { -2 } else { 0 };
            match i % 3 {
                0 => economy_in(&mut r, 1, 3, lo),
                1 => economy_in(&mut r, 2, 3, lo),
                _ => economy_in(&mut r, 3, 2, lo),
            }
        })
        .collect()
}

/// Every state reachable from the root by some first period, optionally
/// also through deferring one pool agent.
pub fn reachable_keys(engine: &mut Engine<'_>, with_deferrals: bool) -> Vec<ContinuationKey> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![engine.root()];
    while let Some(key) = stack.pop() {
        if !seen.insert(key) {
            continue;
        }
        let pairings = engine.pairings(key.pool).expect("pool within limits");
        for mu in pairings.iter() {
            if let Some(next) = engine.next(&key, mu.matched) {
                stack.push(next);
            }
        }
        if with_deferrals {
            for k in key.pool.iter() {
                stack.push(engine.defer(&key, k));
            }
        }
    }
    seen.into_iter().collect()
}
