//! Shared randomized-instance helpers for the integration suites.

// Each integration target compiles its own copy; not all of them use every
// helper.
#![allow(dead_code)]

use hedonic_core::{CardinalGame, Coalition, GameClass, Partition, Rational};
use rand::rngs::StdRng;
use rand::Rng;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

/// A sparse game with numerators in `[-3, 3]` and denominators in `[1, 3]`;
/// roughly half of the off-diagonal entries stay at the implicit zero.
pub fn random_game(rng: &mut StdRng, n: usize, class: GameClass) -> CardinalGame {
    let mut game = CardinalGame::new(n, class);
    for a in 0..n {
        for b in 0..n {
            if a == b || rng.gen_bool(0.5) {
                continue;
            }
            let p = rng.gen_range(-3..=3i64);
            let q = rng.gen_range(1..=3i64);
            game.set(a, b, ratio(p, q));
        }
    }
    game
}

/// A symmetric game plus up to `admirers` extra one-directional positive
/// entries, which bounds the count of one-sided admirers by construction.
pub fn random_low_s_game(rng: &mut StdRng, n: usize, admirers: usize) -> CardinalGame {
    let mut game = CardinalGame::new(n, GameClass::Ashg);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.5) {
                continue;
            }
            let v = rat(rng.gen_range(-3..=3i64));
            game.set(a, b, v.clone());
            game.set(b, a, v);
        }
    }
    for _ in 0..admirers {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        // Only pairs where both directions are still zero create an admirer.
        use num_traits::Zero;
        if game.value(a, b).is_zero() && game.value(b, a).is_zero() {
            game.set(a, b, rat(rng.gen_range(1..=3i64)));
        }
    }
    game
}

/// A uniformly-random-looking partition: each agent joins one of `n` urns.
pub fn random_partition(rng: &mut StdRng, n: usize) -> Partition {
    let mut urns: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in 0..n {
        urns[rng.gen_range(0..n)].push(a);
    }
    let coalitions: Vec<Coalition> = urns
        .into_iter()
        .filter(|u| !u.is_empty())
        .map(|u| Coalition::new(u).expect("nonempty"))
        .collect();
    Partition::from_coalitions(n, coalitions).expect("cover by construction")
}
