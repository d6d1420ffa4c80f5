//! Utility semantics, partitions, and single-agent deviations.

mod common;

use common::{random_game, random_partition, rat, ratio};
use hedonic_core::game::GameError;
use hedonic_core::partition::PartitionError;
use hedonic_core::{CardinalGame, Coalition, DeviationTarget, GameClass, Partition};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn utility_follows_the_class_formula() {
    let pair = Coalition::of(&[0, 1]);
    for (class, expected) in [
        (GameClass::Ashg, rat(1)),
        (GameClass::Fhg, ratio(1, 2)),
        (GameClass::Mfhg, rat(1)),
    ] {
        let mut game = CardinalGame::new(2, class);
        game.set_int(0, 1, 1);
        assert_eq!(game.utility(0, &pair).unwrap(), expected, "{class}");
    }

    // MFHG singletons are pinned to zero regardless of valuations.
    let mut game = CardinalGame::new(2, GameClass::Mfhg);
    game.set_int(0, 1, 7);
    assert_eq!(game.utility(0, &Coalition::singleton(0)).unwrap(), rat(0));

    // Missing entries read as zero; non-members are a domain error.
    let game = CardinalGame::new(3, GameClass::Ashg);
    assert_eq!(game.utility(0, &Coalition::of(&[0, 2])).unwrap(), rat(0));
    assert!(matches!(
        game.utility(1, &Coalition::of(&[0, 2])),
        Err(GameError::NotAMember { agent: 1 })
    ));
}

#[test]
fn diagonal_valuations_are_rejected() {
    let mut game = CardinalGame::new(2, GameClass::Ashg);
    assert!(matches!(
        game.set_value(1, 1, rat(1)),
        Err(GameError::SelfValuation(1))
    ));
    assert!(matches!(
        game.set_value(0, 5, rat(1)),
        Err(GameError::AgentOutOfRange(5))
    ));
}

#[test]
fn individual_rationality_examples() {
    let mut game = CardinalGame::new(2, GameClass::Ashg);
    assert!(game.is_individually_rational(&Partition::singletons(2)));
    game.set_int(0, 1, -1);
    assert!(!game.is_individually_rational(&Partition::grand(2)));
    game.set_int(0, 1, 1);
    game.set_int(1, 0, 1);
    assert!(game.is_individually_rational(&Partition::grand(2)));
}

#[test]
fn canonical_partitions() {
    let singles = Partition::singletons(3);
    assert_eq!(singles.len(), 3);
    assert_eq!(format!("{singles}"), "{{0}, {1}, {2}}");
    let grand = Partition::grand(3);
    assert_eq!(grand.len(), 1);
    assert_eq!(Partition::singletons(1), Partition::grand(1));

    // Construction order does not matter; the canonical form is unique.
    let a = Partition::from_coalitions(4, vec![Coalition::of(&[2, 3]), Coalition::of(&[1, 0])])
        .unwrap();
    let b = Partition::from_coalitions(4, vec![Coalition::of(&[0, 1]), Coalition::of(&[3, 2])])
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.encode(), b.encode());

    assert!(matches!(
        Partition::from_coalitions(3, vec![Coalition::of(&[0, 1])]),
        Err(PartitionError::NotACover { missing: 2 })
    ));
    assert!(matches!(
        Partition::from_coalitions(2, vec![Coalition::of(&[0, 1]), Coalition::of(&[1])]),
        Err(PartitionError::DuplicateAgent(1))
    ));
}

#[test]
fn apply_deviation_examples() {
    let pi = Partition::from_coalitions(3, vec![Coalition::of(&[0]), Coalition::of(&[1, 2])])
        .unwrap();
    let joined = pi
        .apply_deviation(0, &DeviationTarget::Join(Coalition::of(&[1, 2])))
        .unwrap();
    assert_eq!(joined, Partition::grand(3));

    let pi = Partition::from_coalitions(3, vec![Coalition::of(&[0, 1]), Coalition::of(&[2])])
        .unwrap();
    assert_eq!(
        pi.apply_deviation(0, &DeviationTarget::Solo).unwrap(),
        Partition::singletons(3)
    );

    // Already a singleton: no solo move.
    assert!(Partition::singletons(2)
        .apply_deviation(0, &DeviationTarget::Solo)
        .is_err());
    // The target must be an existing coalition not containing the deviator.
    assert!(pi
        .apply_deviation(0, &DeviationTarget::Join(Coalition::of(&[0, 1])))
        .is_err());
    assert!(pi
        .apply_deviation(0, &DeviationTarget::Join(Coalition::of(&[1])))
        .is_err());
}

#[test]
fn remove_agent_reindexes_densely() {
    let mut game = CardinalGame::new(3, GameClass::Ashg);
    game.set_int(0, 1, 5);
    game.set_int(1, 2, 7);
    game.set_int(2, 1, -2);
    let pi = Partition::from_coalitions(3, vec![Coalition::of(&[0]), Coalition::of(&[1, 2])])
        .unwrap();
    let (reduced, pi2, old_of_new) = game.remove_agent(&pi, 0).unwrap();
    assert_eq!(reduced.agent_count(), 2);
    assert_eq!(old_of_new, vec![1, 2]);
    assert_eq!(pi2, Partition::grand(2));
    assert_eq!(reduced.value(0, 1), rat(7));
    assert_eq!(reduced.value(1, 0), rat(-2));
    // No trace of the removed agent's valuations remains.
    assert!(reduced.entries().all(|(a, b, _)| a < 2 && b < 2));

    let (_, dropped, _) = game.remove_agent(&Partition::grand(3), 1).unwrap();
    assert_eq!(dropped.len(), 1);
    assert!(CardinalGame::new(1, GameClass::Ashg)
        .remove_agent(&Partition::singletons(1), 0)
        .is_err());
}

#[test]
fn pair_coalitions_relate_the_three_classes() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(2..=6);
        let ashg = random_game(&mut rng, n, GameClass::Ashg);
        let mut fhg = CardinalGame::new(n, GameClass::Fhg);
        let mut mfhg = CardinalGame::new(n, GameClass::Mfhg);
        for (a, b, v) in ashg.entries() {
            fhg.set(a, b, v.clone());
            mfhg.set(a, b, v.clone());
        }
        let a = rng.gen_range(0..n);
        let b = (a + 1 + rng.gen_range(0..n - 1)) % n;
        let pair = Coalition::of(&[a, b]);
        let u = ashg.utility(a, &pair).unwrap();
        assert_eq!(fhg.utility(a, &pair).unwrap(), u.clone() / rat(2));
        assert_eq!(mfhg.utility(a, &pair).unwrap(), u);
    }
}

#[test]
fn deviations_are_invertible() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let pi = random_partition(&mut rng, n);
        let a = rng.gen_range(0..n);
        let from = pi.coalition_of(a).clone();
        // Pick any legal target; skip the draw when there is none.
        let targets: Vec<DeviationTarget> = pi
            .coalitions()
            .iter()
            .filter(|c| !c.contains(a))
            .map(|c| DeviationTarget::Join(c.clone()))
            .chain((from.len() > 1).then_some(DeviationTarget::Solo))
            .collect();
        if targets.is_empty() {
            continue;
        }
        let target = &targets[rng.gen_range(0..targets.len())];
        let next = pi.apply_deviation(a, target).unwrap();
        let back = match from.without(a) {
            Some(rest) => DeviationTarget::Join(rest),
            None => DeviationTarget::Solo,
        };
        assert_eq!(next.apply_deviation(a, &back).unwrap(), pi);
    }
}

#[test]
fn partition_enumeration_counts_are_bell_numbers() {
    let bell = [1usize, 1, 2, 5, 15, 52, 203, 877];
    for n in 1..bell.len() {
        assert_eq!(Partition::enumerate_all(n).count(), bell[n], "n={n}");
    }
    // Every enumerated partition is distinct.
    let all: Vec<Partition> = Partition::enumerate_all(5).collect();
    for (i, p) in all.iter().enumerate() {
        for q in &all[i + 1..] {
            assert_ne!(p, q);
        }
    }
}
