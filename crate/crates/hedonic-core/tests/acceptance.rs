//! The acceptance checklist: one test per criterion, each printing a
//! pass/fail line (visible with `--nocapture`).
//!
//! These are deliberately written against the public API only, re-deriving
//! every expectation instead of trusting generator-internal bookkeeping.

mod common;

use std::collections::BTreeSet;

use common::{random_game, random_low_s_game, random_partition, rat, ratio};
use hedonic_core::cis::{owners, s_of_game, shortcut, three_phase_cis};
use hedonic_core::dynamics::{
    default_step_budget, replay, run, Outcome, SchedulerPolicy,
};
use hedonic_core::gadgets::bundle::{CheckKind, NotionRef, SampledInvariant};
use hedonic_core::gadgets::compose::{gen_ncd_hardness, gen_pcd_hardness};
use hedonic_core::gadgets::exponential::gen_cis_exponential;
use hedonic_core::gadgets::indset::{gen_indset_reduction, IndSetInstance};
use hedonic_core::gadgets::quota::{
    gen_quota_in_cycle, gen_quota_in_cycle_adapted, gen_quota_out_cycle,
    gen_quota_out_cycle_adapted,
};
use hedonic_core::gadgets::rx3c::{find_rx3c_no_instance, gen_rx3c_reduction, Rx3cInstance};
use hedonic_core::oracle::{
    decide_pcd, decide_ncd, decide_reachable_ir_cis, Verdict, DEFAULT_NODE_CAP,
};
use hedonic_core::stability::{
    enumerate_deviations, is_deviation_allowed, is_vote_deviation, utility_change_data,
    vote_predicate, UtilityChange, UtilityChanges, VoteQuotas,
};
use hedonic_core::{GameClass, Partition, StabilityNotion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn report(criterion: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("acceptance {criterion}: pass"),
        Err(reason) => {
            println!("acceptance {criterion}: FAIL ({reason})");
            panic!("acceptance {criterion} failed: {reason}");
        }
    }
}

fn check(ok: bool, reason: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(reason.into())
    }
}

#[test]
fn criterion_01_cis_universal_convergence() {
    report("1 (CIS universal convergence)", || {
        let mut rng = StdRng::seed_from_u64(0xAC01);
        let cis = StabilityNotion::contractual_individual();
        for class in GameClass::ALL {
            for _ in 0..200 {
                let n = rng.gen_range(2..=8);
                let game = random_game(&mut rng, n, class);
                for _ in 0..10 {
                    let start = random_partition(&mut rng, n);
                    let trace = run(
                        &game,
                        &cis,
                        &start,
                        SchedulerPolicy::RandomSeeded(rng.gen()),
                        default_step_budget(n),
                    )
                    .map_err(|e| format!("{e}"))?;
                    check(trace.outcome == Outcome::Converged, "a CIS run did not converge")?;
                    let welfare = trace.welfare_sequence(&game);
                    for w in welfare.windows(2) {
                        check(w[1] > w[0], "welfare did not strictly increase on a CIS step")?;
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_02_shortcut_exactness() {
    report("2 (shortcut exactness)", || {
        let mut rng = StdRng::seed_from_u64(0xAC02);
        let cis = StabilityNotion::contractual_individual();
        for _ in 0..100 {
            let n = rng.gen_range(2..=10);
            let class = GameClass::ALL[rng.gen_range(0..3)];
            let game = random_game(&mut rng, n, class);
            let trace = run(
                &game,
                &cis,
                &Partition::singletons(n),
                SchedulerPolicy::RandomSeeded(rng.gen()),
                default_step_budget(n),
            )
            .map_err(|e| format!("{e}"))?;
            check(trace.outcome == Outcome::Converged, "source run did not converge")?;
            owners(&trace).map_err(|e| format!("owner extraction failed: {e}"))?;
            let short = shortcut(&game, &trace).map_err(|e| format!("shortcut failed: {e}"))?;
            check(
                short.len() == n - trace.final_partition().len(),
                "compressed length is not n - |final partition|",
            )?;
            check(
                short.final_partition() == trace.final_partition(),
                "compressed trace ends elsewhere",
            )?;
            for step in &short.steps {
                let ok = is_deviation_allowed(
                    &game,
                    &cis,
                    &short.partitions[step.index],
                    step.deviator,
                    &step.to,
                )
                .map_err(|e| format!("{e}"))?;
                check(ok, "a compressed step is not a CIS deviation")?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_03_exponential_family() {
    report("3 (exponential CIS family)", || {
        for (k, agents, min_steps) in [(5usize, 21usize, 16usize), (6, 28, 32)] {
            let bundle = gen_cis_exponential(k).map_err(|e| format!("{e}"))?;
            check(
                bundle.game.agent_count() == agents,
                &format!("k={k}: wrong agent count"),
            )?;
            let script = &bundle.scripts["count-up"];
            check(script.len() >= min_steps, &format!("k={k}: script too short"))?;
            // Replaying under CIS validates every step as a CIS deviation.
            let cis = StabilityNotion::contractual_individual();
            replay(&bundle.game, &cis, &bundle.start, script)
                .map_err(|e| format!("k={k}: {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_04_three_phase_bound() {
    report("4 (three-phase bound)", || {
        let mut rng = StdRng::seed_from_u64(0xAC04);
        let cis = StabilityNotion::contractual_individual();
        for _ in 0..100 {
            let n = rng.gen_range(2..=10);
            let game = random_low_s_game(&mut rng, n, 3);
            let s = s_of_game(&game).map_err(|e| format!("{e}"))?;
            check(s <= 3, "sampler produced s > 3")?;
            let trace = three_phase_cis(&game).map_err(|e| format!("{e}"))?;
            check(trace.len() <= 27 + n, "trace exceeds 27 + n steps")?;
            let final_pi = trace.final_partition();
            let stable = enumerate_deviations(&game, &cis, final_pi)
                .map_err(|e| format!("{e}"))?
                .is_empty();
            check(stable, "result is not CIS stable")?;
            check(
                game.is_individually_rational(final_pi),
                "result is not individually rational",
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_05_quota_cycling_gadgets() {
    report("5 (quota cycling gadgets)", || {
        let quotas = [rat(0), ratio(1, 2), ratio(2, 3)];
        let nash = StabilityNotion::nash();
        for q in &quotas {
            for (label, bundle) in [
                ("out", gen_quota_out_cycle(GameClass::Ashg, q).map_err(|e| format!("{e}"))?),
                ("in", gen_quota_in_cycle(GameClass::Ashg, q).map_err(|e| format!("{e}"))?),
            ] {
                let moves = enumerate_deviations(&bundle.game, &nash, &bundle.start)
                    .map_err(|e| format!("{e}"))?;
                check(
                    moves.len() == 1,
                    &format!("quota-{label} q={q}: expected a unique NS move"),
                )?;
                let StabilityNotion::Vote(vq) = &bundle.notion else {
                    return Err("bundle notion is not a quota pair".into());
                };
                let (a, t) = &moves[0];
                let allowed = is_vote_deviation(&bundle.game, vq, &bundle.start, *a, t)
                    .map_err(|e| format!("{e}"))?;
                check(allowed, &format!("quota-{label} q={q}: move fails its own quotas"))?;
                let trace = run(
                    &bundle.game,
                    &bundle.notion,
                    &bundle.start,
                    SchedulerPolicy::FirstInOrder,
                    10_000,
                )
                .map_err(|e| format!("{e}"))?;
                check(
                    matches!(trace.outcome, Outcome::CycleDetected { .. }),
                    &format!("quota-{label} q={q}: run did not cycle"),
                )?;
                let (verdict, _) =
                    decide_pcd(&bundle.game, &bundle.notion, &bundle.start, DEFAULT_NODE_CAP)
                        .map_err(|e| format!("{e}"))?;
                check(
                    verdict == Verdict::No,
                    &format!("quota-{label} q={q}: a stable partition is reachable"),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_06_adapted_gadgets() {
    report("6 (adapted quota gadgets)", || {
        let quotas = [rat(0), ratio(1, 2), ratio(2, 3)];
        for q in &quotas {
            let out = gen_quota_out_cycle_adapted(GameClass::Ashg, q).map_err(|e| format!("{e}"))?;
            let r#in = gen_quota_in_cycle_adapted(GameClass::Ashg, q).map_err(|e| format!("{e}"))?;
            for (label, bundle) in [("out", &out), ("in", &r#in)] {
                // A cycle is reachable from the adapted start.
                let trace = run(
                    &bundle.game,
                    &bundle.notion,
                    &bundle.start,
                    SchedulerPolicy::FirstInOrder,
                    10_000,
                )
                .map_err(|e| format!("{e}"))?;
                check(
                    matches!(trace.outcome, Outcome::CycleDetected { .. }),
                    &format!("adapted {label} q={q}: no reachable cycle"),
                )?;
                // Removing the singleton agent makes every sequence converge.
                let (game, start, _) = bundle
                    .game
                    .remove_agent(&bundle.start, 0)
                    .map_err(|e| format!("{e}"))?;
                let (verdict, _) = decide_ncd(&game, &bundle.notion, &start, DEFAULT_NODE_CAP)
                    .map_err(|e| format!("{e}"))?;
                check(
                    verdict == Verdict::Yes,
                    &format!("adapted {label} q={q}: post-removal dynamics can still cycle"),
                )?;
            }
            // Step counts after the removal: two forced moves for the out
            // family under a strictly positive quota (with quota zero the
            // abandoned low-value agents may keep walking, see the ledger),
            // zero moves for the in family at every quota.
            use num_traits::Zero;
            if !q.is_zero() {
                let (game, start, _) = out.game.remove_agent(&out.start, 0).unwrap();
                let t = run(&game, &out.notion, &start, SchedulerPolicy::FirstInOrder, 1_000)
                    .map_err(|e| format!("{e}"))?;
                check(
                    t.outcome == Outcome::Converged && t.len() == 2,
                    &format!("adapted out q={q}: expected exactly 2 post-removal steps"),
                )?;
            }
            let (game, start, _) = r#in.game.remove_agent(&r#in.start, 0).unwrap();
            let t = run(&game, &r#in.notion, &start, SchedulerPolicy::FirstInOrder, 1_000)
                .map_err(|e| format!("{e}"))?;
            check(
                t.outcome == Outcome::Converged && t.is_empty(),
                &format!("adapted in q={q}: expected convergence without a single step"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_07_rx3c_yes_side() {
    report("7 (reduction, solvable side)", || {
        let instance = Rx3cInstance::trivial_yes(1);
        let subgames = [
            gen_quota_out_cycle(GameClass::Ashg, &ratio(1, 2)).map_err(|e| format!("{e}"))?,
            gen_quota_in_cycle(GameClass::Ashg, &ratio(1, 2)).map_err(|e| format!("{e}"))?,
        ];
        for sub in &subgames {
            let (bundle, layout) =
                gen_rx3c_reduction(&instance, &sub.game, 0, None, &sub.notion)
                    .map_err(|e| format!("{e}"))?;
            let script = bundle
                .scripts
                .get("cover-path")
                .ok_or("no cover script on a solvable instance")?;
            // Full replay under the bundle's notion.
            let trace = replay(&bundle.game, &bundle.notion, &bundle.start, script)
                .map_err(|e| format!("cover script: {e}"))?;
            // All steps except the escape agent's final one are CIS.
            let cis = StabilityNotion::contractual_individual();
            for step in &trace.steps {
                if step.index + 1 == trace.len() {
                    check(step.deviator == layout.escape, "last step is not the escape move")?;
                    continue;
                }
                let ok = is_deviation_allowed(
                    &bundle.game,
                    &cis,
                    &trace.partitions[step.index],
                    step.deviator,
                    &step.to,
                )
                .map_err(|e| format!("{e}"))?;
                check(ok, &format!("script step {} is not CIS", step.index))?;
            }
            // The grouping potential strictly increases on every element
            // move into a grouping coalition.
            let grouping: BTreeSet<usize> = layout.grouping_agents.iter().copied().collect();
            for step in &trace.steps {
                if !layout.element_agents.contains(&step.deviator) {
                    continue;
                }
                let before = hedonic_core::cis::potential_phi(
                    &trace.partitions[step.index],
                    &grouping,
                );
                let after = hedonic_core::cis::potential_phi(
                    &trace.partitions[step.index + 1],
                    &grouping,
                );
                check(after > before, "an element move did not raise the potential")?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_08_rx3c_no_side() {
    report("8 (reduction, unsolvable side)", || {
        let instance =
            find_rx3c_no_instance(2, 10_000).ok_or("no-instance search came up empty")?;
        let sub = hedonic_core::CardinalGame::new(1, GameClass::Ashg);
        let (bundle, layout) = gen_rx3c_reduction(
            &instance,
            &sub,
            0,
            None,
            &StabilityNotion::contractual_individual(),
        )
        .map_err(|e| format!("{e}"))?;
        check(
            !bundle.scripts.contains_key("cover-path"),
            "an unsolvable instance produced a cover script",
        )?;
        let pair = (layout.escape, layout.hostage);
        for invariant in [
            SampledInvariant::PairIntact { pair },
            SampledInvariant::TypeCatalogue(layout.clone()),
            SampledInvariant::NoSideMixing {
                side: layout.side.clone(),
                exempt_pair: pair,
            },
        ] {
            bundle
                .evaluate(&CheckKind::Sampled {
                    notion: NotionRef::Bundle,
                    runs: 50,
                    steps: 500,
                    invariant,
                })
                .map_err(|e| format!("sampled invariant violated: {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_09_theorem_compositions() {
    report("9 (convergence-hardness compositions)", || {
        let instance = Rx3cInstance::trivial_yes(1);
        let sub = gen_quota_in_cycle(GameClass::Ashg, &rat(0)).map_err(|e| format!("{e}"))?;
        let (pcd, _) = gen_pcd_hardness(&instance, &sub.game, &sub.start, &sub.notion)
            .map_err(|e| format!("{e}"))?;
        for (name, result) in pcd.run_manifest() {
            result.map_err(|e| format!("composed convergence bundle, {name}: {e}"))?;
        }
        let adapted =
            gen_quota_in_cycle_adapted(GameClass::Ashg, &rat(0)).map_err(|e| format!("{e}"))?;
        let (ncd, _) = gen_ncd_hardness(&instance, &adapted.game, &adapted.start, &adapted.notion)
            .map_err(|e| format!("{e}"))?;
        for (name, result) in ncd.run_manifest() {
            result.map_err(|e| format!("composed cycling bundle, {name}: {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_10_indset_gadget() {
    report("10 (independent-set gadget)", || {
        let like = rat(1);
        let dislike = rat(-1);

        // Path on three vertices: the maximum independent set has size 2.
        let path = IndSetInstance::new(3, vec![(0, 1), (1, 2)], 3).map_err(|e| format!("{e}"))?;
        check(path.max_independent_set().len() == 2, "path graph brute force disagrees")?;
        let (bundle, _) = gen_indset_reduction(&path, GameClass::Ashg, &like, &dislike)
            .map_err(|e| format!("{e}"))?;
        let (verdict, _) = decide_reachable_ir_cis(&bundle.game, &bundle.start, DEFAULT_NODE_CAP)
            .map_err(|e| format!("{e}"))?;
        check(verdict == Verdict::No, "unsolvable graph decided Yes")?;
        for (name, result) in bundle.run_manifest() {
            result.map_err(|e| format!("path-graph bundle, {name}: {e}"))?;
        }

        // Empty graph on three vertices: all three are independent.
        let empty = IndSetInstance::new(3, vec![], 3).map_err(|e| format!("{e}"))?;
        check(empty.max_independent_set().len() == 3, "empty graph brute force disagrees")?;
        let (bundle, _) = gen_indset_reduction(&empty, GameClass::Ashg, &like, &dislike)
            .map_err(|e| format!("{e}"))?;
        let (verdict, witness) =
            decide_reachable_ir_cis(&bundle.game, &bundle.start, DEFAULT_NODE_CAP)
                .map_err(|e| format!("{e}"))?;
        check(verdict == Verdict::Yes, "solvable graph decided No")?;
        let cis = StabilityNotion::contractual_individual();
        let trace = replay(&bundle.game, &cis, &bundle.start, &witness.ok_or("no witness")?)
            .map_err(|e| format!("witness replay: {e}"))?;
        check(
            bundle.game.is_individually_rational(trace.final_partition()),
            "witness does not end individually rational",
        )?;
        for (name, result) in bundle.run_manifest() {
            result.map_err(|e| format!("empty-graph bundle, {name}: {e}"))?;
        }
        Ok(())
    });
}

#[test]
fn criterion_11_standard_stability_framework() {
    report("11 (standard-stability framework)", || {
        let mut rng = StdRng::seed_from_u64(0xAC11);

        // Equivalence of the favor-set rule and the anonymized predicate.
        let mut sampled = 0usize;
        while sampled < 1000 {
            let n = rng.gen_range(2..=7);
            let class = GameClass::ALL[rng.gen_range(0..3)];
            let game = random_game(&mut rng, n, class);
            let pi = random_partition(&mut rng, n);
            let quotas = VoteQuotas::new(
                ratio(rng.gen_range(0..=6), 6),
                ratio(rng.gen_range(0..=6), 6),
            )
            .unwrap();
            let a = rng.gen_range(0..n);
            let mut targets: Vec<hedonic_core::DeviationTarget> = pi
                .coalitions()
                .iter()
                .filter(|c| !c.contains(a))
                .map(|c| hedonic_core::DeviationTarget::Join(c.clone()))
                .collect();
            if pi.coalition_of(a).len() > 1 {
                targets.push(hedonic_core::DeviationTarget::Solo);
            }
            for t in targets {
                let direct =
                    is_vote_deviation(&game, &quotas, &pi, a, &t).map_err(|e| format!("{e}"))?;
                let data = utility_change_data(&game, &pi, a, &t).map_err(|e| format!("{e}"))?;
                check(
                    direct == vote_predicate(&quotas, &data),
                    "favor-set rule and change predicate disagree",
                )?;
                sampled += 1;
            }
        }

        // Monotonicity under domination, in the regime where it holds (an
        // empty dominated multiset against a strictly-losing dominating one
        // is the documented boundary case).
        use num_traits::Signed;
        let rand_changes = |rng: &mut StdRng, max_len: usize| -> UtilityChanges {
            let len = rng.gen_range(0..=max_len);
            UtilityChanges::new(
                (0..len)
                    .map(|_| {
                        UtilityChange::new(rat(rng.gen_range(-3..=3)), rat(rng.gen_range(-3..=3)))
                    })
                    .collect(),
            )
        };
        let weaken = |rng: &mut StdRng, base: &UtilityChanges| -> UtilityChanges {
            let min_delta = base
                .items()
                .iter()
                .map(UtilityChange::delta)
                .min()
                .unwrap_or_else(|| rat(0));
            let may_drop = !min_delta.is_negative();
            let mut kept = Vec::new();
            for u in base.items() {
                if may_drop && !rng.gen_bool(0.7) {
                    continue;
                }
                let down = rat(rng.gen_range(0..=2));
                kept.push(UtilityChange::new(u.before.clone(), &u.before + &min_delta - down));
            }
            UtilityChanges::new(kept)
        };
        for _ in 0..1000 {
            let quotas = VoteQuotas::new(
                ratio(rng.gen_range(0..=4), 4),
                ratio(rng.gen_range(0..=4), 4),
            )
            .unwrap();
            let x_hi = rand_changes(&mut rng, 4);
            let y_hi = rand_changes(&mut rng, 4);
            let x_lo = weaken(&mut rng, &x_hi);
            let y_lo = weaken(&mut rng, &y_hi);
            check(x_hi.dominates(&x_lo), "sampler broke domination")?;
            check(y_hi.dominates(&y_lo), "sampler broke domination")?;
            let z_hi = UtilityChange::new(rat(0), rat(rng.gen_range(-2..=3)));
            let z_lo = UtilityChange::new(rat(0), &z_hi.after - rat(rng.gen_range(0..=2)));
            use hedonic_core::stability::DeviationChanges;
            let lo = vote_predicate(
                &quotas,
                &DeviationChanges {
                    abandoned: x_lo,
                    welcoming: y_lo,
                    deviator: z_lo,
                },
            );
            let hi = vote_predicate(
                &quotas,
                &DeviationChanges {
                    abandoned: x_hi,
                    welcoming: y_hi,
                    deviator: z_hi,
                },
            );
            check(!lo || hi, "monotonicity violated")?;
        }
        Ok(())
    });
}
