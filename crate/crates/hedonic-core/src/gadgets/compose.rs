//! Compositions of the set-cover reduction with an arbitrary sub-game:
//! one copy per target coalition to make "can the dynamics reach a stable
//! partition?" hard, and a single copy around a cycling sub-game to make
//! "does every deviation sequence converge?" hard.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::game::{rat, AgentId, CardinalGame, Rational};
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::StabilityNotion;

use super::bundle::{CheckKind, GadgetBundle, ManifestCheck, NotionRef, Script};
use super::rx3c::{
    adapt_escape_to_notion, cover_script, gen_rx3c_reduction, reduction_start_coalitions,
    write_reduction_valuations, Rx3cError, Rx3cInstance, Rx3cLayout,
};

/// One reduction copy per coalition of `target`. Every copy holds one
/// extra companion agent hostage; the sub-game's agents can only gain their
/// companions — and thereby become unwilling to ever move again — if the
/// set-cover instance is solvable, once per copy. The assembled partition
/// (each target coalition plus its companion, each cover set sealed around
/// its grouping agent) is stable, and it is reachable exactly when a cover
/// exists.
pub fn gen_pcd_hardness(
    instance: &Rx3cInstance,
    subgame: &CardinalGame,
    target: &Partition,
    notion: &StabilityNotion,
) -> Result<(GadgetBundle, Vec<Rx3cLayout>), Rx3cError> {
    instance.validate()?;
    let n_side = subgame.agent_count();
    if target.agent_count() != n_side {
        return Err(Rx3cError::BadSubgame(alloc::format!(
            "target partitions {} agents, the sub-game has {n_side}",
            target.agent_count()
        )));
    }
    let h = instance.h;
    let copies: Vec<Coalition> = target.coalitions().to_vec();

    // A companion's presence must outweigh anything the sub-game itself can
    // offer, so no member of a completed coalition ever leaves it.
    let mut sub_sum = Rational::from_integer(0.into());
    for (_, _, v) in subgame.entries() {
        sub_sum += v.clone().abs();
    }
    let companion_worth = rat(1) + rat(n_side as i64) * sub_sum;

    let dummies = (n_side + 1).saturating_sub(2 * h);
    let per_copy_outer = 9 * h + h + dummies + 2;
    let mut next = n_side;
    let mut take = |k: usize| -> Vec<AgentId> {
        let v: Vec<AgentId> = (next..next + k).collect();
        next += k;
        v
    };
    let mut layouts: Vec<Rx3cLayout> = Vec::new();
    for _ in &copies {
        let companion = take(1)[0];
        let mut side: Vec<AgentId> = (0..n_side).collect();
        side.push(companion);
        layouts.push(Rx3cLayout {
            h,
            sets: instance.sets.clone(),
            side,
            hostage: companion,
            set_agents: take(3 * h),
            element_agents: take(3 * h),
            restrict_agents: take(3 * h),
            grouping_agents: take(h),
            dummy_agents: take(dummies),
            anchor: take(1)[0],
            escape: take(1)[0],
        });
    }
    let n = next;

    let mut game = CardinalGame::new(n, subgame.class());
    for (a, b, v) in subgame.entries() {
        game.set(a, b, v.clone());
    }
    for (layout, coalition) in layouts.iter().zip(&copies) {
        for p in coalition.iter() {
            game.set(layout.hostage, p, rat(1));
            game.set(p, layout.hostage, companion_worth.clone());
        }
    }
    let scales: Vec<_> = layouts
        .iter()
        .map(|layout| {
            write_reduction_valuations(&mut game, instance, layout, n_side + 1 + per_copy_outer)
        })
        .collect();

    let mut coalitions: Vec<Coalition> = copies.clone();
    for layout in &layouts {
        coalitions.extend(reduction_start_coalitions(layout));
    }
    let start = Partition::from_coalitions(n, coalitions)
        .map_err(|e| Rx3cError::BadSubgame(alloc::format!("{e}")))?;

    for (layout, scale) in layouts.iter().zip(&scales) {
        adapt_escape_to_notion(&mut game, notion, layout, scale, &start)?;
    }

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    let mut manifest: Vec<ManifestCheck> = Vec::new();
    let cover = instance.exact_cover();
    if let Some(cover) = &cover {
        let mut current = start.clone();
        let mut script: Script = Vec::new();
        let mut loose_ends: Vec<usize> = Vec::new();
        for (layout, coalition) in layouts.iter().zip(&copies) {
            let part = cover_script(layout, cover, &current)?;
            for (a, t) in part {
                current = current
                    .apply_deviation(a, &t)
                    .map_err(|e| Rx3cError::Stability(alloc::format!("{e}")))?;
                if a == layout.escape {
                    loose_ends.push(script.len());
                }
                script.push((a, t));
            }
            let join =
                DeviationTarget::Join(current.coalition_of(coalition.min_member()).clone());
            current = current
                .apply_deviation(layout.hostage, &join)
                .map_err(|e| Rx3cError::Stability(alloc::format!("{e}")))?;
            script.push((layout.hostage, join));
        }
        scripts.insert("assemble".into(), script);
        manifest.push(ManifestCheck {
            name: "assembly-script-replays".into(),
            check: CheckKind::ScriptReplays {
                script: "assemble".into(),
                notion: NotionRef::Bundle,
            },
        });
        manifest.push(ManifestCheck {
            name: "assembly-is-cis-except-the-escapes".into(),
            check: CheckKind::ScriptStepsCis {
                script: "assemble".into(),
                except: loose_ends,
            },
        });
        manifest.push(ManifestCheck {
            name: "assembled-partition-reaches-stability".into(),
            check: CheckKind::PostScriptPcd {
                script: "assemble".into(),
                notion: NotionRef::Bundle,
                expect: crate::oracle::Verdict::Yes,
                node_cap: 10_000,
            },
        });
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("h".into(), rat(h as i64));
    metadata.insert("n".into(), rat(n as i64));
    metadata.insert("copies".into(), rat(copies.len() as i64));
    metadata.insert("companion_worth".into(), companion_worth);
    metadata.insert("has_cover".into(), rat(cover.is_some() as i64));

    let bundle = GadgetBundle {
        game,
        start,
        notion: notion.clone(),
        scripts,
        manifest,
        metadata,
    };
    Ok((bundle, layouts))
}

/// A single reduction copy whose hostage is the one agent that starts alone
/// in `cycle_start`, with the rest of `cycle_start` as the side's starting
/// coalitions. While the hostage is held, the sub-game's cycle is broken;
/// if (and only if) the cover exists, the escape move frees her and every
/// unbounded run of the sub-game's dynamics becomes possible again.
pub fn gen_ncd_hardness(
    instance: &Rx3cInstance,
    subgame: &CardinalGame,
    cycle_start: &Partition,
    notion: &StabilityNotion,
) -> Result<(GadgetBundle, Rx3cLayout), Rx3cError> {
    if cycle_start.agent_count() != subgame.agent_count() {
        return Err(Rx3cError::BadSubgame(alloc::format!(
            "cycle start partitions {} agents, the sub-game has {}",
            cycle_start.agent_count(),
            subgame.agent_count()
        )));
    }
    let singles: Vec<&Coalition> = cycle_start
        .coalitions()
        .iter()
        .filter(|c| c.len() == 1)
        .collect();
    let [lone] = singles.as_slice() else {
        return Err(Rx3cError::BadSubgame(alloc::format!(
            "cycle start must have exactly one singleton coalition, found {}",
            singles.len()
        )));
    };
    let hostage = lone.min_member();
    let side_start: Vec<Coalition> = cycle_start
        .coalitions()
        .iter()
        .filter(|c| c.len() > 1)
        .cloned()
        .collect();

    let (mut bundle, layout) =
        gen_rx3c_reduction(instance, subgame, hostage, Some(side_start), notion)?;
    if bundle.scripts.contains_key("cover-path") {
        bundle.manifest.push(ManifestCheck {
            name: "freed-hostage-restarts-the-cycle".into(),
            check: CheckKind::PostScriptCycles {
                script: "cover-path".into(),
                notion: NotionRef::Bundle,
                max_steps: 2_000,
            },
        });
    }
    Ok((bundle, layout))
}
