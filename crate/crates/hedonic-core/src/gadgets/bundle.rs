//! Generated game + start partition + scripted deviation sequences +
//! a manifest of named, machine-checkable expected properties.
//!
//! Manifest entries are data, not prose: each one names a check that can be
//! evaluated against the bundle (and re-evaluated after deserialization),
//! so the behavioral claims behind each construction run as tests.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::dynamics::{replay, run, Outcome, SchedulerPolicy, Trace};
use crate::game::{AgentId, CardinalGame, Rational};
use crate::oracle::{decide_ncd, decide_pcd, decide_reachable_ir_cis, Verdict};
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::{
    enumerate_deviations, is_deviation_allowed, StabilityNotion, VoteQuotas,
};

use super::indset::IndSetLayout;
use super::rx3c::Rx3cLayout;

pub type Script = Vec<(AgentId, DeviationTarget)>;

/// Which deviation rule a manifest check evaluates under.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NotionRef {
    /// The bundle's own notion.
    Bundle,
    Nash,
    Cis,
    Quotas(VoteQuotas),
}

/// Expected run outcome, in serializable form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExpectedOutcome {
    Cycles,
    ConvergesInExactly(usize),
}

/// Invariants checked over randomly sampled bounded runs.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SampledInvariant {
    /// The two agents form a coalition of their own in every visited
    /// partition.
    PairIntact { pair: (AgentId, AgentId) },
    /// No visited coalition mixes `side` and its complement, except exactly
    /// the exempt pair.
    NoSideMixing {
        side: Vec<AgentId>,
        exempt_pair: (AgentId, AgentId),
    },
    /// Every visited coalition matches the reduction's coalition-type
    /// catalogue.
    TypeCatalogue(Rx3cLayout),
    /// Every sampled move of a `movers` agent between two coalitions that
    /// both contain `grouping` agents strictly increases the grouping
    /// potential.
    PhiIncreasing {
        grouping: Vec<AgentId>,
        movers: Vec<AgentId>,
    },
}

/// One machine-checkable manifest entry.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CheckKind {
    /// Exactly one allowed deviation at the start partition.
    UniqueMoveAtStart { notion: NotionRef },
    /// The first enumerated allowed move at the start is by this agent.
    FirstMoveBy { notion: NotionRef, agent: AgentId },
    /// A first-in-order run from the start behaves as expected.
    RunFirstInOrder {
        notion: NotionRef,
        max_steps: usize,
        expect: ExpectedOutcome,
    },
    /// After one (unique) allowed move from the start, the partition equals
    /// the start under the relabeling `a_i -> a_{(i+shift) mod deviators}`
    /// on agents `0..deviators`, with the `grouping` agents rotated by
    /// `grouping_shift` positions (all other agents fixed).
    ShiftPeriodicity {
        notion: NotionRef,
        shift: usize,
        deviators: usize,
        grouping: Vec<AgentId>,
        grouping_shift: usize,
    },
    /// The named script replays without violation under the notion.
    ScriptReplays { script: String, notion: NotionRef },
    /// Each step of the named script is allowed under CIS when reached,
    /// except the listed indices (which must still replay under `notion`,
    /// covered by `ScriptReplays`).
    ScriptStepsCis { script: String, except: Vec<usize> },
    /// The named script has at least this many steps.
    ScriptLengthAtLeast { script: String, min: usize },
    /// Along the named script, every move by a `movers` agent into a
    /// coalition holding a `grouping` agent strictly raises the grouping
    /// potential.
    ScriptPhiIncreasing {
        script: String,
        grouping: Vec<AgentId>,
        movers: Vec<AgentId>,
    },
    DecidePcd {
        notion: NotionRef,
        expect: Verdict,
        node_cap: usize,
    },
    DecideNcd {
        notion: NotionRef,
        expect: Verdict,
        node_cap: usize,
    },
    /// Replay the named script, then decide from its final partition.
    PostScriptPcd {
        script: String,
        notion: NotionRef,
        expect: Verdict,
        node_cap: usize,
    },
    /// Replay the named script, then run first-in-order expecting a cycle.
    PostScriptCycles {
        script: String,
        notion: NotionRef,
        max_steps: usize,
    },
    /// Remove the agent (re-indexing), then a first-in-order run from the
    /// reduced start converges in exactly `steps` steps.
    AfterRemovalConvergesExactly {
        agent: AgentId,
        notion: NotionRef,
        steps: usize,
        max_steps: usize,
    },
    /// Remove the agent, then every deviation sequence converges.
    AfterRemovalNcdYes {
        agent: AgentId,
        notion: NotionRef,
        node_cap: usize,
    },
    /// Verdict of the reachable-IR-CIS decider from the start.
    IrCisVerdict { expect: Verdict, node_cap: usize },
    /// Randomly sampled bounded runs all satisfy the invariant.
    Sampled {
        notion: NotionRef,
        runs: u64,
        steps: usize,
        invariant: SampledInvariant,
    },
    /// The structural claims of the independent-set reduction.
    IndSetClaims(IndSetLayout),
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestCheck {
    pub name: String,
    pub check: CheckKind,
}

/// A generated construction with everything needed to verify it.
#[derive(Debug, Clone)]
pub struct GadgetBundle {
    pub game: CardinalGame,
    pub start: Partition,
    pub notion: StabilityNotion,
    pub scripts: BTreeMap<String, Script>,
    pub manifest: Vec<ManifestCheck>,
    pub metadata: BTreeMap<String, Rational>,
}

impl GadgetBundle {
    pub fn script(&self, name: &str) -> Result<&Script, String> {
        self.scripts
            .get(name)
            .ok_or_else(|| alloc::format!("bundle has no script named {name:?}"))
    }

    fn resolve(&self, notion: &NotionRef) -> StabilityNotion {
        match notion {
            NotionRef::Bundle => self.notion.clone(),
            NotionRef::Nash => StabilityNotion::nash(),
            NotionRef::Cis => StabilityNotion::contractual_individual(),
            NotionRef::Quotas(q) => StabilityNotion::Vote(q.clone()),
        }
    }

    /// Evaluate every manifest entry; `Err` carries a human-readable reason.
    pub fn run_manifest(&self) -> Vec<(String, Result<(), String>)> {
        self.manifest
            .iter()
            .map(|m| (m.name.clone(), self.evaluate(&m.check)))
            .collect()
    }

    pub fn evaluate(&self, check: &CheckKind) -> Result<(), String> {
        match check {
            CheckKind::UniqueMoveAtStart { notion } => {
                let notion = self.resolve(notion);
                let moves = enumerate_deviations(&self.game, &notion, &self.start)
                    .map_err(|e| alloc::format!("{e}"))?;
                if moves.len() == 1 {
                    Ok(())
                } else {
                    Err(alloc::format!("expected 1 allowed move, found {}", moves.len()))
                }
            }
            CheckKind::FirstMoveBy { notion, agent } => {
                let notion = self.resolve(notion);
                let moves = enumerate_deviations(&self.game, &notion, &self.start)
                    .map_err(|e| alloc::format!("{e}"))?;
                match moves.first() {
                    Some((a, _)) if a == agent => Ok(()),
                    Some((a, _)) => Err(alloc::format!("first move is by agent {a}, expected {agent}")),
                    None => Err("no allowed move at the start".into()),
                }
            }
            CheckKind::RunFirstInOrder {
                notion,
                max_steps,
                expect,
            } => {
                let notion = self.resolve(notion);
                let trace = run(
                    &self.game,
                    &notion,
                    &self.start,
                    SchedulerPolicy::FirstInOrder,
                    *max_steps,
                )
                .map_err(|e| alloc::format!("{e}"))?;
                match (expect, &trace.outcome) {
                    (ExpectedOutcome::Cycles, Outcome::CycleDetected { .. }) => Ok(()),
                    (ExpectedOutcome::ConvergesInExactly(k), Outcome::Converged)
                        if trace.len() == *k =>
                    {
                        Ok(())
                    }
                    _ => Err(alloc::format!(
                        "run ended with {:?} after {} steps, expected {:?}",
                        trace.outcome,
                        trace.len(),
                        expect
                    )),
                }
            }
            CheckKind::ShiftPeriodicity {
                notion,
                shift,
                deviators,
                grouping,
                grouping_shift,
            } => {
                let notion = self.resolve(notion);
                let moves = enumerate_deviations(&self.game, &notion, &self.start)
                    .map_err(|e| alloc::format!("{e}"))?;
                let [(agent, target)] = moves.as_slice() else {
                    return Err(alloc::format!(
                        "expected a unique move, found {}",
                        moves.len()
                    ));
                };
                let next = self
                    .start
                    .apply_deviation(*agent, target)
                    .map_err(|e| alloc::format!("{e}"))?;
                let relabeled =
                    relabel_cyclic(&self.start, *shift, *deviators, grouping, *grouping_shift)?;
                if next == relabeled {
                    Ok(())
                } else {
                    Err(alloc::format!(
                        "partition after the move is {next}, relabeled start is {relabeled}"
                    ))
                }
            }
            CheckKind::ScriptReplays { script, notion } => {
                let notion = self.resolve(notion);
                let s = self.script(script)?;
                replay(&self.game, &notion, &self.start, s)
                    .map(|_| ())
                    .map_err(|e| alloc::format!("{e}"))
            }
            CheckKind::ScriptStepsCis { script, except } => {
                let s = self.script(script)?;
                let trace = replay(&self.game, &self.notion, &self.start, s)
                    .map_err(|e| alloc::format!("{e}"))?;
                let cis = StabilityNotion::contractual_individual();
                for step in &trace.steps {
                    if except.contains(&step.index) {
                        continue;
                    }
                    let pi = &trace.partitions[step.index];
                    let ok = is_deviation_allowed(&self.game, &cis, pi, step.deviator, &step.to)
                        .map_err(|e| alloc::format!("{e}"))?;
                    if !ok {
                        return Err(alloc::format!(
                            "script step {} (agent {}) is not a CIS deviation",
                            step.index,
                            step.deviator
                        ));
                    }
                }
                Ok(())
            }
            CheckKind::ScriptLengthAtLeast { script, min } => {
                let s = self.script(script)?;
                if s.len() >= *min {
                    Ok(())
                } else {
                    Err(alloc::format!("script has {} steps, expected at least {min}", s.len()))
                }
            }
            CheckKind::ScriptPhiIncreasing {
                script,
                grouping,
                movers,
            } => {
                let s = self.script(script)?;
                let trace = replay(&self.game, &self.notion, &self.start, s)
                    .map_err(|e| alloc::format!("{e}"))?;
                check_phi_increasing(&trace, grouping, movers)
            }
            CheckKind::DecidePcd {
                notion,
                expect,
                node_cap,
            } => {
                let notion = self.resolve(notion);
                let (verdict, _) = decide_pcd(&self.game, &notion, &self.start, *node_cap)
                    .map_err(|e| alloc::format!("{e}"))?;
                expect_verdict("pcd", verdict, *expect)
            }
            CheckKind::DecideNcd {
                notion,
                expect,
                node_cap,
            } => {
                let notion = self.resolve(notion);
                let (verdict, _) = decide_ncd(&self.game, &notion, &self.start, *node_cap)
                    .map_err(|e| alloc::format!("{e}"))?;
                expect_verdict("ncd", verdict, *expect)
            }
            CheckKind::PostScriptPcd {
                script,
                notion,
                expect,
                node_cap,
            } => {
                let notion = self.resolve(notion);
                let s = self.script(script)?;
                let trace = replay(&self.game, &notion, &self.start, s)
                    .map_err(|e| alloc::format!("{e}"))?;
                let (verdict, _) =
                    decide_pcd(&self.game, &notion, trace.final_partition(), *node_cap)
                        .map_err(|e| alloc::format!("{e}"))?;
                expect_verdict("post-script pcd", verdict, *expect)
            }
            CheckKind::PostScriptCycles {
                script,
                notion,
                max_steps,
            } => {
                let notion = self.resolve(notion);
                let s = self.script(script)?;
                let trace = replay(&self.game, &notion, &self.start, s)
                    .map_err(|e| alloc::format!("{e}"))?;
                let cont = run(
                    &self.game,
                    &notion,
                    trace.final_partition(),
                    SchedulerPolicy::FirstInOrder,
                    *max_steps,
                )
                .map_err(|e| alloc::format!("{e}"))?;
                match cont.outcome {
                    Outcome::CycleDetected { .. } => Ok(()),
                    other => Err(alloc::format!("expected a cycle, run ended with {other:?}")),
                }
            }
            CheckKind::AfterRemovalConvergesExactly {
                agent,
                notion,
                steps,
                max_steps,
            } => {
                let notion = self.resolve(notion);
                let (game, start, _) = self
                    .game
                    .remove_agent(&self.start, *agent)
                    .map_err(|e| alloc::format!("{e}"))?;
                let trace = run(&game, &notion, &start, SchedulerPolicy::FirstInOrder, *max_steps)
                    .map_err(|e| alloc::format!("{e}"))?;
                if trace.outcome == Outcome::Converged && trace.len() == *steps {
                    Ok(())
                } else {
                    Err(alloc::format!(
                        "run ended with {:?} after {} steps, expected convergence in exactly {steps}",
                        trace.outcome,
                        trace.len()
                    ))
                }
            }
            CheckKind::AfterRemovalNcdYes {
                agent,
                notion,
                node_cap,
            } => {
                let notion = self.resolve(notion);
                let (game, start, _) = self
                    .game
                    .remove_agent(&self.start, *agent)
                    .map_err(|e| alloc::format!("{e}"))?;
                let (verdict, _) = decide_ncd(&game, &notion, &start, *node_cap)
                    .map_err(|e| alloc::format!("{e}"))?;
                expect_verdict("post-removal ncd", verdict, Verdict::Yes)
            }
            CheckKind::IrCisVerdict { expect, node_cap } => {
                let (verdict, _) = decide_reachable_ir_cis(&self.game, &self.start, *node_cap)
                    .map_err(|e| alloc::format!("{e}"))?;
                expect_verdict("ir-cis", verdict, *expect)
            }
            CheckKind::Sampled {
                notion,
                runs,
                steps,
                invariant,
            } => {
                let notion = self.resolve(notion);
                for seed in 0..*runs {
                    let trace = run(
                        &self.game,
                        &notion,
                        &self.start,
                        SchedulerPolicy::RandomSeeded(seed),
                        *steps,
                    )
                    .map_err(|e| alloc::format!("{e}"))?;
                    check_sampled(&trace, invariant)
                        .map_err(|e| alloc::format!("seed {seed}: {e}"))?;
                }
                Ok(())
            }
            CheckKind::IndSetClaims(layout) => layout.check_claims(&self.game, &self.start),
        }
    }
}

fn expect_verdict(what: &str, got: Verdict, expected: Verdict) -> Result<(), String> {
    if got == expected {
        Ok(())
    } else {
        Err(alloc::format!("{what} verdict is {got}, expected {expected}"))
    }
}

/// Relabel agents `0..deviators` of `pi` by `i -> (i + shift) % deviators`
/// and rotate the grouping agents by `grouping_shift` positions, leaving all
/// other agents fixed.
fn relabel_cyclic(
    pi: &Partition,
    shift: usize,
    deviators: usize,
    grouping: &[AgentId],
    grouping_shift: usize,
) -> Result<Partition, String> {
    let map = |a: AgentId| -> AgentId {
        if a < deviators {
            (a + shift) % deviators
        } else if let Some(j) = grouping.iter().position(|&g| g == a) {
            grouping[(j + grouping_shift) % grouping.len()]
        } else {
            a
        }
    };
    let coalitions: Vec<Coalition> = pi
        .coalitions()
        .iter()
        .map(|c| Coalition::new(c.iter().map(map).collect()).expect("bijection"))
        .collect();
    Partition::from_coalitions(pi.agent_count(), coalitions).map_err(|e| alloc::format!("{e}"))
}

fn check_sampled(trace: &Trace, invariant: &SampledInvariant) -> Result<(), String> {
    match invariant {
        SampledInvariant::PairIntact { pair: (a, b) } => {
            let pair = Coalition::of(&[*a, *b]);
            for (i, pi) in trace.partitions.iter().enumerate() {
                if pi.coalition_of(*a) != &pair {
                    return Err(alloc::format!(
                        "partition {i}: agents {a} and {b} are not alone together"
                    ));
                }
            }
            Ok(())
        }
        SampledInvariant::NoSideMixing {
            side,
            exempt_pair: (a, b),
        } => {
            let pair = Coalition::of(&[*a, *b]);
            for (i, pi) in trace.partitions.iter().enumerate() {
                for c in pi.coalitions() {
                    if c == &pair {
                        continue;
                    }
                    let inside = c.iter().filter(|a| side.contains(a)).count();
                    if inside != 0 && inside != c.len() {
                        return Err(alloc::format!(
                            "partition {i}: coalition {c} mixes the two agent sides"
                        ));
                    }
                }
            }
            Ok(())
        }
        SampledInvariant::TypeCatalogue(layout) => {
            for (i, pi) in trace.partitions.iter().enumerate() {
                for c in pi.coalitions() {
                    layout
                        .coalition_type(c)
                        .map_err(|e| alloc::format!("partition {i}: {e}"))?;
                }
            }
            Ok(())
        }
        SampledInvariant::PhiIncreasing { grouping, movers } => {
            check_phi_increasing(trace, grouping, movers)
        }
    }
}

fn check_phi_increasing(
    trace: &Trace,
    grouping: &[AgentId],
    movers: &[AgentId],
) -> Result<(), String> {
    let grouping_set: alloc::collections::BTreeSet<AgentId> = grouping.iter().copied().collect();
    for step in &trace.steps {
        if !movers.contains(&step.deviator) {
            continue;
        }
        let to_grouped = match &step.to {
            DeviationTarget::Join(c) => c.iter().any(|a| grouping_set.contains(&a)),
            DeviationTarget::Solo => false,
        };
        if to_grouped {
            let phi_before = crate::cis::potential_phi(&trace.partitions[step.index], &grouping_set);
            let phi_after =
                crate::cis::potential_phi(&trace.partitions[step.index + 1], &grouping_set);
            if phi_after <= phi_before {
                return Err(alloc::format!(
                    "step {}: grouping potential went {phi_before} -> {phi_after}",
                    step.index
                ));
            }
        }
    }
    Ok(())
}

/// Small helper for generator metadata tables.
pub fn meta_int(v: i64) -> Rational {
    crate::game::rat(v)
}

/// Marks metadata entries that are genuinely zero (distinct from absent).
pub fn meta_zero() -> Rational {
    Rational::zero()
}
