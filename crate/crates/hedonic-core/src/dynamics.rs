//! Executing, scripting, and replaying deviation dynamics.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::game::{AgentId, CardinalGame, Rational};
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::{enumerate_deviations, StabilityError, StabilityNotion};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    Stability(StabilityError),
    /// A scripted move was illegal or not allowed under the trace's notion.
    ScriptViolation { index: usize, agent: AgentId },
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::Stability(e) => write!(f, "{e}"),
            DynamicsError::ScriptViolation { index, agent } => {
                write!(f, "script step {index} (agent {agent}) is not allowed")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DynamicsError {}

impl From<StabilityError> for DynamicsError {
    fn from(e: StabilityError) -> DynamicsError {
        DynamicsError::Stability(e)
    }
}

/// How the next deviation is picked when several are allowed.
#[derive(Debug, Clone)]
pub enum SchedulerPolicy {
    /// Always the first move in the deterministic enumeration order.
    FirstInOrder,
    /// A uniformly random allowed move; fully reproducible from the seed.
    RandomSeeded(u64),
    /// Execute exactly this move sequence, validating each step.
    Scripted(Vec<(AgentId, DeviationTarget)>),
}

/// One validated deviation in a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationStep {
    pub index: usize,
    pub deviator: AgentId,
    pub from: Coalition,
    pub to: DeviationTarget,
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// No allowed deviation remains; the final partition is stable.
    Converged,
    /// The canonical partition at `first_seen` (an index into the partition
    /// sequence) was reached again.
    CycleDetected { first_seen: usize },
    /// Step budget ran out (or a script ended on an unstable partition).
    BudgetExhausted,
}

/// A validated deviation sequence together with every intermediate
/// partition (`partitions[0]` is the start; `partitions[i+1]` follows
/// `steps[i]`).
#[derive(Debug, Clone)]
pub struct Trace {
    pub notion: StabilityNotion,
    pub start: Partition,
    pub steps: Vec<DeviationStep>,
    pub partitions: Vec<Partition>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn final_partition(&self) -> &Partition {
        self.partitions.last().expect("at least the start")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The move list, replayable via [`replay`].
    pub fn script(&self) -> Vec<(AgentId, DeviationTarget)> {
        self.steps
            .iter()
            .map(|s| (s.deviator, s.to.clone()))
            .collect()
    }

    /// Utilitarian welfare after each partition in the sequence.
    pub fn welfare_sequence(&self, game: &CardinalGame) -> Vec<Rational> {
        self.partitions
            .iter()
            .map(|p| utilitarian_welfare(game, p))
            .collect()
    }
}

/// Sum of all agents' utilities under `pi`.
pub fn utilitarian_welfare(game: &CardinalGame, pi: &Partition) -> Rational {
    let mut total = Rational::zero();
    for c in pi.coalitions() {
        for a in c.iter() {
            total += game.utility(a, c).expect("member");
        }
    }
    total
}

/// Step budget used when the caller does not pass one: ten times a Bell
/// number estimate for `n`, capped at one million.
pub fn default_step_budget(n: usize) -> usize {
    const CAP: usize = 1_000_000;
    // Bell triangle with saturating arithmetic.
    let mut row: Vec<usize> = alloc::vec![1];
    for _ in 1..=n {
        if *row.last().unwrap() >= CAP {
            return CAP;
        }
        let mut next = alloc::vec![*row.last().unwrap()];
        for &x in &row {
            let v = next.last().unwrap().saturating_add(x);
            next.push(v);
        }
        row = next;
    }
    row[0].saturating_mul(10).min(CAP)
}

struct Scheduler {
    policy: SchedulerPolicy,
    rng: Option<ChaCha8Rng>,
    script_pos: usize,
}

impl Scheduler {
    fn new(policy: SchedulerPolicy) -> Scheduler {
        let rng = match policy {
            SchedulerPolicy::RandomSeeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Scheduler {
            policy,
            rng,
            script_pos: 0,
        }
    }

    /// Next move, or `None` when the run should stop (stable, or script
    /// exhausted).
    fn choose(
        &mut self,
        game: &CardinalGame,
        notion: &StabilityNotion,
        pi: &Partition,
    ) -> Result<Option<(AgentId, DeviationTarget)>, DynamicsError> {
        match &self.policy {
            SchedulerPolicy::Scripted(script) => {
                let Some((agent, target)) = script.get(self.script_pos).cloned() else {
                    return Ok(None);
                };
                let index = self.script_pos;
                self.script_pos += 1;
                let allowed =
                    crate::stability::is_deviation_allowed(game, notion, pi, agent, &target)
                        .map_err(|_| DynamicsError::ScriptViolation { index, agent })?;
                if !allowed {
                    return Err(DynamicsError::ScriptViolation { index, agent });
                }
                Ok(Some((agent, target)))
            }
            SchedulerPolicy::FirstInOrder => {
                let moves = enumerate_deviations(game, notion, pi)?;
                Ok(moves.into_iter().next())
            }
            SchedulerPolicy::RandomSeeded(_) => {
                let moves = enumerate_deviations(game, notion, pi)?;
                if moves.is_empty() {
                    return Ok(None);
                }
                let rng = self.rng.as_mut().expect("seeded rng");
                let i = (rng.next_u64() % moves.len() as u64) as usize;
                Ok(moves.into_iter().nth(i))
            }
        }
    }
}

/// Run the dynamics from `start` until convergence, a revisited partition,
/// or the step budget.
///
/// For `FirstInOrder` / `RandomSeeded` the run stops at the first revisit
/// (`CycleDetected`). A `Scripted` run always executes its whole script —
/// revisits are recorded but do not interrupt it — and then reports
/// `CycleDetected` if any partition repeated, `Converged` if the final
/// partition is stable, and `BudgetExhausted` otherwise.
pub fn run(
    game: &CardinalGame,
    notion: &StabilityNotion,
    start: &Partition,
    policy: SchedulerPolicy,
    max_steps: usize,
) -> Result<Trace, DynamicsError> {
    let scripted = matches!(policy, SchedulerPolicy::Scripted(_));
    let mut scheduler = Scheduler::new(policy);
    let mut partitions = alloc::vec![start.clone()];
    let mut steps: Vec<DeviationStep> = Vec::new();
    let mut visited: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    visited.insert(start.encode(), 0);
    let mut first_repeat: Option<usize> = None;

    let outcome = loop {
        if !scripted && steps.len() >= max_steps {
            break Outcome::BudgetExhausted;
        }
        let current = partitions.last().unwrap().clone();
        let Some((agent, target)) = scheduler.choose(game, notion, &current)? else {
            if scripted {
                break match first_repeat {
                    Some(first_seen) => Outcome::CycleDetected { first_seen },
                    None => {
                        if crate::stability::is_stable(game, notion, &current)? {
                            Outcome::Converged
                        } else {
                            Outcome::BudgetExhausted
                        }
                    }
                };
            }
            break Outcome::Converged;
        };
        let from = current.coalition_of(agent).clone();
        let next = current
            .apply_deviation(agent, &target)
            .map_err(StabilityError::from)?;
        steps.push(DeviationStep {
            index: steps.len(),
            deviator: agent,
            from,
            to: target,
        });
        let key = next.encode();
        if let Some(&first_seen) = visited.get(&key) {
            // Canonical encodings are injective, but re-verify structurally
            // before declaring a cycle.
            debug_assert_eq!(&partitions[first_seen], &next);
            partitions.push(next);
            if scripted {
                first_repeat.get_or_insert(first_seen);
                continue;
            }
            break Outcome::CycleDetected { first_seen };
        }
        visited.insert(key, partitions.len());
        partitions.push(next);
    };

    Ok(Trace {
        notion: notion.clone(),
        start: start.clone(),
        steps,
        partitions,
        outcome,
    })
}

/// Execute a fixed move script from `start`, validating every step under
/// `notion`.
pub fn replay(
    game: &CardinalGame,
    notion: &StabilityNotion,
    start: &Partition,
    script: &[(AgentId, DeviationTarget)],
) -> Result<Trace, DynamicsError> {
    run(
        game,
        notion,
        start,
        SchedulerPolicy::Scripted(script.to_vec()),
        script.len(),
    )
}
