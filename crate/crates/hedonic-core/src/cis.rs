//! Constructive algorithms around contractual individual stability:
//! owner extraction from converged traces, trace compression, the bounded
//! three-phase procedure, and the grouping-coalition potential.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::dynamics::{replay, DeviationStep, DynamicsError, Outcome, Trace};
use crate::game::{AgentId, CardinalGame, GameClass, Rational};
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::{
    enumerate_deviations, is_deviation_allowed, StabilityError, StabilityNotion,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CisError {
    NotAshg(GameClass),
    NotACisTrace(String),
    /// A final coalition without exactly one never-deviated member; this
    /// would falsify the owner claim, so it is surfaced, not repaired.
    OwnerInvariant { coalition: Coalition, never_deviated: Vec<AgentId> },
    ShortcutRejected(String),
    PhaseViolation(String),
    BoundExceeded { steps: usize, bound: usize },
    Dynamics(String),
}

impl fmt::Display for CisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CisError::NotAshg(c) => write!(f, "operation is defined for ASHG games only, got {c}"),
            CisError::NotACisTrace(m) => write!(f, "not a usable CIS trace: {m}"),
            CisError::OwnerInvariant { coalition, never_deviated } => write!(
                f,
                "coalition {coalition} has {} never-deviated members, expected exactly 1",
                never_deviated.len()
            ),
            CisError::ShortcutRejected(m) => write!(f, "shortcut construction failed: {m}"),
            CisError::PhaseViolation(m) => write!(f, "phase invariant violated: {m}"),
            CisError::BoundExceeded { steps, bound } => {
                write!(f, "{steps} deviations exceed the bound of {bound}")
            }
            CisError::Dynamics(m) => f.write_str(m),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CisError {}

impl From<StabilityError> for CisError {
    fn from(e: StabilityError) -> CisError {
        CisError::Dynamics(alloc::format!("{e}"))
    }
}

impl From<DynamicsError> for CisError {
    fn from(e: DynamicsError) -> CisError {
        CisError::Dynamics(alloc::format!("{e}"))
    }
}

/// Number of agents with a strictly positive valuation toward someone who
/// values them at exactly zero. ASHG only.
pub fn s_of_game(game: &CardinalGame) -> Result<usize, CisError> {
    Ok(one_sided_admirers(game)?.len())
}

/// The agents counted by [`s_of_game`], as a set.
pub fn one_sided_admirers(game: &CardinalGame) -> Result<BTreeSet<AgentId>, CisError> {
    if game.class() != GameClass::Ashg {
        return Err(CisError::NotAshg(game.class()));
    }
    let mut out = BTreeSet::new();
    for a in game.agents() {
        for b in game.agents() {
            if a != b && game.value(a, b) > Rational::zero() && game.value(b, a).is_zero() {
                out.insert(a);
                break;
            }
        }
    }
    Ok(out)
}

/// Map from each final coalition to its unique never-deviated member.
pub type OwnerMap = BTreeMap<Coalition, AgentId>;

fn check_cis_trace(trace: &Trace) -> Result<(), CisError> {
    let n = trace.start.agent_count();
    if trace.start != Partition::singletons(n) {
        return Err(CisError::NotACisTrace("start is not the singleton partition".into()));
    }
    match &trace.notion {
        StabilityNotion::Vote(q)
            if *q.out_quota() == Rational::one() && *q.in_quota() == Rational::one() => {}
        _ => return Err(CisError::NotACisTrace("notion is not CIS".into())),
    }
    if trace.outcome != Outcome::Converged {
        return Err(CisError::NotACisTrace("trace did not converge".into()));
    }
    Ok(())
}

/// For a converged CIS trace from the singleton partition, return the
/// unique never-deviated agent of each final coalition.
pub fn owners(trace: &Trace) -> Result<OwnerMap, CisError> {
    check_cis_trace(trace)?;
    let deviators: BTreeSet<AgentId> = trace.steps.iter().map(|s| s.deviator).collect();
    let mut map = OwnerMap::new();
    for c in trace.final_partition().coalitions() {
        let never: Vec<AgentId> = c.iter().filter(|a| !deviators.contains(a)).collect();
        if never.len() != 1 {
            return Err(CisError::OwnerInvariant {
                coalition: c.clone(),
                never_deviated: never,
            });
        }
        map.insert(c.clone(), never[0]);
    }
    Ok(map)
}

/// Compress a converged CIS trace from singletons into one of length
/// exactly `n - |final partition|`: every non-owner deviates once, from her
/// singleton straight into her owner's growing coalition, ordered by her
/// last deviation time in the source trace.
pub fn shortcut(game: &CardinalGame, trace: &Trace) -> Result<Trace, CisError> {
    let owner_map = owners(trace)?;
    let final_pi = trace.final_partition();
    let owner_of_agent: BTreeMap<AgentId, AgentId> = final_pi
        .coalitions()
        .iter()
        .flat_map(|c| {
            let owner = owner_map[c];
            c.iter().map(move |a| (a, owner))
        })
        .collect();

    let mut last_step: BTreeMap<AgentId, usize> = BTreeMap::new();
    for s in &trace.steps {
        last_step.insert(s.deviator, s.index);
    }
    let mut movers: Vec<AgentId> = trace
        .final_partition()
        .coalitions()
        .iter()
        .flat_map(|c| c.iter())
        .filter(|a| owner_of_agent[a] != *a)
        .collect();
    for a in &movers {
        if !last_step.contains_key(a) {
            return Err(CisError::ShortcutRejected(alloc::format!(
                "non-owner agent {a} never deviated in the source trace"
            )));
        }
    }
    movers.sort_by_key(|a| last_step[a]);

    let n = game.agent_count();
    let mut current = Partition::singletons(n);
    let mut script: Vec<(AgentId, DeviationTarget)> = Vec::new();
    for a in movers {
        let owner = owner_of_agent[&a];
        let target = DeviationTarget::Join(current.coalition_of(owner).clone());
        current = current
            .apply_deviation(a, &target)
            .map_err(|e| CisError::ShortcutRejected(alloc::format!("{e}")))?;
        script.push((a, target));
    }
    let notion = StabilityNotion::contractual_individual();
    let out = replay(game, &notion, &Partition::singletons(n), &script)
        .map_err(|e| CisError::ShortcutRejected(alloc::format!("{e}")))?;
    let expected_len = n - final_pi.len();
    if out.len() != expected_len {
        return Err(CisError::ShortcutRejected(alloc::format!(
            "compressed length {} differs from n - |partition| = {expected_len}",
            out.len()
        )));
    }
    if out.final_partition() != final_pi {
        return Err(CisError::ShortcutRejected(
            "compressed trace ends in a different partition".into(),
        ));
    }
    Ok(out)
}

/// `s^s + n`, saturating.
fn three_phase_bound(s: usize, n: usize) -> usize {
    let mut pow: usize = 1;
    for _ in 0..s {
        pow = pow.saturating_mul(s);
    }
    pow.saturating_add(n)
}

/// Run the bounded three-phase CIS procedure on an ASHG from the singleton
/// partition:
///
/// 1. agents outside the one-sided-admirer set `X`, ascending, each make a
///    single best CIS deviation if one exists;
/// 2. agents in `X`, ascending, each join their best coalition containing
///    an agent outside `X` (ties by minimum member), when such a CIS join
///    exists;
/// 3. first-in-order CIS dynamics, asserting that only `X` agents can move.
///
/// Errors if the step count would exceed `s^s + n` — that bound is the
/// point of the procedure.
pub fn three_phase_cis(game: &CardinalGame) -> Result<Trace, CisError> {
    let admirers = one_sided_admirers(game)?;
    let n = game.agent_count();
    let s = admirers.len();
    let bound = three_phase_bound(s, n);
    let notion = StabilityNotion::contractual_individual();

    let start = Partition::singletons(n);
    let mut current = start.clone();
    let mut steps: Vec<DeviationStep> = Vec::new();
    let mut partitions = alloc::vec![start.clone()];

    let push = |current: &mut Partition,
                    steps: &mut Vec<DeviationStep>,
                    partitions: &mut Vec<Partition>,
                    a: AgentId,
                    target: DeviationTarget|
     -> Result<(), CisError> {
        let from = current.coalition_of(a).clone();
        let next = current
            .apply_deviation(a, &target)
            .map_err(StabilityError::from)?;
        steps.push(DeviationStep {
            index: steps.len(),
            deviator: a,
            from,
            to: target,
        });
        partitions.push(next.clone());
        *current = next;
        if steps.len() > bound {
            return Err(CisError::BoundExceeded { steps: steps.len(), bound });
        }
        Ok(())
    };

    // Phase 1: one ascending pass of the agents outside X.
    for a in game.agents().filter(|a| !admirers.contains(a)) {
        if let Some(target) = best_cis_move(game, &notion, &current, a, None)? {
            push(&mut current, &mut steps, &mut partitions, a, target)?;
        }
    }

    // Phase 2: one ascending pass of X; targets must contain a non-X agent.
    for &a in &admirers {
        let outside = |c: &Coalition| c.iter().any(|m| !admirers.contains(&m));
        if let Some(target) = best_cis_move(game, &notion, &current, a, Some(&outside))? {
            push(&mut current, &mut steps, &mut partitions, a, target)?;
        }
    }

    // Phase 3: first-in-order, with the claim "only X agents can still
    // deviate" checked on every iteration.
    loop {
        let moves = enumerate_deviations(game, &notion, &current)?;
        if let Some((a, _)) = moves.iter().find(|(a, _)| !admirers.contains(a)) {
            return Err(CisError::PhaseViolation(alloc::format!(
                "agent {a} outside X can deviate after phase 2"
            )));
        }
        let Some((a, target)) = moves.into_iter().next() else {
            break;
        };
        push(&mut current, &mut steps, &mut partitions, a, target)?;
    }

    Ok(Trace {
        notion,
        start,
        steps,
        partitions,
        outcome: Outcome::Converged,
    })
}

/// Best allowed CIS move for `a`: maximal resulting utility, ties broken by
/// the enumeration order (joins by target minimum member, solo last).
/// `target_filter` restricts which join targets qualify.
fn best_cis_move(
    game: &CardinalGame,
    notion: &StabilityNotion,
    pi: &Partition,
    a: AgentId,
    target_filter: Option<&dyn Fn(&Coalition) -> bool>,
) -> Result<Option<DeviationTarget>, CisError> {
    let mut best: Option<(Rational, DeviationTarget)> = None;
    let mut consider = |target: DeviationTarget| -> Result<(), CisError> {
        if !is_deviation_allowed(game, notion, pi, a, &target)? {
            return Ok(());
        }
        let next = pi.apply_deviation(a, &target).map_err(StabilityError::from)?;
        let u = game.utility(a, next.coalition_of(a)).expect("member");
        // Strict comparison keeps the earliest target among ties.
        if best.as_ref().map_or(true, |(b, _)| u > *b) {
            best = Some((u, target));
        }
        Ok(())
    };
    for c in pi.coalitions() {
        if c.contains(a) {
            continue;
        }
        if let Some(filter) = target_filter {
            if !filter(c) {
                continue;
            }
        }
        consider(DeviationTarget::Join(c.clone()))?;
    }
    if target_filter.is_none() && pi.coalition_of(a).len() > 1 {
        consider(DeviationTarget::Solo)?;
    }
    Ok(best.map(|(_, t)| t))
}

/// Sum of squared coalition sizes over the given grouping agents:
/// `Σ_{g} |π(g)|²`.
pub fn potential_phi(pi: &Partition, grouping: &BTreeSet<AgentId>) -> usize {
    grouping
        .iter()
        .map(|&g| {
            let size = pi.coalition_of(g).len();
            size * size
        })
        .sum()
}
