//! Deviation rules: favor sets, the quota-vote family, and the
//! utility-change predicate framework.
//!
//! A deviation of agent `a` from her coalition to a target is *allowed*
//! when it is a strict improvement for `a` (the Nash condition) and, for a
//! quota pair, when enough non-indifferent members of the abandoned and the
//! welcoming coalition approve it. Quota checks are done by integer
//! cross-multiplication so boundary quotas (e.g. 1/2 with an odd voter
//! count) are decided exactly.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::game::{AgentId, CardinalGame, Rational};
use crate::partition::{Coalition, DeviationTarget, Partition, PartitionError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StabilityError {
    Shape(PartitionError),
    /// A custom predicate accepted a move that does not strictly improve the
    /// deviator — a contract violation, surfaced instead of honored.
    CustomAcceptedNonNash { agent: AgentId },
    QuotaOutOfRange,
}

impl fmt::Display for StabilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityError::Shape(e) => write!(f, "{e}"),
            StabilityError::CustomAcceptedNonNash { agent } => write!(
                f,
                "custom predicate accepted a non-improving move of agent {agent}"
            ),
            StabilityError::QuotaOutOfRange => f.write_str("quotas must lie in [0, 1]"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StabilityError {}

impl From<PartitionError> for StabilityError {
    fn from(e: PartitionError) -> StabilityError {
        StabilityError::Shape(e)
    }
}

/// Approval thresholds for the two sides of a deviation, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoteQuotas {
    out_quota: Rational,
    in_quota: Rational,
}

impl VoteQuotas {
    pub fn new(out_quota: Rational, in_quota: Rational) -> Result<VoteQuotas, StabilityError> {
        let ok = |q: &Rational| !q.is_negative() && *q <= Rational::one();
        if !ok(&out_quota) || !ok(&in_quota) {
            return Err(StabilityError::QuotaOutOfRange);
        }
        Ok(VoteQuotas {
            out_quota,
            in_quota,
        })
    }

    pub fn out_quota(&self) -> &Rational {
        &self.out_quota
    }

    pub fn in_quota(&self) -> &Rational {
        &self.in_quota
    }
}

// Serialized as "p/q" strings (with "/q" omitted for integers) so the quotas
// stay exact and readable; deserialization re-runs the range validation.
#[cfg(feature = "serde")]
impl serde::Serialize for VoteQuotas {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("VoteQuotas", 2)?;
        s.serialize_field("out", &alloc::format!("{}", self.out_quota))?;
        s.serialize_field("in", &alloc::format!("{}", self.in_quota))?;
        s.end()
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for VoteQuotas {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            out: alloc::string::String,
            r#in: alloc::string::String,
        }
        let raw = Raw::deserialize(deserializer)?;
        let parse = |s: &str| {
            s.parse::<Rational>()
                .map_err(|e| serde::de::Error::custom(alloc::format!("bad quota {s:?}: {e}")))
        };
        VoteQuotas::new(parse(&raw.out)?, parse(&raw.r#in)?).map_err(serde::de::Error::custom)
    }
}

/// `approvals ≥ quota · voters`, decided as
/// `den(quota) · approvals ≥ num(quota) · voters` in integers.
fn quota_met(quota: &Rational, approvals: usize, voters: usize) -> bool {
    use num_bigint::BigInt;
    let lhs = quota.denom() * BigInt::from(approvals);
    let rhs = quota.numer() * BigInt::from(voters);
    lhs >= rhs
}

/// One agent's utility before and after a deviation (of someone else, or of
/// the agent herself).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UtilityChange {
    pub before: Rational,
    pub after: Rational,
}

impl UtilityChange {
    pub fn new(before: Rational, after: Rational) -> UtilityChange {
        UtilityChange { before, after }
    }

    pub fn delta(&self) -> Rational {
        &self.after - &self.before
    }

    pub fn improves(&self) -> bool {
        self.after > self.before
    }

    pub fn worsens(&self) -> bool {
        self.after < self.before
    }
}

/// A multiset of utility changes; counts matter, order does not.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct UtilityChanges(Vec<UtilityChange>);

impl UtilityChanges {
    pub fn new(mut items: Vec<UtilityChange>) -> UtilityChanges {
        items.sort();
        UtilityChanges(items)
    }

    pub fn empty() -> UtilityChanges {
        UtilityChanges(Vec::new())
    }

    pub fn items(&self) -> &[UtilityChange] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_improving(&self) -> usize {
        self.0.iter().filter(|u| u.improves()).count()
    }

    pub fn count_worsening(&self) -> usize {
        self.0.iter().filter(|u| u.worsens()).count()
    }

    /// `other ⊴ self`: `other` is dominated by `self` — it is no larger and
    /// every delta in it is at most every delta in `self`.
    pub fn dominates(&self, other: &UtilityChanges) -> bool {
        if other.len() > self.len() {
            return false;
        }
        other
            .items()
            .iter()
            .all(|y| self.items().iter().all(|x| y.delta() <= x.delta()))
    }
}

/// The anonymized data a deviation exposes to a stability predicate:
/// changes of the abandoned members, changes of the welcoming members, and
/// the deviator's own change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationChanges {
    pub abandoned: UtilityChanges,
    pub welcoming: UtilityChanges,
    pub deviator: UtilityChange,
}

/// Predicate over anonymized utility-change data. Contract: accept only
/// strict improvements of the deviator (enforced at evaluation time) and be
/// monotone under domination (documented obligation, not enforced).
pub type CustomPredicate = Arc<dyn Fn(&DeviationChanges) -> bool + Send + Sync>;

/// A deviation rule: a quota pair or a user-supplied predicate.
#[derive(Clone)]
pub enum StabilityNotion {
    Vote(VoteQuotas),
    Custom(CustomPredicate),
}

impl fmt::Debug for StabilityNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityNotion::Vote(q) => f.debug_tuple("Vote").field(q).finish(),
            StabilityNotion::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl StabilityNotion {
    pub fn vote(out_quota: Rational, in_quota: Rational) -> StabilityNotion {
        StabilityNotion::Vote(VoteQuotas::new(out_quota, in_quota).expect("quotas in range"))
    }

    /// Nash stability: no consent required on either side.
    pub fn nash() -> StabilityNotion {
        StabilityNotion::vote(Rational::zero(), Rational::zero())
    }

    /// Individual stability: unanimous consent of the welcoming coalition.
    pub fn individual() -> StabilityNotion {
        StabilityNotion::vote(Rational::zero(), Rational::one())
    }

    /// Contractual Nash stability: unanimous consent of the abandoned
    /// coalition.
    pub fn contractual_nash() -> StabilityNotion {
        StabilityNotion::vote(Rational::one(), Rational::zero())
    }

    /// Contractual individual stability: unanimous consent on both sides.
    pub fn contractual_individual() -> StabilityNotion {
        StabilityNotion::vote(Rational::one(), Rational::one())
    }

    /// Vote-in stability with threshold `q` on the welcoming side.
    pub fn vote_in(q: Rational) -> StabilityNotion {
        StabilityNotion::vote(Rational::zero(), q)
    }

    /// Vote-out stability with threshold `q` on the abandoned side.
    pub fn vote_out(q: Rational) -> StabilityNotion {
        StabilityNotion::vote(q, Rational::zero())
    }

    /// Simple-majority stability: quota 1/2 on both sides.
    pub fn simple_majority() -> StabilityNotion {
        let half = crate::game::ratio(1, 2);
        StabilityNotion::vote(half.clone(), half)
    }

    pub fn custom(pred: CustomPredicate) -> StabilityNotion {
        StabilityNotion::Custom(pred)
    }
}

/// Members of `c \ {a}` who strictly prefer `a` inside: `u_b(c ∪ {a}) >
/// u_b(c \ {a})`. Valid whether or not `a ∈ c`.
pub fn favor_in(game: &CardinalGame, c: &Coalition, a: AgentId) -> Vec<AgentId> {
    favor(game, c, a, true)
}

/// Members of `c \ {a}` who strictly prefer `a` outside.
pub fn favor_out(game: &CardinalGame, c: &Coalition, a: AgentId) -> Vec<AgentId> {
    favor(game, c, a, false)
}

fn favor(game: &CardinalGame, c: &Coalition, a: AgentId, inside: bool) -> Vec<AgentId> {
    let with_a = c.with(a);
    let without_a = match with_a.without(a) {
        Some(w) => w,
        None => return Vec::new(), // c \ {a} is empty
    };
    without_a
        .iter()
        .filter(|&b| {
            let u_in = game.utility(b, &with_a).expect("member");
            let u_out = game.utility(b, &without_a).expect("member");
            if inside {
                u_in > u_out
            } else {
                u_out > u_in
            }
        })
        .collect()
}

/// Validates the deviation shape; the successor partition is a byproduct.
pub fn check_shape(
    pi: &Partition,
    a: AgentId,
    target: &DeviationTarget,
) -> Result<Partition, StabilityError> {
    Ok(pi.apply_deviation(a, target)?)
}

/// Does the move strictly improve the deviator?
pub fn is_nash_deviation(
    game: &CardinalGame,
    pi: &Partition,
    a: AgentId,
    target: &DeviationTarget,
) -> Result<bool, StabilityError> {
    let next = check_shape(pi, a, target)?;
    let before = game.utility(a, pi.coalition_of(a)).expect("member");
    let after = game.utility(a, next.coalition_of(a)).expect("member");
    Ok(after > before)
}

/// Nash condition plus both quota conditions over favor sets.
pub fn is_vote_deviation(
    game: &CardinalGame,
    quotas: &VoteQuotas,
    pi: &Partition,
    a: AgentId,
    target: &DeviationTarget,
) -> Result<bool, StabilityError> {
    if !is_nash_deviation(game, pi, a, target)? {
        return Ok(false);
    }
    // Abandoned side: members of π(a) \ {a} vote on a's departure.
    let source = pi.coalition_of(a);
    let out_approve = favor_out(game, source, a).len();
    let out_against = favor_in(game, source, a).len();
    if !quota_met(&quotas.out_quota, out_approve, out_approve + out_against) {
        return Ok(false);
    }
    // Welcoming side: members of the target vote on a's arrival.
    if let DeviationTarget::Join(c) = target {
        let in_approve = favor_in(game, c, a).len();
        let in_against = favor_out(game, c, a).len();
        if !quota_met(&quotas.in_quota, in_approve, in_approve + in_against) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Utility changes of everyone the deviation touches.
pub fn utility_change_data(
    game: &CardinalGame,
    pi: &Partition,
    a: AgentId,
    target: &DeviationTarget,
) -> Result<DeviationChanges, StabilityError> {
    let next = check_shape(pi, a, target)?;
    let source = pi.coalition_of(a);
    let abandoned = UtilityChanges::new(
        source
            .iter()
            .filter(|&b| b != a)
            .map(|b| {
                let before = game.utility(b, source).expect("member");
                let after = game.utility(b, next.coalition_of(b)).expect("member");
                UtilityChange::new(before, after)
            })
            .collect(),
    );
    let welcoming = match target {
        DeviationTarget::Solo => UtilityChanges::empty(),
        DeviationTarget::Join(c) => UtilityChanges::new(
            c.iter()
                .map(|b| {
                    let before = game.utility(b, c).expect("member");
                    let after = game.utility(b, next.coalition_of(b)).expect("member");
                    UtilityChange::new(before, after)
                })
                .collect(),
        ),
    };
    let deviator = UtilityChange::new(
        game.utility(a, source).expect("member"),
        game.utility(a, next.coalition_of(a)).expect("member"),
    );
    Ok(DeviationChanges {
        abandoned,
        welcoming,
        deviator,
    })
}

/// The quota family expressed over anonymized utility-change data: accept
/// iff the deviator strictly improves and, on each side, the improving
/// members meet the quota among the non-indifferent ones.
pub fn vote_predicate(quotas: &VoteQuotas, changes: &DeviationChanges) -> bool {
    if !changes.deviator.improves() {
        return false;
    }
    let out_approve = changes.abandoned.count_improving();
    let out_against = changes.abandoned.count_worsening();
    if !quota_met(&quotas.out_quota, out_approve, out_approve + out_against) {
        return false;
    }
    let in_approve = changes.welcoming.count_improving();
    let in_against = changes.welcoming.count_worsening();
    quota_met(&quotas.in_quota, in_approve, in_approve + in_against)
}

/// Dispatch: is this move allowed under the notion?
pub fn is_deviation_allowed(
    game: &CardinalGame,
    notion: &StabilityNotion,
    pi: &Partition,
    a: AgentId,
    target: &DeviationTarget,
) -> Result<bool, StabilityError> {
    match notion {
        StabilityNotion::Vote(q) => is_vote_deviation(game, q, pi, a, target),
        StabilityNotion::Custom(pred) => {
            let changes = utility_change_data(game, pi, a, target)?;
            if pred(&changes) {
                if !changes.deviator.improves() {
                    return Err(StabilityError::CustomAcceptedNonNash { agent: a });
                }
                Ok(true)
            } else {
                Ok(false)
            }
        }
    }
}

/// All allowed deviations, ordered by (agent index, target's minimum
/// member, solo last). This order is part of the public contract: scripted
/// traces and golden files depend on it.
pub fn enumerate_deviations(
    game: &CardinalGame,
    notion: &StabilityNotion,
    pi: &Partition,
) -> Result<Vec<(AgentId, DeviationTarget)>, StabilityError> {
    let mut out = Vec::new();
    for a in game.agents() {
        for c in pi.coalitions() {
            if c.contains(a) {
                continue;
            }
            let target = DeviationTarget::Join(c.clone());
            if is_deviation_allowed(game, notion, pi, a, &target)? {
                out.push((a, target));
            }
        }
        if pi.coalition_of(a).len() > 1
            && is_deviation_allowed(game, notion, pi, a, &DeviationTarget::Solo)?
        {
            out.push((a, DeviationTarget::Solo));
        }
    }
    Ok(out)
}

/// No allowed deviation exists.
pub fn is_stable(
    game: &CardinalGame,
    notion: &StabilityNotion,
    pi: &Partition,
) -> Result<bool, StabilityError> {
    Ok(enumerate_deviations(game, notion, pi)?.is_empty())
}
