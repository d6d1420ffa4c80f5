//! Reduction from Restricted Exact Cover by 3-Sets (RX3C) to reachability
//! questions about deviation dynamics, wrapping an arbitrary sub-game.
//!
//! Given an RX3C instance and a sub-game with a designated free agent, the
//! generator emits a larger game whose dynamics can free that agent (by
//! letting a blocked companion escape) exactly when the instance has an
//! exact cover. The companion's escape valuations are adapted to the
//! deviation rule at generation time, so the same construction serves every
//! notion that lets the escape happen in at least one direction.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand_core::{RngCore, SeedableRng};

use crate::game::{rat, AgentId, CardinalGame, Rational};
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::{is_deviation_allowed, StabilityNotion};

use super::bundle::{CheckKind, GadgetBundle, ManifestCheck, NotionRef, SampledInvariant, Script};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rx3cError {
    InvalidInstance(String),
    BadSubgame(String),
    Stability(String),
}

impl fmt::Display for Rx3cError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rx3cError::InvalidInstance(m) => write!(f, "not a valid RX3C instance: {m}"),
            Rx3cError::BadSubgame(m) => write!(f, "unusable sub-game: {m}"),
            Rx3cError::Stability(m) => f.write_str(m),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Rx3cError {}

/// An RX3C instance: a universe of `3h` elements and `3h` three-element
/// sets such that every element occurs in exactly three sets. An exact
/// cover, when one exists, picks `h` pairwise disjoint sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rx3cInstance {
    pub h: usize,
    /// Each set as three distinct ascending element indices below `3h`.
    pub sets: Vec<[usize; 3]>,
}

impl Rx3cInstance {
    pub fn new(h: usize, sets: Vec<[usize; 3]>) -> Result<Rx3cInstance, Rx3cError> {
        let inst = Rx3cInstance { h, sets };
        inst.validate()?;
        Ok(inst)
    }

    /// The restricted-occurrence invariants; generators re-check these so
    /// hand-built values cannot slip through.
    pub fn validate(&self) -> Result<(), Rx3cError> {
        let bad = |m: String| Err(Rx3cError::InvalidInstance(m));
        if self.h == 0 {
            return bad("h must be positive".into());
        }
        let u = 3 * self.h;
        if self.sets.len() != u {
            return bad(alloc::format!("expected {u} sets, got {}", self.sets.len()));
        }
        let mut occurrences = alloc::vec![0usize; u];
        for (i, s) in self.sets.iter().enumerate() {
            if !(s[0] < s[1] && s[1] < s[2]) {
                return bad(alloc::format!("set {i} is not three ascending elements"));
            }
            if s[2] >= u {
                return bad(alloc::format!("set {i} mentions element {} >= {u}", s[2]));
            }
            for &e in s {
                occurrences[e] += 1;
            }
        }
        for (e, &c) in occurrences.iter().enumerate() {
            if c != 3 {
                return bad(alloc::format!("element {e} occurs in {c} sets, expected 3"));
            }
        }
        Ok(())
    }

    /// Indices of `h` pairwise disjoint sets covering the universe, if any.
    /// Brute force over set combinations; the instances fed to the
    /// generators are small.
    pub fn exact_cover(&self) -> Option<Vec<usize>> {
        let u = 3 * self.h;
        assert!(u <= 64, "cover search uses 64-bit element masks");
        let masks: Vec<u64> = self
            .sets
            .iter()
            .map(|s| s.iter().fold(0u64, |m, &e| m | (1 << e)))
            .collect();
        let full = if u == 64 { u64::MAX } else { (1u64 << u) - 1 };
        fn search(
            masks: &[u64],
            from: usize,
            need: usize,
            acc_mask: u64,
            acc: &mut Vec<usize>,
            full: u64,
        ) -> bool {
            if need == 0 {
                return acc_mask == full;
            }
            for i in from..masks.len() {
                if acc_mask & masks[i] == 0 {
                    acc.push(i);
                    if search(masks, i + 1, need - 1, acc_mask | masks[i], acc, full) {
                        return true;
                    }
                    acc.pop();
                }
            }
            false
        }
        let mut acc = Vec::new();
        if search(&masks, 0, self.h, 0, &mut acc, full) {
            Some(acc)
        } else {
            None
        }
    }

    /// The smallest yes-instance family: `3h` copies of nothing but the
    /// partition `{3i, 3i+1, 3i+2}` blocks, three copies each.
    pub fn trivial_yes(h: usize) -> Rx3cInstance {
        let mut sets = Vec::with_capacity(3 * h);
        for i in 0..h {
            for _ in 0..3 {
                sets.push([3 * i, 3 * i + 1, 3 * i + 2]);
            }
        }
        Rx3cInstance { h, sets }
    }
}

/// Seeded random search for an instance with no exact cover. Returns `None`
/// for `h < 2` (every valid one-triple universe is covered by any of its
/// sets) or when the attempt budget runs out.
pub fn find_rx3c_no_instance(h: usize, attempts: u64) -> Option<Rx3cInstance> {
    if h < 2 {
        return None;
    }
    let u = 3 * h;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x3c);
    for _ in 0..attempts {
        // Three occurrence slots per element, shuffled and cut into triples.
        let mut slots: Vec<usize> = (0..u).flat_map(|e| [e, e, e]).collect();
        for i in (1..slots.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            slots.swap(i, j);
        }
        let mut sets = Vec::with_capacity(u);
        let mut ok = true;
        for chunk in slots.chunks(3) {
            let mut s = [chunk[0], chunk[1], chunk[2]];
            s.sort_unstable();
            if s[0] == s[1] || s[1] == s[2] {
                ok = false;
                break;
            }
            sets.push(s);
        }
        if !ok {
            continue;
        }
        let candidate = Rx3cInstance { h, sets };
        debug_assert!(candidate.validate().is_ok());
        if candidate.exact_cover().is_none() {
            return Some(candidate);
        }
    }
    None
}

/// Agent-index bookkeeping for one instantiation of the reduction, plus the
/// coalition-shape catalogue that every reachable partition obeys.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rx3cLayout {
    pub h: usize,
    pub sets: Vec<[usize; 3]>,
    /// The wrapped sub-game's agents.
    pub side: Vec<AgentId>,
    /// The sub-game agent held hostage next to the escape agent.
    pub hostage: AgentId,
    pub set_agents: Vec<AgentId>,
    pub element_agents: Vec<AgentId>,
    pub restrict_agents: Vec<AgentId>,
    pub grouping_agents: Vec<AgentId>,
    pub dummy_agents: Vec<AgentId>,
    pub anchor: AgentId,
    /// The escape agent, paired with the hostage at the start.
    pub escape: AgentId,
}

/// The shapes a coalition can take in any reachable partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoalitionShape {
    /// A restricting agent left alone.
    LoneRestrictor,
    /// An element agent with her restricting partner.
    ElementPair,
    /// A grouping agent plus any set of element agents.
    Grouped,
    /// A grouping agent, the three elements of one set, and that set's agent.
    FilledGroup,
    /// The anchor with all dummies and at least two thirds of the set agents.
    AnchorHome,
    /// The anchor home after the escape agent arrived.
    AnchorHomeJoined,
    /// The escape agent still guarding the hostage.
    EscapePair,
    /// A coalition entirely inside the wrapped sub-game.
    SideCoalition,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Side,
    Set(usize),
    Element(usize),
    Restrict(usize),
    Grouping,
    Dummy,
    Anchor,
    Escape,
}

impl Rx3cLayout {
    fn role_of(&self, a: AgentId) -> Option<Role> {
        if self.side.contains(&a) {
            return Some(Role::Side);
        }
        if let Some(i) = self.set_agents.iter().position(|&x| x == a) {
            return Some(Role::Set(i));
        }
        if let Some(i) = self.element_agents.iter().position(|&x| x == a) {
            return Some(Role::Element(i));
        }
        if let Some(i) = self.restrict_agents.iter().position(|&x| x == a) {
            return Some(Role::Restrict(i));
        }
        if self.grouping_agents.contains(&a) {
            return Some(Role::Grouping);
        }
        if self.dummy_agents.contains(&a) {
            return Some(Role::Dummy);
        }
        if a == self.anchor {
            return Some(Role::Anchor);
        }
        if a == self.escape {
            return Some(Role::Escape);
        }
        None
    }

    /// Classify a coalition against the catalogue of shapes that can occur
    /// during any deviation sequence from the generated start. A coalition
    /// outside the catalogue means the structural analysis is wrong, so it
    /// is an error, not a silent extra variant.
    pub fn coalition_type(&self, c: &Coalition) -> Result<CoalitionShape, String> {
        let mut sides = 0usize;
        let mut sets: Vec<usize> = Vec::new();
        let mut elements: Vec<usize> = Vec::new();
        let mut restricts: Vec<usize> = Vec::new();
        let mut groupings = 0usize;
        let mut dummies = 0usize;
        let mut has_anchor = false;
        let mut has_escape = false;
        for a in c.iter() {
            match self.role_of(a) {
                Some(Role::Side) => sides += 1,
                Some(Role::Set(i)) => sets.push(i),
                Some(Role::Element(i)) => elements.push(i),
                Some(Role::Restrict(i)) => restricts.push(i),
                Some(Role::Grouping) => groupings += 1,
                Some(Role::Dummy) => dummies += 1,
                Some(Role::Anchor) => has_anchor = true,
                Some(Role::Escape) => has_escape = true,
                None => return Err(alloc::format!("agent {a} has no role in the layout")),
            }
        }
        let off_catalogue = || Err(alloc::format!("coalition {c} matches no catalogued shape"));

        if sides == c.len() {
            return Ok(CoalitionShape::SideCoalition);
        }
        if has_escape {
            if sides == 1 && c.len() == 2 && c.contains(self.hostage) {
                return Ok(CoalitionShape::EscapePair);
            }
            if !has_anchor {
                return off_catalogue();
            }
        }
        if has_anchor {
            // Any number of set agents may still be home (or have drifted
            // back): with duplicate sets in the instance a set agent can leave
            // for an already filled group, so the exact census of Lemma B.4
            // only bounds instances whose sets are pairwise distinct.
            let expected = 1 + usize::from(has_escape) + dummies + sets.len();
            if dummies != self.dummy_agents.len() || c.len() != expected {
                return off_catalogue();
            }
            return Ok(if has_escape {
                CoalitionShape::AnchorHomeJoined
            } else {
                CoalitionShape::AnchorHome
            });
        }
        if groupings == 1 {
            if c.len() == 1 + elements.len() {
                return Ok(CoalitionShape::Grouped);
            }
            if !sets.is_empty() && elements.len() == 3 && c.len() == 4 + sets.len() {
                let mut found = elements.clone();
                found.sort_unstable();
                // Duplicate sets let several identical set agents pile onto
                // the same filled group; all of them must match the trio.
                if sets.iter().all(|&i| self.sets[i].to_vec() == found) {
                    return Ok(CoalitionShape::FilledGroup);
                }
            }
            return off_catalogue();
        }
        if c.len() == 1 && restricts.len() == 1 {
            return Ok(CoalitionShape::LoneRestrictor);
        }
        if c.len() == 2 && restricts.len() == 1 && elements == restricts {
            return Ok(CoalitionShape::ElementPair);
        }
        off_catalogue()
    }
}

/// The big constants of one instantiation; exposed through bundle metadata.
pub(crate) struct ReductionScale {
    pub side_unit: Rational,
    pub side_cap: Rational,
    pub outer_unit: Rational,
    pub outer_cap: Rational,
}

fn big(x: usize) -> Rational {
    BigRational::from_integer(BigInt::from(x))
}

fn abs_sum_among(game: &CardinalGame, members: &[AgentId]) -> Rational {
    let set: alloc::collections::BTreeSet<AgentId> = members.iter().copied().collect();
    let mut sum = rat(0);
    for (a, b, v) in game.entries() {
        if set.contains(&a) && set.contains(&b) {
            sum += v.abs();
        }
    }
    sum
}

/// Write the valuations of one reduction copy into `game`. The sub-game
/// valuations among `layout.side` must already be present; `scale_n` is the
/// agent count the thresholds are normalized by (the stand-alone size of
/// this copy, which differs from `game.agent_count()` when several copies
/// share the side).
pub(crate) fn write_reduction_valuations(
    game: &mut CardinalGame,
    instance: &Rx3cInstance,
    layout: &Rx3cLayout,
    scale_n: usize,
) -> ReductionScale {
    let h = instance.h;
    let side_unit = big(1) * (abs_sum_among(game, &layout.side) + rat(1));
    let side_cap = big(scale_n) * side_unit.clone();
    let n_cap = big(scale_n) * side_cap.clone();

    // The escape pair: the hostage wants the escape agent around; the escape
    // agent is indifferent (possibly flipped later by the notion probe).
    game.set(layout.hostage, layout.escape, side_cap.clone());

    // The escape agent longs for the anchor and dreads every set agent.
    game.set(
        layout.escape,
        layout.anchor,
        big(2 * h + 1) * n_cap.clone(),
    );
    for &s in &layout.set_agents {
        game.set(layout.escape, s, -n_cap.clone());
    }
    // The anchor and the dummies only care about the escape agent arriving.
    game.set(layout.anchor, layout.escape, side_cap.clone());
    for &d in &layout.dummy_agents {
        game.set(d, layout.escape, side_cap.clone());
    }

    // Set agents like exactly their own elements, hate everything else that
    // could tempt them, and mildly like the escape agent.
    for (i, s) in instance.sets.iter().enumerate() {
        let sa = layout.set_agents[i];
        for e in 0..3 * h {
            let inside = s.contains(&e);
            let x = layout.element_agents[e];
            let r = layout.restrict_agents[e];
            game.set(sa, x, if inside { n_cap.clone() } else { -n_cap.clone() });
            game.set(sa, r, -n_cap.clone());
        }
        for &g in &layout.grouping_agents {
            game.set(sa, g, -big(2) * n_cap.clone());
        }
        game.set(sa, layout.escape, side_cap.clone());
    }

    // Element agents like each other, the grouping agents, and their own
    // sets' agents; they are repelled by foreign restrictors, foreign sets,
    // and (overwhelmingly) the anchor.
    for e in 0..3 * h {
        let x = layout.element_agents[e];
        for e2 in 0..3 * h {
            if e2 != e {
                game.set(x, layout.element_agents[e2], rat(1));
                game.set(x, layout.restrict_agents[e2], rat(-1));
            }
        }
        for &g in &layout.grouping_agents {
            game.set(x, g, rat(1));
        }
        game.set(x, layout.anchor, -big(scale_n) * n_cap.clone());
        for (i, s) in instance.sets.iter().enumerate() {
            let sa = layout.set_agents[i];
            game.set(x, sa, if s.contains(&e) { n_cap.clone() } else { -n_cap.clone() });
        }
    }

    // Walls between the side and the rest: based on what is written so far,
    // one unit of either region outweighs anything the other offers.
    let outer: Vec<AgentId> = layout
        .set_agents
        .iter()
        .chain(&layout.element_agents)
        .chain(&layout.restrict_agents)
        .chain(&layout.grouping_agents)
        .chain(&layout.dummy_agents)
        .chain([&layout.anchor, &layout.escape])
        .copied()
        .collect();
    let outer_unit = abs_sum_among(game, &outer) + rat(1);
    let outer_cap = big(scale_n) * outer_unit.clone();
    for &p in &layout.side {
        for &d in &outer {
            if p == layout.hostage && d == layout.escape {
                continue;
            }
            game.set(p, d, -side_cap.clone());
            game.set(d, p, -outer_cap.clone());
        }
    }

    ReductionScale {
        side_unit,
        side_cap,
        outer_unit,
        outer_cap,
    }
}

/// The starting coalitions contributed by one copy (everything except the
/// side's own coalitions): singleton grouping agents, element/restrictor
/// pairs, the anchor home, and the escape pair.
pub(crate) fn reduction_start_coalitions(layout: &Rx3cLayout) -> Vec<Coalition> {
    let mut out: Vec<Coalition> = Vec::new();
    for &g in &layout.grouping_agents {
        out.push(Coalition::singleton(g));
    }
    for e in 0..3 * layout.h {
        out.push(Coalition::of(&[
            layout.element_agents[e],
            layout.restrict_agents[e],
        ]));
    }
    let mut home: Vec<AgentId> = layout.set_agents.clone();
    home.extend(&layout.dummy_agents);
    home.push(layout.anchor);
    out.push(Coalition::new(home).expect("nonempty"));
    out.push(Coalition::of(&[layout.escape, layout.hostage]));
    out
}

/// Decide the escape pair's internal valuations for the notion at hand: the
/// escape move must be performable once the anchor home has thinned out. We
/// probe that deviation on a hypothetical partition; if the notion blocks
/// it (the hostage would veto losing her guard), the attachment is flipped
/// so the hostage becomes indifferent and the escape agent becomes the one
/// who is bound. Returns whether the flip happened.
pub(crate) fn adapt_escape_to_notion(
    game: &mut CardinalGame,
    notion: &StabilityNotion,
    layout: &Rx3cLayout,
    scale: &ReductionScale,
    start: &Partition,
) -> Result<bool, Rx3cError> {
    let mut thinned: Vec<AgentId> = layout.set_agents[..2 * layout.h].to_vec();
    thinned.extend(&layout.dummy_agents);
    thinned.push(layout.anchor);
    let target = Coalition::new(thinned).expect("nonempty");
    let mut coalitions: Vec<Coalition> = Vec::new();
    for c in start.coalitions() {
        if c.contains(layout.anchor) {
            coalitions.push(target.clone());
            for &s in &layout.set_agents[2 * layout.h..] {
                coalitions.push(Coalition::singleton(s));
            }
        } else {
            coalitions.push(c.clone());
        }
    }
    let probe = Partition::from_coalitions(start.agent_count(), coalitions)
        .map_err(|e| Rx3cError::Stability(alloc::format!("{e}")))?;
    let allowed = is_deviation_allowed(
        game,
        notion,
        &probe,
        layout.escape,
        &DeviationTarget::Join(target),
    )
    .map_err(|e| Rx3cError::Stability(alloc::format!("{e}")))?;
    if allowed {
        return Ok(false);
    }
    game.set(layout.hostage, layout.escape, rat(0));
    game.set(layout.escape, layout.hostage, scale.side_cap.clone());
    Ok(true)
}

/// The deviation script that realizes an exact cover: element agents gather
/// around the grouping agents set by set, each covering set's agent seals
/// her group, and finally the escape agent leaves for the anchor home.
pub(crate) fn cover_script(
    layout: &Rx3cLayout,
    cover: &[usize],
    start: &Partition,
) -> Result<Script, Rx3cError> {
    let mut current = start.clone();
    let mut script: Script = Vec::new();
    let mut push = |current: &mut Partition, a: AgentId, anchor_agent: AgentId| -> Result<(), Rx3cError> {
        let target = DeviationTarget::Join(current.coalition_of(anchor_agent).clone());
        *current = current
            .apply_deviation(a, &target)
            .map_err(|e| Rx3cError::Stability(alloc::format!("{e}")))?;
        script.push((a, target));
        Ok(())
    };
    for (i, &set_index) in cover.iter().enumerate() {
        let g = layout.grouping_agents[i];
        for &e in &layout.sets[set_index] {
            push(&mut current, layout.element_agents[e], g)?;
        }
    }
    for (i, &set_index) in cover.iter().enumerate() {
        push(&mut current, layout.set_agents[set_index], layout.grouping_agents[i])?;
    }
    push(&mut current, layout.escape, layout.anchor)?;
    Ok(script)
}

/// Generate the full reduction for a single sub-game. `hostage` designates
/// which sub-game agent starts paired with the escape agent; `side_start`
/// optionally partitions the remaining sub-game agents (default:
/// singletons). Returns the bundle and the agent-role layout.
pub fn gen_rx3c_reduction(
    instance: &Rx3cInstance,
    subgame: &CardinalGame,
    hostage: AgentId,
    side_start: Option<Vec<Coalition>>,
    notion: &StabilityNotion,
) -> Result<(GadgetBundle, Rx3cLayout), Rx3cError> {
    instance.validate()?;
    let a_n = subgame.agent_count();
    if a_n == 0 {
        return Err(Rx3cError::BadSubgame("sub-game has no agents".into()));
    }
    if hostage >= a_n {
        return Err(Rx3cError::BadSubgame(alloc::format!(
            "designated agent {hostage} is outside the sub-game's 0..{a_n}"
        )));
    }
    let h = instance.h;
    let dummies = a_n.saturating_sub(2 * h);
    let mut next = a_n;
    let mut take = |k: usize| -> Vec<AgentId> {
        let v: Vec<AgentId> = (next..next + k).collect();
        next += k;
        v
    };
    let layout = Rx3cLayout {
        h,
        sets: instance.sets.clone(),
        side: (0..a_n).collect(),
        hostage,
        set_agents: take(3 * h),
        element_agents: take(3 * h),
        restrict_agents: take(3 * h),
        grouping_agents: take(h),
        dummy_agents: take(dummies),
        anchor: take(1)[0],
        escape: take(1)[0],
    };
    let n = next;

    let mut game = CardinalGame::new(n, subgame.class());
    for (a, b, v) in subgame.entries() {
        game.set(a, b, v.clone());
    }
    let scale = write_reduction_valuations(&mut game, instance, &layout, n);

    let mut coalitions = reduction_start_coalitions(&layout);
    match side_start {
        Some(cs) => {
            for c in &cs {
                if c.contains(hostage) {
                    return Err(Rx3cError::BadSubgame(
                        "the designated agent may not appear in the side start".into(),
                    ));
                }
            }
            coalitions.extend(cs);
        }
        None => {
            for a in 0..a_n {
                if a != hostage {
                    coalitions.push(Coalition::singleton(a));
                }
            }
        }
    }
    let start = Partition::from_coalitions(n, coalitions)
        .map_err(|e| Rx3cError::BadSubgame(alloc::format!("{e}")))?;

    let adapted = adapt_escape_to_notion(&mut game, notion, &layout, &scale, &start)?;

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    let cover = instance.exact_cover();
    if let Some(cover) = &cover {
        scripts.insert("cover-path".into(), cover_script(&layout, cover, &start)?);
    }

    let mut manifest = alloc::vec![
        ManifestCheck {
            name: "sampled-runs-stay-on-catalogue".into(),
            check: CheckKind::Sampled {
                notion: NotionRef::Bundle,
                runs: 10,
                steps: 120,
                invariant: SampledInvariant::TypeCatalogue(layout.clone()),
            },
        },
        ManifestCheck {
            name: "sampled-runs-never-mix-the-sides".into(),
            check: CheckKind::Sampled {
                notion: NotionRef::Bundle,
                runs: 10,
                steps: 120,
                invariant: SampledInvariant::NoSideMixing {
                    side: layout.side.clone(),
                    exempt_pair: (layout.escape, layout.hostage),
                },
            },
        },
    ];
    match &cover {
        Some(_) => {
            let script_len = scripts["cover-path"].len();
            manifest.push(ManifestCheck {
                name: "cover-script-replays".into(),
                check: CheckKind::ScriptReplays {
                    script: "cover-path".into(),
                    notion: NotionRef::Bundle,
                },
            });
            manifest.push(ManifestCheck {
                name: "cover-script-is-cis-until-the-escape".into(),
                check: CheckKind::ScriptStepsCis {
                    script: "cover-path".into(),
                    except: alloc::vec![script_len - 1],
                },
            });
            manifest.push(ManifestCheck {
                name: "grouping-potential-increases-along-script".into(),
                check: CheckKind::ScriptPhiIncreasing {
                    script: "cover-path".into(),
                    grouping: layout.grouping_agents.clone(),
                    movers: layout.element_agents.clone(),
                },
            });
        }
        None => {
            manifest.push(ManifestCheck {
                name: "sampled-runs-keep-the-escape-pair-intact".into(),
                check: CheckKind::Sampled {
                    notion: NotionRef::Bundle,
                    runs: 10,
                    steps: 120,
                    invariant: SampledInvariant::PairIntact {
                        pair: (layout.escape, layout.hostage),
                    },
                },
            });
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("h".into(), rat(h as i64));
    metadata.insert("n".into(), rat(n as i64));
    metadata.insert("side_unit".into(), scale.side_unit.clone());
    metadata.insert("side_cap".into(), scale.side_cap.clone());
    metadata.insert("outer_unit".into(), scale.outer_unit.clone());
    metadata.insert("outer_cap".into(), scale.outer_cap.clone());
    metadata.insert("adapted".into(), rat(adapted as i64));
    metadata.insert("has_cover".into(), rat(cover.is_some() as i64));

    let bundle = GadgetBundle {
        game,
        start,
        notion: notion.clone(),
        scripts,
        manifest,
        metadata,
    };
    Ok((bundle, layout))
}
