//! Reduction from Independent Set to the question of whether constrained
//! one-sided-consent dynamics can reach an individually rational outcome.
//!
//! The generated game uses exactly two valuation values: a positive `like`
//! and a negative `dislike` with `like >= |dislike|`. An unhappy agent can
//! only become individually rational if a collector agent leaves her
//! coalition for the grouping coalition, and that move only opens up after
//! at least `k` pairwise non-adjacent vertex agents have joined it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::game::{rat, AgentId, CardinalGame, GameClass, Rational};
use crate::oracle::{Verdict, DEFAULT_NODE_CAP};
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::{enumerate_deviations, is_deviation_allowed, StabilityNotion};

use super::bundle::{CheckKind, GadgetBundle, ManifestCheck, NotionRef, Script};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndSetError {
    InvalidInstance(String),
    InvalidValues(String),
}

impl fmt::Display for IndSetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndSetError::InvalidInstance(m) => write!(f, "not a valid IndSet instance: {m}"),
            IndSetError::InvalidValues(m) => f.write_str(m),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for IndSetError {}

/// An Independent Set instance: an undirected graph and a target size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndSetInstance {
    pub vertices: usize,
    /// Normalized edges `(v, w)` with `v < w`, no duplicates.
    pub edges: Vec<(usize, usize)>,
    pub k: usize,
}

impl IndSetInstance {
    pub fn new(
        vertices: usize,
        edges: Vec<(usize, usize)>,
        k: usize,
    ) -> Result<IndSetInstance, IndSetError> {
        let inst = IndSetInstance { vertices, edges, k };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), IndSetError> {
        let bad = |m: String| Err(IndSetError::InvalidInstance(m));
        if self.k < 3 {
            return bad(alloc::format!("the construction needs k >= 3, got {}", self.k));
        }
        if self.vertices == 0 {
            return bad("graph has no vertices".into());
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for &(v, w) in &self.edges {
            if v >= w {
                return bad(alloc::format!("edge ({v}, {w}) is not normalized as v < w"));
            }
            if w >= self.vertices {
                return bad(alloc::format!("edge ({v}, {w}) mentions a missing vertex"));
            }
            if !seen.insert((v, w)) {
                return bad(alloc::format!("duplicate edge ({v}, {w})"));
            }
        }
        Ok(())
    }

    pub fn has_edge(&self, v: usize, w: usize) -> bool {
        let e = if v < w { (v, w) } else { (w, v) };
        self.edges.contains(&e)
    }

    /// Brute-force check for an independent set of size at least `k`.
    pub fn has_independent_set(&self) -> bool {
        self.max_independent_set().len() >= self.k
    }

    /// A maximum independent set, by exhaustive search over vertex subsets.
    pub fn max_independent_set(&self) -> Vec<usize> {
        assert!(self.vertices <= 24, "exhaustive search over vertex subsets");
        let mut best: Vec<usize> = Vec::new();
        for mask in 0u32..(1u32 << self.vertices) {
            if (mask.count_ones() as usize) <= best.len() {
                continue;
            }
            let picked: Vec<usize> =
                (0..self.vertices).filter(|v| mask & (1 << v) != 0).collect();
            let independent = picked
                .iter()
                .enumerate()
                .all(|(i, &v)| picked[i + 1..].iter().all(|&w| !self.has_edge(v, w)));
            if independent {
                best = picked;
            }
        }
        best
    }
}

/// Agent-index bookkeeping for one instantiation, plus the local deviation
/// claims the correctness argument rests on.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndSetLayout {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub k: usize,
    pub vertex_agents: Vec<AgentId>,
    /// `restrict_pos[v]` keeps `restrict_neg[v]` company so neither can
    /// ever leave; together they anchor vertex agent `v`'s start coalition.
    pub restrict_pos: Vec<AgentId>,
    pub restrict_neg: Vec<AgentId>,
    pub dummy_agents: Vec<AgentId>,
    pub collector_home: AgentId,
    pub collector_mate: AgentId,
    /// The agent whose individual rationality is the crux: she starts in the
    /// dummy coalition, which everyone there dislikes her for.
    pub unhappy: AgentId,
    /// The agent who must leave the dummy coalition for the grouping side.
    pub collector: AgentId,
    pub sidekick: AgentId,
}

impl IndSetLayout {
    fn grouping_members(&self) -> [AgentId; 2] {
        [self.collector_home, self.collector_mate]
    }

    fn start(&self, n: usize) -> Partition {
        let mut coalitions: Vec<Coalition> = Vec::new();
        let mut home: Vec<AgentId> = self.dummy_agents.clone();
        home.extend([self.unhappy, self.collector, self.sidekick]);
        coalitions.push(Coalition::new(home).expect("nonempty"));
        for v in 0..self.vertices {
            coalitions.push(Coalition::of(&[
                self.vertex_agents[v],
                self.restrict_pos[v],
                self.restrict_neg[v],
            ]));
        }
        coalitions.push(Coalition::of(&self.grouping_members()));
        Partition::from_coalitions(n, coalitions).expect("layout partitions all agents")
    }

    /// Verify the four local claims the reduction's correctness argument
    /// relies on, by direct deviation checks on the start partition and on
    /// hand-built mid-run partitions.
    pub fn check_claims(&self, game: &CardinalGame, start: &Partition) -> Result<(), String> {
        let notion = StabilityNotion::contractual_individual();
        let fail = |m: String| Err(m);

        // Claim 1: nobody in the dummy coalition except the collector can
        // leave it at the start.
        let moves = enumerate_deviations(game, &notion, start).map_err(|e| alloc::format!("{e}"))?;
        let mut frozen: Vec<AgentId> = self.dummy_agents.clone();
        frozen.extend([self.unhappy, self.sidekick]);
        for (a, _) in &moves {
            if frozen.contains(a) {
                return fail(alloc::format!(
                    "claim 1: agent {a} of the dummy coalition can deviate at the start"
                ));
            }
        }

        // Claim 2: restricting agents never move, whether their vertex agent
        // is still with them or has left.
        let mut thinned_coalitions: Vec<Coalition> = Vec::new();
        for c in start.coalitions() {
            if let Some(v) = (0..self.vertices).find(|&v| c.contains(self.vertex_agents[v])) {
                thinned_coalitions.push(Coalition::singleton(self.vertex_agents[v]));
                thinned_coalitions
                    .push(Coalition::of(&[self.restrict_pos[v], self.restrict_neg[v]]));
            } else {
                thinned_coalitions.push(c.clone());
            }
        }
        let thinned = Partition::from_coalitions(start.agent_count(), thinned_coalitions)
            .map_err(|e| alloc::format!("{e}"))?;
        for pi in [start, &thinned] {
            let moves =
                enumerate_deviations(game, &notion, pi).map_err(|e| alloc::format!("{e}"))?;
            for (a, _) in &moves {
                if self.restrict_pos.contains(a) || self.restrict_neg.contains(a) {
                    return fail(alloc::format!("claim 2: restricting agent {a} can deviate"));
                }
            }
        }

        // Claim 3: a vertex agent can join the grouping coalition exactly
        // when it holds none of her neighbors, and she has no other move.
        for v in 0..self.vertices {
            let a_v = self.vertex_agents[v];
            for w in 0..self.vertices {
                if w == v {
                    continue;
                }
                let with_w = start
                    .apply_deviation(
                        self.vertex_agents[w],
                        &DeviationTarget::Join(start.coalition_of(self.collector_home).clone()),
                    )
                    .map_err(|e| alloc::format!("{e}"))?;
                let target = DeviationTarget::Join(with_w.coalition_of(self.collector_home).clone());
                let allowed = is_deviation_allowed(game, &notion, &with_w, a_v, &target)
                    .map_err(|e| alloc::format!("{e}"))?;
                if allowed == self.edges.contains(&(v.min(w), v.max(w))) {
                    return fail(alloc::format!(
                        "claim 3: vertex agent {a_v} joining next to vertex agent {w} \
                         is allowed={allowed}, adjacency says otherwise"
                    ));
                }
            }
            let moves =
                enumerate_deviations(game, &notion, start).map_err(|e| alloc::format!("{e}"))?;
            for (a, t) in &moves {
                if *a == a_v {
                    match t {
                        DeviationTarget::Join(c) if c.contains(self.collector_home) => {}
                        other => {
                            return fail(alloc::format!(
                                "claim 3: vertex agent {a_v} has an unexpected move to {other}"
                            ))
                        }
                    }
                }
            }
        }

        // Claim 4: the collector can join the grouping coalition exactly
        // once k vertex agents are in it, and has no other move before that.
        for joined in 0..=self.vertices {
            let mut pi = start.clone();
            for &a_v in &self.vertex_agents[..joined] {
                pi = pi
                    .apply_deviation(
                        a_v,
                        &DeviationTarget::Join(pi.coalition_of(self.collector_home).clone()),
                    )
                    .map_err(|e| alloc::format!("{e}"))?;
            }
            let target = DeviationTarget::Join(pi.coalition_of(self.collector_home).clone());
            let allowed = is_deviation_allowed(game, &notion, &pi, self.collector, &target)
                .map_err(|e| alloc::format!("{e}"))?;
            if allowed != (joined >= self.k) {
                return fail(alloc::format!(
                    "claim 4: with {joined} vertex agents gathered the collector's \
                     join is allowed={allowed}, expected {}",
                    joined >= self.k
                ));
            }
            if joined < self.k {
                let moves =
                    enumerate_deviations(game, &notion, &pi).map_err(|e| alloc::format!("{e}"))?;
                if let Some((_, t)) = moves.iter().find(|(a, _)| *a == self.collector) {
                    return fail(alloc::format!(
                        "claim 4: the collector has a premature move to {t}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Generate the reduction. `like` must be positive, `dislike` negative, and
/// `like >= |dislike|` — strictly greater for the fractional classes, whose
/// tipping-point argument needs `s * like + dislike > 0` with `s` as small
/// as 1.
pub fn gen_indset_reduction(
    instance: &IndSetInstance,
    class: GameClass,
    like: &Rational,
    dislike: &Rational,
) -> Result<(GadgetBundle, IndSetLayout), IndSetError> {
    instance.validate()?;
    if !(like > &Rational::zero() && dislike < &Rational::zero()) {
        return Err(IndSetError::InvalidValues(
            "need a positive like value and a negative dislike value".into(),
        ));
    }
    let magnitude_ok = match class {
        GameClass::Ashg => *like >= -dislike.clone(),
        GameClass::Fhg | GameClass::Mfhg => *like > -dislike.clone(),
    };
    if !magnitude_ok {
        return Err(IndSetError::InvalidValues(
            "the like value must outweigh the dislike value".into(),
        ));
    }

    let nv = instance.vertices;
    let k = instance.k;
    let mut next = 0usize;
    let mut take = |m: usize| -> Vec<AgentId> {
        let v: Vec<AgentId> = (next..next + m).collect();
        next += m;
        v
    };
    let vertex_agents = take(nv);
    let restrict_pos = take(nv);
    let restrict_neg = take(nv);
    let dummy_agents = take(k - 1);
    let rest = take(5);
    let layout = IndSetLayout {
        vertices: nv,
        edges: instance.edges.clone(),
        k,
        vertex_agents,
        restrict_pos,
        restrict_neg,
        dummy_agents,
        collector_home: rest[0],
        collector_mate: rest[1],
        unhappy: rest[2],
        collector: rest[3],
        sidekick: rest[4],
    };
    let n = next;

    let mut game = CardinalGame::new(n, class);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                game.set(a, b, dislike.clone());
            }
        }
    }
    // The collector only warms to the dummies, the vertex agents, the
    // unhappy agent, and one half of the grouping pair.
    for &a in layout
        .dummy_agents
        .iter()
        .chain(&layout.vertex_agents)
        .chain([&layout.unhappy, &layout.collector_home])
    {
        game.set(layout.collector, a, like.clone());
    }
    // Dummies and the sidekick form a clique of mutual regard.
    for &d in &layout.dummy_agents {
        for &d2 in &layout.dummy_agents {
            if d != d2 {
                game.set(d, d2, like.clone());
            }
        }
        game.set(d, layout.sidekick, like.clone());
        game.set(layout.sidekick, d, like.clone());
    }
    // The grouping pair and the vertex agents hold each other in mutual
    // regard, both like the collector and vice versa (the collector's warmth
    // stops at one half of the pair, which is what makes her threshold
    // exact), and the pair likes each other.
    for &g in &layout.grouping_members() {
        for &a in layout.vertex_agents.iter().chain([&layout.collector]) {
            game.set(g, a, like.clone());
            game.set(a, g, like.clone());
        }
    }
    game.set(layout.collector, layout.collector_mate, dislike.clone());
    for &a in &layout.vertex_agents {
        game.set(a, layout.collector, like.clone());
    }
    game.set(layout.collector_home, layout.collector_mate, like.clone());
    game.set(layout.collector_mate, layout.collector_home, like.clone());
    // Vertex agents like exactly their non-neighbors.
    for v in 0..nv {
        for w in 0..nv {
            if v != w && !instance.has_edge(v, w) {
                game.set(layout.vertex_agents[v], layout.vertex_agents[w], like.clone());
            }
        }
    }
    // Each vertex agent is tied to her own anchors, who only have eyes for
    // each other.
    for v in 0..nv {
        game.set(layout.vertex_agents[v], layout.restrict_pos[v], like.clone());
        game.set(layout.restrict_pos[v], layout.restrict_neg[v], like.clone());
        game.set(layout.restrict_neg[v], layout.restrict_pos[v], like.clone());
    }

    let start = layout.start(n);
    let solvable = instance.has_independent_set();

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    if solvable {
        let chosen = instance.max_independent_set();
        let mut current = start.clone();
        let mut script: Script = Vec::new();
        for &v in chosen.iter().take(k) {
            let target =
                DeviationTarget::Join(current.coalition_of(layout.collector_home).clone());
            current = current
                .apply_deviation(layout.vertex_agents[v], &target)
                .expect("vertex join is legal");
            script.push((layout.vertex_agents[v], target));
        }
        let target = DeviationTarget::Join(current.coalition_of(layout.collector_home).clone());
        current
            .apply_deviation(layout.collector, &target)
            .expect("collector join is legal");
        script.push((layout.collector, target));
        script.push((layout.unhappy, DeviationTarget::Solo));
        scripts.insert("witness".into(), script);
    }

    let mut manifest = alloc::vec![
        ManifestCheck {
            name: "local-deviation-claims-hold".into(),
            check: CheckKind::IndSetClaims(layout.clone()),
        },
        ManifestCheck {
            name: "reachability-verdict-matches-the-graph".into(),
            check: CheckKind::IrCisVerdict {
                expect: if solvable { Verdict::Yes } else { Verdict::No },
                node_cap: DEFAULT_NODE_CAP,
            },
        },
    ];
    if solvable {
        manifest.push(ManifestCheck {
            name: "witness-script-replays".into(),
            check: CheckKind::ScriptReplays {
                script: "witness".into(),
                notion: NotionRef::Cis,
            },
        });
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("vertices".into(), rat(nv as i64));
    metadata.insert("edges".into(), rat(instance.edges.len() as i64));
    metadata.insert("k".into(), rat(k as i64));
    metadata.insert("n".into(), rat(n as i64));
    metadata.insert("like".into(), like.clone());
    metadata.insert("dislike".into(), dislike.clone());
    metadata.insert("solvable".into(), rat(solvable as i64));

    let bundle = GadgetBundle {
        game,
        start,
        notion: StabilityNotion::contractual_individual(),
        scripts,
        manifest,
        metadata,
    };
    Ok((bundle, layout))
}
