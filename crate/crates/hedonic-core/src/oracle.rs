//! Brute-force deciders: reachability of stable partitions (can the
//! dynamics converge / must they converge), stable-partition existence, and
//! reachability of an individually rational CIS partition.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use crate::game::{AgentId, CardinalGame};
use crate::partition::{DeviationTarget, Partition};
use crate::stability::{
    enumerate_deviations, is_stable, StabilityError, StabilityNotion,
};

/// Default bound on materialized partitions per exploration.
pub const DEFAULT_NODE_CAP: usize = 200_000;

/// Default agent-count guard for full partition enumeration.
pub const DEFAULT_ENUMERATION_GUARD: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    Stability(StabilityError),
    TooManyAgents { n: usize, guard: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Stability(e) => write!(f, "{e}"),
            OracleError::TooManyAgents { n, guard } => write!(
                f,
                "{n} agents exceed the enumeration guard of {guard}; pass an explicit override"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OracleError {}

impl From<StabilityError> for OracleError {
    fn from(e: StabilityError) -> OracleError {
        OracleError::Stability(e)
    }
}

/// Three-valued answer; `Unknown` means the node cap was hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "Yes",
            Verdict::No => "No",
            Verdict::Unknown => "Unknown",
        })
    }
}

/// An edge of the transition graph: the move and the successor node.
#[derive(Debug, Clone)]
pub struct Transition {
    pub deviator: AgentId,
    pub target: DeviationTarget,
    pub to: usize,
}

/// The reachable portion of the deviation graph from a start partition,
/// explored breadth-first in the deterministic move order.
///
/// Every admitted node is fully expanded; when the node cap is hit, edges
/// to partitions that were never admitted are dropped and `capped` is set.
/// Sink-ness of admitted nodes is exact either way.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    pub nodes: Vec<Partition>,
    pub edges: Vec<Vec<Transition>>,
    /// Nodes with no allowed deviation at all (stable partitions).
    pub sinks: Vec<bool>,
    pub capped: bool,
}

impl TransitionGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn sink_indices(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.sinks[i]).collect()
    }

    /// BFS move script from the start node to `node`.
    pub fn path_to(&self, node: usize) -> Vec<(AgentId, DeviationTarget)> {
        // Re-derive BFS parents; graphs here are small enough that this
        // beats storing them.
        let mut parent: Vec<Option<(usize, usize)>> = alloc::vec![None; self.nodes.len()];
        let mut seen = alloc::vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0usize);
        while let Some(u) = queue.pop_front() {
            if u == node {
                break;
            }
            for (ei, t) in self.edges[u].iter().enumerate() {
                if !seen[t.to] {
                    seen[t.to] = true;
                    parent[t.to] = Some((u, ei));
                    queue.push_back(t.to);
                }
            }
        }
        let mut rev = Vec::new();
        let mut cur = node;
        while let Some((p, ei)) = parent[cur] {
            let t = &self.edges[p][ei];
            rev.push((t.deviator, t.target.clone()));
            cur = p;
        }
        rev.reverse();
        rev
    }

    /// A directed cycle among the explored edges, as (lead-in script from
    /// the start, cycle script), if one exists.
    pub fn find_cycle(&self) -> Option<(Vec<(AgentId, DeviationTarget)>, Vec<(AgentId, DeviationTarget)>)> {
        // Iterative DFS with an explicit stack; colors: 0 white, 1 gray,
        // 2 black.
        let n = self.nodes.len();
        let mut color = alloc::vec![0u8; n];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut path: Vec<(usize, usize)> = Vec::new(); // (node, edge chosen out of it)
        for root in 0..n {
            if color[root] != 0 {
                continue;
            }
            stack.push((root, 0));
            color[root] = 1;
            while !stack.is_empty() {
                let (u, edge_index) = *stack.last().unwrap();
                if edge_index < self.edges[u].len() {
                    stack.last_mut().unwrap().1 += 1;
                    let v = self.edges[u][edge_index].to;
                    match color[v] {
                        0 => {
                            path.push((u, edge_index));
                            color[v] = 1;
                            stack.push((v, 0));
                        }
                        1 => {
                            // Found a back edge u -> v; unwind the path.
                            path.push((u, edge_index));
                            let pos = path
                                .iter()
                                .position(|&(w, _)| w == v)
                                .expect("gray node on path");
                            let cycle: Vec<(AgentId, DeviationTarget)> = path[pos..]
                                .iter()
                                .map(|&(w, e)| {
                                    let t = &self.edges[w][e];
                                    (t.deviator, t.target.clone())
                                })
                                .collect();
                            return Some((self.path_to(v), cycle));
                        }
                        _ => {}
                    }
                } else {
                    color[u] = 2;
                    stack.pop();
                    path.pop();
                }
            }
        }
        None
    }
}

/// Breadth-first closure of allowed deviations from `start`.
pub fn explore(
    game: &CardinalGame,
    notion: &StabilityNotion,
    start: &Partition,
    node_cap: usize,
) -> Result<TransitionGraph, OracleError> {
    assert!(node_cap >= 1, "node cap must admit the start");
    let mut index: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut nodes = alloc::vec![start.clone()];
    index.insert(start.encode(), 0);
    let mut edges: Vec<Vec<Transition>> = alloc::vec![Vec::new()];
    let mut sinks: Vec<bool> = alloc::vec![false];
    let mut capped = false;
    let mut queue = VecDeque::new();
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        let moves = enumerate_deviations(game, notion, &nodes[u])?;
        sinks[u] = moves.is_empty();
        for (agent, target) in moves {
            let next = nodes[u]
                .apply_deviation(agent, &target)
                .map_err(StabilityError::from)?;
            let key = next.encode();
            let to = match index.get(&key) {
                Some(&i) => i,
                None => {
                    if nodes.len() >= node_cap {
                        capped = true;
                        continue;
                    }
                    let i = nodes.len();
                    index.insert(key, i);
                    nodes.push(next);
                    edges.push(Vec::new());
                    sinks.push(false);
                    queue.push_back(i);
                    i
                }
            };
            edges[u].push(Transition {
                deviator: agent,
                target,
                to,
            });
        }
    }
    Ok(TransitionGraph {
        nodes,
        edges,
        sinks,
        capped,
    })
}

/// Can the dynamics converge: is a stable partition reachable from `start`?
/// Returns the verdict and, for `Yes`, a replayable move script to a sink.
pub fn decide_pcd(
    game: &CardinalGame,
    notion: &StabilityNotion,
    start: &Partition,
    node_cap: usize,
) -> Result<(Verdict, Option<Vec<(AgentId, DeviationTarget)>>), OracleError> {
    let graph = explore(game, notion, start, node_cap)?;
    if let Some(sink) = graph.sink_indices().into_iter().next() {
        let path = graph.path_to(sink);
        return Ok((Verdict::Yes, Some(path)));
    }
    if graph.capped {
        Ok((Verdict::Unknown, None))
    } else {
        Ok((Verdict::No, None))
    }
}

/// Must the dynamics converge: is the reachable graph free of cycles?
/// For `No`, returns a witness (lead-in script, cycle script).
#[allow(clippy::type_complexity)]
pub fn decide_ncd(
    game: &CardinalGame,
    notion: &StabilityNotion,
    start: &Partition,
    node_cap: usize,
) -> Result<
    (
        Verdict,
        Option<(Vec<(AgentId, DeviationTarget)>, Vec<(AgentId, DeviationTarget)>)>,
    ),
    OracleError,
> {
    let graph = explore(game, notion, start, node_cap)?;
    if let Some(witness) = graph.find_cycle() {
        return Ok((Verdict::No, Some(witness)));
    }
    if graph.capped {
        Ok((Verdict::Unknown, None))
    } else {
        Ok((Verdict::Yes, None))
    }
}

/// Does any partition of the agent set satisfy the notion? Full Bell-number
/// enumeration, guarded by agent count (`guard_override` lifts the default
/// bound of [`DEFAULT_ENUMERATION_GUARD`]).
pub fn exists_stable_partition(
    game: &CardinalGame,
    notion: &StabilityNotion,
    guard_override: Option<usize>,
) -> Result<bool, OracleError> {
    let guard = guard_override.unwrap_or(DEFAULT_ENUMERATION_GUARD);
    let n = game.agent_count();
    if n > guard {
        return Err(OracleError::TooManyAgents { n, guard });
    }
    for pi in Partition::enumerate_all(n) {
        if is_stable(game, notion, &pi)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Can CIS dynamics from `start` reach an individually rational stable
/// partition? The CIS graph is a DAG (welfare strictly increases along
/// every edge), so exploration below the cap is exact.
pub fn decide_reachable_ir_cis(
    game: &CardinalGame,
    start: &Partition,
    node_cap: usize,
) -> Result<(Verdict, Option<Vec<(AgentId, DeviationTarget)>>), OracleError> {
    let notion = StabilityNotion::contractual_individual();
    let graph = explore(game, &notion, start, node_cap)?;
    for sink in graph.sink_indices() {
        if game.is_individually_rational(&graph.nodes[sink]) {
            let path = graph.path_to(sink);
            return Ok((Verdict::Yes, Some(path)));
        }
    }
    if graph.capped {
        Ok((Verdict::Unknown, None))
    } else {
        Ok((Verdict::No, None))
    }
}
