//! Coalitions and canonical partitions.
//!
//! The canonical form — coalitions sorted by their minimum member, members
//! ascending — is the basis for structural equality, hashing, and cycle
//! detection, so `Partition` enforces it on construction.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::game::AgentId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionError {
    EmptyCoalition,
    DuplicateAgent(AgentId),
    NotACover { missing: AgentId },
    AgentOutOfRange(AgentId),
    IllegalDeviation(String),
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionError::EmptyCoalition => f.write_str("coalitions must be nonempty"),
            PartitionError::DuplicateAgent(a) => write!(f, "agent {a} appears twice"),
            PartitionError::NotACover { missing } => {
                write!(f, "agent {missing} is not covered by the partition")
            }
            PartitionError::AgentOutOfRange(a) => write!(f, "agent index {a} out of range"),
            PartitionError::IllegalDeviation(m) => write!(f, "illegal deviation: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PartitionError {}

/// A nonempty set of agents, stored sorted ascending.
///
/// `Ord` on the sorted member list orders coalitions by minimum member
/// first, which is exactly the canonical coalition order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(Vec<AgentId>);

impl Coalition {
    pub fn new(mut members: Vec<AgentId>) -> Result<Coalition, PartitionError> {
        if members.is_empty() {
            return Err(PartitionError::EmptyCoalition);
        }
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(PartitionError::DuplicateAgent(w[0]));
            }
        }
        Ok(Coalition(members))
    }

    pub fn singleton(a: AgentId) -> Coalition {
        Coalition(alloc::vec![a])
    }

    pub fn of(members: &[AgentId]) -> Coalition {
        Coalition::new(members.to_vec()).expect("valid coalition literal")
    }

    pub fn members(&self) -> &[AgentId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_member(&self) -> AgentId {
        self.0[0]
    }

    pub fn contains(&self, a: AgentId) -> bool {
        self.0.binary_search(&a).is_ok()
    }

    /// `self ∪ {a}`.
    pub fn with(&self, a: AgentId) -> Coalition {
        if self.contains(a) {
            return self.clone();
        }
        let mut v = self.0.clone();
        let pos = v.partition_point(|&x| x < a);
        v.insert(pos, a);
        Coalition(v)
    }

    /// `self \ {a}`; `None` when that would be empty.
    pub fn without(&self, a: AgentId) -> Option<Coalition> {
        if !self.contains(a) {
            return Some(self.clone());
        }
        if self.0.len() == 1 {
            return None;
        }
        let v: Vec<AgentId> = self.0.iter().copied().filter(|&x| x != a).collect();
        Some(Coalition(v))
    }

    pub fn iter(&self) -> core::iter::Copied<core::slice::Iter<'_, AgentId>> {
        self.0.iter().copied()
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// Where a deviating agent goes: an existing coalition or her own singleton.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DeviationTarget {
    /// Join this (existing, deviator-free) coalition.
    Join(Coalition),
    /// Break away into a fresh singleton.
    Solo,
}

impl fmt::Display for DeviationTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationTarget::Join(c) => write!(f, "{c}"),
            DeviationTarget::Solo => f.write_str("solo"),
        }
    }
}

/// A canonical partition of `0..n` into coalitions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    coalitions: Vec<Coalition>,
}

impl Partition {
    pub fn from_coalitions(
        n: usize,
        mut coalitions: Vec<Coalition>,
    ) -> Result<Partition, PartitionError> {
        let mut seen = alloc::vec![false; n];
        for c in &coalitions {
            for &a in c.members() {
                if a >= n {
                    return Err(PartitionError::AgentOutOfRange(a));
                }
                if seen[a] {
                    return Err(PartitionError::DuplicateAgent(a));
                }
                seen[a] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(PartitionError::NotACover { missing });
        }
        coalitions.sort_unstable();
        Ok(Partition { n, coalitions })
    }

    pub fn singletons(n: usize) -> Partition {
        assert!(n >= 1, "partition needs at least one agent");
        Partition {
            n,
            coalitions: (0..n).map(Coalition::singleton).collect(),
        }
    }

    pub fn grand(n: usize) -> Partition {
        assert!(n >= 1, "partition needs at least one agent");
        Partition {
            n,
            coalitions: alloc::vec![Coalition((0..n).collect())],
        }
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn coalitions(&self) -> &[Coalition] {
        &self.coalitions
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The coalition containing `a` (π(a)).
    pub fn coalition_of(&self, a: AgentId) -> &Coalition {
        self.coalitions
            .iter()
            .find(|c| c.contains(a))
            .expect("partition covers every agent")
    }

    /// Restricted-growth-string encoding; equal iff partitions are set-equal.
    pub fn encode(&self) -> Vec<u32> {
        let mut block = alloc::vec![u32::MAX; self.n];
        let mut next = 0u32;
        for a in 0..self.n {
            if block[a] == u32::MAX {
                let c = self.coalition_of(a);
                for &m in c.members() {
                    block[m] = next;
                }
                next += 1;
            }
        }
        block
    }

    /// Apply a single-agent deviation: `a` leaves π(a) for `target`.
    pub fn apply_deviation(
        &self,
        a: AgentId,
        target: &DeviationTarget,
    ) -> Result<Partition, PartitionError> {
        if a >= self.n {
            return Err(PartitionError::AgentOutOfRange(a));
        }
        let source = self.coalition_of(a).clone();
        match target {
            DeviationTarget::Solo => {
                if source.len() == 1 {
                    return Err(PartitionError::IllegalDeviation(alloc::format!(
                        "agent {a} is already in a singleton"
                    )));
                }
            }
            DeviationTarget::Join(c) => {
                if c.contains(a) {
                    return Err(PartitionError::IllegalDeviation(alloc::format!(
                        "target already contains agent {a}"
                    )));
                }
                if !self.coalitions.iter().any(|x| x == c) {
                    return Err(PartitionError::IllegalDeviation(alloc::format!(
                        "target {c} is not a coalition of the partition"
                    )));
                }
            }
        }
        let mut coalitions: Vec<Coalition> = Vec::with_capacity(self.coalitions.len() + 1);
        for c in &self.coalitions {
            if c == &source {
                if let Some(rest) = c.without(a) {
                    coalitions.push(rest);
                }
            } else if let DeviationTarget::Join(t) = target {
                if c == t {
                    coalitions.push(c.with(a));
                } else {
                    coalitions.push(c.clone());
                }
            } else {
                coalitions.push(c.clone());
            }
        }
        if matches!(target, DeviationTarget::Solo) {
            coalitions.push(Coalition::singleton(a));
        }
        coalitions.sort_unstable();
        Ok(Partition {
            n: self.n,
            coalitions,
        })
    }

    /// All partitions of `0..n` in restricted-growth-string order.
    pub fn enumerate_all(n: usize) -> AllPartitions {
        assert!(n >= 1);
        AllPartitions {
            n,
            rgs: alloc::vec![0; n],
            done: false,
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, c) in self.coalitions.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

/// Iterator over all set partitions of `0..n` via restricted growth strings.
pub struct AllPartitions {
    n: usize,
    rgs: Vec<u32>,
    done: bool,
}

impl Iterator for AllPartitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let blocks = *self.rgs.iter().max().unwrap() + 1;
        let mut groups: Vec<Vec<AgentId>> = alloc::vec![Vec::new(); blocks as usize];
        for (a, &b) in self.rgs.iter().enumerate() {
            groups[b as usize].push(a);
        }
        let coalitions = groups
            .into_iter()
            .map(|g| Coalition::new(g).expect("nonempty block"))
            .collect();
        let out = Partition::from_coalitions(self.n, coalitions).expect("valid partition");

        // Advance the restricted growth string: rightmost position that can
        // still grow (rgs[i] <= max(rgs[..i])) is incremented, suffix reset.
        let mut i = self.n;
        loop {
            if i == 1 {
                self.done = true;
                break;
            }
            i -= 1;
            let prefix_max = *self.rgs[..i].iter().max().unwrap();
            if self.rgs[i] <= prefix_max {
                self.rgs[i] += 1;
                for j in i + 1..self.n {
                    self.rgs[j] = 0;
                }
                break;
            }
        }
        Some(out)
    }
}
