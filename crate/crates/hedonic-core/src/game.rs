//! Games: agent indices, exact rational valuations, and the three utility
//! semantics (ASHG / FHG / MFHG).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::partition::{Coalition, Partition};

/// Agents are dense indices `0..n`; display names, when present, live in the
/// serialization layer.
pub type AgentId = usize;

/// Exact rational number; valuations, utilities, and quotas all use this.
pub type Rational = BigRational;

/// Convenience constructor for integer-valued rationals.
pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Convenience constructor for `p/q` rationals.
pub fn ratio(p: i64, q: i64) -> Rational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Which utility semantics the game uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameClass {
    /// Utility = sum of valuations over coalition partners.
    Ashg,
    /// Utility = sum divided by coalition size.
    Fhg,
    /// Utility = 0 when alone, else sum divided by (size - 1).
    Mfhg,
}

impl GameClass {
    pub const ALL: [GameClass; 3] = [GameClass::Ashg, GameClass::Fhg, GameClass::Mfhg];

    pub fn tag(self) -> &'static str {
        match self {
            GameClass::Ashg => "ASHG",
            GameClass::Fhg => "FHG",
            GameClass::Mfhg => "MFHG",
        }
    }

    pub fn from_tag(s: &str) -> Option<GameClass> {
        match s {
            "ASHG" => Some(GameClass::Ashg),
            "FHG" => Some(GameClass::Fhg),
            "MFHG" => Some(GameClass::Mfhg),
            _ => None,
        }
    }
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameError {
    SelfValuation(AgentId),
    AgentOutOfRange(AgentId),
    NotAMember { agent: AgentId },
    TooFewAgents,
    WrongClass { expected: GameClass, got: GameClass },
    Message(String),
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::SelfValuation(a) => write!(f, "self-valuation for agent {a} is not allowed"),
            GameError::AgentOutOfRange(a) => write!(f, "agent index {a} out of range"),
            GameError::NotAMember { agent } => {
                write!(f, "agent {agent} is not a member of the coalition")
            }
            GameError::TooFewAgents => write!(f, "operation needs at least 2 agents"),
            GameError::WrongClass { expected, got } => {
                write!(f, "expected a {expected} game, got {got}")
            }
            GameError::Message(m) => f.write_str(m),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GameError {}

/// A cardinal hedonic game: `n` agents, a class tag, and a sparse valuation
/// map. Absent entries read as 0; diagonal entries are rejected on write and
/// never read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardinalGame {
    n: usize,
    class: GameClass,
    valuations: BTreeMap<(AgentId, AgentId), Rational>,
}

impl CardinalGame {
    pub fn new(n: usize, class: GameClass) -> CardinalGame {
        CardinalGame {
            n,
            class,
            valuations: BTreeMap::new(),
        }
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn class(&self) -> GameClass {
        self.class
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        0..self.n
    }

    /// Sparse view of the stored (explicit) valuations.
    pub fn entries(&self) -> impl Iterator<Item = (AgentId, AgentId, &Rational)> {
        self.valuations.iter().map(|(&(a, b), v)| (a, b, v))
    }

    pub fn set_value(&mut self, a: AgentId, b: AgentId, v: Rational) -> Result<(), GameError> {
        if a == b {
            return Err(GameError::SelfValuation(a));
        }
        if a >= self.n {
            return Err(GameError::AgentOutOfRange(a));
        }
        if b >= self.n {
            return Err(GameError::AgentOutOfRange(b));
        }
        if v.is_zero() {
            self.valuations.remove(&(a, b));
        } else {
            self.valuations.insert((a, b), v);
        }
        Ok(())
    }

    /// Panicking variant of [`set_value`](Self::set_value) for generator code
    /// with indices known to be in range.
    pub fn set(&mut self, a: AgentId, b: AgentId, v: Rational) {
        self.set_value(a, b, v).expect("valid valuation entry");
    }

    pub fn set_int(&mut self, a: AgentId, b: AgentId, v: i64) {
        self.set(a, b, rat(v));
    }

    /// `v_a(b)`; zero when unspecified. The diagonal is never consulted.
    pub fn value(&self, a: AgentId, b: AgentId) -> Rational {
        debug_assert!(a != b, "diagonal valuation read");
        self.valuations
            .get(&(a, b))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Utility of agent `a` in coalition `c` under the game's class.
    pub fn utility(&self, a: AgentId, c: &Coalition) -> Result<Rational, GameError> {
        if !c.contains(a) {
            return Err(GameError::NotAMember { agent: a });
        }
        let sum: Rational = c
            .members()
            .iter()
            .filter(|&&b| b != a)
            .map(|&b| self.value(a, b))
            .sum();
        let size = c.len();
        Ok(match self.class {
            GameClass::Ashg => sum,
            GameClass::Fhg => sum / rat(size as i64),
            GameClass::Mfhg => {
                if size == 1 {
                    Rational::zero()
                } else {
                    sum / rat((size - 1) as i64)
                }
            }
        })
    }

    /// Utility `a` would get in `c ∪ {a}` (valid whether or not `a ∈ c`).
    pub fn utility_with(&self, a: AgentId, c: &Coalition) -> Rational {
        let joined = c.with(a);
        self.utility(a, &joined).expect("a inserted")
    }

    /// Utility `a`'s coalition-mate `b` would get in `c \ {a}`; zero when the
    /// removal leaves `b` alone under MFHG, etc. `b` must remain a member.
    pub fn utility_without(&self, b: AgentId, c: &Coalition, a: AgentId) -> Rational {
        let reduced = c.without(a).expect("c minus a nonempty");
        self.utility(b, &reduced).expect("b still a member")
    }

    /// Every agent weakly prefers her coalition to her singleton.
    pub fn is_individually_rational(&self, pi: &Partition) -> bool {
        pi.coalitions().iter().all(|c| {
            c.members().iter().all(|&a| {
                let u = self.utility(a, c).expect("member");
                let solo = self
                    .utility(a, &Coalition::singleton(a))
                    .expect("singleton");
                u >= solo
            })
        })
    }

    /// Restrict the game and partition to `N \ {a}`, re-indexing densely.
    /// Returns the reduced game, the reduced partition, and `old_of_new`:
    /// `old_of_new[new_index] = old_index`.
    pub fn remove_agent(
        &self,
        pi: &Partition,
        a: AgentId,
    ) -> Result<(CardinalGame, Partition, Vec<AgentId>), GameError> {
        if self.n < 2 {
            return Err(GameError::TooFewAgents);
        }
        if a >= self.n {
            return Err(GameError::AgentOutOfRange(a));
        }
        let old_of_new: Vec<AgentId> = (0..self.n).filter(|&x| x != a).collect();
        let new_of_old = |old: AgentId| -> AgentId {
            if old < a {
                old
            } else {
                old - 1
            }
        };
        let mut game = CardinalGame::new(self.n - 1, self.class);
        for (&(p, q), v) in &self.valuations {
            if p != a && q != a {
                game.set(new_of_old(p), new_of_old(q), v.clone());
            }
        }
        let mut coalitions = Vec::new();
        for c in pi.coalitions() {
            let members: Vec<AgentId> = c
                .members()
                .iter()
                .filter(|&&m| m != a)
                .map(|&m| new_of_old(m))
                .collect();
            if !members.is_empty() {
                coalitions.push(Coalition::new(members).expect("nonempty"));
            }
        }
        let reduced = Partition::from_coalitions(self.n - 1, coalitions)
            .map_err(|e| GameError::Message(alloc::format!("{e}")))?;
        Ok((game, reduced, old_of_new))
    }
}
