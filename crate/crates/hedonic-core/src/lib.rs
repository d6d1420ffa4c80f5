//! Cardinal hedonic games and single-agent deviation dynamics.
//!
//! The crate models additively separable (ASHG), fractional (FHG), and
//! modified fractional (MFHG) hedonic games with exact rational valuations,
//! the `(q_out, q_in)`-vote family of deviation rules, deviation dynamics
//! with cycle detection, brute-force deciders for convergence questions,
//! constructive CIS algorithms, and generators for the cycling / reduction
//! gadget families.
//!
//! All arithmetic is exact (`BigRational`); no floating point is used
//! anywhere, since deviation legality hinges on strict-vs-tie comparisons.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (on by default) merely forwards to the numeric dependencies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cis;
pub mod dynamics;
pub mod gadgets;
pub mod game;
pub mod oracle;
pub mod partition;
pub mod stability;

pub use game::{AgentId, CardinalGame, GameClass, GameError, Rational};
pub use partition::{Coalition, DeviationTarget, Partition, PartitionError};
pub use stability::{StabilityNotion, VoteQuotas};
