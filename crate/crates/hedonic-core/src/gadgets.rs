//! Generators for the paper-style worst-case constructions.

pub mod bundle;
pub mod compose;
pub mod exponential;
pub mod indset;
pub mod quota;
pub mod rx3c;

pub use bundle::{GadgetBundle, ManifestCheck};
