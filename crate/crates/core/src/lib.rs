//! Decorated numeration trees.
//!
//! A sequence `x` indexed by the representations of a numeration system
//! (integer base, rational base, or regular language in radix order) is laid
//! out on the tree of representations. This crate builds those trees,
//! classifies height-`h` factors into types, guesses and verifies
//! `h`-linear relations between decorations, turns verified relations into
//! graph-directed linear representations, and computes kernel families.

pub mod dectree;
pub mod exactlin;
pub mod gdlr;
pub mod kernels;
pub mod linearity;
pub mod numsys;
pub mod seqlib;

pub use dectree::{Skeleton, TreePrefix, TypeTable};
pub use exactlin::{Nat, RatMatrix, Rational};
pub use gdlr::Gdlr;
pub use linearity::{GuessReport, Relation, RelationSet};
pub use numsys::{Dfa, Digit, NumerationSystem, Word};
pub use seqlib::SequenceSource;

/// Default cap on the number of tree nodes materialized at once.
pub const DEFAULT_NODE_BUDGET: usize = 5_000_000;

/// Node budget from `NUMERTREE_NODE_BUDGET`, falling back to the default.
pub fn node_budget() -> usize {
    std::env::var("NUMERTREE_NODE_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_NODE_BUDGET)
}
