//! Adaptive learned Bloom filters.
//!
//! A learned Bloom filter pairs a score model with classic Bloom filters.
//! This crate provides the standard filter, the learned filter with a backup
//! filter, its sandwiched variant, and two adaptive variants that split the
//! score range into groups: [`ada`] varies the number of hash functions per
//! group over one shared bit array, [`disjoint`] gives each group its own
//! filter and bit budget. [`tuning`] searches their hyper-parameters and
//! [`bench`] runs budget sweeps.
//!
//! Every variant has zero false negatives by construction.

pub mod ada;
pub mod bench;
pub mod bits;
mod codec;
pub mod disjoint;
pub mod error;
pub mod filter;
pub mod learned;
pub mod score;
pub mod standard;
pub mod tuning;

pub use ada::{
    alpha_load, build_ada, expected_fpr_ada, fpr_upper_bound, kmax_for_lbf, query_ada, AdaBfFilter,
    AdaBfParams, KmaxChoice,
};
pub use bits::{hash_indices, BitVector, HashFamily};
pub use codec::FilterKind;
pub use disjoint::{allocate_disjoint, build_disjoint, query_disjoint, DisjointFilter, MU};
pub use error::{Error, Result};
pub use filter::Filter;
pub use learned::{
    build_lbf, build_sandwiched, query_lbf, query_sandwiched, sandwich_allocate, LbfFilter,
    SandwichAllocation, SandwichFilter,
};
pub use score::{
    gen_synthetic, load_scored_csv, min_sample_size, partition_below, partition_by_ratio,
    sample_size_bound, BetaShape, Label, ScorePartition, ScoredDataset, ScoredItem,
};
pub use standard::{
    build_standard, expected_fpr_standard, optimal_k, query_standard, BackupFilter, StandardBloom,
};
