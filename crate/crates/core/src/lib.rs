//! Exact analytics and Monte Carlo for marked near-critical
//! Bienaymé-Galton-Watson branching processes.
//!
//! A particle with `k` offspring is marked with probability `A(k)`; the
//! skeleton is the subtree spanned by marked lineages and lineages that
//! survive the observation horizon. The crate computes the exact skeleton
//! survival probability from generating-function fixed points, classifies
//! the asymptotic regime of an instance, simulates family trees and their
//! skeletons, simulates the binary birth-death limit process, evaluates the
//! closed-form law of the scaled escape time, derives marking structures
//! for binomial and sequential mutation models, and validates all of it by
//! reproducible parallel Monte Carlo.

// domain guards use `!(x > 0.0)` so that NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod limit;
pub mod model_io;
pub mod mutation;
pub mod offspring;
pub mod pgf;
pub mod regime;
pub mod stats;
pub mod sweep;
pub mod tree;

pub use error::{Error, Result};
pub use harness::{persist, run, Experiment, ModelRef, ResultRecord, Target};
pub use limit::{
    extinction_probability, leaf_count_pmf, simulate_y, BirthDeathParams, EscapeLaw,
};
pub use model_io::{MarkingSpec, ModelSpec, SequentialModelSpec};
pub use mutation::{
    check_thinning_limits, derive_binomial, derive_thinned_marked, sequential_survival,
    BinomialMutationModel, SequentialModel,
};
pub use offspring::{validate_family, MarkingRule, OffspringLaw};
pub use pgf::{joint_pgf, skeleton_offspring_coefficients, skeleton_offspring_pgf, solve_q_exact};
pub use regime::{classify_regime, Regime, RegimeReport};
pub use sweep::{persist_sweep, run_sweep, SweepReport, SweepSpec};
pub use tree::{extract_skeleton, observe, replica_rng, simulate_tree, FamilyTree, SkeletonTree};
