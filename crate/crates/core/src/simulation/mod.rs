//! Finite filtrations as explicit probability trees.
//!
//! A tree of depth `D` realizes `F_0 ⊂ F_1 ⊂ … ⊂ F_D`: the depth-`n` nodes
//! are the atoms of `F_n`, and `F_n` for `n ≤ 0` is the trivial σ-algebra
//! (the root). On such a tree every lagged forecast, every bias path and
//! every tail probability can be computed exactly; [`mc_tail`] provides the
//! seeded sampling counterpart.

pub mod format;
mod montecarlo;
mod tree;

pub use montecarlo::{
    clopper_pearson, mc_tail, splitmix64, trial_rng, trial_seed, BlockSampler, IntervalMethod, PathSampler,
    TailEstimate, TreeSampler, TrialRng, CI_LEVEL,
};
pub use tree::{
    conditional_expectation, deviation_at_steps, deviation_per_leaf, exact_tail, random_tree, random_tree_with,
    verify_theorem1, weighted_tail, AdaptedSequence, Branch, ProbabilityTree, Sided, Theorem1Check, ValueLaw,
    BRANCH_SUM_TOLERANCE, LEAF_SUM_TOLERANCE, MAX_EXACT_NODES,
};
pub(crate) use tree::random_levels;
