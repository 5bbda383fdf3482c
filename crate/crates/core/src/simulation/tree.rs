use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{theorem1_threshold, HorizonParams};
use crate::numeric::{compensated_sum, reaches, NeumaierSum};
use crate::{Error, Result};

/// Per-node tolerance on branch probabilities summing to one.
pub const BRANCH_SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance on all leaf probabilities summing to one.
pub const LEAF_SUM_TOLERANCE: f64 = 1e-9;
/// Largest number of nodes at one depth that exact enumeration accepts.
pub const MAX_EXACT_NODES: usize = 1 << 21;

/// Edge from a node to its parent one level up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub parent: usize,
    pub prob: f64,
}

/// A finite filtration: the depth-`n` nodes are the atoms of `F_n`.
///
/// Nodes of each depth are stored grouped by parent (parent indices are
/// nondecreasing), so the descendants of any node at any deeper level form
/// a contiguous index range. Every non-leaf node has at least one child and
/// all leaves sit at the full depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTree {
    // level d − 1 holds the depth-d nodes
    parents: Vec<Vec<usize>>,
    probs: Vec<Vec<f64>>,
    // level d holds, for each depth-d node, its children at depth d + 1
    children: Vec<Vec<Range<usize>>>,
    // level d holds path probabilities of depth-d nodes, d = 0..=depth
    path_probs: Vec<Vec<f64>>,
}

impl ProbabilityTree {
    /// Builds a tree from per-depth branch lists (`levels[d − 1]` describes
    /// the depth-`d` nodes) and checks every structural invariant.
    pub fn new(levels: Vec<Vec<Branch>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidTree("depth must be at least 1".into()));
        }
        let mut parents = Vec::with_capacity(levels.len());
        let mut probs = Vec::with_capacity(levels.len());
        let mut children = Vec::with_capacity(levels.len());
        let mut path_probs = vec![vec![1.0]];
        let mut parent_width = 1usize;

        for (li, level) in levels.iter().enumerate() {
            let depth = li + 1;
            if level.is_empty() {
                return Err(Error::InvalidTree(format!("depth {depth} has no nodes")));
            }
            let mut ranges = vec![0..0; parent_width];
            let mut sums = vec![NeumaierSum::new(); parent_width];
            let mut prev_parent = 0usize;
            for (i, b) in level.iter().enumerate() {
                if b.parent >= parent_width {
                    return Err(Error::InvalidTree(format!(
                        "node {i} at depth {depth}: parent {} out of range (width {parent_width})",
                        b.parent
                    )));
                }
                if b.parent < prev_parent {
                    return Err(Error::InvalidTree(format!(
                        "nodes at depth {depth} are not grouped by parent (node {i})"
                    )));
                }
                if !(b.prob > 0.0 && b.prob <= 1.0) {
                    return Err(Error::InvalidTree(format!(
                        "node {i} at depth {depth}: branch probability {} not in (0, 1]",
                        b.prob
                    )));
                }
                if ranges[b.parent].is_empty() {
                    ranges[b.parent] = i..i + 1;
                } else {
                    ranges[b.parent].end = i + 1;
                }
                sums[b.parent].add(b.prob);
                prev_parent = b.parent;
            }
            for (u, (r, s)) in ranges.iter().zip(&sums).enumerate() {
                if r.is_empty() {
                    return Err(Error::InvalidTree(format!(
                        "node {u} at depth {} has no children",
                        depth - 1
                    )));
                }
                if (s.value() - 1.0).abs() > BRANCH_SUM_TOLERANCE {
                    return Err(Error::InvalidTree(format!(
                        "branch probabilities of node {u} at depth {} sum to {}",
                        depth - 1,
                        s.value()
                    )));
                }
            }
            let prev = path_probs.last().expect("root present");
            let pp: Vec<f64> = level.iter().map(|b| prev[b.parent] * b.prob).collect();
            parents.push(level.iter().map(|b| b.parent).collect::<Vec<_>>());
            probs.push(level.iter().map(|b| b.prob).collect::<Vec<_>>());
            children.push(ranges);
            path_probs.push(pp);
            parent_width = level.len();
        }
        let total = compensated_sum(path_probs.last().expect("leaves").iter().copied());
        if (total - 1.0).abs() > LEAF_SUM_TOLERANCE {
            return Err(Error::InvalidTree(format!("leaf probabilities sum to {total}")));
        }
        Ok(Self {
            parents,
            probs,
            children,
            path_probs,
        })
    }

    /// Tree whose every node branches with the same probabilities.
    pub fn product(depth: usize, branch_probs: &[f64]) -> Result<Self> {
        let mut levels = Vec::with_capacity(depth);
        let mut width = 1usize;
        for _ in 0..depth {
            let level: Vec<Branch> = (0..width)
                .flat_map(|u| branch_probs.iter().map(move |&prob| Branch { parent: u, prob }))
                .collect();
            width = level.len();
            levels.push(level);
        }
        Self::new(levels)
    }

    pub fn depth(&self) -> usize {
        self.parents.len()
    }

    /// Number of nodes at depth `d` (1 at the root).
    pub fn width(&self, d: usize) -> usize {
        self.path_probs[d].len()
    }

    pub fn leaf_count(&self) -> usize {
        self.width(self.depth())
    }

    pub fn parent(&self, d: usize, i: usize) -> usize {
        self.parents[d - 1][i]
    }

    pub fn branch_prob(&self, d: usize, i: usize) -> f64 {
        self.probs[d - 1][i]
    }

    pub fn children(&self, d: usize, u: usize) -> Range<usize> {
        self.children[d][u].clone()
    }

    pub fn path_probs(&self, d: usize) -> &[f64] {
        &self.path_probs[d]
    }

    /// Branch lists in the shape accepted by [`ProbabilityTree::new`].
    pub fn levels(&self) -> Vec<Vec<Branch>> {
        self.parents
            .iter()
            .zip(&self.probs)
            .map(|(ps, qs)| {
                ps.iter()
                    .zip(qs)
                    .map(|(&parent, &prob)| Branch { parent, prob })
                    .collect()
            })
            .collect()
    }

    /// Ancestor at depth `to` of node `i` at depth `from ≥ to`.
    pub fn ancestor(&self, from: usize, mut i: usize, to: usize) -> usize {
        for d in (to + 1..=from).rev() {
            i = self.parents[d - 1][i];
        }
        i
    }

    /// Descendants at depth `to ≥ from` of node `u` at depth `from`.
    pub fn descendants(&self, from: usize, u: usize, to: usize) -> Range<usize> {
        let mut r = u..u + 1;
        for d in from..to {
            r = self.children[d][r.start].start..self.children[d][r.end - 1].end;
        }
        r
    }

    /// Copies a depth-`from` function down to depth `to ≥ from`.
    pub fn broadcast(&self, values: &[f64], from: usize, to: usize) -> Vec<f64> {
        let mut cur = values.to_vec();
        for d in from + 1..=to {
            cur = self.parents[d - 1].iter().map(|&p| cur[p]).collect();
        }
        cur
    }

    /// Conditional expectation of a depth-`from` function given the
    /// depth-`to` atoms, by backward induction over branch probabilities.
    pub fn backward_average(&self, values: &[f64], from: usize, to: usize) -> Vec<f64> {
        let mut cur = values.to_vec();
        for d in (to + 1..=from).rev() {
            let mut up = vec![0.0; self.width(d - 1)];
            for (i, (&p, &q)) in self.parents[d - 1].iter().zip(&self.probs[d - 1]).enumerate() {
                up[p] += q * cur[i];
            }
            cur = up;
        }
        cur
    }
}

/// Values `Y_1, …, Y_N`, `Y_n` attached to the depth-`n` nodes, `|Y_n| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedSequence {
    values: Vec<Vec<f64>>,
}

impl AdaptedSequence {
    pub fn new(tree: &ProbabilityTree, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Inconsistent("sequence has no steps".into()));
        }
        if values.len() > tree.depth() {
            return Err(Error::Inconsistent(format!(
                "sequence has {} steps but the tree has depth {}",
                values.len(),
                tree.depth()
            )));
        }
        for (i, level) in values.iter().enumerate() {
            let n = i + 1;
            if level.len() != tree.width(n) {
                return Err(Error::Inconsistent(format!(
                    "Y_{n} has {} values for {} nodes",
                    level.len(),
                    tree.width(n)
                )));
            }
            if let Some(j) = level.iter().position(|v| !(v.abs() <= 1.0)) {
                return Err(Error::Inconsistent(format!(
                    "|Y_{n}| exceeds 1 at node {j} ({})",
                    level[j]
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(tree: &ProbabilityTree, steps: usize, mut f: F) -> Result<Self> {
        let values = (1..=steps)
            .map(|n| (0..tree.width(n)).map(|i| f(n, i)).collect())
            .collect();
        Self::new(tree, values)
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    /// Values of `Y_n` (`n` is 1-based).
    pub fn at(&self, n: usize) -> &[f64] {
        &self.values[n - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.values
    }
}

/// Which deviation event a tail refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sided {
    /// `|S| ≥ C`
    TwoSided,
    /// `S ≥ C`
    Upper,
}

impl Sided {
    pub fn hit(self, s: f64, c: f64) -> bool {
        match self {
            Sided::TwoSided => reaches(s.abs(), c),
            Sided::Upper => reaches(s, c),
        }
    }
}

/// `E(Y_n | F_{n−K})` as a function on the depth-`max(n − K, 0)` nodes.
pub fn conditional_expectation(tree: &ProbabilityTree, y: &AdaptedSequence, n: usize, k: usize) -> Result<Vec<f64>> {
    if n == 0 || n > y.steps() {
        return Err(Error::IndexOutOfRange(format!("n = {n} not in 1..={}", y.steps())));
    }
    if k == 0 {
        return Err(Error::param("K", k, "must be at least 1"));
    }
    Ok(tree.backward_average(y.at(n), n, n.saturating_sub(k)))
}

/// `S = Σ_{n ≤ N} (Y_n − E(Y_n | F_{n−K}))` on the depth-`N` nodes.
pub fn deviation_at_steps(tree: &ProbabilityTree, y: &AdaptedSequence, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::param("K", k, "must be at least 1"));
    }
    let steps = y.steps();
    if tree.width(steps) > MAX_EXACT_NODES {
        return Err(Error::param(
            "tree",
            tree.width(steps),
            format!("more than {MAX_EXACT_NODES} nodes at depth N; use Monte Carlo"),
        ));
    }
    let mut s = vec![0.0];
    for n in 1..=steps {
        let lag = n.saturating_sub(k);
        let forecast = tree.backward_average(y.at(n), n, lag);
        let forecast = tree.broadcast(&forecast, lag, n);
        let prev = tree.broadcast(&s, n - 1, n);
        s = prev
            .iter()
            .zip(y.at(n))
            .zip(&forecast)
            .map(|((acc, yn), f)| acc + (yn - f))
            .collect();
    }
    Ok(s)
}

/// The cumulative bias `S(ω)` for every leaf `ω`.
pub fn deviation_per_leaf(tree: &ProbabilityTree, y: &AdaptedSequence, k: usize) -> Result<Vec<f64>> {
    let s = deviation_at_steps(tree, y, k)?;
    Ok(tree.broadcast(&s, y.steps(), tree.depth()))
}

/// Probability mass of `{values hit C}` under `probs`, compensated and
/// clamped to `[0, 1]`.
pub fn weighted_tail(values: &[f64], probs: &[f64], c: f64, sided: Sided) -> f64 {
    compensated_sum(
        values
            .iter()
            .zip(probs)
            .filter(|(s, _)| sided.hit(**s, c))
            .map(|(_, p)| *p),
    )
    .clamp(0.0, 1.0)
}

/// Exact `P(|S| ≥ C)` or `P(S ≥ C)` by enumeration.
pub fn exact_tail(tree: &ProbabilityTree, y: &AdaptedSequence, k: usize, c: f64, sided: Sided) -> Result<f64> {
    let s = deviation_at_steps(tree, y, k)?;
    Ok(weighted_tail(&s, tree.path_probs(y.steps()), c, sided))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Check {
    pub threshold: f64,
    pub two_sided_tail: f64,
    pub upper_tail: f64,
    /// `two_sided_tail < ε`.
    pub holds: bool,
    /// `upper_tail < ε/2`.
    pub upper_holds: bool,
}

/// Exact tails of the bias at the K-step threshold, compared with `ε` and
/// `ε/2`.
pub fn verify_theorem1(tree: &ProbabilityTree, y: &AdaptedSequence, k: usize, epsilon: f64) -> Result<Theorem1Check> {
    let threshold = theorem1_threshold(&HorizonParams::new(y.steps(), k, epsilon)?)?;
    let s = deviation_at_steps(tree, y, k)?;
    let probs = tree.path_probs(y.steps());
    let two_sided_tail = weighted_tail(&s, probs, threshold, Sided::TwoSided);
    let upper_tail = weighted_tail(&s, probs, threshold, Sided::Upper);
    Ok(Theorem1Check {
        threshold,
        two_sided_tail,
        upper_tail,
        holds: two_sided_tail < epsilon,
        upper_holds: upper_tail < epsilon / 2.0,
    })
}

/// Distribution of the values attached to random trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueLaw {
    /// Uniform on `[−1, 1]`.
    Uniform,
    /// Fair `±1`, the extreme points of the range.
    Signs,
}

/// Seeded random tree of the given depth with `2..=max_branching` children
/// per node, Dirichlet(1)-like branch probabilities and `Y` uniform on
/// `[−1, 1]` at every depth.
pub fn random_tree(depth: usize, max_branching: usize, seed: u64) -> Result<(ProbabilityTree, AdaptedSequence)> {
    random_tree_with(depth, max_branching, seed, ValueLaw::Uniform)
}

pub fn random_tree_with(
    depth: usize,
    max_branching: usize,
    seed: u64,
    law: ValueLaw,
) -> Result<(ProbabilityTree, AdaptedSequence)> {
    if depth == 0 {
        return Err(Error::param("depth", depth, "must be at least 1"));
    }
    if max_branching < 2 {
        return Err(Error::param("max_branching", max_branching, "must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = ProbabilityTree::new(random_levels(&mut rng, depth, max_branching))?;
    let values = (1..=depth)
        .map(|n| {
            (0..tree.width(n))
                .map(|_| match law {
                    ValueLaw::Uniform => rng.random_range(-1.0..=1.0),
                    ValueLaw::Signs => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                })
                .collect()
        })
        .collect();
    let y = AdaptedSequence::new(&tree, values)?;
    Ok((tree, y))
}

pub(crate) fn random_levels<R: Rng>(rng: &mut R, depth: usize, max_branching: usize) -> Vec<Vec<Branch>> {
    let mut levels = Vec::with_capacity(depth);
    let mut width = 1usize;
    for _ in 0..depth {
        let mut level = Vec::new();
        for parent in 0..width {
            let b = rng.random_range(2..=max_branching);
            // exponential weights, floored away from zero
            let w: Vec<f64> = (0..b).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
            let total: f64 = w.iter().sum();
            level.extend(w.iter().map(|wi| Branch { parent, prob: wi / total }));
        }
        width = level.len();
        levels.push(level);
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_tree(depth: usize) -> ProbabilityTree {
        ProbabilityTree::product(depth, &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn rejects_malformed_trees() {
        assert!(ProbabilityTree::new(vec![]).is_err());
        let bad_sum = vec![vec![Branch { parent: 0, prob: 0.5 }, Branch { parent: 0, prob: 0.4 }]];
        assert!(ProbabilityTree::new(bad_sum).is_err());
        let bad_parent = vec![vec![Branch { parent: 1, prob: 1.0 }]];
        assert!(ProbabilityTree::new(bad_parent).is_err());
        let childless = vec![
            vec![Branch { parent: 0, prob: 0.5 }, Branch { parent: 0, prob: 0.5 }],
            vec![Branch { parent: 0, prob: 1.0 }],
        ];
        assert!(ProbabilityTree::new(childless).is_err());
        let ungrouped = vec![
            vec![Branch { parent: 0, prob: 0.5 }, Branch { parent: 0, prob: 0.5 }],
            vec![
                Branch { parent: 1, prob: 1.0 },
                Branch { parent: 0, prob: 1.0 },
            ],
        ];
        assert!(ProbabilityTree::new(ungrouped).is_err());
        let zero = vec![vec![Branch { parent: 0, prob: 0.0 }, Branch { parent: 0, prob: 1.0 }]];
        assert!(ProbabilityTree::new(zero).is_err());
    }

    #[test]
    fn descendants_are_contiguous() {
        let (tree, _) = random_tree(5, 3, 4).unwrap();
        for u in 0..tree.width(2) {
            let r = tree.descendants(2, u, 5);
            for v in r.clone() {
                assert_eq!(tree.ancestor(5, v, 2), u);
            }
            let mass: f64 = tree.path_probs(5)[r].iter().sum();
            assert!((mass - tree.path_probs(2)[u]).abs() < 1e-12);
        }
    }

    #[test]
    fn ce_balanced_signs_vanish_at_root() {
        let tree = coin_tree(3);
        let y = AdaptedSequence::from_fn(&tree, 3, |_, i| if i % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        for n in 1..=3 {
            let ce = conditional_expectation(&tree, &y, n, n).unwrap();
            assert_eq!(ce, vec![0.0]);
            let ce = conditional_expectation(&tree, &y, n, n + 4).unwrap();
            assert_eq!(ce, vec![0.0]);
        }
    }

    #[test]
    fn ce_constants_are_predictable() {
        let (tree, _) = random_tree(4, 3, 8).unwrap();
        let y = AdaptedSequence::from_fn(&tree, 4, |_, _| 0.3).unwrap();
        let ce = conditional_expectation(&tree, &y, 4, 1).unwrap();
        assert_eq!(ce.len(), tree.width(3));
        assert!(ce.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn ce_hand_enumeration() {
        let tree = ProbabilityTree::new(vec![
            vec![Branch { parent: 0, prob: 0.25 }, Branch { parent: 0, prob: 0.75 }],
            vec![
                Branch { parent: 0, prob: 0.5 },
                Branch { parent: 0, prob: 0.5 },
                Branch { parent: 1, prob: 0.5 },
                Branch { parent: 1, prob: 0.5 },
            ],
        ])
        .unwrap();
        let y = AdaptedSequence::new(&tree, vec![vec![0.0, 0.0], vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        // leaves carry 0.125, 0.125, 0.375, 0.375
        let root = conditional_expectation(&tree, &y, 2, 2).unwrap();
        assert_eq!(root, vec![0.125 - 0.125 + 0.375 - 0.375]);

        let y = AdaptedSequence::new(&tree, vec![vec![0.0, 0.0], vec![1.0, 1.0, -1.0, 0.2]]).unwrap();
        let root = conditional_expectation(&tree, &y, 2, 2).unwrap()[0];
        assert!((root - (0.125 + 0.125 - 0.375 + 0.375 * 0.2)).abs() < 1e-15);
        assert!(conditional_expectation(&tree, &y, 3, 1).is_err());
        assert!(conditional_expectation(&tree, &y, 0, 1).is_err());
    }

    #[test]
    fn rejects_unbounded_values() {
        let tree = coin_tree(1);
        assert!(AdaptedSequence::new(&tree, vec![vec![1.5, 0.0]]).is_err());
        assert!(AdaptedSequence::new(&tree, vec![vec![0.0]]).is_err());
        assert!(AdaptedSequence::new(&tree, vec![vec![0.0, 0.0], vec![0.0; 4]]).is_err());
    }

    #[test]
    fn zero_process_has_zero_deviation() {
        let (tree, _) = random_tree(4, 3, 1).unwrap();
        let y = AdaptedSequence::from_fn(&tree, 4, |_, _| 0.0).unwrap();
        let s = deviation_per_leaf(&tree, &y, 2).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
        assert!((exact_tail(&tree, &y, 2, 0.0, Sided::Upper).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn martingale_differences_sum_directly() {
        let tree = coin_tree(4);
        // Y_n = ±1 by the last coin: conditional mean 0 given F_{n-1}
        let y = AdaptedSequence::from_fn(&tree, 4, |_, i| if i % 2 == 0 { 1.0 } else { -1.0 }).unwrap();
        let s = deviation_per_leaf(&tree, &y, 1).unwrap();
        for (leaf, &v) in s.iter().enumerate() {
            let direct: f64 = (1..=4).map(|n| y.at(n)[tree.ancestor(4, leaf, n)]).sum();
            assert_eq!(v, direct);
        }
    }

    #[test]
    fn block_process_tree_enumeration() {
        // m = 2 blocks of K = 2 on a coin tree of depth 4: the sign is drawn
        // at the first step of each block and repeated at the second
        let tree = coin_tree(4);
        let y = AdaptedSequence::from_fn(&tree, 4, |n, i| {
            let first = if n % 2 == 1 { n } else { n - 1 };
            let node = tree.ancestor(n, i, first);
            if node % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .unwrap();
        let s = deviation_per_leaf(&tree, &y, 2).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for (leaf, v) in s.iter().enumerate() {
            *counts.entry(*v as i64).or_insert(0.0) += tree.path_probs(4)[leaf];
        }
        assert_eq!(counts, [(-4, 0.25), (0, 0.5), (4, 0.25)].into_iter().collect());
        assert_eq!(exact_tail(&tree, &y, 2, 4.0, Sided::Upper).unwrap(), 0.25);
        assert_eq!(exact_tail(&tree, &y, 2, 9.0, Sided::TwoSided).unwrap(), 0.0);
    }

    #[test]
    fn vacuous_regime_holds() {
        let (tree, y) = random_tree(3, 3, 5).unwrap();
        let r = verify_theorem1(&tree, &y, 1, 0.3).unwrap();
        assert!(r.threshold > 6.0);
        assert_eq!(r.two_sided_tail, 0.0);
        assert!(r.holds && r.upper_holds);
        assert!(verify_theorem1(&tree, &y, 1, 0.7).is_err());
    }

    #[test]
    fn random_tree_shapes() {
        let (tree, y) = random_tree(1, 2, 0).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(y.steps(), 1);
        for seed in 0..100 {
            let (tree, y) = random_tree(6, 3, seed).unwrap();
            // re-validating through the constructors audits every invariant
            ProbabilityTree::new(tree.levels()).unwrap();
            AdaptedSequence::new(&tree, y.levels().to_vec()).unwrap();
        }
        let (tree, _) = random_tree(10, 3, 17).unwrap();
        let total = compensated_sum(tree.path_probs(10).iter().copied());
        assert!((total - 1.0).abs() < 1e-9);
        assert!(random_tree(0, 2, 0).is_err());
        assert!(random_tree(2, 1, 0).is_err());
    }

    #[test]
    fn random_tree_is_seeded() {
        let a = random_tree(5, 3, 42).unwrap();
        let b = random_tree(5, 3, 42).unwrap();
        assert_eq!(a, b);
        let (_, y) = random_tree_with(4, 2, 3, ValueLaw::Signs).unwrap();
        assert!(y.levels().iter().flatten().all(|v| v.abs() == 1.0));
    }
}
