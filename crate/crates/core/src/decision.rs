//! Decision making with a limited impact horizon.
//!
//! At step `n` a decision `d` is taken from a finite ordered space; its loss
//! `λ_n(d) ∈ [0, 1]` is revealed at step `n + K`, i.e. it is a function of
//! the depth-`(n + K)` node. Decisions do not influence the tree. The
//! Bayesian strategy picks, at each depth-`n` node, the first decision
//! minimizing `E(λ_n(d) | F_n)`; against any adapted alternative `A` the
//! per-step regret `λ_n(B_n) − λ_n(A_n)`, re-indexed to step `n + K`, has
//! nonpositive lag-`K` forecast, so the one-sided K-step bound applies to the
//! total regret.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::{reaches, NeumaierSum};
use crate::simulation::{random_levels, AdaptedSequence, ProbabilityTree};
use crate::{Error, Result};

/// Tolerance on `E(Y_{n+K} | F_n) ≤ 0` and on the regret identity.
pub const SHIFT_TOLERANCE: f64 = 1e-9;

/// Finite, ordered set of decision labels. Order breaks ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionSpace {
    labels: Vec<String>,
}

impl DecisionSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::param("decisions", "[]", "need at least one decision"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::param("decisions", l, "duplicate label"));
            }
        }
        Ok(Self { labels })
    }

    /// Labels `d0, d1, …`.
    pub fn numbered(count: usize) -> Result<Self> {
        Self::new((0..count).map(|i| format!("d{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, d: usize) -> &str {
        &self.labels[d]
    }
}

/// Loss tables `λ_n(d)` on the depth-`(n + K)` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    horizon: usize,
    space: DecisionSpace,
    // [step n − 1][decision][node at depth n + K]
    values: Vec<Vec<Vec<f64>>>,
}

impl LossSpec {
    pub fn new(tree: &ProbabilityTree, horizon: usize, space: DecisionSpace, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::param("K", horizon, "impact horizon must be at least 1"));
        }
        let steps = values.len();
        if steps == 0 {
            return Err(Error::Inconsistent("loss table has no steps".into()));
        }
        if steps + horizon > tree.depth() {
            return Err(Error::Inconsistent(format!(
                "N + K = {} exceeds tree depth {}",
                steps + horizon,
                tree.depth()
            )));
        }
        for (i, per_d) in values.iter().enumerate() {
            let n = i + 1;
            if per_d.len() != space.len() {
                return Err(Error::Inconsistent(format!(
                    "step {n} has {} loss rows for {} decisions",
                    per_d.len(),
                    space.len()
                )));
            }
            let width = tree.width(n + horizon);
            for (d, row) in per_d.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::Inconsistent(format!(
                        "loss at step {n} for decision {} has {} values for {width} nodes at depth {}",
                        space.label(d),
                        row.len(),
                        n + horizon
                    )));
                }
                if let Some(j) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Inconsistent(format!(
                        "loss at step {n} for decision {} is {}, outside [0, 1] at node {j}",
                        space.label(d),
                        row[j]
                    )));
                }
            }
        }
        Ok(Self { horizon, space, values })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn space(&self) -> &DecisionSpace {
        &self.space
    }

    /// `λ_n(d)` on the depth-`(n + K)` nodes (`n` is 1-based).
    pub fn table(&self, n: usize, d: usize) -> &[f64] {
        &self.values[n - 1][d]
    }

    pub fn tables(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }
}

/// One decision per depth-`n` node for every step `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    choices: Vec<Vec<usize>>,
}

impl Strategy {
    pub fn new(tree: &ProbabilityTree, loss: &LossSpec, choices: Vec<Vec<usize>>) -> Result<Self> {
        if choices.len() != loss.steps() {
            return Err(Error::Inconsistent(format!(
                "strategy covers {} steps, losses cover {}",
                choices.len(),
                loss.steps()
            )));
        }
        for (i, row) in choices.iter().enumerate() {
            let n = i + 1;
            if row.len() != tree.width(n) {
                return Err(Error::Inconsistent(format!(
                    "step {n}: {} decisions for {} nodes",
                    row.len(),
                    tree.width(n)
                )));
            }
            if let Some(&d) = row.iter().find(|&&d| d >= loss.space().len()) {
                return Err(Error::Inconsistent(format!("step {n}: decision index {d} out of range")));
            }
        }
        Ok(Self { choices })
    }

    /// Decision at depth-`n` node `node`.
    pub fn choice(&self, n: usize, node: usize) -> usize {
        self.choices[n - 1][node]
    }

    pub fn step(&self, n: usize) -> &[usize] {
        &self.choices[n - 1]
    }
}

fn check_step(loss: &LossSpec, n: usize) -> Result<()> {
    if n == 0 || n > loss.steps() {
        return Err(Error::IndexOutOfRange(format!("step {n} not in 1..={}", loss.steps())));
    }
    Ok(())
}

/// `E(λ_n(d) | F_n)` on every depth-`n` node.
pub fn expected_losses(tree: &ProbabilityTree, loss: &LossSpec, n: usize, d: usize) -> Result<Vec<f64>> {
    check_step(loss, n)?;
    if d >= loss.space().len() {
        return Err(Error::IndexOutOfRange(format!("decision {d}")));
    }
    Ok(tree.backward_average(loss.table(n, d), n + loss.horizon(), n))
}

/// `E(λ_n(d) | F_n)` at a single depth-`n` node, summed over its
/// depth-`(n + K)` descendants.
pub fn expected_loss(tree: &ProbabilityTree, loss: &LossSpec, n: usize, d: usize, node: usize) -> Result<f64> {
    check_step(loss, n)?;
    if d >= loss.space().len() {
        return Err(Error::IndexOutOfRange(format!("decision {d}")));
    }
    if node >= tree.width(n) {
        return Err(Error::IndexOutOfRange(format!("node {node} at depth {n}")));
    }
    let to = n + loss.horizon();
    let base = tree.path_probs(n)[node];
    let table = loss.table(n, d);
    let mut acc = NeumaierSum::new();
    for v in tree.descendants(n, node, to) {
        acc.add(tree.path_probs(to)[v] / base * table[v]);
    }
    Ok(acc.value())
}

fn argmin_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (d, v) in values.enumerate() {
        if v < best.1 {
            best = (d, v);
        }
    }
    best.0
}

/// Per node, the first decision attaining the minimal conditional expected
/// loss.
pub fn bayesian_strategy(tree: &ProbabilityTree, loss: &LossSpec) -> Strategy {
    strategy_by(tree, loss, |expected| argmin_first(expected.iter().copied()))
}

/// Per node, the first decision attaining the maximal conditional expected
/// loss.
pub fn adversarial_strategy(tree: &ProbabilityTree, loss: &LossSpec) -> Strategy {
    strategy_by(tree, loss, |expected| argmin_first(expected.iter().map(|v| -v)))
}

fn strategy_by<F: Fn(&[f64]) -> usize>(tree: &ProbabilityTree, loss: &LossSpec, pick: F) -> Strategy {
    let choices = (1..=loss.steps())
        .map(|n| {
            let per_d: Vec<Vec<f64>> = (0..loss.space().len())
                .map(|d| tree.backward_average(loss.table(n, d), n + loss.horizon(), n))
                .collect();
            (0..tree.width(n))
                .map(|u| {
                    let expected: Vec<f64> = per_d.iter().map(|row| row[u]).collect();
                    pick(&expected)
                })
                .collect()
        })
        .collect();
    Strategy { choices }
}

/// Decision drawn uniformly at every node.
pub fn uniform_random_strategy(tree: &ProbabilityTree, loss: &LossSpec, seed: u64) -> Strategy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choices = (1..=loss.steps())
        .map(|n| (0..tree.width(n)).map(|_| rng.random_range(0..loss.space().len())).collect())
        .collect();
    Strategy { choices }
}

/// A node/decision pair where the Bayesian inequality fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceViolation {
    pub step: usize,
    pub node: usize,
    pub chosen: usize,
    pub better: usize,
    pub chosen_loss: f64,
    pub better_loss: f64,
}

/// Every `(n, node, d)` with `E(λ_n(strategy)|F_n) > E(λ_n(d)|F_n)`.
pub fn dominance_violations(tree: &ProbabilityTree, loss: &LossSpec, strategy: &Strategy) -> Vec<DominanceViolation> {
    let mut out = Vec::new();
    for n in 1..=loss.steps() {
        let per_d: Vec<Vec<f64>> = (0..loss.space().len())
            .map(|d| tree.backward_average(loss.table(n, d), n + loss.horizon(), n))
            .collect();
        for u in 0..tree.width(n) {
            let chosen = strategy.choice(n, u);
            for (d, row) in per_d.iter().enumerate() {
                if row[u] < per_d[chosen][u] {
                    out.push(DominanceViolation {
                        step: n,
                        node: u,
                        chosen,
                        better: d,
                        chosen_loss: per_d[chosen][u],
                        better_loss: row[u],
                    });
                }
            }
        }
    }
    out
}

/// `λ_n(A_n)` on the depth-`(n + K)` nodes.
fn realized_step_loss(tree: &ProbabilityTree, loss: &LossSpec, strategy: &Strategy, n: usize) -> Vec<f64> {
    let to = n + loss.horizon();
    (0..tree.width(to))
        .map(|v| {
            let d = strategy.choice(n, tree.ancestor(to, v, n));
            loss.table(n, d)[v]
        })
        .collect()
}

/// `Loss_N(A)` for every leaf.
pub fn loss_per_leaf(tree: &ProbabilityTree, loss: &LossSpec, strategy: &Strategy) -> Vec<f64> {
    let depth = tree.depth();
    let mut total = vec![0.0; tree.leaf_count()];
    for n in 1..=loss.steps() {
        let step = realized_step_loss(tree, loss, strategy, n);
        let at_leaves = tree.broadcast(&step, n + loss.horizon(), depth);
        for (t, s) in total.iter_mut().zip(at_leaves) {
            *t += s;
        }
    }
    total
}

/// `Loss_N(A) = Σ_n λ_n(A_n)` along the path to `leaf`.
pub fn total_loss(tree: &ProbabilityTree, loss: &LossSpec, strategy: &Strategy, leaf: usize) -> Result<f64> {
    let depth = tree.depth();
    if depth < loss.steps() + loss.horizon() {
        return Err(Error::Inconsistent("tree too shallow for the loss horizon".into()));
    }
    if leaf >= tree.leaf_count() {
        return Err(Error::IndexOutOfRange(format!("leaf {leaf}")));
    }
    let mut acc = 0.0;
    for n in 1..=loss.steps() {
        let at = tree.ancestor(depth, leaf, n + loss.horizon());
        let d = strategy.choice(n, tree.ancestor(depth, leaf, n));
        acc += loss.table(n, d)[at];
    }
    Ok(acc)
}

/// Exact `P(Loss_N(B) − Loss_N(alt) ≥ C)` with `B` the Bayesian strategy.
pub fn regret_tail(tree: &ProbabilityTree, loss: &LossSpec, alt: &Strategy, c: f64) -> f64 {
    let bayes = bayesian_strategy(tree, loss);
    regret_tail_between(tree, loss, &bayes, alt, c)
}

/// Exact `P(Loss_N(a) − Loss_N(b) ≥ C)`.
pub fn regret_tail_between(tree: &ProbabilityTree, loss: &LossSpec, a: &Strategy, b: &Strategy, c: f64) -> f64 {
    let la = loss_per_leaf(tree, loss, a);
    let lb = loss_per_leaf(tree, loss, b);
    leaf_tail(tree, la.iter().zip(&lb).map(|(x, y)| x - y), c)
}

fn leaf_tail(tree: &ProbabilityTree, regret: impl Iterator<Item = f64>, c: f64) -> f64 {
    let probs = tree.path_probs(tree.depth());
    let mut acc = NeumaierSum::new();
    for (r, p) in regret.zip(probs) {
        if reaches(r, c) {
            acc.add(*p);
        }
    }
    acc.value().clamp(0.0, 1.0)
}

/// Per-leaf loss of the path-clairvoyant baseline, which takes at every
/// step the decision with the smallest realized loss on that very path.
///
/// This rule reads the future and is not an adapted strategy for `K ≥ 1`;
/// it is an out-of-model stress baseline, and no bound is claimed for it.
pub fn clairvoyant_loss_per_leaf(tree: &ProbabilityTree, loss: &LossSpec) -> Vec<f64> {
    let depth = tree.depth();
    let mut total = vec![0.0; tree.leaf_count()];
    for n in 1..=loss.steps() {
        let to = n + loss.horizon();
        let best: Vec<f64> = (0..tree.width(to))
            .map(|v| {
                (0..loss.space().len())
                    .map(|d| loss.table(n, d)[v])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        for (t, s) in total.iter_mut().zip(tree.broadcast(&best, to, depth)) {
            *t += s;
        }
    }
    total
}

/// `P(Loss_N(B) − Loss_N(clairvoyant) ≥ C)`; see
/// [`clairvoyant_loss_per_leaf`].
pub fn clairvoyant_regret_tail(tree: &ProbabilityTree, loss: &LossSpec, c: f64) -> f64 {
    let bayes = loss_per_leaf(tree, loss, &bayesian_strategy(tree, loss));
    let oracle = clairvoyant_loss_per_leaf(tree, loss);
    leaf_tail(tree, bayes.iter().zip(&oracle).map(|(x, y)| x - y), c)
}

/// `Y_{n+K} = λ_n(B_n) − λ_n(A_n)` for `n = 1..=N` (and `Y_j = 0` for
/// `j ≤ K`), an adapted sequence of length `N + K`.
pub fn shifted_sequence(tree: &ProbabilityTree, loss: &LossSpec, alt: &Strategy) -> Result<AdaptedSequence> {
    let bayes = bayesian_strategy(tree, loss);
    shifted_sequence_between(tree, loss, &bayes, alt)
}

fn shifted_sequence_between(tree: &ProbabilityTree, loss: &LossSpec, b: &Strategy, a: &Strategy) -> Result<AdaptedSequence> {
    let k = loss.horizon();
    let mut levels: Vec<Vec<f64>> = (1..=k).map(|j| vec![0.0; tree.width(j)]).collect();
    for n in 1..=loss.steps() {
        let lb = realized_step_loss(tree, loss, b, n);
        let la = realized_step_loss(tree, loss, a, n);
        levels.push(lb.iter().zip(&la).map(|(x, y)| x - y).collect());
    }
    AdaptedSequence::new(tree, levels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum ShiftViolation {
    /// `E(Y_{n+K} | F_n) > 0` at a depth-`n` node.
    PositiveForecast { step: usize, node: usize, value: f64 },
    /// `Σ Y ≠ Loss_N(B) − Loss_N(A)` at a leaf.
    SumMismatch { leaf: usize, shifted: f64, regret: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedCheck {
    pub passed: bool,
    pub max_forecast: f64,
    pub max_sum_mismatch: f64,
    pub violations: Vec<ShiftViolation>,
}

/// Materializes the shifted regret sequence and checks that it is
/// adapted, has nonpositive lag-`K` forecasts at every node, and sums to
/// the regret on every leaf.
pub fn shifted_deviation_check(tree: &ProbabilityTree, loss: &LossSpec, alt: &Strategy) -> Result<ShiftedCheck> {
    let bayes = bayesian_strategy(tree, loss);
    // AdaptedSequence::new enforces the structural (adaptedness, |Y| ≤ 1)
    // part
    let y = shifted_sequence_between(tree, loss, &bayes, alt)?;
    let k = loss.horizon();
    let mut violations = Vec::new();
    let mut max_forecast = f64::NEG_INFINITY;
    for n in 1..=loss.steps() {
        let forecast = tree.backward_average(y.at(n + k), n + k, n);
        for (u, &v) in forecast.iter().enumerate() {
            max_forecast = max_forecast.max(v);
            if v > SHIFT_TOLERANCE {
                violations.push(ShiftViolation::PositiveForecast { step: n, node: u, value: v });
            }
        }
    }

    let depth = tree.depth();
    let mut shifted_sum = vec![0.0; tree.leaf_count()];
    for j in 1..=y.steps() {
        for (t, v) in shifted_sum.iter_mut().zip(tree.broadcast(y.at(j), j, depth)) {
            *t += v;
        }
    }
    let lb = loss_per_leaf(tree, loss, &bayes);
    let la = loss_per_leaf(tree, loss, alt);
    let mut max_sum_mismatch: f64 = 0.0;
    for (leaf, ((s, b), a)) in shifted_sum.iter().zip(&lb).zip(&la).enumerate() {
        let regret = b - a;
        let gap = (s - regret).abs();
        max_sum_mismatch = max_sum_mismatch.max(gap);
        if gap > SHIFT_TOLERANCE {
            violations.push(ShiftViolation::SumMismatch {
                leaf,
                shifted: *s,
                regret,
            });
        }
    }
    Ok(ShiftedCheck {
        passed: violations.is_empty(),
        max_forecast,
        max_sum_mismatch,
        violations,
    })
}

/// Seeded random decision problem: a tree of depth `steps + horizon` with
/// `2..=max_branching` children per node, `decisions` labels `d0, d1, …`
/// and losses uniform on `[0, 1]`.
pub fn random_decision_problem(
    steps: usize,
    horizon: usize,
    max_branching: usize,
    decisions: usize,
    seed: u64,
) -> Result<(ProbabilityTree, LossSpec)> {
    if steps == 0 || horizon == 0 {
        return Err(Error::param("N,K", format!("{steps},{horizon}"), "must be at least 1"));
    }
    if max_branching < 2 {
        return Err(Error::param("max_branching", max_branching, "must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = ProbabilityTree::new(random_levels(&mut rng, steps + horizon, max_branching))?;
    let space = DecisionSpace::numbered(decisions)?;
    let values = (1..=steps)
        .map(|n| {
            (0..decisions)
                .map(|_| (0..tree.width(n + horizon)).map(|_| rng.random::<f64>()).collect())
                .collect()
        })
        .collect();
    let loss = LossSpec::new(&tree, horizon, space, values)?;
    Ok((tree, loss))
}
