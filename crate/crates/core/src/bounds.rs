//! Closed-form and numerically optimized evaluation of the K-step bounds.
//!
//! The upper bound is assembled from three pieces:
//!
//! 1. each residue class `n ≡ k (mod K)` is a martingale, so its partial
//!    bias `X_k` has a Hoeffding tail `exp(−a x²)` with `a = K/(2N)`;
//! 2. the worst-case tail of `X_1 + … + X_K` under arbitrary dependence is
//!    controlled by a dual (robust aggregation) infimum over a shift `t`;
//! 3. choosing `t` in the middle of its range and using the Feller bound on
//!    the Gaussian tail yields `(4KN/C²)·exp(−C²/(8KN))`, which is below
//!    `ε/2` at `C = 4√(KN ln(1/ε))` whenever `ε < 0.7`.
//!
//! The lower-bound side (thresholds attained by block processes) lives in
//! [`prop2_threshold`], [`kr_threshold`] and [`mv_lower_bound`].

use serde::{Deserialize, Serialize};

use crate::numeric::{gaussian_integral, golden_section};
use crate::{Error, Result};

pub use crate::numeric::gaussian_survival;

/// Upper end (exclusive) of the `ε` range on which the K-step bound holds.
pub const EPSILON_LIMIT: f64 = 0.7;

/// Integer tolerance used when checking the lattice conditions of the
/// Matoušek–Vondrák instance.
pub const INTEGER_TOLERANCE: f64 = 1e-9;

/// The triple `(N, K, ε)` parameterizing every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonParams {
    /// Number of steps `N`.
    pub steps: usize,
    /// Prediction horizon `K`.
    pub horizon: usize,
    /// Tail probability budget `ε`.
    pub epsilon: f64,
}

impl HorizonParams {
    pub fn new(steps: usize, horizon: usize, epsilon: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("N", steps, "must be at least 1"));
        }
        if horizon == 0 {
            return Err(Error::param("K", horizon, "must be at least 1"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", epsilon, "must lie in (0, 1)"));
        }
        Ok(Self { steps, horizon, epsilon })
    }

    /// Rejects `ε ∉ (0, 0.7)`.
    pub fn require_theorem_range(&self) -> Result<()> {
        check_theorem_epsilon(self.epsilon)
    }

    /// `m = N/K` when `K` divides `N`.
    pub fn blocks(&self) -> Option<usize> {
        (self.steps % self.horizon == 0).then(|| self.steps / self.horizon)
    }
}

fn check_theorem_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < EPSILON_LIMIT {
        Ok(())
    } else {
        Err(Error::EpsilonOutOfRange(epsilon))
    }
}

/// Deviation level above which the two-sided bias has probability `< ε`:
/// `4·√(K(N+K)·ln(1/ε))`.
///
/// The `N + K` form absorbs rounding `N` up to a multiple of `K`.
pub fn theorem1_threshold(p: &HorizonParams) -> Result<f64> {
    p.require_theorem_range()?;
    let k = p.horizon as f64;
    let n = p.steps as f64;
    Ok(4.0 * (k * (n + k) * (1.0 / p.epsilon).ln()).sqrt())
}

/// Smallest `ε` certified for deviation level `c`: inverts
/// [`theorem1_threshold`] in `ε`. Fails when the inverse lands outside
/// `(0, 0.7)`.
pub fn theorem1_epsilon_for(steps: usize, horizon: usize, c: f64) -> Result<f64> {
    if steps == 0 || horizon == 0 {
        return Err(Error::param("N,K", format!("{steps},{horizon}"), "must be at least 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("C", c, "must be positive and finite"));
    }
    let k = horizon as f64;
    let n = steps as f64;
    let eps = (-c * c / (16.0 * k * (n + k))).exp();
    check_theorem_epsilon(eps)?;
    Ok(eps)
}

/// Largest horizon `K` whose threshold at `(N, ε)` does not exceed `c`, or
/// `None` when even `K = 1` is too large.
pub fn theorem1_max_horizon(steps: usize, epsilon: f64, c: f64) -> Result<Option<usize>> {
    let thr = |k: usize| theorem1_threshold(&HorizonParams::new(steps, k, epsilon)?);
    if thr(1)? > c {
        return Ok(None);
    }
    // threshold grows at least like 4K√ln(1/ε), so the answer is below this
    let mut hi = 2usize;
    while thr(hi)? <= c {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if thr(mid)? <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Hoeffding tail `min(1, exp(−C²·K/(2N)))` of one residue-class sum.
///
/// `N` must already be a multiple of `K`.
pub fn hoeffding_marginal_tail(c: f64, steps: usize, horizon: usize) -> Result<f64> {
    if steps == 0 || horizon == 0 {
        return Err(Error::param("N,K", format!("{steps},{horizon}"), "must be at least 1"));
    }
    if steps % horizon != 0 {
        return Err(Error::NotDivisible { steps, horizon });
    }
    if c <= 0.0 {
        return Ok(1.0);
    }
    let a = horizon as f64 / (2.0 * steps as f64);
    Ok((-a * c * c).exp().min(1.0))
}

/// `φ(z)/z`, the classical upper bound on `Φ̄(z)` for `z > 0`.
pub fn feller_upper(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::param("z", z, "must be positive"));
    }
    Ok((-0.5 * z * z).exp() / (z * (2.0 * std::f64::consts::PI).sqrt()))
}

/// Parameters of the aggregation problem: `K` nonnegative variables with
/// tails at most `exp(−a x²)`, sum compared against `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationParams {
    pub deviation: f64,
    pub count: usize,
    pub rate: f64,
}

impl AggregationParams {
    pub fn new(deviation: f64, count: usize, rate: f64) -> Result<Self> {
        if !(deviation > 0.0 && deviation.is_finite()) {
            return Err(Error::param("C", deviation, "must be positive and finite"));
        }
        if count == 0 {
            return Err(Error::param("K", count, "must be at least 1"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("a", rate, "must be positive and finite"));
        }
        Ok(Self { deviation, count, rate })
    }

    /// Instance arising in the proof: `a = K/(2N)`, `K | N`.
    pub fn from_horizon(deviation: f64, steps: usize, horizon: usize) -> Result<Self> {
        if steps == 0 || horizon == 0 {
            return Err(Error::param("N,K", format!("{steps},{horizon}"), "must be at least 1"));
        }
        if steps % horizon != 0 {
            return Err(Error::NotDivisible { steps, horizon });
        }
        Self::new(deviation, horizon, horizon as f64 / (2.0 * steps as f64))
    }

    /// Right end `C/K` of the (open) range of the shift `t`.
    pub fn shift_limit(&self) -> f64 {
        self.deviation / self.count as f64
    }
}

/// `∫_lo^hi P(X ≥ x) dx` for a nonnegative marginal with tail `exp(−a x²)`
/// on `x ≥ 0` (and tail 1 below zero).
fn survival_integral(a: f64, lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    if lo < 0.0 {
        total += hi.min(0.0) - lo;
    }
    let pos_lo = lo.max(0.0);
    if hi > pos_lo {
        total += gaussian_integral(a, pos_lo, hi);
    }
    total
}

/// Dual objective at shift `t < C/K`:
/// `K·∫_t^{C−(K−1)t} P(X ≥ x) dx / (C − Kt)`, with upper limit `∞` when
/// `relaxed`.
pub fn aggregation_objective(ap: &AggregationParams, t: f64, relaxed: bool) -> f64 {
    let k = ap.count as f64;
    let c = ap.deviation;
    let denom = c - k * t;
    debug_assert!(denom > 0.0);
    let upper = if relaxed { f64::INFINITY } else { c - (k - 1.0) * t };
    k * survival_integral(ap.rate, t, upper) / denom
}

/// Numerically minimized aggregation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationBound {
    /// Infimum estimate, clamped to `[0, 1]`.
    pub value: f64,
    /// Shift at which `value` was attained.
    pub argmin: f64,
    /// False when the minimum sits at an end of the search grid (typically
    /// the open right end `C/K`, where the infimum is a limit); the value
    /// is then the best grid point.
    pub bracketed: bool,
}

const AGG_GRID_POINTS: usize = 400;

/// Infimum over `t ∈ (−∞, C/K)` of [`aggregation_objective`].
///
/// The search covers `t ∈ [−C, C/K − δ]` with `δ = 1e-9·C/K` on a grid that
/// is geometric in the distance to `C/K`, then refines the best interior
/// grid cell by golden-section search to relative tolerance `1e-9`. The
/// midpoint shift `C/(2K)` is always evaluated as a candidate.
pub fn aggregation_bound(ap: &AggregationParams, relaxed: bool) -> AggregationBound {
    let right = ap.shift_limit();
    let delta = 1e-9 * right;
    let left = -ap.deviation;
    let span = right - left;
    let f = |t: f64| aggregation_objective(ap, t, relaxed);

    let ratio = (span / delta).ln() / (AGG_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..AGG_GRID_POINTS)
        .map(|j| right - delta * (ratio * j as f64).exp())
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, &v)| if v < acc.1 { (j, v) } else { acc });

    let mut result = AggregationBound {
        value: values[best],
        argmin: grid[best],
        bracketed: false,
    };
    if best > 0 && best + 1 < AGG_GRID_POINTS {
        // grid runs right-to-left in t
        let m = golden_section(f, grid[best + 1], grid[best - 1], 1e-9, 1e-12 * right);
        result.bracketed = true;
        if m.value < result.value {
            result.value = m.value;
            result.argmin = m.x;
        }
    }
    let mid = 0.5 * right;
    let at_mid = f(mid);
    if at_mid < result.value {
        result.value = at_mid;
        result.argmin = mid;
    }
    result.value = result.value.clamp(0.0, 1.0);
    result
}

/// `(4KN/C²)·exp(−C²/(8KN))`: the relaxed objective at `t = C/(2K)`
/// followed by the Feller bound. Not clamped: the chain compares raw
/// values, and the value exceeds 1 for small `C`.
pub fn midpoint_bound(c: f64, horizon: usize, steps: usize) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::param("C", c, "must be positive"));
    }
    if steps == 0 || horizon == 0 {
        return Err(Error::param("N,K", format!("{steps},{horizon}"), "must be at least 1"));
    }
    let kn = horizon as f64 * steps as f64;
    Ok(4.0 * kn / (c * c) * (-c * c / (8.0 * kn)).exp())
}

/// Whether `C = √(8KN·x·ln(1/ε))` solves the midpoint inequality, i.e.
/// `ε^{x−1} < x·ln(1/ε)`.
pub fn suitable_x_check(epsilon: f64, x: f64) -> bool {
    epsilon.powf(x - 1.0) < x * (1.0 / epsilon).ln()
}

/// Whether coefficient `c` in `c·√(KN ln(1/ε))` passes the midpoint test
/// for every `(K, N)`: `8·ε^{c²/8 − 1} < c²·ln(1/ε)`.
pub fn coefficient_feasible(c: f64, epsilon: f64) -> bool {
    let c2 = c * c;
    8.0 * epsilon.powf(c2 / 8.0 - 1.0) < c2 * (1.0 / epsilon).ln()
}

/// Condition of the block-process lower bound that a parameter triple fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop2Violation {
    /// `K` does not divide `N`.
    HorizonNotDividing,
    /// `m = N/K` is odd.
    OddBlockCount,
    /// `√(m·ln(1/(15ε)))` is not an integer multiple of 4.
    IntegerCondition,
    /// `½√(KN·ln(1/(15ε))) > N/4`.
    NotTooGood,
}

impl std::fmt::Display for Prop2Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Prop2Violation::HorizonNotDividing => "K does not divide N",
            Prop2Violation::OddBlockCount => "m = N/K is not even",
            Prop2Violation::IntegerCondition => "sqrt(m ln(1/(15 eps))) is not in 4Z",
            Prop2Violation::NotTooGood => "threshold exceeds N/4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2Threshold {
    /// `½·√(KN·ln(1/(15ε)))`.
    pub threshold: f64,
    /// Binomial deviation `t = ¼·√(m·ln(1/(15ε)))` (only meaningful when
    /// `K | N`).
    pub block_deviation: f64,
    pub valid: bool,
    pub violations: Vec<Prop2Violation>,
}

/// Deviation level the block process exceeds with probability at least `ε`,
/// together with the lattice conditions under which that is guaranteed.
pub fn prop2_threshold(p: &HorizonParams) -> Result<Prop2Threshold> {
    if !(15.0 * p.epsilon < 1.0) {
        return Err(Error::param("epsilon", p.epsilon, "15·epsilon must be below 1"));
    }
    let log_term = (1.0 / (15.0 * p.epsilon)).ln();
    let n = p.steps as f64;
    let k = p.horizon as f64;
    let threshold = 0.5 * (k * n * log_term).sqrt();
    let m = n / k;
    let block_deviation = 0.25 * (m * log_term).sqrt();

    let mut violations = Vec::new();
    match p.blocks() {
        None => violations.push(Prop2Violation::HorizonNotDividing),
        Some(m) if m % 2 != 0 => violations.push(Prop2Violation::OddBlockCount),
        Some(_) => {}
    }
    let root = (m * log_term).sqrt();
    let nearest = root.round();
    let is_integer = (root - nearest).abs() <= INTEGER_TOLERANCE;
    if !(is_integer && (nearest as i64) % 4 == 0 && nearest >= 4.0) {
        violations.push(Prop2Violation::IntegerCondition);
    }
    if threshold > n / 4.0 * (1.0 + INTEGER_TOLERANCE) {
        violations.push(Prop2Violation::NotTooGood);
    }
    Ok(Prop2Threshold {
        threshold,
        block_deviation,
        valid: violations.is_empty(),
        violations,
    })
}

/// All `ε` for which `(N, K, ε)` passes [`prop2_threshold`]:
/// `ε = exp(−s²/m)/15` for `s ∈ 4ℤ`, `s ≥ 4`, with `2Ks/4 ≤ N/4`.
pub fn prop2_valid_epsilons(steps: usize, horizon: usize) -> Vec<f64> {
    if horizon == 0 || steps % horizon != 0 || (steps / horizon) % 2 != 0 {
        return Vec::new();
    }
    let m = (steps / horizon) as f64;
    (1..)
        .map(|j| 4.0 * j as f64)
        .take_while(|s| 2.0 * horizon as f64 * s / 4.0 <= steps as f64 / 4.0)
        .map(|s| (-s * s / m).exp() / 15.0)
        .filter(|&eps| eps > 0.0)
        .collect()
}

/// Threshold obtained with the sharper binomial lower bound of Kunsch and
/// Rudolf: `0.6·√(KN·ln(1/(4.3ε)))`.
pub fn kr_threshold(p: &HorizonParams) -> Result<f64> {
    if !(4.3 * p.epsilon < 1.0) {
        return Err(Error::param("epsilon", p.epsilon, "4.3·epsilon must be below 1"));
    }
    let kn = p.horizon as f64 * p.steps as f64;
    Ok(0.6 * (kn * (1.0 / (4.3 * p.epsilon)).ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundVariant {
    MatousekVondrak,
    KunschRudolf,
}

/// `(m, t)` for the binomial large-deviation lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBoundParams {
    pub blocks: usize,
    pub deviation: u64,
    pub variant: LowerBoundVariant,
}

/// `P(Z ≥ m/2 + t) ≥ (1/15)·exp(−16t²/m)` for `Z ~ Bin(m, ½)`, `m` even,
/// integer `t ∈ [0, m/8]`.
pub fn mv_lower_bound(lb: &LowerBoundParams) -> Result<f64> {
    if lb.variant != LowerBoundVariant::MatousekVondrak {
        return Err(Error::LowerBoundDomain(
            "only the Matousek-Vondrak constants (1/15, 16) are available".into(),
        ));
    }
    if lb.blocks == 0 || lb.blocks % 2 != 0 {
        return Err(Error::LowerBoundDomain(format!("m = {} must be even and positive", lb.blocks)));
    }
    if 8 * lb.deviation > lb.blocks as u64 {
        return Err(Error::LowerBoundDomain(format!(
            "t = {} exceeds m/8 = {}",
            lb.deviation,
            lb.blocks as f64 / 8.0
        )));
    }
    let t = lb.deviation as f64;
    Ok((-16.0 * t * t / lb.blocks as f64).exp() / 15.0)
}
