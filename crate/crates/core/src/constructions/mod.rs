//! Block-Rademacher processes and their exact deviation tails.
//!
//! The `N` steps are cut into `m = N/K` blocks of length `K`, and every
//! block carries one fair sign: `Y_n = X_{⌈n/K⌉}`. For the filtration
//! generated by `Y`, the lag-`K` forecast of any `Y_n` only sees earlier
//! blocks, so it is zero, and the cumulative bias is `(2Z − m)·K` with
//! `Z ~ Bin(m, ½)` the number of positive blocks. Everything here is
//! therefore exact binomial arithmetic.

pub mod binomial;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{mv_lower_bound, LowerBoundParams, LowerBoundVariant};
use crate::numeric::lattice_ceil;
use crate::{Error, Result};

pub use binomial::{binomial_lower_tail, binomial_upper_tail, DyadicRational};

/// One realization of the block process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockProcess {
    pub steps: usize,
    pub horizon: usize,
    /// `Y_1, …, Y_N`, each `±1`, constant on blocks of length `K`.
    pub values: Vec<i8>,
}

impl BlockProcess {
    /// Expands block signs into the step sequence.
    pub fn from_signs(signs: &[i8], horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::param("K", horizon, "must be at least 1"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::param("signs", format!("{signs:?}"), "entries must be ±1"));
        }
        let values = signs
            .iter()
            .flat_map(|&s| std::iter::repeat_n(s, horizon))
            .collect::<Vec<_>>();
        Ok(Self {
            steps: values.len(),
            horizon,
            values,
        })
    }

    pub fn blocks(&self) -> usize {
        self.steps / self.horizon
    }

    /// The sign of each block.
    pub fn signs(&self) -> Vec<i8> {
        self.values.iter().step_by(self.horizon).copied().collect()
    }

    /// `Σ Y_n`, which equals the cumulative bias because every lag-`K`
    /// forecast vanishes.
    pub fn deviation(&self) -> i64 {
        self.values.iter().map(|&v| v as i64).sum()
    }
}

fn check_divides(steps: usize, horizon: usize) -> Result<usize> {
    if steps == 0 || horizon == 0 {
        return Err(Error::param("N,K", format!("{steps},{horizon}"), "must be at least 1"));
    }
    if steps % horizon != 0 {
        return Err(Error::NotDivisible { steps, horizon });
    }
    Ok(steps / horizon)
}

/// Draws `m = N/K` independent fair signs from a ChaCha8 stream seeded with
/// `seed` and expands them into blocks.
pub fn sample_block_process(steps: usize, horizon: usize, seed: u64) -> Result<BlockProcess> {
    let m = check_divides(steps, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<i8> = (0..m).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    BlockProcess::from_signs(&signs, horizon)
}

/// Smallest `k` with `2k − m ≥ √m`, in integer arithmetic.
pub fn imbalance_cutoff(m: u64) -> i64 {
    let mut d = m.isqrt();
    if d * d < m {
        d += 1;
    }
    (m + d).div_ceil(2) as i64
}

/// Probability that positive blocks outnumber negative ones by at least
/// `√m`.
pub fn imbalance_prob(m: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("m", m, "must be at least 1"));
    }
    Ok(binomial_upper_tail(m, imbalance_cutoff(m)))
}

/// [`imbalance_prob`] as an exact rational, `m ≤ 64`.
pub fn imbalance_prob_rational(m: u32) -> Option<DyadicRational> {
    if m == 0 {
        return None;
    }
    binomial::upper_tail_rational(m, imbalance_cutoff(m as u64))
}

/// Minimum of [`imbalance_prob`] over `1 ≤ m ≤ m_max` and where it occurs
/// (smallest `m` on ties).
pub fn min_imbalance_prob(m_max: u64) -> Result<(u64, f64)> {
    if m_max < 6 {
        return Err(Error::param("m_max", m_max, "must be at least 6"));
    }
    let best = (1..=m_max)
        .into_par_iter()
        .map(|m| (m, binomial_upper_tail(m, imbalance_cutoff(m))))
        .reduce(
            || (u64::MAX, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(best)
}

/// Exact `P(S ≥ C)` for the block process, where `S = (2Z − m)·K`.
///
/// `C` is compared on the lattice of attainable values: the event uses the
/// smallest lattice point not below `C`, up to a relative `1e-9` snap for
/// thresholds that are integers up to rounding.
pub fn block_deviation_tail(steps: usize, horizon: usize, c: f64) -> Result<f64> {
    let m = check_divides(steps, horizon)?;
    if c.is_nan() {
        return Err(Error::param("C", c, "must be a number"));
    }
    let k0 = block_tail_cutoff(m, horizon, c);
    Ok(binomial_upper_tail(m as u64, k0))
}

fn block_tail_cutoff(m: usize, horizon: usize, c: f64) -> i64 {
    let x = 0.5 * (m as f64 + c / horizon as f64);
    if x > m as f64 + 1.0 {
        return m as i64 + 1;
    }
    if x < -1.0 {
        return -1;
    }
    lattice_ceil(x) as i64
}

/// [`block_deviation_tail`] as an exact rational, `m ≤ 64`.
pub fn block_deviation_tail_rational(steps: usize, horizon: usize, c: f64) -> Result<Option<DyadicRational>> {
    let m = check_divides(steps, horizon)?;
    let k0 = block_tail_cutoff(m, horizon, c);
    Ok(u32::try_from(m).ok().and_then(|m| binomial::upper_tail_rational(m, k0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvCheck {
    pub blocks: usize,
    pub deviation: u64,
    pub tail: f64,
    pub bound: f64,
}

impl MvCheck {
    pub fn ratio(&self) -> f64 {
        self.tail / self.bound
    }
}

/// Outcome of auditing the Matoušek–Vondrák bound against exact tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvAudit {
    pub m_max: usize,
    pub pairs_checked: usize,
    /// Pairs with `t ≥ 1`.
    pub nontrivial_pairs: usize,
    /// Smallest `tail − bound`.
    pub min_slack: f64,
    pub min_slack_at: (usize, u64),
    /// Smallest `tail / bound`.
    pub min_ratio: f64,
    pub min_ratio_at: (usize, u64),
    pub violations: Vec<MvCheck>,
}

/// Checks `P(Z ≥ m/2 + t) ≥ (1/15)·exp(−16t²/m)` for every even `m ≤ m_max`
/// and integer `t ∈ [0, m/8]`. Odd `m` are outside the bound's domain and
/// skipped. Any violation is returned as [`Error::Falsified`].
pub fn verify_mv_bound(m_max: usize) -> Result<MvAudit> {
    let audit = audit_mv_bound(m_max)?;
    if let Some(v) = audit.violations.first() {
        return Err(Error::Falsified(format!(
            "P(Z >= m/2 + t) = {} < {} at m = {}, t = {}",
            v.tail, v.bound, v.blocks, v.deviation
        )));
    }
    Ok(audit)
}

/// Same scan as [`verify_mv_bound`], returning violations inside the report.
pub fn audit_mv_bound(m_max: usize) -> Result<MvAudit> {
    if m_max < 8 {
        return Err(Error::param("m_max", m_max, "must be at least 8"));
    }
    let checks: Vec<MvCheck> = (1..=m_max / 2)
        .into_par_iter()
        .flat_map_iter(|half| {
            let m = 2 * half;
            (0..=(m / 8) as u64).map(move |t| {
                let bound = mv_lower_bound(&LowerBoundParams {
                    blocks: m,
                    deviation: t,
                    variant: LowerBoundVariant::MatousekVondrak,
                })
                .expect("domain enforced by the loop bounds");
                let tail = binomial_upper_tail(m as u64, (m / 2) as i64 + t as i64);
                MvCheck {
                    blocks: m,
                    deviation: t,
                    tail,
                    bound,
                }
            })
        })
        .collect();

    let slack = |c: &MvCheck| c.tail - c.bound;
    let min_slack = checks.iter().min_by(|a, b| slack(a).total_cmp(&slack(b))).expect("nonempty");
    let min_ratio = checks.iter().min_by(|a, b| a.ratio().total_cmp(&b.ratio())).expect("nonempty");
    Ok(MvAudit {
        m_max,
        pairs_checked: checks.len(),
        nontrivial_pairs: checks.iter().filter(|c| c.deviation >= 1).count(),
        min_slack: slack(min_slack),
        min_slack_at: (min_slack.blocks, min_slack.deviation),
        min_ratio: min_ratio.ratio(),
        min_ratio_at: (min_ratio.blocks, min_ratio.deviation),
        violations: checks.iter().filter(|c| c.tail < c.bound).copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_process_shape() {
        let p = sample_block_process(4, 2, 11).unwrap();
        assert_eq!(p.values.len(), 4);
        assert_eq!(p.blocks(), 2);
        assert_eq!(p.values[0], p.values[1]);
        assert_eq!(p.values[2], p.values[3]);
        assert!(p.values.iter().all(|&v| v == 1 || v == -1));
        assert_eq!(
            sample_block_process(5, 2, 0),
            Err(Error::NotDivisible { steps: 5, horizon: 2 })
        );
    }

    #[test]
    fn block_process_is_deterministic() {
        assert_eq!(sample_block_process(6, 3, 99).unwrap(), sample_block_process(6, 3, 99).unwrap());
        let signs: Vec<_> = (0..64).map(|s| sample_block_process(6, 1, s).unwrap().values).collect();
        assert!(signs.iter().any(|v| v != &signs[0]));
    }

    #[test]
    fn block_process_constancy() {
        let p = sample_block_process(30, 5, 3).unwrap();
        for n in 1..=30usize {
            let first = 5 * n.div_ceil(5) - 5 + 1;
            assert_eq!(p.values[n - 1], p.values[first - 1]);
        }
        let rebuilt = BlockProcess::from_signs(&p.signs(), 5).unwrap();
        assert_eq!(rebuilt, p);
    }

    #[test]
    fn block_process_mean_is_zero() {
        // Σ values = K·(2Z − m) has mean 0 and variance K²·m
        let (n, k, seeds) = (12usize, 3usize, 100_000u64);
        let total: i64 = (0..seeds).map(|s| sample_block_process(n, k, s).unwrap().deviation()).sum();
        let mean = total as f64 / seeds as f64;
        let sd = ((k * k * (n / k)) as f64 / seeds as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd, "mean {mean}, sd {sd}");
    }

    #[test]
    fn imbalance_examples() {
        assert_eq!(imbalance_prob(6).unwrap(), 0.109375);
        assert_eq!(imbalance_prob_rational(6).unwrap().reduced(), (7, 64));
        assert_eq!(imbalance_prob(1).unwrap(), 0.5);
        assert!(imbalance_prob(0).is_err());
        let big = imbalance_prob(1_000_000).unwrap();
        assert!((big - 0.158_655_253_931_457).abs() < 0.002);
    }

    #[test]
    fn min_imbalance_examples() {
        assert_eq!(min_imbalance_prob(6).unwrap(), (6, 0.109375));
        assert_eq!(min_imbalance_prob(100).unwrap(), (6, 0.109375));
        assert!(min_imbalance_prob(5).is_err());
    }

    #[test]
    fn block_tail_examples() {
        assert_eq!(block_deviation_tail(6, 1, 6f64.sqrt()).unwrap(), 0.109375);
        let r = block_deviation_tail_rational(64, 1, 4.0).unwrap().unwrap();
        assert_eq!(r.numerator, 6_529_969_890_317_938_205);
        assert_eq!(r.exponent, 64);
        assert_eq!(block_deviation_tail(8, 2, 0.0).unwrap(), 11.0 / 16.0);
        assert_eq!(block_deviation_tail(8, 2, 100.0).unwrap(), 0.0);
        assert_eq!(block_deviation_tail(8, 2, -100.0).unwrap(), 1.0);
        assert!(block_deviation_tail(9, 2, 1.0).is_err());
    }

    #[test]
    fn block_tail_snaps_rounded_integers() {
        let below = 4.0 - 1e-13;
        let above = 4.0 + 1e-13;
        assert_eq!(
            block_deviation_tail(64, 1, below).unwrap(),
            block_deviation_tail(64, 1, above).unwrap()
        );
    }

    #[test]
    fn mv_audit_small() {
        let a = verify_mv_bound(8).unwrap();
        // m = 2, 4, 6 with t = 0 and m = 8 with t = 0, 1
        assert_eq!(a.pairs_checked, 5);
        assert_eq!(a.nontrivial_pairs, 1);
        assert!(a.violations.is_empty());
        assert!(verify_mv_bound(7).is_err());
    }

    #[test]
    fn mv_audit_clean_to_200() {
        let a = verify_mv_bound(200).unwrap();
        assert!(a.min_slack > 0.0);
        assert!(a.min_ratio > 1.0);
        // odd m never appear
        assert!(a.min_slack_at.0 % 2 == 0 && a.min_ratio_at.0 % 2 == 0);
    }
}
