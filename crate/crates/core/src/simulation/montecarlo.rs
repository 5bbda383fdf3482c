use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::tree::{deviation_at_steps, AdaptedSequence, ProbabilityTree, Sided};
use crate::{Error, Result};

/// Generator driving a single Monte Carlo trial.
pub type TrialRng = ChaCha8Rng;

/// Confidence level of the intervals attached to [`TailEstimate`].
pub const CI_LEVEL: f64 = 0.99;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index`: the `index`-th output of the SplitMix64 stream
/// started at `master`. Depends only on `(master, index)`, never on the
/// order in which trials run.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    TrialRng::seed_from_u64(trial_seed(master, index))
}

/// Produces one draw of the cumulative bias `S` per call.
pub trait PathSampler: Sync {
    fn sample_deviation(&self, rng: &mut TrialRng) -> std::result::Result<f64, String>;
}

/// Samples a path of an explicit tree and reads off its bias.
#[derive(Debug, Clone)]
pub struct TreeSampler {
    // cumulative branch probabilities, level d − 1 for the depth-d nodes
    cumulative: Vec<Vec<f64>>,
    // first child index of every node, level d for the depth-d nodes
    first_child: Vec<Vec<usize>>,
    deviation: Vec<f64>,
}

impl TreeSampler {
    pub fn new(tree: &ProbabilityTree, y: &AdaptedSequence, k: usize) -> Result<Self> {
        let steps = y.steps();
        let deviation = deviation_at_steps(tree, y, k)?;
        let mut cumulative = Vec::with_capacity(steps);
        let mut first_child = Vec::with_capacity(steps);
        for d in 0..steps {
            let mut cum = vec![0.0; tree.width(d + 1)];
            let mut starts = Vec::with_capacity(tree.width(d));
            for u in 0..tree.width(d) {
                let r = tree.children(d, u);
                starts.push(r.start);
                let mut acc = 0.0;
                for c in r {
                    acc += tree.branch_prob(d + 1, c);
                    cum[c] = acc;
                }
            }
            cumulative.push(cum);
            first_child.push(starts);
        }
        Ok(Self {
            cumulative,
            first_child,
            deviation,
        })
    }
}

impl PathSampler for TreeSampler {
    fn sample_deviation(&self, rng: &mut TrialRng) -> std::result::Result<f64, String> {
        let mut node = 0usize;
        for (d, cum) in self.cumulative.iter().enumerate() {
            let start = self.first_child[d][node];
            let end = self.first_child[d].get(node + 1).copied().unwrap_or(cum.len());
            let u: f64 = rng.random::<f64>() * cum[end - 1];
            node = start + cum[start..end].partition_point(|&c| c <= u).min(end - start - 1);
        }
        Ok(self.deviation[node])
    }
}

/// Samples the block process directly: `m` fair signs, `S = K·Σ signs`.
#[derive(Debug, Clone, Copy)]
pub struct BlockSampler {
    pub steps: usize,
    pub horizon: usize,
}

impl BlockSampler {
    pub fn new(steps: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 || steps == 0 || steps % horizon != 0 {
            return Err(Error::NotDivisible { steps, horizon });
        }
        Ok(Self { steps, horizon })
    }
}

impl PathSampler for BlockSampler {
    fn sample_deviation(&self, rng: &mut TrialRng) -> std::result::Result<f64, String> {
        let m = self.steps / self.horizon;
        let plus = (0..m).filter(|_| rng.random::<bool>()).count() as i64;
        Ok(((2 * plus - m as i64) * self.horizon as i64) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    ClopperPearson,
}

/// Monte Carlo tail probability with an exact binomial confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub trials: u64,
    pub seed: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: IntervalMethod,
}

impl TailEstimate {
    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Two-sided Clopper–Pearson interval for `hits` successes in `trials`.
pub fn clopper_pearson(hits: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || hits > trials {
        return Err(Error::param("hits/trials", format!("{hits}/{trials}"), "need 0 <= hits <= trials, trials >= 1"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", level, "must lie in (0, 1)"));
    }
    let alpha = 1.0 - level;
    let (x, n) = (hits as f64, trials as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| Error::param("beta", format!("({a}, {b})"), e.to_string()));
    let low = if hits == 0 {
        0.0
    } else {
        beta(x, n - x + 1.0)?.inverse_cdf(alpha / 2.0)
    };
    let high = if hits == trials {
        1.0
    } else {
        beta(x + 1.0, n - x)?.inverse_cdf(1.0 - alpha / 2.0)
    };
    let p_hat = x / n;
    Ok((low.min(p_hat), high.max(p_hat)))
}

/// Estimates `P(|S| ≥ C)` or `P(S ≥ C)` from `trials` independent paths.
///
/// Trial `i` draws from [`trial_rng`]`(seed, i)`; only hit counts are merged,
/// so the estimate is identical for any thread count. A failing sampler
/// aborts with the smallest failing trial index.
pub fn mc_tail<S: PathSampler + ?Sized>(sampler: &S, c: f64, sided: Sided, trials: u64, seed: u64) -> Result<TailEstimate> {
    if trials == 0 {
        return Err(Error::param("trials", trials, "must be at least 1"));
    }
    let outcome = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            match sampler.sample_deviation(&mut rng) {
                Ok(s) => Ok(u64::from(sided.hit(s, c))),
                Err(reason) => Err((i, reason)),
            }
        })
        .reduce(
            || Ok(0),
            |a, b| match (a, b) {
                (Ok(x), Ok(y)) => Ok(x + y),
                (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
                (Err(e1), Err(e2)) => Err(if e1.0 <= e2.0 { e1 } else { e2 }),
            },
        );
    let hits = outcome.map_err(|(trial, reason)| Error::SamplerFailed { trial, reason })?;
    let (ci_low, ci_high) = clopper_pearson(hits, trials, CI_LEVEL)?;
    Ok(TailEstimate {
        p_hat: hits as f64 / trials as f64,
        hits,
        trials,
        seed,
        ci_low,
        ci_high,
        method: IntervalMethod::ClopperPearson,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::tree::{exact_tail, random_tree};
    use statrs::function::gamma::ln_gamma;

    fn binom_upper(n: u64, x: u64, p: f64) -> f64 {
        (x..=n)
            .map(|k| {
                let k = k as f64;
                let n = n as f64;
                (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) + k * p.ln() + (n - k) * (-p).ln_1p()).exp()
            })
            .sum()
    }

    #[test]
    fn clopper_pearson_matches_bisection() {
        // the lower end solves P(Bin(n, p) ≥ x) = α/2
        for &(x, n) in &[(3u64, 50u64), (17, 200), (120, 1000)] {
            let (lo, hi) = clopper_pearson(x, n, 0.99).unwrap();
            let (mut a, mut b) = (1e-12, x as f64 / n as f64);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if binom_upper(n, x, mid) < 0.005 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            assert!((lo - a).abs() < 1e-9, "x={x} n={n}: {lo} vs {a}");
            // upper end solves P(Bin(n, p) ≤ x) = α/2
            let (mut a, mut b) = (x as f64 / n as f64, 1.0 - 1e-12);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if 1.0 - binom_upper(n, x + 1, mid) > 0.005 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            assert!((hi - a).abs() < 1e-9, "x={x} n={n}: {hi} vs {a}");
        }
    }

    #[test]
    fn clopper_pearson_edges() {
        let (lo, hi) = clopper_pearson(0, 100, 0.99).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.005f64.powf(0.01))).abs() < 1e-12);
        let (lo, hi) = clopper_pearson(100, 100, 0.99).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - 0.005f64.powf(0.01)).abs() < 1e-12);
        assert!(clopper_pearson(5, 4, 0.99).is_err());
        assert!(clopper_pearson(0, 0, 0.99).is_err());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| trial_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
    }

    #[test]
    fn zero_tail_process() {
        let (tree, y) = random_tree(3, 2, 0).unwrap();
        let sampler = TreeSampler::new(&tree, &y, 1).unwrap();
        let est = mc_tail(&sampler, 100.0, Sided::TwoSided, 1000, 1).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.ci_low, 0.0);
    }

    #[test]
    fn block_sampler_covers_seven_sixtyfourths() {
        let est = mc_tail(&BlockSampler::new(6, 1).unwrap(), 6f64.sqrt(), Sided::Upper, 100_000, 2024).unwrap();
        assert!(est.contains(7.0 / 64.0), "{est:?}");
        assert!(est.ci_low <= est.p_hat && est.p_hat <= est.ci_high);
    }

    #[test]
    fn tree_sampler_matches_exact() {
        let (tree, y) = random_tree(5, 3, 12).unwrap();
        let s = deviation_at_steps(&tree, &y, 2).unwrap();
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        let c = sorted[sorted.len() * 3 / 4];
        let exact = exact_tail(&tree, &y, 2, c, Sided::Upper).unwrap();
        let est = mc_tail(&TreeSampler::new(&tree, &y, 2).unwrap(), c, Sided::Upper, 50_000, 5).unwrap();
        assert!(est.contains(exact), "{est:?} vs {exact}");
    }

    #[test]
    fn thread_count_does_not_change_estimate() {
        let (tree, y) = random_tree(6, 3, 77).unwrap();
        let sampler = TreeSampler::new(&tree, &y, 1).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_tail(&sampler, 0.5, Sided::TwoSided, 20_000, 3).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    struct Failing;
    impl PathSampler for Failing {
        fn sample_deviation(&self, rng: &mut TrialRng) -> std::result::Result<f64, String> {
            if rng.random::<f64>() < 0.01 {
                Err("boom".into())
            } else {
                Ok(0.0)
            }
        }
    }

    #[test]
    fn sampler_failure_reports_first_trial() {
        let first = (0..).find(|&i| trial_rng(9, i).random::<f64>() < 0.01).unwrap();
        let err = mc_tail(&Failing, 1.0, Sided::Upper, 5000, 9).unwrap_err();
        assert_eq!(err, Error::SamplerFailed { trial: first, reason: "boom".into() });
    }
}
