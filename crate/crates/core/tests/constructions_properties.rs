use kstep::bounds::{prop2_threshold, prop2_valid_epsilons, HorizonParams};
use kstep::constructions::{
    binomial::pmf_half, binomial_lower_tail, binomial_upper_tail, block_deviation_tail, imbalance_prob,
};
use kstep::simulation::{mc_tail, BlockSampler, Sided};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

/// `Σ_{k ≥ k0} C(m, k) / 2^m` in exact integer arithmetic.
fn bigint_upper_tail(m: u64, k0: u64) -> f64 {
    let mut c = BigUint::one();
    let mut num = BigUint::zero();
    for k in 0..=m {
        if k >= k0 {
            num += &c;
        }
        c = c * (m - k) / (k + 1);
    }
    if num.is_zero() {
        return 0.0;
    }
    let shift = num.bits().saturating_sub(64);
    let top = (&num >> shift).to_u64().unwrap() as f64;
    // split the power of two to stay clear of underflow
    let e = shift as i32 - m as i32;
    top * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
}

#[test]
fn log_route_matches_big_integers() {
    for m in [65u64, 101, 1000, 2500, 5000] {
        let half = m / 2;
        let root = (m as f64).sqrt() as u64;
        let cutoffs = [half - root, half, half + 1, half + root, half + 3 * root, half + 6 * root, m];
        for k0 in cutoffs.into_iter().filter(|&k0| k0 <= m) {
            let exact = bigint_upper_tail(m, k0);
            let log = binomial_upper_tail(m, k0 as i64);
            if exact < 1e-290 {
                // below the normal range, only the order of magnitude survives
                assert!(log < 1e-290, "m={m} k0={k0}: {log}");
                continue;
            }
            let rel = ((log - exact) / exact).abs();
            assert!(rel <= 1e-12, "m={m} k0={k0}: {log} vs {exact} (rel {rel:e})");
        }
    }
}

#[test]
fn frozen_large_m_values() {
    // 30-digit reference values
    let cases = [
        (imbalance_prob(1_000_000).unwrap(), 0.158_897_345_681_652_768_558_941_842_884),
        (imbalance_prob(100_000).unwrap(), 0.158_065_077_506_985_678_211_753_170_48),
        (imbalance_prob(12_345).unwrap(), 0.156_720_551_006_873_387_559_449_795_568),
        (binomial_upper_tail(100_000, 50_700), 4.842_371_758_012_842_043_606_997_515e-6),
        (binomial_upper_tail(1_000_000, 502_000), 3.180_466_875_041_244_263_177_055_444_42e-5),
    ];
    for (got, want) in cases {
        assert!(((got - want) / want).abs() <= 1e-12, "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn complement_identity(m in 1u64..3000, frac in 0.0f64..=1.0) {
        let k0 = (frac * (m + 1) as f64) as i64;
        let total = binomial_upper_tail(m, k0) + binomial_lower_tail(m, k0 - 1);
        prop_assert!((total - 1.0).abs() <= 1e-12, "{}", total);
    }

    #[test]
    fn fair_coin_symmetry(m in 1u64..3000, frac in 0.0f64..=1.0) {
        let k0 = (frac * m as f64) as i64;
        let up = binomial_upper_tail(m, k0);
        let down = binomial_lower_tail(m, m as i64 - k0);
        prop_assert!((up - down).abs() <= 1e-12 * up.max(1e-300) + 1e-300, "{} vs {}", up, down);
    }

    #[test]
    fn tail_scales_with_block_length(m in 1usize..300, k in 2usize..9, c in -400.0f64..400.0) {
        let base = block_deviation_tail(m, 1, c).unwrap();
        prop_assert_eq!(block_deviation_tail(m * k, k, c * k as f64).unwrap(), base);
    }
}

#[test]
fn pmf_is_symmetric_and_normalized() {
    for m in [3u64, 64, 999] {
        let total: f64 = (0..=m).map(|k| pmf_half(m, k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for k in 0..=m {
            assert_eq!(pmf_half(m, k), pmf_half(m, m - k));
        }
    }
}

#[test]
fn anti_concentration_constant() {
    for n in 1..=600usize {
        for k in (1..=n).filter(|k| n % k == 0) {
            let c = ((k * n) as f64).sqrt();
            let p = block_deviation_tail(n, k, c).unwrap();
            assert!(p >= 0.1, "N={n} K={k}: {p}");
        }
    }
}

#[test]
fn prop2_instances_exceed_epsilon() {
    let mut checked = 0;
    for k in 1..=5usize {
        for m in (2..=400usize).step_by(2) {
            let n = k * m;
            for eps in prop2_valid_epsilons(n, k) {
                let p = prop2_threshold(&HorizonParams::new(n, k, eps).unwrap()).unwrap();
                assert!(p.valid);
                let tail = block_deviation_tail(n, k, p.threshold).unwrap();
                assert!(tail >= eps, "N={n} K={k} eps={eps}: {tail}");
                checked += 1;
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn monte_carlo_covers_block_tails() {
    let grid = [(12usize, 2usize, 2.0), (30, 3, 6.0), (64, 1, 4.0), (40, 4, -8.0), (100, 5, 20.0)];
    let mut outside = Vec::new();
    for (i, &(n, k, c)) in grid.iter().enumerate() {
        let exact = block_deviation_tail(n, k, c).unwrap();
        let sampler = BlockSampler::new(n, k).unwrap();
        let est = mc_tail(&sampler, c, Sided::Upper, 20_000, 1000 + i as u64).unwrap();
        if !est.contains(exact) {
            outside.push((n, k, c, exact, est));
        }
    }
    assert!(outside.is_empty(), "{outside:?}");
}
