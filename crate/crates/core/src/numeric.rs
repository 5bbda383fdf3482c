//! Small numerical building blocks shared by the other modules.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Relative tolerance for threshold events `S ≥ C`: values within
/// `1e-9·max(1, |C|)` below `C` count as reaching it.
pub const EVENT_TOLERANCE: f64 = 1e-9;

/// `true` iff `s ≥ c` up to [`EVENT_TOLERANCE`].
pub fn reaches(s: f64, c: f64) -> bool {
    s >= c - EVENT_TOLERANCE * c.abs().max(1.0)
}

/// Smallest integer `k` with `k ≥ x`, snapping `x` down onto an integer it
/// exceeds by less than [`EVENT_TOLERANCE`] (relative).
pub fn lattice_ceil(x: f64) -> f64 {
    (x - EVENT_TOLERANCE * x.abs().max(1.0)).ceil()
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Survival function of the standard Gaussian, `Φ̄(z) = P(G ≥ z)`.
///
/// Routed through `erfc`, which keeps full relative accuracy in the upper
/// tail (no cancellation against 1).
pub fn gaussian_survival(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Standard Gaussian density.
pub fn gaussian_density(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

// 8-point Gauss–Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre quadrature of `f` over `[lo, hi]`.
pub fn gauss_legendre_8<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// `∫_lo^hi exp(−a x²) dx` for `0 ≤ lo ≤ hi ≤ ∞` and `a > 0`.
///
/// Closed form through `erfc`; short intervals switch to quadrature because
/// the difference of two nearly equal `erfc` values loses digits.
pub fn gaussian_integral(a: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(a > 0.0 && lo >= 0.0 && hi >= lo);
    let s = a.sqrt();
    let scale = (PI / (4.0 * a)).sqrt();
    if hi.is_infinite() {
        return scale * erfc(s * lo);
    }
    if s * (hi - lo) < 0.05 {
        return gauss_legendre_8(|x| (-a * x * x).exp(), lo, hi);
    }
    scale * (erfc(s * lo) - erfc(s * hi))
}

/// Result of a bracketed golden-section search.
#[derive(Debug, Clone, Copy)]
pub struct GoldenMinimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section minimization of `f` on `[lo, hi]`, stopping once the
/// bracket width falls below `rel_tol · (|lo| + |hi|)` (or `abs_tol`).
pub fn golden_section<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> GoldenMinimum {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (hi - lo) > (rel_tol * (lo.abs() + hi.abs())).max(abs_tol) && iterations < 500 {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        GoldenMinimum { x: x1, value: f1, iterations }
    } else {
        GoldenMinimum { x: x2, value: f2, iterations }
    }
}
