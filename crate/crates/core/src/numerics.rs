//! Small numerical helpers shared across modules.

use num_complex::Complex64;

/// Shannon entropy in nats with the `0 ln 0 = 0` convention.
pub(crate) fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// `ln n!` by direct summation for small n, Stirling series otherwise.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    if n < 32 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        let x = (n + 1) as f64;
        // ln Γ(x), Stirling with four correction terms; error < 1e-15 for x > 32
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
            + 1.0 / (1260.0 * x.powi(5))
            - 1.0 / (1680.0 * x.powi(7))
    }
}

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Exact binomial coefficient as f64 (valid for n ≤ 60 without overflow).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_69,
    0.222_381_034_453_374_34,
    0.313_706_645_877_887_05,
    0.362_683_783_378_361_77,
    0.362_683_783_378_361_77,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

/// Composite 8-point Gauss–Legendre nodes and weights on `[a, b]` with `panels` panels.
pub(crate) fn gauss_legendre_composite(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            out.push((mid + 0.5 * width * x, 0.5 * width * w));
        }
    }
    out
}

/// `∫ φ^r e^{ikφ} dφ` over `[center − half, center + half]` for `r ∈ {0, 1, 2}`,
/// returned as `[J0, J1, J2]`.
///
/// Expands about the centre so that narrow intervals keep full relative precision.
pub(crate) fn interval_moments(center: f64, half: f64, k: i64) -> [Complex64; 3] {
    let kf = k as f64;
    let x = kf * half;
    // t-moments ∫_{−w}^{w} t^j e^{ikt} dt = 2w^{j+1} g_j(x)
    let (g0, g1, g2) = if x.abs() < 0.05 {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0,
            x * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45360.0),
            1.0 / 3.0 - x2 / 10.0 + x2 * x2 / 168.0 - x2 * x2 * x2 / 6480.0,
        )
    } else {
        let (s, c) = x.sin_cos();
        (
            s / x,
            (s - x * c) / (x * x),
            (x * x * s + 2.0 * x * c - 2.0 * s) / (x * x * x),
        )
    };
    let t0 = Complex64::new(2.0 * half * g0, 0.0);
    let t1 = Complex64::new(0.0, 2.0 * half * half * g1);
    let t2 = Complex64::new(2.0 * half * half * half * g2, 0.0);
    let phase = Complex64::from_polar(1.0, kf * center);
    [
        phase * t0,
        phase * (t0 * center + t1),
        phase * (t0 * (center * center) + t1 * (2.0 * center) + t2),
    ]
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
