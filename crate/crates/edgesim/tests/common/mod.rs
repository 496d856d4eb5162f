//! Independent brute-force verifiers shared by the integration and
//! acceptance suites. Nothing here calls into the implementation paths it
//! checks: the CDF is recomputed by quadrature, convolution by Monte Carlo,
//! windowed statistics by a two-pass formula, and micro-scenario outcomes by
//! a simulation-free FCFS recurrence.

pub mod replay;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use edgesim::stats::NormalDist;

/// Standard normal density.
fn phi(t: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = phi(lm);
    let frm = phi(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if (left + right - whole).abs() <= 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_step(a, m, fa, flm, fm, left, eps / 2.0)
            + adaptive_step(m, b, fm, frm, fb, right, eps / 2.0)
    }
}

/// Adaptive-Simpson integral of the standard normal density over [a, b].
fn integrate_phi(a: f64, b: f64, eps: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (phi(a), phi(m), phi(b));
    adaptive_step(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), eps)
}

/// Quadrature reference for the standard normal CDF: integrates the density
/// on (-8, z]. The mass below -8 is ~6.2e-16, far inside the 1e-12 budget.
pub fn quadrature_cdf(z: f64) -> f64 {
    if z <= -8.0 {
        return 0.0;
    }
    integrate_phi(-8.0, z.min(8.0), 1e-13)
}

/// Quadrature CDF over an ascending grid, integrating segment by segment so
/// large grids stay cheap.
pub fn quadrature_cdf_grid(points: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    let mut prev = -8.0;
    for &z in points {
        assert!(z >= prev, "grid must ascend");
        let z_cl = z.clamp(-8.0, 8.0);
        if z_cl > prev {
            acc += integrate_phi(prev, z_cl, 1e-13 / points.len() as f64 * 16.0);
            prev = z_cl;
        }
        out.push(if z <= -8.0 { 0.0 } else { acc });
    }
    out
}

/// Monte-Carlo estimate of the distribution of X + Y for independent
/// normals: returns (sample mean, sample stddev) of `n` summed draws.
/// Accumulates raw sums rather than reusing the streaming accumulator under
/// test.
pub fn mc_convolution(a: NormalDist, b: NormalDist, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let x = a.mean + a.stddev * z1 + b.mean + b.stddev * z2;
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / n as f64;
    let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
    (mean, var.max(0.0).sqrt())
}

/// Two-pass mean and sample stddev.
pub fn two_pass_stats(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Uniform draw helper for randomized acceptance instances.
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}
