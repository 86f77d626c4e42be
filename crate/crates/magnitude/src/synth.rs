//! Synthetic point clouds with known ground-truth dimension: uniform
//! segment and square samples, the middle-thirds Cantor set, and
//! symmetric alpha-stable random walks.

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// `n` i.i.d. uniform samples on [0, 1], embedded in R^1.
pub fn gen_segment(n: usize, seed: u64) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidInputs(format!("need n >= 2 samples, got {n}")));
    }
    let data: Vec<f64> = (0..n).map(|i| rng::uniform(seed, 0, i as u64)).collect();
    PointCloud::new(data, 1)
}

/// `n` i.i.d. uniform samples on the unit square.
pub fn gen_square(n: usize, seed: u64) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidInputs(format!("need n >= 2 samples, got {n}")));
    }
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n {
        // Stream per coordinate, counter per point.
        data.push(rng::uniform(seed, 0, i as u64));
        data.push(rng::uniform(seed, 1, i as u64));
    }
    PointCloud::new(data, 2)
}

/// All `2^depth` left endpoints of the depth-level middle-thirds Cantor
/// intervals, in ascending order. With `jitter > 0` each point is moved
/// uniformly within `jitter * 3^-depth` of its interval's left end
/// (`jitter <= 1` keeps every point inside its interval).
pub fn gen_cantor(depth: u32, seed: u64, jitter: f64) -> Result<PointCloud> {
    if !(1..=14).contains(&depth) {
        return Err(Error::InvalidInputs(format!("depth must be in 1..=14, got {depth}")));
    }
    if !(0.0..=1.0).contains(&jitter) {
        return Err(Error::InvalidInputs(format!("jitter must be in [0, 1], got {jitter}")));
    }
    let count = 1usize << depth;
    let interval = 3f64.powi(-(depth as i32));
    let mut data = Vec::with_capacity(count);
    for idx in 0..count {
        // Bits of idx select left (0) or right (2/3^level) thirds, most
        // significant bit = coarsest level, so output is ascending.
        let mut x = 0.0;
        for level in 1..=depth {
            let bit = (idx >> (depth - level)) & 1;
            if bit == 1 {
                x += 2.0 * 3f64.powi(-(level as i32));
            }
        }
        if jitter > 0.0 {
            x += rng::uniform(seed, 0, idx as u64) * jitter * interval;
        }
        data.push(x);
    }
    PointCloud::new(data, 1)
}

/// Parameters of a d-dimensional symmetric alpha-stable random walk.
#[derive(Debug, Clone)]
pub struct LevyConfig {
    /// Stability index in (0, 2]; 2 is Brownian motion.
    pub alpha: f64,
    /// Ambient dimension (>= 1).
    pub d: usize,
    /// Number of steps (>= 2); one position per step is returned.
    pub n_steps: usize,
    pub seed: u64,
    /// Scale multiplier on every increment.
    pub step_scale: f64,
}

impl LevyConfig {
    pub fn new(alpha: f64, d: usize, n_steps: usize, seed: u64) -> Self {
        Self { alpha, d, n_steps, seed, step_scale: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.d < 1 {
            return Err(Error::InvalidInputs("d must be >= 1".into()));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidInputs("n_steps must be >= 2".into()));
        }
        if !(self.step_scale > 0.0) || !self.step_scale.is_finite() {
            return Err(Error::InvalidInputs(format!(
                "step_scale must be positive, got {}",
                self.step_scale
            )));
        }
        Ok(())
    }
}

/// One standard symmetric alpha-stable draw by the Chambers-Mallows-Stuck
/// transform. `u` and `e` are independent uniforms in (0, 1).
#[inline]
pub fn stable_standard(alpha: f64, u: f64, e: f64) -> f64 {
    let angle = std::f64::consts::PI * (u - 0.5); // uniform on (-pi/2, pi/2)
    if (alpha - 1.0).abs() < 1e-12 {
        // Symmetric Cauchy.
        return angle.tan();
    }
    let exp = -e.ln(); // standard exponential
    let s = (alpha * angle).sin() / angle.cos().powf(1.0 / alpha);
    let tail = ((angle - alpha * angle).cos() / exp).powf((1.0 - alpha) / alpha);
    s * tail
}

/// Positions of the walk after each of `n_steps` increments. Per-step
/// increments are i.i.d. symmetric alpha-stable in each coordinate;
/// coordinate streams are independent, so generation parallelizes across
/// coordinates with bit-identical output.
pub fn gen_levy(config: &LevyConfig) -> Result<PointCloud> {
    config.validate()?;
    let (d, n) = (config.d, config.n_steps);
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); d];
    columns.par_iter_mut().enumerate().for_each(|(c, col)| {
        col.reserve(n);
        let mut level = 0.0f64;
        for k in 0..n {
            let u = rng::uniform(config.seed, c as u64, 2 * k as u64);
            let e = rng::uniform(config.seed, c as u64, 2 * k as u64 + 1);
            level += config.step_scale * stable_standard(config.alpha, u, e);
            col.push(level);
        }
    });
    let mut data = Vec::with_capacity(n * d);
    for k in 0..n {
        for col in &columns {
            data.push(col[k]);
        }
    }
    PointCloud::new(data, d)
}

/// Reference Gaussian walk sampler (Box-Muller), used to cross-check the
/// alpha = 2 branch of the stable sampler.
pub fn gen_gaussian_walk(d: usize, n_steps: usize, seed: u64, step_std: f64) -> Result<PointCloud> {
    if d < 1 || n_steps < 2 {
        return Err(Error::InvalidInputs("need d >= 1 and n_steps >= 2".into()));
    }
    let mut data = vec![0.0f64; n_steps * d];
    for c in 0..d {
        let mut rng = StreamRng::new(seed, c as u64);
        let mut level = 0.0;
        for k in 0..n_steps {
            level += step_std * rng.normal();
            data[k * d + c] = level;
        }
    }
    PointCloud::new(data, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_range_and_determinism() {
        let a = gen_segment(4, 5).unwrap();
        assert!(a.coords().iter().all(|&x| (0.0..=1.0).contains(&x)));
        let b = gen_segment(4, 5).unwrap();
        assert_eq!(a, b);
        let c = gen_segment(4, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn square_mean_near_center() {
        let n = 4000;
        let cloud = gen_square(n, 3).unwrap();
        let mut mean = [0.0f64; 2];
        for i in 0..n {
            mean[0] += cloud.point(i)[0];
            mean[1] += cloud.point(i)[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        let bound = 3.0 / (n as f64).sqrt();
        assert!((mean[0] - 0.5).abs() < bound, "mean x {}", mean[0]);
        assert!((mean[1] - 0.5).abs() < bound, "mean y {}", mean[1]);
    }

    #[test]
    fn cantor_first_levels() {
        let d1 = gen_cantor(1, 0, 0.0).unwrap();
        assert_eq!(d1.coords(), &[0.0, 2.0 / 3.0]);
        let d2 = gen_cantor(2, 0, 0.0).unwrap();
        assert_eq!(d2.coords(), &[0.0, 2.0 / 9.0, 2.0 / 3.0, 2.0 / 3.0 + 2.0 / 9.0]);
        assert_eq!(gen_cantor(11, 0, 0.0).unwrap().n(), 2048);
        assert!(gen_cantor(0, 0, 0.0).is_err());
        assert!(gen_cantor(15, 0, 0.0).is_err());
    }

    #[test]
    fn cantor_jitter_stays_inside_intervals() {
        let depth = 5;
        let clean = gen_cantor(depth, 9, 0.0).unwrap();
        let jittered = gen_cantor(depth, 9, 1.0).unwrap();
        let width = 3f64.powi(-(depth as i32));
        for i in 0..clean.n() {
            let delta = jittered.point(i)[0] - clean.point(i)[0];
            assert!((0.0..width).contains(&delta), "jitter {delta} outside [0, {width})");
        }
    }

    #[test]
    fn levy_determinism_and_validation() {
        let cfg = LevyConfig::new(1.5, 3, 100, 7);
        assert_eq!(gen_levy(&cfg).unwrap(), gen_levy(&cfg).unwrap());
        assert!(matches!(
            gen_levy(&LevyConfig::new(0.0, 3, 100, 7)),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            gen_levy(&LevyConfig::new(2.5, 3, 100, 7)),
            Err(Error::InvalidAlpha(_))
        ));
    }

    #[test]
    fn alpha_two_increment_variance_matches_gaussian_scale() {
        // alpha = 2 stable equals N(0, 2): per-coordinate increment sample
        // variance should be close to 2 * step_scale^2.
        let cfg = LevyConfig { alpha: 2.0, d: 1, n_steps: 100_000, seed: 21, step_scale: 0.5 };
        let cloud = gen_levy(&cfg).unwrap();
        let mut prev = 0.0;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for k in 0..cloud.n() {
            let x = cloud.point(k)[0];
            let inc = x - prev;
            prev = x;
            s1 += inc;
            s2 += inc * inc;
        }
        let n = cloud.n() as f64;
        let var = s2 / n - (s1 / n) * (s1 / n);
        let expect = 2.0 * cfg.step_scale * cfg.step_scale;
        assert!(
            (var - expect).abs() / expect < 0.10,
            "variance {var} vs expected {expect}"
        );
    }

    /// Two-sample Kolmogorov-Smirnov statistic.
    fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j) = (0usize, 0usize);
        let mut d = 0.0f64;
        while i < n && j < m {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let gap = (i as f64 / n as f64 - j as f64 / m as f64).abs();
            if gap > d {
                d = gap;
            }
        }
        d
    }

    #[test]
    fn cms_at_alpha_two_matches_reference_gaussian_in_distribution() {
        // Two-sample KS against an independent Box-Muller N(0, 2) sampler,
        // 10^4 draws each, 1% critical value c(0.01) * sqrt(2n/n^2) with
        // c(0.01) = 1.628. Require at least 19 of 20 seeded trials below.
        let n = 10_000usize;
        let crit = 1.628 * ((2.0 * n as f64) / (n as f64 * n as f64)).sqrt();
        let mut passes = 0;
        for trial in 0..20u64 {
            let stable: Vec<f64> = (0..n)
                .map(|k| {
                    let u = rng::uniform(1000 + trial, 0, 2 * k as u64);
                    let e = rng::uniform(1000 + trial, 0, 2 * k as u64 + 1);
                    stable_standard(2.0, u, e)
                })
                .collect();
            let mut gauss_rng = StreamRng::new(5000 + trial, 1);
            let gauss: Vec<f64> =
                (0..n).map(|_| 2f64.sqrt() * gauss_rng.normal()).collect();
            if ks_statistic(stable, gauss) < crit {
                passes += 1;
            }
        }
        assert!(passes >= 19, "only {passes}/20 KS trials below the 1% critical value");
    }

    #[test]
    fn heavier_tails_for_smaller_alpha() {
        // Fraction of |increment| above a fixed large quantile grows as
        // alpha decreases; average over 10 seeds.
        let q = 5.0;
        let n = 20_000usize;
        let mut fractions = Vec::new();
        for &alpha in &[1.2f64, 1.6, 2.0] {
            let mut total = 0.0;
            for seed in 0..10u64 {
                let exceed = (0..n)
                    .filter(|&k| {
                        let u = rng::uniform(seed, 9, 2 * k as u64);
                        let e = rng::uniform(seed, 9, 2 * k as u64 + 1);
                        stable_standard(alpha, u, e).abs() > q
                    })
                    .count();
                total += exceed as f64 / n as f64;
            }
            fractions.push(total / 10.0);
        }
        assert!(
            fractions[0] > fractions[1] && fractions[1] > fractions[2],
            "tail fractions not decreasing in alpha: {fractions:?}"
        );
    }
}
