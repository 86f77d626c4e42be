//! Magnitude of a finite metric space.
//!
//! The similarity matrix of a distance matrix `d` is `zeta[i][j] =
//! exp(-d[i][j])`. Magnitude is the total mass of the weight vector `w`
//! solving `zeta w = 1`; sampling it over a grid of scale factors gives the
//! magnitude function. For point sets in Euclidean space `zeta` is
//! symmetric positive definite, so the solve goes through Cholesky rather
//! than an explicit inverse.

use rayon::prelude::*;

use crate::cloud::{pairwise_distances, scale_distances, DistanceMatrix, PointCloud};
use crate::error::{Error, Result};
use crate::solve::{cholesky, inverse_one_norm_estimate, one_norm_symmetric, CholeskyFactor};

/// Condition estimates above this are flagged as ill-conditioned (a
/// warning in diagnostics, not a failure).
pub const ILL_CONDITIONED_THRESHOLD: f64 = 1e12;

/// Entrywise `exp(-d)` of a distance matrix. Dimensionless, symmetric,
/// entries in (0, 1], diagonal exactly 1.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    entries: Vec<f64>,
    n: usize,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Builds the similarity matrix of a distance matrix.
pub fn similarity(dm: &DistanceMatrix) -> SimilarityMatrix {
    let n = dm.n();
    let entries = dm.entries().iter().map(|&d| (-d).exp()).collect();
    SimilarityMatrix { entries, n }
}

/// The weight vector solving `zeta w = 1`; its sum is the magnitude.
#[derive(Debug, Clone)]
pub struct MagnitudeWeights {
    pub weights: Vec<f64>,
    /// `max_i |(zeta w - 1)_i|`, measured after the solve.
    pub residual_inf_norm: f64,
}

/// Numerical context of one magnitude solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveDiagnostics {
    /// One-norm condition estimate of the similarity matrix.
    pub condition_estimate: f64,
    /// True if the plain factorization failed and diagonal jitter was added.
    pub jittered: bool,
    /// True if the condition estimate exceeds [`ILL_CONDITIONED_THRESHOLD`].
    pub ill_conditioned: bool,
    /// Smallest pivot of the factorization (before the square root).
    pub min_pivot: f64,
}

#[derive(Debug, Clone)]
pub struct MagnitudeResult {
    pub weights: MagnitudeWeights,
    pub value: f64,
    pub diagnostics: SolveDiagnostics,
}

fn factor_with_jitter(
    sim: &SimilarityMatrix,
) -> Result<(CholeskyFactor, bool, Vec<f64>)> {
    let n = sim.n();
    match cholesky(sim.entries(), n) {
        Ok(f) => Ok((f, false, sim.entries().to_vec())),
        Err(first) => {
            // Retry once with diagonal jitter before giving up; jittered
            // results are flagged in diagnostics.
            let mut jittered = sim.entries().to_vec();
            let eps = 1e-12 * n as f64;
            for i in 0..n {
                jittered[i * n + i] += eps;
            }
            match cholesky(&jittered, n) {
                Ok(f) => Ok((f, true, jittered)),
                Err(_) => Err(Error::NumericallySingular(format!(
                    "Cholesky pivot {} at index {} (n = {}). Identical rows come from \
                     duplicated points; deduplicate the cloud before computing magnitude",
                    first.pivot, first.pivot_index, n
                ))),
            }
        }
    }
}

/// Magnitude of the space with the given similarity matrix.
///
/// Solves `zeta w = 1` through an SPD factorization (retrying once with
/// `1e-12 * n` diagonal jitter) and reports the weight vector, the
/// magnitude `sum(w)`, and solve diagnostics. Fails with
/// [`Error::NumericallySingular`] when the matrix cannot be factorized,
/// which is the inevitable outcome for duplicated points.
pub fn magnitude(sim: &SimilarityMatrix) -> Result<MagnitudeResult> {
    let n = sim.n();
    // Unit off-diagonal similarity means distance zero: identical rows, an
    // exactly singular matrix that jitter must not paper over.
    for i in 0..n {
        for j in (i + 1)..n {
            if sim.get(i, j) >= 1.0 {
                return Err(Error::NumericallySingular(format!(
                    "points {i} and {j} coincide (distance 0), so the similarity matrix has \
                     identical rows; deduplicate the cloud before computing magnitude"
                )));
            }
        }
    }
    let (factor, jittered, matrix) = factor_with_jitter(sim)?;
    let ones = vec![1.0f64; n];
    let weights = factor.solve(&ones);

    // Residual against the matrix actually factorized.
    let mut residual_inf_norm = 0.0f64;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += matrix[i * n + j] * weights[j];
        }
        residual_inf_norm = residual_inf_norm.max((acc - 1.0).abs());
    }

    let value: f64 = weights.iter().sum();
    let condition_estimate = one_norm_symmetric(&matrix, n) * inverse_one_norm_estimate(&factor);
    let min_diag = factor.min_diag();
    let diagnostics = SolveDiagnostics {
        condition_estimate,
        jittered,
        ill_conditioned: condition_estimate > ILL_CONDITIONED_THRESHOLD,
        min_pivot: min_diag * min_diag,
    };
    Ok(MagnitudeResult {
        weights: MagnitudeWeights { weights, residual_inf_norm },
        value,
        diagnostics,
    })
}

/// One evaluated point of the magnitude function.
#[derive(Debug, Clone, Copy)]
pub struct CurveSample {
    pub t: f64,
    pub magnitude: f64,
    pub condition_estimate: f64,
    pub jittered: bool,
}

/// A scale whose solve failed, with the reason.
#[derive(Debug, Clone)]
pub struct CurveFailure {
    pub t: f64,
    pub reason: String,
}

/// The sampled magnitude function `t -> Mag(tX)`.
#[derive(Debug, Clone)]
pub struct MagnitudeCurve {
    /// Successful evaluations, t strictly increasing.
    pub samples: Vec<CurveSample>,
    /// Cardinality of the underlying space.
    pub n_points: usize,
    /// Scales omitted from `samples` because the solve failed.
    pub failures: Vec<CurveFailure>,
}

impl MagnitudeCurve {
    pub fn t_min(&self) -> f64 {
        self.samples.first().map(|s| s.t).unwrap_or(f64::NAN)
    }

    pub fn t_max(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(f64::NAN)
    }

    /// Magnitude at the sampled scale nearest to `t` in log-space.
    /// `t` must lie within the sampled range; ties pick the smaller scale.
    pub fn magnitude_near(&self, t: f64) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::EmptyCurve);
        }
        let (lo, hi) = (self.t_min(), self.t_max());
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let lt = t.ln();
        let mut best = &self.samples[0];
        let mut best_gap = (best.t.ln() - lt).abs();
        for s in &self.samples[1..] {
            let gap = (s.t.ln() - lt).abs();
            if gap < best_gap {
                best = s;
                best_gap = gap;
            }
        }
        Ok(best.magnitude)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInputs("empty scale grid".into()));
    }
    for (k, &t) in grid.iter().enumerate() {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidScale(t));
        }
        if k > 0 && t <= grid[k - 1] {
            return Err(Error::InvalidInputs(format!(
                "scale grid must be strictly increasing; grid[{}] = {} after {}",
                k,
                t,
                grid[k - 1]
            )));
        }
    }
    Ok(())
}

/// Samples the magnitude function of a distance matrix on a scale grid.
///
/// Grid points are independent solves and run in parallel; per-scale
/// results are identical regardless of thread count. Failed scales are
/// omitted from `samples` and reported in `failures`; if every scale
/// fails the whole call fails with [`Error::EmptyCurve`].
pub fn magnitude_function_dm(dm: &DistanceMatrix, grid: &[f64]) -> Result<MagnitudeCurve> {
    validate_grid(grid)?;
    let evaluated: Vec<(f64, Result<MagnitudeResult>)> = grid
        .par_iter()
        .map(|&t| {
            let r = scale_distances(dm, t).and_then(|s| magnitude(&similarity(&s)));
            (t, r)
        })
        .collect();

    let mut samples = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (t, r) in evaluated {
        match r {
            Ok(m) => samples.push(CurveSample {
                t,
                magnitude: m.value,
                condition_estimate: m.diagnostics.condition_estimate,
                jittered: m.diagnostics.jittered,
            }),
            Err(e) => failures.push(CurveFailure { t, reason: e.to_string() }),
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(MagnitudeCurve { samples, n_points: dm.n(), failures })
}

/// Samples the magnitude function of a point cloud on a scale grid.
pub fn magnitude_function(cloud: &PointCloud, grid: &[f64]) -> Result<MagnitudeCurve> {
    let dm = pairwise_distances(cloud)?;
    magnitude_function_dm(&dm, grid)
}

/// `k` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && k >= 2, "log_spaced({lo}, {hi}, {k})");
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == k - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect()
}

/// Default curve grid: 64 log-spaced scales on [0.01, 40]. The upper end
/// matches the plotting range used for trajectory analysis; the lower end
/// stays strictly positive because the magnitude function is only defined
/// there.
pub fn default_curve_grid() -> Vec<f64> {
    log_spaced(0.01, 40.0, 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::pairwise_distances;
    use crate::rng::StreamRng;

    fn two_point_cloud(d: f64) -> PointCloud {
        PointCloud::new(vec![0.0, d], 1).unwrap()
    }

    /// Closed form for the 2-point space at separation d.
    fn two_point_magnitude(d: f64) -> f64 {
        2.0 / (1.0 + (-d).exp())
    }

    #[test]
    fn similarity_basics() {
        let dm = pairwise_distances(&two_point_cloud(2f64.ln())).unwrap();
        let s = similarity(&dm);
        assert_eq!(s.get(0, 0), 1.0);
        assert_eq!(s.get(1, 1), 1.0);
        assert!((s.get(0, 1) - 0.5).abs() < 1e-15);
        let zero = pairwise_distances(&PointCloud::new(vec![1.0, 1.0], 1).unwrap()).unwrap();
        assert_eq!(similarity(&zero).get(0, 1), 1.0);
    }

    #[test]
    fn single_point_has_magnitude_one() {
        let dm = pairwise_distances(&PointCloud::new(vec![5.0], 1).unwrap()).unwrap();
        let m = magnitude(&similarity(&dm)).unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.weights.weights, vec![1.0]);
    }

    #[test]
    fn two_point_closed_form() {
        for &d in &[0.1, 5.0, 3f64.ln()] {
            let dm = pairwise_distances(&two_point_cloud(d)).unwrap();
            let m = magnitude(&similarity(&dm)).unwrap();
            assert!(
                (m.value - two_point_magnitude(d)).abs() < 1e-12,
                "d={d}: {} vs {}",
                m.value,
                two_point_magnitude(d)
            );
        }
        // Frozen values: d = 5 and d = ln 3.
        let m5 = magnitude(&similarity(&pairwise_distances(&two_point_cloud(5.0)).unwrap()))
            .unwrap();
        assert!((m5.value - 1.986_614_298_151_430_3).abs() < 1e-12);
        let mln3 =
            magnitude(&similarity(&pairwise_distances(&two_point_cloud(3f64.ln())).unwrap()))
                .unwrap();
        assert!((mln3.value - 1.5).abs() < 1e-12);
    }

    /// Independent 3x3 inverse via the adjugate; sums all entries of
    /// `zeta^{-1}` directly.
    fn magnitude_3x3_by_adjugate(d01: f64, d02: f64, d12: f64) -> f64 {
        let z01 = (-d01).exp();
        let z02 = (-d02).exp();
        let z12 = (-d12).exp();
        let a = [[1.0, z01, z02], [z01, 1.0, z12], [z02, z12, 1.0]];
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        let mut total = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut sub = [0.0f64; 4];
                let mut k = 0;
                for r in 0..3 {
                    if r == i {
                        continue;
                    }
                    for c in 0..3 {
                        if c == j {
                            continue;
                        }
                        sub[k] = a[r][c];
                        k += 1;
                    }
                }
                let minor = sub[0] * sub[3] - sub[1] * sub[2];
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                // (zeta^{-1})[j][i]; symmetric, so the transpose is harmless.
                total += sign * minor / det;
            }
        }
        total
    }

    #[test]
    fn isosceles_three_point_space_matches_adjugate_inverse() {
        // Isosceles triangle: distance t between the base pair, 1000 t
        // from the apex to each. Apex at the origin, base centered on the
        // x-axis.
        for &t in &[0.0005f64, 0.01, 0.1] {
            let (near, far) = (t, 1000.0 * t);
            let half = near / 2.0;
            let h = (far * far - half * half).sqrt();
            let cloud =
                PointCloud::new(vec![0.0, 0.0, h, half, h, -half], 2).unwrap();
            let dm = pairwise_distances(&cloud).unwrap();
            assert!((dm.get(1, 2) - near).abs() < 1e-12 * far.max(1.0));
            assert!((dm.get(0, 1) - far).abs() < 1e-9 * far.max(1.0));
            let m = magnitude(&similarity(&dm)).unwrap();
            let oracle = magnitude_3x3_by_adjugate(dm.get(0, 1), dm.get(0, 2), dm.get(1, 2));
            assert!(
                (m.value - oracle).abs() < 1e-9,
                "t={t}: solve {} vs adjugate {oracle}",
                m.value
            );
        }
    }

    #[test]
    fn duplicated_points_are_numerically_singular() {
        let dm = pairwise_distances(&PointCloud::new(vec![1.0, 1.0, 1.0, 1.0], 2).unwrap())
            .unwrap();
        let err = magnitude(&similarity(&dm)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dedup"), "message should instruct deduplication: {msg}");
    }

    #[test]
    fn weights_residual_within_bound() {
        let mut rng = StreamRng::new(13, 0);
        for &n in &[4usize, 16, 64] {
            let data: Vec<f64> = (0..n * 3).map(|_| rng.uniform() * 2.0).collect();
            let dm = pairwise_distances(&PointCloud::new(data, 3).unwrap()).unwrap();
            let m = magnitude(&similarity(&dm)).unwrap();
            assert!(
                m.weights.residual_inf_norm <= 1e-8 * n as f64,
                "residual {} for n={n}",
                m.weights.residual_inf_norm
            );
            let sum: f64 = m.weights.weights.iter().sum();
            assert_eq!(sum, m.value);
            assert!(m.value > 0.0);
            assert!(m.diagnostics.min_pivot > 0.0);
        }
    }

    #[test]
    fn curve_on_two_point_space_matches_closed_form_per_scale() {
        let cloud = two_point_cloud(1.0);
        let curve = magnitude_function(&cloud, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(curve.samples.len(), 3);
        assert_eq!(curve.n_points, 2);
        for s in &curve.samples {
            let expect = two_point_magnitude(s.t);
            assert!((s.magnitude - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn three_point_curve_limits() {
        // Isosceles space at unit base scale: near = 1, far = 1000.
        let half = 0.5;
        let h = (1000.0f64 * 1000.0 - half * half).sqrt();
        let cloud = PointCloud::new(vec![0.0, 0.0, h, half, h, -half], 2).unwrap();
        let small = magnitude_function(&cloud, &[0.0001]).unwrap();
        assert!(
            (small.samples[0].magnitude - 1.0).abs() < 0.2,
            "t -> 0 magnitude {}",
            small.samples[0].magnitude
        );
        let large = magnitude_function(&cloud, &[50.0]).unwrap();
        assert!(
            (large.samples[0].magnitude - 3.0).abs() < 1e-3,
            "large-t magnitude {}",
            large.samples[0].magnitude
        );
    }

    #[test]
    fn failed_scales_are_omitted_not_fatal() {
        // Extremely small scales on a larger cloud drive zeta to the
        // all-ones matrix; those scales should fail or jitter, while the
        // rest of the curve survives.
        let mut rng = StreamRng::new(77, 0);
        let data: Vec<f64> = (0..200 * 2).map(|_| rng.uniform()).collect();
        let cloud = PointCloud::new(data, 2).unwrap();
        let grid = [1e-13, 1e-12, 0.5, 1.0, 2.0];
        let curve = magnitude_function(&cloud, &grid).unwrap();
        assert!(curve.samples.len() + curve.failures.len() == grid.len());
        assert!(curve.samples.iter().any(|s| s.t >= 0.5));
    }

    #[test]
    fn grid_validation() {
        let cloud = two_point_cloud(1.0);
        assert!(matches!(
            magnitude_function(&cloud, &[]),
            Err(Error::InvalidInputs(_))
        ));
        assert!(matches!(
            magnitude_function(&cloud, &[1.0, 1.0]),
            Err(Error::InvalidInputs(_))
        ));
        assert!(matches!(
            magnitude_function(&cloud, &[0.0, 1.0]),
            Err(Error::InvalidScale(_))
        ));
    }

    #[test]
    fn inclusion_monotonicity_on_random_clouds() {
        let mut rng = StreamRng::new(31, 0);
        for trial in 0..10 {
            let n = 12 + (trial % 4) * 7;
            let data: Vec<f64> = (0..n * 2).map(|_| rng.uniform() * 3.0).collect();
            let cloud = PointCloud::new(data, 2).unwrap();
            let k = 3 + rng.below((n - 3) as u64) as usize;
            let idx = rng.sample_indices(n, k);
            let sub = cloud.subset(&idx).unwrap();
            let full = magnitude(&similarity(&pairwise_distances(&cloud).unwrap())).unwrap();
            let part = magnitude(&similarity(&pairwise_distances(&sub).unwrap())).unwrap();
            assert!(
                part.value <= full.value + 1e-9,
                "Mag(subset) {} > Mag(full) {}",
                part.value,
                full.value
            );
        }
    }

    #[test]
    fn magnitude_near_uses_log_distance_and_checks_range() {
        let cloud = two_point_cloud(1.0);
        let curve = magnitude_function(&cloud, &[1.0, 10.0, 100.0]).unwrap();
        // 3.0 is nearer to 1.0 in log-space (ratio 3.0 vs 3.33)...
        let v = curve.magnitude_near(3.0).unwrap();
        assert_eq!(v, curve.samples[0].magnitude);
        // ...while 40.0 is nearer to 100.0 (ratio 2.5 vs 4.0).
        let v = curve.magnitude_near(40.0).unwrap();
        assert_eq!(v, curve.samples[2].magnitude);
        assert!(matches!(curve.magnitude_near(0.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn log_spaced_grid_endpoints_exact() {
        let g = log_spaced(0.01, 40.0, 64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[63], 40.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
