//! Intrinsic dimension estimators: magnitude-function slope, degree-0
//! persistence (MST subsampling regression), and an occupied-cell
//! box-counting estimate used as the independent check on the other two.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::cloud::{pairwise_distances, DistanceMatrix, PointCloud};
use crate::error::{Error, Result};
use crate::fit::{self, LogLogFit};
use crate::magnitude::{magnitude_function_dm, MagnitudeCurve};
use crate::mst::mst_alpha_lifetime;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionMethod {
    Magnitude,
    Ph0,
    Box,
}

impl std::fmt::Display for DimensionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DimensionMethod::Magnitude => write!(f, "magnitude"),
            DimensionMethod::Ph0 => write!(f, "ph0"),
            DimensionMethod::Box => write!(f, "box"),
        }
    }
}

/// One dimension estimate with its fit and free-form diagnostics.
#[derive(Debug, Clone)]
pub struct DimensionEstimate {
    pub value: f64,
    pub method: DimensionMethod,
    pub fit: Option<LogLogFit>,
    pub diagnostics: Vec<(String, String)>,
}

/// Magnitude dimension: OLS slope of `log Mag(tX)` vs `log t` over the
/// given interval of the evaluated grid. Needs at least 4 successful
/// samples inside the interval.
pub fn estimate_dim_mag(curve: &MagnitudeCurve, interval: (f64, f64)) -> Result<DimensionEstimate> {
    let (lo, hi) = interval;
    let ts: Vec<f64> = curve.samples.iter().map(|s| s.t).collect();
    let vals: Vec<f64> = curve.samples.iter().map(|s| s.magnitude).collect();
    let inside = ts.iter().filter(|&&t| t >= lo && t <= hi).count();
    if inside < 4 {
        return Err(Error::InsufficientPoints(format!(
            "{inside} successful samples inside [{lo}, {hi}]; need at least 4"
        )));
    }
    let fit = fit::fit_loglog(&ts, &vals, lo, hi)?;
    Ok(DimensionEstimate {
        value: fit.slope,
        method: DimensionMethod::Magnitude,
        fit: Some(fit),
        diagnostics: vec![
            ("n_points".into(), curve.n_points.to_string()),
            ("grid_samples".into(), curve.samples.len().to_string()),
        ],
    })
}

/// The window of at least `min_points` successful samples maximizing OLS
/// r-squared (ties: wider window, then smaller left endpoint). A
/// convenience heuristic; the fit interval can always be given manually.
pub fn auto_interval(curve: &MagnitudeCurve, min_points: usize) -> Result<(f64, f64)> {
    let ts: Vec<f64> = curve.samples.iter().map(|s| s.t).collect();
    let vals: Vec<f64> = curve.samples.iter().map(|s| s.magnitude).collect();
    fit::auto_interval(&ts, &vals, min_points)
}

/// Default grid for magnitude-dimension estimation: 64 log-spaced scales
/// on `[0.1 / median, 100 / median]` pairwise distance, so the growth
/// regime is covered whatever the data units are.
pub fn estimation_grid(dm: &DistanceMatrix) -> Result<Vec<f64>> {
    let median = dm.median_pairwise();
    if !(median > 0.0) {
        return Err(Error::DegenerateInput(
            "median pairwise distance is zero; cannot build an estimation grid".into(),
        ));
    }
    let t_star = 1.0 / median;
    Ok(crate::magnitude::log_spaced(0.1 * t_star, 100.0 * t_star, 64))
}

/// Re-export so all three estimators are reachable from one module.
pub use crate::mst::mst_alpha_lifetime as alpha_lifetime_sum;

/// Default subsample sizes for the PH0 estimator: 9 log-spaced sizes from
/// `max(32, n/20)` to `n`, deduplicated.
pub fn default_ph0_sizes(n: usize) -> Result<Vec<usize>> {
    let lo = 32usize.max(n / 20);
    if lo >= n {
        return Err(Error::InsufficientPoints(format!(
            "cloud of {n} points is too small for the default subsample sizes (need > {lo})"
        )));
    }
    let mut sizes: Vec<usize> = crate::magnitude::log_spaced(lo as f64, n as f64, 9)
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    sizes.dedup();
    Ok(sizes)
}

/// PH0 dimension by subsampling regression: for each size draw `reps`
/// random subsets, average `log E_alpha`, regress on `log size`; with
/// slope `m` the estimate is `alpha / (1 - m)`.
///
/// Subsets are seeded by `(seed, size index, rep index)`, so results are
/// independent of evaluation order and thread count.
pub fn estimate_dim_ph0(
    cloud: &PointCloud,
    alpha: f64,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<DimensionEstimate> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInputs(format!("alpha must be positive, got {alpha}")));
    }
    if reps == 0 {
        return Err(Error::InvalidInputs("reps must be >= 1".into()));
    }
    if sizes.len() < 2 {
        return Err(Error::InsufficientPoints(
            "need at least 2 subsample sizes for the regression".into(),
        ));
    }
    for (k, &s) in sizes.iter().enumerate() {
        if s < 2 {
            return Err(Error::InvalidInputs(format!("subsample size {s} < 2")));
        }
        if s > cloud.n() {
            return Err(Error::InvalidInputs(format!(
                "subsample size {s} exceeds cloud size {}",
                cloud.n()
            )));
        }
        if k > 0 && s <= sizes[k - 1] {
            return Err(Error::InvalidInputs("sizes must be strictly increasing".into()));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|k| (0..reps).map(move |r| (k, r)))
        .collect();
    let log_sums: Vec<Result<(usize, f64)>> = jobs
        .par_iter()
        .map(|&(k, r)| {
            let stream = (k * reps + r) as u64;
            let mut rng = StreamRng::new(seed, stream);
            let idx = rng.sample_indices(cloud.n(), sizes[k]);
            let sub = cloud.subset(&idx)?;
            let e = mst_alpha_lifetime(&sub, alpha)?;
            if !(e > 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "alpha-lifetime sum is zero for a subset of size {} (duplicated points?)",
                    sizes[k]
                )));
            }
            Ok((k, e.ln()))
        })
        .collect();

    let mut mean_log = vec![0.0f64; sizes.len()];
    for r in log_sums {
        let (k, v) = r?;
        mean_log[k] += v / reps as f64;
    }

    let xs: Vec<f64> = sizes.iter().map(|&s| (s as f64).ln()).collect();
    let fit = {
        // mean_log values may legitimately be negative; fit directly in
        // log space rather than through fit_loglog's positivity check.
        let m = xs.len() as f64;
        let mean_x = xs.iter().sum::<f64>() / m;
        let mean_y = mean_log.iter().sum::<f64>() / m;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&mean_log) {
            sxx += (x - mean_x) * (x - mean_x);
            sxy += (x - mean_x) * (y - mean_y);
            syy += (y - mean_y) * (y - mean_y);
        }
        let slope = sxy / sxx;
        let intercept = mean_y - slope * mean_x;
        let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
        LogLogFit {
            slope,
            intercept,
            r_squared,
            interval: (sizes[0] as f64, sizes[sizes.len() - 1] as f64),
        }
    };

    if fit.slope >= 1.0 {
        return Err(Error::DegenerateSlope { slope: fit.slope });
    }
    let value = alpha / (1.0 - fit.slope);

    let mut diagnostics = vec![
        ("alpha".into(), alpha.to_string()),
        ("reps".into(), reps.to_string()),
        ("seed".into(), seed.to_string()),
        (
            "sizes".into(),
            sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
        ),
        (
            "mean_log_e".into(),
            mean_log.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "),
        ),
    ];
    diagnostics.push(("slope".into(), fit.slope.to_string()));
    Ok(DimensionEstimate {
        value,
        method: DimensionMethod::Ph0,
        fit: Some(fit),
        diagnostics,
    })
}

/// Exact Euclidean diameter (largest pairwise distance).
fn diameter(cloud: &PointCloud) -> f64 {
    let n = cloud.n();
    let mut best = 0.0f64;
    for i in 0..n {
        let pi = cloud.point(i);
        for j in (i + 1)..n {
            let mut s = 0.0;
            for (a, b) in pi.iter().zip(cloud.point(j)) {
                let d = a - b;
                s += d * d;
            }
            best = best.max(s);
        }
    }
    best.sqrt()
}

/// Number of distinct axis-aligned grid cells of side `delta` (anchored at
/// the cloud's coordinate-wise minimum) containing at least one point.
pub fn occupied_cells(cloud: &PointCloud, delta: f64) -> usize {
    let d = cloud.dim();
    let mut mins = vec![f64::INFINITY; d];
    for i in 0..cloud.n() {
        for (m, &x) in mins.iter_mut().zip(cloud.point(i)) {
            if x < *m {
                *m = x;
            }
        }
    }
    let mut cells: HashSet<Vec<i64>> = HashSet::new();
    for i in 0..cloud.n() {
        let key: Vec<i64> = cloud
            .point(i)
            .iter()
            .zip(&mins)
            .map(|(&x, &m)| ((x - m) / delta).floor() as i64)
            .collect();
        cells.insert(key);
    }
    cells.len()
}

/// Default box-counting grid: `diameter / 2^j` for `j = 1..=8`.
pub fn default_delta_grid(cloud: &PointCloud) -> Result<Vec<f64>> {
    let diam = diameter(cloud);
    if !(diam > 0.0) {
        return Err(Error::DegenerateInput(
            "cloud has zero diameter; box-counting grid undefined".into(),
        ));
    }
    Ok((1..=8).map(|j| diam / f64::powi(2.0, j)).collect())
}

/// Box-counting (Minkowski) dimension: OLS slope of `log N(delta)` vs
/// `log(1/delta)`. `interval`, when given, is in `1/delta` units; when
/// absent the window is auto-selected (r-squared maximizing, at least 4
/// points) once the grid has 8 or more deltas.
pub fn estimate_dim_box(
    cloud: &PointCloud,
    delta_grid: &[f64],
    interval: Option<(f64, f64)>,
) -> Result<DimensionEstimate> {
    if delta_grid.len() < 2 {
        return Err(Error::InsufficientPoints(
            "need at least 2 deltas for the box-count regression".into(),
        ));
    }
    let diam = diameter(cloud);
    for (k, &delta) in delta_grid.iter().enumerate() {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInputs(format!("delta {delta} must be positive")));
        }
        if k > 0 && delta >= delta_grid[k - 1] {
            return Err(Error::InvalidInputs("deltas must be strictly decreasing".into()));
        }
        if diam > 0.0 && delta >= diam {
            return Err(Error::InvalidInputs(format!(
                "delta {delta} is not below the cloud diameter {diam}"
            )));
        }
    }

    let counts: Vec<usize> = delta_grid
        .par_iter()
        .map(|&delta| occupied_cells(cloud, delta))
        .collect();
    let inv_deltas: Vec<f64> = delta_grid.iter().map(|&d| 1.0 / d).collect();
    let ns: Vec<f64> = counts.iter().map(|&c| c as f64).collect();

    let (lo, hi) = match interval {
        Some(iv) => iv,
        None => {
            if inv_deltas.len() >= 8 {
                fit::auto_interval(&inv_deltas, &ns, 4)?
            } else {
                (inv_deltas[0], inv_deltas[inv_deltas.len() - 1])
            }
        }
    };
    let fit = fit::fit_loglog(&inv_deltas, &ns, lo, hi)?;
    let diagnostics = vec![
        (
            "deltas".into(),
            delta_grid.iter().map(|d| format!("{d:.6e}")).collect::<Vec<_>>().join(" "),
        ),
        (
            "counts".into(),
            counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "),
        ),
    ];
    Ok(DimensionEstimate {
        value: fit.slope,
        method: DimensionMethod::Box,
        fit: Some(fit),
        diagnostics,
    })
}

/// Shared knobs for [`compare_dims`].
#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub seed: u64,
    /// Lifetime exponent for the PH0 estimator.
    pub alpha: f64,
    pub reps: usize,
    /// Subsample sizes; default derives from the cloud size.
    pub sizes: Option<Vec<usize>>,
    /// Scale grid for the magnitude curve; default adapts to the median
    /// pairwise distance.
    pub mag_grid: Option<Vec<f64>>,
    pub delta_grid: Option<Vec<f64>>,
    pub min_points: usize,
}

impl CompareConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            alpha: 1.0,
            reps: 5,
            sizes: None,
            mag_grid: None,
            delta_grid: None,
            min_points: 8,
        }
    }
}

/// All three estimates side by side. Per-method failures are carried in
/// the report rather than aborting the comparison.
#[derive(Debug)]
pub struct DimComparison {
    pub magnitude: Result<DimensionEstimate>,
    pub ph0: Result<DimensionEstimate>,
    pub box_count: Result<DimensionEstimate>,
}

impl DimComparison {
    /// |dim_mag - dim_ph0| when both succeeded.
    pub fn mag_ph0_gap(&self) -> Option<f64> {
        match (&self.magnitude, &self.ph0) {
            (Ok(a), Ok(b)) => Some((a.value - b.value).abs()),
            _ => None,
        }
    }

    pub fn mag_box_gap(&self) -> Option<f64> {
        match (&self.magnitude, &self.box_count) {
            (Ok(a), Ok(b)) => Some((a.value - b.value).abs()),
            _ => None,
        }
    }
}

/// Magnitude-dimension estimate of a cloud with defaulted grid and
/// automatic interval selection.
pub fn estimate_dim_mag_cloud(
    cloud: &PointCloud,
    grid: Option<&[f64]>,
    min_points: usize,
) -> Result<DimensionEstimate> {
    let dm = pairwise_distances(cloud)?;
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = estimation_grid(&dm)?;
            &owned
        }
    };
    let curve = magnitude_function_dm(&dm, grid)?;
    let interval = auto_interval(&curve, min_points)?;
    estimate_dim_mag(&curve, interval)
}

/// Runs the three estimators with shared defaults and reports them
/// together with pairwise gaps.
pub fn compare_dims(cloud: &PointCloud, config: &CompareConfig) -> DimComparison {
    let magnitude =
        estimate_dim_mag_cloud(cloud, config.mag_grid.as_deref(), config.min_points);
    let ph0 = (|| {
        let sizes = match &config.sizes {
            Some(s) => s.clone(),
            None => default_ph0_sizes(cloud.n())?,
        };
        estimate_dim_ph0(cloud, config.alpha, &sizes, config.reps, config.seed)
    })();
    let box_count = (|| {
        let grid = match &config.delta_grid {
            Some(g) => g.clone(),
            None => default_delta_grid(cloud)?,
        };
        estimate_dim_box(cloud, &grid, None)
    })();
    DimComparison { magnitude, ph0, box_count }
}
