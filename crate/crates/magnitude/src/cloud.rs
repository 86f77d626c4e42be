//! Point clouds and pairwise Euclidean distances.
//!
//! A [`PointCloud`] is an immutable `n x d` matrix of finite coordinates; a
//! [`DistanceMatrix`] is the full dense symmetric matrix of pairwise L2
//! distances. Everything downstream (similarity matrices, magnitude,
//! dimension estimators) consumes these two types.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// `n` points in `R^d`, stored row-major.
///
/// Invariants enforced at construction: `n >= 1`, `d >= 1`, every
/// coordinate finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates. `data.len()` must be a
    /// non-zero multiple of `d`.
    pub fn new(data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::DegenerateInput("ambient dimension must be >= 1".into()));
        }
        if data.is_empty() || data.len() % d != 0 {
            return Err(Error::DegenerateInput(format!(
                "coordinate buffer of length {} is not a non-zero multiple of d = {}",
                data.len(),
                d
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "non-finite coordinate {} at flat index {} (point {}, coordinate {})",
                data[pos],
                pos,
                pos / d,
                pos % d
            )));
        }
        let n = data.len() / d;
        Ok(Self { data, n, d })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        if d == 0 {
            return Err(Error::DegenerateInput("need at least one non-empty point".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DegenerateInput(
                "all points must have the same number of coordinates".into(),
            ));
        }
        Self::new(rows.concat(), d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.data
    }

    /// New cloud holding the selected points, in index order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::DegenerateInput("empty subset".into()));
        }
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        PointCloud::new(data, self.d)
    }
}

/// Full dense symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: Vec<f64>,
    n: usize,
}

impl DistanceMatrix {
    pub(crate) fn from_entries_unchecked(entries: Vec<f64>, n: usize) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self { entries, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Largest entry (the diameter of the underlying cloud).
    pub fn max(&self) -> f64 {
        self.entries.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest strictly positive entry, `None` if all points coincide.
    pub fn min_positive(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for &e in &self.entries {
            if e > 0.0 && e < best {
                best = e;
            }
        }
        if best.is_finite() {
            Some(best)
        } else {
            None
        }
    }

    /// Median of the off-diagonal entries (each unordered pair counted once).
    ///
    /// Returns 0 for a single point. Ties inside `select_nth_unstable` do not
    /// affect the result, so this is deterministic.
    pub fn median_pairwise(&self) -> f64 {
        let n = self.n;
        if n < 2 {
            return 0.0;
        }
        let mut offdiag = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                offdiag.push(self.get(i, j));
            }
        }
        let m = offdiag.len();
        let (_, mid, _) = offdiag.select_nth_unstable_by(m / 2, |a, b| a.total_cmp(b));
        let hi = *mid;
        if m % 2 == 1 {
            hi
        } else {
            let (_, lo, _) = offdiag.select_nth_unstable_by(m / 2 - 1, |a, b| a.total_cmp(b));
            0.5 * (*lo + hi)
        }
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators: fixed summation order (deterministic
    // across platforms and thread counts) while breaking the add-latency
    // dependency chain.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        for lane in 0..4 {
            let diff = a[k + lane] - b[k + lane];
            acc[lane] += diff * diff;
        }
    }
    for k in (4 * chunks)..a.len() {
        let diff = a[k] - b[k];
        acc[0] += diff * diff;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Pairwise Euclidean distances of a cloud.
///
/// Each unordered pair is computed exactly once and mirrored, so the result
/// is symmetric by construction and independent of parallelism.
pub fn pairwise_distances(cloud: &PointCloud) -> Result<DistanceMatrix> {
    if let Some(bad) = cloud.coords().iter().find(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput(format!("non-finite coordinate {bad}")));
    }
    let n = cloud.n();
    let mut entries = vec![0.0f64; n * n];

    // Fill the strict lower triangle in parallel; each row is a disjoint
    // mutable chunk so no entry is written twice.
    entries
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| {
            let pi = cloud.point(i);
            for (j, slot) in row.iter_mut().enumerate().take(i) {
                *slot = squared_distance(pi, cloud.point(j)).sqrt();
            }
        });

    // Mirror into the upper triangle.
    for i in 0..n {
        for j in (i + 1)..n {
            entries[i * n + j] = entries[j * n + i];
        }
    }
    Ok(DistanceMatrix::from_entries_unchecked(entries, n))
}

/// Multiplies every distance by `t` (the scaled metric space).
pub fn scale_distances(dm: &DistanceMatrix, t: f64) -> Result<DistanceMatrix> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidScale(t));
    }
    let entries = dm.entries.iter().map(|&e| e * t).collect();
    Ok(DistanceMatrix::from_entries_unchecked(entries, dm.n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[&[f64]]) -> PointCloud {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        PointCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn one_dimensional_pair() {
        let dm = pairwise_distances(&cloud(&[&[0.0], &[3.0]])).unwrap();
        assert_eq!(dm.get(0, 1), 3.0);
        assert_eq!(dm.get(1, 0), 3.0);
        assert_eq!(dm.get(0, 0), 0.0);
    }

    #[test]
    fn three_four_five_triangle() {
        let dm = pairwise_distances(&cloud(&[&[0.0, 0.0], &[3.0, 0.0], &[0.0, 4.0]])).unwrap();
        assert_eq!(dm.get(0, 1), 3.0);
        assert_eq!(dm.get(0, 2), 4.0);
        assert_eq!(dm.get(1, 2), 5.0);
    }

    #[test]
    fn duplicate_points_have_zero_distance() {
        let dm = pairwise_distances(&cloud(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(dm.get(0, 1), 0.0);
        assert_eq!(dm.min_positive(), None);
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        assert!(matches!(
            PointCloud::new(vec![0.0, f64::NAN], 1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            PointCloud::new(vec![f64::INFINITY], 1),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn scaling_by_one_is_identity_and_zero_rejected() {
        let dm = pairwise_distances(&cloud(&[&[0.0], &[3.0]])).unwrap();
        let same = scale_distances(&dm, 1.0).unwrap();
        assert_eq!(same.entries(), dm.entries());
        let doubled = scale_distances(&dm, 2.0).unwrap();
        assert_eq!(doubled.get(0, 1), 6.0);
        assert!(matches!(scale_distances(&dm, 0.0), Err(Error::InvalidScale(_))));
        assert!(matches!(scale_distances(&dm, -1.0), Err(Error::InvalidScale(_))));
        assert!(matches!(
            scale_distances(&dm, f64::INFINITY),
            Err(Error::InvalidScale(_))
        ));
    }

    #[test]
    fn scaling_composes_multiplicatively() {
        let mut rng = crate::rng::StreamRng::new(7, 0);
        let data: Vec<f64> = (0..60).map(|_| rng.uniform() * 10.0 - 5.0).collect();
        let dm = pairwise_distances(&PointCloud::new(data, 3).unwrap()).unwrap();
        let ab = scale_distances(&scale_distances(&dm, 1.7).unwrap(), 2.3).unwrap();
        let direct = scale_distances(&dm, 1.7 * 2.3).unwrap();
        for (x, y) in ab.entries().iter().zip(direct.entries()) {
            let denom = x.abs().max(1e-300);
            assert!((x - y).abs() / denom <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn distance_matrix_invariants_on_random_clouds() {
        let mut rng = crate::rng::StreamRng::new(99, 0);
        for &(n, d) in &[(5usize, 2usize), (17, 4), (40, 3)] {
            let data: Vec<f64> = (0..n * d).map(|_| rng.uniform() * 4.0).collect();
            let c = PointCloud::new(data, d).unwrap();
            let dm = pairwise_distances(&c).unwrap();
            for i in 0..n {
                assert_eq!(dm.get(i, i), 0.0);
                for j in 0..n {
                    assert_eq!(dm.get(i, j), dm.get(j, i));
                    assert!(dm.get(i, j) >= 0.0 && dm.get(i, j).is_finite());
                }
            }
            // Triangle inequality on random triples, with a rounding slack.
            for _ in 0..200 {
                let (i, j, k) = (
                    rng.below(n as u64) as usize,
                    rng.below(n as u64) as usize,
                    rng.below(n as u64) as usize,
                );
                assert!(dm.get(i, j) <= dm.get(i, k) + dm.get(k, j) + 1e-12);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = crate::rng::StreamRng::new(3, 0);
        let data: Vec<f64> = (0..24).map(|_| rng.uniform()).collect();
        let c = PointCloud::new(data, 2).unwrap();
        let n = c.n();
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let permuted = c.subset(&perm).unwrap();
        let dm = pairwise_distances(&c).unwrap();
        let dmp = pairwise_distances(&permuted).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dmp.get(i, j), dm.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn median_pairwise_small_cases() {
        let dm = pairwise_distances(&cloud(&[&[0.0], &[1.0], &[3.0]])).unwrap();
        // Off-diagonal distances: 1, 2, 3 -> median 2.
        assert_eq!(dm.median_pairwise(), 2.0);
        let dm2 = pairwise_distances(&cloud(&[&[0.0], &[2.0]])).unwrap();
        assert_eq!(dm2.median_pairwise(), 2.0);
    }
}
