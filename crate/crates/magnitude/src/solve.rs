//! Dense symmetric positive-definite factorization and solves.
//!
//! A hand-rolled row-major Cholesky is enough at the sizes this crate deals
//! with (a few thousand points) and gives direct access to the pivots,
//! which the magnitude solver uses for its positive-definiteness check and
//! its singularity diagnostics. All loops use fixed summation order, so
//! results are bit-identical across platforms and thread counts.

/// Lower-triangular Cholesky factor `L` with `A = L L^T`, stored row-major
/// in a full `n x n` buffer (upper triangle left as zeros).
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Vec<f64>,
    n: usize,
}

/// Factorization failure: the matrix is not numerically positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    /// Index of the first non-positive pivot.
    pub pivot_index: usize,
    /// Value of that pivot before the square root.
    pub pivot: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    for k in (4 * chunks)..a.len() {
        acc[0] += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// Factorizes a symmetric matrix given as a full row-major `n x n` buffer.
/// Only the lower triangle is read.
pub fn cholesky(a: &[f64], n: usize) -> Result<CholeskyFactor, NotPositiveDefinite> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        // Split so row i is mutable while rows < i stay immutable.
        let (done, current) = l.split_at_mut(i * n);
        let row_i = &mut current[..n];
        for j in 0..i {
            let row_j = &done[j * n..j * n + j];
            let s = a[i * n + j] - dot(&row_i[..j], row_j);
            row_i[j] = s / done[j * n + j];
        }
        let s = a[i * n + i] - dot(&row_i[..i], &row_i[..i]);
        if !(s > 0.0) || !s.is_finite() {
            return Err(NotPositiveDefinite { pivot_index: i, pivot: s });
        }
        row_i[i] = s.sqrt();
    }
    Ok(CholeskyFactor { l, n })
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest diagonal entry of `L` (square root of the smallest pivot).
    pub fn min_diag(&self) -> f64 {
        (0..self.n).map(|i| self.l[i * self.n + i]).fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b` by forward and back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let l = &self.l;
        // L y = b
        let mut y = vec![0.0f64; n];
        for i in 0..n {
            let s = b[i] - dot(&l[i * n..i * n + i], &y[..i]);
            y[i] = s / l[i * n + i];
        }
        // L^T x = y
        let mut x = y;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }
}

/// One-norm of a symmetric matrix (max absolute column sum, computed over
/// rows since the matrix is symmetric).
pub fn one_norm_symmetric(a: &[f64], n: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..n {
        let s: f64 = a[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Hager-style estimate of `||A^{-1}||_1` from a factorization of `A`.
///
/// Deterministic: starts from the uniform vector and runs at most five
/// refinement sweeps. Multiplied by `||A||_1` this gives the usual
/// condition-number estimate reported in solve diagnostics.
pub fn inverse_one_norm_estimate(factor: &CholeskyFactor) -> f64 {
    let n = factor.n();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0f64;
    for _ in 0..5 {
        let y = factor.solve(&x);
        est = y.iter().map(|v| v.abs()).sum();
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = factor.solve(&xi); // A symmetric, so A^{-T} = A^{-1}
        let (mut best_j, mut best_val) = (0usize, f64::NEG_INFINITY);
        for (j, v) in z.iter().enumerate() {
            if v.abs() > best_val {
                best_val = v.abs();
                best_j = j;
            }
        }
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if best_val <= zx {
            break;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        x[best_j] = 1.0;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    /// Gauss-Jordan inverse, an independent route used to validate solves.
    fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
        let mut m = vec![0.0f64; n * 2 * n];
        for i in 0..n {
            for j in 0..n {
                m[i * 2 * n + j] = a[i * n + j];
            }
            m[i * 2 * n + n + i] = 1.0;
        }
        for col in 0..n {
            let pivot_row = (col..n).max_by(|&r, &s| {
                m[r * 2 * n + col].abs().total_cmp(&m[s * 2 * n + col].abs())
            })?;
            if m[pivot_row * 2 * n + col] == 0.0 {
                return None;
            }
            for j in 0..2 * n {
                m.swap(col * 2 * n + j, pivot_row * 2 * n + j);
            }
            let p = m[col * 2 * n + col];
            for j in 0..2 * n {
                m[col * 2 * n + j] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = m[r * 2 * n + col];
                    for j in 0..2 * n {
                        m[r * 2 * n + j] -= f * m[col * 2 * n + j];
                    }
                }
            }
        }
        let mut inv = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                inv[i * n + j] = m[i * 2 * n + n + j];
            }
        }
        Some(inv)
    }

    fn random_spd(n: usize, rng: &mut StreamRng) -> Vec<f64> {
        // B^T B + n I is comfortably positive definite.
        let b: Vec<f64> = (0..n * n).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += b[k * n + i] * b[k * n + j];
                }
                a[i * n + j] = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        a
    }

    #[test]
    fn factor_and_solve_match_gauss_jordan_inverse() {
        let mut rng = StreamRng::new(21, 0);
        for &n in &[1usize, 2, 3, 5, 8, 13] {
            let a = random_spd(n, &mut rng);
            let f = cholesky(&a, n).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.uniform() * 4.0 - 2.0).collect();
            let x = f.solve(&b);
            let inv = invert(&a, n).unwrap();
            for i in 0..n {
                let xi: f64 = (0..n).map(|j| inv[i * n + j] * b[j]).sum();
                assert!((x[i] - xi).abs() < 1e-9, "n={n} i={i}: {} vs {xi}", x[i]);
            }
        }
    }

    #[test]
    fn identity_factor() {
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let f = cholesky(&a, 2).unwrap();
        assert_eq!(f.min_diag(), 1.0);
        assert_eq!(f.solve(&[3.0, -4.0]), vec![3.0, -4.0]);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = vec![1.0, 2.0, 2.0, 1.0]; // eigenvalues 3 and -1
        let err = cholesky(&a, 2).unwrap_err();
        assert_eq!(err.pivot_index, 1);
        assert!(err.pivot < 0.0);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(cholesky(&a, 2).is_err());
    }

    #[test]
    fn condition_estimate_close_for_diagonal_matrix() {
        // diag(1, 10, 100): kappa_1 = 100.
        let n = 3;
        let mut a = vec![0.0f64; 9];
        a[0] = 1.0;
        a[4] = 10.0;
        a[8] = 100.0;
        let f = cholesky(&a, n).unwrap();
        let cond = one_norm_symmetric(&a, n) * inverse_one_norm_estimate(&f);
        assert!((cond - 100.0).abs() / 100.0 < 1e-12, "cond {cond}");
    }

    #[test]
    fn condition_estimate_within_factor_of_truth_on_random_spd() {
        let mut rng = StreamRng::new(4, 0);
        for &n in &[4usize, 8, 16] {
            let a = random_spd(n, &mut rng);
            let f = cholesky(&a, n).unwrap();
            let est = one_norm_symmetric(&a, n) * inverse_one_norm_estimate(&f);
            let inv = invert(&a, n).unwrap();
            let truth = one_norm_symmetric(&a, n) * one_norm_symmetric(&inv, n);
            // Hager's estimator is a lower bound that is rarely off by much.
            assert!(est <= truth * (1.0 + 1e-10), "est {est} > truth {truth}");
            assert!(est >= truth / 10.0, "est {est} far below truth {truth}");
        }
    }
}
