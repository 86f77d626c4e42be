//! Euclidean minimum spanning tree via Kruskal on the full edge set.
//!
//! Degree-0 Vietoris-Rips persistence of a finite point set consists of
//! bars born at 0 that die at the merge radii of single-linkage
//! clustering, which are exactly the MST edge lengths (the one infinite
//! bar is dropped). The alpha-lifetime sum therefore reduces to the MST
//! alpha-weight, with no persistence machinery needed.

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        // Path halving.
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns false if x and y were already connected.
    pub(crate) fn union(&mut self, x: u32, y: u32) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        let (rx, ry) = if self.rank[rx as usize] < self.rank[ry as usize] {
            (ry, rx)
        } else {
            (rx, ry)
        };
        self.parent[ry as usize] = rx;
        if self.rank[rx as usize] == self.rank[ry as usize] {
            self.rank[rx as usize] += 1;
        }
        true
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

/// Edge lengths of the Euclidean MST, ascending. `n - 1` entries.
pub fn emst_edge_lengths(cloud: &PointCloud) -> Result<Vec<f64>> {
    let n = cloud.n();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "minimum spanning tree needs at least 2 points, got {n}"
        )));
    }
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let pi = cloud.point(i);
        for j in (i + 1)..n {
            edges.push((squared_distance(pi, cloud.point(j)), i as u32, j as u32));
        }
    }
    // Sort by squared length with index tie-breaks for determinism.
    edges.sort_unstable_by(|a, b| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });

    let mut uf = UnionFind::new(n);
    let mut lengths = Vec::with_capacity(n - 1);
    for (d2, i, j) in edges {
        if uf.union(i, j) {
            lengths.push(d2.sqrt());
            if lengths.len() == n - 1 {
                break;
            }
        }
    }
    Ok(lengths)
}

/// Sum of MST edge lengths raised to `alpha` (the degree-0 alpha-lifetime
/// sum of the cloud).
pub fn mst_alpha_lifetime(cloud: &PointCloud, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInputs(format!("alpha must be positive, got {alpha}")));
    }
    let lengths = emst_edge_lengths(cloud)?;
    Ok(lengths.iter().map(|l| l.powf(alpha)).sum())
}
