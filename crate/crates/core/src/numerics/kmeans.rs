//! Lloyd's k-means with k-means++ seeding.

use super::matrix::{axpy, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng::{roles, CounterRng};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// Cluster index per input point.
    pub assignment: Vec<usize>,
    /// k × dim.
    pub centroids: DenseMatrix,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
    /// Clusters that went empty and were re-seeded from the farthest point.
    pub reseeded: usize,
}

impl KMeansResult {
    pub fn wcss(&self) -> f64 {
        self.wcss_history.last().copied().unwrap_or(0.0)
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters the rows of `points` into `k` groups.
///
/// A cluster that loses all its points is moved onto the point farthest from
/// its current centroid, which keeps every cluster non-empty.
pub fn kmeans(points: &DenseMatrix, k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult> {
    let n = points.rows();
    let dim = points.cols();
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} must be in 1..={n}")));
    }
    let mut rng = CounterRng::new(seed, roles::KMEANS);
    let mut centroids = plus_plus_seeds(points, k, &mut rng);
    let mut assignment = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut reseeded = 0;

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut wcss = 0.0;
        for i in 0..n {
            let (best, d) = nearest(points.row(i), &centroids);
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
            wcss += d;
        }
        history.push(wcss);
        if !changed && history.len() > 1 {
            break;
        }

        let mut sums = DenseMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            axpy(1.0, points.row(i), sums.row_mut(c));
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = farthest_point(points, &assignment, &centroids);
                centroids.row_mut(c).copy_from_slice(points.row(far));
                reseeded += 1;
            }
        }
    }

    Ok(KMeansResult {
        assignment,
        centroids,
        wcss_history: history,
        reseeded,
    })
}

fn nearest(p: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = dist2(p, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_point(points: &DenseMatrix, assignment: &[usize], centroids: &DenseMatrix) -> usize {
    let mut best = (0, -1.0);
    for i in 0..points.rows() {
        let d = dist2(points.row(i), centroids.row(assignment[i]));
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn plus_plus_seeds(points: &DenseMatrix, k: usize, rng: &mut CounterRng) -> DenseMatrix {
    let n = points.rows();
    let mut centroids = DenseMatrix::zeros(k, points.cols());
    let first = rng.below(n as u64) as usize;
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining points coincide with a centroid.
            rng.below(n as u64) as usize
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..n {
            let d = dist2(points.row(i), points.row(pick));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}
