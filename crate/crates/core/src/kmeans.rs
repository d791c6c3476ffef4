//! k-means with k-means++ seeding on the rows of a dense matrix.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::rng::{rng_from, stream};

pub const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
}

/// Row-major copy of the points, one row per point.
struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    fn from_rows(m: &DMatrix<f64>) -> Self {
        let dim = m.ncols();
        let mut data = Vec::with_capacity(m.nrows() * dim);
        for i in 0..m.nrows() {
            data.extend(m.row(i).iter());
        }
        Self { data, dim }
    }

    fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest index on ties.
pub(crate) fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus_seed(points: &Points, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points.row(rng.random_range(0..n)).to_vec());
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // Guard against round-off walking past the last positive weight.
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(idx).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn recompute_centroids(points: &Points, labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; points.dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    (sums, counts)
}

fn lloyd(points: &Points, mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let n = points.len();
    let k = centroids.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let (best, _) = nearest(points.row(i), &centroids);
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        let (mut next, counts) = recompute_centroids(points, &labels, k);
        // Reseed empty clusters at the point farthest from its centroid.
        for empty in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .map(|i| (i, sq_dist(points.row(i), &next[labels[i]])))
                .fold((0, -1.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
            labels[far.0] = empty;
            next = recompute_centroids(points, &labels, k).0;
            changed = true;
        }
        centroids = next;
        if !changed {
            break;
        }
    }
    let wcss = (0..n).map(|i| sq_dist(points.row(i), &centroids[labels[i]])).sum();
    KMeansFit {
        labels,
        centroids,
        wcss,
    }
}

/// Clusters the rows of `coords` into `k` groups. Each of the `restarts`
/// runs uses its own derived seed; the run with the lowest WCSS wins, ties
/// going to the lowest restart index.
pub fn kmeans(coords: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> KMeansFit {
    let points = Points::from_rows(coords);
    let n = points.len();
    assert!(k >= 1 && k <= n, "k-means needs 1 <= k <= n (k={k}, n={n})");
    if k == 1 {
        let labels = vec![0; n];
        let (centroids, _) = recompute_centroids(&points, &labels, 1);
        let wcss = (0..n).map(|i| sq_dist(points.row(i), &centroids[0])).sum();
        return KMeansFit {
            labels,
            centroids,
            wcss,
        };
    }
    let fits: Vec<KMeansFit> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from(seed, &[stream::KMEANS, r]);
            let init = plus_plus_seed(&points, k, &mut rng);
            lloyd(&points, init)
        })
        .collect();
    fits.into_iter()
        .reduce(|best, fit| if fit.wcss < best.wcss { fit } else { best })
        .expect("at least one restart")
}

/// Lloyd iterations where only the points in `free` may move; every other
/// point keeps its entry in `labels`. Centroids start from the fixed points.
/// Returns `None` if some cluster has no fixed point.
pub fn constrained_lloyd(coords: &DMatrix<f64>, labels: &[usize], free: &[bool], k: usize) -> Option<Vec<usize>> {
    let points = Points::from_rows(coords);
    let n = points.len();
    let mut fixed_counts = vec![0usize; k];
    for i in 0..n {
        if !free[i] {
            fixed_counts[labels[i]] += 1;
        }
    }
    if fixed_counts.contains(&0) {
        return None;
    }

    let mut current = labels.to_vec();
    let fixed_only: Vec<usize> = (0..n).filter(|&i| !free[i]).collect();
    let mut centroids = {
        let mut sums = vec![vec![0.0; points.dim]; k];
        for &i in &fixed_only {
            for (s, v) in sums[labels[i]].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for (s, &c) in sums.iter_mut().zip(&fixed_counts) {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
        sums
    };
    for iter in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in (0..n).filter(|&i| free[i]) {
            let (best, _) = nearest(points.row(i), &centroids);
            if current[i] != best {
                current[i] = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        centroids = recompute_centroids(&points, &current, k).0;
    }
    Some(current)
}
