use crate::error::{Error, Result};
use crate::numkit::mat::sq_dist;
use crate::numkit::Mat;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Mat,
    pub objective: f64,
    /// Objective after every Lloyd iteration (non-increasing).
    pub objective_history: Vec<f64>,
}

/// Lloyd's algorithm with seeded k-means++ initialization.
///
/// Deterministic given `seed`. Empty clusters are repaired by reseeding the
/// centroid at the point farthest from its currently assigned centroid.
pub fn kmeans(points: &Mat, k: usize, seed: u64, max_iter: usize) -> Result<KmeansResult> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "kmeans needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    points.check_finite("kmeans input")?;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut history = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut objective = 0.0;
        for i in 0..n {
            let (best, dist) = nearest_centroid(points.row(i), &centroids);
            objective += dist;
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        history.push(objective);

        // Means per cluster.
        let d = points.cols();
        let mut sums = Mat::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            counts[c] += 1;
            for (s, &v) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dest, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dest = s * inv;
                }
            } else {
                // farthest point from its own centroid, ties toward lower
                // index; each repaired cluster takes a distinct point
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&i, &j| {
                        let di = sq_dist(points.row(i), centroids.row(assignments[i]));
                        let dj = sq_dist(points.row(j), centroids.row(assignments[j]));
                        di.partial_cmp(&dj).unwrap().then(j.cmp(&i))
                    })
                    .expect("n >= k >= 1");
                taken[far] = true;
                let row: Vec<f64> = points.row(far).to_vec();
                centroids.row_mut(c).copy_from_slice(&row);
            }
        }

        if !changed && history.len() > 1 {
            break;
        }
    }

    let objective = history.last().copied().unwrap_or(0.0);
    Ok(KmeansResult {
        assignments,
        centroids,
        objective,
        objective_history: history,
    })
}

fn nearest_centroid(point: &[f64], centroids: &Mat) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn plus_plus_init(points: &Mat, k: usize, rng: &mut ChaCha20Rng) -> Mat {
    let n = points.rows();
    let mut centroids = Mat::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));

    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..n {
            let d = sq_dist(points.row(i), centroids.row(c));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}
