use crate::numkit::{sq_dist, Mat};

pub fn accuracy(pred_labels: &[usize], true_labels: &[usize]) -> f64 {
    assert_eq!(pred_labels.len(), true_labels.len());
    if pred_labels.is_empty() {
        return 0.0;
    }
    let hits = pred_labels
        .iter()
        .zip(true_labels)
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / pred_labels.len() as f64
}

/// Coefficient of determination over all columns jointly.
pub fn r_squared(pred: &Mat, truth: &Mat) -> f64 {
    assert_eq!((pred.rows(), pred.cols()), (truth.rows(), truth.cols()));
    let n = truth.rows() as f64;
    let mut means = vec![0.0; truth.cols()];
    for i in 0..truth.rows() {
        for (m, &v) in means.iter_mut().zip(truth.row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..truth.rows() {
        for j in 0..truth.cols() {
            ss_res += (truth.get(i, j) - pred.get(i, j)).powi(2);
            ss_tot += (truth.get(i, j) - means[j]).powi(2);
        }
    }
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            return 1.0;
        }
        return f64::NEG_INFINITY;
    }
    1.0 - ss_res / ss_tot
}

/// Normalized mutual information `2 I(U;V) / (H(U) + H(V))`.
pub fn nmi(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let ka = a.iter().max().map_or(0, |&m| m + 1);
    let kb = b.iter().max().map_or(0, |&m| m + 1);
    let mut joint = vec![0.0f64; ka * kb];
    let mut pa = vec![0.0f64; ka];
    let mut pb = vec![0.0f64; kb];
    let w = 1.0 / n as f64;
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += w;
        pa[x] += w;
        pb[y] += w;
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let p = joint[x * kb + y];
            if p > 0.0 {
                mi += p * (p / (pa[x] * pb[y])).ln();
            }
        }
    }
    let h = |p: &[f64]| -> f64 { p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum() };
    let denom = h(&pa) + h(&pb);
    if denom == 0.0 {
        // both partitions are single clusters, hence identical
        return 1.0;
    }
    (2.0 * mi / denom).clamp(0.0, 1.0)
}

/// Rank-based AUC with half credit for ties.
pub fn auc(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    if pos_scores.is_empty() || neg_scores.is_empty() {
        return 0.5;
    }
    let mut wins = 0.0;
    for &p in pos_scores {
        for &n in neg_scores {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos_scores.len() as f64 * neg_scores.len() as f64)
}

/// Permutation-invariant Lloyd k-means: farthest-point initialization with
/// value-based tie breaking, no randomness. Used by clustering evaluation
/// so metrics do not depend on node order.
pub fn kmeans_deterministic(points: &Mat, k: usize, max_iter: usize) -> Vec<usize> {
    let n = points.rows();
    assert!(k >= 1 && k <= n);
    let d = points.cols();

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in mean.iter_mut().zip(points.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // seeds: farthest from the global mean, then farthest-point traversal;
    // ties resolved by lexicographic point value
    let lex_less = |a: &[f64], b: &[f64]| -> bool {
        for (x, y) in a.iter().zip(b) {
            if x < y {
                return true;
            }
            if x > y {
                return false;
            }
        }
        false
    };
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut pick = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let dist = sq_dist(points.row(i), &mean);
        if dist > best || (dist == best && lex_less(points.row(i), points.row(pick))) {
            best = dist;
            pick = i;
        }
    }
    centers.push(points.row(pick).to_vec());
    while centers.len() < k {
        let mut pick = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..n {
            let dist = centers
                .iter()
                .map(|c| sq_dist(points.row(i), c))
                .fold(f64::INFINITY, f64::min);
            if dist > best || (dist == best && lex_less(points.row(i), points.row(pick))) {
                best = dist;
                pick = i;
            }
        }
        centers.push(points.row(pick).to_vec());
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dist = sq_dist(points.row(i), center);
                if dist < best_d {
                    best_d = dist;
                    best_c = c;
                }
            }
            if assignments[i] != best_c {
                assignments[i] = best_c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            for (s, &v) in sums[assignments[i]].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in &mut sums[c] {
                    *s /= counts[c] as f64;
                }
                centers[c] = sums[c].clone();
            }
        }
    }
    assignments
}

pub fn softmax_rows(logits: &Mat) -> Mat {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub fn row_argmaxes(m: &Mat) -> Vec<usize> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .map(|(j, _)| j)
                .unwrap_or(0)
        })
        .collect()
}
