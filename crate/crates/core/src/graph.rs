//! Graph data model: symmetric-normalized adjacency, Laplacian, and a
//! stochastic block model generator for desk-scale experiments.

use crate::error::{Error, Result};
use crate::numkit::{lambda_max_sym, Mat};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

const SYMMETRY_TOL: f64 = 1e-10;
const SPECTRAL_TOL: f64 = 1e-9;

/// Train/validation/test node index sets. Disjoint subsets of `[0, n)`.
#[derive(Clone, Debug, Default)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// An attributed graph with a symmetric-normalized adjacency.
///
/// Labels are a dense target matrix: one-hot rows for classification,
/// a single column for regression.
#[derive(Clone, Debug)]
pub struct Graph {
    pub n: usize,
    pub adjacency: Mat,
    pub features: Mat,
    pub labels: Option<Mat>,
    pub splits: Option<Splits>,
}

impl Graph {
    pub fn new(
        adjacency: Mat,
        features: Mat,
        labels: Option<Mat>,
        splits: Option<Splits>,
    ) -> Result<Graph> {
        let n = adjacency.rows();
        if !adjacency.is_square() {
            return Err(Error::shape("adjacency must be square".to_string()));
        }
        if !adjacency.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::invalid("adjacency is not symmetric"));
        }
        adjacency.check_finite("graph adjacency")?;
        features.check_finite("graph features")?;
        if features.rows() != n {
            return Err(Error::shape(format!(
                "feature rows {} != node count {n}",
                features.rows()
            )));
        }
        if n > 0 {
            let (rho, _) = lambda_max_sym(&adjacency, 1e-8, 2000)?;
            if rho > 1.0 + SPECTRAL_TOL {
                return Err(Error::invalid(format!(
                    "adjacency spectral radius {rho} exceeds 1"
                )));
            }
        }
        if let Some(y) = &labels {
            y.check_finite("graph labels")?;
            if y.rows() != n {
                return Err(Error::shape(format!("label rows {} != node count {n}", y.rows())));
            }
        }
        if let Some(s) = &splits {
            validate_splits(s, n)?;
        }
        Ok(Graph {
            n,
            adjacency,
            features,
            labels,
            splits,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Deterministic random splits over all nodes (plumbing for synthetic
    /// experiments; real datasets ship their own split files).
    pub fn with_random_splits(mut self, train_frac: f64, val_frac: f64, seed: u64) -> Graph {
        let mut order: Vec<usize> = (0..self.n).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let n_train = ((self.n as f64) * train_frac).round() as usize;
        let n_val = ((self.n as f64) * val_frac).round() as usize;
        let mut train: Vec<usize> = order[..n_train].to_vec();
        let mut val: Vec<usize> = order[n_train..(n_train + n_val).min(self.n)].to_vec();
        let mut test: Vec<usize> = order[(n_train + n_val).min(self.n)..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        self.splits = Some(Splits { train, val, test });
        self
    }
}

fn validate_splits(s: &Splits, n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for (name, set) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        for &i in set {
            if i >= n {
                return Err(Error::invalid(format!("{name} split index {i} out of range (n = {n})")));
            }
            if seen[i] {
                return Err(Error::invalid(format!("node {i} appears in more than one split")));
            }
            seen[i] = true;
        }
    }
    Ok(())
}

/// The condensed counterpart: a small synthetic graph. Its adjacency is
/// symmetric with entries in [0, 1] but is not required to be normalized
/// (the raw materialization of learned logits is a valid instance).
#[derive(Clone, Debug)]
pub struct CondensedGraph {
    pub m: usize,
    pub adjacency: Mat,
    pub features: Mat,
    pub labels: Option<Mat>,
}

impl CondensedGraph {
    pub fn new(adjacency: Mat, features: Mat, labels: Option<Mat>) -> Result<CondensedGraph> {
        let m = adjacency.rows();
        if !adjacency.is_square() {
            return Err(Error::shape("condensed adjacency must be square".to_string()));
        }
        if !adjacency.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::invalid("condensed adjacency is not symmetric"));
        }
        adjacency.check_finite("condensed adjacency")?;
        features.check_finite("condensed features")?;
        if features.rows() != m {
            return Err(Error::shape(format!(
                "condensed feature rows {} != node count {m}",
                features.rows()
            )));
        }
        if let Some(y) = &labels {
            if y.rows() != m {
                return Err(Error::shape(format!(
                    "condensed label rows {} != node count {m}",
                    y.rows()
                )));
            }
        }
        Ok(CondensedGraph {
            m,
            adjacency,
            features,
            labels,
        })
    }

    /// View as a `Graph` for downstream training; requires the adjacency to
    /// satisfy the normalized-spectrum invariant.
    pub fn as_graph(&self) -> Result<Graph> {
        Graph::new(
            self.adjacency.clone(),
            self.features.clone(),
            self.labels.clone(),
            None,
        )
    }
}

/// Symmetric normalization `D^{-1/2} (raw + s I) D^{-1/2}` with `s = 1`
/// when `add_self_loops` is set.
pub fn normalize_adjacency(raw: &Mat, add_self_loops: bool) -> Result<Mat> {
    if !raw.is_square() {
        return Err(Error::shape("adjacency must be square".to_string()));
    }
    if !raw.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::invalid("adjacency is not symmetric"));
    }
    raw.check_finite("normalize_adjacency input")?;
    if raw.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("adjacency has negative entries"));
    }
    let n = raw.rows();
    let s = if add_self_loops { 1.0 } else { 0.0 };
    let mut with_loops = raw.clone();
    for i in 0..n {
        let v = with_loops.get(i, i) + s;
        with_loops.set(i, i, v);
    }
    let degrees = with_loops.row_sums();
    if let Some(node) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::invalid(format!(
            "node {node} is isolated (zero degree); enable self-loops or connect it"
        )));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        with_loops.get(i, j) * inv_sqrt[i] * inv_sqrt[j]
    }))
}

/// Graph Laplacian `I - a` of a normalized adjacency.
pub fn laplacian(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::shape("laplacian needs a square matrix".to_string()));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::invalid("laplacian needs a symmetric matrix"));
    }
    Ok(Mat::identity(a.rows()).sub(a))
}

/// Stochastic block model with Gaussian features around per-block centers.
///
/// Edges are sampled independently with probability `p_in` inside a block
/// and `p_out` across blocks; the adjacency is then symmetric-normalized
/// with self-loops. Block membership becomes one-hot labels.
pub fn sbm_generate(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    feature_centers: &Mat,
    noise_sigma: f64,
    seed: u64,
) -> Result<Graph> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::invalid("every block must have size >= 1"));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(Error::invalid(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in = {p_in}, p_out = {p_out}"
        )));
    }
    if feature_centers.rows() != block_sizes.len() {
        return Err(Error::shape(format!(
            "{} feature centers for {} blocks",
            feature_centers.rows(),
            block_sizes.len()
        )));
    }

    let n: usize = block_sizes.iter().sum();
    let blocks: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &sz)| std::iter::repeat_n(b, sz))
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut raw = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if blocks[i] == blocks[j] { p_in } else { p_out };
            if rng.random_range(0.0..1.0) < p {
                raw.set(i, j, 1.0);
                raw.set(j, i, 1.0);
            }
        }
    }

    let f = feature_centers.cols();
    let mut features = Mat::zeros(n, f);
    for i in 0..n {
        for j in 0..f {
            let noise = if noise_sigma > 0.0 {
                gaussian(&mut rng) * noise_sigma
            } else {
                0.0
            };
            features.set(i, j, feature_centers.get(blocks[i], j) + noise);
        }
    }

    let c = block_sizes.len();
    let labels = Mat::from_fn(n, c, |i, j| if blocks[i] == j { 1.0 } else { 0.0 });

    let adjacency = normalize_adjacency(&raw, true)?;
    Graph::new(adjacency, features, Some(labels), None)
}

// Box-Muller; two uniform draws per call keeps the stream aligned and seeded.
fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Centers used by the synthetic experiments: scaled one-hot-ish rows, one
/// per block, cycling when there are more blocks than feature dimensions.
pub fn default_centers(num_blocks: usize, feature_dim: usize, scale: f64) -> Mat {
    Mat::from_fn(num_blocks, feature_dim, |b, j| {
        if j == b % feature_dim {
            scale
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::sym_eigenvalues;

    #[test]
    fn two_node_edge_normalizes_to_half() {
        let raw = Mat::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let a = normalize_adjacency(&raw, true).unwrap();
        for v in a.as_slice() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_self_loop() {
        let a = normalize_adjacency(&Mat::zeros(1, 1), true).unwrap();
        assert!((a.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_without_self_loops_is_fixed_point() {
        let a = normalize_adjacency(&Mat::identity(3), false).unwrap();
        assert!(a.sub(&Mat::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn isolated_node_is_reported() {
        let mut raw = Mat::zeros(3, 3);
        raw.set(0, 1, 1.0);
        raw.set(1, 0, 1.0);
        let err = normalize_adjacency(&raw, false).unwrap_err();
        assert!(err.to_string().contains("node 2"), "{err}");
    }

    #[test]
    fn laplacian_of_identity_is_zero() {
        let l = laplacian(&Mat::identity(4)).unwrap();
        assert_eq!(l.max_abs(), 0.0);
    }

    #[test]
    fn laplacian_two_node() {
        let a = Mat::from_vec(2, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let l = laplacian(&a).unwrap();
        assert_eq!(l.as_slice(), &[0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn laplacian_eigenvalues_in_zero_two() {
        let g = sbm_generate(
            &[4, 4],
            0.8,
            0.2,
            &default_centers(2, 3, 1.0),
            0.1,
            7,
        )
        .unwrap();
        let l = laplacian(&g.adjacency).unwrap();
        let eigs = sym_eigenvalues(&l, 60).unwrap();
        assert!(eigs[0] >= -1e-9, "min eigenvalue {}", eigs[0]);
        assert!(*eigs.last().unwrap() <= 2.0 + 1e-9);
    }

    #[test]
    fn normalization_reproduces_degree_sums() {
        // D^{1/2} out D^{1/2} row sums must match (raw + I) row sums.
        let g = sbm_generate(&[5, 5], 0.7, 0.3, &default_centers(2, 2, 1.0), 0.0, 3).unwrap();
        // reconstruct raw + I from the normalized adjacency is indirect;
        // instead test on an explicit instance
        let raw = Mat::from_vec(3, 3, vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let out = normalize_adjacency(&raw, true).unwrap();
        let mut with_loops = raw.clone();
        for i in 0..3 {
            with_loops.set(i, i, with_loops.get(i, i) + 1.0);
        }
        let deg = with_loops.row_sums();
        let sqrt_d = Mat::diag(&deg.iter().map(|d| d.sqrt()).collect::<Vec<_>>());
        let recon = sqrt_d.matmul(&out).matmul(&sqrt_d);
        assert!(recon.sub(&with_loops).max_abs() < 1e-12);
        drop(g);
    }

    #[test]
    fn regular_graph_all_ones_eigenvector() {
        // 4-cycle is 2-regular; with self-loops every degree is 3.
        let mut raw = Mat::zeros(4, 4);
        for i in 0..4 {
            let j = (i + 1) % 4;
            raw.set(i, j, 1.0);
            raw.set(j, i, 1.0);
        }
        let a = normalize_adjacency(&raw, true).unwrap();
        let ones = Mat::from_fn(4, 1, |_, _| 1.0);
        let out = a.matmul(&ones);
        assert!(out.sub(&ones).max_abs() < 1e-12);
    }

    #[test]
    fn sbm_density_near_p_in() {
        let mut densities = Vec::new();
        for seed in 0..5 {
            let sizes = [20usize, 20];
            let p_in = 0.5;
            let g = sbm_generate(&sizes, p_in, 0.02, &default_centers(2, 2, 1.0), 0.1, seed).unwrap();
            // count intra-block edges via positive off-diagonal entries
            let mut intra = 0usize;
            for i in 0..20 {
                for j in (i + 1)..20 {
                    if g.adjacency.get(i, j) > 0.0 {
                        intra += 1;
                    }
                }
            }
            densities.push(intra as f64 / (20.0 * 19.0 / 2.0));
        }
        let mean = densities.iter().sum::<f64>() / densities.len() as f64;
        assert!((mean - 0.5).abs() < 0.15, "intra density {mean}");
    }

    #[test]
    fn sbm_disconnected_blocks_with_self_loops() {
        let g = sbm_generate(&[3, 3], 0.0, 0.0, &default_centers(2, 2, 1.0), 0.0, 1).unwrap();
        assert!(g.adjacency.sub(&Mat::identity(6)).max_abs() < 1e-12);
    }

    #[test]
    fn sbm_zero_noise_rows_identical_within_block() {
        let g = sbm_generate(&[4, 4], 0.6, 0.1, &default_centers(2, 3, 2.0), 0.0, 9).unwrap();
        for i in 1..4 {
            assert_eq!(g.features.row(0), g.features.row(i));
        }
    }

    #[test]
    fn sbm_rejects_empty_block() {
        assert!(sbm_generate(&[3, 0], 0.5, 0.1, &default_centers(2, 2, 1.0), 0.1, 0).is_err());
    }

    #[test]
    fn splits_are_disjoint_and_sorted() {
        let g = sbm_generate(&[10, 10], 0.5, 0.1, &default_centers(2, 2, 1.0), 0.1, 0)
            .unwrap()
            .with_random_splits(0.3, 0.2, 4);
        let s = g.splits.as_ref().unwrap();
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 20);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 20);
    }
}
