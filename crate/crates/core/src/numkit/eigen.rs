use crate::error::{Error, Result};
use crate::numkit::Mat;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

const SYMMETRY_TOL: f64 = 1e-10;
// Start-vector perturbation seed; only reached when the all-ones start is
// (numerically) orthogonal to the dominant eigenvector.
const PERTURB_SEED: u64 = 0x5eed;

/// Largest eigenvalue magnitude of a symmetric matrix by power iteration.
///
/// Starts from the normalized all-ones vector; if that start stagnates
/// without meeting the residual tolerance (orthogonal-start pathology), the
/// vector is perturbed deterministically once and iteration continues.
/// Returns `(estimate, converged)`; on non-convergence the best estimate is
/// returned with the flag set to `false`.
pub fn lambda_max_sym(a: &Mat, tol: f64, max_iter: usize) -> Result<(f64, bool)> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "lambda_max_sym needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::invalid("lambda_max_sym: matrix is not symmetric"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("lambda_max_sym: max_iter must be >= 1"));
    }
    a.check_finite("lambda_max_sym input")?;

    let n = a.rows();
    if n == 0 {
        return Err(Error::invalid("lambda_max_sym: empty matrix"));
    }
    if a.frob_norm() == 0.0 {
        return Ok((0.0, true));
    }

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    let mut prev_lambda = f64::INFINITY;
    let mut stagnant = 0usize;
    let mut perturbed = false;

    for _ in 0..max_iter {
        let y = mat_vec(a, &x);
        let norm_y = norm(&y);
        if norm_y < 1e-300 {
            // x is in (or near) the null space; a is nonzero, so restart.
            perturb(&mut x);
            perturbed = true;
            continue;
        }
        lambda = x.iter().zip(&y).map(|(xi, yi)| xi * yi).sum::<f64>();
        // residual of the eigen equation at the current Rayleigh estimate
        let res = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - lambda * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm_y;
        }
        if res <= tol * lambda.abs().max(1e-300) {
            return Ok((lambda.abs(), true));
        }
        if (lambda - prev_lambda).abs() <= 1e-14 * lambda.abs().max(1e-300) {
            stagnant += 1;
            if stagnant >= 5 && !perturbed {
                perturb(&mut x);
                perturbed = true;
                stagnant = 0;
            }
        } else {
            stagnant = 0;
        }
        prev_lambda = lambda;
    }
    Ok((lambda.abs(), false))
}

fn perturb(x: &mut [f64]) {
    let mut rng = ChaCha20Rng::seed_from_u64(PERTURB_SEED);
    for xi in x.iter_mut() {
        *xi += rng.random_range(-0.5..0.5);
    }
    let n = norm(x).max(1e-300);
    for xi in x.iter_mut() {
        *xi /= n;
    }
}

fn mat_vec(a: &Mat, x: &[f64]) -> Vec<f64> {
    (0..a.rows())
        .map(|i| a.row(i).iter().zip(x).map(|(aij, xj)| aij * xj).sum())
        .collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// All eigenvalues of a symmetric matrix via cyclic two-sided Jacobi,
/// sorted ascending. Desk-scale dense solver; also serves as the oracle
/// for power iteration in tests.
pub fn sym_eigenvalues(a: &Mat, max_sweeps: usize) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::shape("sym_eigenvalues needs a square matrix".to_string()));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::invalid("sym_eigenvalues: matrix is not symmetric"));
    }
    a.check_finite("sym_eigenvalues input")?;

    let n = a.rows();
    let mut m = a.clone();
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j).powi(2);
            }
        }
        if off.sqrt() <= 1e-13 * m.frob_norm().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn zero_matrix_has_zero_lambda() {
        let (l, conv) = lambda_max_sym(&Mat::zeros(3, 3), 1e-10, 100).unwrap();
        assert_eq!(l, 0.0);
        assert!(conv);
    }

    /// Eigenvalues {0, 1} by hand from the characteristic polynomial; the
    /// all-ones start is exactly orthogonal to the dominant eigenvector,
    /// exercising the perturbation path.
    #[test]
    fn orthogonal_start_recovers_dominant() {
        let a = Mat::from_vec(2, 2, vec![0.5, -0.5, -0.5, 0.5]).unwrap();
        let (l, conv) = lambda_max_sym(&a, 1e-10, 500).unwrap();
        assert!(conv);
        assert!((l - 1.0).abs() < 1e-8, "lambda = {l}");
    }

    #[test]
    fn path_laplacian_matches_jacobi_oracle() {
        // Normalized 3-node path with self-loops, L = I - A.
        let raw = Mat::from_vec(3, 3, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let a = crate::graph::normalize_adjacency(&raw, true).unwrap();
        let l = crate::graph::laplacian(&a).unwrap();
        let eigs = sym_eigenvalues(&l, 50).unwrap();
        let oracle = eigs.last().copied().unwrap();
        let (est, conv) = lambda_max_sym(&l, 1e-8, 5000).unwrap();
        assert!(conv);
        assert!((est - oracle).abs() <= 1e-6 * oracle.abs().max(1e-12));
    }

    #[test]
    fn lambda_never_exceeds_frobenius_norm() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = rng.random_range(2..8);
            let b = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = b.add(&b.transpose()).scale(0.5);
            let (l, _) = lambda_max_sym(&a, 1e-9, 2000).unwrap();
            assert!(l <= a.frob_norm() + 1e-9);
        }
    }

    #[test]
    fn jacobi_matches_analytic_2x2() {
        let a = Mat::from_vec(2, 2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let eigs = sym_eigenvalues(&a, 50).unwrap();
        // roots of x^2 - 5x + 5
        let lo = (5.0 - 5.0_f64.sqrt()) / 2.0;
        let hi = (5.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((eigs[0] - lo).abs() < 1e-12);
        assert!((eigs[1] - hi).abs() < 1e-12);
    }

    #[test]
    fn jacobi_preserves_trace() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let b = Mat::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
        let a = b.add(&b.transpose()).scale(0.5);
        let eigs = sym_eigenvalues(&a, 60).unwrap();
        let trace: f64 = (0..6).map(|i| a.get(i, i)).sum();
        assert!((eigs.iter().sum::<f64>() - trace).abs() < 1e-10);
    }
}
