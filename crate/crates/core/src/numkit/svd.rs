use crate::error::{Error, Result};
use crate::numkit::Mat;

/// Thin singular value decomposition `a = u * diag(sigma) * v^T`.
///
/// `u` is `m x r`, `v` is `n x r` with `r = min(m, n)`; singular values are
/// sorted in descending order.
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

const MAX_SWEEPS: usize = 64;
const ORTH_TOL: f64 = 1e-15;

/// One-sided Jacobi SVD. Rotates column pairs of a working copy of `a`
/// until all columns are mutually orthogonal; column norms are then the
/// singular values.
pub fn svd(a: &Mat) -> Result<Svd> {
    a.check_finite("svd input")?;
    if a.rows() < a.cols() {
        let t = svd(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }

    let (m, n) = (a.rows(), a.cols());
    let mut u = a.clone();
    let mut v = Mat::identity(n);

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let up = u.get(i, p);
                    let uq = u.get(i, q);
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u.get(i, p);
                    let uq = u.get(i, q);
                    u.set(i, p, c * up - s * uq);
                    u.set(i, q, s * up + c * uq);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| u.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();

    // Sort columns by descending singular value.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let u_sorted = Mat::from_fn(m, n, |i, j| u.get(i, order[j]));
    let v_sorted = Mat::from_fn(n, n, |i, j| v.get(i, order[j]));
    sigma = order.iter().map(|&j| sigma[j]).collect();

    let mut u_norm = u_sorted;
    for j in 0..n {
        if sigma[j] > 0.0 {
            for i in 0..m {
                let val = u_norm.get(i, j) / sigma[j];
                u_norm.set(i, j, val);
            }
        }
    }

    Ok(Svd {
        u: u_norm,
        sigma,
        v: v_sorted,
    })
}

/// Moore-Penrose pseudo-inverse. Singular values below `tol * sigma_max`
/// are treated as zero.
pub fn pinv(a: &Mat, tol: f64) -> Result<Mat> {
    if a.is_empty() {
        return Err(Error::invalid("pinv of empty matrix"));
    }
    if tol <= 0.0 {
        return Err(Error::invalid(format!("pinv tolerance must be > 0, got {tol}")));
    }
    a.check_finite("pinv input")?;

    let Svd { u, sigma, v } = svd(a)?;
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cutoff = tol * smax;
    let inv: Vec<f64> = sigma
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    // v * diag(inv) * u^T
    let mut scaled_v = v;
    for i in 0..scaled_v.rows() {
        for (j, &w) in inv.iter().enumerate() {
            let val = scaled_v.get(i, j) * w;
            scaled_v.set(i, j, val);
        }
    }
    Ok(scaled_v.matmul(&u.transpose()))
}
