use crate::error::{Error, Result};
use crate::numkit::Mat;

/// Entrywise central-difference gradient `(f(x + h e) - f(x - h e)) / 2h`.
///
/// The workhorse oracle for every analytic-gradient check in the crate.
pub fn central_diff_grad<F>(f: F, x: &Mat, h: f64) -> Result<Mat>
where
    F: Fn(&Mat) -> Result<f64>,
{
    if h <= 0.0 {
        return Err(Error::invalid(format!("step h must be > 0, got {h}")));
    }
    let mut grad = Mat::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let orig = probe.get(i, j);
            probe.set(i, j, orig + h);
            let plus = f(&probe)?;
            probe.set(i, j, orig - h);
            let minus = f(&probe)?;
            probe.set(i, j, orig);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite evaluation at entry ({i}, {j})"
                )));
            }
            grad.set(i, j, (plus - minus) / (2.0 * h));
        }
    }
    Ok(grad)
}
