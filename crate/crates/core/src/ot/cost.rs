use crate::error::{Error, Result};
use crate::numkit::Mat;
use crate::parallel;

/// Pairwise Euclidean feature cost: entry `(i, j) = ||x_i - xc_j||_2`.
pub fn feature_cost(x: &Mat, xc: &Mat) -> Result<Mat> {
    if x.cols() != xc.cols() {
        return Err(Error::shape(format!(
            "feature dimensions differ: {} vs {}",
            x.cols(),
            xc.cols()
        )));
    }
    x.check_finite("feature_cost x")?;
    xc.check_finite("feature_cost xc")?;
    let (n, m) = (x.rows(), xc.rows());
    let mut out = Mat::zeros(n, m);
    parallel::for_each_chunk(out.as_mut_slice(), m.max(1), |i, row| {
        let xi = x.row(i);
        for (j, o) in row.iter_mut().enumerate() {
            *o = crate::numkit::sq_dist(xi, xc.row(j)).sqrt();
        }
    });
    Ok(out)
}

/// Contraction of the structure cost tensor with a plan:
/// entry `(i, j) = sum_{k,l} |a_ik - ac_jl| plan_kl`.
///
/// Computed by direct summation; the 4-index tensor is never materialized.
/// Linear in `plan`, so it is also used on plan differences inside the
/// conditional-gradient line search.
pub fn structure_cost_apply(a: &Mat, ac: &Mat, plan: &Mat) -> Result<Mat> {
    if !a.is_square() || !ac.is_square() {
        return Err(Error::shape("structure cost needs square adjacencies".to_string()));
    }
    if plan.rows() != a.rows() || plan.cols() != ac.rows() {
        return Err(Error::shape(format!(
            "plan {}x{} does not match adjacencies {}x{} / {}x{}",
            plan.rows(),
            plan.cols(),
            a.rows(),
            a.cols(),
            ac.rows(),
            ac.cols()
        )));
    }
    let (n, m) = (a.rows(), ac.rows());
    let mut out = Mat::zeros(n, m);
    parallel::for_each_chunk(out.as_mut_slice(), m.max(1), |i, row| {
        let a_row = a.row(i);
        for (j, o) in row.iter_mut().enumerate() {
            let ac_row = ac.row(j);
            let mut acc = 0.0;
            for (k, &aik) in a_row.iter().enumerate() {
                let plan_row = plan.row(k);
                for (&ajl, &p) in ac_row.iter().zip(plan_row) {
                    acc += (aik - ajl).abs() * p;
                }
            }
            *o = acc;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn self_cost_has_zero_diagonal() {
        let x = Mat::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 2.0, 2.0]).unwrap();
        let c = feature_cost(&x, &x).unwrap();
        for i in 0..3 {
            assert_eq!(c.get(i, i), 0.0);
        }
    }

    #[test]
    fn scalar_distance() {
        let x = Mat::from_vec(1, 1, vec![0.0]).unwrap();
        let y = Mat::from_vec(1, 1, vec![3.0]).unwrap();
        assert_eq!(feature_cost(&x, &y).unwrap().get(0, 0), 3.0);
    }

    #[test]
    fn transpose_symmetry() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let x = Mat::from_fn(4, 2, |_, _| rng.random_range(-1.0..1.0));
        let y = Mat::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let cxy = feature_cost(&x, &y).unwrap();
        let cyx = feature_cost(&y, &x).unwrap();
        assert!(cxy.transpose().sub(&cyx).max_abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = Mat::zeros(2, 3);
        let y = Mat::zeros(2, 2);
        assert!(feature_cost(&x, &y).is_err());
    }

    #[test]
    fn identical_adjacency_identity_plan_zero_diagonal() {
        let a = Mat::from_vec(2, 2, vec![0.2, 0.8, 0.8, 0.2]).unwrap();
        let plan = Mat::identity(2).scale(0.5);
        let j = structure_cost_apply(&a, &a, &plan).unwrap();
        // |a_ik - a_ik| terms vanish against the diagonal plan
        assert_eq!(j.get(0, 0), 0.0);
        assert_eq!(j.get(1, 1), 0.0);
    }

    #[test]
    fn zeros_vs_ones_uniform_plan() {
        let a = Mat::zeros(3, 3);
        let ac = Mat::from_fn(2, 2, |_, _| 1.0);
        let plan = Mat::from_fn(3, 2, |_, _| 1.0 / 6.0);
        let j = structure_cost_apply(&a, &ac, &plan).unwrap();
        for v in j.as_slice() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_quadruple_loop_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..5 {
            let n = rng.random_range(2..=5);
            let m = rng.random_range(2..=5);
            let mk_sym = |rng: &mut ChaCha20Rng, sz: usize| {
                let b = Mat::from_fn(sz, sz, |_, _| rng.random_range(0.0..1.0));
                b.add(&b.transpose()).scale(0.5)
            };
            let a = mk_sym(&mut rng, n);
            let ac = mk_sym(&mut rng, m);
            let plan = Mat::from_fn(n, m, |_, _| rng.random_range(0.0..1.0) / (n * m) as f64);
            let fast = structure_cost_apply(&a, &ac, &plan).unwrap();
            for i in 0..n {
                for j in 0..m {
                    let mut acc = 0.0;
                    for k in 0..n {
                        for l in 0..m {
                            acc += (a.get(i, k) - ac.get(j, l)).abs() * plan.get(k, l);
                        }
                    }
                    assert!((fast.get(i, j) - acc).abs() < 1e-12);
                }
            }
        }
    }
}
