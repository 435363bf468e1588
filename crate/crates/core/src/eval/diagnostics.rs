use crate::error::{Error, Result};
use crate::eval::{propagated_design, sgc_closed_form, GraphView};
use crate::graph::{CondensedGraph, Graph};
use crate::harmonize::AssignmentMatrix;
use crate::numkit::{pinv, sq_dist, Mat, PINV_TOL};

/// Labeled reconstruction error: the average over `k = 0..=k_max` of the
/// Frobenius gap between class-mean propagated features of the original
/// and condensed graphs,
/// `(1/max(k_max, 1)) * sum_k || Y^+ A^k X - Y~^+ A~^k X~ ||_F`.
pub fn lre(g: &Graph, y: &Mat, gc: &CondensedGraph, yc: &Mat, k_max: usize) -> Result<f64> {
    if y.rows() != g.n || yc.rows() != gc.m {
        return Err(Error::shape("label row counts do not match the graphs".to_string()));
    }
    let y_pinv = pinv(y, PINV_TOL)?;
    let yc_pinv = pinv(yc, PINV_TOL)?;
    let mut zx = g.features.clone();
    let mut zxc = gc.features.clone();
    let mut total = 0.0;
    for k in 0..=k_max {
        if k > 0 {
            zx = g.adjacency.matmul(&zx);
            zxc = gc.adjacency.matmul(&zxc);
        }
        total += y_pinv.matmul(&zx).sub(&yc_pinv.matmul(&zxc)).frob_norm();
    }
    Ok(total / k_max.max(1) as f64)
}

/// Mean distance from each selected node to its nearest other selected
/// node in the given embedding.
pub fn avg_nn_distance(z: &Mat, selected: &[usize]) -> Result<f64> {
    if selected.len() < 2 {
        return Err(Error::invalid("nearest-neighbor distance needs at least 2 nodes"));
    }
    if selected.iter().any(|&i| i >= z.rows()) {
        return Err(Error::invalid("selected index out of range"));
    }
    let mut total = 0.0;
    for &i in selected {
        let mut nearest = f64::INFINITY;
        for &j in selected {
            if i == j {
                continue;
            }
            nearest = nearest.min(sq_dist(z.row(i), z.row(j)));
        }
        total += nearest.sqrt();
    }
    Ok(total / selected.len() as f64)
}

/// Outcome of the performance-approximation bound check.
#[derive(Clone, Copy, Debug)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Numeric check of the bound
/// `||W - W~||_F <= ||M(Y)||_F * ||M(A^K X)^+ - (A~^K X~)^+||_F
///                + ||M(Y) - Y~||_F * ||(A~^K X~)^+||_F`
/// where `M` is the normalized aggregation `D^{-1} M^T` of the assignment
/// applied to N-row objects, and `W`, `W~` are the closed-form SGC weights
/// of each graph.
pub fn prop1_bound_check(
    g: &Graph,
    gc: &CondensedGraph,
    y: &Mat,
    yc: &Mat,
    k: usize,
    mapping: &AssignmentMatrix,
) -> Result<BoundCheck> {
    if mapping.source_len() != g.n || mapping.target_len() != gc.m {
        return Err(Error::shape("assignment shape does not match the graphs".to_string()));
    }
    let w = sgc_closed_form(&g.adjacency, &g.features, y, k, 0.0)?.weights;
    let w_tilde = sgc_closed_form(&gc.adjacency, &gc.features, yc, k, 0.0)?.weights;
    let lhs = w.sub(&w_tilde).frob_norm();

    let aggregate = |obj: &Mat| -> Mat {
        // D^{-1} M^T obj with D the diagonal of assignment column sums;
        // empty columns aggregate to zero rows.
        let col_mass = mapping.entries.col_sums();
        let mut out = mapping.entries.transpose().matmul(obj);
        for (j, &mass) in col_mass.iter().enumerate() {
            if mass > 0.0 {
                for v in out.row_mut(j) {
                    *v /= mass;
                }
            }
        }
        out
    };

    let z = propagated_design(GraphView { adjacency: &g.adjacency, features: &g.features }, k);
    let z_tilde = propagated_design(
        GraphView {
            adjacency: &gc.adjacency,
            features: &gc.features,
        },
        k,
    );
    let agg_y = aggregate(y);
    let agg_z = aggregate(&z);
    let agg_z_pinv = pinv(&agg_z, PINV_TOL)?;
    let zt_pinv = pinv(&z_tilde, PINV_TOL)?;

    let reconstruction = agg_z_pinv.sub(&zt_pinv).frob_norm();
    let fitting = agg_y.sub(yc).frob_norm();
    let rhs = agg_y.frob_norm() * reconstruction + fitting * zt_pinv.frob_norm();
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{default_centers, normalize_adjacency, sbm_generate};
    use crate::harmonize::discretize_matrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn labeled_graph(seed: u64) -> (Graph, Mat) {
        let g = sbm_generate(&[4, 4], 0.8, 0.2, &default_centers(2, 3, 2.0), 0.3, seed).unwrap();
        let y = g.labels.clone().unwrap();
        (g, y)
    }

    /// Random condensed instance: normalized random adjacency, aggregated
    /// features with noise, harmonized labels.
    fn condensed_instance(
        g: &Graph,
        y: &Mat,
        m: usize,
        seed: u64,
    ) -> (CondensedGraph, Mat, AssignmentMatrix) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let raw = {
            let b = Mat::from_fn(m, m, |i, j| {
                if i == j {
                    0.0
                } else if rng.random_range(0.0..1.0) < 0.6 {
                    1.0
                } else {
                    0.0
                }
            });
            b.add(&b.transpose()).map(|v| if v > 0.0 { 1.0 } else { 0.0 })
        };
        let ac = normalize_adjacency(&raw, true).unwrap();
        let coupling = Mat::from_fn(g.n, m, |_, _| rng.random_range(0.0..1.0));
        let mapping = discretize_matrix(&coupling);
        // aggregated features + noise
        let col_mass = mapping.entries.col_sums();
        let mut xc = mapping.entries.transpose().matmul(&g.features);
        for (j, &mass) in col_mass.iter().enumerate() {
            if mass > 0.0 {
                for v in xc.row_mut(j) {
                    *v = *v / mass + rng.random_range(-0.05..0.05);
                }
            } else {
                for v in xc.row_mut(j) {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
        }
        let mut yc = mapping.entries.transpose().matmul(y);
        for (j, &mass) in col_mass.iter().enumerate() {
            if mass > 0.0 {
                for v in yc.row_mut(j) {
                    *v /= mass;
                }
            }
        }
        (CondensedGraph::new(ac, xc, None).unwrap(), yc, mapping)
    }

    #[test]
    fn lre_identical_graphs_zero() {
        let (g, y) = labeled_graph(1);
        let gc = CondensedGraph::new(g.adjacency.clone(), g.features.clone(), None).unwrap();
        for k in 0..4 {
            let v = lre(&g, &y, &gc, &y, k).unwrap();
            assert_eq!(v, 0.0, "k = {k}");
        }
    }

    #[test]
    fn lre_zero_order_is_centroid_gap() {
        let (g, y) = labeled_graph(2);
        let (gc, yc, _) = condensed_instance(&g, &y, 3, 7);
        let v = lre(&g, &y, &gc, &yc, 0).unwrap();
        let expect = pinv(&y, PINV_TOL)
            .unwrap()
            .matmul(&g.features)
            .sub(&pinv(&yc, PINV_TOL).unwrap().matmul(&gc.features))
            .frob_norm();
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn avg_nn_basics() {
        let z = Mat::from_vec(2, 1, vec![0.0, 3.0]).unwrap();
        assert_eq!(avg_nn_distance(&z, &[0, 1]).unwrap(), 3.0);
        let dup = Mat::from_vec(3, 1, vec![1.0, 1.0, 5.0]).unwrap();
        let d = avg_nn_distance(&dup, &[0, 1]).unwrap();
        assert_eq!(d, 0.0);
        assert!(avg_nn_distance(&z, &[0]).is_err());
    }

    #[test]
    fn avg_nn_translation_and_scale() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let z = Mat::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
        let sel = [0usize, 2, 3, 5];
        let base = avg_nn_distance(&z, &sel).unwrap();
        let shifted = z.map(|v| v + 11.5);
        assert!((avg_nn_distance(&shifted, &sel).unwrap() - base).abs() < 1e-9);
        let scaled = z.scale(3.0);
        assert!((avg_nn_distance(&scaled, &sel).unwrap() - 3.0 * base).abs() < 1e-9);
    }

    #[test]
    fn bound_trivial_identity_instance() {
        let (g, y) = labeled_graph(3);
        let gc = CondensedGraph::new(g.adjacency.clone(), g.features.clone(), None).unwrap();
        let mapping = AssignmentMatrix {
            entries: Mat::identity(g.n),
        };
        let chk = prop1_bound_check(&g, &gc, &y, &y, 2, &mapping).unwrap();
        assert!(chk.lhs.abs() < 1e-9);
        assert!(chk.rhs.abs() < 1e-7);
        assert!(chk.holds);
    }

    /// Seeded instances whose original graph is a noisy lift of a
    /// condensed prototype (the regime where a faithful condensation
    /// exists and the bound is informative): duplicated nodes, duplicated
    /// labels, feature noise.
    pub(crate) fn lifted_instance(
        m: usize,
        f: usize,
        eta: f64,
        seed: u64,
    ) -> (Graph, CondensedGraph, Mat, Mat, AssignmentMatrix) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let raw = {
            let b = Mat::from_fn(m, m, |i, j| {
                if i != j && rng.random_range(0.0..1.0f64) < 0.6 {
                    1.0
                } else {
                    0.0
                }
            });
            b.add(&b.transpose()).map(|v| if v > 0.0 { 1.0 } else { 0.0 })
        };
        let atil = normalize_adjacency(&raw, true).unwrap();
        let xtil = Mat::from_fn(m, f, |_, _| rng.random_range(-1.0..1.0));
        let c = 2;
        let ytil = Mat::from_fn(m, c, |i, j| if i % c == j { 1.0 } else { 0.0 });

        let n = 2 * m;
        let assign = Mat::from_fn(n, m, |i, j| if i / 2 == j { 1.0 } else { 0.0 });
        // A = (1/2) M Atil M^T keeps symmetry and the prototype spectrum
        let a = Mat::from_fn(n, n, |i, j| atil.get(i / 2, j / 2) / 2.0);
        let x = Mat::from_fn(n, f, |i, j| {
            xtil.get(i / 2, j) + eta * rng.random_range(-1.0..1.0)
        });
        let y = Mat::from_fn(n, c, |i, j| ytil.get(i / 2, j));
        let g = Graph::new(a, x, Some(y.clone()), None).unwrap();
        let gc = CondensedGraph::new(atil, xtil, None).unwrap();
        (g, gc, y, ytil, AssignmentMatrix { entries: assign })
    }

    #[test]
    fn bound_holds_on_lifted_instances() {
        for seed in 0..50 {
            let (g, gc, y, yc, mapping) = lifted_instance(4, 6, 0.1, seed);
            for k in [1usize, 2, 3] {
                let chk = prop1_bound_check(&g, &gc, &y, &yc, k, &mapping).unwrap();
                assert!(
                    chk.holds,
                    "seed {seed} k {k}: lhs {} rhs {}",
                    chk.lhs, chk.rhs
                );
            }
        }
    }

    #[test]
    fn fitting_term_monotone_under_label_perturbation() {
        // Condensed labels are perturbed inside ker((A~^K X~)^+) so the
        // closed-form weights (hence the lhs) stay fixed while the fitting
        // term strictly grows.
        let (g, y) = labeled_graph(6);
        // feature dim 3 < m = 5 makes the design rank-deficient
        let (gc, yc, mapping) = condensed_instance(&g, &y, 5, 11);
        let k = 2;
        let base = prop1_bound_check(&g, &gc, &y, &yc, k, &mapping).unwrap();

        let z_tilde = propagated_design(
            GraphView {
                adjacency: &gc.adjacency,
                features: &gc.features,
            },
            k,
        );
        let zt_pinv = pinv(&z_tilde, PINV_TOL).unwrap();
        // projector onto ker(Z~^+) = I - Z~ Z~^+ acting on M-row objects
        let proj = Mat::identity(gc.m).sub(&z_tilde.matmul(&zt_pinv));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let dir = proj.matmul(&Mat::from_fn(gc.m, yc.cols(), |_, _| rng.random_range(-1.0..1.0)));
        assert!(dir.frob_norm() > 1e-8, "kernel direction degenerate");
        let yc_pert = yc.add(&dir.scale(2.0));
        let pert = prop1_bound_check(&g, &gc, &y, &yc_pert, k, &mapping).unwrap();
        assert!((pert.lhs - base.lhs).abs() < 1e-6, "lhs moved: {} vs {}", base.lhs, pert.lhs);
        assert!(pert.rhs > base.rhs + 1e-6, "rhs not increased: {} vs {}", base.rhs, pert.rhs);
    }
}
