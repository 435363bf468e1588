//! Property tests for the crate-wide invariants.

use pregc_core::diffusion::{coverage_gap, propagate};
use pregc_core::graph::{laplacian, normalize_adjacency};
use pregc_core::harmonize::{discretize_plan, finetune_assignment, AssignmentMatrix};
use pregc_core::numkit::{lambda_max_sym, pinv, sym_eigenvalues, Mat, PINV_TOL};
use pregc_core::ot::{feature_cost, sinkhorn, uniform_marginal, OtConfig, TransportPlan};
use proptest::prelude::*;

fn mat_strategy(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Mat> {
    proptest::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Mat::from_vec(rows, cols, v).unwrap())
}

fn sym_strategy(n: usize) -> impl Strategy<Value = Mat> {
    mat_strategy(n, n, -1.0, 1.0).prop_map(|m| m.add(&m.transpose()).scale(0.5))
}

// Random simple graph with no isolated node (a ring base guarantees
// connectivity), returned as a normalized adjacency.
fn graph_strategy(n: usize) -> impl Strategy<Value = Mat> {
    proptest::collection::vec(proptest::bool::ANY, n * n).prop_map(move |bits| {
        let mut raw = Mat::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            raw.set(i, j, 1.0);
            raw.set(j, i, 1.0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if bits[i * n + j] {
                    raw.set(i, j, 1.0);
                    raw.set(j, i, 1.0);
                }
            }
        }
        normalize_adjacency(&raw, true).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// All four Penrose conditions within 1e-8 relative error.
    #[test]
    fn pinv_penrose(rows in 1usize..7, cols in 1usize..7, seed in 0u64..1000) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let a = Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let p = pinv(&a, PINV_TOL).unwrap();
        let scale = a.frob_norm().max(1.0);
        prop_assert!(a.matmul(&p).matmul(&a).sub(&a).frob_norm() <= 1e-8 * scale);
        prop_assert!(p.matmul(&a).matmul(&p).sub(&p).frob_norm() <= 1e-8 * p.frob_norm().max(1.0));
        let ap = a.matmul(&p);
        prop_assert!(ap.sub(&ap.transpose()).frob_norm() <= 1e-8 * ap.frob_norm().max(1.0));
        let pa = p.matmul(&a);
        prop_assert!(pa.sub(&pa.transpose()).frob_norm() <= 1e-8 * pa.frob_norm().max(1.0));
    }

    /// The dominant eigenvalue magnitude never exceeds the Frobenius norm.
    #[test]
    fn lambda_max_below_frobenius(a in sym_strategy(5)) {
        let (l, _) = lambda_max_sym(&a, 1e-9, 3000).unwrap();
        prop_assert!(l <= a.frob_norm() + 1e-9);
    }

    /// Normalized-graph Laplacians are positive semidefinite with spectrum
    /// inside [0, 2].
    #[test]
    fn laplacian_psd(a in graph_strategy(6)) {
        let l = laplacian(&a).unwrap();
        let eigs = sym_eigenvalues(&l, 80).unwrap();
        prop_assert!(eigs[0] >= -1e-9, "min eigenvalue {}", eigs[0]);
        prop_assert!(*eigs.last().unwrap() <= 2.0 + 1e-9);
    }

    /// Heat propagation never grows the Frobenius norm inside the
    /// admissible interval.
    #[test]
    fn propagation_is_stable(a in graph_strategy(6), frac in 0.0f64..1.0, steps in 1usize..6) {
        let lam = {
            let l = laplacian(&a).unwrap();
            sym_eigenvalues(&l, 80).unwrap().last().copied().unwrap().max(1e-9)
        };
        let dt = frac * 2.0 / lam;
        let x = Mat::from_fn(6, 3, |i, j| ((i * 3 + j) as f64).sin());
        let z = propagate(&a, &x, dt, steps).unwrap();
        prop_assert!(z.frob_norm() <= x.frob_norm() + 1e-6);
    }

    /// Sinkhorn plans satisfy the marginal constraints for any rectangular
    /// cost scale.
    #[test]
    fn sinkhorn_marginals(n in 2usize..6, m in 2usize..6, scale in 0.1f64..5.0, seed in 0u64..500) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let cost = Mat::from_fn(n, m, |_, _| rng.random_range(0.0..scale));
        let mu = uniform_marginal(n);
        let nu = uniform_marginal(m);
        let plan = sinkhorn(&cost, &mu, &nu, &OtConfig::default()).unwrap();
        for (r, want) in plan.coupling.row_sums().iter().zip(&mu) {
            prop_assert!((r - want).abs() < 1e-6);
        }
        for (c, want) in plan.coupling.col_sums().iter().zip(&nu) {
            prop_assert!((c - want).abs() < 1e-6);
        }
        let mass: f64 = plan.coupling.as_slice().iter().sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
    }

    /// feature_cost(x, y)^T = feature_cost(y, x).
    #[test]
    fn feature_cost_transpose_symmetry(x in mat_strategy(4, 3, -2.0, 2.0), y in mat_strategy(5, 3, -2.0, 2.0)) {
        let cxy = feature_cost(&x, &y).unwrap();
        let cyx = feature_cost(&y, &x).unwrap();
        prop_assert!(cxy.transpose().sub(&cyx).max_abs() < 1e-12);
    }

    /// Appending a sample never increases the coverage gap.
    #[test]
    fn coverage_gap_monotone(extra in 0.05f64..0.95, seedlist in proptest::collection::vec(0.05f64..0.95, 1..10)) {
        let eigs = [0.3, 1.0, 1.9];
        let base = coverage_gap(&eigs, &seedlist, (0.05, 0.95), 200, 5).unwrap();
        let mut grown = seedlist.clone();
        grown.push(extra);
        let after = coverage_gap(&eigs, &grown, (0.05, 0.95), 200, 5).unwrap();
        prop_assert!(after <= base + 1e-15);
    }

    /// Blending row-stochastic assignments stays row-stochastic for any
    /// decay in [0, 1].
    #[test]
    fn blend_stays_row_stochastic(decay in 0.0f64..1.0, seed in 0u64..500) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let (n, m) = (5, 3);
        let mut soft = Mat::from_fn(n, m, |_, _| rng.random_range(0.01..1.0));
        for i in 0..n {
            let s: f64 = soft.row(i).iter().sum();
            for v in soft.row_mut(i) {
                *v /= s;
            }
        }
        let assignment = AssignmentMatrix { entries: soft };
        let y_hat = Mat::from_fn(n, 2, |_, _| rng.random_range(0.0..1.0));
        let y_hat_c = Mat::from_fn(m, 2, |_, _| rng.random_range(0.0..1.0));
        let out = finetune_assignment(&assignment, &y_hat, &y_hat_c, decay, &OtConfig::default()).unwrap();
        for i in 0..n {
            let s: f64 = out.entries.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(out.entries.row(i).iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
    }

    /// Discretization is idempotent.
    #[test]
    fn discretize_idempotent(coupling in mat_strategy(6, 3, 0.0, 1.0)) {
        let plan = TransportPlan {
            mu: coupling.row_sums(),
            nu: coupling.col_sums(),
            coupling,
            objective: 0.0,
        };
        let once = discretize_plan(&plan);
        let again = discretize_plan(&TransportPlan {
            mu: once.entries.row_sums(),
            nu: once.entries.col_sums(),
            coupling: once.entries.clone(),
            objective: 0.0,
        });
        prop_assert_eq!(once.entries, again.entries);
    }
}
