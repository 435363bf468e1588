//! Downstream of the learned plan: discretizing it into a semantic
//! assignment, transferring labels through the traceable harmonizer,
//! scoring source-node significance, selecting training nodes, and
//! test-time fine-tuning of the assignment.

use crate::error::{Error, Result};
use crate::numkit::Mat;
use crate::ot::{wasserstein_plan, OtConfig, TransportPlan};

/// Row-stochastic source-to-condensed assignment. Freshly discretized
/// instances are one-hot per row; fine-tune blending keeps rows summing to
/// one with entries in [0, 1].
#[derive(Clone, Debug)]
pub struct AssignmentMatrix {
    pub entries: Mat,
}

impl AssignmentMatrix {
    pub fn source_len(&self) -> usize {
        self.entries.rows()
    }

    pub fn target_len(&self) -> usize {
        self.entries.cols()
    }

    /// The set of source nodes assigned to condensed node `j` under the
    /// hard (argmax) reading; the provenance export is built from this.
    pub fn preimage(&self, j: usize) -> Vec<usize> {
        (0..self.entries.rows())
            .filter(|&i| row_argmax(self.entries.row(i)) == j)
            .collect()
    }
}

/// Node significance scores: row sums of the column-wise top-H masked plan.
#[derive(Clone, Debug)]
pub struct SignificanceScores {
    pub scores: Vec<f64>,
    pub top_h: usize,
}

fn row_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, &v) in row.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    best
}

/// Row-wise argmax one-hot discretization of a transport plan; ties break
/// toward the lowest column index.
pub fn discretize_plan(plan: &TransportPlan) -> AssignmentMatrix {
    discretize_matrix(&plan.coupling)
}

pub(crate) fn discretize_matrix(coupling: &Mat) -> AssignmentMatrix {
    let mut arg = vec![0usize; coupling.rows()];
    for (i, a) in arg.iter_mut().enumerate() {
        *a = row_argmax(coupling.row(i));
    }
    let entries = Mat::from_fn(coupling.rows(), coupling.cols(), |i, j| {
        if arg[i] == j {
            1.0
        } else {
            0.0
        }
    });
    AssignmentMatrix { entries }
}

/// Label transfer `Y~ = D^{-1} M_Omega^T Y_tr`: each condensed node gets
/// the mean training label of its assigned source nodes. `D` generalizes
/// to the column sums of the (possibly soft) sub-assignment, which reduces
/// to the one-hot count diagonal for freshly discretized assignments.
///
/// Condensed nodes with no assigned training mass get a zero label row and
/// `false` in the returned coverage mask; callers must exclude them from
/// supervised losses.
pub fn harmonize_labels(
    m: &AssignmentMatrix,
    y_tr: &Mat,
    omega: &[usize],
) -> Result<(Mat, Vec<bool>)> {
    if omega.is_empty() {
        return Err(Error::invalid("label harmonizer needs a non-empty training set"));
    }
    if y_tr.rows() != omega.len() {
        return Err(Error::shape(format!(
            "{} training labels for {} training indices",
            y_tr.rows(),
            omega.len()
        )));
    }
    let n = m.source_len();
    let mut seen = vec![false; n];
    for &i in omega {
        if i >= n {
            return Err(Error::invalid(format!("training index {i} out of range (n = {n})")));
        }
        if seen[i] {
            return Err(Error::invalid(format!("duplicate training index {i}")));
        }
        seen[i] = true;
    }

    let cols = m.target_len();
    let c = y_tr.cols();
    let mut sums = Mat::zeros(cols, c);
    let mut mass = vec![0.0; cols];
    for (k, &i) in omega.iter().enumerate() {
        let weights = m.entries.row(i);
        let label = y_tr.row(k);
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            mass[j] += w;
            for (d, &y) in label.iter().enumerate() {
                let v = sums.get(j, d) + w * y;
                sums.set(j, d, v);
            }
        }
    }
    let mut coverage = vec![false; cols];
    for j in 0..cols {
        if mass[j] > 0.0 {
            coverage[j] = true;
            for d in 0..c {
                let v = sums.get(j, d) / mass[j];
                sums.set(j, d, v);
            }
        }
    }
    Ok((sums, coverage))
}

/// Keep the H largest entries of every plan column (ties toward the lower
/// row index), zero the rest, and sum the surviving mass per source row.
pub fn node_significance(plan: &TransportPlan, h: usize) -> Result<SignificanceScores> {
    let n = plan.source_len();
    if h == 0 || h > n {
        return Err(Error::invalid(format!("need 1 <= h <= {n}, got {h}")));
    }
    let m = plan.target_len();
    let mut scores = vec![0.0; n];
    for j in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            plan.coupling
                .get(b, j)
                .partial_cmp(&plan.coupling.get(a, j))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(h) {
            scores[i] += plan.coupling.get(i, j);
        }
    }
    Ok(SignificanceScores { scores, top_h: h })
}

/// Indices of the `budget` highest significance scores, ties toward the
/// lower index; returned in rank order.
pub fn select_training_set(scores: &SignificanceScores, budget: usize) -> Result<Vec<usize>> {
    let n = scores.scores.len();
    if budget > n {
        return Err(Error::invalid(format!("budget {budget} exceeds node count {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.scores[b]
            .partial_cmp(&scores.scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(budget);
    Ok(order)
}

/// Test-time refinement `M <- decay * M + (1 - decay) * M_up`, where
/// `M_up` discretizes the prediction-space transport plan between model
/// outputs on the original and condensed graphs. The raw plan would also
/// work as `M_up`; the discretized form keeps the update consistent with
/// how assignments are defined.
pub fn finetune_assignment(
    m: &AssignmentMatrix,
    y_hat: &Mat,
    y_hat_c: &Mat,
    decay: f64,
    cfg: &OtConfig,
) -> Result<AssignmentMatrix> {
    if !(0.0..=1.0).contains(&decay) {
        return Err(Error::invalid(format!("decay must be in [0, 1], got {decay}")));
    }
    if y_hat.rows() != m.source_len() || y_hat_c.rows() != m.target_len() {
        return Err(Error::shape("prediction shapes do not match the assignment".to_string()));
    }
    let (plan, _) = wasserstein_plan(y_hat, y_hat_c, cfg)?;
    let m_up = discretize_plan(&plan);
    let entries = m
        .entries
        .zip_with(&m_up.entries, |old, new| decay * old + (1.0 - decay) * new);
    Ok(AssignmentMatrix { entries })
}
