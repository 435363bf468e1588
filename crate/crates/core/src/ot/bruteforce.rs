use crate::error::{Error, Result};
use crate::numkit::Mat;

const MAX_N: usize = 6;

/// Exhaustive uniform-marginal OT oracle for square costs with `n <= 6`.
///
/// The optimum of a linear program over the Birkhoff polytope is attained
/// at a permutation matrix, so enumerating permutations and scoring
/// `(1/n) sum_i cost[i, sigma(i)]` is exact.
pub fn exact_ot_bruteforce(cost: &Mat) -> Result<(f64, Vec<usize>)> {
    if !cost.is_square() {
        return Err(Error::shape("brute-force oracle needs a square cost".to_string()));
    }
    let n = cost.rows();
    if n == 0 {
        return Err(Error::invalid("empty cost matrix"));
    }
    if n > MAX_N {
        return Err(Error::invalid(format!(
            "brute-force oracle refuses n = {n} > {MAX_N} (combinatorial blow-up)"
        )));
    }
    cost.check_finite("bruteforce cost")?;

    let mut perm: Vec<usize> = (0..n).collect();
    let mut best_value = f64::INFINITY;
    let mut best_perm = perm.clone();
    permute(&mut perm, 0, &mut |p| {
        let value: f64 = p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum::<f64>() / n as f64;
        if value < best_value {
            best_value = value;
            best_perm = p.to_vec();
        }
    });
    Ok((best_value, best_perm))
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
