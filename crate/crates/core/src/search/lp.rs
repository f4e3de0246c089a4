//! Minimal dense phase-1 simplex used to decide convex-domination
//! feasibility: whether a target point is componentwise dominated by some
//! convex combination of generator points. Bland's rule keeps the pivoting
//! from cycling; an iteration cap guards against pathological tableaus.

const PIVOT_EPS: f64 = 1e-12;
const MAX_ITERS: usize = 20_000;

/// True iff there exists lambda >= 0 with sum lambda = 1 and
/// sum_i lambda_i * gens[i] >= q (componentwise), up to `tol`.
pub(crate) fn convex_dominates(gens: &[[f64; 3]], q: [f64; 3], tol: f64) -> bool {
    let m = gens.len();
    if m == 0 {
        return false;
    }
    let rows = 4;
    let cols = m + 3 + rows; // lambda, surplus, artificial
    let rhs = cols;
    let mut t = vec![vec![0.0f64; cols + 1]; rows];
    for r in 0..3 {
        for (i, g) in gens.iter().enumerate() {
            t[r][i] = g[r];
        }
        t[r][m + r] = -1.0;
        t[r][rhs] = q[r];
    }
    for i in 0..m {
        t[3][i] = 1.0;
    }
    t[3][rhs] = 1.0;
    for (r, row) in t.iter_mut().enumerate() {
        if row[rhs] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[m + 3 + r] = 1.0;
    }
    // Phase-1 objective: minimize the artificial sum. In tableau form the
    // objective row starts as the sum of the constraint rows with the
    // artificial columns zeroed.
    let mut obj = vec![0.0f64; cols + 1];
    for row in &t {
        for (o, v) in obj.iter_mut().zip(row) {
            *o += v;
        }
    }
    for r in 0..rows {
        obj[m + 3 + r] = 0.0;
    }
    let mut basis = [m + 3, m + 4, m + 5, m + 6];
    for _ in 0..MAX_ITERS {
        let Some(enter) = (0..m + 3).find(|&j| obj[j] > tol) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..rows {
            if t[r][enter] > PIVOT_EPS {
                let ratio = t[r][rhs] / t[r][enter];
                let better = ratio < best - PIVOT_EPS
                    || (ratio < best + PIVOT_EPS
                        && leave.is_none_or(|lr| basis[r] < basis[lr]));
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(r) = leave else {
            // Unbounded improving direction cannot occur in phase 1; bail.
            break;
        };
        let piv = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        for rr in 0..rows {
            if rr != r {
                let f = t[rr][enter];
                if f != 0.0 {
                    for k in 0..=cols {
                        t[rr][k] -= f * t[r][k];
                    }
                }
            }
        }
        let f = obj[enter];
        if f != 0.0 {
            for k in 0..=cols {
                obj[k] -= f * t[r][k];
            }
        }
        basis[r] = enter;
    }
    obj[rhs].abs() <= tol
}
