//! Dense two-phase simplex used for exact zonotope point containment.
//!
//! Containment of `p` in `{c + G ξ : ‖ξ‖_∞ ≤ 1}` reduces to the linear
//! program `min t  s.t.  G ξ = p − c, |ξ_j| ≤ t`. The problems solved here
//! are small (tens of variables), so a plain dense tableau with Bland's
//! rule is adequate and terminates without cycling.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-7;
const MAX_PIVOTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LpOutcome {
    /// Minimal achievable `‖ξ‖_∞` over all solutions of `G ξ = d`.
    Optimal(f64),
    /// `d` is not in the range of `G`.
    Infeasible,
}

/// Solves `min ‖ξ‖_∞  s.t.  G ξ = d`.
pub(crate) fn min_inf_norm(g: &DMatrix<f64>, d: &DVector<f64>) -> LpOutcome {
    let n = g.nrows();
    let k = g.ncols();
    assert_eq!(d.len(), n, "rhs dimension must match row count");

    if k == 0 {
        return if d.amax() <= FEAS_TOL {
            LpOutcome::Optimal(0.0)
        } else {
            LpOutcome::Infeasible
        };
    }

    // Variables: p (k), q (k) with ξ = p − q, the scalar t, and slacks s (k)
    // for p_j + q_j + s_j = t. All non-negative.
    let nv = 3 * k + 1;
    let m = n + k;
    let mut a = DMatrix::<f64>::zeros(m, nv);
    let mut b = DVector::<f64>::zeros(m);
    for i in 0..n {
        for j in 0..k {
            a[(i, j)] = g[(i, j)];
            a[(i, k + j)] = -g[(i, j)];
        }
        b[i] = d[i];
    }
    for j in 0..k {
        a[(n + j, j)] = 1.0;
        a[(n + j, k + j)] = 1.0;
        a[(n + j, 2 * k)] = -1.0;
        a[(n + j, 2 * k + 1 + j)] = 1.0;
    }
    let mut c = DVector::<f64>::zeros(nv);
    c[2 * k] = 1.0;

    match solve(a, b, &c) {
        Some(obj) => LpOutcome::Optimal(obj.max(0.0)),
        None => LpOutcome::Infeasible,
    }
}

/// Two-phase primal simplex for `min c·x  s.t.  A x = b, x ≥ 0`.
///
/// Returns the optimal objective, or `None` when infeasible. The objectives
/// solved here are bounded below by construction (t ≥ 0), so unboundedness
/// is not reachable.
fn solve(mut a: DMatrix<f64>, mut b: DVector<f64>, c: &DVector<f64>) -> Option<f64> {
    let m = a.nrows();
    let nv = a.ncols();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for j in 0..nv {
                a[(i, j)] = -a[(i, j)];
            }
        }
    }

    // Tableau columns: original variables, one artificial per row, rhs.
    let total = nv + m;
    let mut t = DMatrix::<f64>::zeros(m + 1, total + 1);
    for i in 0..m {
        for j in 0..nv {
            t[(i, j)] = a[(i, j)];
        }
        t[(i, nv + i)] = 1.0;
        t[(i, total)] = b[i];
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    // Phase 1: minimize the sum of artificials. Reduced costs with the
    // artificial basis are the negated column sums; the rhs cell holds −z.
    for j in 0..=total {
        let mut s = 0.0;
        for i in 0..m {
            s += t[(i, j)];
        }
        t[(m, j)] = -s;
    }
    for i in 0..m {
        t[(m, nv + i)] = 0.0;
    }
    pivot_until_optimal(&mut t, &mut basis, nv)?;
    let phase1 = -t[(m, total)];
    if phase1 > FEAS_TOL {
        return None;
    }

    // Drive any leftover artificials out of the basis where possible;
    // rows where that fails are redundant and harmless at level zero.
    for i in 0..m {
        if basis[i] >= nv {
            if let Some(j) = (0..nv).find(|&j| t[(i, j)].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // Phase 2: rebuild the objective row from the true costs.
    for j in 0..=total {
        let mut r = if j < nv { c[j] } else { 0.0 };
        for i in 0..m {
            if basis[i] < nv {
                r -= c[basis[i]] * t[(i, j)];
            }
        }
        t[(m, j)] = r;
    }
    pivot_until_optimal(&mut t, &mut basis, nv)?;
    Some(-t[(m, total)])
}

/// Runs Bland-rule pivots until no original column has a negative reduced
/// cost. Artificial columns never enter.
fn pivot_until_optimal(t: &mut DMatrix<f64>, basis: &mut [usize], nv: usize) -> Option<()> {
    let m = basis.len();
    let total = t.ncols() - 1;
    for _ in 0..MAX_PIVOTS {
        let entering = (0..nv).find(|&j| t[(m, j)] < -PIVOT_TOL);
        let Some(j) = entering else {
            return Some(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = t[(i, j)];
            if aij > PIVOT_TOL {
                let ratio = t[(i, total)] / aij;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Unbounded descent cannot occur for the containment LP.
        let (row, _) = leave?;
        pivot(t, basis, row, j);
    }
    log::warn!("simplex pivot cap reached; returning current (feasible) objective");
    Some(())
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let ncols = t.ncols();
    let nrows = t.nrows();
    let piv = t[(row, col)];
    for j in 0..ncols {
        t[(row, j)] /= piv;
    }
    for i in 0..nrows {
        if i != row {
            let factor = t[(i, col)];
            if factor != 0.0 {
                for j in 0..ncols {
                    t[(i, j)] -= factor * t[(row, j)];
                }
            }
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn square_system_unique_solution() {
        // G = I, d = (0.5, -0.3): ξ = d, norm 0.5.
        let g = mat(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let d = DVector::from_row_slice(&[0.5, -0.3]);
        match min_inf_norm(&g, &d) {
            LpOutcome::Optimal(v) => assert!((v - 0.5).abs() < 1e-9),
            _ => panic!("expected optimal"),
        }
    }

    #[test]
    fn redundant_generators_spread_the_load() {
        // Two identical generators along x: reaching 1.6 needs 0.8 each.
        let g = mat(1, 2, &[1.0, 1.0]);
        let d = DVector::from_row_slice(&[1.6]);
        match min_inf_norm(&g, &d) {
            LpOutcome::Optimal(v) => assert!((v - 0.8).abs() < 1e-9),
            _ => panic!("expected optimal"),
        }
    }

    #[test]
    fn infeasible_when_rhs_off_range() {
        let g = mat(2, 1, &[1.0, 0.0]);
        let d = DVector::from_row_slice(&[0.5, 1.0]);
        assert_eq!(min_inf_norm(&g, &d), LpOutcome::Infeasible);
    }

    #[test]
    fn zero_generators() {
        let g = DMatrix::<f64>::zeros(2, 0);
        assert_eq!(
            min_inf_norm(&g, &DVector::from_row_slice(&[0.0, 0.0])),
            LpOutcome::Optimal(0.0)
        );
        assert_eq!(
            min_inf_norm(&g, &DVector::from_row_slice(&[1.0, 0.0])),
            LpOutcome::Infeasible
        );
    }

    #[test]
    fn zonogon_example() {
        // G = [[1,1],[0,1]], p - c = (2,1): ξ = (1,1), norm 1.
        let g = mat(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let d = DVector::from_row_slice(&[2.0, 1.0]);
        match min_inf_norm(&g, &d) {
            LpOutcome::Optimal(v) => assert!((v - 1.0).abs() < 1e-9),
            _ => panic!("expected optimal"),
        }
        // (2, -0.5): ξ₂ = -0.5, ξ₁ = 2.5 → norm 2.5, outside.
        let d = DVector::from_row_slice(&[2.0, -0.5]);
        match min_inf_norm(&g, &d) {
            LpOutcome::Optimal(v) => assert!((v - 2.5).abs() < 1e-9),
            _ => panic!("expected optimal"),
        }
    }

    #[test]
    fn random_solutions_are_inf_norm_minimal_vs_grid() {
        // Brute-force check on 1x2 systems: minimal t over a fine grid of
        // the one-dimensional solution family.
        let g = mat(1, 2, &[2.0, -1.0]);
        let d = DVector::from_row_slice(&[0.7]);
        let lp = match min_inf_norm(&g, &d) {
            LpOutcome::Optimal(v) => v,
            _ => panic!("expected optimal"),
        };
        let mut best = f64::INFINITY;
        let mut s = -5.0;
        while s <= 5.0 {
            // family: ξ = (0.35, 0) + s·(1, 2)
            let xi: [f64; 2] = [0.35 + s, 2.0 * s];
            best = best.min(xi[0].abs().max(xi[1].abs()));
            s += 1e-4;
        }
        assert!((lp - best).abs() < 1e-3, "lp={lp} grid={best}");
    }
}
