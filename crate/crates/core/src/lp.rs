//! Dense two-phase simplex method for tiny instances.
//!
//! Solves `max cᵀz  s.t.  A z = b, z >= 0` with Bland's rule, so it is
//! slow but never cycles. Instances here have at most a few hundred columns.

const PIVOT_EPS: f64 = 1e-12;
const COST_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { z: Vec<f64>, value: f64 },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width - 1]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    /// Primal simplex over columns `0..allowed`, maximizing `cost`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .rows
                        .iter()
                        .zip(&self.basis)
                        .map(|(row, &b)| cost[b] * row[j])
                        .sum::<f64>();
                reduced > COST_EPS
            });
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-15
                                || ((ratio - bratio).abs() <= 1e-15 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
        // Bland's rule terminates; reaching here means numerical breakdown.
        false
    }
}

/// Maximizes `cᵀz` over `{z >= 0 : A z = b}`; `feas_tol` bounds the phase-1
/// residual (sum of artificial variables) accepted as feasible.
pub(crate) fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64], feas_tol: f64) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut t = vec![0.0; width];
        for (j, v) in row.iter().enumerate() {
            t[j] = sign * v;
        }
        t[n + i] = 1.0;
        t[width - 1] = sign * b[i];
        rows.push(t);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        width,
    };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = -1.0);
    tab.optimize(&phase1, n + m);
    let infeasibility: f64 = (0..m)
        .filter(|&r| tab.basis[r] >= n)
        .map(|r| tab.rhs(r).max(0.0))
        .sum();
    if infeasibility > feas_tol {
        return LpOutcome::Infeasible;
    }

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            let col = (0..n)
                .filter(|j| !tab.basis.contains(j))
                .max_by(|&i, &j| tab.rows[r][i].abs().total_cmp(&tab.rows[r][j].abs()))
                .filter(|&j| tab.rows[r][j].abs() > 1e-9);
            match col {
                Some(col) => tab.pivot(r, col),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut cost = vec![0.0; n + m];
    cost[..n].copy_from_slice(c);
    if !tab.optimize(&cost, n) {
        return LpOutcome::Unbounded;
    }
    let mut z = vec![0.0; n];
    for (r, &bcol) in tab.basis.iter().enumerate() {
        if bcol < n {
            z[bcol] = tab.rhs(r).max(0.0);
        }
    }
    let value = z.iter().zip(c).map(|(u, v)| u * v).sum();
    LpOutcome::Optimal { z, value }
}

/// Finds some `z >= 0` with `A z = b`, if one exists.
pub(crate) fn feasible_point(a: &[Vec<f64>], b: &[f64], feas_tol: f64) -> Option<Vec<f64>> {
    let n = a.first().map_or(0, Vec::len);
    match maximize(a, b, &vec![0.0; n], feas_tol) {
        LpOutcome::Optimal { z, .. } => Some(z),
        _ => None,
    }
}

/// Constraint rows `[f_1 .. f_s; 1 .. 1]` for convex combinations of `points`.
pub(crate) fn convex_combination_rows(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = points.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<f64>> = (0..d)
        .map(|i| points.iter().map(|p| p[i]).collect())
        .collect();
    rows.push(vec![1.0; points.len()]);
    rows
}

pub(crate) fn in_convex_hull(points: &[Vec<f64>], x: &[f64], feas_tol: f64) -> bool {
    if points.is_empty() {
        return false;
    }
    let a = convex_combination_rows(points);
    let mut b = x.to_vec();
    b.push(1.0);
    feasible_point(&a, &b, feas_tol).is_some()
}
