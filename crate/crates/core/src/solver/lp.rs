//! Small linear feasibility problems solved with `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Linear constraint `coeffs · x (cmp) rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<f64>, cmp: Cmp, rhs: f64) -> Row {
        Row { coeffs, cmp, rhs }
    }
}

/// Minimizes `objective · x` subject to box bounds and rows. Returns the
/// minimizer, or `None` when the system is infeasible or the LP fails.
pub fn minimize(objective: &[f64], bounds: &[(f64, f64)], rows: &[Row]) -> Option<(Vec<f64>, f64)> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = objective
        .iter()
        .zip(bounds)
        .map(|(c, b)| problem.add_var(*c, *b))
        .collect();
    for row in rows {
        let expr: Vec<_> = row
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (vars[j], *c))
            .collect();
        let op = match row.cmp {
            Cmp::Le => ComparisonOp::Le,
            Cmp::Ge => ComparisonOp::Ge,
            Cmp::Eq => ComparisonOp::Eq,
        };
        if expr.is_empty() {
            let ok = match row.cmp {
                Cmp::Le => 0.0 <= row.rhs,
                Cmp::Ge => 0.0 >= row.rhs,
                Cmp::Eq => row.rhs == 0.0,
            };
            if !ok {
                return None;
            }
            continue;
        }
        problem.add_constraint(expr.as_slice(), op, row.rhs);
    }
    let outcome = problem.solve().ok()?;
    let solution = outcome.solution()?;
    let x = vars.iter().map(|v| solution.var_value(*v)).collect();
    Some((x, solution.objective()))
}

/// Whether the constraint system has a solution.
pub fn is_feasible(bounds: &[(f64, f64)], rows: &[Row]) -> bool {
    minimize(&vec![0.0; bounds.len()], bounds, rows).is_some()
}

/// Whether `target` lies in the convex hull of `points`, up to an L1
/// residual of `tol` per coordinate.
pub fn in_convex_hull(points: &[Vec<f64>], target: &[f64], tol: f64) -> bool {
    let k = points.len();
    let m = target.len();
    // variables: λ (k), s⁺ (m), s⁻ (m)
    let nvar = k + 2 * m;
    let mut objective = vec![0.0; nvar];
    objective[k..].iter_mut().for_each(|c| *c = 1.0);
    let bounds = vec![(0.0, f64::INFINITY); nvar];
    let mut rows = Vec::with_capacity(m + 1);
    let mut sum = vec![0.0; nvar];
    sum[..k].iter_mut().for_each(|c| *c = 1.0);
    rows.push(Row::new(sum, Cmp::Eq, 1.0));
    for i in 0..m {
        let mut coeffs = vec![0.0; nvar];
        for (j, p) in points.iter().enumerate() {
            coeffs[j] = p[i];
        }
        coeffs[k + i] = 1.0;
        coeffs[k + m + i] = -1.0;
        rows.push(Row::new(coeffs, Cmp::Eq, target[i]));
    }
    match minimize(&objective, &bounds, &rows) {
        Some((_, residual)) => residual <= tol * m as f64,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_membership() {
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(in_convex_hull(&pts, &[0.25, 0.75], 1e-10));
        assert!(in_convex_hull(&pts, &[1.0, 0.0], 1e-10));
        assert!(!in_convex_hull(&pts, &[0.5, 0.6], 1e-10));
    }

    #[test]
    fn infeasible_system_detected() {
        let rows = vec![Row::new(vec![1.0], Cmp::Ge, 2.0)];
        assert!(!is_feasible(&[(0.0, 1.0)], &rows));
        assert!(is_feasible(&[(0.0, 3.0)], &rows));
    }
}
