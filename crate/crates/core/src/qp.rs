//! Small dense convex quadratic programs by a primal active-set method.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub active: Vec<usize>,
    pub iterations: usize,
}

fn objective(g: &DMatrix<f64>, c: &[f64], x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(g * x)) + c.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>()
}

/// Minimizes `½ xᵀGx + cᵀx` subject to `A x ≥ b` (row-wise) for positive
/// definite `G`, starting from a feasible `x0`.
pub fn solve_qp(g: &DMatrix<f64>, c: &[f64], a: &DMatrix<f64>, b: &[f64], x0: &[f64]) -> Result<QpSolution> {
    let n = g.nrows();
    let m = a.nrows();
    if g.ncols() != n || c.len() != n || a.ncols() != n || b.len() != m || x0.len() != n {
        return Err(Error::Dimension("inconsistent QP data".into()));
    }
    let mut x = DVector::from_column_slice(x0);
    let scale = 1.0 + x.amax() + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let feas_tol = 1e-12 * scale;
    let row = |i: usize| a.row(i).transpose();
    for i in 0..m {
        if row(i).dot(&x) < b[i] - feas_tol {
            return Err(Error::Numerical(format!("QP start violates constraint {i}")));
        }
    }

    // Start from a linearly independent subset of the constraints active at x0.
    let mut working: Vec<usize> = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..m {
        if (row(i).dot(&x) - b[i]).abs() > feas_tol {
            continue;
        }
        let mut v = row(i);
        for q in &basis {
            let d = q.dot(&v);
            v.axpy(-d, q, 1.0);
        }
        let nv = v.norm();
        if nv > 1e-10 * row(i).norm() && working.len() < n {
            basis.push(v / nv);
            working.push(i);
        }
    }

    let max_iter = 50 * (n + m) + 50;
    for it in 0..max_iter {
        let grad = g * &x + DVector::from_column_slice(c);
        let w = working.len();
        let mut kkt = DMatrix::<f64>::zeros(n + w, n + w);
        kkt.view_mut((0, 0), (n, n)).copy_from(g);
        for (k, &i) in working.iter().enumerate() {
            for j in 0..n {
                kkt[(j, n + k)] = -a[(i, j)];
                kkt[(n + k, j)] = a[(i, j)];
            }
        }
        let mut rhs = DVector::<f64>::zeros(n + w);
        rhs.rows_mut(0, n).copy_from(&(-&grad));
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular KKT system".into()))?;
        let p = sol.rows(0, n).into_owned();
        let lam = sol.rows(n, w).into_owned();

        if p.amax() <= 1e-13 * (1.0 + x.amax()) {
            let worst = (0..w).min_by(|&i, &j| lam[i].total_cmp(&lam[j]));
            match worst {
                Some(k) if lam[k] < -1e-12 * (1.0 + grad.amax()) => {
                    working.remove(k);
                }
                _ => {
                    return Ok(QpSolution {
                        objective: objective(g, c, &x),
                        x: x.iter().copied().collect(),
                        active: working,
                        iterations: it,
                    })
                }
            }
            continue;
        }

        let mut step = 1.0;
        let mut blocking = None;
        for i in (0..m).filter(|i| !working.contains(i)) {
            let ai = row(i);
            let ap = ai.dot(&p);
            if ap < -1e-14 * ai.norm() * p.norm() {
                let t = ((b[i] - ai.dot(&x)) / ap).max(0.0);
                if t < step {
                    step = t;
                    blocking = Some(i);
                }
            }
        }
        x.axpy(step, &p, 1.0);
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    Err(Error::NonConvergence(
        "active-set QP exceeded its iteration limit".into(),
    ))
}
