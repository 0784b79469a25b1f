use std::sync::Arc;

use super::problem::{project_to_box, MatOracle, Problem, VecOracle};
use crate::error::{AdicError, Result};
use crate::linalg::DenseMatrix;

/// Problem with two-sided general constraints `c_lower ≤ c(x) ≤ c_upper`.
/// Rows with `c_lower == c_upper` are equalities.
#[derive(Clone)]
pub struct GeneralProblem {
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub x0: Vec<f64>,
    pub c_lower: Vec<f64>,
    pub c_upper: Vec<f64>,
    pub grad: VecOracle,
    pub cons: VecOracle,
    pub jac: MatOracle,
}

/// Rewrites range rows `c_L ≤ cᵢ(x) ≤ c_U` as `cᵢ(x) − s = 0` with a new
/// bounded slack `s ∈ [c_L, c_U]`. Equality rows become `cᵢ(x) − c_L = 0`.
///
/// Slack columns are appended after the original variables, in row order,
/// and start at `clamp(c(x0), c_L, c_U)`.
pub fn add_slacks(general: &GeneralProblem) -> Result<Problem> {
    let m = general.c_lower.len();
    assert_eq!(general.c_upper.len(), m, "constraint bound length mismatch");
    if let Some(row) = (0..m).find(|&i| general.c_lower[i] > general.c_upper[i]) {
        return Err(AdicError::InvertedConstraintRange {
            row,
            lower: general.c_lower[row],
            upper: general.c_upper[row],
        });
    }
    let n0 = general.x0.len();
    // slack_of[i] = Some(column offset) for range rows
    let mut slack_of = vec![None; m];
    let mut slack_lower = Vec::new();
    let mut slack_upper = Vec::new();
    for i in 0..m {
        if general.c_lower[i] < general.c_upper[i] {
            slack_of[i] = Some(slack_lower.len());
            slack_lower.push(general.c_lower[i]);
            slack_upper.push(general.c_upper[i]);
        }
    }
    let ns = slack_lower.len();

    let c0 = (general.cons)(&general.x0);
    let slack_targets: Vec<f64> = (0..m)
        .filter(|&i| slack_of[i].is_some())
        .map(|i| c0[i])
        .collect();
    let s0 = project_to_box(&slack_targets, &slack_lower, &slack_upper);

    let mut lower = general.lower.clone();
    lower.extend_from_slice(&slack_lower);
    let mut upper = general.upper.clone();
    upper.extend_from_slice(&slack_upper);
    let mut x0 = general.x0.clone();
    x0.extend_from_slice(&s0);

    let inner_grad = Arc::clone(&general.grad);
    let grad: VecOracle = Arc::new(move |z: &[f64]| {
        let mut g = inner_grad(&z[..n0]);
        g.resize(n0 + ns, 0.0);
        g
    });

    let inner_cons = Arc::clone(&general.cons);
    let eq_rhs = general.c_lower.clone();
    let slack_map = slack_of.clone();
    let cons: VecOracle = Arc::new(move |z: &[f64]| {
        let mut c = inner_cons(&z[..n0]);
        for (i, ci) in c.iter_mut().enumerate() {
            match slack_map[i] {
                Some(j) => *ci -= z[n0 + j],
                None => *ci -= eq_rhs[i],
            }
        }
        c
    });

    let inner_jac = Arc::clone(&general.jac);
    let jac: MatOracle = Arc::new(move |z: &[f64]| {
        let j0 = inner_jac(&z[..n0]);
        let mut j = DenseMatrix::zeros(m, n0 + ns);
        for i in 0..m {
            j.row_mut(i)[..n0].copy_from_slice(j0.row(i));
            if let Some(s) = slack_of[i] {
                j[(i, n0 + s)] = -1.0;
            }
        }
        j
    });

    Problem::new(general.name.clone(), lower, upper, x0, m, grad, cons, jac)
}
