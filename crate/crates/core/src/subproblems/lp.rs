use serde::{Deserialize, Serialize};

use crate::linalg::{dot, DenseMatrix};

/// `min costᵀd  s.t.  lower ≤ d ≤ upper` and, when present, `J d = 0`.
///
/// The box is the already-intersected one (problem bounds shifted by the
/// current iterate, capped by the ∞-norm radius), so it always contains 0.
#[derive(Debug, Clone)]
pub struct BoxLpInstance<'a> {
    pub cost: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub equality: Option<&'a DenseMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub d: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
}

/// Coordinatewise solution of the box-only LP. Zero costs pick `dᵢ = 0`.
pub fn solve_separable_lp(cost: &[f64], lower: &[f64], upper: &[f64]) -> LpSolution {
    let d: Vec<f64> = cost
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&c, (&l, &u))| {
            if c > 0.0 {
                l
            } else if c < 0.0 {
                u
            } else {
                0.0
            }
        })
        .collect();
    let objective = dot(cost, &d);
    LpSolution {
        d,
        objective,
        status: LpStatus::Optimal,
    }
}
