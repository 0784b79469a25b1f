//! Per-iteration subproblems: the box LP behind the primal measure, the
//! equality-constrained box LP behind the LP dual measure and LP step, and
//! the projection behind the projection-based measure and step.

mod lp;
mod projection;
mod simplex;

pub use lp::{solve_separable_lp, BoxLpInstance, LpSolution, LpStatus};
pub use projection::{dykstra_project, ProjectionResult};
pub use simplex::solve_equality_box_lp;

use crate::error::{AdicError, Result};
use crate::linalg::{dot, norm_inf, DenseMatrix};

/// Box for a step `d` from `x`: `[max(lower − x, −r), min(upper − x, r)]`.
pub fn step_box(x: &[f64], lower: &[f64], upper: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = x
        .iter()
        .zip(lower)
        .map(|(xi, l)| (l - xi).max(-radius).min(0.0))
        .collect();
    let hi = x
        .iter()
        .zip(upper)
        .map(|(xi, u)| (u - xi).min(radius).max(0.0))
        .collect();
    (lo, hi)
}

/// A criticality measure together with the LP direction that attains it.
#[derive(Debug, Clone)]
pub struct Measure {
    pub value: f64,
    pub direction: Vec<f64>,
    pub status: LpStatus,
}

/// Primal measure `χ_N = |cᵀJ d_N|`, `d_N` minimizing `cᵀJ d` over the
/// bound-shifted unit ∞-ball.
pub fn chi_n(x: &[f64], c: &[f64], j: &DenseMatrix, lower: &[f64], upper: &[f64]) -> Measure {
    let cost = j.tr_mul_vec(c);
    let (lo, hi) = step_box(x, lower, upper, 1.0);
    let sol = solve_separable_lp(&cost, &lo, &hi);
    Measure {
        value: sol.objective.abs(),
        direction: sol.d,
        status: sol.status,
    }
}

/// LP dual measure `χ_T = |gᵀd_T|`, `d_T` minimizing `gᵀd` over the
/// nullspace of `J` intersected with the bound-shifted unit ∞-ball.
pub fn chi_t(x: &[f64], g: &[f64], j: &DenseMatrix, lower: &[f64], upper: &[f64]) -> Measure {
    let (lo, hi) = step_box(x, lower, upper, 1.0);
    let sol = solve_equality_box_lp(&BoxLpInstance {
        cost: g,
        lower: &lo,
        upper: &hi,
        equality: Some(j),
    });
    Measure {
        value: sol.objective.abs(),
        direction: sol.d,
        status: sol.status,
    }
}

/// LP tangential step: minimizes `gᵀs` over `J s = 0`, the bounds and
/// `‖s‖∞ ≤ radius`.
pub fn tangential_lp_step(
    x: &[f64],
    g: &[f64],
    j: &DenseMatrix,
    lower: &[f64],
    upper: &[f64],
    radius: f64,
) -> LpSolution {
    let (lo, hi) = step_box(x, lower, upper, radius);
    solve_equality_box_lp(&BoxLpInstance {
        cost: g,
        lower: &lo,
        upper: &hi,
        equality: Some(j),
    })
}

/// Rescales the LP direction to ∞-norm `radius`, never enlarging it.
pub fn tangential_backtrack_step(d_t: &[f64], radius: f64) -> Result<Vec<f64>> {
    let dn = norm_inf(d_t);
    if dn == 0.0 {
        return Err(AdicError::ZeroDirection);
    }
    let scale = (radius / dn).min(1.0);
    Ok(d_t.iter().map(|v| scale * v).collect())
}

/// `min[α, 1] · p1`
pub fn tangential_projection_step(p1: &[f64], alpha_t: f64) -> Vec<f64> {
    let scale = alpha_t.min(1.0);
    p1.iter().map(|v| scale * v).collect()
}

/// `gᵀs`, for callers that only need the linear decrease.
pub fn linear_decrease(g: &[f64], s: &[f64]) -> f64 {
    dot(g, s)
}
