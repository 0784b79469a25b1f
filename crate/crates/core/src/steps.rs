//! Normal (feasibility) and tangential (optimality) steps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AdicError, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::model::{project_to_box, Problem};
use crate::subproblems::{
    solve_separable_lp, step_box, tangential_backtrack_step, tangential_lp_step,
    tangential_projection_step, LpStatus,
};

/// How the tangential step and dual measure are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// LP measure, LP step.
    Lp,
    /// LP measure, rescaled LP direction as step.
    Bk,
    /// Projection measure, scaled projection as step.
    Pr,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Lp, Variant::Bk, Variant::Pr];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Lp => "lp",
            Variant::Bk => "bk",
            Variant::Pr => "pr",
        }
    }

    /// Guaranteed fraction `κ_t` in `gᵀs ≤ −κ_t α ω²`.
    pub fn kappa_t(self, eta: f64, varsigma: f64) -> f64 {
        match self {
            Variant::Lp | Variant::Bk => 1.0 / eta.max(1.0),
            Variant::Pr => varsigma.sqrt() / eta.max(1.0),
        }
    }

    /// `θ_T` in `‖s‖ ≤ θ_T α ω`, measured in [`Variant::uses_inf_norm`]'s
    /// norm: √n (Euclidean) for LP, 1 (∞-norm) for BK, 1 (Euclidean) for PR.
    pub fn theta_t(self, n: usize) -> f64 {
        match self {
            Variant::Lp => (n as f64).sqrt(),
            Variant::Bk | Variant::Pr => 1.0,
        }
    }

    pub fn uses_inf_norm(self) -> bool {
        matches!(self, Variant::Bk)
    }

    /// Norm in which the step bound is stated for this variant.
    pub fn step_norm(self, s: &[f64]) -> f64 {
        if self.uses_inf_norm() {
            crate::linalg::norm_inf(s)
        } else {
            norm2(s)
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = AdicError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(Variant::Lp),
            "bk" => Ok(Variant::Bk),
            "pr" => Ok(Variant::Pr),
            other => Err(AdicError::InvalidConfig(format!(
                "unknown variant `{other}`"
            ))),
        }
    }
}

/// Parameters of the normal step.
#[derive(Debug, Clone, Copy)]
pub struct NormalStepParams {
    pub theta_n: f64,
    pub kappa_n: f64,
    pub max_reductions: usize,
}

#[derive(Debug, Clone)]
pub struct NormalStepResult {
    pub s_n: Vec<f64>,
    /// `c(x + s_N)`
    pub new_c: Vec<f64>,
    pub radius_used: f64,
    pub reductions: usize,
    /// `½‖c‖² − ½‖c(x + s_N)‖²`
    pub achieved_decrease: f64,
    pub satisfied: bool,
}

/// Trust-region step on `½‖c‖²` with a linear model and ∞-norm radius.
///
/// Starts from `Δ = θ_N ω_N` and halves `Δ` until the trial point gives
/// both the linear decrease `½ ω_N Δ` and the sufficient decrease
/// `κ_n ω_N²`. After `max_reductions` halvings the step is abandoned
/// (`satisfied = false`, zero step).
pub fn normal_step(
    problem: &Problem,
    x: &[f64],
    c: &[f64],
    j: &DenseMatrix,
    omega_n: f64,
    params: &NormalStepParams,
) -> NormalStepResult {
    let cost = j.tr_mul_vec(c);
    let phi = 0.5 * dot(c, c);
    let required = params.kappa_n * omega_n * omega_n;
    let mut radius = params.theta_n * omega_n;
    for reductions in 0..=params.max_reductions {
        let (lo, hi) = step_box(x, problem.lower(), problem.upper(), radius);
        let trial = solve_separable_lp(&cost, &lo, &hi);
        let x_new: Vec<f64> = x.iter().zip(&trial.d).map(|(a, b)| a + b).collect();
        let x_new = project_to_box(&x_new, problem.lower(), problem.upper());
        let new_c = problem.constraints(&x_new);
        let phi_new = 0.5 * dot(&new_c, &new_c);
        if phi_new <= phi - 0.5 * omega_n * radius && phi_new <= phi - required {
            let s_n = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
            return NormalStepResult {
                s_n,
                new_c,
                radius_used: radius,
                reductions,
                achieved_decrease: phi - phi_new,
                satisfied: true,
            };
        }
        radius *= 0.5;
    }
    NormalStepResult {
        s_n: vec![0.0; x.len()],
        new_c: c.to_vec(),
        radius_used: radius,
        reductions: params.max_reductions,
        achieved_decrease: 0.0,
        satisfied: false,
    }
}

#[derive(Debug, Clone)]
pub struct TangentialStepResult {
    pub s_t: Vec<f64>,
    pub variant: Variant,
    /// `gᵀs_T`
    pub predicted: f64,
    pub bound_constant: f64,
    /// False when the underlying subproblem hit its iteration limit.
    pub subproblem_ok: bool,
}

/// Data computed alongside the dual measure that the step reuses.
#[derive(Debug, Clone, Copy)]
pub enum TangentialInput<'a> {
    /// Nothing cached; the LP step is solved from scratch.
    Lp,
    /// LP direction `d_T` attaining `χ_T`.
    Backtrack { d_t: &'a [f64] },
    /// `p1 = Π(x − g) − x`.
    Projection { p1: &'a [f64], converged: bool },
}

/// Tangential step for the chosen variant.
#[allow(clippy::too_many_arguments)]
pub fn tangential_step(
    x: &[f64],
    g: &[f64],
    j: &DenseMatrix,
    lower: &[f64],
    upper: &[f64],
    omega_t: f64,
    alpha_t: f64,
    input: TangentialInput<'_>,
) -> Result<TangentialStepResult> {
    let radius = alpha_t * omega_t;
    let (variant, s_t, ok) = match input {
        TangentialInput::Lp => {
            let sol = tangential_lp_step(x, g, j, lower, upper, radius);
            (Variant::Lp, sol.d, sol.status == LpStatus::Optimal)
        }
        TangentialInput::Backtrack { d_t } => {
            (Variant::Bk, tangential_backtrack_step(d_t, radius)?, true)
        }
        TangentialInput::Projection { p1, converged } => (
            Variant::Pr,
            tangential_projection_step(p1, alpha_t),
            converged,
        ),
    };
    let predicted = dot(g, &s_t);
    Ok(TangentialStepResult {
        bound_constant: variant.theta_t(x.len()),
        s_t,
        variant,
        predicted,
        subproblem_ok: ok,
    })
}
