use serde::{Deserialize, Serialize};

use crate::error::{AdicError, Result};
use crate::steps::{NormalStepParams, Variant};

/// Whether a normal step is also computed when the switch condition holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalPolicy {
    /// Only when the switch condition fails.
    Never,
    /// Whenever the primal measure is positive.
    Always,
}

/// How much of each iteration is kept in the run's trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLevel {
    /// No per-iteration records.
    Off,
    /// Scalar records with audit details.
    Records,
    /// Records plus the iterate, gradient and step vectors.
    Vectors,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub beta: f64,
    pub eta: f64,
    pub varsigma: f64,
    pub theta_t: f64,
    pub theta_n: f64,
    pub kappa_n: f64,
    pub variant: Variant,
    /// Threshold on `χ_T`.
    pub tol_dual: f64,
    /// Threshold on `χ_N`.
    pub tol_primal: f64,
    /// `‖c‖∞` threshold separating KKT from infeasible critical points;
    /// `None` means `max(1e-6·(1 + ‖c(x₀)‖∞), tol_primal)`.
    pub tol_feas: Option<f64>,
    pub max_iters: usize,
    pub time_limit_s: f64,
    pub normal_when_switch: NormalPolicy,
    pub max_reductions: usize,
    pub projection_tol: f64,
    pub projection_max_iter: usize,
    /// Weight of `‖c‖` in the ψ diagnostic.
    pub rho_monitor: f64,
    pub compute_psi: bool,
    /// With an inexact gradient source, evaluate the `χ_T` stopping test
    /// on the exact gradient instead of the perturbed one. Steps always
    /// use the perturbed gradient.
    pub stop_on_exact_gradient: bool,
    pub trace: TraceLevel,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1e3,
            eta: 2.0,
            varsigma: 1e-5,
            theta_t: 1.0,
            theta_n: 5.0,
            kappa_n: 1e-2,
            variant: Variant::Lp,
            tol_dual: 1e-4,
            tol_primal: 1e-5,
            tol_feas: None,
            max_iters: 50_000,
            time_limit_s: 3600.0,
            normal_when_switch: NormalPolicy::Never,
            max_reductions: 60,
            projection_tol: 1e-10,
            projection_max_iter: 10_000,
            rho_monitor: 10.0,
            compute_psi: true,
            stop_on_exact_gradient: true,
            trace: TraceLevel::Records,
        }
    }
}

impl SolverConfig {
    pub fn with_variant(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(AdicError::InvalidConfig(msg.to_string()));
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(self.eta > 0.0) {
            return bad("eta must be positive");
        }
        if !(self.varsigma > 0.0 && self.varsigma <= 0.5) {
            return bad("varsigma must lie in (0, 1/2]");
        }
        if !(self.theta_t >= 1.0) || !(self.theta_n >= 1.0) {
            return bad("theta_T and theta_N must be at least 1");
        }
        if !(self.kappa_n > 0.0 && self.kappa_n < 0.5) {
            return bad("kappa_n must lie in (0, 1/2)");
        }
        if !(self.tol_dual >= 0.0) || !(self.tol_primal >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        if let Some(t) = self.tol_feas {
            if !(t >= 0.0) {
                return bad("tol_feas must be nonnegative");
            }
        }
        if !(self.time_limit_s > 0.0) {
            return bad("time limit must be positive");
        }
        if !(self.projection_tol > 0.0) || self.projection_max_iter == 0 {
            return bad("projection tolerance and iteration cap must be positive");
        }
        if !(self.rho_monitor > 0.0) {
            return bad("rho_monitor must be positive");
        }
        Ok(())
    }

    pub fn normal_params(&self) -> NormalStepParams {
        NormalStepParams {
            theta_n: self.theta_n,
            kappa_n: self.kappa_n,
            max_reductions: self.max_reductions,
        }
    }

    pub fn kappa_t(&self) -> f64 {
        self.variant.kappa_t(self.eta, self.varsigma)
    }
}
