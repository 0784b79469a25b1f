//! The outer iteration: measures, AdaGrad-norm stepsize, switching between
//! normal and tangential steps, termination and trace emission.

mod config;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{NormalPolicy, SolverConfig, TraceLevel};
pub use trace::{
    read_trace_jsonl, write_trace_jsonl, StepDetail, StepKind, StepRecord, StepVectors,
};

use crate::error::{AdicError, Result};
use crate::linalg::{dot, lsq_multipliers, norm2, norm_inf, nullspace_residual, DenseMatrix};
use crate::model::{box_violation, project_to_box, GradientSource, Problem};
use crate::steps::{normal_step, tangential_step, TangentialInput, TangentialStepResult, Variant};
use crate::subproblems::{chi_n, chi_t, dykstra_project, Measure, ProjectionResult};

/// Dual measures below this are treated as zero: no tangential step.
const OMEGA_T_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Kkt,
    InfeasibleCritical,
    IterLimit,
    TimeLimit,
    StepFailure,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Kkt => "KKT",
            RunStatus::InfeasibleCritical => "INFEASIBLE_CRITICAL",
            RunStatus::IterLimit => "ITER_LIMIT",
            RunStatus::TimeLimit => "TIME_LIMIT",
            RunStatus::StepFailure => "STEP_FAILURE",
        }
    }

    /// Met the χ-based termination test, whatever the final violation.
    pub fn is_critical(self) -> bool {
        matches!(self, RunStatus::Kkt | RunStatus::InfeasibleCritical)
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = AdicError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "KKT" => RunStatus::Kkt,
            "INFEASIBLE_CRITICAL" => RunStatus::InfeasibleCritical,
            "ITER_LIMIT" => RunStatus::IterLimit,
            "TIME_LIMIT" => RunStatus::TimeLimit,
            "STEP_FAILURE" => RunStatus::StepFailure,
            other => {
                return Err(AdicError::InvalidConfig(format!(
                    "unknown status `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub x: Vec<f64>,
    /// Variant's dual measure at the final iterate.
    pub omega_t: f64,
    pub omega_n: f64,
    /// `χ_T` used by the stopping test (exact-gradient value on noisy runs
    /// unless disabled in the configuration).
    pub chi_t: f64,
    pub chi_n: f64,
    pub norm_c_inf: f64,
    pub iters: usize,
    pub tangential_count: usize,
    pub normal_count: usize,
    pub wall_time_s: f64,
    pub tol_feas: f64,
    pub trace: Vec<StepRecord>,
}

/// `α_T = η / √(Γ + ω_T² + ς)`
pub fn stepsize(gamma: f64, omega_t: f64, eta: f64, varsigma: f64) -> f64 {
    eta / (gamma + omega_t * omega_t + varsigma).sqrt()
}

/// The tangential step is allowed iff `ω_N ≤ β α_T ω_T`.
pub fn switch_test(omega_n: f64, omega_t: f64, alpha_t: f64, beta: f64) -> bool {
    omega_n <= beta * alpha_t * omega_t
}

/// Measures at the current iterate.
#[derive(Debug, Clone)]
pub struct Measures {
    pub chi_t: Measure,
    pub chi_n: Measure,
    /// Present for the projection variant.
    pub projection: Option<ProjectionResult>,
    pub omega_t: f64,
    pub omega_n: f64,
}

/// Computes `χ_T`, `χ_N` and the variant's dual measure at `x`.
pub fn compute_measures(
    problem: &Problem,
    x: &[f64],
    g: &[f64],
    c: &[f64],
    j: &DenseMatrix,
    cfg: &SolverConfig,
) -> Measures {
    let (lower, upper) = (problem.lower(), problem.upper());
    let chi_t = chi_t(x, g, j, lower, upper);
    let chi_n = chi_n(x, c, j, lower, upper);
    let (omega_t, projection) = match cfg.variant {
        Variant::Lp | Variant::Bk => (chi_t.value, None),
        Variant::Pr => {
            let p = dykstra_project(
                x,
                g,
                j,
                lower,
                upper,
                cfg.projection_tol,
                cfg.projection_max_iter,
            );
            (p.pi_t, Some(p))
        }
    };
    Measures {
        omega_n: chi_n.value,
        chi_t,
        chi_n,
        projection,
        omega_t,
    }
}

/// Objective-free part of the sharp augmented Lagrangian at the
/// least-squares multipliers.
#[derive(Debug, Clone)]
pub struct PsiDiagnostic {
    /// `λ̂ᵀc + ρ‖c‖` (add `f(x)` externally when a reporting objective is
    /// available).
    pub psi: f64,
    pub lambda: Vec<f64>,
    /// `g + Jᵀλ̂`
    pub g_t: Vec<f64>,
}

/// `None` when `JJᵀ` cannot be factorized.
pub fn diagnostics_psi(g: &[f64], c: &[f64], j: &DenseMatrix, rho: f64) -> Option<PsiDiagnostic> {
    let lsq = lsq_multipliers(j, g).ok()?;
    let psi = dot(&lsq.lambda, c) + rho * norm2(c);
    Some(PsiDiagnostic {
        psi,
        lambda: lsq.lambda,
        g_t: lsq.g_t,
    })
}

/// Margins of the two AdaGrad summation inequalities over the tangential
/// records of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradReport {
    pub tangential_count: usize,
    pub gamma_final: f64,
    /// `Σ α ω²`
    pub sum_alpha_omega2: f64,
    /// `η√ς(√(1 + Γ/ς) − 1)`
    pub lower_bound: f64,
    /// `Σ α² ω²`
    pub sum_alpha2_omega2: f64,
    /// `η² log(1 + Γ/ς)`
    pub upper_bound: f64,
    pub first_holds: bool,
    pub second_holds: bool,
}

impl AdagradReport {
    pub fn holds(&self) -> bool {
        self.first_holds && self.second_holds
    }
}

/// Checks `Σ α ω² > η√ς(√(1+Γ/ς) − 1)` and `Σ α² ω² ≤ η² log(1+Γ/ς)`.
/// Γ is recomputed from the recorded ω values. An empty tangential
/// subsequence passes trivially.
pub fn trace_check_adagrad(trace: &[StepRecord], eta: f64, varsigma: f64) -> AdagradReport {
    let mut gamma = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut count = 0;
    for r in trace.iter().filter(|r| r.kind.is_tangential()) {
        count += 1;
        gamma += r.omega_t * r.omega_t;
        s1 += r.alpha_t * r.omega_t * r.omega_t;
        s2 += r.alpha_t * r.alpha_t * r.omega_t * r.omega_t;
    }
    let lower_bound = eta * varsigma.sqrt() * ((1.0 + gamma / varsigma).sqrt() - 1.0);
    let upper_bound = eta * eta * (gamma / varsigma).ln_1p();
    let (first_holds, second_holds) = if count == 0 {
        (true, true)
    } else {
        (s1 > lower_bound, s2 <= upper_bound * (1.0 + 1e-12))
    };
    AdagradReport {
        tangential_count: count,
        gamma_final: gamma,
        sum_alpha_omega2: s1,
        lower_bound,
        sum_alpha2_omega2: s2,
        upper_bound,
        first_holds,
        second_holds,
    }
}

fn norm_c_pair(c: &[f64]) -> (f64, f64) {
    (norm_inf(c), norm2(c))
}

/// Runs the method from the problem's starting point.
pub fn solve<S: GradientSource>(source: &mut S, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    let problem = source.problem().clone();
    let (lower, upper) = (problem.lower(), problem.upper());
    let n = problem.n();
    let start = Instant::now();

    let mut x = project_to_box(problem.x0(), lower, upper);
    let tol_feas = cfg
        .tol_feas
        .unwrap_or_else(|| (1e-6 * (1.0 + norm_inf(&problem.constraints(&x)))).max(cfg.tol_primal));
    let kappa_t = cfg.kappa_t();
    let normal_params = cfg.normal_params();
    let theta_step = cfg.theta_t.max(cfg.variant.theta_t(n));

    let mut gamma = 0.0;
    let mut trace = Vec::new();
    let mut tangential_count = 0;
    let mut normal_count = 0;

    let mut k = 0usize;
    loop {
        let c = problem.constraints(&x);
        let j = problem.jacobian(&x);
        let g = source.gradient(&x);
        let meas = compute_measures(&problem, &x, &g, &c, &j, cfg);
        let (norm_c_inf, norm_c) = norm_c_pair(&c);
        let (omega_t, omega_n) = (meas.omega_t, meas.omega_n);
        let alpha_t = stepsize(gamma, omega_t, cfg.eta, cfg.varsigma);
        let psi = if cfg.compute_psi {
            diagnostics_psi(&g, &c, &j, cfg.rho_monitor).map(|d| d.psi)
        } else {
            None
        };
        let elapsed_ms = || start.elapsed().as_secs_f64() * 1e3;
        let gamma_k = gamma;

        let base_detail = |x: &[f64]| StepDetail {
            norm_c,
            chi_t: meas.chi_t.value,
            chi_n: meas.chi_n.value,
            gamma_before: gamma_k,
            jac_fro: j.frobenius_norm(),
            x_norm_inf: norm_inf(x),
            projection_converged: meas.projection.as_ref().is_none_or(|p| p.converged),
            ..StepDetail::default()
        };
        let terminal_record = |x: &[f64]| StepRecord {
            k,
            kind: StepKind::None,
            omega_t,
            omega_n,
            alpha_t,
            gamma: gamma_k,
            norm_c_inf,
            g_dot_st: 0.0,
            normal_decrease: 0.0,
            psi,
            wall_ms: elapsed_ms(),
            detail: Some(StepDetail {
                vectors: (cfg.trace >= TraceLevel::Vectors).then(|| StepVectors {
                    x: x.to_vec(),
                    g: g.clone(),
                    s_n: None,
                    s_t: None,
                }),
                ..base_detail(x)
            }),
        };

        let stop_chi_t = if cfg.stop_on_exact_gradient && !source.is_exact() {
            chi_t(&x, &problem.gradient(&x), &j, lower, upper).value
        } else {
            meas.chi_t.value
        };
        let critical = stop_chi_t <= cfg.tol_dual && meas.chi_n.value <= cfg.tol_primal;
        let stop = if critical {
            Some(if norm_c_inf <= tol_feas {
                RunStatus::Kkt
            } else {
                RunStatus::InfeasibleCritical
            })
        } else if k >= cfg.max_iters {
            Some(RunStatus::IterLimit)
        } else if start.elapsed().as_secs_f64() > cfg.time_limit_s {
            Some(RunStatus::TimeLimit)
        } else {
            None
        };
        if let Some(status) = stop {
            if cfg.trace > TraceLevel::Off {
                trace.push(terminal_record(&x));
            }
            return Ok(RunResult {
                status,
                x,
                omega_t,
                omega_n,
                chi_t: stop_chi_t,
                chi_n: meas.chi_n.value,
                norm_c_inf,
                iters: k,
                tangential_count,
                normal_count,
                wall_time_s: start.elapsed().as_secs_f64(),
                tol_feas,
                trace,
            });
        }

        let switch = switch_test(omega_n, omega_t, alpha_t, cfg.beta);

        // The tangential step uses quantities at x_k, so compute it
        // before moving.
        let mut tangential_rejected = false;
        let tangential: Option<TangentialStepResult> = if switch && omega_t >= OMEGA_T_FLOOR {
            let input = match (cfg.variant, &meas.projection) {
                (Variant::Lp, _) => TangentialInput::Lp,
                (Variant::Bk, _) => TangentialInput::Backtrack {
                    d_t: &meas.chi_t.direction,
                },
                (Variant::Pr, Some(p)) => TangentialInput::Projection {
                    p1: &p.p1,
                    converged: p.converged,
                },
                (Variant::Pr, None) => unreachable!("projection computed for PR"),
            };
            let step = tangential_step(&x, &g, &j, lower, upper, omega_t, alpha_t, input)?;
            if tangential_acceptable(
                &x, &step, &j, lower, upper, omega_t, alpha_t, kappa_t, theta_step,
            ) {
                Some(step)
            } else {
                tangential_rejected = true;
                None
            }
        } else {
            None
        };

        let normal_required = tangential.is_none() && omega_n > 0.0;
        let normal_optional =
            tangential.is_some() && cfg.normal_when_switch == NormalPolicy::Always && omega_n > 0.0;
        let normal = (normal_required || normal_optional)
            .then(|| normal_step(&problem, &x, &c, &j, omega_n, &normal_params));
        let normal_failed = normal.as_ref().is_some_and(|r| !r.satisfied);

        if normal_required && normal_failed && meas.chi_n.value > cfg.tol_primal {
            if cfg.trace > TraceLevel::Off {
                let mut rec = terminal_record(&x);
                if let Some(d) = rec.detail.as_mut() {
                    d.normal_failed = true;
                    d.tangential_rejected = tangential_rejected;
                }
                trace.push(rec);
            }
            return Ok(RunResult {
                status: RunStatus::StepFailure,
                x,
                omega_t,
                omega_n,
                chi_t: stop_chi_t,
                chi_n: meas.chi_n.value,
                norm_c_inf,
                iters: k,
                tangential_count,
                normal_count,
                wall_time_s: start.elapsed().as_secs_f64(),
                tol_feas,
                trace,
            });
        }

        let accepted_normal = normal.filter(|r| r.satisfied);
        let mut x_next = x.clone();
        if let Some(r) = &accepted_normal {
            for (xi, si) in x_next.iter_mut().zip(&r.s_n) {
                *xi += si;
            }
        }
        if let Some(t) = &tangential {
            for (xi, si) in x_next.iter_mut().zip(&t.s_t) {
                *xi += si;
            }
        }
        let x_next = project_to_box(&x_next, lower, upper);

        let gamma_before = gamma;
        if tangential.is_some() {
            gamma += omega_t * omega_t;
            tangential_count += 1;
        }
        if accepted_normal.is_some() {
            normal_count += 1;
        }

        if cfg.trace > TraceLevel::Off {
            let kind = match (&accepted_normal, &tangential) {
                (Some(_), Some(_)) => StepKind::TN,
                (Some(_), None) => StepKind::N,
                (None, Some(_)) => StepKind::T,
                (None, None) => StepKind::None,
            };
            let mut detail = StepDetail {
                gamma_before,
                tangential_rejected,
                normal_failed,
                ..base_detail(&x)
            };
            if let Some(r) = &accepted_normal {
                let trial: Vec<f64> = x.iter().zip(&r.s_n).map(|(a, b)| a + b).collect();
                detail.sn_box_violation = box_violation(&trial, lower, upper);
                detail.sn_norm_inf = norm_inf(&r.s_n);
            }
            if let Some(t) = &tangential {
                let trial: Vec<f64> = x.iter().zip(&t.s_t).map(|(a, b)| a + b).collect();
                detail.st_box_violation = box_violation(&trial, lower, upper);
                detail.st_norm = t.variant.step_norm(&t.s_t);
                detail.st_norm2 = norm2(&t.s_t);
                detail.st_null_residual = nullspace_residual(&j, &t.s_t);
            }
            if cfg.trace >= TraceLevel::Vectors {
                detail.vectors = Some(StepVectors {
                    x: x.clone(),
                    g: g.clone(),
                    s_n: accepted_normal.as_ref().map(|r| r.s_n.clone()),
                    s_t: tangential.as_ref().map(|t| t.s_t.clone()),
                });
            }
            trace.push(StepRecord {
                k,
                kind,
                omega_t,
                omega_n,
                alpha_t,
                gamma,
                norm_c_inf,
                g_dot_st: tangential.as_ref().map_or(0.0, |t| t.predicted),
                normal_decrease: accepted_normal
                    .as_ref()
                    .map_or(0.0, |r| r.achieved_decrease),
                psi,
                wall_ms: elapsed_ms(),
                detail: Some(detail),
            });
        }

        x = x_next;
        k += 1;
    }
}

/// A-posteriori check of a tangential step: feasibility, nullspace,
/// decrease and size conditions.
#[allow(clippy::too_many_arguments)]
fn tangential_acceptable(
    x: &[f64],
    step: &TangentialStepResult,
    j: &DenseMatrix,
    lower: &[f64],
    upper: &[f64],
    omega_t: f64,
    alpha_t: f64,
    kappa_t: f64,
    theta: f64,
) -> bool {
    let s = &step.s_t;
    let trial: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
    let feas = box_violation(&trial, lower, upper) <= 1e-10 * (1.0 + norm_inf(x));
    let null = nullspace_residual(j, s) <= 1e-8 * (1.0 + j.frobenius_norm() * norm2(s));
    let required = kappa_t * alpha_t * omega_t * omega_t;
    let descent = step.predicted <= -required;
    let bound = step.variant.step_norm(s) <= theta * alpha_t * omega_t * (1.0 + 1e-12);
    feas && null && descent && bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;

    #[test]
    fn stepsize_examples() {
        let a = stepsize(0.0, 1.0, 2.0, 1e-5);
        assert!((a - 2.0 / (1.0f64 + 1e-5).sqrt()).abs() < 1e-15);
        assert!((a - 1.99999).abs() < 1e-6);
        assert_eq!(stepsize(0.0, 0.0, 2.0, 1e-5), 2.0 / 1e-5f64.sqrt());
        assert_eq!(stepsize(3.0, 1.0, 2.0, 1e-5), 2.0 / (4.0f64 + 1e-5).sqrt());
    }

    #[test]
    fn switch_examples() {
        assert!(switch_test(0.0, 0.3, 1.0, 1e3));
        assert!(!switch_test(0.1, 0.0, 1.0, 1e3));
        assert!(switch_test(1.0, 1e-3, 2.0, 1e3));
    }

    #[test]
    fn psi_examples() {
        let j = DenseMatrix::from_rows(2, &[vec![1.0, 1.0]]);
        let d = diagnostics_psi(&[1.0, 1.0], &[0.5], &j, 10.0).unwrap();
        assert!((d.lambda[0] + 1.0).abs() < 1e-15);
        assert!((d.psi - 4.5).abs() < 1e-14);
        let d = diagnostics_psi(&[1.0, 3.0], &[0.0], &j, 10.0).unwrap();
        assert_eq!(d.psi, 0.0);
        assert!(nullspace_residual(&j, &d.g_t) < 1e-14);
    }

    fn record(kind: StepKind, omega_t: f64, alpha_t: f64) -> StepRecord {
        StepRecord {
            k: 0,
            kind,
            omega_t,
            omega_n: 0.0,
            alpha_t,
            gamma: 0.0,
            norm_c_inf: 0.0,
            g_dot_st: 0.0,
            normal_decrease: 0.0,
            psi: None,
            wall_ms: 0.0,
            detail: None,
        }
    }

    #[test]
    fn adagrad_single_iteration() {
        let alpha = stepsize(0.0, 1.0, 2.0, 1e-5);
        let rep = trace_check_adagrad(&[record(StepKind::T, 1.0, alpha)], 2.0, 1e-5);
        assert!((rep.sum_alpha_omega2 - 2.0).abs() < 1e-4);
        assert!((rep.lower_bound - 1.9936).abs() < 1e-4);
        assert!(rep.holds());
    }

    #[test]
    fn adagrad_empty_passes() {
        let rep = trace_check_adagrad(&[record(StepKind::N, 1.0, 1.0)], 2.0, 1e-5);
        assert_eq!(rep.tangential_count, 0);
        assert_eq!(rep.lower_bound, 0.0);
        assert_eq!(rep.upper_bound, 0.0);
        assert!(rep.holds());
    }

    #[test]
    fn starts_at_solution() {
        // plane3 at its solution: c = 0 and g in range(Jᵀ)
        let mut p = catalog::build("plane3").unwrap();
        let sol = p.known_solution().unwrap().to_vec();
        let p2 = Problem::new(
            "plane3-at-solution",
            p.lower().to_vec(),
            p.upper().to_vec(),
            sol,
            p.m(),
            p.grad_oracle().clone(),
            p.cons_oracle().clone(),
            p.jac_oracle().clone(),
        )
        .unwrap();
        p = p2;
        let r = solve(&mut p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, RunStatus::Kkt);
        assert_eq!(r.iters, 0);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn lq2_converges_for_every_variant() {
        for v in Variant::ALL {
            let mut p = catalog::build("lq2").unwrap();
            let r = solve(&mut p, &SolverConfig::with_variant(v)).unwrap();
            assert_eq!(r.status, RunStatus::Kkt, "{v}");
            assert!(
                (r.x[0] - 1.0).abs() < 1e-3 && r.x[1].abs() < 1e-3,
                "{v}: {:?}",
                r.x
            );
        }
    }

    #[test]
    fn gamma_grows_exactly_on_tangential_records() {
        let mut p = catalog::build("circle").unwrap();
        let r = solve(&mut p, &SolverConfig::default()).unwrap();
        let mut prev = 0.0;
        for rec in &r.trace {
            if rec.kind.is_tangential() {
                assert!(rec.gamma > prev);
                assert_eq!(rec.gamma, prev + rec.omega_t * rec.omega_t);
            } else {
                assert_eq!(rec.gamma, prev);
            }
            prev = rec.gamma;
        }
    }

    #[test]
    fn infeasible_problem_classified() {
        let mut p = catalog::build("infeasible").unwrap();
        let r = solve(&mut p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, RunStatus::InfeasibleCritical);
        assert!(r.norm_c_inf > r.tol_feas);
    }
}
