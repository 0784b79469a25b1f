//! Post-hoc trace analysis: step-condition audits, AdaGrad summation margins
//! and the empirical rate monitor.

use std::fmt::{self, Write as _};

use crate::driver::{
    compute_measures, stepsize, switch_test, trace_check_adagrad, AdagradReport, NormalPolicy,
    SolverConfig, StepKind, StepRecord,
};
use crate::linalg::{dot, norm2, norm_inf, nullspace_residual};
use crate::model::{box_violation, Problem};
use crate::steps::Variant;

/// Relative tolerance for recomputed floating-point bookkeeping.
const BOOKKEEPING_RTOL: f64 = 1e-12;
/// Relative tolerance on bound feasibility of steps.
const FEAS_RTOL: f64 = 1e-10;
/// Relative tolerance on `‖J s_T‖∞`.
const NULL_RTOL: f64 = 1e-8;
/// Rate-monitor slack factor and warm-up length.
pub const RATE_FACTOR: f64 = 1.05;
pub const RATE_WARMUP: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// Smallest normalized slack seen; negative on violation.
    pub worst_margin: f64,
    pub first_violation_k: Option<usize>,
}

impl ConditionReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            first_violation_k: None,
        }
    }

    /// Records one check whose normalized slack is `margin`; `ok` decides
    /// the verdict so exact comparisons stay exact.
    fn record(&mut self, k: usize, ok: bool, margin: f64) {
        self.checked += 1;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if !ok {
            self.violations += 1;
            self.first_violation_k.get_or_insert(k);
        }
    }
}

/// Empirical `O(1/√k)` check on `a_j = ω_{T,j} + ‖c_j‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMonitor {
    pub records: usize,
    pub kappa_fit: f64,
    /// `max_k mean(a_0..a_k)·√(k+1)/κ_fit` over `k ≥ RATE_WARMUP − 1`.
    pub max_ratio: f64,
    pub first_violation_k: Option<usize>,
    /// Fewer than `RATE_WARMUP` records: nothing to check.
    pub vacuous: bool,
}

impl RateMonitor {
    pub fn holds(&self) -> bool {
        self.vacuous || self.max_ratio <= RATE_FACTOR
    }
}

/// Fits `κ_fit = √W · mean(a_0..a_{W−1})` and checks
/// `mean(a_0..a_k) ≤ 1.05 κ_fit / √(k+1)` for all `k ≥ W − 1`.
pub fn rate_monitor(values: &[f64]) -> RateMonitor {
    let w = RATE_WARMUP;
    if values.len() < w {
        return RateMonitor {
            records: values.len(),
            kappa_fit: f64::NAN,
            max_ratio: 0.0,
            first_violation_k: None,
            vacuous: true,
        };
    }
    let kappa_fit = (w as f64).sqrt() * values[..w].iter().sum::<f64>() / w as f64;
    let mut sum = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut first = None;
    for (k, a) in values.iter().enumerate() {
        sum += a;
        if k + 1 < w {
            continue;
        }
        let avg = sum / (k + 1) as f64;
        let ratio = if kappa_fit > 0.0 {
            avg * ((k + 1) as f64).sqrt() / kappa_fit
        } else if avg > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > RATE_FACTOR && first.is_none() {
            first = Some(k);
        }
        max_ratio = max_ratio.max(ratio);
    }
    RateMonitor {
        records: values.len(),
        kappa_fit,
        max_ratio,
        first_violation_k: first,
        vacuous: false,
    }
}

/// Rate-monitor sequence of a trace: `ω_T + ‖c‖₂` when the in-memory
/// detail is present, `ω_T + ‖c‖∞` otherwise.
pub fn rate_values(trace: &[StepRecord]) -> Vec<f64> {
    trace
        .iter()
        .map(|r| r.omega_t + r.detail.as_ref().map_or(r.norm_c_inf, |d| d.norm_c))
        .collect()
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    /// Re-evaluate oracles at logged iterates (needs vector traces).
    pub deep: bool,
    /// Gradients in the trace are exact, so deep mode may recompute the
    /// dual measure too.
    pub exact_gradients: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            deep: true,
            exact_gradients: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub run_id: String,
    pub records: usize,
    pub conditions: Vec<ConditionReport>,
    pub adagrad: AdagradReport,
    pub rate: RateMonitor,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.conditions.iter().map(|c| c.violations).sum::<usize>()
            + usize::from(!self.adagrad.holds())
    }

    /// Step conditions and AdaGrad inequalities. The rate monitor is
    /// reported but not part of the verdict.
    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

fn fmt_margin(v: f64) -> String {
    if v.is_infinite() {
        "n/a".to_string()
    } else {
        format!("{v:.6e}")
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "run: {}", self.run_id);
        let _ = writeln!(s, "records: {}", self.records);
        for c in &self.conditions {
            let _ = writeln!(
                s,
                "{}: checked={} violations={} worst_margin={} first_violation_k={}",
                c.name,
                c.checked,
                c.violations,
                fmt_margin(c.worst_margin),
                c.first_violation_k
                    .map_or("-".to_string(), |k| k.to_string()),
            );
        }
        let a = &self.adagrad;
        let _ = writeln!(s, "adagrad_tangential: {}", a.tangential_count);
        let _ = writeln!(
            s,
            "adagrad_sum1: lhs={:.6e} rhs={:.6e} holds={}",
            a.sum_alpha_omega2, a.lower_bound, a.first_holds
        );
        let _ = writeln!(
            s,
            "adagrad_sum2: lhs={:.6e} rhs={:.6e} holds={}",
            a.sum_alpha2_omega2, a.upper_bound, a.second_holds
        );
        let r = &self.rate;
        if r.vacuous {
            let _ = writeln!(s, "rate_monitor: vacuous ({} records)", r.records);
        } else {
            let _ = writeln!(
                s,
                "rate_monitor: kappa_fit={:.6e} max_ratio={:.6} holds={}",
                r.kappa_fit,
                r.max_ratio,
                r.holds()
            );
        }
        let _ = writeln!(s, "violations: {}", self.violations());
        let _ = write!(s, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        f.write_str(&s)
    }
}

fn rel_margin(slack: f64, scale: f64) -> f64 {
    slack / scale.abs().max(f64::MIN_POSITIVE)
}

/// Checks every recorded step condition of `trace` against `cfg`.
///
/// Scalar checks always run. Step-vector checks need the in-memory detail
/// (absent from JSON-lines traces); oracle re-evaluation additionally needs
/// vector traces and `opts.deep`.
pub fn audit(trace: &[StepRecord], problem: &Problem, cfg: &SolverConfig) -> AuditReport {
    audit_with(trace, problem, cfg, &AuditOptions::default())
}

pub fn audit_with(
    trace: &[StepRecord],
    problem: &Problem,
    cfg: &SolverConfig,
    opts: &AuditOptions,
) -> AuditReport {
    let variant = cfg.variant;
    let kappa_t = cfg.kappa_t();
    let theta = cfg.theta_t.max(variant.theta_t(problem.n()));
    let alpha_cap = cfg.eta / cfg.varsigma.sqrt();

    let mut sequence = ConditionReport::new("sequence");
    let mut kind_policy = ConditionReport::new("kind_policy");
    let mut switch = ConditionReport::new("switch");
    let mut achle1 = ConditionReport::new("achle1");
    let mut alpha_formula = ConditionReport::new("alpha_formula");
    let mut gamma_book = ConditionReport::new("gamma_bookkeeping");
    let mut n_descent = ConditionReport::new("N-descent");
    let mut t_descent = ConditionReport::new("T-descent");
    let mut sn_feas = ConditionReport::new("sN-feas");
    let mut sn_bound = ConditionReport::new("sN-bound");
    let mut st_feas = ConditionReport::new("sT-feas");
    let mut st_null = ConditionReport::new("sT-nullspace");
    let mut st_bound = ConditionReport::new("sT-bound");
    let mut deep_measures = ConditionReport::new("deep_measures");
    let mut deep_steps = ConditionReport::new("deep_steps");

    let mut gamma_prev = 0.0;
    for (idx, r) in trace.iter().enumerate() {
        let k = r.k;
        sequence.record(k, r.k == idx, 0.0);

        // stepsize bookkeeping
        let alpha = stepsize(gamma_prev, r.omega_t, cfg.eta, cfg.varsigma);
        let err = (r.alpha_t - alpha).abs();
        alpha_formula.record(
            k,
            err <= BOOKKEEPING_RTOL * alpha,
            rel_margin(BOOKKEEPING_RTOL * alpha - err, alpha),
        );
        let ok =
            r.alpha_t <= alpha_cap * (1.0 + BOOKKEEPING_RTOL) && r.alpha_t * r.omega_t < cfg.eta;
        achle1.record(k, ok, rel_margin(cfg.eta - r.alpha_t * r.omega_t, cfg.eta));

        let expected_gamma = if r.kind.is_tangential() {
            gamma_prev + r.omega_t * r.omega_t
        } else {
            gamma_prev
        };
        let err = (r.gamma - expected_gamma).abs();
        let scale = expected_gamma.max(f64::MIN_POSITIVE);
        gamma_book.record(
            k,
            err <= BOOKKEEPING_RTOL * scale,
            rel_margin(BOOKKEEPING_RTOL * scale - err, scale),
        );

        let switch_holds = switch_test(r.omega_n, r.omega_t, r.alpha_t, cfg.beta);
        let rejected = r.detail.as_ref().is_some_and(|d| d.tangential_rejected);
        match r.kind {
            StepKind::T => switch.record(k, switch_holds, 0.0),
            StepKind::TN => {
                switch.record(k, switch_holds, 0.0);
                kind_policy.record(k, cfg.normal_when_switch == NormalPolicy::Always, 0.0);
            }
            // a rejected tangential step also leads to N; JSON-lines records
            // do not say whether that happened, so they are only checked
            // when the switch fails
            StepKind::N if r.detail.is_some() || !switch_holds => {
                let ok = !switch_holds || r.omega_t < 1e-16 || rejected;
                switch.record(k, ok, 0.0);
            }
            StepKind::N => {}
            StepKind::None => {}
        }

        if r.kind.is_normal() {
            let required = cfg.kappa_n * r.omega_n * r.omega_n;
            n_descent.record(
                k,
                r.normal_decrease >= required,
                rel_margin(r.normal_decrease - required, required),
            );
        }
        if r.kind.is_tangential() {
            let required = -kappa_t * r.alpha_t * r.omega_t * r.omega_t;
            t_descent.record(
                k,
                r.g_dot_st <= required,
                rel_margin(required - r.g_dot_st, required),
            );
        }

        if let Some(d) = &r.detail {
            if r.kind.is_normal() {
                let tol = FEAS_RTOL * (1.0 + d.x_norm_inf);
                sn_feas.record(
                    k,
                    d.sn_box_violation <= tol,
                    rel_margin(tol - d.sn_box_violation, tol),
                );
                let cap = cfg.theta_n * r.omega_n;
                sn_bound.record(
                    k,
                    d.sn_norm_inf <= cap * (1.0 + BOOKKEEPING_RTOL),
                    rel_margin(cap - d.sn_norm_inf, cap),
                );
            }
            if r.kind.is_tangential() {
                let tol = FEAS_RTOL * (1.0 + d.x_norm_inf);
                st_feas.record(
                    k,
                    d.st_box_violation <= tol,
                    rel_margin(tol - d.st_box_violation, tol),
                );
                let tol = NULL_RTOL * (1.0 + d.jac_fro * d.st_norm2);
                st_null.record(
                    k,
                    d.st_null_residual <= tol,
                    rel_margin(tol - d.st_null_residual, tol),
                );
                let cap = theta * r.alpha_t * r.omega_t;
                st_bound.record(
                    k,
                    d.st_norm <= cap * (1.0 + BOOKKEEPING_RTOL),
                    rel_margin(cap - d.st_norm, cap),
                );
            }
            if opts.deep {
                if let Some(v) = &d.vectors {
                    deep_check(
                        r,
                        v,
                        problem,
                        cfg,
                        opts,
                        theta,
                        kappa_t,
                        &mut deep_measures,
                        &mut deep_steps,
                    );
                }
            }
        }
        gamma_prev = r.gamma;
    }

    AuditReport {
        run_id: format!("{}/{}", problem.name(), variant),
        records: trace.len(),
        conditions: vec![
            sequence,
            kind_policy,
            switch,
            achle1,
            alpha_formula,
            gamma_book,
            n_descent,
            sn_feas,
            sn_bound,
            t_descent,
            st_feas,
            st_null,
            st_bound,
            deep_measures,
            deep_steps,
        ],
        adagrad: trace_check_adagrad(trace, cfg.eta, cfg.varsigma),
        rate: rate_monitor(&rate_values(trace)),
    }
}

/// Oracle-level re-verification of one record from its logged vectors.
#[allow(clippy::too_many_arguments)]
fn deep_check(
    r: &StepRecord,
    v: &crate::driver::StepVectors,
    problem: &Problem,
    cfg: &SolverConfig,
    opts: &AuditOptions,
    theta: f64,
    kappa_t: f64,
    measures: &mut ConditionReport,
    steps: &mut ConditionReport,
) {
    let k = r.k;
    let (lower, upper) = (problem.lower(), problem.upper());
    let x = &v.x;
    let c = problem.constraints(x);
    let j = problem.jacobian(x);
    let scale = 1.0 + norm_inf(x);

    let err = (norm_inf(&c) - r.norm_c_inf).abs();
    measures.record(k, err <= 1e-12 * (1.0 + r.norm_c_inf), -err);
    let g = if opts.exact_gradients {
        problem.gradient(x)
    } else {
        v.g.clone()
    };
    let meas = compute_measures(problem, x, &g, &c, &j, cfg);
    let tol = 1e-9 * (1.0 + r.omega_n);
    let err = (meas.omega_n - r.omega_n).abs();
    measures.record(k, err <= tol, tol - err);
    let tol = 1e-7 * (1.0 + r.omega_t);
    let err = (meas.omega_t - r.omega_t).abs();
    measures.record(k, err <= tol, tol - err);

    if let Some(s) = &v.s_n {
        let trial: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
        let viol = box_violation(&trial, lower, upper);
        steps.record(k, viol <= FEAS_RTOL * scale, -viol);
        let c_new = problem.constraints(&trial);
        let dec = 0.5 * dot(&c, &c) - 0.5 * dot(&c_new, &c_new);
        let required = cfg.kappa_n * r.omega_n * r.omega_n;
        steps.record(k, dec >= required, rel_margin(dec - required, required));
        let cap = cfg.theta_n * r.omega_n;
        steps.record(
            k,
            norm_inf(s) <= cap * (1.0 + BOOKKEEPING_RTOL),
            rel_margin(cap - norm_inf(s), cap),
        );
    }
    if let Some(s) = &v.s_t {
        let trial: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + b).collect();
        let viol = box_violation(&trial, lower, upper);
        steps.record(k, viol <= FEAS_RTOL * scale, -viol);
        let res = nullspace_residual(&j, s);
        let tol = NULL_RTOL * (1.0 + j.frobenius_norm() * norm2(s));
        steps.record(k, res <= tol, rel_margin(tol - res, tol));
        // descent against the gradient the solver actually saw
        let gts = dot(&v.g, s);
        let required = -kappa_t * r.alpha_t * r.omega_t * r.omega_t;
        steps.record(k, gts <= required, rel_margin(required - gts, required));
        let norm = variant_norm(cfg.variant, s);
        let cap = theta * r.alpha_t * r.omega_t;
        steps.record(
            k,
            norm <= cap * (1.0 + BOOKKEEPING_RTOL),
            rel_margin(cap - norm, cap),
        );
    }
}

fn variant_norm(v: Variant, s: &[f64]) -> f64 {
    v.step_norm(s)
}
