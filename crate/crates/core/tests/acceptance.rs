//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report is printed even when every check
//! passes. Exits nonzero when a criterion fails, unless it is listed in
//! `KNOWN_FAILURES`; a listed criterion that starts passing also fails the
//! run so the list stays accurate.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use adic::bench::{
    performance_profile_area, reliability, run_plan, write_results_csv, ExperimentPlan, GroupKey,
    RunRow,
};
use adic::diagnostics::{audit, rate_monitor, rate_values, RATE_FACTOR};
use adic::driver::{trace_check_adagrad, NormalPolicy, RunResult, TraceLevel};
use adic::model::{catalog, Problem};
use adic::{solve, RunStatus, SolverConfig, Variant};
use common::*;

const KNOWN_FAILURES: &[u32] = &[5];

const ORACLE_BUDGET_S: f64 = 30.0;
const CONVERGENCE_BUDGET_S: f64 = 300.0;
const NOISE_BUDGET_S: f64 = 1200.0;
const MIN_SOLVED_FRACTION: f64 = 0.8;
const SOLUTION_TOL: f64 = 1e-3;
const NOISE_LEVELS: [f64; 5] = [0.0, 0.05, 0.15, 0.25, 0.5];
const NOISE_SEEDS: usize = 20;
const NOISE_TOL: f64 = 1e-3;
const REL_RATIO: f64 = 0.7;
const REL_STEP: f64 = 10.0;
const PROFILE_TOL: f64 = 1e-12;
/// Reduced-gradient magnitude below which a bound is treated as degenerate.
const STRICT_COMPLEMENTARITY_TOL: f64 = 1e-6;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

struct MiniRun {
    problem: Problem,
    variant: Variant,
    result: RunResult,
}

fn mini_problems() -> Vec<Problem> {
    catalog::suite("mini")
        .unwrap()
        .into_iter()
        .map(|n| catalog::build(n).unwrap())
        .collect()
}

fn mini_runs() -> Vec<MiniRun> {
    let mut out = Vec::new();
    for problem in mini_problems() {
        for variant in Variant::ALL {
            let cfg = SolverConfig {
                trace: TraceLevel::Vectors,
                ..SolverConfig::with_variant(variant)
            };
            let result = solve(&mut problem.clone(), &cfg).unwrap();
            out.push(MiniRun {
                problem: problem.clone(),
                variant,
                result,
            });
        }
    }
    out
}

/// Whether every active bound at `xs` carries a reduced gradient of the
/// right sign and size; multipliers come from least squares on the free
/// variables.
fn strictly_complementary(p: &Problem, xs: &[f64]) -> bool {
    let n = p.n();
    let g = p.gradient(xs);
    let j = p.jacobian(xs);
    let at_lower: Vec<bool> = (0..n).map(|i| xs[i] == p.lower()[i]).collect();
    let at_upper: Vec<bool> = (0..n).map(|i| xs[i] == p.upper()[i]).collect();
    let free: Vec<usize> = (0..n).filter(|&i| !at_lower[i] && !at_upper[i]).collect();
    let m = p.m();
    // (J_F J_Fᵀ) λ = −J_F g_F
    let a: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            (0..m)
                .map(|s| free.iter().map(|&i| j[(r, i)] * j[(s, i)]).sum())
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..m)
        .map(|r| -free.iter().map(|&i| j[(r, i)] * g[i]).sum::<f64>())
        .collect();
    let Some(lambda) = gauss_solve(&a, &b) else {
        return false;
    };
    (0..n).all(|i| {
        let r = g[i] + (0..m).map(|k| j[(k, i)] * lambda[k]).sum::<f64>();
        if at_lower[i] && at_upper[i] {
            true
        } else if at_lower[i] {
            r > STRICT_COMPLEMENTARITY_TOL
        } else if at_upper[i] {
            r < -STRICT_COMPLEMENTARITY_TOL
        } else {
            true
        }
    })
}

fn criterion_oracles() -> Outcome {
    let t = Instant::now();
    let sep = separable_lp_sweep(200, 101);
    let eq = equality_lp_sweep(200, 102);
    let proj = projection_sweep(200, 103);
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "subproblem oracle equivalence",
        pass: sep.mismatches == 0 && eq.mismatches == 0 && proj.mismatches == 0 && secs < ORACLE_BUDGET_S,
        detail: format!(
            "separable {}/{} (worst {:.1e}), equality-box {}/{} (worst {:.1e}, tol 1e-9), projection {}/{} (worst {:.1e}, tol 1e-6), {secs:.1}s < {ORACLE_BUDGET_S}s",
            sep.instances - sep.mismatches,
            sep.instances,
            sep.worst,
            eq.instances - eq.mismatches,
            eq.instances,
            eq.worst,
            proj.instances - proj.mismatches,
            proj.instances,
            proj.worst,
        ),
    }
}

fn criterion_audit(runs: &[MiniRun]) -> Outcome {
    let mut violations = 0;
    let mut records = 0;
    let mut worst = String::from("-");
    for r in runs {
        let cfg = SolverConfig::with_variant(r.variant);
        let report = audit(&r.result.trace, &r.problem, &cfg);
        records += report.records;
        let v: usize = report.conditions.iter().map(|c| c.violations).sum();
        if v > 0 && violations == 0 {
            worst = format!("{} {}", r.problem.name(), r.variant);
        }
        violations += v;
    }
    Outcome {
        id: 2,
        name: "step-condition audit",
        pass: violations == 0,
        detail: format!(
            "{} runs, {records} records, {violations} violations (first: {worst})",
            runs.len()
        ),
    }
}

fn criterion_convergence(runs: &[MiniRun], secs: f64) -> Outcome {
    let mut pass = secs < CONVERGENCE_BUDGET_S;
    let mut parts = Vec::new();
    for v in Variant::ALL {
        let of: Vec<&MiniRun> = runs.iter().filter(|r| r.variant == v).collect();
        let solved = of.iter().filter(|r| r.result.status.is_critical()).count();
        let frac = solved as f64 / of.len() as f64;
        pass &= frac >= MIN_SOLVED_FRACTION && of.len() >= 12;
        parts.push(format!("{v} {solved}/{}", of.len()));
    }
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut off = Vec::new();
    for r in runs.iter().filter(|r| r.result.status == RunStatus::Kkt) {
        let Some(xs) = r.problem.known_solution() else {
            continue;
        };
        if !strictly_complementary(&r.problem, xs) {
            continue;
        }
        checked += 1;
        let err = max_abs_diff(&r.result.x, xs);
        worst = worst.max(err);
        if err > SOLUTION_TOL {
            off.push(format!("{} {}", r.problem.name(), r.variant));
        }
    }
    pass &= off.is_empty();
    Outcome {
        id: 3,
        name: "convergence on mini suite",
        pass,
        detail: format!(
            "solved {} (need {:.0}%), known solutions {checked} checked worst {worst:.1e} (tol {SOLUTION_TOL:.0e}) off [{}], {secs:.1}s < {CONVERGENCE_BUDGET_S}s",
            parts.join(", "),
            MIN_SOLVED_FRACTION * 100.0,
            off.join("; ")
        ),
    }
}

fn criterion_adagrad(runs: &[MiniRun]) -> Outcome {
    let cfg = SolverConfig::default();
    let failing: Vec<String> = runs
        .iter()
        .filter(|r| !trace_check_adagrad(&r.result.trace, cfg.eta, cfg.varsigma).holds())
        .map(|r| format!("{} {}", r.problem.name(), r.variant))
        .collect();
    Outcome {
        id: 4,
        name: "adagrad summation inequalities",
        pass: failing.is_empty(),
        detail: format!(
            "{}/{} traces hold, failing [{}]",
            runs.len() - failing.len(),
            runs.len(),
            failing.join("; ")
        ),
    }
}

fn criterion_rate(runs: &[MiniRun]) -> Outcome {
    let solved: Vec<&MiniRun> = runs
        .iter()
        .filter(|r| r.result.status.is_critical())
        .collect();
    let mut held = 0;
    let mut worst = (0.0f64, String::new());
    for r in &solved {
        let m = rate_monitor(&rate_values(&r.result.trace));
        if m.holds() {
            held += 1;
        }
        if m.max_ratio > worst.0 {
            worst = (m.max_ratio, format!("{} {}", r.problem.name(), r.variant));
        }
    }
    Outcome {
        id: 5,
        name: "rate monitor",
        pass: held == solved.len(),
        detail: format!(
            "{held}/{} solved runs within factor {RATE_FACTOR}, worst ratio {:.3} ({})",
            solved.len(),
            worst.0,
            worst.1
        ),
    }
}

fn noise_plan(policy: NormalPolicy) -> ExperimentPlan {
    let names = catalog::suite("mini")
        .unwrap()
        .into_iter()
        .map(String::from)
        .collect();
    let mut plan = ExperimentPlan::new(
        names,
        vec![Variant::Lp, Variant::Pr],
        NOISE_LEVELS.to_vec(),
        NOISE_SEEDS,
    );
    plan.base.tol_dual = NOISE_TOL;
    plan.base.tol_primal = NOISE_TOL;
    plan.noisy_tolerances = None;
    plan.base.normal_when_switch = policy;
    plan
}

fn rel_table(rows: &[RunRow]) -> Vec<(Variant, Vec<f64>)> {
    let rel = reliability(rows, &[GroupKey::Variant, GroupKey::Noise]);
    [Variant::Lp, Variant::Pr]
        .into_iter()
        .map(|v| {
            let vals = NOISE_LEVELS
                .iter()
                .map(|&s| {
                    rel.iter()
                        .find(|r| r.variant == Some(v) && r.noise == Some(s))
                        .map_or(f64::NAN, |r| r.rel)
                })
                .collect();
            (v, vals)
        })
        .collect()
}

fn fmt_rel(table: &[(Variant, Vec<f64>)]) -> String {
    table
        .iter()
        .map(|(v, vals)| {
            let s: Vec<String> = vals.iter().map(|x| format!("{x:.1}")).collect();
            format!("{v} [{}]", s.join(" "))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn stable(vals: &[f64]) -> bool {
    vals[vals.len() - 1] >= REL_RATIO * vals[0]
        && vals.windows(2).all(|w| (w[1] - w[0]).abs() <= REL_STEP)
}

fn criterion_noise() -> Outcome {
    let t = Instant::now();
    let rows: Vec<RunRow> = run_plan(&noise_plan(NormalPolicy::Always))
        .unwrap()
        .iter()
        .map(RunRow::from)
        .collect();
    let secs = t.elapsed().as_secs_f64();
    let table = rel_table(&rows);
    let pass = secs < NOISE_BUDGET_S && table.iter().all(|(_, v)| stable(v));

    let t = Instant::now();
    let default_rows: Vec<RunRow> = run_plan(&noise_plan(NormalPolicy::Never))
        .unwrap()
        .iter()
        .map(RunRow::from)
        .collect();
    let info = rel_table(&default_rows);
    println!(
        "  info: with normal steps only on switch failure: {} ({:.1}s)",
        fmt_rel(&info),
        t.elapsed().as_secs_f64()
    );
    Outcome {
        id: 6,
        name: "noise robustness",
        pass,
        detail: format!(
            "normal step every iteration, Rel % over noise {NOISE_LEVELS:?}: {}; need Rel(0.5) >= {REL_RATIO}*Rel(0) and adjacent steps <= {REL_STEP} points; {} runs in {secs:.1}s < {NOISE_BUDGET_S}s",
            fmt_rel(&table),
            rows.len()
        ),
    }
}

fn criterion_profile() -> Outcome {
    let costs = vec![vec![Some(10.0), Some(20.0)], vec![Some(20.0), None]];
    let s = performance_profile_area(&costs, 10.0).unwrap();
    let expected = [1.0, 4.0 / 9.0];
    let err = s
        .areas
        .iter()
        .zip(expected)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0, f64::max);
    Outcome {
        id: 7,
        name: "profile arithmetic",
        pass: err <= PROFILE_TOL,
        detail: format!(
            "areas {:?}, max error {err:.1e} (tol {PROFILE_TOL:.0e})",
            s.areas
        ),
    }
}

fn csv_without_timing(rows: &[RunRow]) -> String {
    let mut buf = Vec::new();
    write_results_csv(rows, &mut buf).unwrap();
    String::from_utf8(buf)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_determinism() -> Outcome {
    let names = catalog::suite("mini")
        .unwrap()
        .into_iter()
        .map(String::from)
        .collect();
    let mut plan = ExperimentPlan::new(names, Variant::ALL.to_vec(), vec![0.0, 0.25], 2);
    plan.base.max_iters = 5_000;
    let run = || -> Vec<RunRow> { run_plan(&plan).unwrap().iter().map(RunRow::from).collect() };
    let a = csv_without_timing(&run());
    let b = csv_without_timing(&run());
    let lines = a.lines().count() - 1;
    Outcome {
        id: 8,
        name: "determinism",
        pass: a == b,
        detail: format!("{lines} rows compared without wall_s"),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut outcomes = vec![criterion_oracles()];
    let t = Instant::now();
    let runs = mini_runs();
    let secs = t.elapsed().as_secs_f64();
    outcomes.push(criterion_audit(&runs));
    outcomes.push(criterion_convergence(&runs, secs));
    outcomes.push(criterion_adagrad(&runs));
    outcomes.push(criterion_rate(&runs));
    outcomes.push(criterion_noise());
    outcomes.push(criterion_profile());
    outcomes.push(criterion_determinism());

    let mut ok = true;
    for o in &outcomes {
        let known = KNOWN_FAILURES.contains(&o.id);
        let verdict = match (o.pass, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (listed as known failure)",
        };
        ok &= o.pass != known;
        println!("criterion {} {}: {verdict}: {}", o.id, o.name, o.detail);
    }
    println!("acceptance total {:.1}s", start.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
