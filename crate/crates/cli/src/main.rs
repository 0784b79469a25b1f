use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use adic::bench::{
    self, profile_by_noise, reliability, write_profile_csv, write_results_csv, Cell, Execution,
    ExperimentPlan, GroupKey, RunRow,
};
use adic::diagnostics::{audit_with, AuditOptions};
use adic::driver::{read_trace_jsonl, write_trace_jsonl, TraceLevel};
use adic::model::catalog;
use adic::{SolverConfig, Variant};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adic",
    version,
    about = "Objective-function-free solver for equality and bound constrained problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one catalog problem.
    Run(RunArgs),
    /// Run a problem × variant × noise × seed matrix.
    Bench(BenchArgs),
    /// Check a JSON-lines trace against the step conditions.
    Audit(AuditArgs),
    /// List catalog problems.
    List,
}

#[derive(Args)]
struct Limits {
    #[arg(long)]
    max_iters: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    tol_dual: Option<f64>,
    #[arg(long)]
    tol_primal: Option<f64>,
}

impl Limits {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.time_limit {
            cfg.time_limit_s = v;
        }
        if let Some(v) = self.tol_dual {
            cfg.tol_dual = v;
        }
        if let Some(v) = self.tol_primal {
            cfg.tol_primal = v;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "lp")]
    variant: Variant,
    /// Relative gradient noise level.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seed index; the RNG seed is derived from (problem, variant, noise, seed).
    #[arg(long, default_value_t = 0)]
    seed: usize,
    #[command(flatten)]
    limits: Limits,
    /// Write the per-iteration trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also print the reference objective at the final point.
    #[arg(long)]
    report_f: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "mini")]
    suite: String,
    #[arg(long, value_delimiter = ',', default_value = "lp,bk,pr")]
    variants: Vec<Variant>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    noise: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Per-noise, per-variant profile areas and reliability.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Write final reference objective values to this CSV.
    #[arg(long)]
    report_f: Option<PathBuf>,
    /// Run cells one at a time.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    problem: String,
    /// Variant that produced the trace.
    #[arg(long, default_value = "lp")]
    variant: Variant,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Bench(a) => run_bench(a),
        Command::Audit(a) => run_audit(a),
        Command::List => list(),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(a: RunArgs) -> Result<ExitCode> {
    if !(a.noise.is_finite() && a.noise >= 0.0) {
        bail!("--noise must be finite and nonnegative");
    }
    let mut plan = ExperimentPlan::new(vec![a.problem.clone()], vec![a.variant], vec![a.noise], 1);
    a.limits.apply(&mut plan.base);
    if a.limits.tol_dual.is_some() || a.limits.tol_primal.is_some() {
        plan.noisy_tolerances = None;
    }
    if a.trace.is_some() {
        plan.base.trace = TraceLevel::Records;
        plan.base.compute_psi = true;
    }
    plan.report_f = a.report_f;
    let cell = Cell {
        problem: a.problem.clone(),
        variant: a.variant,
        noise: a.noise,
        seed: a.seed,
    };
    let run = bench::run_cell(&plan, &cell)?;
    let r = &run.result;
    if let Some(path) = &a.trace {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        write_trace_jsonl(&r.trace, &mut w)?;
        w.flush()?;
    }
    println!("problem: {}", a.problem);
    println!("variant: {}", a.variant);
    println!("noise: {}", a.noise);
    println!("seed: {}", a.seed);
    println!("status: {}", r.status);
    println!("iters: {}", r.iters);
    println!("tangential_iters: {}", r.tangential_count);
    println!("normal_iters: {}", r.normal_count);
    println!("final_chi_t: {:.6e}", r.chi_t);
    println!("final_chi_n: {:.6e}", r.chi_n);
    println!("final_omega_t: {:.6e}", r.omega_t);
    println!("final_norm_c_inf: {:.6e}", r.norm_c_inf);
    println!("wall_s: {:.6}", r.wall_time_s);
    println!("x: {}", fmt_vec(&r.x));
    if a.report_f {
        match run.final_f {
            Some(f) => println!("final_f: {f:.12e}"),
            None => println!("final_f: n/a"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_bench(a: BenchArgs) -> Result<ExitCode> {
    let Some(problems) = catalog::suite(&a.suite) else {
        bail!("unknown suite {:?} (expected mini or all)", a.suite);
    };
    if a.variants.is_empty() || a.noise.is_empty() || a.seeds == 0 {
        bail!("empty plan");
    }
    let mut plan = ExperimentPlan::new(
        problems.into_iter().map(String::from).collect(),
        a.variants.clone(),
        a.noise.clone(),
        a.seeds,
    );
    a.limits.apply(&mut plan.base);
    if a.limits.tol_dual.is_some() || a.limits.tol_primal.is_some() {
        plan.noisy_tolerances = None;
    }
    plan.execution = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    plan.report_f = a.report_f.is_some();

    let runs = bench::run_plan(&plan)?;
    let rows: Vec<RunRow> = runs.iter().map(RunRow::from).collect();
    let f = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_results_csv(&rows, BufWriter::new(f))?;

    if let Some(path) = &a.profile {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_profile_csv(&profile_by_noise(&rows), BufWriter::new(f))?;
    }
    if let Some(path) = &a.report_f {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(["problem", "variant", "noise", "seed", "final_f"])?;
        for r in &runs {
            w.write_record([
                r.cell.problem.clone(),
                r.cell.variant.to_string(),
                r.cell.noise.to_string(),
                r.cell.seed.to_string(),
                r.final_f.map_or(String::new(), |v| v.to_string()),
            ])?;
        }
        w.flush()?;
    }

    println!("runs: {}", rows.len());
    println!("results: {}", a.out.display());
    for r in reliability(&rows, &[GroupKey::Variant, GroupKey::Noise]) {
        println!(
            "rel[{},{}]: {:.2} (strict {:.2}, runs {})",
            r.variant.map_or("-".into(), |v| v.to_string()),
            r.noise.unwrap_or(f64::NAN),
            r.rel,
            r.rel_strict,
            r.runs
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn run_audit(a: AuditArgs) -> Result<ExitCode> {
    let problem = catalog::build(&a.problem)?;
    let f = File::open(&a.trace).with_context(|| format!("opening {}", a.trace.display()))?;
    let trace = read_trace_jsonl(BufReader::new(f))?;
    let cfg = SolverConfig::with_variant(a.variant);
    let mut report = audit_with(&trace, &problem, &cfg, &AuditOptions::default());
    report.run_id = format!("{} ({}, {})", a.trace.display(), a.problem, a.variant);
    println!("{report}");
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn list() -> Result<ExitCode> {
    for e in catalog::catalog_list() {
        println!("{}: {}", e.name, e.tags.join(","));
    }
    Ok(ExitCode::SUCCESS)
}
