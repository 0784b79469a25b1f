use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{AdicError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Tangential step only.
    T,
    /// Normal step only.
    N,
    /// Normal step followed by a tangential step.
    TN,
    /// No step (terminal evaluation or stalled iteration).
    #[serde(rename = "none")]
    None,
}

impl StepKind {
    pub fn is_tangential(self) -> bool {
        matches!(self, StepKind::T | StepKind::TN)
    }

    pub fn is_normal(self) -> bool {
        matches!(self, StepKind::N | StepKind::TN)
    }
}

/// One line of the exported trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub kind: StepKind,
    pub omega_t: f64,
    pub omega_n: f64,
    pub alpha_t: f64,
    /// Γ after this iteration.
    pub gamma: f64,
    pub norm_c_inf: f64,
    /// `gᵀs_T`, 0 without a tangential step.
    pub g_dot_st: f64,
    /// `½‖c_k‖² − ½‖c(x_k + s_N)‖²`, 0 without a normal step.
    pub normal_decrease: f64,
    pub psi: Option<f64>,
    /// Milliseconds since the start of the run.
    pub wall_ms: f64,
    /// In-memory audit data; never exported.
    #[serde(skip)]
    pub detail: Option<StepDetail>,
}

/// Extra per-iteration quantities kept for auditing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepDetail {
    pub norm_c: f64,
    pub chi_t: f64,
    pub chi_n: f64,
    pub gamma_before: f64,
    /// `‖x_k + s_N − clamp‖∞`
    pub sn_box_violation: f64,
    pub sn_norm_inf: f64,
    /// `‖x_k + s_T − clamp‖∞`
    pub st_box_violation: f64,
    /// `‖s_T‖` in the variant's norm.
    pub st_norm: f64,
    /// `‖J_k s_T‖∞`
    pub st_null_residual: f64,
    pub st_norm2: f64,
    pub jac_fro: f64,
    pub x_norm_inf: f64,
    /// Tangential step computed but rejected by the a-posteriori check.
    pub tangential_rejected: bool,
    /// Normal step attempted but radius reductions exhausted.
    pub normal_failed: bool,
    pub projection_converged: bool,
    pub vectors: Option<StepVectors>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepVectors {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub s_n: Option<Vec<f64>>,
    pub s_t: Option<Vec<f64>>,
}

/// Writes one JSON object per record.
pub fn write_trace_jsonl<W: Write>(records: &[StepRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a JSON-lines trace; blank lines are skipped.
pub fn read_trace_jsonl<R: BufRead>(input: R) -> Result<Vec<StepRecord>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StepRecord = serde_json::from_str(&line).map_err(|e| AdicError::TraceParse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
