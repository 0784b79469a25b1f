use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::RunRow;
use crate::driver::RunStatus;
use crate::error::{AdicError, Result};
use crate::steps::Variant;

/// Ratio-to-best at which profiles are truncated.
pub const PROFILE_T_MAX: f64 = 10.0;

/// Iteration counts below this are treated as this value so that runs
/// finishing at the start point still have a positive cost.
const MIN_ITER_COST: f64 = 1.0;
const MIN_TIME_COST: f64 = 1e-6;

/// Areas under truncated performance profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileStats {
    /// Per-solver area in `[0, 1]`.
    pub areas: Vec<f64>,
    /// `ratios[s][p]`, `∞` on failure, over the kept problems.
    pub ratios: Vec<Vec<f64>>,
    /// Indices of problems kept (at least one solver succeeded).
    pub kept: Vec<usize>,
}

/// `costs[s][p]` is solver `s`'s cost on problem `p`, `None` on failure.
///
/// Each problem's ratios are taken against its best cost; a solver's
/// profile `ρ_s(t)` is the fraction of problems with ratio `≤ t`, and its
/// area is `∫₁^{t_max} ρ_s(t) dt / (t_max − 1)`, evaluated exactly.
/// Problems no solver solved are dropped.
pub fn performance_profile_area(costs: &[Vec<Option<f64>>], t_max: f64) -> Result<ProfileStats> {
    let solvers = costs.len();
    if solvers < 2 {
        return Err(AdicError::InvalidConfig(
            "profiles need at least two solvers".into(),
        ));
    }
    let problems = costs[0].len();
    if problems == 0 || costs.iter().any(|c| c.len() != problems) {
        return Err(AdicError::InvalidConfig(
            "profiles need at least one problem and a rectangular cost table".into(),
        ));
    }
    if !(t_max > 1.0) {
        return Err(AdicError::InvalidConfig("t_max must exceed 1".into()));
    }
    if costs
        .iter()
        .flatten()
        .flatten()
        .any(|c| !(c.is_finite() && *c > 0.0))
    {
        return Err(AdicError::InvalidConfig(
            "costs must be positive and finite".into(),
        ));
    }

    let kept: Vec<usize> = (0..problems)
        .filter(|&p| costs.iter().any(|c| c[p].is_some()))
        .collect();
    let mut ratios = vec![Vec::with_capacity(kept.len()); solvers];
    for &p in &kept {
        let best = costs
            .iter()
            .filter_map(|c| c[p])
            .fold(f64::INFINITY, f64::min);
        for (s, c) in costs.iter().enumerate() {
            ratios[s].push(c[p].map_or(f64::INFINITY, |v| v / best));
        }
    }
    let areas = ratios
        .iter()
        .map(|rs| {
            if rs.is_empty() {
                return 0.0;
            }
            let integral: f64 = rs
                .iter()
                .filter(|&&r| r <= t_max)
                .map(|&r| t_max - r.max(1.0))
                .sum();
            integral / (rs.len() as f64 * (t_max - 1.0))
        })
        .collect();
    Ok(ProfileStats {
        areas,
        ratios,
        kept,
    })
}

/// Grouping dimensions for [`reliability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Problem,
    Variant,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReliabilityRow {
    pub problem: Option<String>,
    pub variant: Option<Variant>,
    pub noise: Option<f64>,
    pub runs: usize,
    /// Percentage of runs meeting the χ-based termination test
    /// (KKT or infeasible critical).
    pub rel: f64,
    /// Percentage of KKT runs.
    pub rel_strict: f64,
}

type Key = (Option<String>, Option<Variant>, Option<u64>);

/// Reliability per group, sorted by group key. Empty groups do not
/// appear.
pub fn reliability(rows: &[RunRow], group: &[GroupKey]) -> Vec<ReliabilityRow> {
    let mut counts: BTreeMap<Key, (usize, usize, usize)> = BTreeMap::new();
    for r in rows {
        let key = (
            group
                .contains(&GroupKey::Problem)
                .then(|| r.problem.clone()),
            group.contains(&GroupKey::Variant).then_some(r.variant),
            // nonnegative floats order like their bit patterns
            group.contains(&GroupKey::Noise).then(|| r.noise.to_bits()),
        );
        let e = counts.entry(key).or_default();
        e.0 += 1;
        e.1 += usize::from(r.status.is_critical());
        e.2 += usize::from(r.status == RunStatus::Kkt);
    }
    counts
        .into_iter()
        .map(
            |((problem, variant, noise), (runs, solved, strict))| ReliabilityRow {
                problem,
                variant,
                noise: noise.map(f64::from_bits),
                runs,
                rel: 100.0 * solved as f64 / runs as f64,
                rel_strict: 100.0 * strict as f64 / runs as f64,
            },
        )
        .collect()
}

/// Per-noise, per-variant summary: profile areas and reliability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub noise: f64,
    pub variant: Variant,
    pub runs: usize,
    pub iters_area: f64,
    pub time_area: f64,
    pub rel: f64,
    pub rel_strict: f64,
}

/// Builds profile statistics for each noise level. Every (problem, seed)
/// pair is one profile instance; success means meeting the χ test.
pub fn profile_by_noise(rows: &[RunRow]) -> Vec<ProfileRow> {
    let mut variants: Vec<Variant> = rows.iter().map(|r| r.variant).collect();
    variants.sort();
    variants.dedup();
    let mut noises: Vec<f64> = rows.iter().map(|r| r.noise).collect();
    noises.sort_by(f64::total_cmp);
    noises.dedup();

    let rel = reliability(rows, &[GroupKey::Variant, GroupKey::Noise]);
    let mut out = Vec::new();
    for &noise in &noises {
        let at: Vec<&RunRow> = rows.iter().filter(|r| r.noise == noise).collect();
        let mut instances: Vec<(&str, usize)> =
            at.iter().map(|r| (r.problem.as_str(), r.seed)).collect();
        instances.sort();
        instances.dedup();
        let lookup: BTreeMap<(&str, usize, Variant), &RunRow> = at
            .iter()
            .map(|r| ((r.problem.as_str(), r.seed, r.variant), *r))
            .collect();
        let table = |cost: fn(&RunRow) -> f64| -> Vec<Vec<Option<f64>>> {
            variants
                .iter()
                .map(|&v| {
                    instances
                        .iter()
                        .map(|&(p, s)| {
                            lookup
                                .get(&(p, s, v))
                                .filter(|r| r.status.is_critical())
                                .map(|r| cost(r))
                        })
                        .collect()
                })
                .collect()
        };
        let iter_table = table(|r| (r.iters as f64).max(MIN_ITER_COST));
        let time_table = table(|r| r.wall_s.max(MIN_TIME_COST));
        let areas = |t: &[Vec<Option<f64>>]| {
            performance_profile_area(t, PROFILE_T_MAX)
                .map(|s| s.areas)
                .unwrap_or_else(|_| vec![f64::NAN; variants.len()])
        };
        let ia = areas(&iter_table);
        let ta = areas(&time_table);
        for (i, &v) in variants.iter().enumerate() {
            let r = rel
                .iter()
                .find(|r| r.variant == Some(v) && r.noise == Some(noise));
            out.push(ProfileRow {
                noise,
                variant: v,
                runs: r.map_or(0, |r| r.runs),
                iters_area: ia[i],
                time_area: ta[i],
                rel: r.map_or(f64::NAN, |r| r.rel),
                rel_strict: r.map_or(f64::NAN, |r| r.rel_strict),
            });
        }
    }
    out
}

pub fn write_profile_csv<W: Write>(rows: &[ProfileRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
