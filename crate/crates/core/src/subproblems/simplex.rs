//! Bounded-variable primal simplex for `min cᵀd  s.t.  J d = 0, l ≤ d ≤ u`.
//!
//! A dense tableau is kept for `[J | D]`, where `D` is a ±1 diagonal of
//! artificial columns chosen so that the artificials start nonnegative.
//! Phase one drives the artificials to zero, after which they are fixed at
//! `[0, 0]` and phase two optimizes the real cost. Artificials that stay
//! basic at zero absorb linearly dependent rows of `J`.
//!
//! Pricing is Dantzig's rule, switching permanently to Bland's rule after a
//! run of degenerate pivots.

use super::lp::{solve_separable_lp, BoxLpInstance, LpSolution, LpStatus};
use crate::linalg::{dot, solve_dense, DenseMatrix};

const PIVOT_TOL: f64 = 1e-9;

struct Tableau {
    m: usize,
    /// structural + artificial columns
    ncols: usize,
    tab: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    xb: Vec<f64>,
    pivots: usize,
    pivot_limit: usize,
    degenerate_streak: usize,
    bland: bool,
}

enum PhaseOutcome {
    Optimal,
    Limit,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.tab[i * self.ncols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.hi[j]
        } else {
            self.lo[j]
        }
    }

    fn run_phase(&mut self, cost: &[f64], opt_tol: f64) -> PhaseOutcome {
        let m = self.m;
        let ncols = self.ncols;
        let mut reduced = vec![0.0; ncols];
        loop {
            // reduced costs
            reduced.copy_from_slice(cost);
            for i in 0..m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    let row = &self.tab[i * ncols..(i + 1) * ncols];
                    for (r, &t) in reduced.iter_mut().zip(row) {
                        *r -= cb * t;
                    }
                }
            }

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..ncols {
                if self.is_basic[j] || self.hi[j] <= self.lo[j] {
                    continue;
                }
                let dj = reduced[j];
                let improving = if self.at_upper[j] {
                    dj > opt_tol
                } else {
                    dj < -opt_tol
                };
                if !improving {
                    continue;
                }
                if self.bland {
                    entering = Some((j, dj));
                    break;
                }
                if entering.is_none_or(|(_, best)| dj.abs() > best.abs()) {
                    entering = Some((j, dj));
                }
            }
            let Some((j, _)) = entering else {
                return PhaseOutcome::Optimal;
            };
            if self.pivots >= self.pivot_limit {
                return PhaseOutcome::Limit;
            }
            self.pivots += 1;

            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
            let mut t_max = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = dir * self.at(i, j);
                let b = self.basis[i];
                let limit = if a > PIVOT_TOL {
                    if self.lo[b].is_finite() {
                        ((self.xb[i] - self.lo[b]) / a).max(0.0)
                    } else {
                        continue;
                    }
                } else if a < -PIVOT_TOL {
                    if self.hi[b].is_finite() {
                        ((self.hi[b] - self.xb[i]) / -a).max(0.0)
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < t_max,
                    Some((r, _)) => {
                        if limit < t_max - 1e-12 {
                            true
                        } else if limit <= t_max + 1e-12 {
                            if self.bland {
                                b < self.basis[r]
                            } else {
                                a.abs() > (dir * self.at(r, j)).abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    t_max = limit.min(t_max);
                    leave = Some((i, a));
                }
            }

            if !t_max.is_finite() {
                // cannot happen: every column with an improving direction is
                // bounded in the phase where it can enter
                return PhaseOutcome::Limit;
            }

            if t_max == 0.0 {
                self.degenerate_streak += 1;
                if self.degenerate_streak > self.m + self.ncols {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }

            for i in 0..m {
                let a = self.at(i, j);
                if a != 0.0 {
                    self.xb[i] -= dir * t_max * a;
                }
            }

            match leave {
                None => {
                    // bound flip
                    self.at_upper[j] = !self.at_upper[j];
                }
                Some((r, a)) => {
                    let entering_value = self.nonbasic_value(j) + dir * t_max;
                    let old = self.basis[r];
                    self.is_basic[old] = false;
                    self.at_upper[old] = a < 0.0;
                    self.basis[r] = j;
                    self.is_basic[j] = true;
                    self.at_upper[j] = false;
                    self.xb[r] = entering_value;
                    self.pivot(r, j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let ncols = self.ncols;
        let p = self.at(r, j);
        let inv = 1.0 / p;
        for v in &mut self.tab[r * ncols..(r + 1) * ncols] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.tab[r * ncols..(r + 1) * ncols].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * ncols + j];
            if f != 0.0 {
                let row = &mut self.tab[i * ncols..(i + 1) * ncols];
                for (v, &pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[j] = 0.0;
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.ncols).map(|j| self.nonbasic_value(j)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.xb[i];
        }
        v
    }
}

/// Vertex-optimal solution of the equality-constrained box LP.
///
/// Without equality rows this is the separable LP. The pivot budget is
/// `50·(n + m)`; exceeding it yields [`LpStatus::IterationLimit`] together
/// with the best feasible point found.
pub fn solve_equality_box_lp(inst: &BoxLpInstance<'_>) -> LpSolution {
    let n = inst.cost.len();
    assert_eq!(inst.lower.len(), n);
    assert_eq!(inst.upper.len(), n);
    let j = match inst.equality {
        Some(j) if j.rows() > 0 => j,
        _ => return solve_separable_lp(inst.cost, inst.lower, inst.upper),
    };
    assert_eq!(j.cols(), n, "equality matrix column count");
    let m = j.rows();
    let ncols = n + m;

    let mut lo = inst.lower.to_vec();
    let mut hi = inst.upper.to_vec();
    lo.extend(std::iter::repeat_n(0.0, m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, m));

    // Start every structural at the bound favoured by its cost.
    let mut at_upper = vec![false; ncols];
    for k in 0..n {
        let c = inst.cost[k];
        at_upper[k] = if c < 0.0 {
            true
        } else if c > 0.0 {
            false
        } else {
            hi[k].abs() < lo[k].abs()
        };
    }
    let start: Vec<f64> = (0..n)
        .map(|k| if at_upper[k] { hi[k] } else { lo[k] })
        .collect();
    let residual = j.mul_vec(&start);
    // artificial sign: D_ii a_i = -r_i with a_i = |r_i|
    let signs: Vec<f64> = residual
        .iter()
        .map(|&r| if r > 0.0 { -1.0 } else { 1.0 })
        .collect();

    let mut tab = vec![0.0; m * ncols];
    for i in 0..m {
        let s = signs[i];
        for k in 0..n {
            tab[i * ncols + k] = s * j[(i, k)];
        }
        tab[i * ncols + n + i] = 1.0;
    }
    let basis: Vec<usize> = (n..ncols).collect();
    let mut is_basic = vec![false; ncols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let xb: Vec<f64> = residual.iter().map(|r| r.abs()).collect();

    let mut t = Tableau {
        m,
        ncols,
        tab,
        basis,
        is_basic,
        at_upper,
        lo,
        hi,
        xb,
        pivots: 0,
        pivot_limit: 50 * (n + m),
        degenerate_streak: 0,
        bland: false,
    };

    let mut phase1_cost = vec![0.0; ncols];
    for c in &mut phase1_cost[n..] {
        *c = 1.0;
    }
    if let PhaseOutcome::Limit = t.run_phase(&phase1_cost, 1e-12) {
        return zero_solution(n);
    }

    for a in n..ncols {
        t.hi[a] = 0.0;
        if !t.is_basic[a] {
            t.at_upper[a] = false;
        }
    }
    let mut cost = inst.cost.to_vec();
    cost.extend(std::iter::repeat_n(0.0, m));
    let cost_scale = inst.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let status = match t.run_phase(&cost, 1e-12 * (1.0 + cost_scale)) {
        PhaseOutcome::Optimal => LpStatus::Optimal,
        PhaseOutcome::Limit => LpStatus::IterationLimit,
    };

    let mut values = t.values();
    refine_basic_values(j, &signs, &t.basis, &mut values);
    let mut d: Vec<f64> = values[..n].to_vec();
    for k in 0..n {
        d[k] = d[k].max(inst.lower[k]).min(inst.upper[k]);
    }
    let objective = dot(inst.cost, &d);
    if objective > 0.0 {
        // d = 0 is always feasible; a positive objective means numerical
        // trouble, fall back to the safe point
        return zero_solution(n);
    }
    LpSolution {
        d,
        objective,
        status,
    }
}

fn zero_solution(n: usize) -> LpSolution {
    LpSolution {
        d: vec![0.0; n],
        objective: 0.0,
        status: LpStatus::IterationLimit,
    }
}

/// Recomputes basic values from the original columns, removing the drift
/// accumulated by tableau updates.
fn refine_basic_values(j: &DenseMatrix, signs: &[f64], basis: &[usize], values: &mut [f64]) {
    let m = j.rows();
    let n = j.cols();
    let column = |k: usize, i: usize| -> f64 {
        if k < n {
            j[(i, k)]
        } else if k - n == i {
            signs[i]
        } else {
            0.0
        }
    };
    let mut b = DenseMatrix::zeros(m, m);
    for (col, &k) in basis.iter().enumerate() {
        for i in 0..m {
            b[(i, col)] = column(k, i);
        }
    }
    let mut rhs = vec![0.0; m];
    let mut in_basis = vec![false; n + m];
    for &k in basis {
        in_basis[k] = true;
    }
    for k in 0..n + m {
        if in_basis[k] || values[k] == 0.0 {
            continue;
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r -= column(k, i) * values[k];
        }
    }
    if let Some(xb) = solve_dense(&b, &rhs) {
        for (col, &k) in basis.iter().enumerate() {
            values[k] = xb[col];
        }
    }
}
