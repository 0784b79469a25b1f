//! Brute-force reference solvers and random instance generators shared by
//! the integration tests. The reference solvers use no library code.

#![allow(dead_code)]

use adic::linalg::DenseMatrix;
use adic::subproblems::{
    dykstra_project, solve_equality_box_lp, solve_separable_lp, BoxLpInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `a x = b` (row-major `n×n`) by Gaussian elimination with partial
/// pivoting. `None` when a pivot falls below `1e-12` times the largest
/// entry.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum of `cᵀd` over `d ∈ ∏{lᵢ, 0, uᵢ}` by full enumeration.
pub fn enumerate_separable(cost: &[f64], lower: &[f64], upper: &[f64]) -> (f64, Vec<f64>) {
    let n = cost.len();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut k = code;
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let v = [lower[i], 0.0, upper[i]][k % 3];
                k /= 3;
                v
            })
            .collect();
        let obj = dot(cost, &d);
        if obj < best.0 {
            best = (obj, d);
        }
    }
    best
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum of `cᵀd` subject to `J d = 0`, `l ≤ d ≤ u` over all basic
/// points: `m` basic columns, every other variable at one of its bounds.
/// `J` is `m×n` with full row rank.
pub fn enumerate_basic(cost: &[f64], j: &[Vec<f64>], lower: &[f64], upper: &[f64]) -> Option<f64> {
    let n = cost.len();
    let m = j.len();
    let mut best: Option<f64> = None;
    for basis in subsets(n, m) {
        let nonbasic: Vec<usize> = (0..n).filter(|i| !basis.contains(i)).collect();
        let b_mat: Vec<Vec<f64>> = (0..m)
            .map(|r| basis.iter().map(|&c| j[r][c]).collect())
            .collect();
        for code in 0..(1usize << nonbasic.len()) {
            let mut d = vec![0.0; n];
            for (bit, &i) in nonbasic.iter().enumerate() {
                d[i] = if code >> bit & 1 == 1 {
                    upper[i]
                } else {
                    lower[i]
                };
            }
            let rhs: Vec<f64> = (0..m)
                .map(|r| -nonbasic.iter().map(|&i| j[r][i] * d[i]).sum::<f64>())
                .collect();
            let Some(db) = gauss_solve(&b_mat, &rhs) else {
                continue;
            };
            let tol = 1e-10 * (1.0 + db.iter().fold(0.0f64, |a, v| a.max(v.abs())));
            let feasible = basis
                .iter()
                .zip(&db)
                .all(|(&i, &v)| v >= lower[i] - tol && v <= upper[i] + tol);
            if !feasible {
                continue;
            }
            for (&i, &v) in basis.iter().zip(&db) {
                d[i] = v;
            }
            let obj = dot(cost, &d);
            if best.is_none_or(|b| obj < b) {
                best = Some(obj);
            }
        }
    }
    best
}

/// Projection of `−g` onto `{y : J y = 0, l ≤ y ≤ u}` by active-set
/// enumeration: every variable is free, at its lower bound or at its
/// upper bound; free variables solve the equality-constrained least-squares
/// problem; the best feasible candidate is the projection.
pub fn enumerate_projection(g: &[f64], j: &[Vec<f64>], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let n = g.len();
    let m = j.len();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for code in 0..3usize.pow(n as u32) {
        let mut k = code;
        let state: Vec<usize> = (0..n)
            .map(|_| {
                let s = k % 3;
                k /= 3;
                s
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut y = vec![0.0; n];
        for i in 0..n {
            match state[i] {
                1 => y[i] = lower[i],
                2 => y[i] = upper[i],
                _ => {}
            }
        }
        // y_F = −g_F + J_Fᵀμ with (J_F J_Fᵀ) μ = J_F g_F − J_A y_A
        let rows: Vec<usize> = (0..m)
            .filter(|&r| free.iter().any(|&i| j[r][i] != 0.0))
            .collect();
        let fixed_res: Vec<f64> = (0..m)
            .map(|r| {
                (0..n)
                    .filter(|i| state[*i] != 0)
                    .map(|i| j[r][i] * y[i])
                    .sum()
            })
            .collect();
        if rows.len() < m {
            // a row without free entries must already be satisfied
            let ok = (0..m)
                .filter(|r| !rows.contains(r))
                .all(|r| fixed_res[r].abs() <= 1e-12);
            if !ok {
                continue;
            }
        }
        let gram: Vec<Vec<f64>> = rows
            .iter()
            .map(|&a| {
                rows.iter()
                    .map(|&b| free.iter().map(|&i| j[a][i] * j[b][i]).sum())
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = rows
            .iter()
            .map(|&r| free.iter().map(|&i| j[r][i] * g[i]).sum::<f64>() - fixed_res[r])
            .collect();
        let Some(mu) = gauss_solve(&gram, &rhs) else {
            continue;
        };
        for &i in &free {
            y[i] = -g[i] + rows.iter().zip(&mu).map(|(&r, u)| j[r][i] * u).sum::<f64>();
        }
        let tol = 1e-10;
        if free
            .iter()
            .any(|&i| y[i] < lower[i] - tol || y[i] > upper[i] + tol)
        {
            continue;
        }
        let res: f64 = (0..m).map(|r| dot(&j[r], &y).abs()).fold(0.0, f64::max);
        if res > 1e-9 {
            continue;
        }
        let obj: f64 = y.iter().zip(g).map(|(a, b)| (a + b).powi(2)).sum();
        if obj < best.0 {
            best = (obj, y);
        }
    }
    best.1
}

pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

pub fn to_dense(rows: &[Vec<f64>], n: usize) -> DenseMatrix {
    DenseMatrix::from_rows(n, rows)
}

/// Step box around zero: `l ∈ [−1, 0]`, `u ∈ [0, 1]`, with some bounds
/// exactly at zero.
pub fn random_step_box<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for _ in 0..n {
        lo.push(if rng.random_bool(0.2) {
            0.0
        } else {
            -rng.random_range(0.05..1.0)
        });
        hi.push(if rng.random_bool(0.2) {
            0.0
        } else {
            rng.random_range(0.05..1.0)
        });
    }
    (lo, hi)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Central finite-difference Jacobian of `f` at `x`.
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let m = f(x).len();
    let mut cols = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (fp, fm) = (f(&xp), f(&xm));
        cols.push(
            (0..m)
                .map(|r| (fp[r] - fm[r]) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    (0..m)
        .map(|r| cols.iter().map(|c| c[r]).collect())
        .collect()
}

/// Outcome of comparing a solver with a reference on random instances.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleSummary {
    pub instances: usize,
    pub mismatches: usize,
    pub worst: f64,
}

impl OracleSummary {
    fn record(&mut self, err: f64, ok: bool) {
        self.instances += 1;
        self.worst = self.worst.max(err);
        self.mismatches += usize::from(!ok);
    }
}

/// Separable box LPs with `n ≤ 8` against 3ⁿ enumeration; objectives must
/// agree exactly.
pub fn separable_lp_sweep(count: usize, seed: u64) -> OracleSummary {
    let mut rng = rng(seed);
    let mut out = OracleSummary::default();
    for _ in 0..count {
        let n = rng.random_range(1..=8);
        let (lo, hi) = random_step_box(&mut rng, n);
        let cost: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(-3.0..3.0)
                }
            })
            .collect();
        let sol = solve_separable_lp(&cost, &lo, &hi);
        let (best, _) = enumerate_separable(&cost, &lo, &hi);
        let err = (sol.objective - best).abs();
        out.record(err, sol.objective == best && dot(&cost, &sol.d) == best);
    }
    out
}

/// Equality-constrained box LPs with `n ≤ 6`, `m ≤ 3` against basic-point
/// enumeration; objectives within `1e-9`, solutions feasible.
pub fn equality_lp_sweep(count: usize, seed: u64) -> OracleSummary {
    let mut rng = rng(seed);
    let mut out = OracleSummary::default();
    while out.instances < count {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=3.min(n - 1));
        let j = random_matrix(&mut rng, m, n);
        let (lo, hi) = random_step_box(&mut rng, n);
        let cost: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let Some(best) = enumerate_basic(&cost, &j, &lo, &hi) else {
            continue;
        };
        let jd = to_dense(&j, n);
        let sol = solve_equality_box_lp(&BoxLpInstance {
            cost: &cost,
            lower: &lo,
            upper: &hi,
            equality: Some(&jd),
        });
        let res = j.iter().map(|r| dot(r, &sol.d).abs()).fold(0.0, f64::max);
        let boxed = sol
            .d
            .iter()
            .zip(lo.iter().zip(&hi))
            .all(|(d, (l, u))| *d >= l - 1e-9 && *d <= u + 1e-9);
        let err = (sol.objective - best).abs();
        out.record(err, err <= 1e-9 && res <= 1e-9 && boxed);
    }
    out
}

/// Projections with `n ≤ 6`, `m ≤ 2` against active-set enumeration;
/// `p1` within `1e-6`.
pub fn projection_sweep(count: usize, seed: u64) -> OracleSummary {
    let mut rng = rng(seed);
    let mut out = OracleSummary::default();
    for _ in 0..count {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=2.min(n - 1));
        let j = random_matrix(&mut rng, m, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (lo_step, hi_step) = random_step_box(&mut rng, n);
        let lower: Vec<f64> = x.iter().zip(&lo_step).map(|(a, b)| a + 2.0 * b).collect();
        let upper: Vec<f64> = x.iter().zip(&hi_step).map(|(a, b)| a + 2.0 * b).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let lo: Vec<f64> = lower.iter().zip(&x).map(|(l, a)| l - a).collect();
        let hi: Vec<f64> = upper.iter().zip(&x).map(|(u, a)| u - a).collect();
        let reference = enumerate_projection(&g, &j, &lo, &hi);
        let p = dykstra_project(&x, &g, &to_dense(&j, n), &lower, &upper, 1e-10, 10_000);
        let err = max_abs_diff(&p.p1, &reference);
        out.record(err, err <= 1e-6);
    }
    out
}
