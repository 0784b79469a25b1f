use super::lp::BoxLpInstance;
use super::simplex::solve_equality_box_lp;
use crate::linalg::{axpy, norm2, norm_inf, DenseMatrix, GramFactor};

/// Projection of `x − g` onto `{x + y : J y = 0, lower ≤ x + y ≤ upper}`,
/// reported relative to `x`.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// `Π(x − g) − x`
    pub p1: Vec<f64>,
    /// `‖p1‖₂`
    pub pi_t: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dykstra's alternating projections between the affine set
/// `{z : J(z − x) = 0}` and the box, followed by an active-set polish that
/// solves the equality-constrained least-squares problem on the identified
/// free variables and keeps it when it satisfies the KKT conditions.
///
/// `x` must lie in the box. Iteration stops when successive box iterates,
/// and the affine and box iterates, differ by at most
/// `tol·(1 + ‖x‖∞ + ‖g‖∞)`.
pub fn dykstra_project(
    x: &[f64],
    g: &[f64],
    j: &DenseMatrix,
    lower: &[f64],
    upper: &[f64],
    tol: f64,
    max_iter: usize,
) -> ProjectionResult {
    let n = x.len();
    let target: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let clamp = |v: &mut [f64]| {
        for i in 0..n {
            v[i] = v[i].max(lower[i]).min(upper[i]);
        }
    };

    if j.rows() == 0 {
        let mut z = target;
        clamp(&mut z);
        return finish(x, z, 0, true);
    }

    let factor = match GramFactor::new(j) {
        Ok(f) => f,
        Err(_) => {
            return finish(x, x.to_vec(), 0, false);
        }
    };
    let affine = |v: &[f64]| -> Vec<f64> {
        let diff: Vec<f64> = v.iter().zip(x).map(|(a, b)| a - b).collect();
        let mu = factor.solve(&j.mul_vec(&diff));
        let mut out = v.to_vec();
        for (i, &mi) in mu.iter().enumerate() {
            axpy(-mi, j.row(i), &mut out);
        }
        out
    };

    let stop = tol * (1.0 + norm_inf(x) + norm_inf(g));
    let mut z = target.clone();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let zp: Vec<f64> = z.iter().zip(&p).map(|(a, b)| a + b).collect();
        let a = affine(&zp);
        for i in 0..n {
            p[i] = zp[i] - a[i];
        }
        let mut b: Vec<f64> = a.iter().zip(&q).map(|(u, v)| u + v).collect();
        let aq = b.clone();
        clamp(&mut b);
        for i in 0..n {
            q[i] = aq[i] - b[i];
        }
        let change = z
            .iter()
            .zip(&b)
            .fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()));
        // iterates can stall for a step while still apart, so also require
        // the affine and box iterates to agree
        let gap = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()));
        z = b;
        if change <= stop && gap <= stop {
            converged = true;
            break;
        }
    }

    if let Some(polished) = polish(x, g, j, lower, upper, &z) {
        return finish(x, polished, iterations, true);
    }
    if !converged {
        // slow alternating projections happen when the affine set barely
        // touches the box; finish with an exact active-set solve
        if let Some(y) = active_set_project(x, g, j, lower, upper, 50 * n + 50) {
            let z: Vec<f64> = y.iter().zip(x).map(|(a, b)| a + b).collect();
            return finish(x, z, iterations, true);
        }
    }
    finish(x, z, iterations, converged)
}

/// Orthonormal basis of the span of `rows`, dropping rows whose remainder
/// after orthogonalization is below `1e-12` of their norm.
fn row_basis(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut r in rows {
        let norm0 = norm2(&r);
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                axpy(-d, q, &mut r);
            }
        }
        let nr = norm2(&r);
        if nr > 1e-12 * norm0 {
            r.iter_mut().for_each(|v| *v /= nr);
            basis.push(r);
        }
    }
    basis
}

/// Removes from `v` its component in the span of `basis`.
fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for _ in 0..2 {
        for q in basis {
            let d: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            axpy(-d, q, v);
        }
    }
}

/// Primal active-set solve of `min ½‖y + g‖²` over `J y = 0`,
/// `lower − x ≤ y ≤ upper − x`, started from the feasible point `y = 0`.
/// Returns `y`, or `None` if the iteration budget runs out.
fn active_set_project(
    x: &[f64],
    g: &[f64],
    j: &DenseMatrix,
    lower: &[f64],
    upper: &[f64],
    max_iter: usize,
) -> Option<Vec<f64>> {
    let n = x.len();
    let lo: Vec<f64> = lower.iter().zip(x).map(|(l, a)| l - a).collect();
    let hi: Vec<f64> = upper.iter().zip(x).map(|(u, a)| u - a).collect();
    let mut y = vec![0.0; n];
    // 0 free, -1 at lower, 1 at upper
    let mut state: Vec<i8> = (0..n)
        .map(|i| {
            if lo[i] >= 0.0 {
                -1
            } else if hi[i] <= 0.0 {
                1
            } else {
                0
            }
        })
        .collect();
    let scale = 1.0 + norm_inf(g);
    let tol = 1e-12 * scale;
    for _ in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        // rows of J restricted to the free variables
        let restricted: Vec<Vec<f64>> = (0..j.rows())
            .map(|r| free.iter().map(|&i| j.row(r)[i]).collect())
            .collect();
        let basis = row_basis(restricted);
        let mut p: Vec<f64> = free.iter().map(|&i| -(y[i] + g[i])).collect();
        project_out(&basis, &mut p);

        if norm_inf(&p) <= tol {
            // optimal on the current face; look for a feasible descent
            // direction over the tangent cone
            let r: Vec<f64> = (0..n).map(|i| y[i] + g[i]).collect();
            let (dlo, dhi): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|i| match state[i] {
                    _ if lo[i] == hi[i] => (0.0, 0.0),
                    -1 => (0.0, 1.0),
                    1 => (-1.0, 0.0),
                    _ => (-1.0, 1.0),
                })
                .unzip();
            let lp = solve_equality_box_lp(&BoxLpInstance {
                cost: &r,
                lower: &dlo,
                upper: &dhi,
                equality: Some(j),
            });
            if lp.objective >= -1e-10 * scale {
                return Some(y);
            }
            let d = lp.d;
            let dd: f64 = d.iter().map(|v| v * v).sum();
            let mut t = -lp.objective / dd;
            for i in 0..n {
                if d[i] < 0.0 {
                    t = t.min((lo[i] - y[i]) / d[i]);
                } else if d[i] > 0.0 {
                    t = t.min((hi[i] - y[i]) / d[i]);
                }
            }
            let t = t.max(0.0);
            for i in 0..n {
                y[i] = (y[i] + t * d[i]).max(lo[i]).min(hi[i]);
                state[i] = if y[i] <= lo[i] {
                    -1
                } else if y[i] >= hi[i] {
                    1
                } else {
                    0
                };
            }
            continue;
        }

        // longest step along p keeping the free variables in bounds
        let mut t = 1.0;
        let mut blocking = None;
        for (k, &i) in free.iter().enumerate() {
            let bound = if p[k] < 0.0 {
                (lo[i] - y[i]) / p[k]
            } else if p[k] > 0.0 {
                (hi[i] - y[i]) / p[k]
            } else {
                continue;
            };
            if bound < t {
                t = bound.max(0.0);
                blocking = Some((i, if p[k] < 0.0 { -1 } else { 1 }));
            }
        }
        for (k, &i) in free.iter().enumerate() {
            y[i] += t * p[k];
        }
        if let Some((i, side)) = blocking {
            y[i] = if side < 0 { lo[i] } else { hi[i] };
            state[i] = side;
        }
    }
    None
}

fn finish(x: &[f64], z: Vec<f64>, iterations: usize, converged: bool) -> ProjectionResult {
    let p1: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
    let pi_t = norm2(&p1);
    ProjectionResult {
        p1,
        pi_t,
        iterations,
        converged,
    }
}

/// Exact projection for the active set read off the box iterate `z`, or
/// `None` when that active set is not optimal.
fn polish(
    x: &[f64],
    g: &[f64],
    j: &DenseMatrix,
    lower: &[f64],
    upper: &[f64],
    z: &[f64],
) -> Option<Vec<f64>> {
    let n = x.len();
    let m = j.rows();
    let free: Vec<usize> = (0..n)
        .filter(|&i| z[i] > lower[i] && z[i] < upper[i])
        .collect();
    if free.len() < m {
        return None;
    }
    // w = z - x; v = -g
    let mut w = vec![0.0; n];
    for i in 0..n {
        if !(z[i] > lower[i] && z[i] < upper[i]) {
            w[i] = z[i] - x[i];
        }
    }
    let jf = j.select_columns(&free);
    let factor = GramFactor::new(&jf).ok().filter(|f| f.delta() == 0.0)?;
    // (J_F J_Fᵀ) μ = J_F v_F + J_A w_A
    let mut rhs = j.mul_vec(&w);
    for (i, r) in rhs.iter_mut().enumerate() {
        for (col, &k) in free.iter().enumerate() {
            *r -= jf[(i, col)] * g[k];
        }
    }
    let mu = factor.solve(&rhs);
    let jt_mu = j.tr_mul_vec(&mu);
    for &k in &free {
        w[k] = -g[k] - jt_mu[k];
    }

    let scale = 1.0 + norm_inf(g) + norm_inf(x);
    let tol = 1e-9 * scale;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let zi = x[i] + w[i];
        if zi < lower[i] - tol || zi > upper[i] + tol {
            return None;
        }
        out[i] = zi.max(lower[i]).min(upper[i]);
    }
    // multiplier signs on the active bounds: r = z - (x - g) + Jᵀμ
    for i in 0..n {
        if z[i] > lower[i] && z[i] < upper[i] {
            continue;
        }
        let r = w[i] + g[i] + jt_mu[i];
        let at_lower = z[i] <= lower[i];
        let at_upper = z[i] >= upper[i];
        if at_lower && at_upper {
            continue;
        }
        if (at_lower && r < -tol) || (at_upper && r > tol) {
            return None;
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn zero_gradient() {
        let j = DenseMatrix::from_rows(2, &[vec![1.0, 1.0]]);
        let r = dykstra_project(
            &[0.5, 0.5],
            &[0.0, 0.0],
            &j,
            &[0.0; 2],
            &[INF; 2],
            1e-10,
            10_000,
        );
        assert_eq!(r.pi_t, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn worked_instance() {
        let j = DenseMatrix::from_rows(2, &[vec![1.0, 1.0]]);
        let r = dykstra_project(
            &[0.5, 0.5],
            &[1.0, 0.0],
            &j,
            &[0.0; 2],
            &[INF; 2],
            1e-10,
            10_000,
        );
        assert!((r.p1[0] + 0.5).abs() < 1e-12 && (r.p1[1] - 0.5).abs() < 1e-12);
        assert!((r.pi_t - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn active_bound_case() {
        // x=(0.5,0.5), g=(2,0): affine projection of (-1.5,0.5) is (-1,1),
        // infeasible; the answer is (0,1).
        let j = DenseMatrix::from_rows(2, &[vec![1.0, 1.0]]);
        let r = dykstra_project(
            &[0.5, 0.5],
            &[2.0, 0.0],
            &j,
            &[0.0; 2],
            &[INF; 2],
            1e-10,
            10_000,
        );
        assert!((r.p1[0] + 0.5).abs() < 1e-10 && (r.p1[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn unconstrained_rows_clamp_only() {
        let j = DenseMatrix::zeros(0, 2);
        let r = dykstra_project(
            &[0.0, 0.0],
            &[1.0, -1.0],
            &j,
            &[0.0; 2],
            &[0.5; 2],
            1e-10,
            10,
        );
        assert_eq!(r.p1, vec![0.0, 0.5]);
    }
}
