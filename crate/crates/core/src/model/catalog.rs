//! Built-in analytic test problems.
//!
//! Every problem is a compiled-in set of oracles. Problems tagged `mini`
//! form the quick suite used by the benchmark harness; `hard` problems are
//! only part of the full suite.

use std::sync::Arc;

use super::problem::Problem;
use super::slack::{add_slacks, GeneralProblem};
use crate::error::{AdicError, Result};
use crate::linalg::DenseMatrix;

const INF: f64 = f64::INFINITY;

/// Catalog entry: a parameter-free constructor plus free-form tags.
#[derive(Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub builder: fn() -> Problem,
    pub tags: &'static [&'static str],
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("tags", &self.tags)
            .finish()
    }
}

impl CatalogEntry {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains(&tag)
    }
}

// Kept sorted by name.
const ENTRIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "circle",
        builder: circle,
        tags: &["mini", "nonlinear-constraints", "linear-objective"],
    },
    CatalogEntry {
        name: "circle_small",
        builder: circle_small,
        tags: &["hard", "nonlinear-constraints", "linear-objective"],
    },
    CatalogEntry {
        name: "disk_slack",
        builder: disk_slack,
        tags: &["mini", "slack", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "ellipse_prod",
        builder: ellipse_prod,
        tags: &["mini", "nonconvex", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "hs06",
        builder: hs06,
        tags: &["hard", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "hs06_scaled",
        builder: hs06_scaled,
        tags: &["mini", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "hs07",
        builder: hs07,
        tags: &["hard", "nonconvex", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "hs07_scaled",
        builder: hs07_scaled,
        tags: &["mini", "nonconvex", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "hs27",
        builder: hs27,
        tags: &["hard", "nonconvex", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "hs28",
        builder: hs28,
        tags: &["mini", "equality-only", "linear-constraints"],
    },
    CatalogEntry {
        name: "hs48",
        builder: hs48,
        tags: &["mini", "equality-only", "linear-constraints"],
    },
    CatalogEntry {
        name: "infeasible",
        builder: infeasible,
        tags: &["mini", "infeasible-critical", "bounds-active"],
    },
    CatalogEntry {
        name: "lq2",
        builder: lq2,
        tags: &["mini", "bounds-active", "linear-constraints"],
    },
    CatalogEntry {
        name: "mixed_slack",
        builder: mixed_slack,
        tags: &["mini", "slack", "linear-constraints"],
    },
    CatalogEntry {
        name: "parabola_box",
        builder: parabola_box,
        tags: &["mini", "bounds-active", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "plane3",
        builder: plane3,
        tags: &["mini", "equality-only", "linear-constraints"],
    },
    CatalogEntry {
        name: "range1",
        builder: range1,
        tags: &["mini", "slack", "bounds-active", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "rosen_disk",
        builder: rosen_disk,
        tags: &["hard", "slack", "nonconvex", "nonlinear-constraints"],
    },
    CatalogEntry {
        name: "simplex4",
        builder: simplex4,
        tags: &["mini", "bounds-active", "linear-constraints"],
    },
    CatalogEntry {
        name: "sphere3",
        builder: sphere3,
        tags: &["mini", "nonlinear-constraints", "linear-objective"],
    },
];

/// All catalog entries, sorted by name.
pub fn catalog_list() -> Vec<CatalogEntry> {
    ENTRIES.to_vec()
}

/// Fresh instance of the named problem.
pub fn build(name: &str) -> Result<Problem> {
    ENTRIES
        .iter()
        .find(|e| e.name == name)
        .map(|e| (e.builder)())
        .ok_or_else(|| AdicError::UnknownProblem(name.to_string()))
}

/// Problem names of a suite: `mini` or `all`.
pub fn suite(name: &str) -> Option<Vec<&'static str>> {
    match name {
        "mini" => Some(
            ENTRIES
                .iter()
                .filter(|e| e.has_tag("mini"))
                .map(|e| e.name)
                .collect(),
        ),
        "all" => Some(ENTRIES.iter().map(|e| e.name).collect()),
        _ => None,
    }
}

fn jac1(row: Vec<f64>) -> DenseMatrix {
    let n = row.len();
    DenseMatrix::from_row_major(1, n, row)
}

#[allow(clippy::too_many_arguments)]
fn make(
    name: &str,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x0: Vec<f64>,
    m: usize,
    grad: fn(&[f64]) -> Vec<f64>,
    cons: fn(&[f64]) -> Vec<f64>,
    jac: fn(&[f64]) -> DenseMatrix,
) -> Problem {
    Problem::new(
        name,
        lower,
        upper,
        x0,
        m,
        Arc::new(grad),
        Arc::new(cons),
        Arc::new(jac),
    )
    .expect("catalog problem is well formed")
}

/// min ½‖x − (2,0)‖²  s.t.  x₁ + x₂ = 1,  x ≥ 0.
fn lq2() -> Problem {
    make(
        "lq2",
        vec![0.0; 2],
        vec![INF; 2],
        vec![0.0, 0.0],
        1,
        |x| vec![x[0] - 2.0, x[1]],
        |x| vec![x[0] + x[1] - 1.0],
        |_| jac1(vec![1.0, 1.0]),
    )
    .with_known_solution(vec![1.0, 0.0])
}

/// min x₁ + x₂  s.t.  (x₁² + x₂² − 18)/6 = 0,  x ≥ −10.
fn circle() -> Problem {
    make(
        "circle",
        vec![-10.0; 2],
        vec![INF; 2],
        vec![-3.0, 0.0],
        1,
        |_| vec![1.0, 1.0],
        |x| vec![(x[0] * x[0] + x[1] * x[1] - 18.0) / 6.0],
        |x| jac1(vec![x[0] / 3.0, x[1] / 3.0]),
    )
    .with_known_solution(vec![-3.0, -3.0])
}

/// min x₁ + x₂  s.t.  x₁² + x₂² = 2,  x ≥ −10.
///
/// Curvature is large relative to the first AdaGrad step.
fn circle_small() -> Problem {
    make(
        "circle_small",
        vec![-10.0; 2],
        vec![INF; 2],
        vec![-1.5, -0.5],
        1,
        |_| vec![1.0, 1.0],
        |x| vec![x[0] * x[0] + x[1] * x[1] - 2.0],
        |x| jac1(vec![2.0 * x[0], 2.0 * x[1]]),
    )
    .with_known_solution(vec![-1.0, -1.0])
}

/// min ½‖x − (1,2,3)‖²  s.t.  x₁ + x₂ + x₃ = 3.
fn plane3() -> Problem {
    make(
        "plane3",
        vec![-INF; 3],
        vec![INF; 3],
        vec![0.0, 0.0, 0.0],
        1,
        |x| vec![x[0] - 1.0, x[1] - 2.0, x[2] - 3.0],
        |x| vec![x[0] + x[1] + x[2] - 3.0],
        |_| jac1(vec![1.0, 1.0, 1.0]),
    )
    .with_known_solution(vec![0.0, 1.0, 2.0])
}

/// Hock–Schittkowski 6: min (1 − x₁)²  s.t.  10(x₂ − x₁²) = 0.
fn hs06() -> Problem {
    make(
        "hs06",
        vec![-INF; 2],
        vec![INF; 2],
        vec![-1.2, 1.0],
        1,
        |x| vec![-2.0 * (1.0 - x[0]), 0.0],
        |x| vec![10.0 * (x[1] - x[0] * x[0])],
        |x| jac1(vec![-20.0 * x[0], 10.0]),
    )
    .with_known_solution(vec![1.0, 1.0])
}

/// Hock–Schittkowski 6 with the constraint divided by 10:
/// min (1 − x₁)²  s.t.  x₂ − x₁² = 0.
fn hs06_scaled() -> Problem {
    make(
        "hs06_scaled",
        vec![-INF; 2],
        vec![INF; 2],
        vec![-1.2, 1.0],
        1,
        |x| vec![-2.0 * (1.0 - x[0]), 0.0],
        |x| vec![x[1] - x[0] * x[0]],
        |x| jac1(vec![-2.0 * x[0], 1.0]),
    )
    .with_known_solution(vec![1.0, 1.0])
}

/// Hock–Schittkowski 7: min log(1 + x₁²) − x₂  s.t.  (1 + x₁²)² + x₂² = 4.
fn hs07() -> Problem {
    make(
        "hs07",
        vec![-INF; 2],
        vec![INF; 2],
        vec![2.0, 2.0],
        1,
        |x| vec![2.0 * x[0] / (1.0 + x[0] * x[0]), -1.0],
        |x| {
            let a = 1.0 + x[0] * x[0];
            vec![a * a + x[1] * x[1] - 4.0]
        },
        |x| {
            let a = 1.0 + x[0] * x[0];
            jac1(vec![4.0 * a * x[0], 2.0 * x[1]])
        },
    )
    .with_known_solution(vec![0.0, 3f64.sqrt()])
}

/// Hock–Schittkowski 7 with the constraint divided by 8.
fn hs07_scaled() -> Problem {
    make(
        "hs07_scaled",
        vec![-INF; 2],
        vec![INF; 2],
        vec![2.0, 2.0],
        1,
        |x| vec![2.0 * x[0] / (1.0 + x[0] * x[0]), -1.0],
        |x| {
            let a = 1.0 + x[0] * x[0];
            vec![(a * a + x[1] * x[1] - 4.0) / 8.0]
        },
        |x| {
            let a = 1.0 + x[0] * x[0];
            jac1(vec![a * x[0] / 2.0, x[1] / 4.0])
        },
    )
    .with_known_solution(vec![0.0, 3f64.sqrt()])
}

/// Hock–Schittkowski 27:
/// min 0.01(x₁ − 1)² + (x₂ − x₁²)²  s.t.  x₁ + x₃² + 1 = 0.
fn hs27() -> Problem {
    make(
        "hs27",
        vec![-INF; 3],
        vec![INF; 3],
        vec![2.0, 2.0, 2.0],
        1,
        |x| {
            let r = x[1] - x[0] * x[0];
            vec![0.02 * (x[0] - 1.0) - 4.0 * x[0] * r, 2.0 * r, 0.0]
        },
        |x| vec![x[0] + x[2] * x[2] + 1.0],
        |x| jac1(vec![1.0, 0.0, 2.0 * x[2]]),
    )
    .with_known_solution(vec![-1.0, 1.0, 0.0])
}

/// Hock–Schittkowski 28:
/// min (x₁ + x₂)² + (x₂ + x₃)²  s.t.  x₁ + 2x₂ + 3x₃ = 1.
fn hs28() -> Problem {
    make(
        "hs28",
        vec![-INF; 3],
        vec![INF; 3],
        vec![-4.0, 1.0, 1.0],
        1,
        |x| {
            let a = x[0] + x[1];
            let b = x[1] + x[2];
            vec![2.0 * a, 2.0 * a + 2.0 * b, 2.0 * b]
        },
        |x| vec![x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0],
        |_| jac1(vec![1.0, 2.0, 3.0]),
    )
    .with_known_solution(vec![0.5, -0.5, 0.5])
}

/// Hock–Schittkowski 48:
/// min (x₁ − 1)² + (x₂ − x₃)² + (x₄ − x₅)²
/// s.t. Σxᵢ = 5,  x₃ − 2(x₄ + x₅) = −3.
fn hs48() -> Problem {
    make(
        "hs48",
        vec![-INF; 5],
        vec![INF; 5],
        vec![3.0, 5.0, -3.0, 2.0, -2.0],
        2,
        |x| {
            let a = x[1] - x[2];
            let b = x[3] - x[4];
            vec![2.0 * (x[0] - 1.0), 2.0 * a, -2.0 * a, 2.0 * b, -2.0 * b]
        },
        |x| {
            vec![
                x.iter().sum::<f64>() - 5.0,
                x[2] - 2.0 * (x[3] + x[4]) + 3.0,
            ]
        },
        |_| {
            DenseMatrix::from_row_major(
                2,
                5,
                vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, -2.0, -2.0],
            )
        },
    )
    .with_known_solution(vec![1.0; 5])
}

/// min −x₁ − 2x₂ − 2x₃  s.t.  (‖x‖² − 9)/4 = 0,  x ≥ −5.
fn sphere3() -> Problem {
    make(
        "sphere3",
        vec![-5.0; 3],
        vec![INF; 3],
        vec![1.5, 1.5, 1.5],
        1,
        |_| vec![-1.0, -2.0, -2.0],
        |x| vec![(x.iter().map(|v| v * v).sum::<f64>() - 9.0) / 4.0],
        |x| jac1(x.iter().map(|v| v / 2.0).collect()),
    )
    .with_known_solution(vec![1.0, 2.0, 2.0])
}

/// min −x₁x₂  s.t.  (x₁² + 4x₂² − 8)/4 = 0,  x ≥ 0.
fn ellipse_prod() -> Problem {
    make(
        "ellipse_prod",
        vec![0.0; 2],
        vec![INF; 2],
        vec![1.5, 1.5],
        1,
        |x| vec![-x[1], -x[0]],
        |x| vec![(x[0] * x[0] + 4.0 * x[1] * x[1] - 8.0) / 4.0],
        |x| jac1(vec![x[0] / 2.0, 2.0 * x[1]]),
    )
    .with_known_solution(vec![2.0, 1.0])
}

/// min ½‖x − (1,1)‖²  s.t.  x₁ + x₂ + 1 = 0,  x ≥ 0.
///
/// Infeasible: ½‖c‖² is minimized over the box at the origin with c = 1.
fn infeasible() -> Problem {
    make(
        "infeasible",
        vec![0.0; 2],
        vec![INF; 2],
        vec![1.0, 2.0],
        1,
        |x| vec![x[0] - 1.0, x[1] - 1.0],
        |x| vec![x[0] + x[1] + 1.0],
        |_| jac1(vec![1.0, 1.0]),
    )
}

/// min ½[(x₁ − 2)² + (x₂ − 1)²]  s.t.  x₂ − x₁² = 0,  0 ≤ x₁ ≤ 1, 0 ≤ x₂ ≤ 2.
fn parabola_box() -> Problem {
    make(
        "parabola_box",
        vec![0.0, 0.0],
        vec![1.0, 2.0],
        vec![0.5, 0.5],
        1,
        |x| vec![x[0] - 2.0, x[1] - 1.0],
        |x| vec![x[1] - x[0] * x[0]],
        |x| jac1(vec![-2.0 * x[0], 1.0]),
    )
    .with_known_solution(vec![1.0, 1.0])
}

/// min ½‖x − (1,2,3,4)‖²  s.t.  Σxᵢ = 5,  0 ≤ x ≤ 10.
fn simplex4() -> Problem {
    make(
        "simplex4",
        vec![0.0; 4],
        vec![10.0; 4],
        vec![1.0, 1.0, 1.0, 1.0],
        1,
        |x| vec![x[0] - 1.0, x[1] - 2.0, x[2] - 3.0, x[3] - 4.0],
        |x| vec![x.iter().sum::<f64>() - 5.0],
        |_| jac1(vec![1.0; 4]),
    )
    .with_known_solution(vec![0.0, 2.0 / 3.0, 5.0 / 3.0, 8.0 / 3.0])
}

/// min ½[(x₁ − 3)² + (x₂ − 3)²]  s.t.  (x₁² + x₂²)/4 ≤ 2 (slack form).
fn disk_slack() -> Problem {
    let general = GeneralProblem {
        name: "disk_slack".into(),
        lower: vec![-INF; 2],
        upper: vec![INF; 2],
        x0: vec![0.5, 0.0],
        c_lower: vec![-INF],
        c_upper: vec![2.0],
        grad: Arc::new(|x: &[f64]| vec![x[0] - 3.0, x[1] - 3.0]),
        cons: Arc::new(|x: &[f64]| vec![(x[0] * x[0] + x[1] * x[1]) / 4.0]),
        jac: Arc::new(|x: &[f64]| jac1(vec![x[0] / 2.0, x[1] / 2.0])),
    };
    add_slacks(&general)
        .expect("catalog problem is well formed")
        .with_known_solution(vec![2.0, 2.0, 2.0])
}

/// min ½(x − 3)²  s.t.  0 ≤ x² ≤ 4 (slack form).
fn range1() -> Problem {
    let general = GeneralProblem {
        name: "range1".into(),
        lower: vec![-INF],
        upper: vec![INF],
        x0: vec![1.0],
        c_lower: vec![0.0],
        c_upper: vec![4.0],
        grad: Arc::new(|x: &[f64]| vec![x[0] - 3.0]),
        cons: Arc::new(|x: &[f64]| vec![x[0] * x[0]]),
        jac: Arc::new(|x: &[f64]| jac1(vec![2.0 * x[0]])),
    };
    add_slacks(&general)
        .expect("catalog problem is well formed")
        .with_known_solution(vec![2.0, 4.0])
}

/// min ½‖x − (2,2)‖²  s.t.  x₁ + x₂ = 2,  −0.5 ≤ x₁ − x₂ ≤ 0.5 (slack form).
fn mixed_slack() -> Problem {
    let general = GeneralProblem {
        name: "mixed_slack".into(),
        lower: vec![-INF; 2],
        upper: vec![INF; 2],
        x0: vec![2.0, 0.0],
        c_lower: vec![2.0, -0.5],
        c_upper: vec![2.0, 0.5],
        grad: Arc::new(|x: &[f64]| vec![x[0] - 2.0, x[1] - 2.0]),
        cons: Arc::new(|x: &[f64]| vec![x[0] + x[1], x[0] - x[1]]),
        jac: Arc::new(|_: &[f64]| DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, -1.0])),
    };
    add_slacks(&general)
        .expect("catalog problem is well formed")
        .with_known_solution(vec![1.0, 1.0, 0.0])
}

/// Rosenbrock restricted to x₁² + x₂² ≤ 1.5 (slack form).
fn rosen_disk() -> Problem {
    let general = GeneralProblem {
        name: "rosen_disk".into(),
        lower: vec![-INF; 2],
        upper: vec![INF; 2],
        x0: vec![-1.0, 0.5],
        c_lower: vec![-INF],
        c_upper: vec![1.5],
        grad: Arc::new(|x: &[f64]| {
            let r = x[1] - x[0] * x[0];
            vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * r, 200.0 * r]
        }),
        cons: Arc::new(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1]]),
        jac: Arc::new(|x: &[f64]| jac1(vec![2.0 * x[0], 2.0 * x[1]])),
    };
    add_slacks(&general).expect("catalog problem is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_is_sorted_unique_and_deterministic() {
        let a: Vec<_> = catalog_list().iter().map(|e| e.name).collect();
        let b: Vec<_> = catalog_list().iter().map(|e| e.name).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(a, sorted);
    }

    #[test]
    fn mini_suite_is_large_enough() {
        assert!(suite("mini").unwrap().len() >= 12);
        assert!(suite("nope").is_none());
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(build("nope"), Err(AdicError::UnknownProblem(_))));
    }

    #[test]
    fn lq2_shape() {
        let p = build("lq2").unwrap();
        assert_eq!((p.n(), p.m()), (2, 1));
        assert_eq!(p.known_solution(), Some(&[1.0, 0.0][..]));
        assert_eq!(p.constraints(&[1.0, 0.0]), vec![0.0]);
        assert_eq!(p.gradient(&[1.0, 0.0]), vec![-1.0, 0.0]);
    }

    #[test]
    fn circle_solution_is_feasible() {
        let p = build("circle").unwrap();
        let xs = p.known_solution().unwrap();
        assert_eq!(p.constraints(xs), vec![0.0]);
    }

    #[test]
    fn required_categories_present() {
        let entries = catalog_list();
        for tag in [
            "equality-only",
            "bounds-active",
            "slack",
            "nonlinear-constraints",
            "infeasible-critical",
        ] {
            assert!(
                entries.iter().any(|e| e.has_tag(tag) && e.has_tag("mini")),
                "{tag}"
            );
        }
    }

    #[test]
    fn jacobian_shapes() {
        for e in catalog_list() {
            let p = (e.builder)();
            let j = p.jacobian(p.x0());
            assert_eq!((j.rows(), j.cols()), (p.m(), p.n()), "{}", e.name);
            assert_eq!(p.constraints(p.x0()).len(), p.m());
            assert_eq!(p.gradient(p.x0()).len(), p.n());
        }
    }
}
