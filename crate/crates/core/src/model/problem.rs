use std::fmt;
use std::sync::Arc;

use crate::error::{AdicError, Result};
use crate::linalg::DenseMatrix;

/// Shared vector-valued oracle `x ↦ v(x)`.
pub type VecOracle = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Shared Jacobian oracle `x ↦ J(x)`.
pub type MatOracle = Arc<dyn Fn(&[f64]) -> DenseMatrix + Send + Sync>;

/// Smooth problem with equality constraints `c(x) = 0` and bounds
/// `lower ≤ x ≤ upper`.
///
/// There is deliberately no way to evaluate the objective itself: the
/// solver only ever sees its gradient.
#[derive(Clone)]
pub struct Problem {
    name: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x0: Vec<f64>,
    m: usize,
    grad: VecOracle,
    cons: VecOracle,
    jac: MatOracle,
    known_solution: Option<Vec<f64>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("m", &self.m)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("x0", &self.x0)
            .field("known_solution", &self.known_solution)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Validates dimensions and bounds. `m` is the number of equality
    /// constraints.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        x0: Vec<f64>,
        m: usize,
        grad: VecOracle,
        cons: VecOracle,
        jac: MatOracle,
    ) -> Result<Self> {
        let name = name.into();
        let n = x0.len();
        let invalid = |reason: String| AdicError::InvalidProblem {
            name: name.clone(),
            reason,
        };
        if lower.len() != n || upper.len() != n {
            return Err(invalid(format!(
                "bound vectors have lengths {}/{}, expected {n}",
                lower.len(),
                upper.len()
            )));
        }
        if m > n {
            return Err(invalid(format!("m = {m} exceeds n = {n}")));
        }
        if let Some(i) = (0..n).find(|&i| !(lower[i] <= upper[i])) {
            return Err(invalid(format!(
                "lower[{i}] = {} exceeds upper[{i}] = {}",
                lower[i], upper[i]
            )));
        }
        Ok(Self {
            name,
            lower,
            upper,
            x0,
            m,
            grad,
            cons,
            jac,
            known_solution: None,
        })
    }

    pub fn with_known_solution(mut self, x: Vec<f64>) -> Self {
        assert_eq!(x.len(), self.n());
        self.known_solution = Some(x);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn known_solution(&self) -> Option<&[f64]> {
        self.known_solution.as_deref()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    pub fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (self.cons)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        (self.jac)(x)
    }

    /// Shared handles to the oracles, for building derived problems.
    pub fn grad_oracle(&self) -> &VecOracle {
        &self.grad
    }

    pub fn cons_oracle(&self) -> &VecOracle {
        &self.cons
    }

    pub fn jac_oracle(&self) -> &MatOracle {
        &self.jac
    }
}

/// Gradient access used by the solver. Constraint data always comes from
/// the underlying [`Problem`]; only the gradient may be perturbed.
pub trait GradientSource {
    fn problem(&self) -> &Problem;
    fn gradient(&mut self, x: &[f64]) -> Vec<f64>;

    /// Whether [`GradientSource::gradient`] returns the problem's exact
    /// gradient.
    fn is_exact(&self) -> bool {
        true
    }
}

impl GradientSource for Problem {
    fn problem(&self) -> &Problem {
        self
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
}

impl<T: GradientSource + ?Sized> GradientSource for &mut T {
    fn problem(&self) -> &Problem {
        (**self).problem()
    }

    fn is_exact(&self) -> bool {
        (**self).is_exact()
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
}

/// Componentwise `median(lower, x, upper)`. Infinite bounds never clamp.
pub fn project_to_box(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&xi, (&l, &u))| xi.max(l).min(u))
        .collect()
}

/// Largest amount by which `x` leaves the box (0 when inside).
pub fn box_violation(x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&xi, (&l, &u))| (l - xi).max(xi - u).max(0.0))
        .fold(0.0, f64::max)
}
