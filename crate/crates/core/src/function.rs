//! Scalar fields and differentiable trial functions.

use std::fmt;
use std::sync::Arc;

/// A function `u : ℝ^d → ℝ` that can report its value and input gradient.
///
/// Networks, manufactured solutions and reference solutions all implement
/// this, so losses and error norms can be evaluated on any of them.
pub trait TrialFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇u(x)` into `grad` (length `dim()`) and returns `u(x)`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

impl<T: TrialFunction + ?Sized> TrialFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_and_gradient(x, grad)
    }
}

impl<T: TrialFunction + ?Sized> TrialFunction for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).value_and_gradient(x, grad)
    }
}

/// `u ≡ c` on ℝ^d.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub value: f64,
    pub dim: usize,
}

impl TrialFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn value_and_gradient(&self, _x: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        self.value
    }
}

/// Trial function assembled from closures.
pub struct FnTrial<V, G> {
    dim: usize,
    value: V,
    gradient: G,
}

impl<V, G> FnTrial<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, value: V, gradient: G) -> Self {
        FnTrial {
            dim,
            value,
            gradient,
        }
    }
}

impl<V, G> TrialFunction for FnTrial<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.gradient)(x, grad);
        (self.value)(x)
    }
}

/// Coefficient or data field (`w`, `f`, `g`). Constants are tracked so that
/// `g ≡ 0` can be verified structurally rather than by sampling.
#[derive(Clone)]
pub struct Field {
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    constant: Option<f64>,
}

impl Field {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Field {
            eval: Arc::new(f),
            constant: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Field {
            eval: Arc::new(move |_| c),
            constant: Some(c),
        }
    }

    pub fn zero() -> Self {
        Field::constant(0.0)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    /// Pointwise scaling; keeps constant-ness.
    pub fn scaled(&self, factor: f64) -> Field {
        match self.constant {
            Some(c) => Field::constant(c * factor),
            None => {
                let inner = self.eval.clone();
                Field::new(move |x| factor * inner(x))
            }
        }
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "Field::constant({c})"),
            None => f.write_str("Field(<fn>)"),
        }
    }
}
