//! Differentiable functions on the phase space and on base coordinates.
//!
//! Derivatives come from forward-mode dual numbers (`num-dual`) or from
//! analytic closures. Finite differences are only used in tests.

use std::sync::Arc;

use nalgebra::{DVector, Dyn};
use num_dual::{hessian, Derivative, Dual2DVec64, Dual2Vec, DualDVec64, DualNum};

use crate::{Matrix, Result, TpsError, Vector};

/// Value, gradient and Hessian of a function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

impl Jet {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|g| g.is_finite())
            && self.hessian.iter().all(|h| h.is_finite())
    }
}

/// Scalar field on the `(2n+1)`-dimensional phase space.
pub trait ScalarField: Send + Sync {
    /// Degrees of freedom of the chart the field lives on.
    fn n(&self) -> usize;

    /// Value, gradient and Hessian in coordinate order.
    fn jet(&self, x: &Vector) -> Jet;

    fn value(&self, x: &Vector) -> f64 {
        self.jet(x).value
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.jet(x).gradient
    }
}

pub type Field = Arc<dyn ScalarField>;

/// Scalar field defined by a closure over second-order dual numbers.
pub struct DualField<F> {
    n: usize,
    f: F,
}

impl<F> ScalarField for DualField<F>
where
    F: Fn(&[Dual2DVec64]) -> Dual2DVec64 + Send + Sync,
{
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, x: &Vector) -> Jet {
        let (value, gradient, hessian) = hessian(|y: DVector<Dual2DVec64>| (self.f)(y.as_slice()), x);
        Jet { value, gradient, hessian }
    }
}

/// Wraps a dual-number closure as a shared [`ScalarField`].
pub fn dual_field<F>(n: usize, f: F) -> Field
where
    F: Fn(&[Dual2DVec64]) -> Dual2DVec64 + Send + Sync + 'static,
{
    Arc::new(DualField { n, f })
}

/// Scalar field given by an analytic jet closure.
pub struct AnalyticField<F> {
    n: usize,
    f: F,
}

impl<F> ScalarField for AnalyticField<F>
where
    F: Fn(&Vector) -> Jet + Send + Sync,
{
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, x: &Vector) -> Jet {
        (self.f)(x)
    }
}

pub fn analytic_field<F>(n: usize, f: F) -> Field
where
    F: Fn(&Vector) -> Jet + Send + Sync + 'static,
{
    Arc::new(AnalyticField { n, f })
}

/// The constant field `c`.
pub fn constant_field(n: usize, c: f64) -> Field {
    analytic_field(n, move |x| Jet {
        value: c,
        gradient: Vector::zeros(x.len()),
        hessian: Matrix::zeros(x.len(), x.len()),
    })
}

/// `1 / f`, with derivatives from the chain rule.
pub struct Reciprocal(pub Field);

impl ScalarField for Reciprocal {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn jet(&self, x: &Vector) -> Jet {
        let j = self.0.jet(x);
        let v = j.value;
        let gg = &j.gradient * j.gradient.transpose();
        Jet {
            value: 1.0 / v,
            gradient: -&j.gradient / (v * v),
            hessian: gg * (2.0 / (v * v * v)) - j.hessian / (v * v),
        }
    }
}

/// Function of base coordinates (an n-vector) with the same derivative
/// contract as [`ScalarField`]. Evaluation may fail outside the domain.
pub trait Potential: Send + Sync {
    fn arity(&self) -> usize;

    fn jet(&self, x: &[f64]) -> Result<Jet>;

    /// Box on which the potential is meant to be used, if known. Used to seed
    /// conjugate solves when no initial guess is supplied.
    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

pub type SharedPotential = Arc<dyn Potential>;

/// A formula generic over dual numbers, so that derivatives of any order are
/// available by nesting.
pub trait SmoothFn: Send + Sync + 'static {
    fn arity(&self) -> usize;

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D;

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// [`Potential`] backed by a [`SmoothFn`].
#[derive(Debug, Clone)]
pub struct Smooth<S>(pub S);

impl<S: SmoothFn> Smooth<S> {
    pub fn shared(s: S) -> SharedPotential {
        Arc::new(Smooth(s))
    }

    /// Plain evaluation without derivatives.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.0.eval(x)
    }

    /// Derivative of the Hessian along coordinate `k`, i.e. the slice
    /// `d^3 f / dx_k dx_i dx_j`.
    pub fn third(&self, x: &[f64], k: usize) -> Matrix {
        let n = x.len();
        let seeded: DVector<DualDVec64> = DVector::from_fn(n, |i, _| {
            let mut e = DVector::zeros(1);
            if i == k {
                e[0] = 1.0;
            }
            DualDVec64::new(x[i], Derivative::some(e))
        });
        let (_, _, h) = hessian(
            |y: DVector<Dual2Vec<DualDVec64, Dyn>>| self.0.eval(y.as_slice()),
            &seeded,
        );
        Matrix::from_fn(n, n, |i, j| {
            let e = &h[(i, j)].eps;
            e.0.as_ref().map(|v| v[0]).unwrap_or(0.0)
        })
    }
}

impl<S: SmoothFn> Potential for Smooth<S> {
    fn arity(&self) -> usize {
        self.0.arity()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        if x.len() != self.arity() {
            return Err(TpsError::DimensionMismatch { expected: self.arity(), got: x.len() });
        }
        let xv = Vector::from_column_slice(x);
        let (value, gradient, hessian) = hessian(|y: DVector<Dual2DVec64>| self.0.eval(y.as_slice()), &xv);
        let jet = Jet { value, gradient, hessian };
        if !jet.is_finite() {
            return Err(TpsError::Domain(format!("potential not finite at {x:?}")));
        }
        Ok(jet)
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        self.0.domain()
    }
}

/// Potential defined by a dual-number closure.
pub struct DualPotential<F> {
    arity: usize,
    f: F,
    domain: Option<Vec<(f64, f64)>>,
}

impl<F> Potential for DualPotential<F>
where
    F: Fn(&[Dual2DVec64]) -> Dual2DVec64 + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        if x.len() != self.arity {
            return Err(TpsError::DimensionMismatch { expected: self.arity, got: x.len() });
        }
        let xv = Vector::from_column_slice(x);
        let (value, gradient, hessian) = hessian(|y: DVector<Dual2DVec64>| (self.f)(y.as_slice()), &xv);
        let jet = Jet { value, gradient, hessian };
        if !jet.is_finite() {
            return Err(TpsError::Domain(format!("potential not finite at {x:?}")));
        }
        Ok(jet)
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        self.domain.clone()
    }
}

pub fn dual_potential<F>(arity: usize, f: F) -> SharedPotential
where
    F: Fn(&[Dual2DVec64]) -> Dual2DVec64 + Send + Sync + 'static,
{
    Arc::new(DualPotential { arity, f, domain: None })
}

pub fn dual_potential_on<F>(arity: usize, domain: Vec<(f64, f64)>, f: F) -> SharedPotential
where
    F: Fn(&[Dual2DVec64]) -> Dual2DVec64 + Send + Sync + 'static,
{
    Arc::new(DualPotential { arity, f, domain: Some(domain) })
}

/// `-sum_i c_i x_i^2 / 2`, a concave quadratic with diagonal Hessian `-c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub curvature: Vec<f64>,
}

impl Quadratic {
    /// `-|x|^2 / 2` in `n` variables.
    pub fn negative_unit(n: usize) -> Self {
        Self { curvature: vec![1.0; n] }
    }
}

impl SmoothFn for Quadratic {
    fn arity(&self) -> usize {
        self.curvature.len()
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let mut acc = D::from(0.0);
        for (xi, c) in x.iter().zip(&self.curvature) {
            acc -= xi.clone() * xi.clone() * (0.5 * c);
        }
        acc
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(-10.0, 10.0); self.curvature.len()])
    }
}
