//! Finite-difference tensor calculus: Jacobians, Lie derivatives of
//! covectors and symmetric 2-tensors, Christoffel symbols and Ricci tensor.
//!
//! Metric and form evaluators are fallible closures so that bundles with
//! restricted domains can be passed straight through.

use crate::chart::{along, VectorField};
use crate::{Matrix, Result, TpsError, Vector};

/// Relative step used for curvature stencils.
pub const CURVATURE_STEP: f64 = 1e-4;

fn unit(dim: usize, k: usize) -> Vector {
    let mut e = Vector::zeros(dim);
    e[k] = 1.0;
    e
}

fn finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(TpsError::NonFinite(what.to_string()))
    }
}

/// Jacobian `J[k][j] = dX^k / dx^j` of a vector field by central differences.
pub fn jacobian<F: VectorField + ?Sized>(field: &F, x: &Vector, h: f64) -> Matrix {
    let dim = x.len();
    let mut jac = Matrix::zeros(dim, dim);
    for j in 0..dim {
        let col = along(field, x, &unit(dim, j), h);
        jac.set_column(j, &col);
    }
    jac
}

/// Lie derivative of a covector field: `X^k d_k a_j + a_k d_j X^k`.
pub fn lie_derivative_covector<A, F>(alpha: &A, field: &F, x: &Vector, h: f64) -> Result<Vector>
where
    A: Fn(&Vector) -> Result<Vector>,
    F: VectorField + ?Sized,
{
    let fx = field.eval(x);
    let s = h / fx.norm().max(1.0);
    let plus = alpha(&(x + &fx * s))?;
    let minus = alpha(&(x - &fx * s))?;
    let transport = (plus - minus) / (2.0 * s);
    let jac = jacobian(field, x, h);
    let out = transport + jac.transpose() * alpha(x)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(TpsError::NonFinite("lie derivative of covector".into()));
    }
    Ok(out)
}

/// Lie derivative of a symmetric 2-tensor:
/// `X^k d_k T_ij + T_kj d_i X^k + T_ik d_j X^k`.
pub fn lie_derivative_tensor<T, F>(tensor: &T, field: &F, x: &Vector, h: f64) -> Result<Matrix>
where
    T: Fn(&Vector) -> Result<Matrix>,
    F: VectorField + ?Sized,
{
    let fx = field.eval(x);
    let s = h / fx.norm().max(1.0);
    let plus = tensor(&(x + &fx * s))?;
    let minus = tensor(&(x - &fx * s))?;
    let transport = (plus - minus) / (2.0 * s);
    let jac = jacobian(field, x, h);
    let g = tensor(x)?;
    let out = transport + jac.transpose() * &g + &g * jac;
    finite(&out, "lie derivative of tensor")?;
    Ok(out)
}

/// Coordinate derivatives `d_k M` of a matrix field with relative step `rel`.
fn matrix_partials<M>(metric: &M, x: &Vector, rel: f64) -> Result<Vec<Matrix>>
where
    M: Fn(&Vector) -> Result<Matrix>,
{
    let dim = x.len();
    (0..dim)
        .map(|k| {
            let h = rel * x[k].abs().max(1.0);
            let e = unit(dim, k) * h;
            Ok((metric(&(x + &e))? - metric(&(x - &e))?) / (2.0 * h))
        })
        .collect()
}

/// Christoffel symbols of the second kind; entry `[a][(b, c)]` is
/// `Gamma^a_{bc}`.
pub fn christoffel<M>(metric: &M, x: &Vector, rel: f64) -> Result<Vec<Matrix>>
where
    M: Fn(&Vector) -> Result<Matrix>,
{
    let dim = x.len();
    let g = metric(x)?;
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or(TpsError::DegenerateMetric { eigenvalue: 0.0 })?;
    let dg = matrix_partials(metric, x, rel)?;
    // lowered[d][(b, c)] = (d_b g_dc + d_c g_db - d_d g_bc) / 2
    let lowered: Vec<Matrix> = (0..dim)
        .map(|d| Matrix::from_fn(dim, dim, |b, c| 0.5 * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)])))
        .collect();
    let gamma: Vec<Matrix> = (0..dim)
        .map(|a| {
            let mut m = Matrix::zeros(dim, dim);
            for (d, low) in lowered.iter().enumerate() {
                m += low * ginv[(a, d)];
            }
            m
        })
        .collect();
    for m in &gamma {
        finite(m, "christoffel symbols")?;
    }
    Ok(gamma)
}

/// Ricci tensor `R_{sv} = d_r G^r_{vs} - d_v G^r_{rs} + G^r_{rl} G^l_{vs} - G^r_{vl} G^l_{rs}`
/// from nested central differences (outer step `outer`, inner step `inner`,
/// both relative).
pub fn ricci<M>(metric: &M, x: &Vector, outer: f64, inner: f64) -> Result<Matrix>
where
    M: Fn(&Vector) -> Result<Matrix>,
{
    let dim = x.len();
    let gamma = christoffel(metric, x, inner)?;
    // dgamma[k][a] = d_k Gamma^a
    let mut dgamma: Vec<Vec<Matrix>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let h = outer * x[k].abs().max(1.0);
        let e = unit(dim, k) * h;
        let gp = christoffel(metric, &(x + &e), inner)?;
        let gm = christoffel(metric, &(x - &e), inner)?;
        dgamma.push(gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let ric = Matrix::from_fn(dim, dim, |s, v| {
        let mut acc = 0.0;
        for r in 0..dim {
            acc += dgamma[r][r][(v, s)] - dgamma[v][r][(r, s)];
            for l in 0..dim {
                acc += gamma[r][(r, l)] * gamma[l][(v, s)] - gamma[r][(v, l)] * gamma[l][(r, s)];
            }
        }
        acc
    });
    finite(&ric, "ricci tensor")?;
    Ok(ric)
}

/// Covariant derivative of a vector field as the matrix
/// `M[i][j] = d_j X^i + Gamma^i_{jk} X^k`.
pub fn covariant_derivative<M, F>(metric: &M, field: &F, x: &Vector, rel: f64) -> Result<Matrix>
where
    M: Fn(&Vector) -> Result<Matrix>,
    F: VectorField + ?Sized,
{
    let dim = x.len();
    let gamma = christoffel(metric, x, rel)?;
    let jac = jacobian(field, x, rel * x.norm().max(1.0));
    let xv = field.eval(x);
    let out = Matrix::from_fn(dim, dim, |i, j| {
        jac[(i, j)] + (0..dim).map(|k| gamma[i][(j, k)] * xv[k]).sum::<f64>()
    });
    finite(&out, "covariant derivative")?;
    Ok(out)
}
