//! Darboux chart of the thermodynamic phase space.
//!
//! A point has coordinates `(w, q^1..q^n, p_1..p_n)` and the contact form is
//! `eta = dw + p_a dq^a`. Tangent vectors and covectors are plain
//! [`Vector`]s of length `2n + 1` in the same order.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Matrix, Result, TpsError, Vector};

/// Point of the phase space in Darboux coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsPoint {
    n: usize,
    coords: Vec<f64>,
}

impl TpsPoint {
    pub fn new(w: f64, q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(TpsError::DimensionMismatch { expected: q.len(), got: p.len() });
        }
        let mut coords = Vec::with_capacity(2 * q.len() + 1);
        coords.push(w);
        coords.extend_from_slice(q);
        coords.extend_from_slice(p);
        Self::from_slice(q.len(), &coords)
    }

    /// Builds a point from a full coordinate slice of length `2n + 1`.
    pub fn from_slice(n: usize, coords: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(TpsError::InvalidDimension("n must be at least 1".into()));
        }
        if coords.len() != 2 * n + 1 {
            return Err(TpsError::DimensionMismatch { expected: 2 * n + 1, got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(TpsError::NonFinite(format!("point coordinates {coords:?}")));
        }
        Ok(Self { n, coords: coords.to_vec() })
    }

    /// Builds a point from a coordinate vector, inferring `n` from its length.
    pub fn from_vector(x: &Vector) -> Result<Self> {
        let n = n_from_dim(x.len())?;
        Self::from_slice(n, x.as_slice())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn w(&self) -> f64 {
        self.coords[0]
    }

    pub fn q(&self) -> &[f64] {
        &self.coords[1..1 + self.n]
    }

    pub fn p(&self) -> &[f64] {
        &self.coords[1 + self.n..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vector(&self) -> Vector {
        Vector::from_column_slice(&self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Index of `w` in the coordinate order.
pub const W: usize = 0;

/// Index of `q^i` (zero based) in a chart with `n` degrees of freedom.
pub fn q_index(_n: usize, i: usize) -> usize {
    1 + i
}

/// Index of `p_i` (zero based) in a chart with `n` degrees of freedom.
pub fn p_index(n: usize, i: usize) -> usize {
    1 + n + i
}

/// Recovers `n` from a coordinate length `2n + 1`.
pub fn n_from_dim(dim: usize) -> Result<usize> {
    if dim < 3 || dim.is_multiple_of(2) {
        return Err(TpsError::InvalidDimension(format!("length {dim} is not 2n+1 with n >= 1")));
    }
    Ok((dim - 1) / 2)
}

fn check_len(pt: &TpsPoint, v: &Vector) -> Result<()> {
    if v.len() != pt.dim() {
        return Err(TpsError::DimensionMismatch { expected: pt.dim(), got: v.len() });
    }
    Ok(())
}

/// Components of `eta = dw + p_a dq^a` at `pt`.
pub fn gibbs_form(pt: &TpsPoint) -> Vector {
    gibbs_form_at(&pt.to_vector())
}

pub(crate) fn gibbs_form_at(x: &Vector) -> Vector {
    let n = (x.len() - 1) / 2;
    let mut eta = Vector::zeros(x.len());
    eta[W] = 1.0;
    for i in 0..n {
        eta[q_index(n, i)] = x[p_index(n, i)];
    }
    eta
}

/// `eta(X)` at `pt`.
pub fn eta_eval(pt: &TpsPoint, x: &Vector) -> Result<f64> {
    check_len(pt, x)?;
    Ok(gibbs_form(pt).dot(x))
}

/// Matrix `A` with `d eta(X, Y) = X^T A Y`, where `d eta = dp_a ^ dq^a`.
pub fn deta_matrix(n: usize) -> Matrix {
    let mut a = Matrix::zeros(2 * n + 1, 2 * n + 1);
    for i in 0..n {
        a[(p_index(n, i), q_index(n, i))] = 1.0;
        a[(q_index(n, i), p_index(n, i))] = -1.0;
    }
    a
}

/// `d eta(X, Y) = sum_a (X_{p_a} Y_{q^a} - X_{q^a} Y_{p_a})`.
pub fn deta_eval(pt: &TpsPoint, x: &Vector, y: &Vector) -> Result<f64> {
    check_len(pt, x)?;
    check_len(pt, y)?;
    let n = pt.n();
    Ok((0..n)
        .map(|i| {
            let (qi, pi) = (q_index(n, i), p_index(n, i));
            x[pi] * y[qi] - x[qi] * y[pi]
        })
        .sum())
}

/// Reeb field `d/dw` for `n` degrees of freedom.
pub fn reeb(n: usize) -> Vector {
    let mut xi = Vector::zeros(2 * n + 1);
    xi[W] = 1.0;
    xi
}

/// Heisenberg frame `{xi, P^i = d/dp_i, Q_i = p_i d/dw - d/dq^i}` at a point.
#[derive(Debug, Clone)]
pub struct HeisenbergBasis {
    pub reeb: Vector,
    pub p_hat: Vec<Vector>,
    pub q_hat: Vec<Vector>,
}

impl HeisenbergBasis {
    /// Frame ordered as `xi, P^1..P^n, Q_1..Q_n`.
    pub fn frame(&self) -> Vec<Vector> {
        let mut out = vec![self.reeb.clone()];
        out.extend(self.p_hat.iter().cloned());
        out.extend(self.q_hat.iter().cloned());
        out
    }
}

pub fn heisenberg_basis(pt: &TpsPoint) -> HeisenbergBasis {
    let x = pt.to_vector();
    let n = pt.n();
    HeisenbergBasis {
        reeb: reeb(n),
        p_hat: (0..n).map(|i| p_hat_at(&x, i)).collect(),
        q_hat: (0..n).map(|i| q_hat_at(&x, i)).collect(),
    }
}

pub(crate) fn p_hat_at(x: &Vector, i: usize) -> Vector {
    let n = (x.len() - 1) / 2;
    let mut v = Vector::zeros(x.len());
    v[p_index(n, i)] = 1.0;
    v
}

pub(crate) fn q_hat_at(x: &Vector, i: usize) -> Vector {
    let n = (x.len() - 1) / 2;
    let mut v = Vector::zeros(x.len());
    v[W] = x[p_index(n, i)];
    v[q_index(n, i)] = -1.0;
    v
}

/// A smooth vector field given in coordinates.
pub trait VectorField: Send + Sync {
    fn eval(&self, x: &Vector) -> Vector;
}

impl<F> VectorField for F
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    fn eval(&self, x: &Vector) -> Vector {
        self(x)
    }
}

/// Vector field with a display name, as returned by the generator lists.
pub struct NamedField {
    pub name: String,
    pub field: Box<dyn VectorField>,
}

impl VectorField for NamedField {
    fn eval(&self, x: &Vector) -> Vector {
        self.field.eval(x)
    }
}

/// The Reeb field as a [`VectorField`].
pub fn reeb_field() -> impl VectorField {
    |x: &Vector| {
        let mut v = Vector::zeros(x.len());
        v[W] = 1.0;
        v
    }
}

/// `P^i` as a [`VectorField`] (zero based `i`).
pub fn p_hat_field(i: usize) -> impl VectorField {
    move |x: &Vector| p_hat_at(x, i)
}

/// `Q_i` as a [`VectorField`] (zero based `i`).
pub fn q_hat_field(i: usize) -> impl VectorField {
    move |x: &Vector| q_hat_at(x, i)
}

/// Central-difference step used by brackets and Lie derivatives.
pub fn bracket_step(x: &Vector) -> f64 {
    1e-5 * x.norm().max(1.0)
}

/// Derivative of `g` along `dir` at `x` by a central difference.
pub(crate) fn along<G: VectorField + ?Sized>(g: &G, x: &Vector, dir: &Vector, h: f64) -> Vector {
    let s = h / dir.norm().max(1.0);
    let plus = g.eval(&(x + dir * s));
    let minus = g.eval(&(x - dir * s));
    (plus - minus) / (2.0 * s)
}

/// Lie bracket `[F, G] = DG.F - DF.G` at `pt` by central differences with
/// step `1e-5 * max(1, |pt|)`.
pub fn lie_bracket<F, G>(f: &F, g: &G, pt: &TpsPoint) -> Result<Vector>
where
    F: VectorField + ?Sized,
    G: VectorField + ?Sized,
{
    let x = pt.to_vector();
    let h = bracket_step(&x);
    let fx = f.eval(&x);
    let gx = g.eval(&x);
    if fx.len() != x.len() || gx.len() != x.len() {
        return Err(TpsError::DimensionMismatch { expected: x.len(), got: fx.len().min(gx.len()) });
    }
    let out = along(g, &x, &fx, h) - along(f, &x, &gx, h);
    if out.iter().any(|c| !c.is_finite()) {
        return Err(TpsError::NonFinite(format!("lie bracket near {:?}", pt.as_slice())));
    }
    Ok(out)
}

/// Largest deviation of the Heisenberg algebra `[P^i, Q_j] = delta xi`, with
/// every other bracket among `xi`, `Q_i`, `P^i` zero.
pub fn heisenberg_residual(pt: &TpsPoint) -> Result<f64> {
    let n = pt.n();
    let xi = reeb(n);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max(lie_bracket(&reeb_field(), &q_hat_field(i), pt)?.amax());
        worst = worst.max(lie_bracket(&reeb_field(), &p_hat_field(i), pt)?.amax());
        for j in 0..n {
            let expected = if i == j { xi.clone() } else { Vector::zeros(xi.len()) };
            worst = worst.max((lie_bracket(&p_hat_field(i), &q_hat_field(j), pt)? - expected).amax());
            worst = worst.max(lie_bracket(&q_hat_field(i), &q_hat_field(j), pt)?.amax());
            worst = worst.max(lie_bracket(&p_hat_field(i), &p_hat_field(j), pt)?.amax());
        }
    }
    Ok(worst)
}

/// Differential form with constant coefficients, stored on sorted index sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Form {
    terms: BTreeMap<Vec<usize>, f64>,
}

impl Form {
    /// 1-form with the given coordinate components.
    pub fn one(components: &Vector) -> Self {
        let terms = components
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (vec![i], *c))
            .collect();
        Self { terms }
    }

    /// `d eta = sum_a dp_a ^ dq^a`.
    pub fn deta(n: usize) -> Self {
        let terms = (0..n)
            .map(|i| (vec![q_index(n, i), p_index(n, i)], -1.0))
            .collect();
        Self { terms }
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.iter().any(|i| b.contains(i)) {
                    continue;
                }
                let inversions = a.iter().map(|i| b.iter().filter(|j| *j < i).count()).sum::<usize>();
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                let mut key: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                key.sort_unstable();
                *terms.entry(key).or_insert(0.0) += sign * ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Form { terms }
    }

    /// Evaluates the form on `k` vectors, `k` being its degree.
    pub fn eval(&self, vectors: &[Vector]) -> f64 {
        self.terms
            .iter()
            .filter(|(idx, _)| idx.len() == vectors.len())
            .map(|(idx, c)| {
                let sub = Matrix::from_fn(idx.len(), idx.len(), |r, col| vectors[col][idx[r]]);
                c * leibniz_det(&sub)
            })
            .sum()
    }
}

/// Determinant by permutation expansion; exact for small integer matrices.
fn leibniz_det(m: &Matrix) -> f64 {
    let k = m.nrows();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut total = 0.0;
    permute(&mut perm, 0, 1.0, m, &mut total);
    total
}

fn permute(perm: &mut Vec<usize>, start: usize, sign: f64, m: &Matrix, total: &mut f64) {
    let k = perm.len();
    if start == k {
        let prod: f64 = (0..k).map(|r| m[(r, perm[r])]).product();
        *total += sign * prod;
        return;
    }
    for i in start..k {
        perm.swap(start, i);
        let s = if i == start { sign } else { -sign };
        permute(perm, start + 1, s, m, total);
        perm.swap(start, i);
    }
}

/// Ordered frame `(d/dw, d/dp_1, d/dq^1, ..., d/dp_n, d/dq^n)`.
pub fn volume_frame(n: usize) -> Vec<Vector> {
    let dim = 2 * n + 1;
    let unit = |k: usize| {
        let mut v = Vector::zeros(dim);
        v[k] = 1.0;
        v
    };
    let mut frame = vec![unit(W)];
    for i in 0..n {
        frame.push(unit(p_index(n, i)));
        frame.push(unit(q_index(n, i)));
    }
    frame
}

/// `eta ^ (d eta)^n` on the ordered frame of [`volume_frame`]. Only `n <= 3`
/// is supported.
pub fn volume_nondegeneracy(pt: &TpsPoint) -> Result<f64> {
    let n = pt.n();
    if n > 3 {
        return Err(TpsError::UnsupportedDimension { n, max: 3 });
    }
    let deta = Form::deta(n);
    let mut top = Form::one(&gibbs_form(pt));
    for _ in 0..n {
        top = top.wedge(&deta);
    }
    Ok(top.eval(&volume_frame(n)))
}

/// Uniform sampling box for random phase-space points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointBox {
    pub w: (f64, f64),
    pub q: (f64, f64),
    pub p: (f64, f64),
}

impl Default for PointBox {
    fn default() -> Self {
        Self { w: (-2.0, 2.0), q: (-2.0, 2.0), p: (0.5, 5.0) }
    }
}

impl PointBox {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> TpsPoint {
        let mut draw = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        let w = draw(self.w);
        let q: Vec<f64> = (0..n).map(|_| draw(self.q)).collect();
        let p: Vec<f64> = (0..n).map(|_| draw(self.p)).collect();
        TpsPoint::new(w, &q, &p).expect("sampled coordinates are finite")
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, count: usize) -> Vec<TpsPoint> {
        (0..count).map(|_| self.sample(rng, n)).collect()
    }
}
