//! Discrete Legendre maps, Legendre submanifolds and numeric conjugate
//! potentials.
//!
//! For an index set `I` the phase-space map is
//! `w~ = w + sum_{i in I} q^i p_i`, `q~^i = -p_i`, `p~_i = q^i`, which
//! preserves `eta = dw + p dq` exactly.
//!
//! A Legendre submanifold is generated by `f(p_I, q_J)` through
//! `q^i = df/dp_i`, `p_j = -df/dq^j`, `w = f - p_i df/dp_i`.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::chart::{gibbs_form_at, p_index, q_index, TpsPoint, W};
use crate::fields::{Jet, Potential, SharedPotential};
use crate::metric::{gfr, gfr_at};
use crate::{Matrix, Result, TpsError, Vector};

/// Relative determinant threshold for Hessian degeneracy.
pub const BREAKDOWN_TOL: f64 = 1e-10;

/// Stationarity tolerance of the conjugate Newton solve.
pub const NEWTON_TOL: f64 = 1e-12;

/// Largest embedding mismatch before a grid point counts as lying on
/// another branch of a non-injective gradient map.
pub const BRANCH_TOL: f64 = 1e-6;

const NEWTON_MAX_ITER: usize = 200;
const SCAN_POINTS: usize = 17;

/// Sorted set of zero-based degree-of-freedom indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(n: usize, indices: &[usize]) -> Result<Self> {
        let mut v = indices.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() != indices.len() {
            return Err(TpsError::InvalidInput(format!("repeated index in {indices:?}")));
        }
        if let Some(i) = v.iter().find(|i| **i >= n) {
            return Err(TpsError::InvalidInput(format!("index {i} out of range for n = {n}")));
        }
        Ok(Self(v))
    }

    /// Parses one-based indices, as used on the command line.
    pub fn from_one_based(n: usize, indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(TpsError::InvalidInput("indices are one-based".into()));
        }
        Self::new(n, &indices.iter().map(|i| i - 1).collect::<Vec<_>>())
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.contains(*i)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(i) if *i >= n => Err(TpsError::InvalidInput(format!("index {i} out of range for n = {n}"))),
            _ => Ok(()),
        }
    }
}

/// Discrete Legendre map on a point.
pub fn legendre_point(pt: &TpsPoint, set: &IndexSet) -> Result<TpsPoint> {
    let n = pt.n();
    set.check(n)?;
    let mut w = pt.w();
    let mut q = pt.q().to_vec();
    let mut p = pt.p().to_vec();
    for &i in set.indices() {
        w += q[i] * p[i];
        let (qi, pi) = (q[i], p[i]);
        q[i] = -pi;
        p[i] = qi;
    }
    TpsPoint::new(w, &q, &p)
}

/// Inverse of [`legendre_point`] for the same index set.
pub fn legendre_point_inverse(pt: &TpsPoint, set: &IndexSet) -> Result<TpsPoint> {
    let n = pt.n();
    set.check(n)?;
    let mut w = pt.w();
    let mut q = pt.q().to_vec();
    let mut p = pt.p().to_vec();
    for &i in set.indices() {
        let (qt, pt_) = (q[i], p[i]);
        q[i] = pt_;
        p[i] = -qt;
        w -= q[i] * p[i];
    }
    TpsPoint::new(w, &q, &p)
}

/// Jacobian of [`legendre_point`] at `pt`.
pub fn legendre_jacobian(pt: &TpsPoint, set: &IndexSet) -> Result<Matrix> {
    let n = pt.n();
    set.check(n)?;
    let dim = pt.dim();
    let mut j = Matrix::identity(dim, dim);
    for &i in set.indices() {
        let (qi, pi) = (q_index(n, i), p_index(n, i));
        j[(W, qi)] = pt.p()[i];
        j[(W, pi)] = pt.q()[i];
        j[(qi, qi)] = 0.0;
        j[(qi, pi)] = -1.0;
        j[(pi, pi)] = 0.0;
        j[(pi, qi)] = 1.0;
    }
    Ok(j)
}

/// Pullback of the Fisher-Rao metric by the Legendre map on `set`: the
/// `dq^i (.) dp_i` terms change sign for `i` in `set`.
pub fn plt_metric(pt: &TpsPoint, set: &IndexSet) -> Result<Matrix> {
    let n = pt.n();
    set.check(n)?;
    let mut g = gfr(pt);
    for &i in set.indices() {
        let (qi, pi) = (q_index(n, i), p_index(n, i));
        g[(qi, pi)] += 1.0;
        g[(pi, qi)] += 1.0;
    }
    Ok(g)
}

/// Scale-aware singularity test `|det A| < tol * (tr|A| / k)^k`.
pub fn is_degenerate(a: &Matrix) -> bool {
    let k = a.nrows();
    if k == 0 {
        return false;
    }
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let scale = eig.iter().map(|e| e.abs()).sum::<f64>() / k as f64;
    let det: f64 = eig.iter().product();
    scale == 0.0 || det.abs() < BREAKDOWN_TOL * scale.powi(k as i32)
}

fn definiteness(a: &Matrix) -> (usize, usize) {
    if a.nrows() == 0 {
        return (0, 0);
    }
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let pos = eig.iter().filter(|e| **e > 0.0).count();
    (pos, eig.len() - pos)
}

fn block(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

/// Generating data of a Legendre submanifold.
#[derive(Clone)]
pub struct LegendreSpec {
    pub n: usize,
    pub indices: IndexSet,
    pub f: SharedPotential,
}

impl std::fmt::Debug for LegendreSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LegendreSpec").field("n", &self.n).field("indices", &self.indices).finish_non_exhaustive()
    }
}

impl LegendreSpec {
    pub fn new(indices: IndexSet, f: SharedPotential) -> Result<Self> {
        let n = f.arity();
        indices.check(n)?;
        Ok(Self { n, indices, f })
    }

    /// Spec with every base coordinate a `q`: the surface `(f(q), q, -grad f)`.
    pub fn all_q(f: SharedPotential) -> Self {
        Self { n: f.arity(), indices: IndexSet::empty(), f }
    }
}

/// Point of the Legendre submanifold over base coordinates `x`, where
/// `x_i = p_i` for `i` in the index set and `x_j = q^j` otherwise.
pub fn embed(spec: &LegendreSpec, x: &[f64]) -> Result<TpsPoint> {
    let jet = spec.f.jet(x)?;
    embed_from_jet(spec, x, &jet)
}

fn embed_from_jet(spec: &LegendreSpec, x: &[f64], jet: &Jet) -> Result<TpsPoint> {
    let n = spec.n;
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut w = jet.value;
    for a in 0..n {
        if spec.indices.contains(a) {
            p[a] = x[a];
            q[a] = jet.gradient[a];
            w -= x[a] * jet.gradient[a];
        } else {
            q[a] = x[a];
            p[a] = -jet.gradient[a];
        }
    }
    TpsPoint::new(w, &q, &p)
}

/// Embedding differential, a `(2n+1) x n` matrix whose columns are the images
/// of the base coordinate directions.
pub fn embed_jacobian(spec: &LegendreSpec, x: &[f64]) -> Result<Matrix> {
    let jet = spec.f.jet(x)?;
    Ok(embed_jacobian_from_jet(spec, x, &jet))
}

fn embed_jacobian_from_jet(spec: &LegendreSpec, x: &[f64], jet: &Jet) -> Matrix {
    let n = spec.n;
    let h = &jet.hessian;
    let mut jac = Matrix::zeros(2 * n + 1, n);
    for c in 0..n {
        let mut dw = 0.0;
        for a in 0..n {
            if spec.indices.contains(a) {
                jac[(q_index(n, a), c)] = h[(a, c)];
                jac[(p_index(n, a), c)] = if a == c { 1.0 } else { 0.0 };
                dw -= x[a] * h[(a, c)];
            } else {
                jac[(q_index(n, a), c)] = if a == c { 1.0 } else { 0.0 };
                jac[(p_index(n, a), c)] = -h[(a, c)];
                if a == c {
                    dw += jet.gradient[a];
                }
            }
        }
        jac[(W, c)] = dw;
    }
    jac
}

/// `max |eta(d embed . v)|` over the base coordinate directions.
pub fn isotropy_residual(spec: &LegendreSpec, x: &[f64]) -> Result<f64> {
    let jet = spec.f.jet(x)?;
    let pt = embed_from_jet(spec, x, &jet)?;
    let jac = embed_jacobian_from_jet(spec, x, &jet);
    Ok((gibbs_form_at(&pt.to_vector()).transpose() * jac).amax())
}

/// Induced metric on a Legendre submanifold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedMetric {
    /// `J^T G_FR J`, the ground truth.
    pub pullback: Matrix,
    /// Hessian of the generating function.
    pub hessian: Matrix,
    /// `+1` or `-1`, whichever of `+-hessian` is closer to the pullback.
    pub hessian_sign: f64,
}

pub fn induced_metric(spec: &LegendreSpec, x: &[f64]) -> Result<InducedMetric> {
    let jet = spec.f.jet(x)?;
    let pt = embed_from_jet(spec, x, &jet)?;
    let jac = embed_jacobian_from_jet(spec, x, &jet);
    let pullback = jac.transpose() * gfr(&pt) * &jac;
    let hessian_sign = if (&pullback - &jet.hessian).amax() <= (&pullback + &jet.hessian).amax() { 1.0 } else { -1.0 };
    Ok(InducedMetric { pullback, hessian: jet.hessian, hessian_sign })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pushforward {
    /// `-Hess(w) X`, the image in `p` coordinates.
    pub vector: Vector,
    /// Hessian degenerate at the base point.
    pub degenerate: bool,
}

/// Tangent map `X -> -Hess(w) X` of `q -> p(q) = -grad w(q)`.
pub fn pushforward(w: &dyn Potential, x: &[f64], v: &Vector) -> Result<Pushforward> {
    let jet = w.jet(x)?;
    if v.len() != x.len() {
        return Err(TpsError::DimensionMismatch { expected: x.len(), got: v.len() });
    }
    Ok(Pushforward { vector: -&jet.hessian * v, degenerate: is_degenerate(&jet.hessian) })
}

/// Numeric conjugate of `w` in the indices `I`: as a function of
/// `x = (p_I, q_J)` it equals `w(q) + p_I . q_I` where `q_I` solves
/// `p_I = -d w / d q_I`.
pub struct Conjugate {
    w: SharedPotential,
    set: IndexSet,
    rest: Vec<usize>,
    guess: Option<Vec<f64>>,
    reference: (usize, usize),
    domain: Option<Vec<(f64, f64)>>,
}

/// Builds the numeric conjugate potential. The Newton solve is seeded from
/// `guess` (a full `q` vector) or, without one, from a coarse scan of the
/// potential's domain. The Hessian block at the seed fixes the reference
/// definiteness; any Newton iterate where it degenerates or changes raises
/// [`TpsError::LegendreBreakdown`].
pub fn legendre_potential(w: SharedPotential, set: &IndexSet, guess: Option<&[f64]>) -> Result<SharedPotential> {
    let n = w.arity();
    set.check(n)?;
    let domain = w.domain();
    let start: Vec<f64> = match (guess, &domain) {
        (Some(g), _) => {
            if g.len() != n {
                return Err(TpsError::DimensionMismatch { expected: n, got: g.len() });
            }
            g.to_vec()
        }
        (None, Some(d)) => d.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect(),
        (None, None) => return Err(TpsError::InvalidInput("conjugate needs a guess or a potential domain".into())),
    };
    let jet = w.jet(&start)?;
    let a = block(&jet.hessian, set.indices(), set.indices());
    if is_degenerate(&a) {
        return Err(TpsError::LegendreBreakdown { at: start, reason: "degenerate Hessian at the seed".into() });
    }
    let out_domain = domain.as_ref().map(|d| {
        let mut out = d.clone();
        for &i in set.indices() {
            // p-range is not known a priori; leave a symmetric box
            let g = jet.gradient[i].abs().max(1.0);
            out[i] = (-10.0 * g, 10.0 * g);
        }
        out
    });
    Ok(Arc::new(Conjugate {
        rest: set.complement(n),
        set: set.clone(),
        reference: definiteness(&a),
        guess: guess.map(|g| g.to_vec()),
        domain: out_domain,
        w,
    }))
}

impl Conjugate {
    fn residual(&self, jet: &Jet, p_set: &[f64]) -> Vector {
        Vector::from_iterator(self.set.len(), self.set.indices().iter().zip(p_set).map(|(&i, p)| p + jet.gradient[i]))
    }

    fn seed(&self, x: &[f64], p_set: &[f64]) -> Result<Vec<f64>> {
        if let Some(g) = &self.guess {
            let mut q = g.clone();
            for &j in &self.rest {
                q[j] = x[j];
            }
            return Ok(q);
        }
        let domain = self.w.domain().ok_or_else(|| TpsError::InvalidInput("no domain to scan".into()))?;
        let k = self.set.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let total = SCAN_POINTS.pow(k as u32);
        for idx in 0..total {
            let mut q: Vec<f64> = x.to_vec();
            let mut rem = idx;
            for &i in self.set.indices() {
                let (lo, hi) = domain[i];
                let t = (rem % SCAN_POINTS) as f64 + 0.5;
                rem /= SCAN_POINTS;
                q[i] = lo + (hi - lo) * t / SCAN_POINTS as f64;
            }
            if let Ok(jet) = self.w.jet(&q) {
                let r = self.residual(&jet, p_set).norm();
                if best.as_ref().is_none_or(|(b, _)| r < *b) {
                    best = Some((r, q));
                }
            }
        }
        best.map(|(_, q)| q).ok_or_else(|| TpsError::Domain("grid scan found no evaluable seed".into()))
    }

    fn check_block(&self, q: &[f64], hess: &Matrix) -> Result<Matrix> {
        let a = block(hess, self.set.indices(), self.set.indices());
        if is_degenerate(&a) {
            return Err(TpsError::LegendreBreakdown { at: q.to_vec(), reason: "Hessian degenerate along the Newton path".into() });
        }
        if definiteness(&a) != self.reference {
            return Err(TpsError::LegendreBreakdown { at: q.to_vec(), reason: "Hessian changed definiteness along the Newton path".into() });
        }
        Ok(a)
    }

    /// Solves for the full `q` at base coordinates `x`.
    pub fn solve(&self, x: &[f64]) -> Result<(Vec<f64>, Jet)> {
        let p_set: Vec<f64> = self.set.indices().iter().map(|&i| x[i]).collect();
        let mut q = self.seed(x, &p_set)?;
        let mut jet = self.w.jet(&q)?;
        let scale = p_set.iter().fold(1.0f64, |m, p| m.max(p.abs()));
        for _ in 0..NEWTON_MAX_ITER {
            let r = self.residual(&jet, &p_set);
            let a = self.check_block(&q, &jet.hessian)?;
            if r.amax() <= NEWTON_TOL * scale {
                return Ok((q, jet));
            }
            let step = a.lu().solve(&(-&r)).ok_or_else(|| TpsError::LegendreBreakdown {
                at: q.clone(),
                reason: "singular Newton system".into(),
            })?;
            let r0 = r.norm();
            let mut lambda = 1.0;
            let mut accepted = None;
            while lambda > 1e-12 {
                let mut trial = q.clone();
                for (k, &i) in self.set.indices().iter().enumerate() {
                    trial[i] += lambda * step[k];
                }
                if let Ok(tj) = self.w.jet(&trial) {
                    let rt = self.residual(&tj, &p_set).norm();
                    if rt <= (1.0 - 1e-4 * lambda) * r0 || rt <= NEWTON_TOL * scale {
                        accepted = Some((trial, tj));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((tq, tj)) => {
                    q = tq;
                    jet = tj;
                }
                None => {
                    return Err(TpsError::NoConvergence { iterations: NEWTON_MAX_ITER, residual: r.amax() });
                }
            }
        }
        let r = self.residual(&jet, &p_set);
        Err(TpsError::NoConvergence { iterations: NEWTON_MAX_ITER, residual: r.amax() })
    }
}

impl Potential for Conjugate {
    fn arity(&self) -> usize {
        self.w.arity()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.arity();
        if x.len() != n {
            return Err(TpsError::DimensionMismatch { expected: n, got: x.len() });
        }
        let (q, wj) = self.solve(x)?;
        let set = self.set.indices();
        let rest = &self.rest;
        let a = block(&wj.hessian, set, set);
        let a_inv = a.try_inverse().ok_or_else(|| TpsError::LegendreBreakdown { at: q.clone(), reason: "singular Hessian".into() })?;
        let b = block(&wj.hessian, set, rest);
        let c = block(&wj.hessian, rest, rest);
        let f_pp = -&a_inv;
        let f_pq = -&a_inv * &b;
        let f_qq = c - b.transpose() * &a_inv * &b;
        let mut value = wj.value;
        let mut gradient = Vector::zeros(n);
        for &i in set {
            value += x[i] * q[i];
            gradient[i] = q[i];
        }
        for &j in rest {
            gradient[j] = wj.gradient[j];
        }
        let mut hessian = Matrix::zeros(n, n);
        for (r, &i) in set.iter().enumerate() {
            for (c, &k) in set.iter().enumerate() {
                hessian[(i, k)] = f_pp[(r, c)];
            }
            for (c, &j) in rest.iter().enumerate() {
                hessian[(i, j)] = f_pq[(r, c)];
                hessian[(j, i)] = f_pq[(r, c)];
            }
        }
        for (r, &j) in rest.iter().enumerate() {
            for (c, &k) in rest.iter().enumerate() {
                hessian[(j, k)] = f_qq[(r, c)];
            }
        }
        Ok(Jet { value, gradient, hessian })
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        self.domain.clone()
    }
}

/// Walks `path` in `q` space and fails at the first point where the Hessian
/// block of `w` on `set` is degenerate or changes definiteness.
pub fn breakdown_scan(w: &dyn Potential, set: &IndexSet, path: &[Vec<f64>]) -> Result<()> {
    let mut reference = None;
    let mut last_det: Option<f64> = None;
    for q in path {
        let jet = w.jet(q)?;
        let a = block(&jet.hessian, set.indices(), set.indices());
        let det = a.determinant();
        let crossed = last_det.is_some_and(|d| d.signum() != det.signum());
        if is_degenerate(&a) || crossed || reference.is_some_and(|r| r != definiteness(&a)) {
            return Err(TpsError::LegendreBreakdown { at: q.clone(), reason: "Hessian degenerate or changed definiteness on path".into() });
        }
        reference.get_or_insert(definiteness(&a));
        last_det = Some(det);
    }
    Ok(())
}

/// Outcome of the Legendre isometry test at one base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryPoint {
    pub q: Vec<f64>,
    /// `max |psi* g~ - g|`.
    pub residual_plus: f64,
    /// `max |psi* g~ + g|`.
    pub residual_minus: f64,
    /// `max` distance between the two embeddings of the same surface.
    pub embedding_mismatch: f64,
    pub breakdown: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryReport {
    pub indices: Vec<usize>,
    pub points: Vec<IsometryPoint>,
    /// Global sign `s` minimising `max_points |psi* g~ - s g|`.
    pub sign: f64,
    /// That minimal residual over the non-flagged points.
    pub residual: f64,
}

impl IsometryReport {
    pub fn breakdowns(&self) -> usize {
        self.points.iter().filter(|p| p.breakdown.is_some()).count()
    }
}

/// Compares the metric induced on the surface of `w` with the metric induced
/// on its image under the Legendre map on `set`, pulled back through the
/// equations of state `q -> (p_I(q), q_J)`.
///
/// `g` is the mechanical pullback of `G_FR` by `q -> (w, q, -grad w)`; `g~` is
/// the mechanical pullback of `G_FR` by the transformed surface, parametrised
/// by the conjugate potential built with [`legendre_potential`].
pub fn legendre_isometry_check(w: SharedPotential, set: &IndexSet, grid: &[Vec<f64>]) -> Result<IsometryReport> {
    let n = w.arity();
    set.check(n)?;
    let guess = grid.first().ok_or_else(|| TpsError::InvalidInput("empty grid".into()))?;
    let original = LegendreSpec::all_q(Arc::clone(&w));
    let conj = legendre_potential(Arc::clone(&w), set, Some(guess));
    let reference = definiteness(&block(&w.jet(guess)?.hessian, set.indices(), set.indices()));
    let mut points = Vec::with_capacity(grid.len());
    for q in grid {
        let mut point = IsometryPoint {
            q: q.clone(),
            residual_plus: f64::NAN,
            residual_minus: f64::NAN,
            embedding_mismatch: f64::NAN,
            breakdown: None,
        };
        match isometry_at(&w, &original, &conj, set, q, reference) {
            Ok((_, _, mismatch)) if mismatch > BRANCH_TOL => {
                point.embedding_mismatch = mismatch;
                point.breakdown = Some(
                    TpsError::LegendreBreakdown { at: q.clone(), reason: "gradient map not injective: conjugate lands on another branch".into() }
                        .to_string(),
                );
            }
            Ok((plus, minus, mismatch)) => {
                point.residual_plus = plus;
                point.residual_minus = minus;
                point.embedding_mismatch = mismatch;
            }
            Err(e @ TpsError::LegendreBreakdown { .. }) => point.breakdown = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        points.push(point);
    }
    let worst = |f: fn(&IsometryPoint) -> f64| {
        points.iter().filter(|p| p.breakdown.is_none()).map(f).fold(0.0, f64::max)
    };
    let (plus, minus) = (worst(|p| p.residual_plus), worst(|p| p.residual_minus));
    let (sign, residual) = if minus < plus { (-1.0, minus) } else { (1.0, plus) };
    Ok(IsometryReport { indices: set.indices().to_vec(), points, sign, residual })
}

/// Total Legendre transform version of [`legendre_isometry_check`].
pub fn tlt_isometry_check(w: SharedPotential, grid: &[Vec<f64>]) -> Result<IsometryReport> {
    let n = w.arity();
    legendre_isometry_check(w, &IndexSet::all(n), grid)
}

fn isometry_at(
    w: &SharedPotential,
    original: &LegendreSpec,
    conj: &Result<SharedPotential>,
    set: &IndexSet,
    q: &[f64],
    reference: (usize, usize),
) -> Result<(f64, f64, f64)> {
    let n = w.arity();
    let jet = w.jet(q)?;
    let a = block(&jet.hessian, set.indices(), set.indices());
    if is_degenerate(&a) {
        return Err(TpsError::LegendreBreakdown { at: q.to_vec(), reason: "degenerate Hessian on grid".into() });
    }
    if definiteness(&a) != reference {
        return Err(TpsError::LegendreBreakdown { at: q.to_vec(), reason: "Hessian changed definiteness across the grid".into() });
    }
    let conj = match conj {
        Ok(c) => Arc::clone(c),
        Err(e) => return Err(e.clone()),
    };
    let g = induced_metric(original, q)?.pullback;
    // base coordinates of the conjugate: p_I from the equations of state, q_J kept
    let mut xt = q.to_vec();
    for &i in set.indices() {
        xt[i] = -jet.gradient[i];
    }
    let spec = LegendreSpec::new(set.clone(), conj)?;
    let cj = spec.f.jet(&xt)?;
    let on_surface = embed_from_jet(&spec, &xt, &cj)?;
    let mismatch = (on_surface.to_vector() - embed(original, q)?.to_vector()).amax();
    let image = legendre_point(&on_surface, set)?;
    let jac = legendre_jacobian(&on_surface, set)? * embed_jacobian_from_jet(&spec, &xt, &cj);
    let g_tilde = jac.transpose() * gfr_at(&image.to_vector()) * &jac;
    let mut k = Matrix::identity(n, n);
    for &i in set.indices() {
        for c in 0..n {
            k[(i, c)] = -jet.hessian[(i, c)];
        }
    }
    let pulled = k.transpose() * g_tilde * &k;
    Ok(((&pulled - &g).amax(), (&pulled + &g).amax(), mismatch))
}
