//! Fisher-Rao metric on the phase space and the para-contact structure
//! `(eta, xi, phi, G)` built from it.
//!
//! `G = eta (x) eta - dq^i (.) dp_i`, where `(.)` is the symmetrised product
//! carrying a factor 1/2 on each off-diagonal entry.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::calculus::{self, CURVATURE_STEP};
use crate::chart::{self, bracket_step, gibbs_form_at, p_index, q_index, NamedField, TpsPoint, VectorField, W};
use crate::{Matrix, Result, TpsError, Vector};

/// Eigenvalues closer to zero than this make the metric degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Fisher-Rao metric matrix at `pt`.
pub fn gfr(pt: &TpsPoint) -> Matrix {
    gfr_at(&pt.to_vector())
}

pub(crate) fn gfr_at(x: &Vector) -> Matrix {
    let n = (x.len() - 1) / 2;
    let eta = gibbs_form_at(x);
    let mut g = &eta * eta.transpose();
    for i in 0..n {
        let (qi, pi) = (q_index(n, i), p_index(n, i));
        g[(qi, pi)] -= 0.5;
        g[(pi, qi)] -= 0.5;
    }
    g
}

/// `(positive, negative)` eigenvalue counts of the Fisher-Rao metric.
pub fn signature(pt: &TpsPoint) -> Result<(usize, usize)> {
    matrix_signature(&gfr(pt))
}

/// Eigenvalue sign counts of a symmetric matrix.
pub fn matrix_signature(g: &Matrix) -> Result<(usize, usize)> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    if let Some(e) = eig.iter().find(|e| e.abs() < DEGENERACY_TOL) {
        return Err(TpsError::DegenerateMetric { eigenvalue: *e });
    }
    let pos = eig.iter().filter(|e| **e > 0.0).count();
    Ok((pos, eig.len() - pos))
}

fn require_positive_p(pt: &TpsPoint) -> Result<()> {
    if let Some(p) = pt.p().iter().find(|p| **p <= 0.0) {
        return Err(TpsError::Domain(format!("frame needs p_i > 0, found {p}")));
    }
    Ok(())
}

/// Orthonormal coframe `[theta0, theta+_1..theta+_n, theta-_1..theta-_n]`
/// with `theta0 = eta` and `theta+-_i = (-p_i dq^i +- dp_i) / (2 sqrt(p_i))`.
pub fn orthonormal_coframe(pt: &TpsPoint) -> Result<Vec<Vector>> {
    require_positive_p(pt)?;
    let n = pt.n();
    let dim = pt.dim();
    let mut out = vec![chart::gibbs_form(pt)];
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let p = pt.p()[i];
            let s = 1.0 / (2.0 * p.sqrt());
            let mut theta = Vector::zeros(dim);
            theta[q_index(n, i)] = -p * s;
            theta[p_index(n, i)] = sign * s;
            out.push(theta);
        }
    }
    Ok(out)
}

/// Frame dual to [`orthonormal_coframe`]: `[xi, e+_1..e+_n, e-_1..e-_n]`
/// with `e+-_i = sqrt(p_i) (Q_i / p_i +- P^i)`.
pub fn canonical_basis(pt: &TpsPoint) -> Result<Vec<Vector>> {
    require_positive_p(pt)?;
    let n = pt.n();
    let x = pt.to_vector();
    let mut out = vec![chart::reeb(n)];
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let p = pt.p()[i];
            let q_hat = chart::q_hat_at(&x, i);
            let p_hat = chart::p_hat_at(&x, i);
            out.push((q_hat / p + p_hat * sign) * p.sqrt());
        }
    }
    Ok(out)
}

/// Almost para-contact tensor assembled from the frames,
/// `phi = -sum_i (e+_i (x) theta-_i + e-_i (x) theta+_i)`.
pub fn phi(pt: &TpsPoint) -> Result<Matrix> {
    let n = pt.n();
    let frame = canonical_basis(pt)?;
    let coframe = orthonormal_coframe(pt)?;
    let mut m = Matrix::zeros(pt.dim(), pt.dim());
    for i in 0..n {
        let (plus, minus) = (1 + i, 1 + n + i);
        m -= &frame[plus] * coframe[minus].transpose();
        m -= &frame[minus] * coframe[plus].transpose();
    }
    Ok(m)
}

/// Closed coordinate form of [`phi`]: `phi(X) = X^{q^i} Q_i + X_{p_i} P^i`.
/// Polynomial in `p`, so it is valid for any sign of the momenta.
pub fn phi_closed(pt: &TpsPoint) -> Matrix {
    phi_closed_at(&pt.to_vector())
}

pub(crate) fn phi_closed_at(x: &Vector) -> Matrix {
    let n = (x.len() - 1) / 2;
    let mut m = Matrix::zeros(x.len(), x.len());
    for i in 0..n {
        let (qi, pi) = (q_index(n, i), p_index(n, i));
        m[(W, qi)] = x[pi];
        m[(qi, qi)] = -1.0;
        m[(pi, pi)] = 1.0;
    }
    m
}

type Eval<T> = Arc<dyn Fn(&Vector) -> Result<T> + Send + Sync>;

/// Pointwise evaluators of a para-contact metric structure. `deta` is the
/// exterior derivative of the `eta` field as the antisymmetric matrix
/// `d_i eta_j - d_j eta_i`.
#[derive(Clone)]
pub struct StructureBundle {
    pub n: usize,
    pub eta: Eval<Vector>,
    pub deta: Eval<Matrix>,
    pub reeb: Eval<Vector>,
    pub phi: Eval<Matrix>,
    pub metric: Eval<Matrix>,
}

impl std::fmt::Debug for StructureBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StructureBundle").field("n", &self.n).finish_non_exhaustive()
    }
}

impl StructureBundle {
    /// The Fisher-Rao structure `(eta, d/dw, phi, G_FR)`. `phi` uses the
    /// closed coordinate form so the bundle is defined for every sign of `p`.
    pub fn fisher_rao(n: usize) -> Self {
        Self {
            n,
            eta: Arc::new(|x| Ok(gibbs_form_at(x))),
            deta: Arc::new(move |_| Ok(chart::deta_matrix(n))),
            reeb: Arc::new(move |_| Ok(chart::reeb(n))),
            phi: Arc::new(|x| Ok(phi_closed_at(x))),
            metric: Arc::new(|x| Ok(gfr_at(x))),
        }
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.len() != 2 * self.n + 1 {
            return Err(TpsError::DimensionMismatch { expected: 2 * self.n + 1, got: x.len() });
        }
        Ok(())
    }

    pub fn eta_at(&self, pt: &TpsPoint) -> Result<Vector> {
        let x = pt.to_vector();
        self.check(&x)?;
        (self.eta)(&x)
    }

    pub fn deta_at(&self, pt: &TpsPoint) -> Result<Matrix> {
        let x = pt.to_vector();
        self.check(&x)?;
        (self.deta)(&x)
    }

    pub fn reeb_at(&self, pt: &TpsPoint) -> Result<Vector> {
        let x = pt.to_vector();
        self.check(&x)?;
        (self.reeb)(&x)
    }

    pub fn phi_at(&self, pt: &TpsPoint) -> Result<Matrix> {
        let x = pt.to_vector();
        self.check(&x)?;
        (self.phi)(&x)
    }

    pub fn metric_at(&self, pt: &TpsPoint) -> Result<Matrix> {
        let x = pt.to_vector();
        self.check(&x)?;
        (self.metric)(&x)
    }

    /// The Reeb evaluator as a vector field; evaluation failures become NaN.
    pub fn reeb_field(&self) -> impl VectorField + '_ {
        move |x: &Vector| (self.reeb)(x).unwrap_or_else(|_| Vector::from_element(x.len(), f64::NAN))
    }
}

/// Pointwise residuals of the para-contact metric identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub reeb_normalization: f64,
    pub reeb_kernel: f64,
    pub phi_reeb: f64,
    pub phi_square: f64,
    pub compatibility: f64,
    pub associated: f64,
}

/// Evaluates `eta(xi) = 1`, `d eta(xi, .) = 0`, `phi xi = 0`,
/// `phi^2 = I - eta (x) xi`, `G(phi X, phi Y) = -[G(X,Y) - eta(X) eta(Y)]` and
/// `d eta(X, Y) / 2 = G(X, phi Y)` at one point.
pub fn identity_residuals(bundle: &StructureBundle, pt: &TpsPoint) -> Result<IdentityResiduals> {
    let eta = bundle.eta_at(pt)?;
    let deta = bundle.deta_at(pt)?;
    let xi = bundle.reeb_at(pt)?;
    let phi = bundle.phi_at(pt)?;
    let g = bundle.metric_at(pt)?;
    let dim = pt.dim();
    let eta_eta = &eta * eta.transpose();
    Ok(IdentityResiduals {
        reeb_normalization: (eta.dot(&xi) - 1.0).abs(),
        reeb_kernel: (xi.transpose() * &deta).amax(),
        phi_reeb: (&phi * &xi).amax(),
        phi_square: (&phi * &phi - Matrix::identity(dim, dim) + &xi * eta.transpose()).amax(),
        compatibility: (phi.transpose() * &g * &phi + &g - eta_eta).amax(),
        associated: (deta * 0.5 - &g * &phi).amax(),
    })
}

/// Worst residual of one identity over a point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub points: usize,
    pub checks: Vec<IdentityCheck>,
    /// Points at which an evaluator failed, with the error message.
    pub failures: Vec<String>,
}

impl StructureReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.max_residual)
    }
}

/// Runs [`identity_residuals`] over `pts`. Failures are reported, never
/// thrown.
pub fn check_structure(bundle: &StructureBundle, pts: &[TpsPoint], tol: f64) -> StructureReport {
    let names = ["reeb_normalization", "reeb_kernel", "phi_reeb", "phi_square", "compatibility", "associated"];
    let mut worst = [0.0f64; 6];
    let mut failures = Vec::new();
    for pt in pts {
        match identity_residuals(bundle, pt) {
            Ok(r) => {
                let vals = [r.reeb_normalization, r.reeb_kernel, r.phi_reeb, r.phi_square, r.compatibility, r.associated];
                for (w, v) in worst.iter_mut().zip(vals) {
                    *w = if v.is_nan() { f64::INFINITY } else { w.max(v) };
                }
            }
            Err(e) => failures.push(format!("{:?}: {e}", pt.as_slice())),
        }
    }
    let checks = names
        .iter()
        .zip(worst)
        .map(|(name, max_residual)| IdentityCheck {
            name: name.to_string(),
            max_residual,
            tol,
            pass: max_residual < tol,
        })
        .collect();
    StructureReport { n: bundle.n, points: pts.len(), checks, failures }
}

/// Tolerances of [`structure_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteTolerances {
    /// Algebraic identities, brackets and the Reeb conditions.
    pub identities: f64,
    /// `nabla xi = -phi` with finite-difference Christoffels.
    pub connection: f64,
    /// `eta`-Einstein condition with nested finite differences.
    pub curvature: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self { identities: 1e-8, connection: 1e-4, curvature: 1e-3 }
    }
}

/// Full verification of the Fisher-Rao structure in `n` degrees of freedom:
/// Reeb conditions, Heisenberg algebra, `|eta ^ (d eta)^n| = n!`, signature
/// `(n+1, n)`, the para-contact identities and, for `n <= 2`, the connection
/// and curvature conditions. Points are evaluated in parallel; the report
/// does not depend on the thread count.
pub fn structure_suite(n: usize, pts: &[TpsPoint], tol: SuiteTolerances) -> StructureReport {
    use rayon::prelude::*;
    let bundle = StructureBundle::fisher_rao(n);
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    let curvature = n <= 2;
    let mut names = vec![
        ("reeb_normalization", tol.identities),
        ("reeb_kernel", tol.identities),
        ("heisenberg", tol.identities),
        ("volume", 0.0),
        ("signature_mismatches", 0.0),
        ("phi_reeb", tol.identities),
        ("phi_square", tol.identities),
        ("compatibility", tol.identities),
        ("associated", tol.identities),
        ("nabla_xi", tol.connection),
    ];
    if curvature {
        names.push(("eta_einstein", tol.curvature));
    }
    let rows: Vec<Result<Vec<f64>>> = pts
        .par_iter()
        .map(|pt| {
            if pt.n() != n {
                return Err(TpsError::DimensionMismatch { expected: n, got: pt.n() });
            }
            let r = identity_residuals(&bundle, pt)?;
            let sig_ok = signature(pt)? == (n + 1, n);
            let mut row = vec![
                r.reeb_normalization,
                r.reeb_kernel,
                chart::heisenberg_residual(pt)?,
                (chart::volume_nondegeneracy(pt)?.abs() - factorial).abs(),
                if sig_ok { 0.0 } else { 1.0 },
                r.phi_reeb,
                r.phi_square,
                r.compatibility,
                r.associated,
                nabla_xi_check(&bundle, pt)?,
            ];
            if curvature {
                row.push(eta_einstein_residual(pt)?);
            }
            Ok(row)
        })
        .collect();
    let mut worst = vec![0.0f64; names.len()];
    let mut failures = Vec::new();
    for (pt, row) in pts.iter().zip(rows) {
        match row {
            Ok(vals) => {
                for (k, v) in vals.into_iter().enumerate() {
                    // signature mismatches are counted, the rest are maxima
                    worst[k] = if v.is_nan() {
                        f64::INFINITY
                    } else if names[k].0 == "signature_mismatches" {
                        worst[k] + v
                    } else {
                        worst[k].max(v)
                    };
                }
            }
            Err(e) => failures.push(format!("{:?}: {e}", pt.as_slice())),
        }
    }
    let checks = names
        .iter()
        .zip(worst)
        .map(|(&(name, tol), max_residual)| IdentityCheck { name: name.to_string(), max_residual, tol, pass: max_residual <= tol })
        .collect();
    StructureReport { n, points: pts.len(), checks, failures }
}

/// Max-norm of the Lie derivative of the bundle metric along `field`.
pub fn killing_residual_of<F: VectorField + ?Sized>(
    bundle: &StructureBundle,
    field: &F,
    pt: &TpsPoint,
) -> Result<f64> {
    let x = pt.to_vector();
    let l = calculus::lie_derivative_tensor(&|y: &Vector| (bundle.metric)(y), field, &x, bracket_step(&x))?;
    Ok(l.amax())
}

/// Killing residual of the bundle's Reeb field.
pub fn killing_residual(bundle: &StructureBundle, pt: &TpsPoint) -> Result<f64> {
    killing_residual_of(bundle, &bundle.reeb_field(), pt)
}

/// Max-norm of `nabla xi + phi` with finite-difference Christoffels.
pub fn nabla_xi_check(bundle: &StructureBundle, pt: &TpsPoint) -> Result<f64> {
    let x = pt.to_vector();
    let nabla = calculus::covariant_derivative(&|y: &Vector| (bundle.metric)(y), &bundle.reeb_field(), &x, CURVATURE_STEP)?;
    Ok((nabla + bundle.phi_at(pt)?).amax())
}

/// `max |Ric + (2n+2) eta (x) eta - 2 G|` for the Fisher-Rao metric.
/// Supported for `n <= 2`.
pub fn eta_einstein_residual(pt: &TpsPoint) -> Result<f64> {
    let n = pt.n();
    if n > 2 {
        return Err(TpsError::UnsupportedDimension { n, max: 2 });
    }
    let x = pt.to_vector();
    let ric = calculus::ricci(&|y: &Vector| Ok(gfr_at(y)), &x, CURVATURE_STEP, CURVATURE_STEP)?;
    let eta = gibbs_form_at(&x);
    let target = &eta * eta.transpose() * (-(2.0 * n as f64 + 2.0)) + gfr_at(&x) * 2.0;
    Ok((ric - target).amax())
}

/// The `(n+1)^2` Killing fields of `G_FR`: the boosts
/// `p_i d/dp_j - q^j d/dq^i` and the translations `d/dw`, `d/dq^i`,
/// `d/dp_i - q^i d/dw`.
pub fn isometry_generators(n: usize) -> Vec<NamedField> {
    let mut out: Vec<NamedField> = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..n {
        for j in 0..n {
            out.push(NamedField {
                name: format!("boost[{},{}]", i + 1, j + 1),
                field: Box::new(move |x: &Vector| {
                    let mut v = Vector::zeros(x.len());
                    v[p_index(n, j)] += x[p_index(n, i)];
                    v[q_index(n, i)] -= x[q_index(n, j)];
                    v
                }),
            });
        }
    }
    out.push(NamedField { name: "translation[w]".into(), field: Box::new(chart::reeb_field()) });
    for i in 0..n {
        out.push(NamedField {
            name: format!("translation[q{}]", i + 1),
            field: Box::new(move |x: &Vector| {
                let mut v = Vector::zeros(x.len());
                v[q_index(n, i)] = 1.0;
                v
            }),
        });
    }
    for i in 0..n {
        out.push(NamedField {
            name: format!("translation[p{}]", i + 1),
            field: Box::new(move |x: &Vector| {
                let mut v = Vector::zeros(x.len());
                v[p_index(n, i)] = 1.0;
                v[W] = -x[q_index(n, i)];
                v
            }),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt1(w: f64, q: f64, p: f64) -> TpsPoint {
        TpsPoint::new(w, &[q], &[p]).unwrap()
    }

    #[test]
    fn gfr_at_p3() {
        let g = gfr(&pt1(0.2, -1.0, 3.0));
        let expect = Matrix::from_row_slice(3, 3, &[1.0, 3.0, 0.0, 3.0, 9.0, -0.5, 0.0, -0.5, 0.0]);
        assert_eq!(g, expect);
        assert!((g.determinant() + 0.25).abs() < 1e-12);
        let xi = chart::reeb(1);
        assert_eq!((xi.transpose() * &g * &xi)[(0, 0)], 1.0);
    }

    #[test]
    fn signatures() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            let x = chart::PointBox::default().sample(&mut rng, n);
            assert_eq!(signature(&x).unwrap(), (n + 1, n));
        }
        assert!(matches!(matrix_signature(&Matrix::zeros(2, 2)), Err(TpsError::DegenerateMetric { .. })));
    }

    #[test]
    fn coframe_is_orthonormal() {
        let x = TpsPoint::new(0.1, &[0.5, -0.3], &[1.7, 0.8]).unwrap();
        let c = Matrix::from_rows(&orthonormal_coframe(&x).unwrap().iter().map(|v| v.transpose()).collect::<Vec<_>>());
        let cinv = c.clone().try_inverse().unwrap();
        let diag = cinv.transpose() * gfr(&x) * cinv;
        let expect = Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 1.0, 1.0, -1.0, -1.0]));
        assert!((diag - expect).amax() < 1e-10);
    }

    #[test]
    fn frame_is_dual_to_coframe() {
        let x = TpsPoint::new(0.1, &[0.5, -0.3], &[1.7, 0.8]).unwrap();
        let e = canonical_basis(&x).unwrap();
        let th = orthonormal_coframe(&x).unwrap();
        for (i, ei) in e.iter().enumerate() {
            for (j, tj) in th.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((tj.dot(ei) - expect).abs() < 1e-12);
            }
        }
        let e1 = canonical_basis(&pt1(0.0, 0.0, 1.0)).unwrap();
        assert!((&e1[1] - Vector::from_column_slice(&[1.0, -1.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn frame_phi_equals_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let x = chart::PointBox::default().sample(&mut rng, n);
            assert!((phi(&x).unwrap() - phi_closed(&x)).amax() < 1e-12);
        }
        assert!(phi(&pt1(0.0, 0.0, -1.0)).is_err());
        assert!(orthonormal_coframe(&pt1(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn phi_eigenvectors_sum_and_difference() {
        // phi maps e+ to -e- and e- to -e+, so e+ + e- has eigenvalue -1
        // and e+ - e- has eigenvalue +1.
        let x = pt1(0.0, 0.3, 1.0);
        let e = canonical_basis(&x).unwrap();
        let f = phi(&x).unwrap();
        let sum = &e[1] + &e[2];
        let diff = &e[1] - &e[2];
        assert!((&f * &sum + &sum).amax() < 1e-12);
        assert!((&f * &diff - &diff).amax() < 1e-12);
    }

    #[test]
    fn zero_phi_breaks_compatibility() {
        let mut b = StructureBundle::fisher_rao(1);
        b.phi = Arc::new(|x| Ok(Matrix::zeros(x.len(), x.len())));
        let x = pt1(0.0, 1.0, 2.0);
        let r = check_structure(&b, std::slice::from_ref(&x), 1e-8);
        let expect = (gfr(&x) - {
            let e = chart::gibbs_form(&x);
            &e * e.transpose()
        })
        .amax();
        assert_eq!(r.max_residual("compatibility"), Some(expect));
        assert!(!r.pass());
    }

    #[test]
    fn killing_fields() {
        let b = StructureBundle::fisher_rao(1);
        let x = pt1(0.4, -0.8, 2.2);
        assert!(killing_residual(&b, &x).unwrap() < 1e-6);
        for f in isometry_generators(1) {
            assert!(killing_residual_of(&b, &f, &x).unwrap() < 1e-6, "{}", f.name);
        }
        assert_eq!(isometry_generators(2).len(), 9);
        let mut warped = StructureBundle::fisher_rao(1);
        warped.metric = Arc::new(|y| Ok(gfr_at(y) * y[0]));
        let r = killing_residual(&warped, &x).unwrap();
        assert!((r - gfr(&x).amax()).abs() < 1e-6);
    }
}
