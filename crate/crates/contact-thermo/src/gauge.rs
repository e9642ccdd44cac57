//! Gauge transformations `eta -> Omega eta` of the full para-contact metric
//! structure, and the energy-to-entropy representation change.

use std::sync::Arc;

use serde::Serialize;

use crate::chart::{p_index, q_index, TpsPoint, W};
use crate::fields::{Field, Potential, ScalarField};
use crate::metric::{self, StructureBundle};
use crate::{Matrix, Result, TpsError, Vector};

/// Gauge factors smaller than this in magnitude are rejected.
pub const GAUGE_TOL: f64 = 1e-12;

/// Temperatures at or below this are skipped by the representation demo.
pub const T_MIN: f64 = 1e-3;

struct Pieces {
    omega: f64,
    domega: Vector,
    eta: Vector,
    deta: Matrix,
    xi: Vector,
    phi: Matrix,
    g: Matrix,
    /// `G^{-1}(d Omega, .)`
    raised: Vector,
    zeta: Vector,
}

fn pieces(b: &StructureBundle, omega: &dyn ScalarField, x: &Vector) -> Result<Pieces> {
    let jet = omega.jet(x);
    if !jet.value.is_finite() || jet.value.abs() < GAUGE_TOL {
        return Err(TpsError::GaugeSingular { omega: jet.value });
    }
    let g = (b.metric)(x)?;
    let raised = g
        .clone()
        .lu()
        .solve(&jet.gradient)
        .ok_or(TpsError::DegenerateMetric { eigenvalue: 0.0 })?;
    let phi = (b.phi)(x)?;
    let zeta = &phi * &raised * (-0.5 / jet.value);
    Ok(Pieces {
        omega: jet.value,
        domega: jet.gradient,
        eta: (b.eta)(x)?,
        deta: (b.deta)(x)?,
        xi: (b.reeb)(x)?,
        phi,
        g,
        raised,
        zeta,
    })
}

/// Gauge transform of `bundle` by the factor `omega`:
///
/// - `eta~ = Omega eta`
/// - `xi~ = (xi + zeta) / Omega` with `zeta = -phi(G^{-1}(d Omega, .)) / (2 Omega)`
/// - `phi~(X) = phi(X) + eta(X) [G^{-1}(d Omega, .) - xi(Omega) xi] / (2 Omega)`
/// - `G~ = Omega (G - eta (x) z - z (x) eta) + Omega (Omega - 1 + |zeta|^2) eta (x) eta`
///   with `z = G(zeta, .)` and `|zeta|^2 = G(zeta, zeta)`.
///
/// The returned evaluators fail with [`TpsError::GaugeSingular`] where
/// `|Omega| < 1e-12`.
pub fn gauge_transform(bundle: &StructureBundle, omega: Field) -> Result<StructureBundle> {
    if omega.n() != bundle.n {
        return Err(TpsError::DimensionMismatch { expected: bundle.n, got: omega.n() });
    }
    let base = Arc::new(bundle.clone());
    let make = |base: &Arc<StructureBundle>, omega: &Field| (Arc::clone(base), Arc::clone(omega));

    let (b, om) = make(&base, &omega);
    let eta = Arc::new(move |x: &Vector| {
        let p = pieces(&b, om.as_ref(), x)?;
        Ok(p.eta * p.omega)
    });
    let (b, om) = make(&base, &omega);
    let deta = Arc::new(move |x: &Vector| {
        let p = pieces(&b, om.as_ref(), x)?;
        Ok(&p.domega * p.eta.transpose() - &p.eta * p.domega.transpose() + p.deta * p.omega)
    });
    let (b, om) = make(&base, &omega);
    let reeb = Arc::new(move |x: &Vector| {
        let p = pieces(&b, om.as_ref(), x)?;
        Ok((p.xi + p.zeta) / p.omega)
    });
    let (b, om) = make(&base, &omega);
    let phi = Arc::new(move |x: &Vector| {
        let p = pieces(&b, om.as_ref(), x)?;
        let xi_omega = p.domega.dot(&p.xi);
        let column = (&p.raised - &p.xi * xi_omega) / (2.0 * p.omega);
        Ok(p.phi + column * p.eta.transpose())
    });
    let (b, om) = make(&base, &omega);
    let metric = Arc::new(move |x: &Vector| {
        let p = pieces(&b, om.as_ref(), x)?;
        let z = &p.g * &p.zeta;
        let zeta_sq = p.zeta.dot(&z);
        let ee = &p.eta * p.eta.transpose();
        let cross = &p.eta * z.transpose() + &z * p.eta.transpose();
        Ok((&p.g - cross) * p.omega + ee * (p.omega * (p.omega - 1.0 + zeta_sq)))
    });
    Ok(StructureBundle { n: bundle.n, eta, deta, reeb, phi, metric })
}

/// Per-point outcome of the representation-change demo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeDemoPoint {
    pub s: f64,
    pub v: f64,
    pub t: f64,
    /// `max |g^S + g^U / T|` on the equilibrium surface.
    pub conformal_residual: f64,
    /// `max |g^S_ij / g^U_ij + 1/T|` over entries with `|g^U_ij| > 1e-12`.
    pub ratio_max_deviation: f64,
    /// `max |xi^S - d/dS|`.
    pub reeb_residual: f64,
    /// `max |G^S - G^S_closed|` against the closed entropy-representation metric.
    pub closed_form_residual: f64,
    /// Worst para-contact identity residual of the transformed bundle.
    pub structure_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeDemoReport {
    pub points: Vec<GaugeDemoPoint>,
    /// Grid points skipped because `0 < T <= T_MIN`.
    pub skipped: usize,
}

impl GaugeDemoReport {
    pub fn max_of(&self, f: impl Fn(&GaugeDemoPoint) -> f64) -> f64 {
        self.points.iter().map(f).fold(0.0, f64::max)
    }

    /// Largest of all residual columns.
    pub fn worst(&self) -> f64 {
        self.max_of(|p| {
            p.conformal_residual
                .max(p.reeb_residual)
                .max(p.closed_form_residual)
                .max(p.structure_residual)
        })
    }
}

/// The gauge factor `Omega = -1/T = 1/p_1` of the energy chart with
/// `{w, q1, q2, p1, p2} = {U, S, V, -T, p}`.
pub fn inverse_temperature_gauge() -> Field {
    crate::fields::dual_field(2, |x| num_dual::DualNum::recip(&x[3]))
}

fn sym(a: &Vector, b: &Vector) -> Matrix {
    (a * b.transpose() + b * a.transpose()) * 0.5
}

/// Closed form `eta^S (x) eta^S + dU (.) d(1/T) + dV (.) d(p/T)` in energy-chart
/// coordinates.
pub fn entropy_metric_closed(x: &Vector) -> Matrix {
    let (p1, p2) = (x[p_index(2, 0)], x[p_index(2, 1)]);
    let eta_s = crate::chart::gibbs_form_at(x) / p1;
    let unit = |k: usize| {
        let mut e = Vector::zeros(5);
        e[k] = 1.0;
        e
    };
    let d_inv_t = unit(p_index(2, 0)) / (p1 * p1);
    let d_p_over_t = unit(p_index(2, 1)) * (-1.0 / p1) + unit(p_index(2, 0)) * (p2 / (p1 * p1));
    &eta_s * eta_s.transpose() + sym(&unit(W), &d_inv_t) + sym(&unit(q_index(2, 1)), &d_p_over_t)
}

/// Energy-to-entropy representation change on an equilibrium surface
/// `U(S, V)`: applies the gauge `Omega = -1/T` to the Fisher-Rao structure and
/// compares the induced metrics at each `(S, V)` in `grid`.
pub fn representation_change_demo(energy: &dyn Potential, grid: &[(f64, f64)]) -> Result<GaugeDemoReport> {
    if energy.arity() != 2 {
        return Err(TpsError::DimensionMismatch { expected: 2, got: energy.arity() });
    }
    let base = StructureBundle::fisher_rao(2);
    let entropy = gauge_transform(&base, inverse_temperature_gauge())?;
    let mut points = Vec::with_capacity(grid.len());
    let mut skipped = 0;
    for &(s, v) in grid {
        let jet = energy.jet(&[s, v])?;
        let t = jet.gradient[0];
        let pressure = -jet.gradient[1];
        if t <= 0.0 {
            return Err(TpsError::Domain(format!("temperature {t} <= 0 at (S, V) = ({s}, {v})")));
        }
        if t <= T_MIN {
            skipped += 1;
            continue;
        }
        let pt = TpsPoint::new(jet.value, &[s, v], &[-t, pressure])?;
        let x = pt.to_vector();
        let h = &jet.hessian;
        let mut jac = Matrix::zeros(5, 2);
        jac[(W, 0)] = t;
        jac[(W, 1)] = -pressure;
        jac[(q_index(2, 0), 0)] = 1.0;
        jac[(q_index(2, 1), 1)] = 1.0;
        for r in 0..2 {
            for c in 0..2 {
                jac[(p_index(2, r), c)] = -h[(r, c)];
            }
        }
        let g_u = jac.transpose() * metric::gfr(&pt) * &jac;
        let big_s = entropy.metric_at(&pt)?;
        let g_s = jac.transpose() * &big_s * &jac;
        let conformal_residual = (&g_s + &g_u / t).amax();
        let ratio_max_deviation = g_u
            .iter()
            .zip(g_s.iter())
            .filter(|(u, _)| u.abs() > 1e-12)
            .map(|(u, s)| (s / u + 1.0 / t).abs())
            .fold(0.0, f64::max);
        let mut d_s = Vector::zeros(5);
        d_s[q_index(2, 0)] = 1.0;
        let reeb_residual = (entropy.reeb_at(&pt)? - d_s).amax();
        let closed_form_residual = (big_s - entropy_metric_closed(&x)).amax();
        let r = metric::identity_residuals(&entropy, &pt)?;
        let structure_residual = [r.reeb_normalization, r.reeb_kernel, r.phi_reeb, r.phi_square, r.compatibility, r.associated]
            .into_iter()
            .fold(0.0, f64::max);
        points.push(GaugeDemoPoint {
            s,
            v,
            t,
            conformal_residual,
            ratio_max_deviation,
            reeb_residual,
            closed_form_residual,
            structure_residual,
        });
    }
    Ok(GaugeDemoReport { points, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_dual::DualNum;
    use crate::fields::{constant_field, dual_field, Reciprocal};
    use crate::metric::check_structure;

    fn sample() -> Vec<TpsPoint> {
        vec![
            TpsPoint::new(0.3, &[0.7, -0.4], &[1.2, 0.8]).unwrap(),
            TpsPoint::new(-1.1, &[0.2, 1.4], &[2.5, 0.6]).unwrap(),
        ]
    }

    fn close(a: &StructureBundle, b: &StructureBundle, pt: &TpsPoint) -> f64 {
        [
            (a.eta_at(pt).unwrap() - b.eta_at(pt).unwrap()).amax(),
            (a.reeb_at(pt).unwrap() - b.reeb_at(pt).unwrap()).amax(),
            (a.phi_at(pt).unwrap() - b.phi_at(pt).unwrap()).amax(),
            (a.metric_at(pt).unwrap() - b.metric_at(pt).unwrap()).amax(),
            (a.deta_at(pt).unwrap() - b.deta_at(pt).unwrap()).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    #[test]
    fn unit_gauge_is_identity() {
        let b = StructureBundle::fisher_rao(2);
        let t = gauge_transform(&b, constant_field(2, 1.0)).unwrap();
        for pt in sample() {
            assert!(close(&b, &t, &pt) < 1e-15);
        }
    }

    #[test]
    fn constant_gauge_is_d_homothetic() {
        let c = 2.5;
        let b = StructureBundle::fisher_rao(2);
        let t = gauge_transform(&b, constant_field(2, c)).unwrap();
        for pt in sample() {
            let e = b.eta_at(&pt).unwrap();
            let expect = b.metric_at(&pt).unwrap() * c + &e * e.transpose() * (c * (c - 1.0));
            assert!((t.metric_at(&pt).unwrap() - expect).amax() < 1e-13);
            assert!((t.reeb_at(&pt).unwrap() - b.reeb_at(&pt).unwrap() / c).amax() < 1e-15);
        }
    }

    #[test]
    fn general_gauge_keeps_structure() {
        let b = StructureBundle::fisher_rao(2);
        let omega = dual_field(2, |x| x[0].clone().sin() * 0.2 + x[1].clone() * x[1].clone() * 0.1 + x[3].clone() * x[4].clone() * 0.3 + 1.3);
        let t = gauge_transform(&b, omega.clone()).unwrap();
        let rep = check_structure(&t, &sample(), 1e-8);
        assert!(rep.pass(), "{rep:?}");
        let back = gauge_transform(&t, Arc::new(Reciprocal(omega))).unwrap();
        for pt in sample() {
            assert!(close(&b, &back, &pt) < 1e-8);
        }
    }

    #[test]
    fn singular_gauge_is_rejected() {
        let b = StructureBundle::fisher_rao(1);
        let t = gauge_transform(&b, dual_field(1, |x| x[0].clone())).unwrap();
        let pt = TpsPoint::new(0.0, &[1.0], &[1.0]).unwrap();
        assert!(matches!(t.metric_at(&pt), Err(TpsError::GaugeSingular { .. })));
        assert!(gauge_transform(&b, constant_field(2, 1.0)).is_err());
    }

    #[test]
    fn inverse_temperature_gauge_gives_entropy_reeb() {
        let b = StructureBundle::fisher_rao(2);
        let t = gauge_transform(&b, inverse_temperature_gauge()).unwrap();
        let pt = TpsPoint::new(1.0, &[0.5, 2.0], &[-0.7, 0.4]).unwrap();
        let xi = t.reeb_at(&pt).unwrap();
        assert!((xi - Vector::from_column_slice(&[0.0, 1.0, 0.0, 0.0, 0.0])).amax() < 1e-14);
        assert!((t.metric_at(&pt).unwrap() - entropy_metric_closed(&pt.to_vector())).amax() < 1e-13);
    }
}
