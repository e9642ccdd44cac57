//! The thermodynamic Hamiltonian `H = -w`: its flow, orbit classes,
//! integrability and the arc-length entropy production.
//!
//! `H` is evaluated in the all-extensive chart, where `w` is the potential of
//! the ensemble with every intensive variable fixed and vanishes on the
//! equilibrium states of homogeneous systems.

use nalgebra::SVD;
use serde::Serialize;

use crate::chart::{q_index, TpsPoint, W};
use crate::dynamics::{ham_vf, integrate, jacobi_bracket};
use crate::fields::{constant_field, dual_field, Field, Potential};
use crate::metric::gfr;
use crate::{Matrix, Result, TpsError, Vector};

/// Default tolerance separating equilibrium orbits from fluctuations.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// Simpson panels used by [`entropy_production`].
pub const SIMPSON_PANELS: usize = 10_000;

/// Horizon standing in for `t_f -> infinity`.
pub const LONG_TIME: f64 = 50.0;

pub fn thermo_hamiltonian(pt: &TpsPoint) -> f64 {
    -pt.w()
}

/// `H = -w` as a phase-space field in `n` degrees of freedom.
pub fn thermo_hamiltonian_field(n: usize) -> Field {
    dual_field(n, |x| -x[W].clone())
}

/// Exact flow of `H`: `w` and `p` decay as `e^{-t}`, `q` is fixed.
pub fn analytic_flow(x0: &TpsPoint, t: f64) -> Result<TpsPoint> {
    if !(t >= 0.0) {
        return Err(TpsError::InvalidInput(format!("flow time must be nonnegative, got {t}")));
    }
    let decay = (-t).exp();
    let p: Vec<f64> = x0.p().iter().map(|p| p * decay).collect();
    TpsPoint::new(x0.w() * decay, x0.q(), &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitKind {
    Equilibrium,
    #[serde(rename = "admissible")]
    AdmissibleFluctuation,
    Inadmissible,
}

impl std::fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OrbitKind::Equilibrium => "equilibrium",
            OrbitKind::AdmissibleFluctuation => "admissible",
            OrbitKind::Inadmissible => "inadmissible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitClass {
    pub kind: OrbitKind,
    pub h0: f64,
    pub tol: f64,
}

pub fn classify(x0: &TpsPoint, tol: f64) -> Result<OrbitClass> {
    if !(tol > 0.0) {
        return Err(TpsError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let h0 = thermo_hamiltonian(x0);
    let kind = if h0.abs() <= tol {
        OrbitKind::Equilibrium
    } else if h0 > 0.0 {
        OrbitKind::AdmissibleFluctuation
    } else {
        OrbitKind::Inadmissible
    };
    Ok(OrbitClass { kind, h0, tol })
}

/// `|G(X_H, X_H) - H^2|` at `pt`.
pub fn norm_identity_check(pt: &TpsPoint) -> f64 {
    let h = thermo_hamiltonian_field(pt.n());
    let x = ham_vf(h.as_ref(), pt);
    let norm2 = x.dot(&(gfr(pt) * &x));
    (norm2 - thermo_hamiltonian(pt).powi(2)).abs()
}

/// Speed `sqrt(G(X_H, X_H))` of the flow at `pt`.
fn speed(h: &Field, pt: &TpsPoint) -> f64 {
    let x = ham_vf(h.as_ref(), pt);
    x.dot(&(gfr(pt) * &x)).max(0.0).sqrt()
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    // compensated sum keeps the long-horizon value at rounding level
    let (mut sum, mut comp) = (f(a) + f(b), 0.0);
    for k in 1..panels {
        let term = f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyProduction {
    /// Arc length of the flow on `[0, t_f]`, negated for inadmissible orbits.
    pub value: f64,
    /// `H0 (1 - e^{-t_f})`.
    pub closed_form: f64,
    pub class: OrbitClass,
}

impl EntropyProduction {
    /// Meaningful only for orbits that are not inadmissible.
    pub fn admissible(&self) -> bool {
        self.class.kind != OrbitKind::Inadmissible
    }
}

/// Signed arc length of the `H` flow from `x0` over `[0, t_f]` by composite
/// Simpson on the analytic flow, refined by one Richardson step.
pub fn entropy_production(x0: &TpsPoint, t_f: f64) -> Result<EntropyProduction> {
    if !(t_f >= 0.0 && t_f.is_finite()) {
        return Err(TpsError::InvalidInput(format!("final time must be finite and nonnegative, got {t_f}")));
    }
    let class = classify(x0, EQUILIBRIUM_TOL)?;
    let h = thermo_hamiltonian_field(x0.n());
    let integrand = |t: f64| speed(&h, &analytic_flow(x0, t).expect("t is nonnegative"));
    let value = if t_f == 0.0 {
        0.0
    } else {
        let coarse = simpson(integrand, 0.0, t_f, SIMPSON_PANELS);
        let fine = simpson(integrand, 0.0, t_f, 2 * SIMPSON_PANELS);
        fine + (fine - coarse) / 15.0
    };
    // arc length is |H|-weighted; an inadmissible orbit produces negative entropy
    let value = if class.kind == OrbitKind::Inadmissible { -value } else { value };
    Ok(EntropyProduction { value, closed_form: class.h0 * -(-t_f).exp_m1(), class })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    /// Largest change of any `q^a` along the integrated orbit.
    pub q_drift_max: f64,
    /// Largest `|{q^a, q^b}|` at the sampled points.
    pub involution_max: f64,
    /// Rank of `{X_1, X_{q^1}, .., X_{q^n}}` at the initial point.
    pub rank: usize,
    /// Largest relative deviation of `H` along the orbit from `H0 e^{-t}`.
    pub decay_residual: f64,
}

/// Integrates the `H` flow with RK4 at step `dt` and checks the first
/// integrals `q^a` and `1`.
pub fn integrability_report(x0: &TpsPoint, t_f: f64, dt: f64) -> Result<IntegrabilityReport> {
    let n = x0.n();
    let h = thermo_hamiltonian_field(n);
    let traj = integrate(&h, x0, t_f, dt)?;
    let q_drift_max = traj
        .points
        .iter()
        .flat_map(|pt| pt.q().iter().zip(x0.q()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let h0 = thermo_hamiltonian(x0);
    let decay_residual = traj
        .t
        .iter()
        .zip(&traj.h)
        .map(|(t, v)| {
            let exact = h0 * (-t).exp();
            (v - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)
        })
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);
    let coords: Vec<Field> = (0..n).map(|a| coordinate(n, q_index(n, a))).collect();
    let stride = (traj.len() / 5).max(1);
    let mut involution_max: f64 = 0.0;
    for pt in traj.points.iter().step_by(stride) {
        for a in 0..n {
            for b in (a + 1)..n {
                involution_max = involution_max.max(jacobi_bracket(&coords[a], &coords[b], pt)?.abs());
            }
        }
    }
    let mut fields = vec![ham_vf(constant_field(n, 1.0).as_ref(), x0)];
    fields.extend(coords.iter().map(|c| ham_vf(c.as_ref(), x0)));
    let m = Matrix::from_columns(&fields);
    let svd = SVD::new(m, false, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count();
    Ok(IntegrabilityReport { q_drift_max, involution_max, rank, decay_residual })
}

fn coordinate(n: usize, k: usize) -> Field {
    dual_field(n, move |x| x[k].clone())
}

/// `-1/2 dx^T g dx`, the second-order entropy deficit of a displacement.
pub fn fluctuation_entropy_link(g_hessian: &Matrix, dx: &Vector) -> Result<f64> {
    if g_hessian.nrows() != dx.len() || g_hessian.ncols() != dx.len() {
        return Err(TpsError::DimensionMismatch { expected: g_hessian.nrows(), got: dx.len() });
    }
    Ok(-0.5 * dx.dot(&(g_hessian * dx)))
}

/// `H` at the phase-space point that keeps the intensive variables of the
/// equilibrium state `q0` of `entropy` but moves the extensive ones to
/// `q0 + dx`.
pub fn displaced_hamiltonian(entropy: &dyn Potential, q0: &[f64], dx: &[f64]) -> Result<f64> {
    if dx.len() != q0.len() {
        return Err(TpsError::DimensionMismatch { expected: q0.len(), got: dx.len() });
    }
    let p0 = -entropy.jet(q0)?.gradient;
    let q: Vec<f64> = q0.iter().zip(dx).map(|(a, b)| a + b).collect();
    let s = entropy.jet(&q)?.value;
    let pt = TpsPoint::new(s + p0.iter().zip(&q).map(|(p, q)| p * q).sum::<f64>(), &q, p0.as_slice())?;
    Ok(thermo_hamiltonian(&pt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(w: f64, q: &[f64], p: &[f64]) -> TpsPoint {
        TpsPoint::new(w, q, p).unwrap()
    }

    #[test]
    fn hamiltonian_values() {
        assert_eq!(thermo_hamiltonian(&pt(0.5, &[1.0], &[1.0])), -0.5);
        assert_eq!(thermo_hamiltonian(&pt(-1.0, &[1.0], &[1.0])), 1.0);
        assert_eq!(thermo_hamiltonian(&pt(0.0, &[1.0], &[1.0])), 0.0);
    }

    #[test]
    fn flow_halves_at_ln2() {
        let x0 = pt(-0.5, &[2.0], &[3.0]);
        let x = analytic_flow(&x0, std::f64::consts::LN_2).unwrap();
        assert!((thermo_hamiltonian(&x) - 0.25).abs() < 1e-15);
        assert_eq!(analytic_flow(&x0, 0.0).unwrap(), x0);
        assert!(analytic_flow(&x0, -1.0).is_err());
    }

    #[test]
    fn classification() {
        let kind = |w| classify(&pt(w, &[1.0], &[1.0]), 1e-10).unwrap().kind;
        assert_eq!(kind(0.0), OrbitKind::Equilibrium);
        assert_eq!(kind(-1.0), OrbitKind::AdmissibleFluctuation);
        assert_eq!(kind(1.0), OrbitKind::Inadmissible);
        assert!(classify(&pt(0.0, &[1.0], &[1.0]), 0.0).is_err());
    }

    #[test]
    fn norm_identity() {
        assert!(norm_identity_check(&pt(2.0, &[1.0], &[5.0])) < 1e-12);
        assert_eq!(norm_identity_check(&pt(0.0, &[1.0], &[5.0])), 0.0);
    }

    #[test]
    fn entropy_production_closed_forms() {
        let e = entropy_production(&pt(-2.0, &[0.0], &[1.0]), std::f64::consts::LN_2).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let eq = entropy_production(&pt(0.0, &[0.0], &[1.0]), 10.0).unwrap();
        assert_eq!(eq.value, 0.0);
        let bad = entropy_production(&pt(1.0, &[0.0], &[1.0]), 1.0).unwrap();
        assert!(!bad.admissible() && (bad.value - bad.closed_form).abs() < 1e-12 && bad.value < 0.0);
    }

    #[test]
    fn fluctuation_link_basic() {
        let g = Matrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -1.0]);
        assert_eq!(fluctuation_entropy_link(&g, &Vector::zeros(2)).unwrap(), 0.0);
        assert_eq!(fluctuation_entropy_link(&g, &Vector::from_column_slice(&[1.0, 1.0])).unwrap(), 1.5);
    }
}
