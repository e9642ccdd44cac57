//! Contact Hamiltonian vector fields, Jacobi brackets and a fixed-step RK4
//! integrator.
//!
//! For `h` on the phase space the field is
//! `X_h = (h - p.h_p) d_w + h_p d_q + (p h_w - h_q) d_p`, so `eta(X_h) = h`.

use std::sync::Arc;

use serde::Serialize;

use crate::calculus::{lie_derivative_covector, lie_derivative_tensor};
use crate::chart::{bracket_step, gibbs_form_at, lie_bracket, p_hat_at, p_index, q_hat_at, q_index, TpsPoint, VectorField, W};
use crate::fields::{dual_field, Field, Jet, Potential, ScalarField, Smooth, SmoothFn};
use crate::legendre::IndexSet;
use crate::metric::gfr_at;
use crate::{Matrix, Result, TpsError, Vector};

/// Trajectories are abandoned once `|x|` exceeds this.
pub const OVERFLOW_GUARD: f64 = 1e12;

pub type ContactHamiltonian = Field;

pub(crate) fn ham_vf_at(h: &dyn ScalarField, x: &Vector) -> Vector {
    let n = (x.len() - 1) / 2;
    let jet = h.jet(x);
    let g = &jet.gradient;
    let mut v = Vector::zeros(x.len());
    v[W] = jet.value;
    for a in 0..n {
        let (qa, pa) = (q_index(n, a), p_index(n, a));
        v[W] -= x[pa] * g[pa];
        v[qa] = g[pa];
        v[pa] = x[pa] * g[W] - g[qa];
    }
    v
}

/// Contact Hamiltonian vector field of `h` at `pt`.
pub fn ham_vf(h: &dyn ScalarField, pt: &TpsPoint) -> Vector {
    ham_vf_at(h, &pt.to_vector())
}

/// The same field assembled as `h xi + Q_i(h) P^i - P^i(h) Q_i`.
pub fn heisenberg_form_vf(h: &dyn ScalarField, pt: &TpsPoint) -> Vector {
    let x = pt.to_vector();
    let n = pt.n();
    let jet = h.jet(&x);
    let mut v = Vector::zeros(x.len());
    v[W] = jet.value;
    for i in 0..n {
        let q_hat = q_hat_at(&x, i);
        let p_hat = p_hat_at(&x, i);
        let q_of_h = q_hat.dot(&jet.gradient);
        let p_of_h = p_hat.dot(&jet.gradient);
        v += p_hat * q_of_h - q_hat * p_of_h;
    }
    v
}

/// `X_h` as a [`VectorField`].
#[derive(Clone)]
pub struct HamiltonianField(pub Field);

impl VectorField for HamiltonianField {
    fn eval(&self, x: &Vector) -> Vector {
        ham_vf_at(self.0.as_ref(), x)
    }
}

/// Jacobi bracket `eta([X_f, X_g])` from a numerical Lie bracket.
pub fn jacobi_bracket(f: &Field, g: &Field, pt: &TpsPoint) -> Result<f64> {
    let xf = HamiltonianField(Arc::clone(f));
    let xg = HamiltonianField(Arc::clone(g));
    let br = lie_bracket(&xf, &xg, pt)?;
    Ok(gibbs_form_at(&pt.to_vector()).dot(&br))
}

/// `max |L_{X_h} eta - xi(h) eta|` at `pt`.
pub fn lie_eta_residual(h: &Field, pt: &TpsPoint) -> Result<f64> {
    let x = pt.to_vector();
    let field = HamiltonianField(Arc::clone(h));
    let lie = lie_derivative_covector(&|y: &Vector| Ok(gibbs_form_at(y)), &field, &x, bracket_step(&x))?;
    let xi_h = h.jet(&x).gradient[W];
    Ok((lie - gibbs_form_at(&x) * xi_h).amax())
}

#[derive(Clone, Copy, Debug)]
enum MrugalaKind {
    Zero,
    Q(usize),
    P(usize),
}

/// One member of the Mrugala families built from a generating function.
struct MrugalaField<S> {
    f: Arc<Smooth<S>>,
    set: IndexSet,
    kind: MrugalaKind,
}

impl<S: SmoothFn> MrugalaField<S> {
    fn base(&self, x: &Vector) -> (Vec<f64>, Vec<usize>) {
        let n = self.f.arity();
        let mut base = Vec::with_capacity(n);
        let mut slot = Vec::with_capacity(n);
        for a in 0..n {
            let k = if self.set.contains(a) { p_index(n, a) } else { q_index(n, a) };
            base.push(x[k]);
            slot.push(k);
        }
        (base, slot)
    }
}

fn nan_jet(dim: usize) -> Jet {
    Jet {
        value: f64::NAN,
        gradient: Vector::from_element(dim, f64::NAN),
        hessian: Matrix::from_element(dim, dim, f64::NAN),
    }
}

impl<S: SmoothFn> ScalarField for MrugalaField<S> {
    fn n(&self) -> usize {
        self.f.arity()
    }

    fn jet(&self, x: &Vector) -> Jet {
        let n = self.f.arity();
        let dim = x.len();
        let (base, slot) = self.base(x);
        let Ok(fj) = self.f.jet(&base) else {
            return nan_jet(dim);
        };
        let third: Vec<Matrix> = (0..n).map(|k| self.f.third(&base, k)).collect();
        let (g, h) = (&fj.gradient, &fj.hessian);
        let mut value;
        let mut grad_base = Vector::zeros(n);
        let mut hess_base = Matrix::zeros(n, n);
        let mut gradient = Vector::zeros(dim);
        match self.kind {
            MrugalaKind::Zero => {
                value = x[W] - fj.value;
                gradient[W] = 1.0;
                for c in 0..n {
                    grad_base[c] = -g[c];
                    for d in 0..n {
                        hess_base[(c, d)] = -h[(c, d)];
                    }
                }
                for &i in self.set.indices() {
                    let pi = base[i];
                    value += pi * g[i];
                    grad_base[i] += g[i];
                    for c in 0..n {
                        grad_base[c] += pi * h[(i, c)];
                        hess_base[(i, c)] += h[(i, c)];
                        hess_base[(c, i)] += h[(c, i)];
                        for d in 0..n {
                            hess_base[(c, d)] += pi * third[i][(c, d)];
                        }
                    }
                }
            }
            MrugalaKind::Q(i) => {
                value = x[q_index(n, i)] - g[i];
                gradient[q_index(n, i)] = 1.0;
                for c in 0..n {
                    grad_base[c] = -h[(i, c)];
                }
                hess_base = -&third[i];
            }
            MrugalaKind::P(j) => {
                value = x[p_index(n, j)] + g[j];
                gradient[p_index(n, j)] = 1.0;
                for c in 0..n {
                    grad_base[c] = h[(j, c)];
                }
                hess_base = third[j].clone();
            }
        }
        let mut hessian = Matrix::zeros(dim, dim);
        for c in 0..n {
            gradient[slot[c]] += grad_base[c];
            for d in 0..n {
                hessian[(slot[c], slot[d])] = hess_base[(c, d)];
            }
        }
        Jet { value, gradient, hessian }
    }
}

/// Hamiltonians vanishing on the Legendre submanifold generated by `f`.
pub struct MrugalaHamiltonians {
    /// `w - f + p_i df/dp_i`.
    pub h0: Field,
    /// `(i, q^i - df/dp_i)` for `i` in the index set.
    pub q_family: Vec<(usize, Field)>,
    /// `(j, p_j + df/dq^j)` for `j` outside it.
    pub p_family: Vec<(usize, Field)>,
}

impl MrugalaHamiltonians {
    pub fn all(&self) -> Vec<Field> {
        std::iter::once(Arc::clone(&self.h0))
            .chain(self.q_family.iter().map(|(_, f)| Arc::clone(f)))
            .chain(self.p_family.iter().map(|(_, f)| Arc::clone(f)))
            .collect()
    }
}

/// Builds the three families for `f(p_I, q_J)`.
pub fn mrugala_hamiltonians<S: SmoothFn>(f: S, set: &IndexSet) -> Result<MrugalaHamiltonians> {
    let n = f.arity();
    if set.indices().iter().any(|i| *i >= n) {
        return Err(TpsError::InvalidInput(format!("index set {:?} out of range for n = {n}", set.indices())));
    }
    let f = Arc::new(Smooth(f));
    let make = |kind| -> Field { Arc::new(MrugalaField { f: Arc::clone(&f), set: set.clone(), kind }) };
    Ok(MrugalaHamiltonians {
        h0: make(MrugalaKind::Zero),
        q_family: set.indices().iter().map(|&i| (i, make(MrugalaKind::Q(i)))).collect(),
        p_family: set.complement(n).into_iter().map(|j| (j, make(MrugalaKind::P(j)))).collect(),
    })
}

/// `1/2 sum (q^a)^2 + (p_a)^2`, the generator of infinitesimal Legendre maps.
pub fn lt_generator(n: usize) -> Field {
    dual_field(n, move |x| {
        let mut acc = x[0].clone() * 0.0;
        for a in 0..n {
            let (q, p) = (&x[q_index(n, a)], &x[p_index(n, a)]);
            acc += q.clone() * q.clone() + p.clone() * p.clone();
        }
        acc * 0.5
    })
}

/// Numerical Lie derivative of the Fisher-Rao metric along the field of
/// `h_LT`, compared against `+-sum(dq (x) dq - dp (x) dp)`.
#[derive(Debug, Clone, Serialize)]
pub struct LtMetricReport {
    pub lie_derivative: Matrix,
    /// `max |L G - sum(dq dq - dp dp)|`.
    pub residual_plus: f64,
    /// `max |L G + sum(dq dq - dp dp)|`.
    pub residual_minus: f64,
}

pub fn lt_metric_lie_derivative(pt: &TpsPoint) -> Result<LtMetricReport> {
    let n = pt.n();
    let x = pt.to_vector();
    let field = HamiltonianField(lt_generator(n));
    let lie = lie_derivative_tensor(&|y: &Vector| Ok(gfr_at(y)), &field, &x, bracket_step(&x))?;
    let mut pattern = Matrix::zeros(x.len(), x.len());
    for a in 0..n {
        pattern[(q_index(n, a), q_index(n, a))] = 1.0;
        pattern[(p_index(n, a), p_index(n, a))] = -1.0;
    }
    Ok(LtMetricReport {
        residual_plus: (&lie - &pattern).amax(),
        residual_minus: (&lie + &pattern).amax(),
        lie_derivative: lie,
    })
}

/// Sampled integral curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub points: Vec<TpsPoint>,
    /// Hamiltonian recorded at each sample.
    pub h: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<&TpsPoint> {
        self.points.last()
    }
}

fn rk4_step(field: &dyn VectorField, x: &Vector, dt: f64) -> Vector {
    let k1 = field.eval(x);
    let k2 = field.eval(&(x + &k1 * (0.5 * dt)));
    let k3 = field.eval(&(x + &k2 * (0.5 * dt)));
    let k4 = field.eval(&(x + &k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Integrates `X_h` from `x0` to `t_f` with classical RK4. The step is `dt`
/// shrunk so that a whole number of steps lands on `t_f`.
pub fn integrate(h: &Field, x0: &TpsPoint, t_f: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(TpsError::InvalidInput(format!("step must be positive, got {dt}")));
    }
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(TpsError::InvalidInput(format!("final time must be positive, got {t_f}")));
    }
    let steps = ((t_f / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let step = t_f / steps as f64;
    let field = HamiltonianField(Arc::clone(h));
    let mut x = x0.to_vector();
    let mut traj = Trajectory { t: vec![0.0], points: vec![x0.clone()], h: vec![h.value(&x)] };
    for k in 1..=steps {
        x = rk4_step(&field, &x, step);
        let t = if k == steps { t_f } else { k as f64 * step };
        if x.iter().any(|c| !c.is_finite()) || x.norm() > OVERFLOW_GUARD {
            return Err(TpsError::Divergence { t, partial: Box::new(traj) });
        }
        traj.t.push(t);
        traj.h.push(h.value(&x));
        traj.points.push(TpsPoint::from_vector(&x)?);
    }
    Ok(traj)
}

/// Ratio `|x_dt - x_{dt/2}| / |x_{dt/2} - x_{dt/4}|` of end points; about 16
/// for a fourth-order scheme.
pub fn step_halving_ratio(h: &Field, x0: &TpsPoint, t_f: f64, dt: f64) -> Result<f64> {
    let end = |d: f64| -> Result<Vector> {
        let traj = integrate(h, x0, t_f, d)?;
        Ok(traj.last().expect("trajectory has at least two samples").to_vector())
    };
    let (a, b, c) = (end(dt)?, end(dt / 2.0)?, end(dt / 4.0)?);
    Ok((a - &b).norm() / (b - c).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_dual::DualNum;
    use crate::fields::{analytic_field, constant_field, Quadratic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coord(n: usize, k: usize) -> Field {
        dual_field(n, move |x| x[k].clone())
    }

    #[test]
    fn basic_fields() {
        let pt = TpsPoint::new(2.0, &[1.0], &[5.0]).unwrap();
        assert_eq!(ham_vf(constant_field(1, 1.0).as_ref(), &pt).as_slice(), &[1.0, 0.0, 0.0]);
        let neg_w = dual_field(1, |x| -x[0].clone());
        assert_eq!(ham_vf(neg_w.as_ref(), &pt).as_slice(), &[-2.0, 0.0, -5.0]);
        // h = q: q d_w - d_p
        assert_eq!(ham_vf(coord(1, 1).as_ref(), &pt).as_slice(), &[1.0, 0.0, -1.0]);
        // h = w: w xi + p P
        assert_eq!(ham_vf(coord(1, 0).as_ref(), &pt).as_slice(), &[2.0, 0.0, 5.0]);
    }

    #[test]
    fn heisenberg_form_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = dual_field(2, |x| x[0].clone() * x[1].clone().sin() + x[3].clone() * x[4].clone() * x[2].clone());
        for pt in crate::chart::PointBox::default().sample_many(&mut rng, 2, 20) {
            let a = ham_vf(h.as_ref(), &pt);
            let b = heisenberg_form_vf(h.as_ref(), &pt);
            assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn bracket_of_canonical_pair() {
        let pt = TpsPoint::new(0.3, &[1.2], &[-0.7]).unwrap();
        let b = jacobi_bracket(&coord(1, 1), &coord(1, 2), &pt).unwrap();
        assert!((b + 1.0).abs() < 1e-6);
        let f = coord(1, 1);
        assert!(jacobi_bracket(&f, &f, &pt).unwrap().abs() < 1e-9);
    }

    #[test]
    fn lie_eta_for_homothety() {
        let pt = TpsPoint::new(0.3, &[1.2, 0.1], &[-0.7, 2.0]).unwrap();
        let neg_w = dual_field(2, |x| -x[0].clone());
        assert!(lie_eta_residual(&neg_w, &pt).unwrap() < 1e-6);
        assert!(lie_eta_residual(&lt_generator(2), &pt).unwrap() < 1e-6);
    }

    #[test]
    fn lt_generator_value_and_field() {
        let pt = TpsPoint::new(0.0, &[3.0], &[4.0]).unwrap();
        let h = lt_generator(1);
        assert_eq!(h.value(&pt.to_vector()), 12.5);
        assert_eq!(ham_vf(h.as_ref(), &pt).as_slice(), &[-3.5, 4.0, -3.0]);
    }

    #[test]
    fn mrugala_zero_on_surface_and_offset() {
        let f = Quadratic { curvature: vec![1.0, 2.0] };
        let set = IndexSet::new(2, &[1]).unwrap();
        let fams = mrugala_hamiltonians(f.clone(), &set).unwrap();
        let spec = crate::legendre::LegendreSpec::new(set, Smooth::shared(f)).unwrap();
        let pt = crate::legendre::embed(&spec, &[0.4, -0.3]).unwrap();
        for h in fams.all() {
            assert!(h.value(&pt.to_vector()).abs() < 1e-14);
        }
        let mut off = pt.to_vector();
        off[0] += 0.25;
        assert!((fams.h0.value(&off) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mrugala_jets_match_finite_differences() {
        struct Cubicish;
        impl SmoothFn for Cubicish {
            fn arity(&self) -> usize {
                2
            }
            fn eval<D: num_dual::DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
                x[0].clone().powi(3) * x[1].clone() + x[1].clone().exp()
            }
        }
        let fams = mrugala_hamiltonians(Cubicish, &IndexSet::new(2, &[0]).unwrap()).unwrap();
        let x = Vector::from_column_slice(&[0.2, 0.5, -0.4, 0.7, 0.3]);
        for h in fams.all() {
            let jet = h.jet(&x);
            for k in 0..5 {
                let mut e = Vector::zeros(5);
                e[k] = 1e-5;
                let dv = (h.value(&(&x + &e)) - h.value(&(&x - &e))) / 2e-5;
                assert!((dv - jet.gradient[k]).abs() < 1e-7);
                let dg = (h.gradient(&(&x + &e)) - h.gradient(&(&x - &e))) / 2e-5;
                assert!((dg - jet.hessian.column(k)).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn reeb_flow_and_fourth_order() {
        let x0 = TpsPoint::new(0.0, &[0.5], &[1.5]).unwrap();
        let traj = integrate(&constant_field(1, 1.0), &x0, 2.0, 0.1).unwrap();
        let end = traj.last().unwrap();
        assert!((end.w() - 2.0).abs() < 1e-14);
        assert_eq!(end.q(), &[0.5]);
        let h = analytic_field(1, |x| {
            let v = x[1] * x[1] * x[2] + x[0].sin();
            Jet {
                value: v,
                gradient: Vector::from_column_slice(&[x[0].cos(), 2.0 * x[1] * x[2], x[1] * x[1]]),
                hessian: Matrix::from_row_slice(3, 3, &[-x[0].sin(), 0.0, 0.0, 0.0, 2.0 * x[2], 2.0 * x[1], 0.0, 2.0 * x[1], 0.0]),
            }
        });
        let ratio = step_halving_ratio(&h, &TpsPoint::new(0.1, &[0.6], &[0.3]).unwrap(), 1.0, 0.05).unwrap();
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn divergence_is_reported() {
        let blow = dual_field(1, |x| x[0].clone() * x[0].clone());
        let err = integrate(&blow, &TpsPoint::new(1.0, &[0.0], &[0.0]).unwrap(), 10.0, 0.01).unwrap_err();
        match err {
            TpsError::Divergence { partial, .. } => assert!(partial.len() >= 2),
            e => panic!("unexpected {e}"),
        }
    }
}
