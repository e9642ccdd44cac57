//! Ideal gas and van der Waals fluid: fundamental relations, homogeneity
//! checks, critical point, spinodal, Maxwell construction and ensemble
//! potentials.
//!
//! Sign convention on the phase space: the entropy representation uses
//! `w = S`, `q = (U, V, N)` and `p = -(dS/dq) = (-beta, -beta P, beta mu)`.

use std::sync::Arc;

use num_dual::DualNum;
use rayon::prelude::*;
use serde::Serialize;

use crate::fields::{Potential, SharedPotential, SmoothFn};
use crate::legendre::{embed, is_degenerate, legendre_point, legendre_potential, IndexSet, LegendreSpec};
use crate::{Matrix, Result, TpsError};

/// Ideal gas with molar entropy `s0 + c_v ln(u/u0) + R ln(v/v0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdealGas {
    pub c_v: f64,
    pub r: f64,
    pub s0: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Default for IdealGas {
    fn default() -> Self {
        Self { c_v: 1.5, r: 1.0, s0: 0.0, u0: 1.0, v0: 1.0 }
    }
}

impl IdealGas {
    pub fn validate(&self) -> Result<()> {
        if [self.c_v, self.r, self.u0, self.v0].iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(TpsError::InvalidInput(format!("ideal gas parameters must be positive: {self:?}")))
        }
    }

    /// Molar energy relation `u(s, v)`.
    pub fn energy(&self) -> IdealGasEnergy {
        IdealGasEnergy(*self)
    }
}

impl SmoothFn for IdealGas {
    fn arity(&self) -> usize {
        2
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        (x[0].clone() / self.u0).ln() * self.c_v + (x[1].clone() / self.v0).ln() * self.r + self.s0
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(1e-3 * self.u0, 1e3 * self.u0), (1e-3 * self.v0, 1e3 * self.v0)])
    }
}

/// `u(s, v) = u0 exp((s - s0 - R ln(v/v0)) / c_v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGasEnergy(pub IdealGas);

impl SmoothFn for IdealGasEnergy {
    fn arity(&self) -> usize {
        2
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let m = &self.0;
        ((x[0].clone() - m.s0 - (x[1].clone() / m.v0).ln() * m.r) / m.c_v).exp() * m.u0
    }
}

/// Van der Waals fluid, `P = RT/(v - b) - a/v^2`, with constant heat
/// capacity `c` and reference state `(v0, t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vdw {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub c: f64,
    pub v0: f64,
    pub t0: f64,
}

impl Default for Vdw {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0, r: 1.0, c: 1.5, v0: 1.0, t0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub v: f64,
    pub p: f64,
    pub t: f64,
}

impl Vdw {
    pub fn new(a: f64, b: f64, r: f64) -> Result<Self> {
        let m = Self { a, b, r, ..Self::default() };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.a, self.b, self.r, self.c, self.v0, self.t0].iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(TpsError::InvalidInput(format!("van der Waals parameters must be positive: {self:?}")))
        }
    }

    /// Closed-form critical point.
    pub fn critical(&self) -> CriticalPoint {
        CriticalPoint { v: 3.0 * self.b, p: self.a / (27.0 * self.b * self.b), t: 8.0 * self.a / (27.0 * self.r * self.b) }
    }

    pub fn pressure(&self, v: f64, t: f64) -> f64 {
        self.r * t / (v - self.b) - self.a / (v * v)
    }

    pub fn dp_dv(&self, v: f64, t: f64) -> f64 {
        -self.r * t / (v - self.b).powi(2) + 2.0 * self.a / v.powi(3)
    }

    pub fn d2p_dv2(&self, v: f64, t: f64) -> f64 {
        2.0 * self.r * t / (v - self.b).powi(3) - 6.0 * self.a / v.powi(4)
    }

    /// Molar Helmholtz free energy.
    pub fn helmholtz(&self, v: f64, t: f64) -> f64 {
        -self.r * t * ((v - self.b) / self.v0).ln() - self.a / v + self.c * t * (1.0 - (t / self.t0).ln())
    }

    pub fn entropy_at(&self, v: f64, t: f64) -> f64 {
        self.r * ((v - self.b) / self.v0).ln() + self.c * (t / self.t0).ln()
    }

    pub fn energy_at(&self, v: f64, t: f64) -> f64 {
        self.c * t - self.a / v
    }

    /// `int_{v1}^{v2} P dv` at temperature `t`.
    pub fn pressure_integral(&self, v1: f64, v2: f64, t: f64) -> f64 {
        self.r * t * ((v2 - self.b) / (v1 - self.b)).ln() + self.a * (1.0 / v2 - 1.0 / v1)
    }

    /// Molar entropy `s(u, v)`.
    pub fn entropy(&self) -> VdwEntropy {
        VdwEntropy(*self)
    }

    /// Molar energy `u(s, v)`.
    pub fn energy(&self) -> VdwEnergy {
        VdwEnergy(*self)
    }

    /// Helmholtz free energy `f(v)` on the isotherm `t`.
    pub fn isotherm(&self, t: f64) -> VdwIsotherm {
        VdwIsotherm { model: *self, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdwEntropy(pub Vdw);

impl SmoothFn for VdwEntropy {
    fn arity(&self) -> usize {
        2
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let m = &self.0;
        let (u, v) = (x[0].clone(), x[1].clone());
        let t = (u + v.clone().recip() * m.a) / m.c;
        ((v - m.b) / m.v0).ln() * m.r + (t / m.t0).ln() * m.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdwEnergy(pub Vdw);

impl SmoothFn for VdwEnergy {
    fn arity(&self) -> usize {
        2
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let m = &self.0;
        let (s, v) = (x[0].clone(), x[1].clone());
        ((s - ((v.clone() - m.b) / m.v0).ln() * m.r) / m.c).exp() * (m.c * m.t0) - v.recip() * m.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdwIsotherm {
    pub model: Vdw,
    pub t: f64,
}

impl SmoothFn for VdwIsotherm {
    fn arity(&self) -> usize {
        1
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let m = &self.model;
        let v = x[0].clone();
        ((v.clone() - m.b) / m.v0).ln() * (-m.r * self.t) - v.recip() * m.a
            + m.c * self.t * (1.0 - (self.t / m.t0).ln())
    }

    fn domain(&self) -> Option<Vec<(f64, f64)>> {
        Some(vec![(self.model.b * 1.01, self.model.b * 300.0)])
    }
}

/// Extensive relation `F(X, N) = N f(X / N)` built from a molar one; the
/// last argument is the mole number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extensive<M>(pub M);

impl<M: SmoothFn> SmoothFn for Extensive<M> {
    fn arity(&self) -> usize {
        self.0.arity() + 1
    }

    fn eval<D: DualNum<Primitive = f64>>(&self, x: &[D]) -> D {
        let k = self.0.arity();
        let n = x[k].clone();
        let molar: Vec<D> = x[..k].iter().map(|xi| xi.clone() / n.clone()).collect();
        self.0.eval(&molar) * n
    }
}

/// Homogeneity, Euler relation and the all-intensive potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerReport {
    /// `max_lambda |S(lambda q) - lambda S(q)|` over `lambda in {0.5, 2, 7}`.
    pub homogeneity: f64,
    /// `|S - sum q^a dS/dq^a|`.
    pub euler: f64,
    /// `S - beta U - beta P V + beta mu N` at the state.
    pub w_mupt: f64,
}

pub fn euler_gibbs_duhem_check(entropy: &dyn Potential, state: &[f64]) -> Result<EulerReport> {
    let jet = entropy.jet(state)?;
    let mut homogeneity: f64 = 0.0;
    for lambda in [0.5, 2.0, 7.0] {
        let scaled: Vec<f64> = state.iter().map(|x| x * lambda).collect();
        homogeneity = homogeneity.max((entropy.jet(&scaled)?.value - lambda * jet.value).abs());
    }
    let first_order: f64 = jet.gradient.iter().zip(state).map(|(g, q)| g * q).sum();
    let euler = (jet.value - first_order).abs();
    // w after exchanging every pair: S + q.p with p = -grad S
    let w_mupt = jet.value - first_order;
    Ok(EulerReport { homogeneity, euler, w_mupt })
}

/// Critical point by 2D Newton on `dP/dv = d2P/dv2 = 0` from a perturbed
/// seed.
pub fn critical_point(model: &Vdw) -> Result<CriticalPoint> {
    model.validate()?;
    let guess = model.critical();
    let (mut v, mut t) = (guess.v * 1.1, guess.t * 0.95);
    for _ in 0..100 {
        let f = [model.dp_dv(v, t), model.d2p_dv2(v, t)];
        let j11 = model.d2p_dv2(v, t);
        let j12 = -model.r / (v - model.b).powi(2);
        let j21 = -6.0 * model.r * t / (v - model.b).powi(4) + 24.0 * model.a / v.powi(5);
        let j22 = 2.0 * model.r / (v - model.b).powi(3);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dv = (f[0] * j22 - f[1] * j12) / det;
        let dt = (j11 * f[1] - j21 * f[0]) / det;
        let mut lambda = 1.0;
        while v - lambda * dv <= model.b {
            lambda *= 0.5;
        }
        v -= lambda * dv;
        t -= lambda * dt;
        if (dv / v).abs() < 1e-15 && (dt / t).abs() < 1e-15 {
            break;
        }
    }
    let scale = model.a / v.powi(3);
    let residual = (model.dp_dv(v, t).abs() / scale).max(model.d2p_dv2(v, t).abs() * v / scale);
    if !(residual < 1e-10) {
        return Err(TpsError::NoConvergence { iterations: 100, residual });
    }
    Ok(CriticalPoint { v, p: model.pressure(v, t), t })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_subcritical(model: &Vdw, t: f64) -> Result<CriticalPoint> {
    model.validate()?;
    let crit = model.critical();
    if !(t > 0.0 && t < crit.t) {
        return Err(TpsError::Domain(format!("temperature {t} outside (0, T_c = {})", crit.t)));
    }
    Ok(crit)
}

/// Roots `v- < v+` of `dP/dv = 0` on the isotherm `t < T_c`.
pub fn spinodal(model: &Vdw, t: f64) -> Result<(f64, f64)> {
    let crit = check_subcritical(model, t)?;
    let f = |v: f64| model.dp_dv(v, t);
    let lo = model.b * (1.0 + 1e-12);
    let mut hi = crit.v * 2.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    Ok((bisect(f, lo, crit.v), bisect(f, crit.v, hi)))
}

/// Liquid-vapour coexistence on one isotherm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coexistence {
    pub t: f64,
    pub p_coex: f64,
    pub v_liquid: f64,
    pub v_gas: f64,
    /// `|int P dv - P (v_g - v_l)|` over the tie line.
    pub equal_area_residual: f64,
    /// `|f(v_l) - f(v_g) - P (v_g - v_l)|`.
    pub mu_residual: f64,
}

const MAXWELL_TOL: f64 = 1e-14;

fn maxwell_residual(model: &Vdw, t: f64, vl: f64, vg: f64) -> [f64; 2] {
    let pl = model.pressure(vl, t);
    [pl - model.pressure(vg, t), model.pressure_integral(vl, vg, t) - pl * (vg - vl)]
}

fn maxwell_newton(model: &Vdw, t: f64, mut vl: f64, mut vg: f64, spin: (f64, f64)) -> Option<(f64, f64)> {
    let crit = model.critical();
    let scale = [crit.p, crit.p * crit.v];
    let size = |r: [f64; 2]| (r[0] / scale[0]).abs().max((r[1] / scale[1]).abs());
    let mut r = maxwell_residual(model, t, vl, vg);
    for _ in 0..200 {
        if size(r) < MAXWELL_TOL {
            return Some((vl, vg));
        }
        let dl = model.dp_dv(vl, t);
        let dg = model.dp_dv(vg, t);
        let pl = model.pressure(vl, t);
        let (j11, j12, j21, j22) = (dl, -dg, -dl * (vg - vl), model.pressure(vg, t) - pl);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let sl = -(r[0] * j22 - r[1] * j12) / det;
        let sg = -(j11 * r[1] - j21 * r[0]) / det;
        let mut lambda = 1.0;
        loop {
            let (nl, ng) = (vl + lambda * sl, vg + lambda * sg);
            if nl > model.b && nl < spin.0 && ng > spin.1 {
                let nr = maxwell_residual(model, t, nl, ng);
                if size(nr) < size(r) {
                    vl = nl;
                    vg = ng;
                    r = nr;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return None;
            }
        }
    }
    (size(r) < MAXWELL_TOL).then_some((vl, vg))
}

/// Tie line from bisection on the pressure, used when Newton from the default
/// seeds fails.
fn maxwell_bisection(model: &Vdw, t: f64, spin: (f64, f64)) -> (f64, f64) {
    let crit = model.critical();
    let liquid = |p: f64| bisect(|v| model.pressure(v, t) - p, model.b * (1.0 + 1e-12), spin.0);
    let gas = |p: f64| {
        let mut hi = spin.1 * 2.0;
        while model.pressure(hi, t) > p {
            hi *= 2.0;
        }
        bisect(|v| model.pressure(v, t) - p, spin.1, hi)
    };
    let area = |p: f64| {
        let (vl, vg) = (liquid(p), gas(p));
        model.pressure_integral(vl, vg, t) - p * (vg - vl)
    };
    let lo = model.pressure(spin.0, t).max(crit.p * 1e-12);
    let hi = model.pressure(spin.1, t);
    let p = bisect(area, lo, hi);
    (liquid(p), gas(p))
}

/// Equal-area construction on the isotherm `t`.
pub fn maxwell_construction(model: &Vdw, t: f64) -> Result<Coexistence> {
    check_subcritical(model, t)?;
    let spin = spinodal(model, t)?;
    let seed = (model.b + 0.1 * (spin.0 - model.b), 10.0 * spin.1);
    let (vl, vg) = match maxwell_newton(model, t, seed.0, seed.1, spin) {
        Some(sol) => sol,
        None => {
            let (bl, bg) = maxwell_bisection(model, t, spin);
            maxwell_newton(model, t, bl, bg, spin).unwrap_or((bl, bg))
        }
    };
    let p_coex = 0.5 * (model.pressure(vl, t) + model.pressure(vg, t));
    let equal_area_residual = (model.pressure_integral(vl, vg, t) - p_coex * (vg - vl)).abs();
    let mu_residual = (model.helmholtz(vl, t) - model.helmholtz(vg, t) - p_coex * (vg - vl)).abs();
    let pressure_gap = (model.pressure(vl, t) - model.pressure(vg, t)).abs();
    if !(equal_area_residual < 1e-8 && pressure_gap < 1e-10) {
        return Err(TpsError::NoConvergence { iterations: 200, residual: equal_area_residual.max(pressure_gap) });
    }
    Ok(Coexistence { t, p_coex, v_liquid: vl, v_gas: vg, equal_area_residual, mu_residual })
}

/// Coexistence data on every temperature of `t_grid`, in grid order.
pub fn coexistence_locus(model: &Vdw, t_grid: &[f64]) -> Result<Vec<Coexistence>> {
    t_grid.par_iter().map(|&t| maxwell_construction(model, t)).collect()
}

/// Dimension `C - r + 2` of an `r`-phase region with `C` species.
pub fn gibbs_phase_rule(species: i64, phases: i64) -> Result<i64> {
    if species < 1 || phases < 1 {
        return Err(TpsError::InvalidInput(format!("need C >= 1 and r >= 1, got C = {species}, r = {phases}")));
    }
    let dim = species - phases + 2;
    if dim < 0 {
        return Err(TpsError::Unphysical(format!("{phases} phases of {species} species cannot coexist")));
    }
    Ok(dim)
}

/// One row of [`ensemble_potentials`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleEntry {
    pub ensemble: String,
    /// Indices (into `(U, V, N)`) exchanged to reach this ensemble.
    pub exchanged: Vec<usize>,
    pub value: Option<f64>,
    /// Largest mismatch between the gradient of the potential and the state
    /// it should reproduce.
    pub first_law_residual: Option<f64>,
    pub flag: Option<String>,
}

/// Massieu potentials `S`, `-beta F`, `-beta G`, `-beta Phi` and the
/// all-intensive `w` of an extensive entropy `S(U, V, N)` at `state`.
pub fn ensemble_potentials(entropy: SharedPotential, state: &[f64]) -> Result<Vec<EnsembleEntry>> {
    if entropy.arity() != 3 || state.len() != 3 {
        return Err(TpsError::DimensionMismatch { expected: 3, got: state.len().max(entropy.arity()) });
    }
    let jet = entropy.jet(state)?;
    let ensembles: [(&str, &[usize]); 4] = [("NVU", &[]), ("NVT", &[0]), ("NpT", &[0, 1]), ("muVT", &[0, 2])];
    let mut out = Vec::new();
    for (name, idx) in ensembles {
        let set = IndexSet::new(3, idx)?;
        let mut entry = EnsembleEntry { ensemble: name.into(), exchanged: idx.to_vec(), value: None, first_law_residual: None, flag: None };
        let block = Matrix::from_fn(idx.len(), idx.len(), |r, c| jet.hessian[(idx[r], idx[c])]);
        let concave = idx.is_empty() || block.clone().symmetric_eigen().eigenvalues.iter().all(|e| *e < 0.0);
        if is_degenerate(&block) {
            entry.flag = Some("degenerate Hessian".into());
        } else if !concave {
            entry.flag = Some("entropy not concave in the exchanged variables".into());
        }
        if entry.flag.is_none() {
            let x: Vec<f64> = (0..3).map(|a| if set.contains(a) { -jet.gradient[a] } else { state[a] }).collect();
            match legendre_potential(Arc::clone(&entropy), &set, Some(state)).and_then(|c| c.jet(&x)) {
                Ok(cj) => {
                    let residual = (0..3)
                        .map(|a| if set.contains(a) { cj.gradient[a] - state[a] } else { cj.gradient[a] - jet.gradient[a] })
                        .fold(0.0f64, |m, d| m.max(d.abs()));
                    entry.value = Some(cj.value);
                    entry.first_law_residual = Some(residual);
                }
                Err(e) => entry.flag = Some(e.to_string()),
            }
        }
        out.push(entry);
    }
    // exchanging all three pairs: the conjugate does not exist for a
    // homogeneous entropy, but the phase-space point still has a w coordinate
    let all = IndexSet::all(3);
    let pt = legendre_point(&embed(&LegendreSpec::all_q(Arc::clone(&entropy)), state)?, &all)?;
    let flag = match legendre_potential(Arc::clone(&entropy), &all, Some(state)) {
        Ok(_) => None,
        Err(e) => Some(e.to_string()),
    };
    out.push(EnsembleEntry { ensemble: "mupT".into(), exchanged: vec![0, 1, 2], value: Some(pt.w()), first_law_residual: None, flag });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Smooth;

    #[test]
    fn critical_point_closed_form() {
        let m = Vdw::new(1.0, 1.0, 1.0).unwrap();
        let c = critical_point(&m).unwrap();
        assert!((c.v - 3.0).abs() < 1e-10 && (c.p - 1.0 / 27.0).abs() < 1e-12 && (c.t - 8.0 / 27.0).abs() < 1e-12);
        let m = Vdw::new(27.0, 1.0, 8.0).unwrap();
        let c = critical_point(&m).unwrap();
        assert!((c.v - 3.0).abs() < 1e-10 && (c.t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spinodal_brackets_instability() {
        let m = Vdw::default();
        let tc = m.critical().t;
        let (lo, hi) = spinodal(&m, 0.9 * tc).unwrap();
        assert!(lo < 3.0 && hi > 3.0);
        assert!(m.dp_dv(lo * 0.99, 0.9 * tc) < 0.0 && m.dp_dv(lo * 1.01, 0.9 * tc) > 0.0);
        assert!(spinodal(&m, tc).is_err());
        let (a, b) = spinodal(&m, 0.99999 * tc).unwrap();
        assert!((b - a) < 0.1);
    }

    #[test]
    fn maxwell_reduced_pressure() {
        let m = Vdw::default();
        let c = m.critical();
        let co = maxwell_construction(&m, 0.9 * c.t).unwrap();
        assert!((co.p_coex / c.p - 0.647).abs() < 1e-3);
        assert!(co.equal_area_residual < 1e-8 && co.mu_residual < 1e-8);
        assert!(co.v_liquid < c.v && co.v_gas > c.v);
    }

    #[test]
    fn phase_rule() {
        assert_eq!(gibbs_phase_rule(1, 2).unwrap(), 1);
        assert_eq!(gibbs_phase_rule(1, 3).unwrap(), 0);
        assert_eq!(gibbs_phase_rule(2, 1).unwrap(), 3);
        assert!(matches!(gibbs_phase_rule(1, 4), Err(TpsError::Unphysical(_))));
        assert!(gibbs_phase_rule(0, 1).is_err());
    }

    #[test]
    fn ideal_gas_euler() {
        let s = Smooth(Extensive(IdealGas::default()));
        let r = euler_gibbs_duhem_check(&s, &[3.0, 2.0, 1.5]).unwrap();
        assert!(r.homogeneity < 1e-10 && r.euler < 1e-10 && r.w_mupt.abs() < 1e-10);
    }

    #[test]
    fn energy_relations_invert_entropy() {
        let g = IdealGas::default();
        let s = Smooth(g).value(&[2.0, 3.0]);
        assert!((Smooth(g.energy()).value(&[s, 3.0]) - 2.0).abs() < 1e-12);
        let m = Vdw::default();
        let s = Smooth(m.entropy()).value(&[1.2, 4.0]);
        assert!((Smooth(m.energy()).value(&[s, 4.0]) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn ensembles_of_ideal_gas() {
        let g = IdealGas::default();
        let state = [3.0, 2.0, 1.5];
        let table = ensemble_potentials(Smooth::shared(Extensive(g)), &state).unwrap();
        let s = Smooth(Extensive(g));
        let jet = s.jet(&state).unwrap();
        let beta = jet.gradient[0];
        let nvt = table.iter().find(|e| e.ensemble == "NVT").unwrap();
        assert!((nvt.value.unwrap() - (jet.value - beta * state[0])).abs() < 1e-10);
        let mupt = table.last().unwrap();
        assert!(mupt.value.unwrap().abs() < 1e-10);
        assert!(mupt.flag.is_some());
        for e in &table[..4] {
            assert!(e.flag.is_none(), "{e:?}");
            assert!(e.first_law_residual.unwrap() < 1e-9);
        }
    }
}
