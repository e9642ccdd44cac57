//! Property tests for the invariants of each module.

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use contact_thermo::chart::{deta_eval, eta_eval, gibbs_form, reeb, TpsPoint};
use contact_thermo::dynamics::{ham_vf, heisenberg_form_vf, integrate, jacobi_bracket, lt_generator};
use contact_thermo::fields::{dual_field, Field, Potential, Quadratic, Reciprocal, Smooth};
use contact_thermo::gauge::gauge_transform;
use contact_thermo::legendre::{embed, isotropy_residual, legendre_jacobian, legendre_point, legendre_point_inverse, IndexSet, LegendreSpec};
use contact_thermo::metric::{canonical_basis, gfr, identity_residuals, phi, signature, StructureBundle};
use contact_thermo::models::{critical_point, gibbs_phase_rule, maxwell_construction, spinodal, IdealGas, Vdw};
use contact_thermo::processes::{analytic_flow, classify, entropy_production, norm_identity_check, thermo_hamiltonian, OrbitKind};
use contact_thermo::{Matrix, Vector};
use num_dual::DualNum;
use proptest::prelude::*;

fn point(n: usize, p_lo: f64) -> impl Strategy<Value = TpsPoint> {
    (
        -2.0..2.0f64,
        prop::collection::vec(-2.0..2.0f64, n),
        prop::collection::vec(p_lo..5.0f64, n),
    )
        .prop_map(|(w, q, p)| TpsPoint::new(w, &q, &p).unwrap())
}

fn any_point() -> impl Strategy<Value = TpsPoint> {
    (1usize..=3).prop_flat_map(|n| point(n, 0.5))
}

fn vector(dim: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-3.0..3.0f64, dim).prop_map(Vector::from_vec)
}

fn point_and_vector() -> impl Strategy<Value = (TpsPoint, Vector)> {
    any_point().prop_flat_map(|pt| {
        let d = pt.dim();
        (Just(pt), vector(d))
    })
}

fn point_and_set() -> impl Strategy<Value = (TpsPoint, IndexSet)> {
    (1usize..=3).prop_flat_map(|n| {
        (point(n, -5.0), prop::collection::vec(any::<bool>(), n)).prop_map(move |(pt, mask)| {
            let idx: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            (pt, IndexSet::new(n, &idx).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reeb_normalized_and_in_kernel((pt, y) in point_and_vector()) {
        let xi = reeb(pt.n());
        prop_assert_eq!(eta_eval(&pt, &xi).unwrap(), 1.0);
        prop_assert!(deta_eval(&pt, &xi, &y).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn fisher_rao_signature(pt in any_point()) {
        let n = pt.n();
        prop_assert_eq!(signature(&pt).unwrap(), (n + 1, n));
    }

    #[test]
    fn canonical_frame_is_orthonormal(pt in any_point()) {
        let n = pt.n();
        let e = canonical_basis(&pt).unwrap();
        let g = gfr(&pt);
        for (i, ei) in e.iter().enumerate() {
            for (j, ej) in e.iter().enumerate() {
                let expect = match (i == j, i) {
                    (false, _) => 0.0,
                    (true, k) if k <= n => 1.0,
                    _ => -1.0,
                };
                prop_assert!((ei.dot(&(&g * ej)) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn phi_is_involutive_on_contact_distribution((pt, x) in point_and_vector()) {
        let f = phi(&pt).unwrap();
        let xi = reeb(pt.n());
        prop_assert!((&f * &xi).amax() <= 1e-10);
        // project onto ker eta along xi
        let d = &x - &xi * gibbs_form(&pt).dot(&x);
        prop_assert!((&f * (&f * &d) - &d).amax() <= 1e-10);
    }

    #[test]
    fn gauge_preserves_contact_distribution((pt, x) in point_and_vector(), c in 0.3..3.0f64, k in -0.3..0.3f64) {
        let n = pt.n();
        let b = StructureBundle::fisher_rao(n);
        let omega: Field = dual_field(n, move |y| (y[0].clone() * k).exp() * c + y[1].clone().sin() * 0.1);
        let t = gauge_transform(&b, Arc::clone(&omega)).unwrap();
        let d = &x - reeb(n) * gibbs_form(&pt).dot(&x);
        prop_assert!(t.eta_at(&pt).unwrap().dot(&d).abs() < 1e-12);
        let r = identity_residuals(&t, &pt).unwrap();
        for v in [r.reeb_normalization, r.reeb_kernel, r.phi_reeb, r.phi_square, r.compatibility, r.associated] {
            prop_assert!(v < 1e-8, "{r:?}");
        }
        let back = gauge_transform(&t, Arc::new(Reciprocal(omega))).unwrap();
        prop_assert!((back.metric_at(&pt).unwrap() - b.metric_at(&pt).unwrap()).amax() < 1e-8);
        prop_assert!((back.phi_at(&pt).unwrap() - b.phi_at(&pt).unwrap()).amax() < 1e-8);
        prop_assert!((back.reeb_at(&pt).unwrap() - b.reeb_at(&pt).unwrap()).amax() < 1e-8);
    }

    #[test]
    fn legendre_maps_preserve_eta((pt, set) in point_and_set()) {
        let image = legendre_point(&pt, &set).unwrap();
        let jac = legendre_jacobian(&pt, &set).unwrap();
        prop_assert!((jac.transpose() * gibbs_form(&image) - gibbs_form(&pt)).amax() < 1e-10);
    }

    #[test]
    fn legendre_twice_flips_exchanged_pairs((pt, set) in point_and_set()) {
        let n = pt.n();
        let twice = legendre_point(&legendre_point(&pt, &set).unwrap(), &set).unwrap();
        prop_assert!((twice.w() - pt.w()).abs() <= 1e-12 * (1.0 + pt.w().abs()));
        for i in 0..n {
            let s = if set.contains(i) { -1.0 } else { 1.0 };
            prop_assert_eq!(twice.q()[i], s * pt.q()[i]);
            prop_assert_eq!(twice.p()[i], s * pt.p()[i]);
        }
        let back = legendre_point_inverse(&legendre_point(&pt, &set).unwrap(), &set).unwrap();
        prop_assert_eq!(back.q(), pt.q());
        prop_assert_eq!(back.p(), pt.p());
        prop_assert!((back.w() - pt.w()).abs() <= 1e-12 * (1.0 + pt.w().abs()));
    }

    #[test]
    fn embeddings_are_isotropic(x in prop::collection::vec(0.5..3.0f64, 2), a in 0.5..2.0f64) {
        let f = contact_thermo::fields::dual_potential(2, move |y| {
            y[0].clone().ln() * a + y[1].clone().ln() + y[0].clone() * y[1].clone() * 0.1
        });
        for idx in [vec![], vec![0], vec![1], vec![0, 1]] {
            let spec = LegendreSpec::new(IndexSet::new(2, &idx).unwrap(), Arc::clone(&f)).unwrap();
            prop_assert!(isotropy_residual(&spec, &x).unwrap() < 1e-8);
            prop_assert!(gibbs_form(&embed(&spec, &x).unwrap()).iter().all(|c| c.is_finite()));
        }
    }

    #[test]
    fn hamiltonian_field_contract(pt in point(2, -5.0), c in prop::collection::vec(-1.0..1.0f64, 4)) {
        let c2 = c.clone();
        let h: Field = dual_field(2, move |y| {
            y[0].clone() * c2[0] + (y[1].clone() * y[3].clone()) * c2[1] + y[4].clone().sin() * c2[2] + y[0].clone() * y[2].clone() * c2[3]
        });
        let x = pt.to_vector();
        let v = ham_vf(h.as_ref(), &pt);
        prop_assert!((gibbs_form(&pt).dot(&v) - h.value(&x)).abs() <= 1e-12 * (1.0 + h.value(&x).abs()));
        prop_assert!((heisenberg_form_vf(h.as_ref(), &pt) - v).amax() <= 1e-12 * (1.0 + x.amax()));
    }

    #[test]
    fn jacobi_bracket_antisymmetric_and_bilinear(pt in point(1, 0.5), s in -2.0..2.0f64) {
        let f: Field = dual_field(1, |y| y[1].clone() * y[2].clone());
        let g: Field = dual_field(1, |y| y[0].clone() + y[2].clone() * y[2].clone());
        let k: Field = dual_field(1, |y| y[1].clone().sin());
        let fg = jacobi_bracket(&f, &g, &pt).unwrap();
        let gf = jacobi_bracket(&g, &f, &pt).unwrap();
        prop_assert!((fg + gf).abs() < 1e-6);
        let g_plus: Field = dual_field(1, move |y| y[0].clone() + y[2].clone() * y[2].clone() + y[1].clone().sin() * s);
        let lhs = jacobi_bracket(&f, &g_plus, &pt).unwrap();
        let rhs = fg + s * jacobi_bracket(&f, &k, &pt).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-6 * (1.0 + rhs.abs()));
    }

    #[test]
    fn basic_hamiltonian_is_conserved(pt in point(2, -2.0)) {
        // h_LT does not depend on w
        let traj = integrate(&lt_generator(2), &pt, 2.0, 1e-2).unwrap();
        let h0 = traj.h[0];
        prop_assert!(traj.h.iter().all(|h| (h - h0).abs() < 1e-8));
    }

    #[test]
    fn hamiltonian_rate_is_reeb_derivative(pt in point(1, 0.5)) {
        // h = w q + p has xi(h) = q, and q' = h_p = 1
        let h: Field = dual_field(1, |y| y[0].clone() * y[1].clone() + y[2].clone());
        let dt = 1e-3;
        let traj = integrate(&h, &pt, 0.5, dt).unwrap();
        for k in 1..traj.len() - 1 {
            let rate = (traj.h[k + 1] - traj.h[k - 1]) / (2.0 * dt);
            let expect = traj.points[k].q()[0] * traj.h[k];
            prop_assert!((rate - expect).abs() < 1e-5 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn thermodynamic_hamiltonian_decays(pt in any_point(), t in 0.0..20.0f64) {
        let h0 = thermo_hamiltonian(&pt);
        let later = analytic_flow(&pt, t).unwrap();
        prop_assert!((thermo_hamiltonian(&later) - h0 * (-t).exp()).abs() <= 1e-15 * h0.abs().max(1.0));
        prop_assert!(norm_identity_check(&pt) <= 1e-10);
        prop_assert_eq!(later.q(), pt.q());
    }

    #[test]
    fn classification_matches_sign(h0 in -2.0..2.0f64, tol in 1e-12..1e-2f64) {
        let pt = TpsPoint::new(-h0, &[0.5], &[1.0]).unwrap();
        let kind = classify(&pt, tol).unwrap().kind;
        let expect = if h0.abs() <= tol {
            OrbitKind::Equilibrium
        } else if h0 > 0.0 {
            OrbitKind::AdmissibleFluctuation
        } else {
            OrbitKind::Inadmissible
        };
        prop_assert_eq!(kind, expect);
    }

    #[test]
    fn entropy_production_monotone_and_bounded(h0 in 0.0..3.0f64, t1 in 0.0..10.0f64, dt in 0.0..10.0f64) {
        let pt = TpsPoint::new(-h0, &[0.5, 1.0], &[1.0, 2.0]).unwrap();
        let a = entropy_production(&pt, t1).unwrap().value;
        let b = entropy_production(&pt, t1 + dt).unwrap().value;
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a - 1e-12);
        prop_assert!(b <= h0 + 1e-12);
    }

    #[test]
    fn ideal_gas_entropy_is_concave(u in 0.01..100.0f64, v in 0.01..100.0f64) {
        let jet = Smooth(IdealGas::default()).jet(&[u, v]).unwrap();
        let eig = jet.hessian.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|e| *e < 0.0));
    }

    #[test]
    fn vdw_free_energy_changes_curvature_at_spinodal(tr in 0.5..0.99f64) {
        let m = Vdw::default();
        let t = tr * m.critical().t;
        let (lo, hi) = spinodal(&m, t).unwrap();
        let curvature = |v: f64| Smooth(m.isotherm(t)).jet(&[v]).unwrap().hessian[(0, 0)];
        let eps = 1e-6;
        prop_assert!(curvature(lo * (1.0 - eps)) > 0.0 && curvature(lo * (1.0 + eps)) < 0.0);
        prop_assert!(curvature(hi * (1.0 - eps)) < 0.0 && curvature(hi * (1.0 + eps)) > 0.0);
    }

    #[test]
    fn maxwell_residuals_both_vanish(tr in 0.55..0.98f64, a in 0.5..3.0f64, b in 0.2..2.0f64, r in 0.5..3.0f64) {
        let m = Vdw::new(a, b, r).unwrap();
        let c = maxwell_construction(&m, tr * m.critical().t).unwrap();
        prop_assert!(c.equal_area_residual < 1e-8 && c.mu_residual < 1e-8, "{c:?}");
        prop_assert!((m.pressure(c.v_liquid, c.t) - c.p_coex).abs() < 1e-10);
        prop_assert!((m.pressure(c.v_gas, c.t) - c.p_coex).abs() < 1e-10);
    }

    #[test]
    fn critical_point_closed_form(a in 0.1..10.0f64, b in 0.05..2.0f64, r in 0.1..10.0f64) {
        let cp = critical_point(&Vdw::new(a, b, r).unwrap()).unwrap();
        assert_abs_diff_eq!(cp.v / (3.0 * b), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(cp.p / (a / (27.0 * b * b)), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(cp.t / (8.0 * a / (27.0 * r * b)), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn phase_rule_is_integer_arithmetic(c in 1i64..6, phases in 1i64..8) {
        match gibbs_phase_rule(c, phases) {
            Ok(dim) => prop_assert_eq!(dim, c - phases + 2),
            Err(_) => prop_assert!(c - phases + 2 < 0),
        }
    }

    #[test]
    fn field_derivatives_match_finite_differences(pt in point(1, 0.5), k in prop::collection::vec(-1.0..1.0f64, 3)) {
        let k2 = k.clone();
        let f: Field = dual_field(1, move |y| {
            (y[0].clone() * k2[0]).sin() * y[2].clone() + (y[1].clone() * y[1].clone() * k2[1]).exp() + y[2].clone().powi(3) * k2[2]
        });
        let x = pt.to_vector();
        let jet = f.jet(&x);
        let h = 1e-5;
        let mut fd_grad = Vector::zeros(3);
        let mut fd_hess = Matrix::zeros(3, 3);
        for i in 0..3 {
            let mut e = Vector::zeros(3);
            e[i] = h;
            fd_grad[i] = (f.value(&(&x + &e)) - f.value(&(&x - &e))) / (2.0 * h);
            let col = (f.gradient(&(&x + &e)) - f.gradient(&(&x - &e))) / (2.0 * h);
            fd_hess.set_column(i, &col);
        }
        prop_assert!((&jet.gradient - &fd_grad).amax() / (1.0 + fd_grad.amax()) < 1e-6);
        prop_assert!((&jet.hessian - &fd_hess).amax() / (1.0 + fd_hess.amax()) < 1e-6);
    }
}

#[test]
fn quadratic_embedding_is_exact() {
    let spec = LegendreSpec::all_q(Smooth::shared(Quadratic::negative_unit(2)));
    let pt = embed(&spec, &[0.5, -1.0]).unwrap();
    assert_eq!(pt.p(), &[0.5, -1.0]);
}
