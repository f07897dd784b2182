use std::f64::consts::TAU;
use std::sync::Arc;

use randers_core::cases::rng_for;
use randers_core::geometry::{is_killing, sectional_curvature};
use randers_core::hyperbolic::mesh::{generate_mesh, hyperbolic_nav, GridRange, MeshFamily, MeshSpec};
use randers_core::hyperbolic::rotational::*;
use randers_core::hyperbolic::{HyperboloidMetric, MixedFieldChart, MixedKillingField};
use randers_core::immersion::{induced_geometry, pairing_df_grad_w};
use randers_core::mean_curvature::{mean_form_general, mean_value_bh};
use randers_core::measure::MeasureSpec;
use randers_core::ode::OdeOptions;
use randers_core::{GeometryError, Immersion};
use rand::Rng;

fn field() -> MixedKillingField {
    MixedKillingField::new(0.5, 0.5)
}

fn generic_profile(ty: SurfaceType) -> ArcLengthProfile {
    let c = match ty {
        SurfaceType::Spherical => 0.8,
        SurfaceType::Hyperbolic => 1.5,
    };
    ArcLengthProfile::new(ty, 0.0, move |t| (c + 0.2 * t + 0.1 * t * t, 0.2 + 0.2 * t, 0.2))
}

#[test]
fn chart_curvature_and_killing() {
    let mut rng = rng_for(17, 0);
    let wind = MixedFieldChart(MixedKillingField::new(0.7, -0.4));
    for _ in 0..20 {
        let u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
        let x = nalgebra::DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let y = nalgebra::DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let k = sectional_curvature(&HyperboloidMetric, &u, &x, &y).unwrap();
        assert!((k + 1.0).abs() < 1e-6, "{k}");
        assert!(is_killing(&HyperboloidMetric, &wind, &u, 1e-10).unwrap().is_killing);
    }
}

#[test]
fn rotational_frame_identities() {
    let nav = hyperbolic_nav(field(), MeasureSpec::bh(2)).allow_outside_domain();
    for ty in [SurfaceType::Spherical, SurfaceType::Hyperbolic] {
        let surf = RotationalSurface::new(Arc::new(generic_profile(ty)), field()).numeric_w();
        let eps = surf.eps();
        for t in [0.1, 0.3, 0.5] {
            for th in [0.2, 1.0, -0.7] {
                let jet = surf.jet(&[t, th]).unwrap();
                let g = induced_geometry(&nav, &jet).unwrap();
                let pj = surf.profile.jet(t).unwrap();
                assert!((g.h[(0, 0)] - 1.0).abs() < 1e-8);
                assert!(g.h[(0, 1)].abs() < 1e-8);
                assert!((g.h[(1, 1)] - pj.x1 * pj.x1).abs() < 1e-8);
                assert!((g.w.unwrap() + eps * pj.dx1).abs() < 1e-10);
                let pp = ProfilePoint {
                    x1: pj.x1,
                    dx1: pj.dx1,
                    ddx1: pj.ddx1,
                };
                assert!((rotational_h(ty, pp).unwrap() - g.mean_curvature.unwrap()).abs() < 1e-7);
                let fd = pairing_df_grad_w(&nav, &surf, &[t, th]).unwrap();
                assert!((fd - pairing_closed_form(ty, eps, pp).unwrap()).abs() < 1e-6);

                let n = rotational_normal(ty, &pj, th).unwrap();
                let p = surface_point(ty, pj.x1, pj.phi, th).unwrap();
                assert!(randers_core::hyperbolic::lorentz_inner(&n, &p.0).abs() < 1e-10);
                assert!((randers_core::hyperbolic::lorentz_inner(&n, &n) - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn closed_data_matches_chart_engine() {
    let nav = hyperbolic_nav(field(), MeasureSpec::bh(2));
    for ty in [SurfaceType::Spherical, SurfaceType::Hyperbolic] {
        let surf = RotationalSurface::new(Arc::new(generic_profile(ty)), field());
        for t in [0.0, 0.2] {
            let x = [t, 0.4];
            let jet = surf.jet(&x).unwrap();
            let g = induced_geometry(&nav, &jet).unwrap();
            let n = g.normal.clone().unwrap();
            let general = mean_form_general(&nav, &jet).unwrap().apply(&n);
            let closed = mean_value_bh(&nav, &surf, &x, &n).unwrap();
            assert!((general - closed).abs() < 1e-6, "{general} {closed}");
        }
    }
}

#[test]
fn families_are_minimal_and_perturbation_is_not() {
    let th = |ty| if ty == SurfaceType::Spherical { TAU } else { 1.5 };
    for ty in [SurfaceType::Spherical, SurfaceType::Hyperbolic] {
        let g = MeshSpec::new(
            MeshFamily::Geodesic { ty },
            field(),
            GridRange::new(-1.5, 1.5, 21),
            GridRange::new(0.0, th(ty), 12),
        );
        let m = generate_mesh(&g).unwrap();
        assert!(m.stats().max < 1e-8);
        for v in &m.vertices {
            assert!(v.point.hyperboloid_residual() < 1e-10);
        }
        let cf = MeshSpec::new(
            MeshFamily::ClosedForm {
                ty,
                energy: 1.0,
                sigma: 1.0,
                phi_sign: -1.0,
            },
            field(),
            GridRange::new(0.0, 4.0 / 3.0, 24),
            GridRange::new(0.0, th(ty), 12),
        );
        let m = generate_mesh(&cf).unwrap();
        assert!(m.stats().max < 1e-5);
        let mut perturbed = cf.clone();
        perturbed.scale = 1.1;
        assert!(generate_mesh(&perturbed).unwrap().stats().max > 1e-2);
    }
}

#[test]
fn ode_conserves_energy_and_matches_closed_form() {
    for ty in [SurfaceType::Spherical, SurfaceType::Hyperbolic] {
        let (eps, s0, e) = (0.5, 0.3f64, 0.8);
        let j = closed_form_jet(s0, e, eps, ty, 1.0).unwrap();
        let prof = ode_integrate(ty, eps, j.x1, -s0.sqrt(), 0.0, -2.0, &OdeOptions::default()).unwrap();
        let e0 = energy(ty, eps, j.x1, s0.sqrt()).unwrap();
        for (_, p, phi) in prof.samples() {
            let en = energy(ty, eps, p.x1, p.dx1).unwrap();
            assert!(((en - e0) / e0).abs() < 1e-7);
            let s = p.dx1 * p.dx1;
            if s > 0.01 && (s - 4.0 / 3.0).abs() > 0.01 {
                let x = closed_form_x1(s, e, eps, ty, 1.0).unwrap();
                assert!((x - p.x1).abs() < 1e-6);
                let q = phi_of_s(s0, s, e0, eps, ty, p.dx1.signum()).unwrap();
                assert!((q - phi).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn linear_profile_stays_linear() {
    let eps = 0.5;
    let slope = 1.0 / (3f64.sqrt() * eps);
    let prof = ode_integrate(SurfaceType::Spherical, eps, 0.7, slope, 0.0, 0.4, &OdeOptions::default()).unwrap();
    for (t, p, _) in prof.samples() {
        assert!((p.x1 - 0.7 - slope * t).abs() < 1e-10);
    }
    assert!(matches!(
        energy(SurfaceType::Spherical, eps, 0.7, slope),
        Err(GeometryError::DegenerateFirstIntegral)
    ));
}
