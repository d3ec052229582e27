//! Randomized invariants across modules.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use scattergate::algebra::operator_schmidt;
use scattergate::c64;
use scattergate::direct1d::{em_spin_smatrix, solve_conjugate_start, solve_scattering, solve_scattering_with, BoundState, PotentialSpec};
use scattergate::dispersion::{blaschke, build_scattering_data, reconstruct_transmission, GateTarget, ReflectionData};
use scattergate::fuchsian::{monodromy, FuchsianSystem, Loop, Orientation};
use scattergate::glm::{marchenko_kernel, solve_marchenko, uniform_grid};
use scattergate::numeric::{Dopri5, DEFAULT_ATOL, DEFAULT_RTOL};
use scattergate::twolevel::{dipole_smatrix, f_matrix, scattering_matrix, DipoleParams, PulseSpec};
use scattergate::Complex64;

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(a, b)` of a square well by matching at both edges.
fn well_ab(q0: f64, len: f64, k: f64) -> (Complex64, Complex64) {
    let i = c64(0.0, 1.0);
    let kappa = c64(k * k + q0, 0.0).sqrt();
    let (c, s) = ((kappa * len).cos(), (kappa * len).sin());
    let phi = c - i * k * s / kappa;
    let dphi = -kappa * s - i * k * c;
    let ik = i * k;
    let a = (ik * len).exp() * (ik * phi - dphi) / (2.0 * ik);
    let b = (-ik * len).exp() * (ik * phi + dphi) / (2.0 * ik);
    (a, b)
}

fn exp_series(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let s = 8;
    let scaled = m / c64(2f64.powi(s), 0.0);
    let mut term = DMatrix::<Complex64>::identity(2, 2);
    let mut sum = term.clone();
    for j in 1..30 {
        term = &term * &scaled / c64(j as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c64(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn square_wells_obey_su11_and_match_oracle(q0 in -6.0..6.0f64, len in 0.2..3.0f64, k in 0.3..6.0f64) {
        let q = PotentialSpec::square_well(q0, 0.0, len).unwrap();
        let c = solve_scattering(&q, k).unwrap();
        let (a, b) = (c.m.a(), c.m.b());
        prop_assert!((a.norm_sqr() - b.norm_sqr() - 1.0).abs() <= 1e-8);
        prop_assert!((c.transmission.norm_sqr() + c.reflection.norm_sqr() - 1.0).abs() <= 1e-8);
        let (ea, eb) = well_ab(q0, len, k);
        prop_assert!((a - ea).norm() <= 1e-7 * ea.norm() && (b - eb).norm() <= 1e-7 * ea.norm());
        let (ac, bc) = solve_conjugate_start(&q, k).unwrap();
        prop_assert!((ac - a.conj()).norm() <= 1e-8 * a.norm() && (bc - b.conj()).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn halving_integrator_tolerance_is_stable(q0 in -4.0..4.0f64, len in 0.5..2.0f64, k in 0.3..5.0f64) {
        let q = PotentialSpec::square_well(q0, -0.5 * len, len).unwrap();
        let coarse = solve_scattering(&q, k).unwrap();
        let fine = solve_scattering_with(&q, k, &Dopri5::with_tolerance(DEFAULT_RTOL / 2.0, DEFAULT_ATOL / 2.0)).unwrap();
        prop_assert!((coarse.m.a() - fine.m.a()).norm() <= 1e-7);
        prop_assert!((coarse.m.b() - fine.m.b()).norm() <= 1e-7);
    }

    #[test]
    fn spin_smatrix_is_block_diagonal(q1 in -4.0..4.0f64, q2 in -4.0..4.0f64, k in 0.3..5.0f64) {
        let u = PotentialSpec::square_well(q1, 0.0, 1.0).unwrap();
        let v = PotentialSpec::square_well(q2, -1.0, 0.7).unwrap();
        let s = em_spin_smatrix(&u, &v, k).unwrap();
        let m = s.matrix();
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (2, 1), (3, 0), (3, 1)] {
            prop_assert_eq!(m[(i, j)], c64(0.0, 0.0));
        }
        let su = solve_scattering(&u, k).unwrap().smatrix();
        prop_assert!(max_diff(&m.view((0, 0), (2, 2)).into_owned(), su.matrix()) <= 1e-10);
    }

    #[test]
    fn blaschke_factors_are_unimodular(k in -20.0..20.0f64, etas in prop::collection::vec(0.05..5.0f64, 1..5)) {
        prop_assert!((blaschke(c64(k, 0.0), etas).norm() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn reflectionless_transmission_is_the_blaschke_product(k in 0.2..6.0f64, etas in prop::collection::btree_set(1u32..30, 1..4)) {
        let etas: Vec<f64> = etas.into_iter().map(|e| 0.1 * e as f64).collect();
        let bs = etas.iter().map(|&e| BoundState::new(e, 1.0).unwrap()).collect();
        let data = ReflectionData::reflectionless(bs, 10.0, 201).unwrap();
        let t = reconstruct_transmission(&data, k).unwrap();
        let expected = blaschke(c64(k, 0.0), etas.iter().copied());
        prop_assert!((t - expected).norm() <= 1e-10);
    }

    #[test]
    fn one_pole_monodromy_is_exp(a in complex(), b in complex(), c in complex(), d in complex(), pole in complex()) {
        let m = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        let norm = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let m = if norm > 1.0 { m / c64(norm, 0.0) } else { m };
        let sys = FuchsianSystem::new(vec![pole], vec![[[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]]).unwrap();
        let got = monodromy(&sys, &Loop::circle(pole, 0.5, Orientation::Ccw)).unwrap();
        prop_assert!(max_diff(got.matrix(), &exp_series(&(m * c64(0.0, 2.0 * PI)))) <= 1e-8);
    }

    #[test]
    fn homotopic_loops_agree(p1 in complex(), r1 in complex(), r2 in complex()) {
        let far = c64(5.0, 5.0);
        let res = |z: Complex64| [[z * 0.5, z.conj() * 0.2], [c64(0.1, 0.0), -z * 0.5]];
        let sys = FuchsianSystem::new(vec![p1 * 0.8, far], vec![res(r1), res(r2)]).unwrap();
        let p = p1 * 0.8;
        let circle = monodromy(&sys, &Loop::Circle {
            center: p, radius: 1.0, orientation: Orientation::Ccw, start_angle: -PI / 4.0, samples: 64,
        }).unwrap();
        // A square through the same base point, enclosing only `p`.
        let base = p + Complex64::from_polar(1.0, -PI / 4.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let pts = vec![base, p + c64(h, h), p + c64(-h, h), p + c64(-h, -h), base];
        let square = monodromy(&sys, &Loop::Polyline { points: pts }).unwrap();
        prop_assert!(max_diff(circle.matrix(), square.matrix()) <= 1e-7);
    }

    #[test]
    fn base_point_change_preserves_trace(r in complex(), angle in 0.0..(2.0 * PI)) {
        let res = [[r, c64(0.3, 0.1)], [c64(-0.2, 0.0), -r * 0.7]];
        let sys = FuchsianSystem::new(vec![c64(0.0, 0.0)], vec![res]).unwrap();
        let lp = |start_angle| Loop::Circle { center: c64(0.0, 0.0), radius: 0.6, orientation: Orientation::Ccw, start_angle, samples: 64 };
        let m0 = monodromy(&sys, &lp(0.0)).unwrap();
        let m1 = monodromy(&sys, &lp(angle)).unwrap();
        prop_assert!((m0.matrix().trace() - m1.matrix().trace()).norm() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn two_level_smatrix_is_special_unitary(a in 0.3..3.0f64, b in -0.5..0.5f64, zeta in -3.0..3.0f64) {
        let s = scattering_matrix(&PulseSpec::lorentzian(a, b, None).unwrap(), zeta).unwrap();
        let m = s.matrix();
        let defect = max_diff(&(m.adjoint() * m), &DMatrix::identity(2, 2));
        prop_assert!(defect <= 1e-8);
        prop_assert!((m.determinant() - 1.0).norm() <= 1e-8);
    }

    #[test]
    fn on_resonance_only_the_area_matters(a in 0.3..3.0f64, area in 0.1..3.0f64, width in 0.5..4.0f64) {
        let lor = PulseSpec::lorentzian(a, area / (2.0 * PI), Some(0.0)).unwrap();
        let rect = PulseSpec::rectangular(c64(area / (2.0 * width), 0.0), width, Some(0.0)).unwrap();
        let d = max_diff(scattering_matrix(&lor, 0.0).unwrap().matrix(), scattering_matrix(&rect, 0.0).unwrap().matrix());
        prop_assert!(d <= 1e-6, "{}", d);
    }

    #[test]
    fn entanglement_survives_small_smooth_perturbations(eps_f in -1e-3..1e-3f64, eps_g in -1e-3..1e-3f64, c in -1.0..1.0f64) {
        let p = DipoleParams::default();
        let base = operator_schmidt(&f_matrix(&p).unwrap()).unwrap().singular_values[1];
        let t = p.t;
        let inside = |s: f64| s.abs() <= t;
        let bump = |s: f64| (-(s - c) * (s - c) * 4.0).exp();
        let s = dipole_smatrix(
            &p,
            |s| if inside(s) { p.x } else { c64(0.0, 0.0) } + c64(eps_f * bump(s), 0.0),
            |s| if inside(s) { p.y } else { 0.0 } + eps_g * bump(s),
            &[-t - 4.0, -t, t, t + 4.0],
        ).unwrap();
        let perturbed = operator_schmidt(&s).unwrap().singular_values[1];
        prop_assert!((perturbed - base).abs() <= 1e-2 && perturbed > 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn one_soliton_recovery(eta in 0.6..1.4f64, norming in 0.5..2.0f64) {
        let data = ReflectionData::reflectionless(vec![BoundState::new(eta, norming).unwrap()], 10.0, 201).unwrap();
        let kernel = marchenko_kernel(&data, &uniform_grid(-9.0, 40.0, 0.01)).unwrap();
        let xs = uniform_grid(-4.0, 4.0, 0.5);
        let rec = solve_marchenko(&kernel, &xs).unwrap();
        let x0 = norming.ln() / (2.0 * eta);
        for (x, q) in xs.iter().zip(&rec.q) {
            let exact = 2.0 * eta * eta / (eta * (x - x0)).cosh().powi(2);
            prop_assert!((q - exact).abs() <= 1e-3, "x = {}: {} vs {}", x, q, exact);
        }
    }

    #[test]
    fn built_data_reproduces_targets(
        t1 in 0.3..0.95f64, t2 in 0.3..0.95f64, phases in prop::array::uniform4(-3.0..3.0f64),
    ) {
        let target = |k: f64, t: f64, pt: f64, pr: f64| {
            GateTarget::new(k, Complex64::from_polar(t, pt), Complex64::from_polar((1.0 - t * t).sqrt(), pr)).unwrap()
        };
        let targets = [target(1.0, t1, phases[0], phases[1]), target(2.0, t2, phases[2], phases[3])];
        match build_scattering_data(&targets) {
            Ok(data) => {
                for g in &targets {
                    let t = reconstruct_transmission(&data, g.k()).unwrap();
                    prop_assert!((t - g.t()).norm() <= 1e-3);
                }
            }
            Err(scattergate::Error::Infeasible(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
