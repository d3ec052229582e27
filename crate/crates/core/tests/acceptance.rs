//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use scattergate::algebra::{gate_distance, gates, phase_family, tau, Su11Element};
use scattergate::direct1d::{em_spin_smatrix, scan, solve_scattering, BoundState, MomentumGrid, PotentialShape, PotentialSpec};
use scattergate::dispersion::{
    build_scattering_data, reconstruct_transmission, reflection_data_from_potential, reflection_grid, GateTarget,
    ReflectionData, TransmissionReconstructor,
};
use scattergate::fuchsian::{
    example4_system, gauge_conjugate, lorentzian_keyholes, lorentzian_sum_to_fuchsian, lorentzian_to_fuchsian, monodromy,
    monodromy_product, pv_monodromy_example4, FuchsianSystem, Loop, Orientation,
};
use scattergate::glm::{
    invert_reflection_data, marchenko_kernel, recover_pulse, solve_marchenko, uniform_grid, DiscreteDatum,
    TwoLevelScatteringData,
};
use scattergate::twolevel::{
    count_a_zeros, dipole_hamiltonian, dipole_rect_smatrix, entanglement, f_matrix, f_matrix_at, find_a_zero,
    scattering_matrix, scattering_scan, DipoleParams, Envelope, PulseSpec,
};
use scattergate::{c64, Complex64};

type Check = Result<(bool, String), String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn max_entry_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn m2(e: [Complex64; 4]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &e)
}

/// Exact `(a, b)` for a constant `Q = q0` on `[x0, x0 + len]` by matching.
fn square_well_ab(q0: f64, x0: f64, len: f64, k: f64) -> (Complex64, Complex64) {
    let i = c64(0.0, 1.0);
    let kappa = c64(k * k + q0, 0.0).sqrt();
    let phi0 = (-i * k * x0).exp();
    let dphi0 = -i * k * phi0;
    let (c, s) = ((kappa * len).cos(), (kappa * len).sin());
    let phi1 = phi0 * c + dphi0 * s / kappa;
    let dphi1 = -phi0 * kappa * s + dphi0 * c;
    let x1 = x0 + len;
    let ik = i * k;
    let a = (i * k * x1).exp() * (ik * phi1 - dphi1) / (2.0 * ik);
    let b = (-i * k * x1).exp() * (ik * phi1 + dphi1) / (2.0 * ik);
    (a, b)
}

fn tau_oracle(a: Complex64, b: Complex64) -> DMatrix<Complex64> {
    m2([b.conj() / a, a.inv(), a.inv(), -b / a])
}

/// Taylor series for `exp(m)` with scaling and squaring.
fn exp_series(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let s = 8;
    let scaled = m / c64(2f64.powi(s), 0.0);
    let n = m.nrows();
    let mut term = DMatrix::<Complex64>::identity(n, n);
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

fn c1_hadamard() -> Check {
    let m = Su11Element::new(c64(2f64.sqrt(), 0.0), c64(1.0, 0.0)).map_err(err)?;
    let s = tau(&m);
    let h = FRAC_1_SQRT_2;
    let d = max_entry_diff(s.matrix(), &m2([c64(h, 0.0), c64(h, 0.0), c64(h, 0.0), c64(-h, 0.0)]));
    Ok((d <= 1e-14, format!("max |τ(√2,1) − H| = {d:.1e}")))
}

fn c2_gate_rate() -> Check {
    let z = gates::phase(PI);
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut d100 = 0.0;
    for n in 1..=100 {
        let nf = n as f64;
        let m = Su11Element::new(c64((nf * nf + 1.0).sqrt(), 0.0), c64(nf, 0.0)).map_err(err)?;
        let d = gate_distance(&tau(&m), &z).map_err(err)?;
        monotone &= d < prev;
        prev = d;
        d100 = d;
    }
    let phi = PI / 3.0;
    let target = gates::phase(phi + PI);
    let mut prev_p = f64::INFINITY;
    let mut monotone_p = true;
    let mut p100 = 0.0;
    for n in 1..=100 {
        let d = gate_distance(&tau(&phase_family(n as f64, phi)), &target).map_err(err)?;
        monotone_p &= d < prev_p;
        prev_p = d;
        p100 = d;
    }
    Ok((
        monotone && d100 <= 0.015 && monotone_p && p100 <= 0.02,
        format!("NOT family monotone={monotone} d(100)={d100:.4}; phase family monotone={monotone_p} d(100)={p100:.4}"),
    ))
}

fn c3_direct_oracle() -> Check {
    let well = PotentialSpec::square_well(-3.0, 0.0, 1.0).map_err(err)?;
    let t2 = solve_scattering(&well, 2.0).map_err(err)?.transmission.norm_sqr();
    let (a, _) = square_well_ab(-3.0, 0.0, 1.0, 2.0);
    let oracle = 1.0 / a.norm_sqr();
    let sech = PotentialSpec::sech_squared(1.0, 0.0).map_err(err)?;
    let grid = MomentumGrid::linspace(0.5, 5.0, 64).map_err(err)?;
    let coeffs = scan(&sech, &grid).map_err(err)?;
    let r_max = coeffs.iter().map(|c| c.reflection.norm()).fold(0.0, f64::max);
    let t1 = solve_scattering(&sech, 1.0).map_err(err)?.transmission;
    let dt = (t1 - c64(0.0, 1.0)).norm();
    let pass = (t2 - 0.715).abs() <= 1e-3 && (t2 - oracle).abs() <= 1e-6 && r_max <= 1e-6 && dt <= 1e-6;
    Ok((pass, format!("|T(2)|² = {t2:.6} (oracle {oracle:.6}); sech² max|R| = {r_max:.1e}, |T(1) − i| = {dt:.1e}")))
}

fn acceptance_potentials() -> Result<Vec<(&'static str, PotentialSpec)>, String> {
    let gauss_x: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
    let gauss_q: Vec<f64> = gauss_x.iter().map(|x| 1.5 * (-x * x).exp() * (1.0 + 0.3 * x)).collect();
    Ok(vec![
        ("square well", PotentialSpec::square_well(-3.0, 0.0, 1.0).map_err(err)?),
        ("sech²", PotentialSpec::sech_squared(1.0, 0.0).map_err(err)?),
        ("sech² order 2", PotentialSpec::new(PotentialShape::SechSquared { eta: 1.0, center: 0.5, order: 2.0 }).map_err(err)?),
        ("Lorentzian sum", PotentialSpec::new(PotentialShape::LorentzianSum { pairs: vec![[1.0, 0.5], [2.0, -0.3]] }).map_err(err)?),
        ("tabulated", PotentialSpec::tabulated(gauss_x, gauss_q).map_err(err)?),
    ])
}

fn c4_invariants() -> Check {
    let grid = MomentumGrid::linspace(0.5, 5.0, 64).map_err(err)?;
    let mut su11: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for (_, q) in acceptance_potentials()? {
        for c in scan(&q, &grid).map_err(err)? {
            let (a, b) = (c.m.a(), c.m.b());
            su11 = su11.max((a.norm_sqr() - b.norm_sqr() - 1.0).abs());
            unit = unit.max(c.smatrix().as_mat().unitarity_defect());
        }
    }
    Ok((su11 <= 1e-8 && unit <= 1e-8, format!("max ||a|²−|b|²−1| = {su11:.1e}, max ‖S†S−I‖ = {unit:.1e} over 5 potentials × 64 k")))
}

fn c5_dispersion() -> Check {
    let q = PotentialSpec::square_well(-3.0, 0.0, 1.0).map_err(err)?;
    let data = reflection_data_from_potential(&q, &reflection_grid(30.0, 0.01, 2000.0).map_err(err)?, 5.0).map_err(err)?;
    let rec = TransmissionReconstructor::new(&data).map_err(err)?;
    let mut dmod: f64 = 0.0;
    let mut dphase: f64 = 0.0;
    for i in 0..=45 {
        let k = 0.5 + 0.1 * i as f64;
        let direct = solve_scattering(&q, k).map_err(err)?.transmission;
        let got = rec.transmission(k).map_err(err)?;
        dmod = dmod.max((got.norm() - direct.norm()).abs());
        dphase = dphase.max((got / direct).arg().abs());
    }
    let bs = ReflectionData::reflectionless(vec![BoundState::new(1.0, 1.0).map_err(err)?], 10.0, 201).map_err(err)?;
    let mut dbs: f64 = 0.0;
    for i in 0..=45 {
        let k = 0.5 + 0.1 * i as f64;
        let exact = c64(k, 1.0) / c64(k, -1.0);
        dbs = dbs.max((reconstruct_transmission(&bs, k).map_err(err)? - exact).norm());
    }
    Ok((
        dmod <= 2e-3 && dphase <= 2e-3 && dbs <= 1e-10,
        format!("square well: max Δ|T| = {dmod:.1e}, max Δarg T = {dphase:.1e}; bound state: {dbs:.1e}"),
    ))
}

fn c6_one_soliton() -> Check {
    let data = ReflectionData::reflectionless(vec![BoundState::new(1.0, 1.0).map_err(err)?], 10.0, 201).map_err(err)?;
    let kernel = marchenko_kernel(&data, &uniform_grid(-12.0, 40.0, 0.01)).map_err(err)?;
    let xs = uniform_grid(-5.0, 5.0, 0.05);
    let rec = solve_marchenko(&kernel, &xs).map_err(err)?;
    let d = xs
        .iter()
        .zip(&rec.q)
        .map(|(x, q)| (q - 2.0 / x.cosh().powi(2)).abs())
        .fold(0.0, f64::max);
    Ok((d <= 2e-4, format!("sup |Q − 2sech²x| on [−5,5] = {d:.1e}")))
}

fn c7_pipeline() -> Check {
    let h = FRAC_1_SQRT_2;
    let targets: Vec<GateTarget> =
        [1.0, 2.0].iter().map(|&k| GateTarget::new(k, c64(h, 0.0), c64(h, 0.0))).collect::<Result<_, _>>().map_err(err)?;
    let data = build_scattering_data(&targets).map_err(err)?;
    let rec = invert_reflection_data(&data, Some(30.0), 0.1).map_err(err)?;
    let pot = rec.to_potential().map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for t in &targets {
        let c = solve_scattering(&pot, t.k()).map_err(err)?;
        let e = (c.transmission - t.t()).norm().max((c.reflection - t.r()).norm());
        worst = worst.max(e);
        parts.push(format!("k={}: T={:.4} R={:.4}", t.k(), c.transmission, c.reflection));
    }
    Ok((worst <= 1e-2, format!("{}; max error {worst:.1e}", parts.join(", "))))
}

fn c8_block_structure() -> Check {
    let u = PotentialSpec::square_well(-3.0, 0.0, 1.0).map_err(err)?;
    let v = PotentialSpec::square_well(2.0, -0.5, 1.5).map_err(err)?;
    let mut block: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    for k in [0.7, 1.3, 2.0, 3.5] {
        let s = em_spin_smatrix(&u, &v, k).map_err(err)?;
        let s = s.matrix();
        let su = solve_scattering(&u, k).map_err(err)?.smatrix();
        let sv = solve_scattering(&v, k).map_err(err)?.smatrix();
        block = block.max(max_entry_diff(&s.view((0, 0), (2, 2)).into_owned(), su.matrix()));
        block = block.max(max_entry_diff(&s.view((2, 2), (2, 2)).into_owned(), sv.matrix()));
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3), (2, 0), (2, 1), (3, 0), (3, 1)] {
            off = off.max(s[(i, j)].norm());
        }
        let (au, bu) = square_well_ab(-3.0, 0.0, 1.0, k);
        let (av, bv) = square_well_ab(2.0, -0.5, 1.5, k);
        oracle = oracle.max(max_entry_diff(su.matrix(), &tau_oracle(au, bu)));
        oracle = oracle.max(max_entry_diff(sv.matrix(), &tau_oracle(av, bv)));
    }
    Ok((
        block <= 1e-10 && off == 0.0 && oracle <= 1e-6,
        format!("blocks vs separate solves {block:.1e}, off-diagonal {off:.1e}, blocks vs matching oracle {oracle:.1e}"),
    ))
}

fn c9_two_level() -> Check {
    let p = PulseSpec::lorentzian(1.0, 0.25, Some(0.0)).map_err(err)?;
    let s = scattering_matrix(&p, 0.0).map_err(err)?;
    let z = c64(0.0, 0.0);
    let d = max_entry_diff(s.matrix(), &m2([z, c64(0.0, -1.0), c64(0.0, -1.0), z]));
    // Equal area π/2: a rectangle of height 1/4 and half-width π.
    let rect = PulseSpec::rectangular(c64(0.25, 0.0), PI, Some(0.0)).map_err(err)?;
    let area = rect.area().ok_or("rectangle has no area")?.re;
    let sr = scattering_matrix(&rect, 0.0).map_err(err)?;
    let da = max_entry_diff(sr.matrix(), s.matrix());
    // exp(−i·area·σ₁) from the closed form.
    let (c, si) = (area.cos(), area.sin());
    let closed = m2([c64(c, 0.0), c64(0.0, -si), c64(0.0, -si), c64(c, 0.0)]);
    let dc = max_entry_diff(sr.matrix(), &closed);
    Ok((
        d <= 1e-6 && da <= 1e-6 && dc <= 1e-6,
        format!("Lorentzian S vs [[0,−i],[−i,0]] {d:.1e}; equal-area rectangle {da:.1e} (closed form {dc:.1e})"),
    ))
}

fn c10_pulse_round_trip() -> Check {
    let datum = DiscreteDatum::new(c64(0.0, 1.0), c64(-1.0, 0.0)).map_err(err)?;
    let data = TwoLevelScatteringData::discrete_only(vec![datum], 10.0, 101).map_err(err)?;
    let rec = recover_pulse(&data, &uniform_grid(-10.0, 10.0, 0.05)).map_err(err)?;
    let pulse = rec.to_pulse().map_err(err)?;
    let zero = find_a_zero(&pulse, c64(0.1, 0.9)).map_err(err)?;
    let dz = (zero - c64(0.0, 1.0)).norm();
    let count = count_a_zeros(&pulse, c64(0.0, 1.5), 1.4, 128).map_err(err)?;
    let zetas: Vec<f64> = (0..=40).map(|i| -4.0 + 0.2 * i as f64).collect();
    let ss = scattering_scan(&pulse, &zetas).map_err(err)?;
    let bmax = ss.iter().map(|s| s.get(1, 0).norm()).fold(0.0, f64::max);
    Ok((
        dz <= 1e-3 && count == 1 && bmax <= 5e-3,
        format!("zero of a at {zero:.6} (|Δ| = {dz:.1e}), {count} zero(s) in the disc, max |b| = {bmax:.1e}"),
    ))
}

fn c11_entanglement() -> Check {
    let p = DipoleParams::default();
    let s2 = entanglement(&p).map_err(err)?.singular_values[1];
    let p0 = DipoleParams { y: 0.0, ..p };
    let s2_0 = entanglement(&p0).map_err(err)?.singular_values[1];
    let h = 1e-4;
    let fp = f_matrix_at(&p, h).map_err(err)?;
    let fm = f_matrix_at(&p, -h).map_err(err)?;
    let deriv = (fp.matrix() - fm.matrix()) / c64(2.0 * h, 0.0);
    let h00 = dipole_hamiltonian(&p, c64(0.0, 0.0), 0.0).map_err(err)?;
    let hxy = dipole_hamiltonian(&p, p.x, p.y).map_err(err)?;
    let expected = (h00.matrix() - hxy.matrix()) * c64(0.0, 2.0);
    let dd = max_entry_diff(&deriv, &expected);
    let rect = dipole_rect_smatrix(&p).map_err(err)?;
    let dr = max_entry_diff(rect.matrix(), f_matrix(&p).map_err(err)?.matrix());
    Ok((
        s2 > 1e-3 && s2_0 <= 1e-10 && dd <= 1e-5 && dr <= 1e-8,
        format!("s₂ = {s2:.3e} (y=0: {s2_0:.1e}); F′(0) error {dd:.1e}; rectangular S vs F {dr:.1e}"),
    ))
}

fn c12_monodromy() -> Check {
    // Example 3 correspondence.
    let (sys, lp) = lorentzian_to_fuchsian(2.0, 0.25).map_err(err)?;
    let g = gauge_conjugate(&monodromy(&sys, &lp).map_err(err)?).map_err(err)?;
    let s = scattering_matrix(&PulseSpec::lorentzian(2.0, 0.25, Some(0.0)).map_err(err)?, 0.0).map_err(err)?;
    let d3 = max_entry_diff(g.matrix(), s.matrix());

    // One pole with a non-diagonal residue.
    let a = [[c64(0.1, 0.05), c64(0.2, 0.0)], [c64(0.05, -0.1), c64(-0.15, 0.0)]];
    let one = FuchsianSystem::new(vec![c64(0.3, -0.2)], vec![a]).map_err(err)?;
    let m1 = monodromy(&one, &Loop::circle(c64(0.3, -0.2), 0.7, Orientation::Ccw)).map_err(err)?;
    let am = m2([a[0][0], a[0][1], a[1][0], a[1][1]]);
    let d1 = max_entry_diff(m1.matrix(), &exp_series(&(am * c64(0.0, 2.0 * PI))));

    // Product over keyholes against the two-level S-matrix of the sum.
    let pairs = [[0.5, 0.1], [3.0, 0.15]];
    let (sum_sys, _) = lorentzian_sum_to_fuchsian(&pairs).map_err(err)?;
    let loops = lorentzian_keyholes(&pairs, c64(1.0, 0.0), 0.05).map_err(err)?;
    let prod = gauge_conjugate(&monodromy_product(&sum_sys, &loops).map_err(err)?).map_err(err)?;
    let pulse = PulseSpec::new(Envelope::LorentzianSum { pairs: pairs.to_vec() }, Some(0.0)).map_err(err)?;
    let dp = max_entry_diff(prod.matrix(), scattering_matrix(&pulse, 0.0).map_err(err)?.matrix());

    // Example 4: on-contour pole at z = 0, principal value.
    let ex = example4_system(2.0).map_err(err)?;
    let pv = gauge_conjugate(&pv_monodromy_example4(2.0).map_err(err)?).map_err(err)?;
    let odd = PulseSpec::new(Envelope::OddLorentzian { a: 2.0, c: 1.0 }, Some(0.0)).map_err(err)?;
    let s4 = scattering_matrix(&odd, 0.0).map_err(err)?;
    let d4 = max_entry_diff(pv.matrix(), s4.matrix());
    let closed = gauge_conjugate(&ex.closed_form().map_err(err)?).map_err(err)?;
    let d4c = max_entry_diff(pv.matrix(), closed.matrix());

    Ok((
        d3 <= 1e-6 && d1 <= 1e-8 && dp <= 1e-6 && d4 <= 1e-3,
        format!("Example 3 {d3:.1e}; one pole {d1:.1e}; product {dp:.1e}; Example 4 PV vs window limit {d4:.1e} (vs closed form {d4c:.1e})"),
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "Hadamard exactness", Duration::from_secs(1), c1_hadamard),
        (2, "gate approximation rate", Duration::from_secs(1), c2_gate_rate),
        (3, "direct-solver oracle", Duration::from_secs(5), c3_direct_oracle),
        (4, "SU(1,1) and unitarity invariants", Duration::from_secs(10), c4_invariants),
        (5, "dispersion reconstruction", Duration::from_secs(10), c5_dispersion),
        (6, "Marchenko one-soliton", Duration::from_secs(10), c6_one_soliton),
        (7, "gate-to-potential round trip", Duration::from_secs(60), c7_pipeline),
        (8, "spin S-matrix block structure", Duration::from_secs(5), c8_block_structure),
        (9, "two-level Lorentzian and pulse area", Duration::from_secs(5), c9_two_level),
        (10, "pulse round trip", Duration::from_secs(60), c10_pulse_round_trip),
        (11, "dipole entanglement", Duration::from_secs(5), c11_entanglement),
        (12, "monodromy correspondence", Duration::from_secs(30), c12_monodromy),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && elapsed <= budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} {name}: {detail} [{:.2} s / {} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
