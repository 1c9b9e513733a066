use std::f64::consts::PI;

use dde_floquet::floquet::{scan_shifts, assemble_m, det_m, extract_mode, find_exponents, ladder_operators, FindOptions};
use dde_floquet::model::{build_l, FourierMatrixDensity};
use dde_floquet::numerics::{determinant, solve_matrix, ComplexMatrix};
use dde_floquet::roots::SearchBox;
use dde_floquet::systems::{delay_oscillator_density, parametric_density, parametric_reference, scalar_density, van_der_pol};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn diag_block(table: &dde_floquet::model::LMatrixTable, n: i64) -> ComplexMatrix {
    let mut a = table.get(0, n).unwrap().clone();
    let s = table.lambda() + c(0.0, n as f64);
    for i in 0..a.rows() {
        a[(i, i)] -= s;
    }
    a
}

#[test]
fn constant_coefficients_decouple() {
    let d = scalar_density(0.3, -0.7, 1.0, 1.0);
    let lam = c(-0.2, 0.1);
    let set = ladder_operators(&d, lam, 6, 6).unwrap();
    for m in -12..=12 {
        if m != 0 {
            assert_eq!(set.s0(m).max_abs(), 0.0);
        }
    }
    let l00 = build_l(&d, lam, 0).unwrap().get(0, 0).unwrap()[(0, 0)];
    let m = assemble_m(&d, lam, 6, 6).unwrap();
    assert!((m[(0, 0)] - (l00 - lam)).norm() < 1e-15);
}

#[test]
fn closure_vanishes_at_characteristic_root() {
    let m = assemble_m(&delay_oscillator_density(), c(0.0, PI / 2.0), 4, 4).unwrap();
    assert!(m[(0, 0)].norm() < 1e-15);
}

#[test]
fn one_level_by_hand() {
    // Tiny coupling: S^{+1}_0 ≈ −[L_{0,1} − (λ+i)]⁻¹ L_{1,0}.
    let cpl = 1e-4;
    let d = parametric_density(-0.3, 2.0 * cpl, -0.5, 1.0);
    let lam = c(-0.4, 0.2);
    let set = ladder_operators(&d, lam, 6, 6).unwrap();
    let t = &set.table;
    let hand = -t.get(1, 0).unwrap()[(0, 0)] / (t.get(0, 1).unwrap()[(0, 0)] - lam - c(0.0, 1.0));
    let s = set.step(0, true).unwrap()[(0, 0)];
    assert!((s - hand).norm() < 10.0 * cpl.powi(3), "{s} vs {hand}");
}

#[test]
fn two_step_ladder_matches_recurrence_row() {
    let d = parametric_reference();
    for lam in [c(-0.5, 0.3), c(-0.889, 0.06), c(0.2, -0.4)] {
        let set = ladder_operators(&d, lam, 8, 8).unwrap();
        let t = &set.table;
        for n in 0..5i64 {
            let s1 = set.step(n, true).unwrap();
            let composed = set.step(n + 1, true).unwrap() * s1;
            let mut rhs = &diag_block(t, n + 1) * s1;
            rhs += t.get(1, n).unwrap();
            let direct = solve_matrix(t.get(-1, n + 2).unwrap(), &rhs).unwrap().scale(c(-1.0, 0.0));
            assert!((&composed - &direct).max_abs() < 1e-8 * (1.0 + direct.max_abs()), "n={n}");
        }
    }
}

#[test]
fn pentadiagonal_ladders_satisfy_recurrence() {
    // K = 2 density: every component from S^m_0 solves the interior rows.
    let coeff = |v: &[f64]| v.iter().map(|&x| ComplexMatrix::from_real(1, 1, &[x])).collect::<Vec<_>>();
    let d = FourierMatrixDensity::new(
        1,
        1.0,
        vec![(-1.0, coeff(&[0.02, 0.0, -0.5, 0.0, 0.02])), (0.0, coeff(&[0.03, 0.05, -0.3, 0.05, 0.03]))],
    )
    .unwrap();
    let lam = c(-0.6, 0.15);
    let set = ladder_operators(&d, lam, 10, 10).unwrap();
    let t = &set.table;
    let phi = |m: i64| set.s0(m).clone();
    for n in -8i64..=8 {
        if n == 0 {
            continue;
        }
        let mut acc = &diag_block(t, n) * &phi(n);
        for k in [-2i64, -1, 1, 2] {
            acc += &(t.get(k, n - k).unwrap() * &phi(n - k));
        }
        assert!(acc.max_abs() < 1e-12, "row {n}: {}", acc.max_abs());
    }
}

#[test]
fn undelayed_ode_root() {
    let s = find_exponents(&scalar_density(-1.0, 0.0, 1.0, 2.0), &SearchBox::default(), 6, 6, &FindOptions::default()).unwrap();
    assert_eq!(s.modes.len(), 1);
    assert!((s.modes[0].lambda - c(-0.5, 0.0)).norm() < 1e-12);
}

#[test]
fn neutral_delay_pair() {
    let bx = SearchBox::new([-1.0, 1.0], [-0.5, 0.5]);
    let s = find_exponents(&delay_oscillator_density(), &bx, 6, 6, &FindOptions::default()).unwrap();
    let lam: Vec<Complex64> = s.exponents();
    assert_eq!(lam.len(), 2);
    let target = PI / 2.0 - 2.0;
    assert!((lam[0] - c(0.0, target)).norm() < 1e-10);
    assert!((lam[1] - c(0.0, -target)).norm() < 1e-10);
    let raw: Vec<f64> = s.modes.iter().map(|m| m.raw_lambda.im).collect();
    assert!(raw.iter().any(|r| (r - PI / 2.0).abs() < 1e-10) && raw.iter().any(|r| (r + PI / 2.0).abs() < 1e-10));
}

#[test]
fn parametric_modes_have_small_residual_and_conjugate_pairs() {
    let s = find_exponents(&parametric_reference(), &SearchBox::default(), 8, 8, &FindOptions::default()).unwrap();
    assert!(!s.modes.is_empty());
    for m in &s.modes {
        assert!(m.residual < 1e-8, "{}", m.residual);
        assert!(m.converged);
        assert!(s.modes.iter().any(|o| (o.lambda - m.lambda.conj()).norm() < 1e-10));
    }
}

#[test]
fn index_shift_covariance() {
    let d = parametric_reference();
    let s = find_exponents(&d, &SearchBox::default(), 8, 8, &FindOptions::default()).unwrap();
    for m in &s.modes {
        let shifted = m.raw_lambda + c(0.0, 1.0);
        let det = determinant(&assemble_m(&d, shifted, 8, 8).unwrap()).norm();
        assert!(det < 1e-8, "{det}");
        let e = extract_mode(&d, shifted, 8, 8).unwrap();
        // Same strip-indexed components up to scale.
        let scale = (m.first_index..=m.last_index())
            .filter_map(|n| Some((m.component(n)?[0], e.component(n)?[0])))
            .max_by(|a, b| a.0.norm().total_cmp(&b.0.norm()))
            .map(|(a, b)| b / a)
            .unwrap();
        for n in e.first_index.max(m.first_index)..=e.last_index().min(m.last_index()) {
            let (a, b) = (m.component(n).unwrap()[0], e.component(n).unwrap()[0]);
            assert!((a * scale - b).norm() < 1e-8, "n={n}");
        }
    }
}

#[test]
fn tridiagonal_route_matches_banded_route() {
    use dde_floquet::risken;
    let d = parametric_reference();
    let opts = FindOptions::default();
    let cf = find_exponents(&d, &SearchBox::default(), 8, 8, &opts).unwrap();
    let rk = risken::spectrum(&d, &SearchBox::default(), 8, 8, &opts).unwrap();
    assert_eq!(cf.modes.len(), rk.roots.len());
    for (a, b) in cf.modes.iter().zip(&rk.roots) {
        assert!((a.lambda - b.lambda).norm() < 1e-10, "{} vs {}", a.lambda, b.lambda);
    }
}

#[test]
fn zero_mode_determinant_scales_with_orbit_defect() {
    // The zero mode sits in harmonics ±1, so it is resolved at λ = ±i
    // (same exponent mod i); M(0) itself is near a pole of the closure.
    for order in [1usize, 2, 3] {
        for mu in [0.025, 0.05, 0.1] {
            let lc = van_der_pol(0.5, mu, order).unwrap();
            let d = lc.density().unwrap();
            let up = det_m(&d, c(0.0, 1.0), 8, 8).unwrap();
            let down = det_m(&d, c(0.0, -1.0), 8, 8).unwrap();
            assert!(up.norm() <= 2.0 * mu.powi(order as i32 + 1), "P = {order}, μ = {mu}: {}", up.norm());
            assert!((up - down.conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn tridiagonal_route_converges_in_depth() {
    use dde_floquet::risken;
    let d = parametric_reference();
    let opts = FindOptions::default();
    let at = |depth| risken::spectrum(&d, &SearchBox::default(), 8, depth, &opts).unwrap().exponents();
    let (a, b) = (at(10), at(11));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn every_root_obeys_the_harmonic_bound() {
    let d = delay_oscillator_density();
    let bx = SearchBox::default();
    let bound = d.harmonic_bound(bx.re[0]);
    assert!((bound - PI / 2.0 * 3f64.exp()).abs() < 1e-12);
    assert!(scan_shifts(&d, &bx, &FindOptions::default()) as f64 >= bound);
    let s = find_exponents(&d, &bx, 4, 4, &FindOptions::default()).unwrap();
    // Conjugate pairs of λ + (π/2) e^{−λ} = 0 with Re λ ≥ −3.
    assert_eq!(s.modes.len(), 10);
    for m in &s.modes {
        assert!(m.raw_lambda.norm() <= d.harmonic_bound(m.lambda.re) + 1e-9, "{}", m.raw_lambda);
    }
}
