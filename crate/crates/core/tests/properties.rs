use std::f64::consts::PI;

use dde_floquet::adjoint::{adjoint_for, gram, normalize, BilinearContext};
use dde_floquet::floquet::{det_m, find_exponents, FindOptions, FloquetError};
use dde_floquet::numerics::{c64, determinant, fourier_product, solve_linear, ComplexMatrix, FourierSeries};
use dde_floquet::oracle::{characteristic_roots, OracleError};
use dde_floquet::roots::{strip_map, SearchBox};
use dde_floquet::systems::{parametric_density, scalar_density};
use num_complex::Complex64;
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| ComplexMatrix::from_fn(n, n, |i, j| c64(v[i * n + j].0, v[i * n + j].1)))
}

fn series(cutoff: usize) -> impl Strategy<Value = FourierSeries> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * cutoff + 1)
        .prop_map(move |v| FourierSeries::from_fn(1, cutoff, |n, _| {
            let (re, im) = v[(n + cutoff as i64) as usize];
            c64(re, im)
        }))
}

/// Laplace expansion along the first row.
fn cofactor(a: &ComplexMatrix) -> Complex64 {
    let n = a.rows();
    if n == 1 {
        return a[(0, 0)];
    }
    (0..n)
        .map(|j| {
            let minor = ComplexMatrix::from_fn(n - 1, n - 1, |r, c| a[(r + 1, if c < j { c } else { c + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            a[(0, j)] * cofactor(&minor) * sign
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagonally_dominant_solve_has_small_residual(a in matrix(6), b in prop::collection::vec(-1.0f64..1.0, 6)) {
        let mut a = a;
        for i in 0..6 {
            a[(i, i)] += c64(7.0, 0.0);
        }
        let rhs: Vec<Complex64> = b.iter().map(|&v| c64(v, -v)).collect();
        let sol = solve_linear(&a, &rhs).unwrap();
        let back = a.mul_vec(&sol.x);
        for (r, b) in back.iter().zip(&rhs) {
            prop_assert!((r - b).norm() < 1e-12);
        }
    }

    #[test]
    fn determinant_is_multiplicative(a in matrix(4), b in matrix(4)) {
        let lhs = determinant(&(&a * &b));
        let rhs = determinant(&a) * determinant(&b);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn determinant_matches_cofactor_expansion(a in matrix(4)) {
        let exact = cofactor(&a);
        prop_assert!((determinant(&a) - exact).norm() < 1e-12 * (1.0 + exact.norm()));
    }

    #[test]
    fn grid_round_trip_reproduces_coefficients(f in series(6)) {
        let back = FourierSeries::project_samples(&f.sample(16), 6);
        for n in -6i64..=6 {
            prop_assert!((back.coeff(n, 0) - f.coeff(n, 0)).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_product_matches_pointwise_product(f in series(4), g in series(3), xi in 0.0f64..(2.0 * PI)) {
        let p = fourier_product(&f, &g, 7).unwrap();
        let direct = f.evaluate(xi)[0] * g.evaluate(xi)[0];
        prop_assert!((p.evaluate(xi)[0] - direct).norm() < 1e-12);
    }

    #[test]
    fn strip_map_lands_in_fundamental_strip(re in -5.0f64..5.0, im in -20.0f64..20.0) {
        let z = c64(re, im);
        let (s, m) = strip_map(z);
        prop_assert!(s.im > -0.5 && s.im <= 0.5);
        prop_assert!((z - s - c64(0.0, m as f64)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Constant coefficients: the continued fraction reduces to the
    /// characteristic equation.
    #[test]
    fn constant_coefficients_reproduce_characteristic_roots(a in -1.0f64..0.0, b in -1.2f64..-0.2, tau in 0.5f64..1.5) {
        let d = scalar_density(a, b, tau, 1.0);
        let bx = SearchBox::new([-1.5, 0.5], [-0.5, 0.5]);
        let found = match find_exponents(&d, &bx, 4, 4, &FindOptions::default()) {
            Ok(spec) => spec.exponents(),
            Err(FloquetError::NoRootsInBox { .. }) => Vec::new(),
            Err(e) => panic!("{e}"),
        };
        let wide = SearchBox::new([-1.6, 0.6], [-14.0, 14.0]).with_grid(45, 281);
        let exact = match characteristic_roots(&ComplexMatrix::from_real(1, 1, &[a]), &ComplexMatrix::from_real(1, 1, &[b]), 1.0, tau, &wide) {
            Ok(r) => r,
            Err(OracleError::NoRootsInBox { .. }) => Vec::new(),
            Err(e) => panic!("{e}"),
        };
        let exact: Vec<Complex64> = exact.into_iter().map(|z| strip_map(z).0).collect();
        for l in &found {
            prop_assert!(exact.iter().any(|e| (e - l).norm() < 1e-9), "{l} not in {exact:?}");
        }
        for e in exact.iter().filter(|e| e.re > -1.45 && e.re < 0.45) {
            prop_assert!(found.iter().any(|l| (e - l).norm() < 1e-9), "{e} missed: {found:?}");
        }
    }

    /// With coupled harmonics `det M` vanishes again at `λ + i`, and the
    /// normalized adjoint pairs are biorthonormal.
    #[test]
    fn parametric_spectrum_invariants(a in -0.6f64..-0.1, c in 0.05f64..0.3, b in -0.8f64..-0.2) {
        let d = parametric_density(a, c, b, 1.0);
        let spec = match find_exponents(&d, &SearchBox::new([-1.5, 0.5], [-0.5, 0.5]), 8, 8, &FindOptions::default()) {
            Ok(spec) => spec,
            Err(FloquetError::NoRootsInBox { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for m in &spec.modes {
            let shifted = det_m(&d, m.raw_lambda + c64(0.0, 1.0), 8, 8).unwrap();
            prop_assert!(shifted.norm() < 1e-8, "{}: {shifted}", m.lambda);
        }
        let ctx = BilinearContext::new(&d);
        let pairs: Vec<_> = spec.modes.iter().map(|m| normalize(&ctx, &adjoint_for(&d, m).unwrap(), m).unwrap()).collect();
        let g = gram(&ctx, &pairs, 0.4);
        for i in 0..pairs.len() {
            for j in 0..pairs.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g[(i, j)] - target).norm() < 1e-8, "G[{i},{j}] = {}", g[(i, j)]);
            }
        }
    }
}
