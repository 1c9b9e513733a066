use dde_floquet::model::{linearize_about_orbit, rescale};
use dde_floquet::numerics::{c64, FourierSeries};
use dde_floquet::systems::van_der_pol;
use num_complex::Complex64;

#[test]
fn rescaled_van_der_pol_divides_by_frequency() {
    let lc = van_der_pol(0.5, 0.1, 2).unwrap();
    let r = rescale(&lc.system, lc.omega).unwrap();
    assert!((r.tau - lc.omega * 0.5).abs() < 1e-15);
    for (a, b) in lc.system.terms.iter().zip(&r.terms) {
        assert_eq!((&a.now, &a.delayed, a.target), (&b.now, &b.delayed, b.target));
        assert!((b.coeff - a.coeff / lc.omega).abs() < 1e-15);
    }
    // Same vector field, up to the factor 1/ω.
    let (now, del) = ([0.4, -1.1], [0.9, 0.3]);
    let (mut f, mut g) = ([0.0; 2], [0.0; 2]);
    lc.system.rhs(&now, &del, &mut f);
    r.rhs(&now, &del, &mut g);
    for i in 0..2 {
        assert!((g[i] - f[i] / lc.omega).abs() < 1e-15);
    }
}

/// Harmonics of a central-difference Jacobian sampled along the leading
/// harmonic orbit `A₀ cos ξ`.
#[test]
fn linearization_matches_finite_difference_jacobian() {
    let lc = van_der_pol(0.5, 0.1, 1).unwrap();
    let x0 = lc.expansion.orders[0].clone();
    let state = FourierSeries::stack(&[x0.clone(), x0.derivative().scale(c64(lc.omega, 0.0))]);
    let density = linearize_about_orbit(&lc.system, &state, lc.omega, None).unwrap();
    assert_eq!(density.bandwidth(), 2);
    let (m, eps, lag) = (64usize, 1e-6, lc.omega * lc.system.tau);
    for (slot, delayed) in [(0usize, true), (1, false)] {
        assert_eq!(density.delays()[slot], if delayed { -lag } else { 0.0 });
        let samples: Vec<Vec<Complex64>> = (0..m)
            .map(|j| {
                let xi = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                let now = state.evaluate_real(xi);
                let del = state.evaluate_real(xi - lag);
                let mut jac = Vec::with_capacity(4);
                for row in 0..2 {
                    for col in 0..2 {
                        let eval = |h: f64| {
                            let (mut a, mut b) = (now.clone(), del.clone());
                            if delayed { b[col] += h } else { a[col] += h }
                            let mut out = [0.0; 2];
                            lc.system.rhs(&a, &b, &mut out);
                            out[row]
                        };
                        jac.push(c64((eval(eps) - eval(-eps)) / (2.0 * eps) / lc.omega, 0.0));
                    }
                }
                jac
            })
            .collect();
        let projected = FourierSeries::project_samples(&samples, 4);
        for k in -4i64..=4 {
            for e in 0..4 {
                let exact = density.coeff(k, slot).map_or(c64(0.0, 0.0), |c| c[(e / 2, e % 2)]);
                let fd = projected.coeff(k, e);
                assert!((exact - fd).norm() < 1e-8, "slot {slot} k {k} entry {e}: {exact} vs {fd}");
            }
        }
    }
}
