//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion
//! (`cargo test --test acceptance -- --nocapture`) and fails if any does.

use std::f64::consts::PI;
use std::time::Instant;

use dde_floquet::adjoint::{adjoint_for, gram, normalize, BilinearContext};
use dde_floquet::floquet::{det_m, extract_mode, find_exponents, refine_root, FindOptions, FloquetMode};
use dde_floquet::model::rescale;
use dde_floquet::numerics::{c64, ComplexMatrix};
use dde_floquet::orbit::{expand_pl, expand_shohat, orbit_to_state, OrbitOptions, Oscillator};
use dde_floquet::oracle::{
    characteristic_roots, integrate_mos, monodromy_exponents, orbit_residual, DelayField, MonodromyOptions, SegmentState, SystemField,
};
use dde_floquet::risken;
use dde_floquet::roots::{strip_distance, strip_map, NewtonOutcome, SearchBox};
use dde_floquet::systems::{delay_oscillator, delay_oscillator_density, parametric_reference, van_der_pol};
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn s3_modes() -> Vec<FloquetMode> {
    find_exponents(&parametric_reference(), &SearchBox::default(), 8, 8, &FindOptions::default()).unwrap().modes
}

fn max_pairwise(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().map(|x| b.iter().map(|y| strip_distance(*x, *y)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

fn zero_mode() -> Outcome {
    let lc = van_der_pol(0.5, 0.1, 2).map_err(|e| e.to_string())?;
    let d = lc.density().map_err(|e| e.to_string())?;
    let spec = find_exponents(&d, &SearchBox::default(), 8, 8, &FindOptions::default()).map_err(|e| e.to_string())?;
    let m = spec.modes.iter().min_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm())).ok_or("no modes")?;
    let dq = lc.state.derivative();
    let (mut dot, mut nm, mut nq) = (c64(0.0, 0.0), 0.0, 0.0);
    for n in m.first_index..=m.last_index() {
        for (i, phi) in m.component(n).unwrap().iter().enumerate() {
            let q = dq.coeff(n, i);
            dot += phi.conj() * q;
            nm += phi.norm_sqr();
            nq += q.norm_sqr();
        }
    }
    let cos = dot.norm() / (nm * nq).sqrt();
    check(m.lambda.norm() < 5e-3 && cos > 0.999, format!("|λ₀| = {:.2e}, cosine similarity {cos:.6}", m.lambda.norm()))
}

fn constant_coefficients() -> Outcome {
    let spec = find_exponents(&delay_oscillator_density(), &SearchBox::default(), 8, 8, &FindOptions::default()).map_err(|e| e.to_string())?;
    let a = ComplexMatrix::zeros(1, 1);
    let b = ComplexMatrix::diagonal(&[c64(-PI / 2.0, 0.0)]);
    // |λ| ≤ (π/2) e^{−Re λ} bounds every root with Re λ ≥ −3.
    let wide = SearchBox::new([-3.2, 1.0], [-34.0, 34.0]).with_grid(43, 681);
    let exact = characteristic_roots(&a, &b, 1.0, 1.0, &wide).map_err(|e| e.to_string())?;
    let exact: Vec<Complex64> = exact.into_iter().filter(|z| z.re >= -3.0).map(|z| strip_map(z).0).collect();
    let found = spec.exponents();
    let err = max_pairwise(&found, &exact).max(max_pairwise(&exact, &found));
    let neutral = [c64(0.0, PI / 2.0 - 2.0), c64(0.0, 2.0 - PI / 2.0)];
    let pair = max_pairwise(&neutral, &found);
    check(
        found.len() == exact.len() && found.len() >= 2 && err < 1e-10 && pair < 1e-10,
        format!("{} roots (±iπ/2 mod i within {pair:.1e}), max |Δλ| = {err:.2e}", found.len()),
    )
}

fn cross_method() -> Outcome {
    let start = Instant::now();
    let d = parametric_reference();
    let bx = SearchBox::default();
    // The monodromy oracle resolves multipliers down to |ρ| = e^{−6π}, i.e. Re λ ≥ −3.
    let keep = |v: Vec<Complex64>| v.into_iter().filter(|l| l.re > bx.re[0] + 0.05).collect::<Vec<_>>();
    let cf = keep(find_exponents(&d, &bx, 8, 8, &FindOptions::default()).map_err(|e| e.to_string())?.exponents());
    let rk = keep(risken::spectrum(&d, &bx, 8, 8, &FindOptions::default()).map_err(|e| e.to_string())?.exponents());
    let mono = monodromy_exponents(&d, &MonodromyOptions { grid: 400, ..Default::default() }).map_err(|e| e.to_string())?;
    let mo = keep(mono.exponents.iter().map(|e| e.lambda).collect());
    let err = [max_pairwise(&cf, &rk), max_pairwise(&rk, &cf), max_pairwise(&cf, &mo), max_pairwise(&mo, &cf), max_pairwise(&rk, &mo), max_pairwise(&mo, &rk)]
        .into_iter()
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let same = cf.len() == rk.len() && rk.len() == mo.len();
    check(same && !cf.is_empty() && err < 1e-4 && secs < 180.0, format!("{} roots each, max |Δλ| = {err:.2e}, {secs:.1} s", cf.len()))
}

fn route_equivalence() -> Outcome {
    let d = parametric_reference();
    let cf = find_exponents(&d, &SearchBox::default(), 8, 8, &FindOptions::default()).map_err(|e| e.to_string())?.exponents();
    let rk = risken::spectrum(&d, &SearchBox::default(), 8, 8, &FindOptions::default()).map_err(|e| e.to_string())?.exponents();
    let err = max_pairwise(&cf, &rk).max(max_pairwise(&rk, &cf));
    check(cf.len() == rk.len() && err < 1e-10, format!("{} roots, max |Δλ| = {err:.2e}", cf.len()))
}

fn residual_scaling() -> Outcome {
    let osc = Oscillator::van_der_pol(1.0, 0.5);
    let mut slopes = Vec::new();
    for order in [1usize, 2] {
        let pts: Vec<(f64, f64)> = [0.01, 0.02, 0.05, 0.1]
            .iter()
            .map(|&mu| {
                let (s, w) = orbit_to_state(&expand_pl(&osc, mu, order, &OrbitOptions::default()).unwrap());
                (f64::ln(mu), orbit_residual(&osc.to_system(mu), &s, w, 256).ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        slopes.push((order, slope));
    }
    let ok = slopes.iter().all(|&(p, s)| (s - (p as f64 + 1.0)).abs() < 0.5);
    check(ok, slopes.iter().map(|(p, s)| format!("P = {p}: slope {s:.3}")).collect::<Vec<_>>().join(", "))
}

fn shohat_consistency() -> Outcome {
    let osc = Oscillator::van_der_pol(1.0, 0.5);
    let opts = OrbitOptions::default();
    let mut worst: f64 = 0.0;
    for mu in [0.01, 0.02, 0.05, 0.1] {
        let (pl, _) = orbit_to_state(&expand_pl(&osc, mu, 2, &opts).map_err(|e| e.to_string())?);
        let (sh, _) = orbit_to_state(&expand_shohat(&osc, mu, 2, &opts).map_err(|e| e.to_string())?);
        worst = worst.max(pl.sub(&sh).norm() / (10.0 * mu.powi(3)));
    }
    check(worst < 1.0, format!("max ‖Δq‖ / 10μ³ = {worst:.3}"))
}

fn mod_i_covariance() -> Outcome {
    let d = parametric_reference();
    let (mut det_worst, mut comp_worst): (f64, f64) = (0.0, 0.0);
    let modes = s3_modes();
    for m in &modes {
        let shifted = m.raw_lambda + c64(0.0, 1.0);
        det_worst = det_worst.max(det_m(&d, shifted, 8, 8).ok_or("det failed")?.norm());
        let e = extract_mode(&d, shifted, 8, 8).map_err(|e| e.to_string())?;
        let (lo, hi) = (e.first_index.max(m.first_index), e.last_index().min(m.last_index()));
        let (a, b): (Vec<Complex64>, Vec<Complex64>) = (lo..=hi).flat_map(|n| m.component(n).unwrap().iter().copied().zip(e.component(n).unwrap().iter().copied())).unzip();
        let pivot = (0..a.len()).max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm())).unwrap();
        let scale = b[pivot] / a[pivot];
        comp_worst = comp_worst.max(a.iter().zip(&b).map(|(x, y)| (x * scale - y).norm()).fold(0.0, f64::max));
    }
    check(!modes.is_empty() && det_worst < 1e-8 && comp_worst < 1e-8, format!("{} roots, max |det M(λ+i)| = {det_worst:.2e}, component mismatch {comp_worst:.2e}", modes.len()))
}

fn biorthonormality() -> Outcome {
    let d = parametric_reference();
    let ctx = BilinearContext::new(&d);
    let pairs = s3_modes()
        .iter()
        .map(|m| normalize(&ctx, &adjoint_for(&d, m)?, m))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let (mut off, mut diag): (f64, f64) = (0.0, 0.0);
    for k in 0..8 {
        let g = gram(&ctx, &pairs, k as f64 * PI / 4.0);
        for i in 0..pairs.len() {
            for j in 0..pairs.len() {
                if i == j {
                    diag = diag.max((g[(i, j)] - 1.0).norm());
                } else {
                    off = off.max(g[(i, j)].norm());
                }
            }
        }
    }
    check(pairs.len() >= 2 && off < 1e-8 && diag < 1e-8, format!("{} pairs, 8 phases: off-diagonal {off:.2e}, |diag − 1| {diag:.2e}", pairs.len()))
}

fn semigroup_gap(field: &dyn DelayField, seg: &SegmentState, h: f64, first: usize, second: usize) -> Result<f64, String> {
    let one = integrate_mos(field, seg, (first + second) as f64 * h, h).map_err(|e| e.to_string())?;
    let mid = integrate_mos(field, seg, first as f64 * h, h).map_err(|e| e.to_string())?.final_segment();
    let two = integrate_mos(field, &mid, second as f64 * h, h).map_err(|e| e.to_string())?;
    Ok(one.last().iter().zip(two.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn semigroup() -> Outcome {
    let s1 = SystemField::new(&delay_oscillator());
    let seg1 = SegmentState::from_fn(1.0, 100, |t| vec![(PI / 2.0 * t).cos() + 0.2 * t]);
    let g1 = semigroup_gap(&s1, &seg1, 0.01, 170, 230)?;

    let lc = van_der_pol(0.5, 0.1, 2).map_err(|e| e.to_string())?;
    let sys = rescale(&lc.system, lc.omega).map_err(|e| e.to_string())?;
    let s2 = SystemField::new(&sys);
    let seg2 = SegmentState::from_fn(sys.tau, 100, |t| lc.state.evaluate_real(t));
    let g2 = semigroup_gap(&s2, &seg2, sys.tau / 100.0, 700, 450)?;
    check(g1 < 1e-8 && g2 < 1e-8, format!("S1 gap {g1:.2e}, S2 gap {g2:.2e}"))
}

fn truncation_convergence() -> Outcome {
    let d = parametric_reference();
    let lead = s3_modes().into_iter().filter(|m| m.lambda.norm() > 1e-6).max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re)).ok_or("no roots")?;
    let root_at = |n: usize| match refine_root(&d, lead.raw_lambda, n, n, 60) {
        NewtonOutcome::Converged { root, .. } => Ok(root),
        NewtonOutcome::Stalled { reason, .. } => Err(format!("N = {n}: {reason}")),
    };
    let roots = [4usize, 6, 8, 10, 12].iter().map(|&n| root_at(n)).collect::<Result<Vec<_>, _>>()?;
    let diffs: Vec<f64> = roots.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    // Non-increasing; once at the roundoff floor the sequence can only stay there.
    let floor = 1e-13 * (1.0 + lead.lambda.norm());
    let ok = diffs.windows(2).all(|w| w[1] <= w[0] || w[1] <= floor);
    let shown: Vec<String> = diffs.iter().map(|x| format!("{x:.1e}")).collect();
    check(ok, format!("λ = {:.12}, |λ(N) − λ(N+2)| for N = 4..10: [{}]", lead.lambda, shown.join(", ")))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("zero mode of the delayed van der Pol cycle", zero_mode),
        ("constant-coefficient exactness", constant_coefficients),
        ("cross-method agreement (cf / risken / monodromy)", cross_method),
        ("continued-fraction vs tridiagonal route", route_equivalence),
        ("orbit residual scaling", residual_scaling),
        ("Shohat vs Poincaré–Lindstedt", shohat_consistency),
        ("mod-i covariance", mod_i_covariance),
        ("biorthonormality", biorthonormality),
        ("semigroup property", semigroup),
        ("truncation convergence", truncation_convergence),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
