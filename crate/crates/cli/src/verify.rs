//! Self-consistency checks of a job's spectrum against invariants and the
//! integrator oracle.

use std::f64::consts::PI;

use dde_floquet::floquet::{det_m, find_exponents, FloquetError, FloquetMode};
use dde_floquet::model::FourierMatrixDensity;
use dde_floquet::numerics::c64;
use dde_floquet::oracle::{integrate_mos, monodromy_exponents, DensityField, MonodromyOptions, SegmentState};
use dde_floquet::roots::strip_distance;
use num_complex::Complex64;
use serde_json::json;

use crate::config::JobConfig;
use crate::output::{num, write_json};
use crate::problem::{prepare, OrbitRun};
use crate::{CliError, Status};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| strip_distance(z, *w)).fold(f64::INFINITY, f64::min)
}

fn zero_mode(orbit: &OrbitRun, modes: &[FloquetMode]) -> Check {
    let name = "zero mode";
    let Some(m) = modes.iter().min_by(|a, b| a.lambda.norm().total_cmp(&b.lambda.norm())) else {
        return Check { name, pass: false, detail: "no exponents in the box".into() };
    };
    let dq = orbit.state.derivative();
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
    Check { name, pass: m.lambda.norm() < 5e-3 && cos > 0.999, detail: format!("|λ₀| = {:.2e}, cosine with q' = {cos:.6}", m.lambda.norm()) }
}

/// Index period of the harmonic coupling: 1 in general, 2 when only even
/// offsets couple (odd-harmonic orbits), `None` when harmonics decouple.
fn coupling_period(d: &FourierMatrixDensity) -> Option<i64> {
    let kk = d.bandwidth() as i64;
    let odd_free = (1..=kk).step_by(2).all(|k| (0..d.delays().len()).all(|s| d.coeff(k, s).unwrap().max_abs() == 0.0 && d.coeff(-k, s).unwrap().max_abs() == 0.0));
    match (kk, odd_free) {
        (0, _) => None,
        (_, true) => Some(2),
        _ => Some(1),
    }
}

fn mod_i(d: &FourierMatrixDensity, modes: &[FloquetMode], cfg: &JobConfig) -> Check {
    let name = "mod-i covariance";
    let Some(period) = coupling_period(d) else {
        return Check { name, pass: true, detail: "harmonics decouple (K = 0); each root is its own class".into() };
    };
    let mut worst: f64 = 0.0;
    for m in modes {
        let v = det_m(d, m.raw_lambda + c64(0.0, period as f64), m.n_win, m.depth).map_or(f64::INFINITY, |z| z.norm());
        worst = worst.max(v);
    }
    Check { name, pass: worst < cfg.find.root_tol, detail: format!("max |det M(λ + {period}i)| = {worst:.2e} over {} root(s)", modes.len()) }
}

fn conjugation(lambdas: &[Complex64]) -> Check {
    let worst = lambdas.iter().map(|l| nearest(l.conj(), lambdas)).fold(0.0, f64::max);
    Check { name: "conjugate symmetry", pass: worst < 1e-8, detail: format!("max distance of λ̄ to the spectrum {worst:.2e}") }
}

/// Restarting after one full period must reproduce the direct integration
/// (the coefficients are 2π-periodic, so only whole periods commute).
fn semigroup(d: &FourierMatrixDensity) -> Result<Check, CliError> {
    let span = d.span();
    let field = DensityField::new(d).map_err(|e| CliError::Numerical(e.to_string()))?;
    let dim = d.dim();
    let seg = SegmentState::from_fn(span, 100, |t| (0..dim).map(|i| (t + i as f64).cos() + 0.2 * t).collect());
    let per_period = (2.0 * PI / (span / 100.0)).ceil() as usize;
    let h = 2.0 * PI / per_period as f64;
    let run = |s: &SegmentState, steps: usize| integrate_mos(&field, s, steps as f64 * h, h).map_err(|e| CliError::Numerical(format!("semigroup: {e}")));
    let tail = per_period * 13 / 10;
    let one = run(&seg, per_period + tail)?;
    let mid = run(&seg, per_period)?.final_segment();
    let two = run(&mid, tail)?;
    let gap = one.last().iter().zip(two.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = one.last().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    Ok(Check { name: "semigroup", pass: gap < 1e-8 * scale, detail: format!("|Φ(2π+ξ) − Φ(ξ)Φ(2π)| = {gap:.2e}") })
}

fn monodromy(d: &FourierMatrixDensity, lambdas: &[Complex64], cfg: &JobConfig) -> Result<Check, CliError> {
    let opts = MonodromyOptions { grid: cfg.monodromy_grid, richardson_tol: cfg.richardson_tol, ..Default::default() };
    let spec = monodromy_exponents(d, &opts).map_err(|e| CliError::Numerical(format!("monodromy: {e}")))?;
    let mono: Vec<Complex64> = spec.exponents.iter().map(|e| e.lambda).filter(|l| l.re >= cfg.search.re[0] && l.re <= cfg.search.re[1]).collect();
    let forward = lambdas.iter().map(|l| nearest(*l, &mono)).fold(0.0, f64::max);
    let backward = mono.iter().map(|l| nearest(*l, lambdas)).fold(0.0, f64::max);
    let worst = forward.max(backward);
    Ok(Check {
        name: "monodromy agreement",
        pass: worst < 1e-4 && !mono.is_empty(),
        detail: format!("{} cf vs {} monodromy root(s), max |Δλ| = {worst:.2e} (grid {})", lambdas.len(), mono.len(), spec.grid),
    })
}

pub fn cmd_verify(cfg: &JobConfig) -> Result<Status, CliError> {
    let prepared = prepare(cfg)?;
    let d = &prepared.density;
    let modes = match find_exponents(d, &cfg.search, cfg.n_win, cfg.depth, &cfg.find) {
        Ok(s) => s.modes,
        Err(FloquetError::NoRootsInBox { .. }) => Vec::new(),
        Err(FloquetError::InvalidTruncation(m)) => return Err(CliError::Input(m)),
        Err(e) => return Err(CliError::Numerical(e.to_string())),
    };
    let lambdas: Vec<Complex64> = modes.iter().map(|m| m.lambda).collect();

    let mut checks = Vec::new();
    if let Some(orbit) = &prepared.orbit {
        checks.push(zero_mode(orbit, &modes));
    }
    checks.push(mod_i(d, &modes, cfg));
    if d.is_real() {
        checks.push(conjugation(&lambdas));
        if d.span() > 0.0 {
            checks.push(semigroup(d)?);
        }
        checks.push(monodromy(d, &lambdas, cfg)?);
    }

    let mut records = Vec::new();
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        records.push(json!({ "check": c.name, "pass": c.pass, "detail": c.detail }));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    write_json(
        &cfg.out,
        "verify.json",
        &json!({ "checks": records, "exponents": lambdas.iter().map(|l| json!({ "re": num(l.re), "im": num(l.im) })).collect::<Vec<_>>() }),
    )?;
    Ok(if failed == 0 { Status::Success } else { Status::NumericalFailure })
}
