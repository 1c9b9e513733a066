use std::f64::consts::PI;

use dde_floquet::model::ProblemFile;
use dde_floquet::orbit::{orbit_to_state, Scheme};
use dde_floquet::oracle::orbit_residual;
use serde_json::{json, Value};

use crate::config::JobConfig;
use crate::output::{cell, complex, num, write_csv, write_json};
use crate::problem::{expand, load_problem, orbit_of};
use crate::{CliError, Status};

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

pub fn cmd_orbit(cfg: &JobConfig) -> Result<Status, CliError> {
    let system = match load_problem(cfg)? {
        ProblemFile::System(s) => s,
        ProblemFile::Density(_) => return Err(CliError::Input("orbit needs a dde-system problem, not a density".into())),
    };
    let run = orbit_of(&system, cfg)?;
    let exp = &run.expansion;
    let residual = orbit_residual(&run.system, &run.state, run.omega, cfg.samples);

    let mut sweep = Vec::new();
    for &mu in &cfg.mu_sweep {
        let e = expand(&run.oscillator, cfg, mu)?;
        let (state, omega) = orbit_to_state(&e);
        sweep.push((mu, orbit_residual(&run.oscillator.to_system(mu), &state, omega, cfg.samples)));
    }
    let slope = log_slope(&sweep);

    let scheme = match exp.scheme {
        Scheme::PoincareLindstedt => "pl",
        Scheme::Shohat => "shohat",
    };
    println!("{scheme} order {} at μ = {}: ω = {:.15}, ε = {:.6e}", exp.order, exp.mu, run.omega, exp.epsilon);
    for (p, (w, a)) in exp.frequencies.iter().zip(&exp.amplitudes).enumerate() {
        println!("  order {p}: ω_{p} = {w:+.12e}  A_{p} = {a:+.12e}");
    }
    println!("orbit residual (max over {} samples): {residual:.3e}", cfg.samples);
    for (mu, r) in &sweep {
        println!("  μ = {mu:<8} residual {r:.3e}");
    }
    if let Some(s) = slope {
        println!("log–log residual slope {s:.3} (order + 1 = {})", exp.order + 1);
    }
    for &p in &exp.flagged {
        eprintln!("warning: order {p} has a secular residual above tolerance ({:.3e})", exp.secular_residuals.get(p).copied().unwrap_or(f64::NAN));
    }

    let nums = |v: &[f64]| Value::Array(v.iter().copied().map(num).collect());
    let orders: Vec<Value> = exp
        .orders
        .iter()
        .map(|q| {
            let k = q.cutoff() as i64;
            Value::Array((-k..=k).map(|n| json!({ "n": n, "value": Value::Array((0..q.dim()).map(|i| complex(q.coeff(n, i))).collect()) })).collect())
        })
        .collect();
    let doc = json!({
        "scheme": scheme,
        "order": exp.order,
        "mu": num(exp.mu),
        "epsilon": num(exp.epsilon),
        "omega": num(run.omega),
        "omega0": num(exp.omega0),
        "tau": num(exp.tau),
        "frequencies": nums(&exp.frequencies),
        "amplitudes": nums(&exp.amplitudes),
        "secular_residuals": nums(&exp.secular_residuals),
        "flagged": exp.flagged,
        "residual": num(residual),
        "samples": cfg.samples,
        "mu_sweep": sweep.iter().map(|(mu, r)| json!({ "mu": num(*mu), "residual": num(*r) })).collect::<Vec<_>>(),
        "residual_slope": slope.map_or(Value::Null, num),
        "orders": orders,
    });
    write_json(&cfg.out, "orbit.json", &doc)?;

    let mut rows = Vec::new();
    for (p, q) in exp.orders.iter().enumerate() {
        let k = q.cutoff() as i64;
        for n in -k..=k {
            for i in 0..q.dim() {
                let c = q.coeff(n, i);
                rows.push(vec![p.to_string(), n.to_string(), i.to_string(), cell(c.re), cell(c.im)]);
            }
        }
    }
    write_csv(&cfg.out, "orbit_orders.csv", &["order", "harmonic", "component", "re", "im"], &rows)?;

    let dim = run.state.dim();
    let mut header = vec!["xi".to_string()];
    header.extend((0..dim).map(|i| format!("q{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let trace: Vec<Vec<String>> = (0..=cfg.samples)
        .map(|j| {
            let xi = 2.0 * PI * j as f64 / cfg.samples as f64;
            let mut row = vec![cell(xi)];
            row.extend(run.state.evaluate_real(xi).into_iter().map(cell));
            row
        })
        .collect();
    write_csv(&cfg.out, "orbit_trace.csv", &header, &trace)?;

    if cfg.strict && !exp.flagged.is_empty() {
        return Ok(Status::NumericalFailure);
    }
    Ok(Status::Success)
}

#[cfg(test)]
mod tests {
    use super::log_slope;

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [0.01, 0.1, 1.0].iter().map(|&x| (x, 3.0 * x * x * x)).collect();
        assert!((log_slope(&pts).unwrap() - 3.0).abs() < 1e-12);
        assert!(log_slope(&pts[..1]).is_none());
    }
}
