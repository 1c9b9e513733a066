use std::f64::consts::PI;

use dde_floquet::adjoint::{adjoint_for, gram, normalize, AdjointError, AdjointMode, AdjointRoute, BilinearContext};
use dde_floquet::floquet::{find_exponents, FloquetError, FloquetMode};
use serde_json::{json, Value};

use crate::config::JobConfig;
use crate::output::{cell, complex, complex_vec, num, write_csv, write_json};
use crate::problem::prepare;
use crate::{CliError, Status};

const PHASES: usize = 8;

fn route_name(r: AdjointRoute) -> &'static str {
    match r {
        AdjointRoute::Decoupled => "decoupled",
        AdjointRoute::Prescription => "prescription",
        AdjointRoute::Direct => "direct",
        AdjointRoute::DirectFallback => "direct-fallback",
    }
}

fn components_json(first: i64, comps: &[Vec<num_complex::Complex64>]) -> Value {
    Value::Array(comps.iter().enumerate().map(|(k, c)| json!({ "n": first + k as i64, "value": complex_vec(c) })).collect())
}

pub fn cmd_adjoint(cfg: &JobConfig) -> Result<Status, CliError> {
    let prepared = prepare(cfg)?;
    let d = &prepared.density;
    let modes = match find_exponents(d, &cfg.search, cfg.n_win, cfg.depth, &cfg.find) {
        Ok(s) => s.modes,
        Err(FloquetError::NoRootsInBox { stalled }) => {
            println!("note: no roots in box ({stalled} seeds stalled)");
            Vec::new()
        }
        Err(FloquetError::InvalidTruncation(m)) => return Err(CliError::Input(m)),
        Err(e) => return Err(CliError::Numerical(e.to_string())),
    };
    let ctx = BilinearContext::new(d);

    let mut pairs: Vec<(AdjointMode, FloquetMode)> = Vec::new();
    let mut records = Vec::new();
    let mut flagged = 0usize;
    for m in &modes {
        let outcome = adjoint_for(d, m).and_then(|psi| normalize(&ctx, &psi, m));
        match outcome {
            Ok((psi, phi)) => {
                println!("λ = {:+.12} {:+.12}i  adjoint route {:<15} residual {:.2e}", phi.lambda.re, phi.lambda.im, route_name(psi.route), psi.residual);
                records.push(json!({
                    "lambda": complex(phi.lambda),
                    "route": route_name(psi.route),
                    "adjoint_residual": num(psi.residual),
                    "prescription_defect": psi.prescription_defect.map_or(Value::Null, num),
                    "flag": Value::Null,
                    "adjoint": components_json(psi.first_index, &psi.components),
                    "mode": components_json(phi.first_index, &phi.components),
                }));
                pairs.push((psi, phi));
            }
            Err(e) => {
                let flag = match &e {
                    AdjointError::ZeroPairing { .. } => "ZeroPairing",
                    AdjointError::Floquet(FloquetError::NullSpaceAmbiguous { .. }) => "NullSpaceAmbiguous",
                    _ => return Err(CliError::Numerical(format!("adjoint at λ = {}: {e}", m.lambda))),
                };
                flagged += 1;
                println!("λ = {:+.12} {:+.12}i  flagged {flag}: {e}", m.lambda.re, m.lambda.im);
                records.push(json!({ "lambda": complex(m.lambda), "flag": flag, "message": e.to_string() }));
            }
        }
    }

    let n = pairs.len();
    let (mut off, mut diag): (f64, f64) = (0.0, 0.0);
    let mut phases = Vec::new();
    let mut rows = Vec::new();
    for k in 0..PHASES {
        let xi = 2.0 * PI * k as f64 / PHASES as f64;
        let g = gram(&ctx, &pairs, xi);
        let mut matrix = Vec::new();
        for a in 0..n {
            let mut row = Vec::new();
            for b in 0..n {
                let v = g[(a, b)];
                if a == b {
                    diag = diag.max((v - 1.0).norm());
                } else {
                    off = off.max(v.norm());
                }
                row.push(complex(v));
                rows.push(vec![cell(xi), a.to_string(), b.to_string(), cell(v.re), cell(v.im)]);
            }
            matrix.push(Value::Array(row));
        }
        phases.push(json!({ "xi": num(xi), "matrix": matrix }));
    }
    println!("{n} normalized pair(s), {flagged} flagged; Gram over {PHASES} phases: max |G_aa − 1| = {diag:.2e}, max |G_ab| = {off:.2e}");

    write_json(&cfg.out, "adjoint.json", &json!({ "problem": cfg.problem.display().to_string(), "pairs": records }))?;
    write_json(&cfg.out, "gram.json", &json!({ "phases": phases, "max_diagonal_defect": num(diag), "max_off_diagonal": num(off) }))?;
    write_csv(&cfg.out, "gram.csv", &["xi", "a", "b", "re", "im"], &rows)?;

    if cfg.strict && flagged > 0 {
        return Ok(Status::NumericalFailure);
    }
    Ok(Status::Success)
}
