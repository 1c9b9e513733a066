use std::f64::consts::PI;

use dde_floquet::floquet::{find_exponents, FloquetError};
use dde_floquet::oracle::{monodromy_exponents, MonodromyOptions};
use dde_floquet::risken;
use dde_floquet::roots::{strip_distance, strip_map};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{JobConfig, Method};
use crate::output::{cell, complex, complex_vec, num, write_csv, write_json};
use crate::problem::{prepare, Prepared};
use crate::{CliError, Status};

/// One exponent as reported by one method.
#[derive(Clone, Debug)]
pub struct Record {
    pub method: Method,
    pub lambda: Complex64,
    pub raw_lambda: Complex64,
    pub residual: f64,
    pub converged: bool,
    pub n_win: Option<usize>,
    pub depth: Option<usize>,
    pub grid: Option<usize>,
    /// Strip index of the first component and the components.
    pub components: Option<(i64, Vec<Vec<Complex64>>)>,
}

impl Record {
    pub fn multiplier(&self) -> Complex64 {
        (self.lambda * 2.0 * PI).exp()
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        let opt = |v: Option<usize>| v.map_or(Value::Null, |x| json!(x));
        let mu = self.multiplier();
        m.insert("method".into(), json!(self.method.name()));
        m.insert("lambda_re".into(), num(self.lambda.re));
        m.insert("lambda_im".into(), num(self.lambda.im));
        m.insert("multiplier_re".into(), num(mu.re));
        m.insert("multiplier_im".into(), num(mu.im));
        m.insert("residual".into(), num(self.residual));
        m.insert("converged".into(), json!(self.converged));
        m.insert("n_win".into(), opt(self.n_win));
        m.insert("depth".into(), opt(self.depth));
        m.insert("raw_lambda".into(), complex(self.raw_lambda));
        if let Some(g) = self.grid {
            m.insert("grid".into(), json!(g));
        }
        if let Some((first, comps)) = &self.components {
            let list = comps.iter().enumerate().map(|(k, c)| json!({ "n": first + k as i64, "value": complex_vec(c) })).collect();
            m.insert("components".into(), Value::Array(list));
        }
        Value::Object(m)
    }
}

pub struct MethodRun {
    pub method: Method,
    pub records: Vec<Record>,
    pub notes: Vec<String>,
}

fn floquet_error(method: Method, e: FloquetError) -> CliError {
    match e {
        FloquetError::InvalidTruncation(m) => CliError::Input(format!("{}: {m}", method.name())),
        FloquetError::Model(m) => CliError::model(m),
        other => CliError::Numerical(format!("{}: {other}", method.name())),
    }
}

pub fn run_method(method: Method, p: &Prepared, cfg: &JobConfig) -> Result<MethodRun, CliError> {
    let d = &p.density;
    let (n_win, depth) = (cfg.n_win, cfg.depth);
    let mut notes = Vec::new();
    let records = match method {
        Method::Cf => match find_exponents(d, &cfg.search, n_win, depth, &cfg.find) {
            Ok(spec) => {
                notes.extend(spec.stalls.iter().map(|s| format!("seed {} unconverged: {}", s.seed, s.reason)));
                spec.modes
                    .into_iter()
                    .map(|m| Record {
                        method,
                        lambda: m.lambda,
                        raw_lambda: m.raw_lambda,
                        residual: m.residual,
                        converged: m.converged,
                        n_win: Some(n_win),
                        depth: Some(depth),
                        grid: None,
                        components: Some((m.first_index, m.components)),
                    })
                    .collect()
            }
            Err(FloquetError::NoRootsInBox { stalled }) => {
                notes.push(format!("no roots in box ({stalled} seeds stalled)"));
                Vec::new()
            }
            Err(e) => return Err(floquet_error(method, e)),
        },
        Method::Risken => match risken::spectrum(d, &cfg.search, n_win, depth, &cfg.find) {
            Ok(spec) => spec
                .roots
                .into_iter()
                .map(|r| Record {
                    method,
                    lambda: r.lambda,
                    raw_lambda: r.raw_lambda,
                    residual: r.det_measure,
                    converged: r.det_measure <= cfg.find.root_tol,
                    n_win: Some(n_win),
                    depth: Some(depth),
                    grid: None,
                    components: Some((strip_map(r.raw_lambda).1, r.phi0)),
                })
                .collect(),
            Err(FloquetError::NoRootsInBox { stalled }) => {
                notes.push(format!("no roots in box ({stalled} seeds stalled)"));
                Vec::new()
            }
            Err(e) => return Err(floquet_error(method, e)),
        },
        Method::Monodromy => {
            if !d.is_real() {
                return Err(CliError::Input("monodromy: the density is not real; the integrator oracle needs a real system".into()));
            }
            let opts = MonodromyOptions { grid: cfg.monodromy_grid, richardson_tol: cfg.richardson_tol, ..Default::default() };
            let spec = monodromy_exponents(d, &opts).map_err(|e| CliError::Numerical(format!("monodromy: {e}")))?;
            let (re0, re1) = (cfg.search.re[0], cfg.search.re[1]);
            spec.exponents
                .into_iter()
                .filter(|e| e.lambda.re >= re0 && e.lambda.re <= re1)
                .map(|e| Record {
                    method,
                    lambda: e.lambda,
                    raw_lambda: e.lambda,
                    residual: e.refinement_shift,
                    converged: e.refinement_shift <= cfg.richardson_tol,
                    n_win: None,
                    depth: None,
                    grid: Some(spec.grid),
                    components: None,
                })
                .collect()
        }
        Method::All => unreachable!("expanded by the caller"),
    };
    Ok(MethodRun { method, records, notes })
}

pub struct DiffRow {
    pub a: Method,
    pub b: Method,
    pub lambda_a: Complex64,
    pub lambda_b: Option<Complex64>,
    pub delta: f64,
}

/// Every root of each method paired with the nearest root of every other
/// method, in both directions, so roots seen by one method only stand out.
pub fn diff_table(runs: &[MethodRun]) -> Vec<DiffRow> {
    let mut rows = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for (j, b) in runs.iter().enumerate() {
            if i == j {
                continue;
            }
            for r in &a.records {
                let best = b.records.iter().min_by(|x, y| strip_distance(x.lambda, r.lambda).total_cmp(&strip_distance(y.lambda, r.lambda)));
                rows.push(DiffRow {
                    a: a.method,
                    b: b.method,
                    lambda_a: r.lambda,
                    lambda_b: best.map(|x| x.lambda),
                    delta: best.map_or(f64::INFINITY, |x| strip_distance(x.lambda, r.lambda)),
                });
            }
        }
    }
    rows
}

pub fn cmd_spectrum(cfg: &JobConfig) -> Result<Status, CliError> {
    let prepared = prepare(cfg)?;
    let runs = cfg.method.expand().into_iter().map(|m| run_method(m, &prepared, cfg)).collect::<Result<Vec<_>, _>>()?;
    let diffs = diff_table(&runs);

    let mut methods = Vec::new();
    let mut rows = Vec::new();
    let mut scatter = Vec::new();
    let mut unconverged = 0;
    for run in &runs {
        println!("{:<10} {} exponent(s)", run.method.name(), run.records.len());
        for note in &run.notes {
            println!("  note: {note}");
        }
        for r in &run.records {
            println!("  λ = {:+.12} {:+.12}i   |ρ| = {:.9}   residual {:.2e}{}", r.lambda.re, r.lambda.im, r.multiplier().norm(), r.residual, if r.converged { "" } else { "   (unconverged)" });
            unconverged += usize::from(!r.converged);
            let mu = r.multiplier();
            rows.push(vec![
                r.method.name().into(),
                cell(r.lambda.re),
                cell(r.lambda.im),
                cell(mu.re),
                cell(mu.im),
                cell(r.residual),
                r.converged.to_string(),
                r.n_win.map_or(String::new(), |v| v.to_string()),
                r.depth.map_or(String::new(), |v| v.to_string()),
            ]);
            scatter.push(vec![r.method.name().into(), cell(r.lambda.re), cell(r.lambda.im)]);
        }
        methods.push(json!({
            "method": run.method.name(),
            "notes": run.notes,
            "records": run.records.iter().map(Record::to_json).collect::<Vec<_>>(),
        }));
    }
    if !diffs.is_empty() {
        println!("\n{:<10} {:<10} {:>24} {:>12}", "method", "vs", "λ", "|Δλ|");
        for d in &diffs {
            println!("{:<10} {:<10} {:>+11.7} {:>+11.7}i {:>12.3e}", d.a.name(), d.b.name(), d.lambda_a.re, d.lambda_a.im, d.delta);
        }
        let worst = diffs.iter().map(|d| d.delta).fold(0.0, f64::max);
        println!("max pairwise |Δλ| = {worst:.3e}");
    }

    let diff_json: Vec<Value> = diffs
        .iter()
        .map(|d| {
            json!({
                "method_a": d.a.name(),
                "method_b": d.b.name(),
                "lambda_a": complex(d.lambda_a),
                "lambda_b": d.lambda_b.map_or(Value::Null, complex),
                "delta": num(d.delta),
            })
        })
        .collect();
    let doc = json!({
        "problem": cfg.problem.display().to_string(),
        "methods": methods,
        "diff": diff_json,
        "max_delta": num(diffs.iter().map(|d| d.delta).fold(0.0, f64::max)),
    });
    write_json(&cfg.out, "spectrum.json", &doc)?;
    write_csv(&cfg.out, "spectrum.csv", &["method", "lambda_re", "lambda_im", "multiplier_re", "multiplier_im", "residual", "converged", "n_win", "depth"], &rows)?;
    write_csv(&cfg.out, "lambda_scatter.csv", &["method", "re", "im"], &scatter)?;
    let diff_rows: Vec<Vec<String>> = diffs
        .iter()
        .map(|d| {
            let b = d.lambda_b.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            vec![d.a.name().into(), d.b.name().into(), cell(d.lambda_a.re), cell(d.lambda_a.im), cell(b.re), cell(b.im), cell(d.delta)]
        })
        .collect();
    write_csv(&cfg.out, "diff.csv", &["method_a", "method_b", "lambda_a_re", "lambda_a_im", "lambda_b_re", "lambda_b_im", "delta"], &diff_rows)?;
    if unconverged > 0 {
        eprintln!("{unconverged} exponent(s) did not pass the truncation convergence check");
        return Ok(Status::NumericalFailure);
    }
    Ok(Status::Success)
}
