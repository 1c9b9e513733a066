//! Text formats for systems and densities (TOML syntax).
//!
//! System file, `format = "dde-system/1"`:
//!
//! ```toml
//! format = "dde-system/1"
//! dim = 2
//! tau = 1.0
//! mu = 0.1                 # optional, default 0
//! [params]                 # optional named constants
//! w0sq = 1.0
//! [[terms]]                # one monomial of component `target` (0-based)
//! target = 1
//! coeff = -1.0             # number, default 1
//! param = "w0sq"           # optional: multiplies coeff by a parameter
//! now = [1, 0]             # powers of q_i(t), default all 0
//! delayed = [0, 0]         # powers of q_i(t - tau), default all 0
//! mu_power = 0             # optional power of mu, default 0
//! ```
//!
//! Density file, `format = "dde-density/1"`, for linear time-periodic
//! problems given directly in rescaled time:
//!
//! ```toml
//! format = "dde-density/1"
//! dim = 1
//! omega = 1.0
//! bandwidth = 1
//! [[delays]]
//! theta = 0.0
//! [[delays.coeffs]]        # harmonics not listed are zero
//! k = 1
//! re = [[0.05]]
//! im = [[0.0]]             # optional
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;
use toml::Spanned;

use super::density::FourierMatrixDensity;
use super::system::{DdeSystem, Monomial};
use super::ModelError;
use crate::numerics::{Complex64, ComplexMatrix};

pub const SYSTEM_FORMAT: &str = "dde-system/1";
pub const DENSITY_FORMAT: &str = "dde-density/1";

/// Either kind of problem file.
#[derive(Clone, Debug)]
pub enum ProblemFile {
    System(DdeSystem),
    Density(FourierMatrixDensity),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    format: Spanned<String>,
    dim: Spanned<i64>,
    tau: Spanned<f64>,
    #[serde(default)]
    mu: f64,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    terms: Vec<Spanned<RawTerm>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    target: i64,
    #[serde(default = "one")]
    coeff: f64,
    param: Option<String>,
    now: Option<Vec<i64>>,
    delayed: Option<Vec<i64>>,
    #[serde(default)]
    mu_power: i64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    format: Spanned<String>,
    dim: Spanned<i64>,
    omega: Spanned<f64>,
    bandwidth: Spanned<i64>,
    delays: Vec<Spanned<RawSlot>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlot {
    theta: f64,
    #[serde(default)]
    coeffs: Vec<Spanned<RawCoeff>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoeff {
    k: i64,
    re: Vec<Vec<f64>>,
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct FormatOnly {
    format: Option<Spanned<String>>,
}

/// 1-based `(line, column)` of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn at(src: &str, span: std::ops::Range<usize>, message: impl Into<String>) -> ModelError {
    let (line, column) = line_col(src, span.start);
    ModelError::Parse { line, column, message: message.into() }
}

fn from_toml(src: &str, e: toml::de::Error) -> ModelError {
    let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
    ModelError::Parse { line, column, message: e.message().to_string() }
}

fn check_format(src: &str, format: &Spanned<String>, expect: &str) -> Result<(), ModelError> {
    if format.get_ref() != expect {
        return Err(at(src, format.span(), format!("unsupported format '{}', expected '{expect}'", format.get_ref())));
    }
    Ok(())
}

fn positive_dim(src: &str, dim: &Spanned<i64>) -> Result<usize, ModelError> {
    match *dim.get_ref() {
        d if d > 0 => Ok(d as usize),
        d => Err(at(src, dim.span(), format!("dim must be positive, got {d}"))),
    }
}

/// Parses either file kind, dispatching on the `format` key.
pub fn parse_problem(src: &str) -> Result<ProblemFile, ModelError> {
    let head: FormatOnly = toml::from_str(src).map_err(|e| from_toml(src, e))?;
    match head.format {
        Some(f) if f.get_ref() == DENSITY_FORMAT => parse_density(src).map(ProblemFile::Density),
        Some(f) if f.get_ref() == SYSTEM_FORMAT => parse_system(src).map(ProblemFile::System),
        Some(f) => Err(at(src, f.span(), format!("unknown format '{}'", f.get_ref()))),
        None => Err(ModelError::Parse { line: 1, column: 1, message: "missing key 'format'".into() }),
    }
}

pub fn parse_system(src: &str) -> Result<DdeSystem, ModelError> {
    let raw: RawSystem = toml::from_str(src).map_err(|e| from_toml(src, e))?;
    check_format(src, &raw.format, SYSTEM_FORMAT)?;
    let dim = positive_dim(src, &raw.dim)?;
    let tau = *raw.tau.get_ref();
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(at(src, raw.tau.span(), format!("tau must be positive, got {tau}")));
    }
    let mut terms = Vec::with_capacity(raw.terms.len());
    for spanned in &raw.terms {
        let t = spanned.get_ref();
        let err = |m: String| at(src, spanned.span(), m);
        if t.target < 0 || t.target as usize >= dim {
            return Err(err(format!("target {} outside 0..{dim}", t.target)));
        }
        let powers = |p: &Option<Vec<i64>>, name: &str| -> Result<Vec<u32>, ModelError> {
            match p {
                None => Ok(vec![0; dim]),
                Some(v) if v.len() != dim => Err(err(format!("'{name}' needs {dim} entries, got {}", v.len()))),
                Some(v) => v
                    .iter()
                    .map(|&x| u32::try_from(x).map_err(|_| err(format!("'{name}' powers must be non-negative"))))
                    .collect(),
            }
        };
        let mut coeff = t.coeff;
        if let Some(name) = &t.param {
            coeff *= raw.params.get(name).ok_or_else(|| err(format!("unknown parameter '{name}'")))?;
        }
        let mu_power = u32::try_from(t.mu_power).map_err(|_| err("mu_power must be non-negative".into()))?;
        terms.push(Monomial {
            coeff,
            target: t.target as usize,
            now: powers(&t.now, "now")?,
            delayed: powers(&t.delayed, "delayed")?,
            mu_power,
        });
    }
    DdeSystem::new(dim, tau, raw.mu, terms)
}

fn matrix(dim: usize, rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return None;
    }
    Some(rows.concat())
}

pub fn parse_density(src: &str) -> Result<FourierMatrixDensity, ModelError> {
    let raw: RawDensity = toml::from_str(src).map_err(|e| from_toml(src, e))?;
    check_format(src, &raw.format, DENSITY_FORMAT)?;
    let dim = positive_dim(src, &raw.dim)?;
    let kk = match *raw.bandwidth.get_ref() {
        k if k >= 0 => k,
        k => return Err(at(src, raw.bandwidth.span(), format!("bandwidth must be non-negative, got {k}"))),
    };
    let omega = *raw.omega.get_ref();
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(at(src, raw.omega.span(), format!("omega must be positive, got {omega}")));
    }
    let mut slots = Vec::new();
    for slot in &raw.delays {
        let s = slot.get_ref();
        if !(s.theta <= 0.0 && s.theta.is_finite()) {
            return Err(at(src, slot.span(), format!("theta must be ≤ 0, got {}", s.theta)));
        }
        let mut mats = vec![ComplexMatrix::zeros(dim, dim); (2 * kk + 1) as usize];
        for c in &s.coeffs {
            let cr = c.get_ref();
            let err = |m: String| at(src, c.span(), m);
            if cr.k.abs() > kk {
                return Err(err(format!("harmonic k = {} exceeds bandwidth {kk}", cr.k)));
            }
            let re = matrix(dim, &cr.re).ok_or_else(|| err(format!("'re' must be a {dim}x{dim} array")))?;
            let im = match &cr.im {
                Some(im) => matrix(dim, im).ok_or_else(|| err(format!("'im' must be a {dim}x{dim} array")))?,
                None => vec![0.0; dim * dim],
            };
            mats[(cr.k + kk) as usize] = ComplexMatrix::from_fn(dim, dim, |i, j| Complex64::new(re[i * dim + j], im[i * dim + j]));
        }
        slots.push((s.theta, mats));
    }
    if slots.is_empty() {
        slots.push((0.0, vec![ComplexMatrix::zeros(dim, dim); (2 * kk + 1) as usize]));
    }
    FourierMatrixDensity::new(dim, omega, slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    const VDP: &str = r#"
format = "dde-system/1"
dim = 2
tau = 1.0
mu = 0.1
[params]
w0sq = 1.0

[[terms]]
target = 0
now = [0, 1]

[[terms]]
target = 1
coeff = -1.0
param = "w0sq"
now = [1, 0]

[[terms]]
target = 1
delayed = [0, 1]
mu_power = 1

[[terms]]
target = 1
coeff = -1.0
now = [2, 0]
delayed = [0, 1]
mu_power = 1
"#;

    #[test]
    fn parses_van_der_pol() {
        let s = parse_system(VDP).unwrap();
        assert_eq!((s.dim, s.tau, s.mu, s.terms.len()), (2, 1.0, 0.1, 4));
        assert_eq!(s.terms[3].now, vec![2, 0]);
        assert_eq!(s.terms[1].coeff, -1.0);
        assert_eq!(s.degree(), 3);
    }

    #[test]
    fn reports_line_of_bad_term() {
        let src = VDP.replace("target = 1\ncoeff = -1.0\nnow = [2, 0]", "target = 5\ncoeff = -1.0\nnow = [2, 0]");
        match parse_system(&src) {
            Err(ModelError::Parse { line, message, .. }) => {
                assert!(message.contains("target 5"), "{message}");
                assert!(line >= 24, "line {line}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reports_syntax_error_location() {
        let src = "format = \"dde-system/1\"\ndim = 1\ntau = = 2\n";
        match parse_system(src) {
            Err(ModelError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_format() {
        assert!(matches!(parse_problem("format = \"dde-system/9\"\n"), Err(ModelError::Parse { line: 1, .. })));
    }

    #[test]
    fn parses_density() {
        let src = r#"
format = "dde-density/1"
dim = 1
omega = 1.0
bandwidth = 1
[[delays]]
theta = -1.0
[[delays.coeffs]]
k = 0
re = [[-0.5]]
[[delays]]
theta = 0.0
[[delays.coeffs]]
k = 0
re = [[-0.3]]
[[delays.coeffs]]
k = 1
re = [[0.05]]
[[delays.coeffs]]
k = -1
re = [[0.05]]
"#;
        let ProblemFile::Density(d) = parse_problem(src).unwrap() else { panic!("expected density") };
        assert_eq!(d.bandwidth(), 1);
        assert_eq!(d.delays(), &[-1.0, 0.0]);
        assert_eq!(d.coeff(1, 1).unwrap()[(0, 0)].re, 0.05);
        assert!(d.is_real());
    }
}
