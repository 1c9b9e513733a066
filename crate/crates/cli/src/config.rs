//! Job configuration file (TOML). Paths are relative to the file's directory.
//!
//! ```toml
//! problem = "../problems/van_der_pol.toml"   # dde-system/1 or dde-density/1
//! scheme = "pl"              # pl | shohat
//! order = 2                  # expansion order P
//! mu = 0.1                   # default: the problem file's mu
//! method = "cf"              # cf | risken | monodromy | all
//! out = "out/vdp"            # output directory
//! strict = false
//!
//! [truncation]
//! n_win = 8                  # component window N_win
//! depth = 8                  # continued-fraction depth D
//! bandwidth = 4              # optional: cap the density bandwidth K
//! cutoff = 16                # optional: Fourier cutoff N of the orbit
//!
//! [search]
//! box = [-3.0, 1.0, -0.5, 0.5]   # re0 re1 im0 im1
//! grid = [61, 31]
//! shifts = 2
//!
//! [tolerances]
//! newton = 1e-10
//! root = 1e-8
//! convergence = 1e-8
//! richardson = 1e-5
//!
//! [monodromy]
//! grid = 400                 # samples per delay interval M_g
//!
//! [orbit]
//! mu_sweep = [0.01, 0.02, 0.05, 0.1]
//! samples = 256
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dde_floquet::floquet::FindOptions;
use dde_floquet::roots::SearchBox;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cf,
    Risken,
    Monodromy,
    All,
}

impl Method {
    pub fn expand(self) -> Vec<Method> {
        match self {
            Method::All => vec![Method::Cf, Method::Risken, Method::Monodromy],
            m => vec![m],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Cf => "cf",
            Method::Risken => "risken",
            Method::Monodromy => "monodromy",
            Method::All => "all",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Pl,
    Shohat,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<String>,
    scheme: Option<SchemeName>,
    order: Option<usize>,
    mu: Option<f64>,
    method: Option<Method>,
    out: Option<String>,
    strict: Option<bool>,
    #[serde(default)]
    truncation: RawTruncation,
    #[serde(default)]
    search: RawSearch,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    monodromy: RawMonodromy,
    #[serde(default)]
    orbit: RawOrbit,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    n_win: Option<usize>,
    depth: Option<usize>,
    bandwidth: Option<usize>,
    cutoff: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    #[serde(rename = "box")]
    bx: Option<[f64; 4]>,
    grid: Option<[usize; 2]>,
    shifts: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    newton: Option<f64>,
    root: Option<f64>,
    convergence: Option<f64>,
    richardson: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawMonodromy {
    grid: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOrbit {
    mu_sweep: Option<Vec<f64>>,
    samples: Option<usize>,
}

/// Values given on the command line; they take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub bx: Option<[f64; 4]>,
    pub order: Option<usize>,
    pub mu: Option<f64>,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

#[derive(Clone, Debug)]
pub struct JobConfig {
    pub problem: PathBuf,
    pub scheme: SchemeName,
    pub order: usize,
    pub mu: Option<f64>,
    pub method: Method,
    pub out: PathBuf,
    pub strict: bool,
    pub n_win: usize,
    pub depth: usize,
    pub bandwidth: Option<usize>,
    pub cutoff: Option<usize>,
    pub search: SearchBox,
    pub find: FindOptions,
    pub richardson_tol: f64,
    pub monodromy_grid: usize,
    pub mu_sweep: Vec<f64>,
    pub samples: usize,
}

impl JobConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&src, base, overrides).map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(src: &str, base: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| CliError::Input(toml_message(src, &e)))?;
        let problem = raw.problem.ok_or_else(|| CliError::Input("missing key 'problem'".into()))?;
        let defaults = FindOptions::default();
        let bx = overrides.bx.or(raw.search.bx).unwrap_or([-3.0, 1.0, -0.5, 0.5]);
        let grid = raw.search.grid.unwrap_or([61, 31]);
        let out = match &overrides.out {
            Some(p) => p.clone(),
            None => base.join(raw.out.unwrap_or_else(|| "out".into())),
        };
        let cfg = JobConfig {
            problem: base.join(problem),
            scheme: raw.scheme.unwrap_or(SchemeName::Pl),
            order: overrides.order.or(raw.order).unwrap_or(2),
            mu: overrides.mu.or(raw.mu),
            method: overrides.method.or(raw.method).unwrap_or(Method::Cf),
            out,
            strict: overrides.strict || raw.strict.unwrap_or(false),
            n_win: raw.truncation.n_win.unwrap_or(8),
            depth: raw.truncation.depth.unwrap_or(8),
            bandwidth: raw.truncation.bandwidth,
            cutoff: raw.truncation.cutoff,
            search: SearchBox::new([bx[0], bx[1]], [bx[2], bx[3]]).with_grid(grid[0], grid[1]),
            find: FindOptions {
                tol: raw.tolerances.newton.unwrap_or(defaults.tol),
                root_tol: raw.tolerances.root.unwrap_or(defaults.root_tol),
                conv_tol: raw.tolerances.convergence.unwrap_or(defaults.conv_tol),
                shifts: raw.search.shifts.unwrap_or(defaults.shifts),
                ..defaults
            },
            richardson_tol: raw.tolerances.richardson.unwrap_or(1e-5),
            monodromy_grid: raw.monodromy.grid.unwrap_or(400),
            mu_sweep: raw.orbit.mu_sweep.unwrap_or_else(|| vec![0.01, 0.02, 0.05, 0.1]),
            samples: raw.orbit.samples.unwrap_or(256),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        let tols = [("newton", self.find.tol), ("root", self.find.root_tol), ("convergence", self.find.conv_tol), ("richardson", self.richardson_tol)];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance '{name}' must be positive, got {v}"));
            }
        }
        if !self.search.is_valid() {
            return bad(format!("degenerate search box {:?} × {:?}", self.search.re, self.search.im));
        }
        if self.n_win == 0 {
            return bad("n_win must be at least 1".into());
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return bad(format!("mu must be finite, got {mu}"));
            }
        }
        if self.mu_sweep.iter().any(|&m| !(m > 0.0)) {
            return bad("mu_sweep entries must be positive".into());
        }
        if self.samples < 8 {
            return bad("orbit samples must be at least 8".into());
        }
        Ok(())
    }
}

fn toml_message(src: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let before = &src[..span.start.min(src.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("{line}:{column}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let src = "problem = \"p.toml\"\nmethod = \"risken\"\n[truncation]\nn_win = 6\n";
        let cfg = JobConfig::parse(src, Path::new("/jobs"), &Overrides::default()).unwrap();
        assert_eq!(cfg.problem, PathBuf::from("/jobs/p.toml"));
        assert_eq!((cfg.method, cfg.n_win, cfg.depth, cfg.order), (Method::Risken, 6, 8, 2));
        let o = Overrides { method: Some(Method::All), bx: Some([-1.0, 0.0, -0.5, 0.5]), order: Some(3), ..Default::default() };
        let cfg = JobConfig::parse(src, Path::new("/jobs"), &o).unwrap();
        assert_eq!((cfg.method, cfg.order, cfg.search.re), (Method::All, 3, [-1.0, 0.0]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = JobConfig::parse("problem = \"p\"\n\n[search]\nbox = [1.0]\n", Path::new("."), &Overrides::default()).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.starts_with("4:")), "{err}");
        let err = JobConfig::parse("problem = \"p\"\nbogus = 1\n", Path::new("."), &Overrides::default()).unwrap_err();
        assert!(matches!(&err, CliError::Input(m) if m.starts_with("2:")), "{err}");
    }

    #[test]
    fn rejects_bad_tolerances_and_boxes() {
        let o = Overrides::default();
        assert!(JobConfig::parse("problem = \"p\"\n[tolerances]\nroot = 0.0\n", Path::new("."), &o).is_err());
        assert!(JobConfig::parse("problem = \"p\"\n[search]\nbox = [1.0, 0.0, -0.5, 0.5]\n", Path::new("."), &o).is_err());
    }
}
