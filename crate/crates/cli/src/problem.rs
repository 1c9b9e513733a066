//! Turns a problem file plus job settings into the linear density to analyse.

use dde_floquet::model::{linearize_about_orbit, parse_problem, DdeSystem, FourierMatrixDensity, ProblemFile};
use dde_floquet::numerics::FourierSeries;
use dde_floquet::orbit::{expand_pl, expand_shohat, orbit_to_state, OrbitExpansion, OrbitOptions, Oscillator};

use crate::config::{JobConfig, SchemeName};
use crate::CliError;

/// A periodic orbit of a nonlinear oscillator system.
pub struct OrbitRun {
    pub oscillator: Oscillator,
    /// Physical-time system with the job's `μ`.
    pub system: DdeSystem,
    pub expansion: OrbitExpansion,
    pub state: FourierSeries,
    pub omega: f64,
}

pub struct Prepared {
    pub density: FourierMatrixDensity,
    pub orbit: Option<OrbitRun>,
}

pub fn load_problem(cfg: &JobConfig) -> Result<ProblemFile, CliError> {
    let src = std::fs::read_to_string(&cfg.problem).map_err(|e| CliError::Input(format!("{}: {e}", cfg.problem.display())))?;
    parse_problem(&src).map_err(|e| CliError::Input(format!("{}:{e}", cfg.problem.display())))
}

pub fn expand(osc: &Oscillator, cfg: &JobConfig, mu: f64) -> Result<OrbitExpansion, CliError> {
    let opts = OrbitOptions { cutoff: cfg.cutoff, ..OrbitOptions::default() };
    let run = match cfg.scheme {
        SchemeName::Pl => expand_pl(osc, mu, cfg.order, &opts),
        SchemeName::Shohat => expand_shohat(osc, mu, cfg.order, &opts),
    };
    run.map_err(CliError::orbit)
}

pub fn orbit_of(system: &DdeSystem, cfg: &JobConfig) -> Result<OrbitRun, CliError> {
    let oscillator = Oscillator::from_system(system).map_err(CliError::orbit)?;
    let mu = cfg.mu.unwrap_or(system.mu);
    let expansion = expand(&oscillator, cfg, mu)?;
    let (state, omega) = orbit_to_state(&expansion);
    Ok(OrbitRun { system: system.with_mu(mu), oscillator, expansion, state, omega })
}

pub fn prepare(cfg: &JobConfig) -> Result<Prepared, CliError> {
    match load_problem(cfg)? {
        ProblemFile::Density(d) => {
            let density = match cfg.bandwidth {
                Some(k) if k < d.bandwidth() => d.truncated(k),
                _ => d,
            };
            Ok(Prepared { density, orbit: None })
        }
        ProblemFile::System(s) => {
            let s = match cfg.mu {
                Some(mu) => s.with_mu(mu),
                None => s,
            };
            if s.is_linear() {
                let zero = FourierSeries::zeros(s.dim, 0);
                let density = linearize_about_orbit(&s, &zero, 1.0, cfg.bandwidth).map_err(CliError::model)?;
                return Ok(Prepared { density, orbit: None });
            }
            let orbit = orbit_of(&s, cfg)?;
            let density = linearize_about_orbit(&orbit.system, &orbit.state, orbit.omega, cfg.bandwidth).map_err(CliError::model)?;
            Ok(Prepared { density, orbit: Some(orbit) })
        }
    }
}
