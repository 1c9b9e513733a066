use crate::model::{DdeSystem, FourierMatrixDensity};

use super::OracleError;

/// Right-hand side `dq/dξ = F(ξ, q(ξ − r_1), …, q(ξ − r_J))` with lags `r_j ≥ 0`.
pub trait DelayField: Sync {
    fn dim(&self) -> usize;
    fn lags(&self) -> &[f64];
    /// `values[j]` holds `q(ξ − r_j)`.
    fn eval(&self, xi: f64, values: &[&[f64]], out: &mut [f64]);
}

/// A polynomial system in rescaled time (`rescale` applied): lags `[0, ωτ]`.
pub struct SystemField {
    system: DdeSystem,
    lags: [f64; 2],
}

impl SystemField {
    pub fn new(system: &DdeSystem) -> Self {
        Self { system: system.clone(), lags: [0.0, system.tau] }
    }
}

impl DelayField for SystemField {
    fn dim(&self) -> usize {
        self.system.dim
    }

    fn lags(&self) -> &[f64] {
        &self.lags
    }

    fn eval(&self, _xi: f64, values: &[&[f64]], out: &mut [f64]) {
        self.system.rhs(values[0], values[1], out);
    }
}

/// The linear field `dq/dξ = Σ_d Re C_d(ξ) q(ξ + θ_d)` of a real density.
pub struct DensityField {
    density: FourierMatrixDensity,
    lags: Vec<f64>,
    /// `Re C_d(j·h/2)` for every slot, row-major, when tabulated.
    table: Option<(f64, Vec<Vec<f64>>)>,
}

impl DensityField {
    pub fn new(density: &FourierMatrixDensity) -> Result<Self, OracleError> {
        if !density.is_real() {
            return Err(OracleError::ComplexDensity(density.reality_defect()));
        }
        Ok(Self { density: density.clone(), lags: density.delays().iter().map(|t| -t).collect(), table: None })
    }

    /// Precomputes the coefficients at the RK4 stage times `j·h/2` on `[0, ξ_end]`.
    pub fn tabulated(mut self, h: f64, xi_end: f64) -> Self {
        let half = h / 2.0;
        let count = (xi_end / half).ceil() as usize + 1;
        let table = (0..count).map(|j| self.real_coefficients(j as f64 * half)).collect();
        self.table = Some((half, table));
        self
    }

    fn real_coefficients(&self, xi: f64) -> Vec<f64> {
        (0..self.lags.len()).flat_map(|slot| self.density.evaluate(slot, xi).as_slice().iter().map(|c| c.re).collect::<Vec<_>>()).collect()
    }
}

impl DelayField for DensityField {
    fn dim(&self) -> usize {
        self.density.dim()
    }

    fn lags(&self) -> &[f64] {
        &self.lags
    }

    fn eval(&self, xi: f64, values: &[&[f64]], out: &mut [f64]) {
        let n = self.density.dim();
        let cached = self.table.as_ref().and_then(|(half, t)| {
            let q = xi / half;
            let j = q.round();
            ((q - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < t.len()).then(|| &t[j as usize])
        });
        let fresh;
        let coeffs = match cached {
            Some(c) => c,
            None => {
                fresh = self.real_coefficients(xi);
                &fresh
            }
        };
        out.fill(0.0);
        for (slot, v) in values.iter().enumerate() {
            let c = &coeffs[slot * n * n..(slot + 1) * n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i] += c[i * n + j] * v[j];
                }
            }
        }
    }
}

/// History segment `q(ξ₀ + θ)` on the uniform grid `θ_i = −r + i·r/M_g`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentState {
    pub span: f64,
    /// `M_g + 1` samples, oldest first.
    pub values: Vec<Vec<f64>>,
    /// Optional `dq/dξ` at the samples; enables Hermite interpolation.
    pub slopes: Option<Vec<Vec<f64>>>,
}

/// Smallest admissible grid per delay interval.
pub const MIN_GRID: usize = 20;

impl SegmentState {
    pub fn from_fn(span: f64, grid: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let h = span / grid as f64;
        Self { span, values: (0..=grid).map(|i| f(-span + i as f64 * h)).collect(), slopes: None }
    }

    pub fn constant(span: f64, grid: usize, v: &[f64]) -> Self {
        Self::from_fn(span, grid, |_| v.to_vec())
    }

    pub fn grid(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn step(&self) -> f64 {
        self.span / self.grid() as f64
    }

    /// Flattened samples (state vector of the monodromy map).
    pub fn flatten(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn from_flat(span: f64, dim: usize, flat: &[f64]) -> Self {
        Self { span, values: flat.chunks(dim).map(<[f64]>::to_vec).collect(), slopes: None }
    }

    /// `q(ξ₀ + θ)`: Hermite cubic when slopes are known, otherwise the cubic
    /// Lagrange interpolant through the four nearest samples.
    pub fn value(&self, theta: f64, out: &mut [f64]) {
        let h = self.step();
        let m = self.grid();
        let x = (theta + self.span) / h;
        let i = (x.floor().max(0.0) as usize).min(m - 1);
        let t = x - i as f64;
        if t == 0.0 {
            out.copy_from_slice(&self.values[i]);
            return;
        }
        if let Some(s) = &self.slopes {
            hermite(&self.values[i], &self.values[i + 1], &s[i], &s[i + 1], h, t, out);
            return;
        }
        let base = i.saturating_sub(1).min(m.saturating_sub(3));
        let nodes: Vec<f64> = (0..4).map(|k| (base + k) as f64).collect();
        out.fill(0.0);
        for k in 0..4 {
            let mut w = 1.0;
            for l in 0..4 {
                if l != k {
                    w *= (x - nodes[l]) / (nodes[k] - nodes[l]);
                }
            }
            for (o, v) in out.iter_mut().zip(&self.values[base + k]) {
                *o += w * v;
            }
        }
    }
}

fn hermite(y0: &[f64], y1: &[f64], f0: &[f64], f1: &[f64], h: f64, t: f64, out: &mut [f64]) {
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    for i in 0..out.len() {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
}

/// Dense solution on `[−r, ξ_end]`: the initial segment followed by the
/// integrated steps.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub initial: SegmentState,
    /// Step end points `ξ_k`, starting with `0`.
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub slopes: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().unwrap()
    }

    pub fn value(&self, xi: f64, out: &mut [f64]) {
        if xi <= 0.0 {
            self.initial.value(xi, out);
            return;
        }
        let k = self.times.partition_point(|&t| t <= xi).clamp(1, self.times.len() - 1) - 1;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        if xi == t0 {
            out.copy_from_slice(&self.values[k]);
            return;
        }
        let h = t1 - t0;
        hermite(&self.values[k], &self.values[k + 1], &self.slopes[k], &self.slopes[k + 1], h, (xi - t0) / h, out);
    }

    /// The segment `q(ξ_end + θ)` on the initial grid. Where the samples
    /// coincide with stored points their values and slopes are copied, so a
    /// restarted integration continues with identical history.
    pub fn final_segment(&self) -> SegmentState {
        let grid = self.initial.grid();
        let span = self.initial.span;
        let h = span / grid as f64;
        let end = self.end();
        let dim = self.initial.dim();
        let tol = 1e-9 * h;
        let mut values = Vec::with_capacity(grid + 1);
        let mut slopes = Some(Vec::with_capacity(grid + 1));
        for i in 0..=grid {
            let xi = end - span + i as f64 * h;
            let stored = if xi > tol {
                let k = self.times.partition_point(|&t| t < xi - tol);
                (k < self.times.len() && (self.times[k] - xi).abs() <= tol).then(|| (self.values[k].clone(), Some(self.slopes[k].clone())))
            } else {
                let j = ((xi + span) / h).round();
                ((xi + span - j * h).abs() <= tol && j >= 0.0)
                    .then(|| (self.initial.values[j as usize].clone(), self.initial.slopes.as_ref().map(|s| s[j as usize].clone())))
            };
            match stored {
                Some((v, d)) => {
                    values.push(v);
                    match (d, slopes.as_mut()) {
                        (Some(d), Some(s)) => s.push(d),
                        _ => slopes = None,
                    }
                }
                None => {
                    let mut v = vec![0.0; dim];
                    self.value(xi, &mut v);
                    values.push(v);
                    slopes = None;
                }
            }
        }
        SegmentState { span, values, slopes }
    }
}

const BLOW_UP: f64 = 1e12;

/// Classical RK4 method of steps from the segment `initial` at `ξ = 0` to
/// `xi_end`, step `h ≤ min(positive lag, segment spacing)`; delayed stage
/// values come from the dense history.
pub fn integrate_mos(field: &dyn DelayField, initial: &SegmentState, xi_end: f64, h: f64) -> Result<Trajectory, OracleError> {
    let n = field.dim();
    let lags = field.lags().to_vec();
    let min_lag = lags.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    let spacing = initial.step();
    if !(h > 0.0) || h > min_lag * (1.0 + 1e-12) || h > spacing * (1.0 + 1e-12) {
        return Err(OracleError::StepTooLarge { step: h, limit: min_lag.min(spacing) });
    }
    if initial.grid() < MIN_GRID || initial.dim() != n {
        return Err(OracleError::GridTooSmall { grid: initial.grid(), minimum: MIN_GRID });
    }
    let max_lag = lags.iter().copied().fold(0.0, f64::max);
    if (initial.span - max_lag).abs() > 1e-12 * max_lag.max(1.0) && initial.span < max_lag {
        return Err(OracleError::StepTooLarge { step: max_lag, limit: initial.span });
    }
    let mut traj = Trajectory { initial: initial.clone(), times: vec![0.0], values: vec![initial.values.last().unwrap().clone()], slopes: Vec::new() };

    let mut slope0 = vec![0.0; n];
    eval_at(field, &traj, 0.0, &traj.values[0].clone(), &mut slope0);
    traj.slopes.push(slope0);

    let steps = (xi_end / h - 1e-9).ceil().max(0.0) as usize;
    let mut y = traj.values[0].clone();
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp = vec![0.0; n];
    for s in 0..steps {
        let t = s as f64 * h;
        let dt = (xi_end - t).min(h);
        k[0].clone_from(traj.slopes.last().unwrap());
        for (stage, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                tmp[i] = y[i] + c * dt * k[stage - 1][i];
            }
            let (_, tail) = k.split_at_mut(stage);
            eval_at(field, &traj, t + c * dt, &tmp, &mut tail[0]);
        }
        for i in 0..n {
            y[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
            return Err(OracleError::BlowUp { xi: t + dt });
        }
        let t1 = if s + 1 == steps { xi_end } else { (s + 1) as f64 * h };
        traj.times.push(t1);
        traj.values.push(y.clone());
        let mut f1 = vec![0.0; n];
        eval_at(field, &traj, t1, &y, &mut f1);
        traj.slopes.push(f1);
    }
    Ok(traj)
}

/// Field at `ξ` with the current stage value standing in for lag 0. Delayed
/// points never reach past the last completed step because `h ≤ min lag`.
fn eval_at(field: &dyn DelayField, traj: &Trajectory, xi: f64, now: &[f64], out: &mut [f64]) {
    let n = field.dim();
    let delayed: Vec<Vec<f64>> = field
        .lags()
        .iter()
        .map(|&r| {
            if r == 0.0 {
                now.to_vec()
            } else {
                let mut v = vec![0.0; n];
                traj.value(xi - r, &mut v);
                v
            }
        })
        .collect();
    let refs: Vec<&[f64]> = delayed.iter().map(Vec::as_slice).collect();
    field.eval(xi, &refs, out);
}
