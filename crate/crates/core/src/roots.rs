//! Grid scan + Newton refinement for zeros of analytic functions in a
//! complex rectangle.

use num_complex::Complex64;
use rayon::prelude::*;

/// Rectangle `[re0, re1] × [im0, im1]` sampled on an `n_re × n_im` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchBox {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self { re: [-3.0, 1.0], im: [-0.5, 0.5], n_re: 61, n_im: 31 }
    }
}

impl SearchBox {
    pub fn new(re: [f64; 2], im: [f64; 2]) -> Self {
        Self { re, im, ..Self::default() }
    }

    pub fn with_grid(mut self, n_re: usize, n_im: usize) -> Self {
        self.n_re = n_re;
        self.n_im = n_im;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.re[0] < self.re[1] && self.im[0] < self.im[1] && self.n_re >= 2 && self.n_im >= 2
            && self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    pub fn translated(&self, di: f64) -> Self {
        Self { im: [self.im[0] + di, self.im[1] + di], ..self.clone() }
    }

    pub fn spacing(&self) -> (f64, f64) {
        ((self.re[1] - self.re[0]) / (self.n_re - 1) as f64, (self.im[1] - self.im[0]) / (self.n_im - 1) as f64)
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        let (hr, hi) = self.spacing();
        Complex64::new(self.re[0] + i as f64 * hr, self.im[0] + j as f64 * hi)
    }

    /// Membership with a margin of `pad` grid spacings.
    pub fn contains(&self, z: Complex64, pad: f64) -> bool {
        let (hr, hi) = self.spacing();
        z.re >= self.re[0] - pad * hr && z.re <= self.re[1] + pad * hr && z.im >= self.im[0] - pad * hi && z.im <= self.im[1] + pad * hi
    }

    pub fn diameter(&self) -> f64 {
        (self.re[1] - self.re[0]).hypot(self.im[1] - self.im[0])
    }
}

/// Grid points where `value` (e.g. `log|f|`) is a local minimum among the
/// 8-neighbourhood. `None` marks masked points, which never seed.
pub fn scan_seeds<F>(bx: &SearchBox, value: F) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Option<f64> + Sync,
{
    let (nr, ni) = (bx.n_re, bx.n_im);
    let vals: Vec<Option<f64>> = (0..nr * ni)
        .into_par_iter()
        .map(|k| value(bx.point(k / ni, k % ni)).filter(|v| !v.is_nan()))
        .collect();
    let at = |i: usize, j: usize| vals[i * ni + j];
    let mut seeds = Vec::new();
    for i in 0..nr {
        for j in 0..ni {
            let Some(v) = at(i, j) else { continue };
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a < 0 || b < 0 || a >= nr as i64 || b >= ni as i64 {
                        continue;
                    }
                    if let Some(w) = at(a as usize, b as usize) {
                        // Strict on one side of ties so plateaus seed once.
                        if w < v || (w == v && (a, b) < (i as i64, j as i64)) {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                seeds.push(bx.point(i, j));
            }
        }
    }
    seeds
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop once `|step| ≤ step_tol · (1 + |z|)`.
    pub step_tol: f64,
    /// Largest admissible single step.
    pub max_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iter: 60, step_tol: 1e-13, max_step: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NewtonOutcome {
    Converged { root: Complex64, iterations: usize, last_step: f64 },
    Stalled { seed: Complex64, last: Complex64, reason: String },
}

/// Newton iteration with central-difference derivative,
/// `h = 1e−6 (1 + |z|)`. `f` returns `None` where it cannot be evaluated;
/// such a point is perturbed once by `1e−7 (1 + |z|)(1 + i)`.
pub fn newton<F>(f: F, seed: Complex64, opts: &NewtonOptions) -> NewtonOutcome
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let stall = |last: Complex64, reason: &str| NewtonOutcome::Stalled { seed, last, reason: reason.to_string() };
    let mut z = seed;
    let mut best: Option<(f64, Complex64)> = None;
    for it in 0..opts.max_iter {
        // A singular level (continued-fraction breakdown) sits on a thin set:
        // nudge off it once before giving up.
        let fz = match f(z) {
            Some(v) => v,
            None => {
                z += Complex64::new(1.0, 1.0) * (1e-7 * (1.0 + z.norm()));
                match f(z) {
                    Some(v) => v,
                    None => return stall(z, "evaluation failed"),
                }
            }
        };
        if fz.norm() == 0.0 {
            return NewtonOutcome::Converged { root: z, iterations: it, last_step: 0.0 };
        }
        let h = 1e-6 * (1.0 + z.norm());
        let (Some(fp), Some(fm)) = (f(z + h), f(z - h)) else { return stall(z, "derivative evaluation failed") };
        let d = (fp - fm) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return stall(z, "vanishing derivative");
        }
        let mut step = fz / d;
        if step.norm() > opts.max_step {
            step *= opts.max_step / step.norm();
        }
        z -= step;
        let s = step.norm();
        if s <= opts.step_tol * (1.0 + z.norm()) {
            return NewtonOutcome::Converged { root: z, iterations: it + 1, last_step: s };
        }
        // Roundoff floor: accept a tiny step that stopped decreasing.
        if let Some((bs, _)) = best {
            if s < 1e-9 * (1.0 + z.norm()) && s >= bs {
                return NewtonOutcome::Converged { root: z, iterations: it + 1, last_step: s };
            }
        }
        if best.is_none_or(|(bs, _)| s < bs) {
            best = Some((s, z));
        }
    }
    stall(z, "iteration limit")
}

/// All zeros found in `bx`: scan of `log|f|`, Newton from every seed,
/// converged roots inside the box (one spacing margin) deduplicated within
/// `radius`. Also returns stalled seeds.
pub fn find_roots<F>(bx: &SearchBox, f: F, opts: &NewtonOptions, radius: f64) -> (Vec<Complex64>, Vec<NewtonOutcome>)
where
    F: Fn(Complex64) -> Option<Complex64> + Sync,
{
    let seeds = scan_seeds(bx, |z| f(z).map(|v| v.norm().ln()));
    let outcomes: Vec<NewtonOutcome> = seeds.par_iter().map(|&s| newton(&f, s, opts)).collect();
    let mut roots: Vec<Complex64> = Vec::new();
    let mut stalls = Vec::new();
    for o in outcomes {
        match o {
            NewtonOutcome::Converged { root, .. } => {
                if bx.contains(root, 1.0) && roots.iter().all(|r| (r - root).norm() > radius) {
                    roots.push(root);
                }
            }
            s => stalls.push(s),
        }
    }
    let boxed: Vec<(Complex64, SearchBox)> = seeds.iter().map(|&z| (z, bx.clone())).collect();
    deflation_sweep(&boxed, &mut roots, &f, opts, 2.0 * bx.diameter().max(1.0), radius);
    sort_spectrum(&mut roots);
    (roots, stalls)
}

/// Roots closer together than a grid cell share one seed. Reruns Newton from
/// every seed on `f(z) / Π (z − r)`, dividing out the known roots within
/// `near` of the seed, then polishes on `f` itself. Repeats while new roots
/// (further than `radius` from known ones, inside the seed's box) appear.
pub fn deflation_sweep<F>(seeds: &[(Complex64, SearchBox)], raw: &mut Vec<Complex64>, f: F, opts: &NewtonOptions, near: f64, radius: f64)
where
    F: Fn(Complex64) -> Option<Complex64> + Sync,
{
    for _ in 0..3 {
        let known_roots = raw.clone();
        let found: Vec<Complex64> = seeds
            .par_iter()
            .filter_map(|(seed, b)| {
                let known: Vec<Complex64> = known_roots.iter().copied().filter(|r| (r - seed).norm() < near).collect();
                if known.is_empty() {
                    return None;
                }
                let deflated = |z: Complex64| {
                    let d = known.iter().fold(Complex64::new(1.0, 0.0), |acc, r| acc * (z - r));
                    f(z).map(|v| v / d)
                };
                // A seed sitting on a known root would start on the pole.
                let start = if known.iter().any(|r| (r - seed).norm() < 1e-6) { seed + Complex64::new(1e-3, 1e-3) } else { *seed };
                let NewtonOutcome::Converged { root, .. } = newton(deflated, start, opts) else { return None };
                let NewtonOutcome::Converged { root, .. } = newton(&f, root, opts) else { return None };
                b.contains(root, 1.0).then_some(root)
            })
            .collect();
        let before = raw.len();
        for root in found {
            if raw.iter().all(|r| (r - root).norm() > radius) {
                raw.push(root);
            }
        }
        if raw.len() == before {
            break;
        }
    }
}

/// Deterministic order: descending real part, then ascending imaginary part.
pub fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

/// `|a − b|` modulo `i`: representatives on opposite strip edges coincide.
pub fn strip_distance(a: Complex64, b: Complex64) -> f64 {
    let d = a - b;
    d.re.hypot(d.im - d.im.round())
}

/// Strip representative `λ − i m` with `Im ∈ (−½, ½]`, and the shift `m`.
pub fn strip_map(lambda: Complex64) -> (Complex64, i64) {
    let m = (lambda.im - 0.5).ceil() as i64;
    (lambda - Complex64::new(0.0, m as f64), m)
}
