//! Explicit finite-difference solver for the mild (Ito-Skorokhod) parabolic
//! Anderson equation on a one-dimensional torus, with multiplicative
//! space-time white or spatially correlated noise, plus the Picard-localized
//! approximation and the renormalized Feynman-Kac cross-check for bounded
//! covariances.

use crate::covariance::{CovarianceSpec, SpaceCovariance, TimeCovariance, SPECTRAL_CLIP_TOL};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::sample_stationary_field;
use crate::grid::{GridSpec, LatticeField};
use crate::rng::CounterRng;
use rustfft::num_complex::Complex;

/// Overflow guard: fields past this magnitude abort the run rather than
/// silently clip, since blow-up corrupts max statistics.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// Initial condition: bounded with positive infimum.
#[derive(Debug, Clone)]
pub enum InitialData {
    Constant(f64),
    Tabulated(Vec<f64>),
}

impl InitialData {
    fn build(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        let v = match self {
            InitialData::Constant(c) => vec![*c; grid.sites()],
            InitialData::Tabulated(t) => {
                if t.len() != grid.sites() {
                    return Err(Error::InvalidParameter("initial data length != grid sites".into()));
                }
                t.clone()
            }
        };
        let inf = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(inf > 0.0 && sup.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial data must satisfy 0 < inf <= sup < infinity (inf={inf}, sup={sup})"
            )));
        }
        Ok(v)
    }
}

/// Spatial structure of the driving noise.
#[derive(Debug, Clone)]
pub enum NoiseMode {
    /// Space-time white noise (d = 1): Delta W_j ~ N(0, dt dx).
    WhiteSpace,
    /// Spatially correlated martingale measure with covariance gamma:
    /// cell forcing has Cov = dt * gamma_cell(x_j - x_k).
    CorrelatedSpace(SpaceCovariance),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub theta: f64,
    pub t_final: f64,
    pub grid: GridSpec,
    pub noise: NoiseMode,
    pub u0: InitialData,
    pub store_trajectory: bool,
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.d != 1 {
            return Err(Error::InvalidParameter("the lattice solver runs in d = 1".into()));
        }
        if self.grid.dt > self.grid.dx * self.grid.dx * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "explicit scheme needs dt <= dx^2 (dt={}, dx^2={})",
                self.grid.dt,
                self.grid.dx * self.grid.dx
            )));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::InvalidParameter("theta must be >= 0".into()));
        }
        let steps = (self.t_final / self.grid.dt).round() as usize;
        if steps == 0 || (steps as f64 * self.grid.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::InvalidParameter(
                "t_final must be a positive integer multiple of dt".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.grid.dt).round() as usize
    }
}

/// One explicit Euler step:
/// u'_j = u_j + dt/(2 dx^2) (u_{j+1} - 2 u_j + u_{j-1}) + theta u_j dW_j / dx
/// on the periodic lattice. Expectation is preserved exactly: the noise
/// increment is independent of u_j (non-anticipating coupling).
pub fn step_explicit(
    u: &LatticeField,
    noise_slice: &[f64],
    theta: f64,
    dt: f64,
    dx: f64,
) -> Result<LatticeField> {
    let nx = u.values.len();
    if noise_slice.len() != nx {
        return Err(Error::InvalidParameter("noise slice length mismatch".into()));
    }
    if dt > dx * dx * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter("explicit scheme needs dt <= dx^2".into()));
    }
    let c = dt / (2.0 * dx * dx);
    let mut out = vec![0.0; nx];
    for j in 0..nx {
        let up = u.values[(j + 1) % nx];
        let dn = u.values[(j + nx - 1) % nx];
        let here = u.values[j];
        out[j] = here + c * (up - 2.0 * here + dn) + theta * here * noise_slice[j] / dx;
        if !out[j].is_finite() || out[j].abs() > OVERFLOW_GUARD {
            return Err(Error::Unstable { step: 0, guard: OVERFLOW_GUARD });
        }
    }
    Ok(LatticeField { values: out, grid: u.grid.clone(), time: u.time + dt })
}

/// Spatial noise generator for one solve: either i.i.d. white increments or
/// a circulant-correlated sample per step, both addressed by
/// (seed, step, site) counters.
enum NoiseGen {
    White { sd: f64 },
    Correlated { sqrt_spec: Vec<f64>, sd_scale: f64 },
}

impl NoiseGen {
    fn new(cfg: &SolveConfig) -> Result<Self> {
        match &cfg.noise {
            NoiseMode::WhiteSpace => Ok(NoiseGen::White { sd: (cfg.grid.dt * cfg.grid.dx).sqrt() }),
            NoiseMode::CorrelatedSpace(space) => {
                if space.dim() != 1 {
                    return Err(Error::InvalidParameter("correlated noise mode needs d = 1".into()));
                }
                // torus ring of the cell-averaged covariance
                let nx = cfg.grid.nx;
                let table = space_cell_table(space, cfg.grid.dx, nx / 2 + 1)?;
                let ring: Vec<f64> = (0..nx).map(|k| table[k.min(nx - k)]).collect();
                let mut buf: Vec<Complex<f64>> =
                    ring.iter().map(|v| Complex::new(*v, 0.0)).collect();
                fft::fftn(&mut buf, &[nx], false);
                let total: f64 = buf.iter().map(|c| c.re.abs()).sum();
                let worst = buf.iter().map(|c| c.re).fold(0.0f64, f64::min);
                if worst < -SPECTRAL_CLIP_TOL * total {
                    return Err(Error::EmbeddingFailed(-worst / total));
                }
                let sqrt_spec = buf.iter().map(|c| c.re.max(0.0).sqrt()).collect();
                // pre-multiplied by dx so the stencil's /dx yields the
                // correlated forcing xi with Cov = dt * gamma_cell
                Ok(NoiseGen::Correlated { sqrt_spec, sd_scale: cfg.grid.dt.sqrt() * cfg.grid.dx })
            }
        }
    }

    /// Fill the forcing for `step`: the white case yields dW with variance
    /// dt*dx (the stencil divides by dx); the correlated case directly
    /// yields xi = dM/dx with covariance dt * gamma_cell, pre-multiplied by
    /// dx so both paths share the `/dx` in the stencil.
    fn fill(&self, rng: &mut CounterRng, step: usize, nx: usize, out: &mut [f64]) {
        let base = (step * nx) as u64;
        match self {
            NoiseGen::White { sd } => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = sd * rng.normal_at(base + j as u64);
                }
            }
            NoiseGen::Correlated { sqrt_spec, sd_scale } => {
                // circulant sample: Re(IFFT(sqrt(lam) z)) with E|z|^2 = 2
                let n = nx;
                let mut buf: Vec<Complex<f64>> = (0..n)
                    .map(|k| {
                        let re = rng.normal_at(2 * (base + k as u64));
                        let im = rng.normal_at(2 * (base + k as u64) + 1);
                        Complex::new(re, im) * (sqrt_spec[k] / (n as f64).sqrt())
                    })
                    .collect();
                fft::fftn(&mut buf, &[n], true);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = buf[j].re * sd_scale;
                }
            }
        }
    }

    fn is_correlated(&self) -> bool {
        matches!(self, NoiseGen::Correlated { .. })
    }
}

fn space_cell_table(space: &SpaceCovariance, dx: f64, n: usize) -> Result<Vec<f64>> {
    use crate::quad::cell_averaged_power_table;
    match space {
        SpaceCovariance::DiracDelta => {
            let mut t = vec![0.0; n + 1];
            t[0] = 1.0 / dx;
            Ok(t)
        }
        SpaceCovariance::Riesz { alpha, d: 1 } => Ok(cell_averaged_power_table(*alpha, dx, n)),
        SpaceCovariance::SmoothBounded { gamma0, width, d: 1 } => Ok((0..=n)
            .map(|k| {
                let x = k as f64 * dx;
                gamma0 * (-x * x / (2.0 * width * width)).exp()
            })
            .collect()),
        SpaceCovariance::ProductFractional { hurst } if hurst.len() == 1 => {
            Ok(cell_averaged_power_table(2.0 - 2.0 * hurst[0], dx, n))
        }
        _ => Err(Error::InvalidParameter("correlated noise table needs a 1-d covariance".into())),
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub final_field: LatticeField,
    /// Row-major [step][site] including the initial slice when requested.
    pub trajectory: Option<Vec<f64>>,
}

/// Integrate the lattice equation to t_final. Deterministic in (cfg, seed).
pub fn solve(cfg: &SolveConfig, seed: u64) -> Result<SolveOutput> {
    cfg.validate()?;
    let grid = &cfg.grid;
    let nx = grid.nx;
    let steps = cfg.steps();
    let gen = NoiseGen::new(cfg)?;
    if gen.is_correlated() {
        if let NoiseMode::CorrelatedSpace(sp) = &cfg.noise {
            let spec_probe = CovarianceSpec::new(TimeCovariance::WhiteTime, sp.clone(), 1.0)?;
            if !crate::covariance::dalang_check(&spec_probe) {
                return Err(Error::Inadmissible("Dalang condition fails for this spatial covariance".into()));
            }
        }
    }
    let mut rng = CounterRng::new(seed, 2);
    let mut u = LatticeField { values: cfg.u0.build(grid)?, grid: grid.clone(), time: 0.0 };
    let mut traj = if cfg.store_trajectory {
        let mut t = Vec::with_capacity((steps + 1) * nx);
        t.extend_from_slice(&u.values);
        Some(t)
    } else {
        None
    };
    let mut noise = vec![0.0; nx];
    let c = grid.dt / (2.0 * grid.dx * grid.dx);
    for step in 0..steps {
        gen.fill(&mut rng, step, nx, &mut noise);
        // inlined stencil (hot loop)
        let prev = u.values;
        let mut next = vec![0.0; nx];
        let mut bad = false;
        for j in 0..nx {
            let up = prev[(j + 1) % nx];
            let dn = prev[(j + nx - 1) % nx];
            let here = prev[j];
            let v = here + c * (up - 2.0 * here + dn) + cfg.theta * here * noise[j] / grid.dx;
            if !v.is_finite() || v.abs() > OVERFLOW_GUARD {
                bad = true;
                break;
            }
            next[j] = v;
        }
        if bad {
            return Err(Error::Unstable { step, guard: OVERFLOW_GUARD });
        }
        u = LatticeField { values: next, grid: grid.clone(), time: (step + 1) as f64 * grid.dt };
        if let Some(t) = traj.as_mut() {
            t.extend_from_slice(&u.values);
        }
    }
    Ok(SolveOutput { final_field: u, trajectory: traj })
}

// ---------------------------------------------------------------------------
// Picard localization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PicardConfig {
    pub beta: f64,
    pub n_iter: usize,
}

impl PicardConfig {
    /// Default iteration count floor(log beta) + 1.
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        Ok(Self { beta, n_iter: (beta.ln().max(0.0).floor() as usize) + 1 })
    }

    pub fn with_iterations(beta: f64, n_iter: usize) -> Result<Self> {
        if !(beta > 0.0) || n_iter == 0 && false {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        Ok(Self { beta, n_iter })
    }

    /// Sites at least this far apart have disjoint dependence regions.
    pub fn separation_radius(&self, t: f64) -> f64 {
        2.0 * self.beta * ((self.beta.ln().max(0.0).floor()) + 1.0) * (1.0 + t.sqrt())
    }
}

/// n-fold Picard iteration of the truncated-kernel mild equation, space-time
/// white noise case (K = delta_0, so the tent truncation leaves the kernel
/// unchanged and localization acts through the spatial window alone).
/// Returns U_beta(t, .) on the full torus.
pub fn picard_localized_solve(
    cfg: &SolveConfig,
    pcfg: &PicardConfig,
    seed: u64,
) -> Result<LatticeField> {
    cfg.validate()?;
    if !matches!(cfg.noise, NoiseMode::WhiteSpace) {
        return Err(Error::InvalidParameter(
            "picard localization is implemented for the space-time white case".into(),
        ));
    }
    let grid = &cfg.grid;
    let (nx, dx, dt) = (grid.nx, grid.dx, grid.dt);
    let steps = cfg.steps();
    let t = cfg.t_final;
    let window = pcfg.beta * t.sqrt();
    if 2.0 * window >= grid.circumference() {
        return Err(Error::DomainTooSmall(format!(
            "picard window half-width {window} exceeds torus; increase domain"
        )));
    }
    let win_sites = (window / dx).floor() as isize;

    // same white-noise stream the plain solver would use
    let sd = (dt * dx).sqrt();
    let mut rng = CounterRng::new(seed, 2);
    let mut dw = vec![0.0; steps * nx];
    for step in 0..steps {
        for j in 0..nx {
            dw[step * nx + j] = sd * rng.normal_at((step * nx + j) as u64);
        }
    }

    // U^{(beta,0)} == 1
    let mut u_prev = vec![1.0; (steps + 1) * nx];
    let mut u_next = vec![0.0; (steps + 1) * nx];
    for _ in 0..pcfg.n_iter {
        // slice 0 is the initial condition 1
        for j in 0..nx {
            u_next[j] = 1.0;
        }
        for i in 1..=steps {
            let ti = i as f64 * dt;
            for j in 0..nx {
                let mut acc = 0.0;
                for ip in 0..i {
                    let tau = ti - ip as f64 * dt;
                    // heat kernel support cut at 8 sigma and at the window
                    let reach = ((8.0 * tau.sqrt()) / dx).ceil() as isize;
                    let reach = reach.min(win_sites);
                    let inv2tau = 1.0 / (2.0 * tau);
                    let norm = 1.0 / (2.0 * std::f64::consts::PI * tau).sqrt();
                    let row = &u_prev[ip * nx..(ip + 1) * nx];
                    let drow = &dw[ip * nx..(ip + 1) * nx];
                    for o in -reach..=reach {
                        let y = o as f64 * dx;
                        let p = norm * (-y * y * inv2tau).exp();
                        let jj = (j as isize + o).rem_euclid(nx as isize) as usize;
                        acc += p * row[jj] * drow[jj];
                    }
                }
                u_next[i * nx + j] = 1.0 + cfg.theta * acc;
            }
        }
        std::mem::swap(&mut u_prev, &mut u_next);
    }
    Ok(LatticeField {
        values: u_prev[steps * nx..].to_vec(),
        grid: grid.clone(),
        time: t,
    })
}

// ---------------------------------------------------------------------------
// renormalized Feynman-Kac (bounded gamma)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RenormFkResult {
    pub mean: f64,
    pub mean_se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
}

/// Nested Monte Carlo for the renormalized Feynman-Kac representation
/// u(t,x) = e^{-(theta^2 t/2) gamma(0)} E_x[exp{theta int V(t-s,B_s) ds} u0(B_t)]
/// with white-in-time, smooth bounded-in-space potential. The discrete
/// renormalizer uses the exact lattice conditional variance, so the
/// estimator mean equals the heat-smoothed initial condition exactly in
/// distribution. Second moments come from paired independent path batches,
/// which makes them unbiased for E[u^2].
pub fn renormalized_fk_solve(
    cfg: &SolveConfig,
    n_fields: usize,
    n_paths: usize,
    seed: u64,
    x0: f64,
) -> Result<RenormFkResult> {
    cfg.validate()?;
    let space = match &cfg.noise {
        NoiseMode::CorrelatedSpace(s @ SpaceCovariance::SmoothBounded { .. }) => s.clone(),
        _ => {
            return Err(Error::InvalidParameter(
                "renormalization undefined, gamma(0)=infinity: needs a smooth bounded covariance".into(),
            ))
        }
    };
    let grid = &cfg.grid;
    let steps = cfg.steps();
    let spec = CovarianceSpec::new(TimeCovariance::WhiteTime, space.clone(), cfg.theta.max(1e-300))?;
    let u0 = cfg.u0.build(grid)?;
    let table = space_cell_table(&space, grid.dx, grid.nx / 2 + 1)?;
    let g0 = table[0];
    let g1 = table[1.min(grid.nx / 2)];
    let dt = grid.dt;

    let mut means = Vec::with_capacity(n_fields);
    let mut prods = Vec::with_capacity(n_fields);
    for f in 0..n_fields {
        let field = sample_stationary_field(&spec, grid, seed ^ (0x9e3779b97f4a7c15u64.wrapping_mul(f as u64 + 1)))?;
        let mut batch = [0.0f64; 2];
        for (b, slot) in batch.iter_mut().enumerate() {
            let mut rng = CounterRng::new(seed, 3 + 2 * f as u64 + b as u64);
            let mut acc = Vec::with_capacity(n_paths);
            for p in 0..n_paths {
                let base = (p * steps) as u64;
                let mut pos = x0;
                let mut s_int = 0.0;
                let mut var = 0.0;
                for n in 0..steps {
                    // V(t - s, .) -> reversed slice index
                    let slice = steps - 1 - n;
                    let fr = pos / grid.dx;
                    let j0 = fr.floor();
                    let a = fr - j0;
                    let j0 = (j0 as isize + (grid.nx / 2) as isize).rem_euclid(grid.nx as isize) as usize;
                    let j1 = (j0 + 1) % grid.nx;
                    let v = (1.0 - a) * field.at(slice, j0) + a * field.at(slice, j1);
                    s_int += v * dt;
                    var += dt * ((1.0 - a) * (1.0 - a) * g0 + 2.0 * a * (1.0 - a) * g1 + a * a * g0);
                    pos += dt.sqrt() * rng.normal_at(base + n as u64);
                }
                let end_site = grid.site_of(pos);
                let x = (cfg.theta * s_int - cfg.theta * cfg.theta * var / 2.0).exp() * u0[end_site];
                acc.push(x);
            }
            *slot = crate::pairwise_sum(&acc) / n_paths as f64;
        }
        means.push(0.5 * (batch[0] + batch[1]));
        prods.push(batch[0] * batch[1]);
    }
    let (mean, mean_se) = crate::mean_and_se(&means);
    let (m2, m2_se) = crate::mean_and_se(&prods);
    Ok(RenormFkResult { mean, mean_se, second_moment: m2, second_moment_se: m2_se })
}
