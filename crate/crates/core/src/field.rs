//! Gaussian noise synthesis on lattices: white-noise sheet increments for
//! the finite-difference solver and stationary correlated fields V(t, x)
//! for quenched Feynman-Kac runs, via circulant embedding of the
//! cell-averaged covariance.

use crate::covariance::{CovarianceSpec, Regime, SpaceCovariance, SPECTRAL_CLIP_TOL};
use crate::error::{Error, Result};
use crate::fft;
use crate::grid::GridSpec;
use crate::rng::CounterRng;
use rustfft::num_complex::Complex;

/// Brownian-sheet cell increments: entries i.i.d. N(0, dt * dx^d) indexed
/// row-major as [time][site].
#[derive(Debug, Clone)]
pub struct NoiseSheet {
    pub increments: Vec<f64>,
    pub grid: GridSpec,
    pub seed: u64,
}

impl NoiseSheet {
    pub fn slice(&self, step: usize) -> &[f64] {
        let s = self.grid.sites();
        &self.increments[step * s..(step + 1) * s]
    }
}

/// One realization of the correlated field V(t_i, x_j), row-major
/// [time][site].
#[derive(Debug, Clone)]
pub struct FieldRealization {
    pub values: Vec<f64>,
    pub grid: GridSpec,
    pub spec: CovarianceSpec,
    pub seed: u64,
}

impl FieldRealization {
    pub fn at(&self, step: usize, site: usize) -> f64 {
        self.values[step * self.grid.sites() + site]
    }
}

/// Sample a white-noise sheet. Deterministic in (grid, seed): entry k is
/// addressed by counter k on stream 0.
pub fn sample_white_sheet(grid: &GridSpec, seed: u64) -> NoiseSheet {
    let n = grid.nt * grid.sites();
    let sd = (grid.dt * grid.dx.powi(grid.d as i32)).sqrt();
    let mut rng = CounterRng::new(seed, 0);
    let mut increments = vec![0.0; n];
    for (k, v) in increments.iter_mut().enumerate() {
        *v = sd * rng.normal_at(k as u64);
    }
    NoiseSheet { increments, grid: grid.clone(), seed }
}

/// Cell-averaged covariance ring (minimal image on a padded torus of size
/// `2 * n`) built from per-offset cell averages `table[0..=n]`.
fn ring_from_table(table: &[f64], n: usize) -> Vec<f64> {
    let m = 2 * n;
    (0..m)
        .map(|k| {
            let km = k.min(m - k);
            table[km]
        })
        .collect()
}

/// Per-axis cell-average tables of the spatial covariance; exact for the
/// separable kinds. Returns one table per axis, offsets 0..=n.
fn space_axis_tables(space: &SpaceCovariance, dx: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    use crate::quad::cell_averaged_power_table;
    match space {
        SpaceCovariance::DiracDelta => {
            let mut t = vec![0.0; n + 1];
            t[0] = 1.0 / dx;
            Ok(vec![t])
        }
        SpaceCovariance::Riesz { alpha, d: 1 } => {
            Ok(vec![cell_averaged_power_table(*alpha, dx, n)])
        }
        SpaceCovariance::ProductFractional { hurst } => Ok(hurst
            .iter()
            .map(|h| cell_averaged_power_table(2.0 - 2.0 * h, dx, n))
            .collect()),
        SpaceCovariance::SmoothBounded { gamma0, width, d } => {
            // separable Gaussian: per-axis factors, amplitude on the first axis
            let mut out = Vec::with_capacity(*d);
            for axis in 0..*d {
                let amp = if axis == 0 { *gamma0 } else { 1.0 };
                out.push(
                    (0..=n)
                        .map(|k| {
                            let x = k as f64 * dx;
                            amp * (-x * x / (2.0 * width * width)).exp()
                        })
                        .collect(),
                );
            }
            Ok(out)
        }
        SpaceCovariance::Riesz { .. } => Err(Error::InvalidParameter(
            "stationary field synthesis supports separable spatial covariances (d=1 Riesz, product-fractional, smooth bump)"
                .into(),
        )),
    }
}

/// Spectral weights of one circulant axis: eigenvalues of the ring, with
/// tiny negative mass clipped and larger violations rejected.
fn axis_spectrum(ring: &[f64]) -> Result<Vec<f64>> {
    let m = ring.len();
    let mut buf: Vec<Complex<f64>> = ring.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft::fftn(&mut buf, &[m], false);
    let mut lam: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let total: f64 = lam.iter().map(|v| v.abs()).sum();
    let worst = lam.iter().cloned().fold(0.0f64, |acc, v| acc.min(v));
    if worst < -SPECTRAL_CLIP_TOL * total {
        return Err(Error::EmbeddingFailed(-worst / total));
    }
    for v in lam.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(lam)
}

/// Sample a stationary Gaussian field whose lattice covariance is the
/// cell-averaged gamma_0(s-t) gamma(x-y), by separable circulant embedding
/// in time and each spatial axis (padding factor 2 per axis).
pub fn sample_stationary_field(
    spec: &CovarianceSpec,
    grid: &GridSpec,
    seed: u64,
) -> Result<FieldRealization> {
    let report = crate::covariance::regime_classify(spec);
    if report.is_white_time() {
        return Err(Error::Inadmissible(
            "white-in-time potential is not pointwise defined; use the SPDE or renormalized solvers"
                .into(),
        ));
    }
    if grid.d != spec.dim() {
        return Err(Error::InvalidParameter("grid and covariance dimensions differ".into()));
    }
    if report.regime == Regime::FracTimeDirac {
        return Err(Error::Inadmissible(
            "delta_0 spatial covariance has no pointwise field realization".into(),
        ));
    }

    // per-axis spectra: time axis then d spatial axes
    let time_table = spec.time.cell_average_table(grid.dt, grid.nt);
    let mut spectra = vec![axis_spectrum(&ring_from_table(&time_table, grid.nt))?];
    for t in space_axis_tables(&spec.space, grid.dx, grid.nx)? {
        spectra.push(axis_spectrum(&ring_from_table(&t, grid.nx))?);
    }

    // padded shape and complex white noise
    let shape: Vec<usize> = spectra.iter().map(|s| s.len()).collect();
    let total: usize = shape.iter().product();
    // complex circular noise with E|z|^2 = 2: the real part of the synthesis
    // then carries the full target covariance
    let mut rng = CounterRng::new(seed, 1);
    let mut buf: Vec<Complex<f64>> = (0..total)
        .map(|k| {
            let re = rng.normal_at(2 * k as u64);
            let im = rng.normal_at(2 * k as u64 + 1);
            Complex::new(re, im)
        })
        .collect();

    // scale by sqrt of the separable spectrum
    let strides: Vec<usize> =
        (0..shape.len()).map(|a| shape[a + 1..].iter().product()).collect();
    for (k, c) in buf.iter_mut().enumerate() {
        let mut lam = 1.0;
        for (a, sp) in spectra.iter().enumerate() {
            let idx = (k / strides[a]) % shape[a];
            lam *= sp[idx];
        }
        *c *= (lam / total as f64).sqrt();
    }
    fft::fftn(&mut buf, &shape, true);

    // extract the physical sub-block (first nt x nx^d corner)
    let mut values = vec![0.0; grid.nt * grid.sites()];
    let phys: Vec<usize> = std::iter::once(grid.nt)
        .chain(std::iter::repeat(grid.nx).take(grid.d))
        .collect();
    let phys_strides: Vec<usize> =
        (0..phys.len()).map(|a| phys[a + 1..].iter().product()).collect();
    for (i, v) in values.iter_mut().enumerate() {
        let mut src = 0;
        for a in 0..phys.len() {
            let idx = (i / phys_strides[a]) % phys[a];
            src += idx * strides[a];
        }
        *v = buf[src].re;
    }
    Ok(FieldRealization { values, grid: grid.clone(), spec: spec.clone(), seed })
}

/// Unbiased cross-moment estimate of the field at a (time, space) lag with
/// jackknife standard error over realizations. Spatial lag applies to the
/// first axis; averaging runs over all valid positions.
pub fn empirical_covariance(
    realizations: &[FieldRealization],
    lag_t: usize,
    lag_x: usize,
) -> Result<(f64, f64)> {
    if realizations.len() < 2 {
        return Err(Error::InvalidParameter("need >= 2 realizations".into()));
    }
    let g = &realizations[0].grid;
    if lag_t >= g.nt || lag_x >= g.nx {
        return Err(Error::InvalidParameter("lag outside grid".into()));
    }
    let sites = g.sites();
    let per: Vec<f64> = realizations
        .iter()
        .map(|r| {
            let mut acc = 0.0;
            let mut cnt = 0usize;
            for t0 in 0..(g.nt - lag_t) {
                let a = &r.values[t0 * sites..(t0 + 1) * sites];
                let b = &r.values[(t0 + lag_t) * sites..(t0 + lag_t + 1) * sites];
                // shift along the first spatial axis with periodic wrap
                let first_stride = sites / g.nx;
                for s in 0..sites {
                    let i1 = (s / first_stride + lag_x) % g.nx;
                    let shifted = i1 * first_stride + s % first_stride;
                    acc += a[s] * b[shifted];
                    cnt += 1;
                }
            }
            acc / cnt as f64
        })
        .collect();
    let n = per.len() as f64;
    let mean = crate::pairwise_sum(&per) / n;
    // jackknife: leave-one-out means
    let jk: Vec<f64> = (0..per.len())
        .map(|i| (mean * n - per[i]) / (n - 1.0))
        .collect();
    let jk_mean = crate::pairwise_sum(&jk) / n;
    let var = jk.iter().map(|v| (v - jk_mean) * (v - jk_mean)).sum::<f64>() * (n - 1.0) / n;
    Ok((mean, var.sqrt()))
}
