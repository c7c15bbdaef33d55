//! FFT helpers shared by the field sampler and the variational solvers:
//! symmetric-kernel convolution against offset tables, in-place
//! multi-dimensional transforms, and a type-I DST for Dirichlet inverses.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::sync::Mutex;

fn plan(len: usize, inverse: bool) -> std::sync::Arc<dyn rustfft::Fft<f64>> {
    static PLANNER: Mutex<Option<FftPlanner<f64>>> = Mutex::new(None);
    let mut guard = PLANNER.lock().unwrap();
    let planner = guard.get_or_insert_with(FftPlanner::new);
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// `out[i] = dx * sum_j table[|i-j|] * signal[j]`, linear (non-circular)
/// convolution of a symmetric offset-table kernel against a real signal.
/// `table` must have at least `signal.len()` entries.
pub fn symmetric_linear_convolve(table: &[f64], signal: &[f64], dx: f64) -> Vec<f64> {
    let n = signal.len();
    assert!(table.len() >= n, "kernel table shorter than signal");
    let m = 2 * n;
    let mut kern: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    for k in 0..n {
        kern[k] = Complex::new(table[k], 0.0);
        if k > 0 {
            kern[m - k] = Complex::new(table[k], 0.0);
        }
    }
    let mut sig: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    for (i, s) in signal.iter().enumerate() {
        sig[i] = Complex::new(*s, 0.0);
    }
    let fwd = plan(m, false);
    fwd.process(&mut kern);
    fwd.process(&mut sig);
    for (a, b) in sig.iter_mut().zip(kern.iter()) {
        *a *= *b;
    }
    let inv = plan(m, true);
    inv.process(&mut sig);
    let norm = dx / m as f64;
    sig[..n].iter().map(|c| c.re * norm).collect()
}

/// In-place FFT along `axis` of a row-major multi-dimensional complex array.
pub fn fft_axis(data: &mut [Complex<f64>], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    if n == 1 {
        return;
    }
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len());
    let stride: usize = shape[axis + 1..].iter().product();
    let fft = plan(n, inverse);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let outer = total / (n * stride);
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for k in 0..n {
                buf[k] = data[base + k * stride];
            }
            fft.process(&mut buf);
            for k in 0..n {
                data[base + k * stride] = buf[k];
            }
        }
    }
}

/// Full n-dimensional transform. No normalization is applied; an inverse
/// pass must be divided by the total size by the caller.
pub fn fftn(data: &mut [Complex<f64>], shape: &[usize], inverse: bool) {
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, inverse);
    }
}

/// Type-I discrete sine transform of length n (interior points of a
/// zero-Dirichlet grid), via the odd extension of length 2(n+1).
/// Self-inverse up to the factor 2(n+1).
pub fn dst1(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let m = 2 * (n + 1);
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); m];
    for (i, s) in signal.iter().enumerate() {
        buf[i + 1] = Complex::new(*s, 0.0);
        buf[m - 1 - i] = Complex::new(-*s, 0.0);
    }
    plan(m, false).process(&mut buf);
    (1..=n).map(|k| -0.5 * buf[k].im).collect()
}

/// Solve (I - c*Lap) u = rhs on a 2-d zero-Dirichlet grid by diagonalizing
/// the 5-point Laplacian in the DST basis.
pub fn dirichlet_helmholtz_solve_2d(rhs: &[f64], nx: usize, ny: usize, dx: f64, c: f64) -> Vec<f64> {
    assert_eq!(rhs.len(), nx * ny);
    let mut work = rhs.to_vec();
    // DST along rows then columns
    let mut tmp_row = vec![0.0; ny];
    for i in 0..nx {
        tmp_row.copy_from_slice(&work[i * ny..(i + 1) * ny]);
        let t = dst1(&tmp_row);
        work[i * ny..(i + 1) * ny].copy_from_slice(&t);
    }
    let mut tmp_col = vec![0.0; nx];
    for j in 0..ny {
        for i in 0..nx {
            tmp_col[i] = work[i * ny + j];
        }
        let t = dst1(&tmp_col);
        for i in 0..nx {
            work[i * ny + j] = t[i];
        }
    }
    // eigenvalues of -Lap on the Dirichlet grid
    let eig = |k: usize, n: usize| {
        let s = (std::f64::consts::PI * (k + 1) as f64 / (2.0 * (n + 1) as f64)).sin();
        4.0 * s * s / (dx * dx)
    };
    for i in 0..nx {
        let li = eig(i, nx);
        for j in 0..ny {
            let lj = eig(j, ny);
            work[i * ny + j] /= (1.0 + c * (li + lj)) * (2.0 * (nx + 1) as f64) * (2.0 * (ny + 1) as f64) / 4.0;
        }
    }
    // inverse = same transform
    for i in 0..nx {
        tmp_row.copy_from_slice(&work[i * ny..(i + 1) * ny]);
        let t = dst1(&tmp_row);
        work[i * ny..(i + 1) * ny].copy_from_slice(&t);
    }
    for j in 0..ny {
        for i in 0..nx {
            tmp_col[i] = work[i * ny + j];
        }
        let t = dst1(&tmp_col);
        for i in 0..nx {
            work[i * ny + j] = t[i];
        }
    }
    work
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolve_matches_direct_sum() {
        let table: Vec<f64> = (0..16).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let signal: Vec<f64> = (0..16).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let dx = 0.25;
        let fast = symmetric_linear_convolve(&table, &signal, dx);
        for i in 0..16 {
            let direct: f64 = (0..16)
                .map(|j| table[(i as isize - j as isize).unsigned_abs()] * signal[j])
                .sum::<f64>()
                * dx;
            assert!((fast[i] - direct).abs() < 1e-12, "i={i}");
        }
    }

    #[test]
    fn fftn_roundtrip() {
        let shape = [4usize, 6, 3];
        let n: usize = shape.iter().product();
        let orig: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut data = orig.clone();
        fftn(&mut data, &shape, false);
        fftn(&mut data, &shape, true);
        for (a, b) in data.iter().zip(orig.iter()) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dst_diagonalizes_dirichlet_laplacian() {
        // (I - c Lap) applied to a DST mode scales it by 1 + c*lambda
        let (nx, ny, dx, c) = (8usize, 5usize, 0.3, 0.7);
        let mut rhs = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                rhs[i * ny + j] = ((i * ny + j) as f64 * 0.17).sin();
            }
        }
        let u = dirichlet_helmholtz_solve_2d(&rhs, nx, ny, dx, c);
        // verify A u = rhs with A = I - c*Lap (zero boundary)
        for i in 0..nx {
            for j in 0..ny {
                let get = |a: isize, b: isize| -> f64 {
                    if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                        0.0
                    } else {
                        u[a as usize * ny + b as usize]
                    }
                };
                let lap = (get(i as isize + 1, j as isize)
                    + get(i as isize - 1, j as isize)
                    + get(i as isize, j as isize + 1)
                    + get(i as isize, j as isize - 1)
                    - 4.0 * u[i * ny + j])
                    / (dx * dx);
                let lhs = u[i * ny + j] - c * lap;
                assert!((lhs - rhs[i * ny + j]).abs() < 1e-10);
            }
        }
    }
}
