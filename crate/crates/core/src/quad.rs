//! Small quadrature toolkit: composite Gauss-Legendre panels plus the
//! substitutions needed for power-law endpoint singularities and for
//! exact cell averages of `|u|^{-e}` kernels.

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre over [a, b] with `panels` panels of order 24.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = cached_gl24();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            s += w * f(mid + half * x);
        }
        total += s * half;
    }
    total
}

fn cached_gl24() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static CELL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = CELL.get_or_init(|| gauss_legendre(24));
    (n, w)
}

/// Integrate `f` over (0, b] where `f(x) ~ x^q * smooth(x)` with `q > -1`.
/// The substitution `x = v^{1/(1+q)}` removes the endpoint singularity.
pub fn integrate_power_endpoint<F: Fn(f64) -> f64>(f: F, q: f64, b: f64, panels: usize) -> f64 {
    assert!(q > -1.0, "nonintegrable endpoint exponent");
    let p = 1.0 / (1.0 + q);
    let vmax = b.powf(1.0 + q);
    integrate(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let x = v.powf(p);
            f(x) * p * v.powf(p - 1.0)
        },
        0.0,
        vmax,
        panels,
    )
}

/// `int_0^1 (u(1-u))^q du` for `q > -1`, by symmetric split and endpoint
/// substitution on [0, 1/2].
pub fn symmetric_beta_integral(q: f64) -> f64 {
    2.0 * integrate_power_endpoint(|u| (u * (1.0 - u)).powf(q), q, 0.5, 16)
}

/// Exact cell average of the kernel `|u|^{-e}` (0 < e < 1 in our uses, and
/// any e < 1 with e != 1 works): the triangle-weighted average over a cell
/// pair at offset `k*h` equals the second difference of the double
/// primitive `F(u) = |u|^{2-e} / ((1-e)(2-e))`.
///
/// Returns `table[k] = h^{-2} * (F((k+1)h) - 2F(kh) + F((k-1)h))` for
/// `k = 0..n`, which is the lattice projection of the covariance used
/// consistently by the field sampler, the Hamiltonian quadrature and the
/// variational solvers.
pub fn cell_averaged_power_table(e: f64, h: f64, n: usize) -> Vec<f64> {
    assert!(e < 1.0 && (1.0 - e).abs() > 1e-12, "exponent must be < 1");
    let fprim = |u: f64| u.abs().powf(2.0 - e) / ((1.0 - e) * (2.0 - e));
    (0..=n)
        .map(|k| {
            let k = k as f64;
            (fprim((k + 1.0) * h) - 2.0 * fprim(k * h) + fprim((k - 1.0) * h)) / (h * h)
        })
        .collect()
}

/// Same second-difference construction for the double time integral
/// `int int |r-s|^{-a0} dr ds` over two cells of width `h` at offset
/// `k*h`; multiplied by `h^2` this is the exact gamma_0 mass of the cell
/// pair. Degenerates to `h^2 * delta_{k0}`-type weights elsewhere.
pub fn cell_mass_power(e: f64, h: f64, n: usize) -> Vec<f64> {
    cell_averaged_power_table(e, h, n)
        .into_iter()
        .map(|v| v * h * h)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_nodes_integrate_polynomials() {
        // degree-7 polynomial is exact for order >= 4
        let f = |x: f64| 3.0 * x.powi(7) - x.powi(4) + 2.0 * x + 1.0;
        let exact = -2.0 / 5.0 + 1.0 + 2.0; // int_{-1}^{1}: odd terms vanish
        assert!((integrate(f, -1.0, 1.0, 1) - exact).abs() < 1e-13);
    }

    #[test]
    fn smooth_integral() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 8);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn power_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = integrate_power_endpoint(|x| x.powf(-0.5), -0.5, 1.0, 8);
        assert!((v - 2.0).abs() < 1e-11);
        // int_0^1 x^{-3/4} cos(x) dx, reference value via fine panels on substituted form
        let f = |x: f64| x.powf(-0.75) * x.cos();
        let v1 = integrate_power_endpoint(f, -0.75, 1.0, 8);
        let v2 = integrate_power_endpoint(f, -0.75, 1.0, 64);
        assert!((v1 - v2).abs() < 1e-10);
    }

    #[test]
    fn beta_integral_matches_closed_form() {
        // int_0^1 (u(1-u))^q du = B(q+1, q+1)
        use statrs::function::gamma::gamma;
        for q in [-0.5, -0.875, 0.25, 1.0] {
            let exact = gamma(q + 1.0) * gamma(q + 1.0) / gamma(2.0 * q + 2.0);
            let got = symmetric_beta_integral(q);
            assert!(
                (got - exact).abs() < 1e-9 * exact.abs().max(1.0),
                "q={q}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn cell_average_reproduces_plain_average_for_smooth_offsets() {
        // far from the singularity the cell average approaches the midpoint value
        let h = 0.01;
        let t = cell_averaged_power_table(0.5, h, 2000);
        let k = 1500;
        let x = k as f64 * h;
        assert!((t[k] - x.powf(-0.5)).abs() / x.powf(-0.5) < 1e-5);
    }

    #[test]
    fn cell_average_origin_cell_is_exact() {
        // k=0: h^{-2} * int_{-h}^{h} (h - |s|) |s|^{-e} ds
        //    = h^{-2} * 2 * (h * h^{1-e}/(1-e) - h^{2-e}/(2-e))
        let (e, h) = (0.5, 0.1);
        let exact = 2.0 * (h.powf(2.0 - e) / (1.0 - e) - h.powf(2.0 - e) / (2.0 - e)) / (h * h);
        let t = cell_averaged_power_table(e, h, 1);
        assert!((t[0] - exact).abs() < 1e-12 * exact);
    }
}
