//! Time and space covariance structures of the admissible noise regimes,
//! their Fourier transforms, kernel factorizations gamma = K * K,
//! heat-kernel mollifications and admissibility classification.

use crate::error::{Error, Result};
use crate::quad;
use statrs::function::gamma::gamma as gamma_fn;

/// Points closer than this to a pole are treated as singular evaluations.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Relative negative-mass tolerance shared by spectral constructions.
pub const SPECTRAL_CLIP_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// types
// ---------------------------------------------------------------------------

/// Temporal covariance gamma_0. `FractionalTime` is |u|^{-alpha0} with
/// alpha0 = 2 - 2 H_0; `WhiteTime` is delta_0 and is never evaluated
/// pointwise; `ConstantOne` is the time-independent case gamma_0 == 1.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeCovariance {
    FractionalTime { alpha0: f64 },
    WhiteTime,
    ConstantOne,
}

impl TimeCovariance {
    pub fn fractional(alpha0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha0) {
            return Err(Error::InvalidParameter(format!(
                "fractional time exponent alpha0={alpha0} outside [0,1)"
            )));
        }
        Ok(Self::FractionalTime { alpha0 })
    }

    /// The exponent alpha0, with delta_0 counted as the alpha0 -> 1 endpoint.
    pub fn alpha0(&self) -> f64 {
        match self {
            Self::FractionalTime { alpha0 } => *alpha0,
            Self::WhiteTime => 1.0,
            Self::ConstantOne => 0.0,
        }
    }

    pub fn is_white(&self) -> bool {
        matches!(self, Self::WhiteTime)
    }

    /// Exact cell averages of gamma_0 over cell pairs at offsets 0..=n,
    /// cells of width `dt`. White time carries its full distributional
    /// weight 1/dt on the zero offset.
    pub fn cell_average_table(&self, dt: f64, n: usize) -> Vec<f64> {
        match self {
            Self::FractionalTime { alpha0 } if *alpha0 > 0.0 => {
                quad::cell_averaged_power_table(*alpha0, dt, n)
            }
            Self::FractionalTime { .. } | Self::ConstantOne => vec![1.0; n + 1],
            Self::WhiteTime => {
                let mut t = vec![0.0; n + 1];
                t[0] = 1.0 / dt;
                t
            }
        }
    }

    /// int_0^t int_0^t gamma_0(r-s) dr ds.
    pub fn double_integral(&self, t: f64) -> f64 {
        match self {
            Self::ConstantOne => t * t,
            Self::WhiteTime => t,
            Self::FractionalTime { alpha0 } => {
                if *alpha0 == 0.0 {
                    t * t
                } else {
                    // 2 int_0^t (t-u) u^{-a0} du
                    2.0 * (t * t.powf(1.0 - alpha0) / (1.0 - alpha0)
                        - t.powf(2.0 - alpha0) / (2.0 - alpha0))
                }
            }
        }
    }
}

/// Spatial covariance gamma. The `alpha` accessor returns the spatial
/// scaling exponent gamma(cx) = c^{-alpha} gamma(x) where one exists.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceCovariance {
    Riesz { alpha: f64, d: usize },
    ProductFractional { hurst: Vec<f64> },
    DiracDelta,
    SmoothBounded { gamma0: f64, width: f64, d: usize },
}

impl SpaceCovariance {
    pub fn riesz(alpha: f64, d: usize) -> Result<Self> {
        if d == 0 || d > 3 {
            return Err(Error::InvalidParameter(format!("riesz dimension d={d} out of range")));
        }
        // alpha = d is kept constructible as the scaling boundary shared with
        // the delta_0 case; admissibility reports flag it.
        if !(alpha > 0.0 && alpha <= d as f64) {
            return Err(Error::InvalidParameter(format!(
                "riesz exponent alpha={alpha} outside (0, d={d}]"
            )));
        }
        Ok(Self::Riesz { alpha, d })
    }

    pub fn product_fractional(hurst: Vec<f64>) -> Result<Self> {
        if hurst.is_empty() || hurst.len() > 3 {
            return Err(Error::InvalidParameter("need 1..=3 Hurst components".into()));
        }
        for h in &hurst {
            if !(*h > 0.5 && *h < 1.0) {
                return Err(Error::InvalidParameter(format!("Hurst H={h} outside (1/2, 1)")));
            }
        }
        Ok(Self::ProductFractional { hurst })
    }

    pub fn smooth_bounded(gamma0: f64, width: f64, d: usize) -> Result<Self> {
        if !(gamma0 > 0.0 && width > 0.0) || d == 0 || d > 3 {
            return Err(Error::InvalidParameter("smooth bump needs gamma0, width > 0, 1<=d<=3".into()));
        }
        Ok(Self::SmoothBounded { gamma0, width, d })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Riesz { d, .. } => *d,
            Self::ProductFractional { hurst } => hurst.len(),
            Self::DiracDelta => 1,
            Self::SmoothBounded { d, .. } => *d,
        }
    }

    /// Spatial scaling exponent: alpha for Riesz, 2d - 2 sum H_j for the
    /// product-fractional family, 1 (= d) for delta_0, none for bumps.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Self::Riesz { alpha, .. } => Some(*alpha),
            Self::ProductFractional { hurst } => {
                Some(2.0 * hurst.len() as f64 - 2.0 * hurst.iter().sum::<f64>())
            }
            Self::DiracDelta => Some(1.0),
            Self::SmoothBounded { .. } => None,
        }
    }

    pub fn is_distributional(&self) -> bool {
        matches!(self, Self::DiracDelta)
    }

    /// gamma(0) where finite.
    pub fn at_origin(&self) -> Option<f64> {
        match self {
            Self::SmoothBounded { gamma0, .. } => Some(*gamma0),
            _ => None,
        }
    }
}

/// Full noise specification: Cov(V(s,x), V(t,y)) = gamma_0(s-t) gamma(x-y)
/// with coupling coefficient theta.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    pub time: TimeCovariance,
    pub space: SpaceCovariance,
    pub theta: f64,
}

impl CovarianceSpec {
    pub fn new(time: TimeCovariance, space: SpaceCovariance, theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!("theta={theta} must be positive")));
        }
        Ok(Self { time, space, theta })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

/// Regime labels of the admissible noise table plus the bounded-covariance
/// class covered by the (log R)^{1/2} law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    FracTimeRiesz,        // (1) x (I)
    FracTimeFractional,   // (1) x (II)
    FracTimeDirac,        // (1) x (III)
    WhiteTimeRiesz,       // (2) x (I)
    WhiteTimeFractional,  // (2) x (II)
    WhiteTimeDirac,       // (2) x (III)
    BoundedClass,         // smooth bounded gamma, any admissible gamma_0
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::FracTimeRiesz => "(1)x(I)",
            Regime::FracTimeFractional => "(1)x(II)",
            Regime::FracTimeDirac => "(1)x(III)",
            Regime::WhiteTimeRiesz => "(2)x(I)",
            Regime::WhiteTimeFractional => "(2)x(II)",
            Regime::WhiteTimeDirac => "(2)x(III)",
            Regime::BoundedClass => "Theorem-1.1-class",
        };
        f.write_str(s)
    }
}

/// Classification outcome: the regime label and any violated constraints
/// (empty iff the spec is admissible for that regime).
#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub regime: Regime,
    pub violations: Vec<String>,
}

impl RegimeReport {
    pub fn admissible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_white_time(&self) -> bool {
        matches!(
            self.regime,
            Regime::WhiteTimeRiesz | Regime::WhiteTimeFractional | Regime::WhiteTimeDirac
        )
    }
}

// ---------------------------------------------------------------------------
// pointwise evaluation
// ---------------------------------------------------------------------------

/// Evaluate gamma_0 pointwise.
pub fn gamma0_eval(time: &TimeCovariance, u: f64) -> Result<f64> {
    match time {
        TimeCovariance::WhiteTime => Err(Error::Distributional("gamma_0 = delta_0")),
        TimeCovariance::ConstantOne => Ok(1.0),
        TimeCovariance::FractionalTime { alpha0 } => {
            if *alpha0 == 0.0 {
                Ok(1.0)
            } else if u.abs() < SINGULARITY_TOL {
                Err(Error::Singularity(format!("gamma_0(|u|^-{alpha0}) at u={u}")))
            } else {
                Ok(u.abs().powf(-alpha0))
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Evaluate gamma pointwise.
pub fn gamma_eval(space: &SpaceCovariance, x: &[f64]) -> Result<f64> {
    if x.len() != space.dim() {
        return Err(Error::InvalidParameter(format!(
            "point has dimension {}, covariance has {}",
            x.len(),
            space.dim()
        )));
    }
    match space {
        SpaceCovariance::DiracDelta => Err(Error::Distributional("gamma = delta_0")),
        SpaceCovariance::Riesz { alpha, .. } => {
            let r = norm(x);
            if r < SINGULARITY_TOL {
                Err(Error::Singularity(format!("|x|^-{alpha} at |x|={r:e}")))
            } else {
                Ok(r.powf(-alpha))
            }
        }
        SpaceCovariance::ProductFractional { hurst } => {
            let mut v = 1.0;
            for (xi, h) in x.iter().zip(hurst.iter()) {
                if xi.abs() < SINGULARITY_TOL {
                    return Err(Error::Singularity(format!("|x_j|^{} at x_j={xi:e}", 2.0 * h - 2.0)));
                }
                v *= xi.abs().powf(2.0 * h - 2.0);
            }
            Ok(v)
        }
        SpaceCovariance::SmoothBounded { gamma0, width, .. } => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Ok(gamma0 * (-r2 / (2.0 * width * width)).exp())
        }
    }
}

// ---------------------------------------------------------------------------
// Fourier transforms
// ---------------------------------------------------------------------------

/// Constant in F[|x|^{-b}](lambda) = riesz_fourier_constant(d,b) |lambda|^{b-d},
/// valid for 0 < b < d.
pub fn riesz_fourier_constant(d: usize, b: f64) -> f64 {
    let df = d as f64;
    2f64.powf(df - b) * std::f64::consts::PI.powf(df / 2.0) * gamma_fn((df - b) / 2.0)
        / gamma_fn(b / 2.0)
}

/// Evaluate the (nonnegative) Fourier transform of gamma at lambda.
pub fn gamma_fourier(space: &SpaceCovariance, lambda: &[f64]) -> Result<f64> {
    if lambda.len() != space.dim() {
        return Err(Error::InvalidParameter("frequency dimension mismatch".into()));
    }
    match space {
        SpaceCovariance::DiracDelta => Ok(1.0),
        SpaceCovariance::Riesz { alpha, d } => {
            let r = norm(lambda);
            let df = *d as f64;
            if (df - alpha).abs() < 1e-14 {
                // boundary alpha = d: flat spectral shape, constant normalization
                // is undefined and fixed to 1 by convention
                return Ok(1.0);
            }
            if r < SINGULARITY_TOL {
                return Err(Error::Singularity("Fourier transform pole at lambda=0".into()));
            }
            Ok(riesz_fourier_constant(*d, *alpha) * r.powf(alpha - df))
        }
        SpaceCovariance::ProductFractional { hurst } => {
            let mut v = 1.0;
            for (li, h) in lambda.iter().zip(hurst.iter()) {
                let aj = 2.0 - 2.0 * h;
                if li.abs() < SINGULARITY_TOL {
                    return Err(Error::Singularity("Fourier transform pole at lambda_j=0".into()));
                }
                v *= riesz_fourier_constant(1, aj) * li.abs().powf(aj - 1.0);
            }
            Ok(v)
        }
        SpaceCovariance::SmoothBounded { gamma0, width, d } => {
            let r2: f64 = lambda.iter().map(|v| v * v).sum();
            let df = *d as f64;
            Ok(gamma0
                * (2.0 * std::f64::consts::PI).powf(df / 2.0)
                * width.powf(df)
                * (-width * width * r2 / 2.0).exp())
        }
    }
}

/// Dalang condition int gamma_hat(lambda) / (1 + |lambda|^2) dlambda < infty,
/// decided analytically from the regime parameters.
pub fn dalang_check(spec: &CovarianceSpec) -> bool {
    match &spec.space {
        SpaceCovariance::DiracDelta => true, // d = 1 by construction
        SpaceCovariance::SmoothBounded { .. } => true,
        SpaceCovariance::Riesz { alpha, .. } => *alpha < 2.0,
        SpaceCovariance::ProductFractional { .. } => spec.space.alpha().unwrap() < 2.0,
    }
}

// ---------------------------------------------------------------------------
// regime classification
// ---------------------------------------------------------------------------

pub fn regime_classify(spec: &CovarianceSpec) -> RegimeReport {
    let mut violations = Vec::new();
    let d = spec.dim() as f64;
    let regime = match (&spec.time, &spec.space) {
        (_, SpaceCovariance::SmoothBounded { .. }) => Regime::BoundedClass,
        (TimeCovariance::WhiteTime, SpaceCovariance::Riesz { alpha, .. }) => {
            if !(*alpha > 0.0 && *alpha < 2f64.min(d)) {
                violations.push(format!("regime (2)x(I) requires 0 < alpha < 2^d, got alpha={alpha}, d={d}"));
            }
            Regime::WhiteTimeRiesz
        }
        (TimeCovariance::WhiteTime, SpaceCovariance::ProductFractional { .. }) => {
            let alpha = spec.space.alpha().unwrap();
            if alpha >= 2.0 {
                violations.push(format!(
                    "regime (2)x(II) requires sum(2-2H_j) < 2 (Dalang), got alpha={alpha}"
                ));
            }
            Regime::WhiteTimeFractional
        }
        (TimeCovariance::WhiteTime, SpaceCovariance::DiracDelta) => Regime::WhiteTimeDirac,
        (t, SpaceCovariance::Riesz { alpha, .. }) => {
            let a0 = t.alpha0();
            if *alpha >= d {
                violations.push(format!("regime (1)x(I) requires alpha < d, got alpha={alpha}, d={d}"));
            }
            if 2.0 * a0 + alpha >= 2.0 {
                violations.push(format!(
                    "regime (1)x(I) requires 2*alpha0 + alpha < 2, got {}",
                    2.0 * a0 + alpha
                ));
            }
            Regime::FracTimeRiesz
        }
        (t, SpaceCovariance::ProductFractional { hurst }) => {
            let a0 = t.alpha0();
            let h0 = 1.0 - a0 / 2.0;
            let hsum: f64 = hurst.iter().sum();
            if 2.0 * h0 + hsum <= d + 1.0 {
                violations.push(format!(
                    "regime (1)x(II) requires 2H_0 + sum H_j > d+1, got {}",
                    2.0 * h0 + hsum
                ));
            }
            Regime::FracTimeFractional
        }
        (_, SpaceCovariance::DiracDelta) => Regime::FracTimeDirac,
    };
    RegimeReport { regime, violations }
}

// ---------------------------------------------------------------------------
// mollification
// ---------------------------------------------------------------------------

/// Heat-smoothed covariance gamma_eps(x) = int p_{2 eps}(x - y) gamma(y) dy.
/// Bounded for every eps > 0; converges to gamma(x) pointwise away from the
/// singular set as eps -> 0.
pub fn mollify_gamma(spec: &CovarianceSpec, eps: f64, x: &[f64]) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("mollification eps={eps} must be positive")));
    }
    if x.len() != spec.dim() {
        return Err(Error::InvalidParameter("point dimension mismatch".into()));
    }
    match &spec.space {
        SpaceCovariance::DiracDelta => {
            // p_{2 eps}(x) in d = 1
            Ok((-x[0] * x[0] / (4.0 * eps)).exp() / (4.0 * std::f64::consts::PI * eps).sqrt())
        }
        SpaceCovariance::SmoothBounded { gamma0, width, d } => {
            let w2 = width * width;
            let v = w2 + 2.0 * eps;
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Ok(gamma0 * (w2 / v).powf(*d as f64 / 2.0) * (-r2 / (2.0 * v)).exp())
        }
        SpaceCovariance::Riesz { alpha, d } => Ok(mollified_riesz(*d, *alpha, eps, norm(x))),
        SpaceCovariance::ProductFractional { hurst } => {
            let mut v = 1.0;
            for (xi, h) in x.iter().zip(hurst.iter()) {
                v *= mollified_riesz(1, 2.0 - 2.0 * h, eps, xi.abs());
            }
            Ok(v)
        }
    }
}

/// (p_{2 eps} * |.|^{-alpha})(x) in R^d for 0 < alpha < d, via the Gaussian
/// subordination of the Riesz kernel reduced to one bounded integral:
/// with t0 = 1/(4 eps),
///   gamma_eps(r) = t0^{alpha/2}/Gamma(alpha/2)
///                  * int_0^1 v^{alpha/2-1} (1-v)^{(d-alpha)/2-1} e^{-t0 v r^2} dv.
pub fn mollified_riesz(d: usize, alpha: f64, eps: f64, r: f64) -> f64 {
    let df = d as f64;
    debug_assert!(alpha > 0.0 && alpha < df);
    let t0 = 1.0 / (4.0 * eps);
    let qa = alpha / 2.0 - 1.0;
    let qb = (df - alpha) / 2.0 - 1.0;
    // split at 1/2; each half carries one power-law endpoint
    // (the right half is integrated in w = 1 - v)
    let left = quad::integrate_power_endpoint(
        |v| v.powf(qa) * (1.0 - v).powf(qb) * (-t0 * v * r * r).exp(),
        qa,
        0.5,
        24,
    );
    let right = quad::integrate_power_endpoint(
        |w| w.powf(qb) * (1.0 - w).powf(qa) * (-t0 * (1.0 - w) * r * r).exp(),
        qb,
        0.5,
        24,
    );
    t0.powf(alpha / 2.0) / gamma_fn(alpha / 2.0) * (left + right)
}

// ---------------------------------------------------------------------------
// kernel factorization gamma = K * K
// ---------------------------------------------------------------------------

/// The base factor of gamma = K * K.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelBase {
    /// K(x) = norm * |x|^{-(d+alpha)/2}
    RieszPower { alpha: f64, d: usize },
    /// K(x) = norm * prod_j |x_j|^{-(1+alpha_j)/2}
    ProductPower { alphas: Vec<f64> },
    /// K = delta_0 (d = 1)
    Dirac,
    /// K(x) = norm * exp(-|x|^2 / width^2), the factor of a Gaussian bump
    GaussianFactor { width: f64, d: usize },
}

/// A factorization kernel with its numerically determined normalization and
/// an optional heat-kernel mollification K_eps = p_eps * K.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub base: KernelBase,
    pub normalization: f64,
    pub eps: f64,
}

impl KernelSpec {
    pub fn dim(&self) -> usize {
        match &self.base {
            KernelBase::RieszPower { d, .. } => *d,
            KernelBase::ProductPower { alphas } => alphas.len(),
            KernelBase::Dirac => 1,
            KernelBase::GaussianFactor { d, .. } => *d,
        }
    }

    pub fn is_distributional(&self) -> bool {
        matches!(self.base, KernelBase::Dirac) && self.eps == 0.0
    }

    /// Pointwise evaluation of K (or K_eps when eps > 0).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let c = self.normalization;
        match &self.base {
            KernelBase::Dirac => {
                if self.eps > 0.0 {
                    // K_eps = p_eps
                    let e = self.eps;
                    Ok((-x[0] * x[0] / (2.0 * e)).exp() / (2.0 * std::f64::consts::PI * e).sqrt())
                } else {
                    Err(Error::Distributional("K = delta_0"))
                }
            }
            KernelBase::GaussianFactor { width, d } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if self.eps > 0.0 {
                    // Gaussian convolved with p_eps: exp(-|x|^2/w^2) has
                    // variance w^2/2 per axis; p_eps adds eps
                    let v = width * width / 2.0 + self.eps;
                    let scale = (width * width / 2.0 / v).powf(*d as f64 / 2.0);
                    Ok(c * scale * (-r2 / (2.0 * v)).exp())
                } else {
                    Ok(c * (-r2 / (width * width)).exp())
                }
            }
            KernelBase::RieszPower { alpha, d } => {
                let a = (*d as f64 + alpha) / 2.0;
                let r = norm(x);
                if self.eps > 0.0 {
                    Ok(c * mollified_power_kernel(*d, a, self.eps, r))
                } else if r < SINGULARITY_TOL {
                    Err(Error::Singularity("kernel pole at 0".into()))
                } else {
                    Ok(c * r.powf(-a))
                }
            }
            KernelBase::ProductPower { alphas } => {
                let mut v = c;
                for (xi, aj) in x.iter().zip(alphas.iter()) {
                    let a = (1.0 + aj) / 2.0;
                    if self.eps > 0.0 {
                        v *= mollified_power_kernel(1, a, self.eps, xi.abs());
                    } else if xi.abs() < SINGULARITY_TOL {
                        return Err(Error::Singularity("kernel pole at 0".into()));
                    } else {
                        v *= xi.abs().powf(-a);
                    }
                }
                Ok(v)
            }
        }
    }

    /// Exact cell-average table of a one-dimensional kernel at offsets
    /// 0..=n (unmollified power kernels only; used by the lattice solvers).
    pub fn cell_table_1d(&self, dx: f64, n: usize) -> Result<Vec<f64>> {
        match &self.base {
            KernelBase::RieszPower { alpha, d: 1 } => {
                let a = (1.0 + alpha) / 2.0;
                Ok(quad::cell_averaged_power_table(a, dx, n)
                    .into_iter()
                    .map(|v| v * self.normalization)
                    .collect())
            }
            KernelBase::ProductPower { alphas } if alphas.len() == 1 => {
                let a = (1.0 + alphas[0]) / 2.0;
                Ok(quad::cell_averaged_power_table(a, dx, n)
                    .into_iter()
                    .map(|v| v * self.normalization)
                    .collect())
            }
            KernelBase::Dirac => {
                let mut t = vec![0.0; n + 1];
                t[0] = 1.0 / dx;
                Ok(t)
            }
            KernelBase::GaussianFactor { width, d: 1 } => Ok((0..=n)
                .map(|k| {
                    let x = k as f64 * dx;
                    self.normalization * (-x * x / (width * width)).exp()
                })
                .collect()),
            _ => Err(Error::InvalidParameter(
                "1-d cell table requested for a multi-dimensional kernel".into(),
            )),
        }
    }
}

/// (p_eps * |.|^{-a})(r) in R^d for d/2 < a < d (the kernel exponent range),
/// same subordination reduction as `mollified_riesz` with t0 = 1/(2 eps).
fn mollified_power_kernel(d: usize, a: f64, eps: f64, r: f64) -> f64 {
    let df = d as f64;
    debug_assert!(a > 0.0 && a < df);
    let t0 = 1.0 / (2.0 * eps);
    let qa = a / 2.0 - 1.0;
    let qb = (df - a) / 2.0 - 1.0;
    let left = quad::integrate_power_endpoint(
        |v| v.powf(qa) * (1.0 - v).powf(qb) * (-t0 * v * r * r).exp(),
        qa,
        0.5,
        24,
    );
    let right = quad::integrate_power_endpoint(
        |w| w.powf(qb) * (1.0 - w).powf(qa) * (-t0 * (1.0 - w) * r * r).exp(),
        qb,
        0.5,
        24,
    );
    t0.powf(a / 2.0) / gamma_fn(a / 2.0) * (left + right)
}

/// Unnormalized self-convolution (|.|^{-a} * |.|^{-a})(x) in R^d with
/// a = (d + alpha)/2, reduced by Gaussian subordination to the bounded
/// integral J = int_0^1 (u(1-u))^{(d-alpha)/4 - 1} du:
///   S(x) = pi^{d/2} Gamma(alpha/2) / Gamma(a/2)^2 * J * |x|^{-alpha}.
/// Only J is computed numerically.
pub fn riesz_self_convolution(d: usize, alpha: f64, r: f64) -> f64 {
    let df = d as f64;
    let a = (df + alpha) / 2.0;
    let q = (df - alpha) / 4.0 - 1.0;
    let j = quad::symmetric_beta_integral(q);
    std::f64::consts::PI.powf(df / 2.0) * gamma_fn(alpha / 2.0) / gamma_fn(a / 2.0).powi(2)
        * j
        * r.powf(-alpha)
}

/// Numeric self-convolution of the unnormalized Gaussian factor
/// exp(-x^2/w^2) in one dimension, by direct quadrature.
fn gaussian_factor_self_convolution_1d(width: f64, x: f64) -> f64 {
    let f = |y: f64| (-(y * y) / (width * width)).exp() * (-((x - y) * (x - y)) / (width * width)).exp();
    let c = x / 2.0;
    let h = 8.0 * width;
    quad::integrate(f, c - h, c + h, 24)
}

/// Build the factorization kernel for gamma = K * K, with the normalization
/// determined by least-squares matching of the self-convolution of the
/// unnormalized base against gamma on a log-spaced validation grid.
/// `eps > 0` additionally applies heat-kernel smoothing K_eps = p_eps * K.
pub fn kernel_eval(spec: &CovarianceSpec, eps: f64) -> Result<KernelSpec> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter("mollification eps must be >= 0".into()));
    }
    let grid: Vec<f64> = (0..16).map(|i| 0.2 * 10f64.powf(i as f64 / 9.0)).collect();
    let lsq = |selfconv: &dyn Fn(f64) -> f64, target: &dyn Fn(f64) -> f64| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for x in &grid {
            let s = selfconv(*x);
            num += s * target(*x);
            den += s * s;
        }
        (num / den).sqrt()
    };
    match &spec.space {
        SpaceCovariance::DiracDelta => Ok(KernelSpec { base: KernelBase::Dirac, normalization: 1.0, eps }),
        SpaceCovariance::Riesz { alpha, d } => {
            if *alpha >= *d as f64 {
                return Err(Error::InvalidParameter(
                    "kernel factorization needs alpha < d (boundary alpha = d has no locally integrable factor)"
                        .into(),
                ));
            }
            let (al, dd) = (*alpha, *d);
            let c = lsq(&|r| riesz_self_convolution(dd, al, r), &|r| r.powf(-al));
            Ok(KernelSpec { base: KernelBase::RieszPower { alpha: al, d: dd }, normalization: c, eps })
        }
        SpaceCovariance::ProductFractional { hurst } => {
            let alphas: Vec<f64> = hurst.iter().map(|h| 2.0 - 2.0 * h).collect();
            let mut c = 1.0;
            for aj in &alphas {
                let a = *aj;
                c *= lsq(&|r| riesz_self_convolution(1, a, r), &|r| r.powf(-a));
            }
            Ok(KernelSpec { base: KernelBase::ProductPower { alphas }, normalization: c, eps })
        }
        SpaceCovariance::SmoothBounded { gamma0, width, d } => {
            let w = *width;
            let g0 = *gamma0;
            // per-axis match, then the product over d axes
            let c1 = lsq(&|x| gaussian_factor_self_convolution_1d(w, x), &|x| {
                (-x * x / (2.0 * w * w)).exp()
            });
            let c = g0.sqrt() * c1.powi(*d as i32);
            Ok(KernelSpec { base: KernelBase::GaussianFactor { width: w, d: *d }, normalization: c, eps })
        }
    }
}

// ---------------------------------------------------------------------------
// bounded gamma evaluator used by the Monte Carlo engines
// ---------------------------------------------------------------------------

/// A fast evaluator of gamma_eps built once per run: radial (or per-axis)
/// tables with linear interpolation, falling back to the unmollified
/// covariance beyond the table range where smoothing is negligible.
pub struct MollifiedGamma {
    space: SpaceCovariance,
    eps: f64,
    tables: Vec<Vec<f64>>, // radial table (len 1) or per-axis tables
    dr: f64,
    r_max: f64,
}

impl MollifiedGamma {
    pub fn new(space: &SpaceCovariance, eps: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("MollifiedGamma needs eps > 0".into()));
        }
        let dr = r_max / n as f64;
        let tables = match space {
            SpaceCovariance::Riesz { alpha, d } => {
                let t: Vec<f64> =
                    (0..=n).map(|k| mollified_riesz(*d, *alpha, eps, k as f64 * dr)).collect();
                vec![t]
            }
            SpaceCovariance::ProductFractional { hurst } => hurst
                .iter()
                .map(|h| {
                    (0..=n)
                        .map(|k| mollified_riesz(1, 2.0 - 2.0 * h, eps, k as f64 * dr))
                        .collect()
                })
                .collect(),
            // closed forms; tables unused
            SpaceCovariance::DiracDelta | SpaceCovariance::SmoothBounded { .. } => Vec::new(),
        };
        Ok(Self { space: space.clone(), eps, tables, dr, r_max })
    }

    fn lookup(&self, table: &[f64], r: f64) -> f64 {
        let pos = r / self.dr;
        let k = pos.floor() as usize;
        if k + 1 >= table.len() {
            return table[table.len() - 1];
        }
        let w = pos - k as f64;
        table[k] * (1.0 - w) + table[k + 1] * w
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.space {
            SpaceCovariance::DiracDelta => {
                (-x[0] * x[0] / (4.0 * self.eps)).exp()
                    / (4.0 * std::f64::consts::PI * self.eps).sqrt()
            }
            SpaceCovariance::SmoothBounded { gamma0, width, d } => {
                let w2 = width * width;
                let v = w2 + 2.0 * self.eps;
                let r2: f64 = x.iter().map(|v| v * v).sum();
                gamma0 * (w2 / v).powf(*d as f64 / 2.0) * (-r2 / (2.0 * v)).exp()
            }
            SpaceCovariance::Riesz { alpha, .. } => {
                let r = norm(x);
                if r > self.r_max {
                    r.powf(-alpha)
                } else {
                    self.lookup(&self.tables[0], r)
                }
            }
            SpaceCovariance::ProductFractional { hurst } => {
                let mut v = 1.0;
                for ((xi, h), t) in x.iter().zip(hurst.iter()).zip(self.tables.iter()) {
                    let r = xi.abs();
                    v *= if r > self.r_max { r.powf(2.0 * h - 2.0) } else { self.lookup(t, r) };
                }
                v
            }
        }
    }

    /// gamma_eps(0), always finite.
    pub fn at_origin(&self) -> f64 {
        self.eval(&vec![0.0; self.space.dim()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(time: TimeCovariance, space: SpaceCovariance) -> CovarianceSpec {
        CovarianceSpec::new(time, space, 1.0).unwrap()
    }

    #[test]
    fn gamma0_values() {
        let frac = TimeCovariance::fractional(0.5).unwrap();
        assert!((gamma0_eval(&frac, 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((gamma0_eval(&TimeCovariance::ConstantOne, 7.3).unwrap() - 1.0).abs() < 1e-15);
        let quarter = TimeCovariance::fractional(0.25).unwrap();
        assert!(matches!(gamma0_eval(&quarter, 0.0), Err(Error::Singularity(_))));
        assert!(matches!(gamma0_eval(&TimeCovariance::WhiteTime, 1.0), Err(Error::Distributional(_))));
    }

    #[test]
    fn gamma_values_and_scaling() {
        let riesz = SpaceCovariance::riesz(1.0, 2).unwrap();
        assert!((gamma_eval(&riesz, &[3.0, 4.0]).unwrap() - 0.2).abs() < 1e-15);
        // scaling gamma(2x) = 2^{-alpha} gamma(x), boundary case alpha = d = 1
        let r1 = SpaceCovariance::riesz(1.0, 1).unwrap();
        let x = 0.7;
        let ratio = gamma_eval(&r1, &[2.0 * x]).unwrap() / gamma_eval(&r1, &[x]).unwrap();
        assert!((ratio - 0.5).abs() < 1e-15);
        let bump = SpaceCovariance::smooth_bounded(2.0, 1.0, 1).unwrap();
        assert!((gamma_eval(&bump, &[0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(gamma_eval(&SpaceCovariance::DiracDelta, &[1.0]), Err(Error::Distributional(_))));
    }

    #[test]
    fn product_fractional_alpha() {
        let pf = SpaceCovariance::product_fractional(vec![0.75, 0.8]).unwrap();
        // alpha = 2d - 2 sum H = 4 - 3.1 = 0.9
        assert!((pf.alpha().unwrap() - 0.9).abs() < 1e-14);
        let v = gamma_eval(&pf, &[2.0, 3.0]).unwrap();
        let expect = 2f64.powf(2.0 * 0.75 - 2.0) * 3f64.powf(2.0 * 0.8 - 2.0);
        assert!((v - expect).abs() < 1e-14);
    }

    #[test]
    fn fourier_values() {
        assert!((gamma_fourier(&SpaceCovariance::DiracDelta, &[5.0]).unwrap() - 1.0).abs() < 1e-15);
        // alpha = d boundary: flat in lambda
        let r = SpaceCovariance::riesz(1.0, 1).unwrap();
        let a = gamma_fourier(&r, &[0.3]).unwrap();
        let b = gamma_fourier(&r, &[0.6]).unwrap();
        assert!((a / b - 1.0).abs() < 1e-15);
        // smooth bump transform nonnegative everywhere sampled
        let bump = SpaceCovariance::smooth_bounded(2.0, 0.7, 2).unwrap();
        for k in 0..50 {
            let l = [0.1 + 0.3 * k as f64, -0.2 * k as f64];
            assert!(gamma_fourier(&bump, &l).unwrap() >= 0.0);
        }
    }

    #[test]
    fn fourier_riesz_matches_quadrature_oracle_1d() {
        // F[|x|^{-1/2}](lambda) via direct oscillatory quadrature, d=1:
        // int |x|^{-1/2} cos(lambda x) dx = 2 int_0^inf x^{-1/2} cos(lambda x) dx
        //                                 = sqrt(2 pi / lambda) at lambda > 0
        let r = SpaceCovariance::riesz(0.5, 1).unwrap();
        for lam in [0.5, 1.0, 2.0] {
            let got = gamma_fourier(&r, &[lam]).unwrap();
            let exact = (2.0 * std::f64::consts::PI / lam).sqrt();
            assert!((got - exact).abs() < 1e-10 * exact, "lambda={lam}: {got} vs {exact}");
        }
    }

    #[test]
    fn dalang_analytic() {
        let w = TimeCovariance::WhiteTime;
        assert!(dalang_check(&spec(w.clone(), SpaceCovariance::riesz(1.0, 2).unwrap())));
        assert!(!dalang_check(&spec(w.clone(), SpaceCovariance::riesz(2.5, 3).unwrap())));
        assert!(dalang_check(&spec(w, SpaceCovariance::DiracDelta)));
    }

    #[test]
    fn dalang_divergent_case_verified_by_radial_quadrature() {
        // alpha = 2.5, d = 3: integrand ~ r^{d-1} * r^{alpha-d} / (1+r^2)
        // grows without bound in the integral as the cutoff increases
        let c = riesz_fourier_constant(3, 2.5);
        let f = |r: f64| r * r * c * r.powf(2.5 - 3.0) / (1.0 + r * r);
        let i1 = quad::integrate(f, 1.0, 1e3, 64);
        let i2 = quad::integrate(f, 1.0, 1e6, 64);
        assert!(i2 > 10.0 * i1, "tail integral must diverge: {i1} vs {i2}");
        // convergent counterpart alpha = 1, d = 2 stabilizes
        let c2 = riesz_fourier_constant(2, 1.0);
        let g = |r: f64| r * c2 * r.powf(1.0 - 2.0) / (1.0 + r * r);
        let j1 = quad::integrate(g, 1.0, 1e3, 64);
        let j2 = quad::integrate(g, 1.0, 1e6, 64);
        assert!((j2 - j1) / j1 < 0.01);
    }

    #[test]
    fn regime_labels_and_violations() {
        // 2*0.5 + 0.8 = 1.8 < 2: admissible
        let ok = spec(
            TimeCovariance::fractional(0.5).unwrap(),
            SpaceCovariance::riesz(0.8, 2).unwrap(),
        );
        let rep = regime_classify(&ok);
        assert_eq!(rep.regime, Regime::FracTimeRiesz);
        assert!(rep.admissible());
        // 2*0.7 + 0.8 = 2.2 >= 2: violation reported, not thrown
        let bad = spec(
            TimeCovariance::fractional(0.7).unwrap(),
            SpaceCovariance::riesz(0.8, 2).unwrap(),
        );
        let rep = regime_classify(&bad);
        assert_eq!(rep.regime, Regime::FracTimeRiesz);
        assert!(!rep.admissible());
        let wd = spec(TimeCovariance::WhiteTime, SpaceCovariance::DiracDelta);
        let rep = regime_classify(&wd);
        assert_eq!(rep.regime, Regime::WhiteTimeDirac);
        assert!(rep.admissible());
        let th11 = spec(
            TimeCovariance::ConstantOne,
            SpaceCovariance::smooth_bounded(1.0, 1.0, 1).unwrap(),
        );
        let rep = regime_classify(&th11);
        assert_eq!(rep.regime, Regime::BoundedClass);
        assert!(rep.admissible());
    }

    #[test]
    fn mollified_dirac_at_zero_matches_heat_kernel() {
        let s = spec(TimeCovariance::WhiteTime, SpaceCovariance::DiracDelta);
        for eps in [0.1, 0.01] {
            let v = mollify_gamma(&s, eps, &[0.0]).unwrap();
            let exact = 1.0 / (4.0 * std::f64::consts::PI * eps).sqrt();
            assert!((v - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn mollified_riesz_matches_quadrature_oracle() {
        // independent oracle: direct 1-d convolution quadrature
        let (alpha, eps, x) = (0.5, 0.01, 1.0);
        let p = |y: f64| (-(y * y) / (4.0 * eps)).exp() / (4.0 * std::f64::consts::PI * eps).sqrt();
        // int p(x-y)|y|^{-1/2} dy: substitution near y=0, plain panels elsewhere
        let near = quad::integrate_power_endpoint(|y| y.powf(-alpha) * p(x - y), -alpha, 0.5, 16)
            + quad::integrate_power_endpoint(|y| y.powf(-alpha) * p(x + y), -alpha, 0.5, 16);
        let far = quad::integrate(|y| p(x - y) * y.abs().powf(-alpha), 0.5, 6.0, 48)
            + quad::integrate(|y| p(x - y) * y.abs().powf(-alpha), -6.0, -0.5, 48);
        let oracle = near + far;
        let got = mollified_riesz(1, alpha, eps, x);
        assert!((got - oracle).abs() < 1e-8 * oracle, "{got} vs {oracle}");
        // within 2% of the unmollified value at this eps
        assert!((got - 1.0).abs() < 0.02);
    }

    #[test]
    fn mollification_monotone_exhaustion_at_origin() {
        let dirac = spec(TimeCovariance::WhiteTime, SpaceCovariance::DiracDelta);
        let riesz = spec(
            TimeCovariance::fractional(0.2).unwrap(),
            SpaceCovariance::riesz(0.5, 1).unwrap(),
        );
        for s in [&dirac, &riesz] {
            let mut prev = 0.0;
            for eps in [0.4, 0.2, 0.1, 0.05, 0.025] {
                let v = mollify_gamma(s, eps, &[0.0]).unwrap();
                assert!(v > prev, "gamma_eps(0) must increase as eps decreases");
                prev = v;
            }
        }
    }

    #[test]
    fn mollified_symmetry() {
        let s = spec(
            TimeCovariance::fractional(0.2).unwrap(),
            SpaceCovariance::riesz(0.5, 1).unwrap(),
        );
        for x in [0.3, 1.7] {
            let a = mollify_gamma(&s, 0.05, &[x]).unwrap();
            let b = mollify_gamma(&s, 0.05, &[-x]).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kernel_factorization_riesz_1d() {
        let s = spec(TimeCovariance::WhiteTime, SpaceCovariance::riesz(0.5, 1).unwrap());
        let k = kernel_eval(&s, 0.0).unwrap();
        // K*K should match gamma within 1e-2 relative at 5 test points
        for x in [0.3, 0.7, 1.0, 2.5, 6.0] {
            let conv = k.normalization * k.normalization * riesz_self_convolution(1, 0.5, x);
            let g = x.powf(-0.5);
            assert!((conv / g - 1.0).abs() < 1e-2, "x={x}: {conv} vs {g}");
        }
    }

    #[test]
    fn kernel_factorization_riesz_2d_and_3d() {
        for (alpha, d) in [(1.0, 2), (1.5, 3)] {
            let s = spec(TimeCovariance::WhiteTime, SpaceCovariance::riesz(alpha, d).unwrap());
            let k = kernel_eval(&s, 0.0).unwrap();
            for x in [0.5, 1.0, 3.0] {
                let conv = k.normalization * k.normalization * riesz_self_convolution(d, alpha, x);
                let g = x.powf(-alpha);
                assert!((conv / g - 1.0).abs() < 1e-2);
            }
        }
    }

    #[test]
    fn kernel_dirac_flagged_and_smoothing_finite() {
        let s = spec(TimeCovariance::WhiteTime, SpaceCovariance::DiracDelta);
        let k0 = kernel_eval(&s, 0.0).unwrap();
        assert!(k0.is_distributional());
        assert!(k0.eval(&[0.2]).is_err());
        let riesz = spec(TimeCovariance::WhiteTime, SpaceCovariance::riesz(0.5, 1).unwrap());
        let ke = kernel_eval(&riesz, 0.1).unwrap();
        assert!(ke.eval(&[0.0]).unwrap().is_finite());
    }

    #[test]
    fn kernel_smooth_bounded_matches_gamma() {
        let s = spec(
            TimeCovariance::ConstantOne,
            SpaceCovariance::smooth_bounded(2.0, 1.3, 1).unwrap(),
        );
        let k = kernel_eval(&s, 0.0).unwrap();
        for x in [0.0, 0.5, 1.5, 3.0] {
            let conv =
                k.normalization * k.normalization * gaussian_factor_self_convolution_1d(1.3, x);
            let g = gamma_eval(&s.space, &[x]).unwrap();
            assert!((conv / g - 1.0).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn mollified_gamma_table_interpolates() {
        let space = SpaceCovariance::riesz(0.5, 1).unwrap();
        let mg = MollifiedGamma::new(&space, 0.01, 10.0, 2048).unwrap();
        for x in [0.0, 0.37, 1.0, 2.9] {
            let exact = mollified_riesz(1, 0.5, 0.01, x);
            assert!((mg.eval(&[x]) - exact).abs() < 2e-4 * exact.max(1.0));
        }
        // beyond the table: falls back to the unmollified power
        assert!((mg.eval(&[20.0]) - 20f64.powf(-0.5)).abs() < 1e-6);
    }
}
