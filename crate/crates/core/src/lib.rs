//! Numerical machinery for the parabolic Anderson equation
//! `du/dt = 1/2 Δu + θ V u` with homogeneous Gaussian potentials that are
//! fractional or white in time and space.
//!
//! The crate provides, at desk scale:
//! * the admissible time/space covariance families and their kernel
//!   factorizations ([`covariance`]),
//! * reproducible Gaussian noise synthesis on lattices ([`field`]),
//! * an explicit finite-difference solver for the mild (Ito-Skorokhod)
//!   equation plus its Picard-localized and renormalized Feynman-Kac
//!   companions ([`spde`]),
//! * Brownian-path Monte Carlo estimators for annealed moments ([`fk`]),
//! * variational ground-state solvers for the limit constants
//!   ([`variational`]),
//! * closed-form limit constants, tail rates and fitting utilities for the
//!   spatial asymptotic laws ([`asymptotics`]).
//!
//! All randomness is counter-based: every sample is a pure function of
//! `(seed, stream, counter)`, so ensembles can be generated in any order or
//! in parallel with bit-identical results.

pub mod asymptotics;
pub mod covariance;
pub mod error;
pub mod fft;
pub mod field;
pub mod fk;
pub mod grid;
pub mod quad;
pub mod rng;
pub mod spde;
pub mod variational;

pub use covariance::{CovarianceSpec, KernelSpec, Regime, SpaceCovariance, TimeCovariance};
pub use error::{Error, Result};
pub use grid::{GridSpec, LatticeField};

/// Deterministic pairwise summation. Used for all ensemble reductions so
/// results do not depend on worker count or accumulation order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Mean and standard error of the mean via pairwise summation.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let mean = pairwise_sum(xs) / n as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn mean_and_se_on_constants() {
        let xs = vec![3.0; 16];
        let (m, se) = mean_and_se(&xs);
        assert_eq!(m, 3.0);
        assert_eq!(se, 0.0);
    }
}
