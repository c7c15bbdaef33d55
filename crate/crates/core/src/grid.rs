//! Space-time lattice descriptions shared across the solvers.

use crate::error::{Error, Result};

/// A periodic space-time grid: `nx` points per spatial axis with spacing
/// `dx` (torus circumference `L = nx*dx`), `nt` time steps of size `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub nx: usize,
    pub dx: f64,
    pub nt: usize,
    pub dt: f64,
}

impl GridSpec {
    pub fn new(d: usize, nx: usize, dx: f64, nt: usize, dt: f64) -> Result<Self> {
        if d == 0 || d > 3 {
            return Err(Error::InvalidParameter(format!("dimension d={d} out of range 1..=3")));
        }
        if nx == 0 || nt == 0 {
            return Err(Error::InvalidParameter("nx and nt must be >= 1".into()));
        }
        if !(dx > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParameter("dx and dt must be positive".into()));
        }
        Ok(Self { d, nx, dx, nt, dt })
    }

    /// Torus circumference per axis.
    pub fn circumference(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn sites(&self) -> usize {
        self.nx.pow(self.d as u32)
    }

    /// Coordinate of lattice site index along one axis, centered so that
    /// index nx/2 sits at the origin.
    pub fn coord(&self, idx: usize) -> f64 {
        (idx as isize - (self.nx / 2) as isize) as f64 * self.dx
    }

    /// Site index whose coordinate is closest to x (periodic wrap).
    pub fn site_of(&self, x: f64) -> usize {
        let raw = (x / self.dx).round() as isize + (self.nx / 2) as isize;
        raw.rem_euclid(self.nx as isize) as usize
    }
}

/// A spatial field u(t, .) on the torus at a fixed time.
#[derive(Debug, Clone)]
pub struct LatticeField {
    pub values: Vec<f64>,
    pub grid: GridSpec,
    pub time: f64,
}

impl LatticeField {
    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        Self {
            values: vec![c; grid.sites()],
            grid: grid.clone(),
            time: 0.0,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Total mass sum(u) * dx^d.
    pub fn mass(&self) -> f64 {
        crate::pairwise_sum(&self.values) * self.grid.dx.powi(self.grid.d as i32)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0, 8, 0.1, 4, 0.01).is_err());
        assert!(GridSpec::new(1, 0, 0.1, 4, 0.01).is_err());
        assert!(GridSpec::new(1, 8, -0.1, 4, 0.01).is_err());
    }

    #[test]
    fn coords_center_and_wrap() {
        let g = GridSpec::new(1, 8, 0.5, 1, 0.1).unwrap();
        assert_eq!(g.coord(4), 0.0);
        assert_eq!(g.site_of(0.0), 4);
        assert_eq!(g.site_of(-2.0), 0);
        assert_eq!(g.site_of(2.0), 0); // wraps: +2.0 == -2.0 on circumference 4
    }
}
