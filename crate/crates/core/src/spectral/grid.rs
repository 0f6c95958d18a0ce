use std::f64::consts::PI;

use crate::{Error, Result};

/// Uniform collocation grid on the periodic rectangle `[0, lx) x [0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and at least 8"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` grid on `(0, 2pi)^2`.
    pub fn periodic_2pi(n: usize) -> Result<Self> {
        Self::new(n, n, 2.0 * PI, 2.0 * PI)
    }

    /// `n x n` grid on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn is_2pi_square(&self) -> bool {
        let two_pi = 2.0 * PI;
        (self.lx - two_pi).abs() < 1e-12 && (self.ly - two_pi).abs() < 1e-12
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.lx - other.lx).abs() <= 1e-14 * self.lx
            && (self.ly - other.ly).abs() <= 1e-14 * self.ly
    }

    pub fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Signed integer wavenumber of FFT index `j` along an axis of `n` points.
    #[inline]
    pub fn signed_index(j: usize, n: usize) -> i64 {
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Storage index of signed wavenumber `s` along an axis of `n` points.
    #[inline]
    pub fn storage_index(s: i64, n: usize) -> usize {
        s.rem_euclid(n as i64) as usize
    }

    /// Angular wavenumbers `2 pi s(j) / l` along x.
    pub fn wavenumbers_x(&self) -> Vec<f64> {
        axis_wavenumbers(self.nx, self.lx)
    }

    pub fn wavenumbers_y(&self) -> Vec<f64> {
        axis_wavenumbers(self.ny, self.ly)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lx * i as f64 / self.nx as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ly * i as f64 / self.ny as f64
    }

    /// Smallest nonzero eigenvalue of `-Laplacian` on mean-zero fields.
    pub fn poincare_constant(&self) -> f64 {
        let ax = 2.0 * PI / self.lx;
        let ay = 2.0 * PI / self.ly;
        (ax * ax).min(ay * ay)
    }
}

fn axis_wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|j| 2.0 * PI * Grid2D::signed_index(j, n) as f64 / l)
        .collect()
}
