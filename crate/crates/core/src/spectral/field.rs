use super::Grid2D;
use crate::{Complex, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Physical-space samples, row-major with x fastest: `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField2D<T: Real> {
    pub grid: Grid2D,
    pub values: Vec<T>,
}

impl<T: Real> RealField2D<T> {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![T::zero(); grid.len()] }
    }

    pub fn from_values(grid: Grid2D, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at the collocation points.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            let y = grid.y(iy);
            for ix in 0..grid.nx {
                values.push(T::lit(f(grid.x(ix), y)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> T {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |s, &v| s + v);
        sum / T::from_usize(self.values.len()).unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Collocation quadrature `(lx ly / (nx ny)) * sum a b`.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.grid.check_same(&other.grid)?;
        let sum = self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |s, (&a, &b)| s + a * b);
        Ok(sum * T::lit(self.grid.area()) / T::from_usize(self.grid.len()).unwrap())
    }
}

/// Fourier coefficients of a real periodic field, full `nx x ny` layout
/// with `coeffs[m * nx + j]` holding mode `(s(j), s(m))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField2D<T: Real> {
    pub grid: Grid2D,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralField2D<T> {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    pub(crate) fn from_coeffs(grid: Grid2D, coeffs: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    /// Coefficient of `exp(i (sx 2pi x / lx + sy 2pi y / ly))`.
    pub fn coeff(&self, sx: i64, sy: i64) -> Complex<T> {
        let j = Grid2D::storage_index(sx, self.grid.nx);
        let m = Grid2D::storage_index(sy, self.grid.ny);
        self.coeffs[m * self.grid.nx + j]
    }

    /// Sets mode `(sx, sy)` and its conjugate partner, keeping the field real.
    pub fn set_mode(&mut self, sx: i64, sy: i64, value: Complex<T>) {
        let nx = self.grid.nx;
        let j = Grid2D::storage_index(sx, nx);
        let m = Grid2D::storage_index(sy, self.grid.ny);
        let jj = Grid2D::storage_index(-sx, nx);
        let mm = Grid2D::storage_index(-sy, self.grid.ny);
        if j == jj && m == mm {
            self.coeffs[m * nx + j] = Complex::new(value.re, T::zero());
        } else {
            self.coeffs[m * nx + j] = value;
            self.coeffs[mm * nx + jj] = value.conj();
        }
    }

    pub fn mean(&self) -> T {
        self.coeffs[0].re
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// `sum |c|`, an upper bound for the physical max norm.
    pub fn abs_sum(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |s, c| s + c.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest violation of `c(-j,-m) = conj(c(j,m))`, relative to the
    /// largest coefficient magnitude.
    pub fn hermitian_defect(&self) -> T {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut worst = T::zero();
        for m in 0..ny {
            let mm = (ny - m) % ny;
            for j in 0..nx {
                let jj = (nx - j) % nx;
                let d = self.coeffs[m * nx + j] - self.coeffs[mm * nx + jj].conj();
                worst = worst.max(d.norm());
            }
        }
        let scale = self.max_abs_coeff();
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a + b * alpha)
            .collect();
        Self { grid: self.grid, coeffs }
    }

    /// `a * x + b * y`.
    pub fn lincomb(a: T, x: &Self, b: T, y: &Self) -> Self {
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(&u, &v)| u * a + v * b)
            .collect();
        Self { grid: x.grid, coeffs }
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|&c| c * alpha).collect(),
        }
    }

    /// Applies a real per-mode multiplier `f(xi_x, xi_y, j, m)`.
    pub fn map_modes(&self, f: impl Fn(T, T, usize, usize) -> Complex<T>) -> Self {
        let kx = self.grid.wavenumbers_x();
        let ky = self.grid.wavenumbers_y();
        let nx = self.grid.nx;
        let mut coeffs = self.coeffs.clone();
        for (m, &ym) in ky.iter().enumerate() {
            let ym = T::lit(ym);
            for (j, &xj) in kx.iter().enumerate() {
                let c = &mut coeffs[m * nx + j];
                *c = *c * f(T::lit(xj), ym, j, m);
            }
        }
        Self { grid: self.grid, coeffs }
    }

    /// Spectral derivative of the given order along `axis`. The Nyquist
    /// coefficient is dropped for odd orders so the result stays real.
    pub fn deriv(&self, axis: Axis, order: u32) -> Self {
        let (n_nyq_x, n_nyq_y) = (self.grid.nx / 2, self.grid.ny / 2);
        let odd = order % 2 == 1;
        self.map_modes(|xi_x, xi_y, j, m| {
            let (xi, nyquist) = match axis {
                Axis::X => (xi_x, j == n_nyq_x),
                Axis::Y => (xi_y, m == n_nyq_y),
            };
            if odd && nyquist {
                return Complex::new(T::zero(), T::zero());
            }
            let ik = Complex::new(T::zero(), xi);
            let mut mult = Complex::new(T::one(), T::zero());
            for _ in 0..order {
                mult = mult * ik;
            }
            mult
        })
    }

    pub fn laplacian(&self) -> Self {
        self.map_modes(|xi_x, xi_y, _, _| Complex::new(-(xi_x * xi_x + xi_y * xi_y), T::zero()))
    }

    /// Solves `-Laplacian psi = self` with the zero-mean gauge.
    pub fn inv_neg_laplacian(&self) -> Result<Self> {
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(100.0));
        let scale = self.max_abs_coeff();
        let mean = self.coeffs[0].norm();
        if mean > tol * scale.max(T::min_positive_value()) && mean > T::zero() {
            return Err(Error::MeanNotZero { mean: mean.to_f64_lossy() });
        }
        Ok(self.inv_neg_laplacian_unchecked())
    }

    /// As [`inv_neg_laplacian`](Self::inv_neg_laplacian) but silently drops
    /// the zero mode.
    pub fn inv_neg_laplacian_unchecked(&self) -> Self {
        self.map_modes(|xi_x, xi_y, j, m| {
            if j == 0 && m == 0 {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::one() / (xi_x * xi_x + xi_y * xi_y), T::zero())
            }
        })
    }

    /// L2 inner product, evaluated through Parseval's identity. Equal to the
    /// collocation quadrature of the physical samples up to round-off.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.grid.check_same(&other.grid)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Self) -> T {
        let sum = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(T::zero(), |s, (a, b)| s + a.re * b.re + a.im * b.im);
        sum * T::lit(self.grid.area())
    }

    pub fn l2_norm(&self) -> T {
        self.inner_unchecked(self).sqrt()
    }

    /// `||grad f||^2 = <-Laplacian f, f>`, using the Laplacian symbol so that
    /// it matches the viscous term exactly (Nyquist modes included).
    pub fn grad_norm_sq(&self) -> T {
        let kx = self.grid.wavenumbers_x();
        let ky = self.grid.wavenumbers_y();
        let nx = self.grid.nx;
        let mut sum = T::zero();
        for (m, &ym) in ky.iter().enumerate() {
            let ym = T::lit(ym);
            for (j, &xj) in kx.iter().enumerate() {
                let xj = T::lit(xj);
                sum = sum + (xj * xj + ym * ym) * self.coeffs[m * nx + j].norm_sqr();
            }
        }
        sum * T::lit(self.grid.area())
    }

    /// 2/3-rule truncation: zeroes modes with `|s| > n / 3` on either axis.
    pub fn dealias_23(&self) -> Self {
        let mut out = self.clone();
        out.dealias_23_in_place();
        out
    }

    pub fn dealias_23_in_place(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for m in 0..ny {
            let sy = Grid2D::signed_index(m, ny).unsigned_abs() as usize;
            for j in 0..nx {
                let sx = Grid2D::signed_index(j, nx).unsigned_abs() as usize;
                if 3 * sx > nx || 3 * sy > ny {
                    self.coeffs[m * nx + j] = Complex::new(T::zero(), T::zero());
                }
            }
        }
    }
}
