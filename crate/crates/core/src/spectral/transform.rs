use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::{Grid2D, RealField2D, SpectralField2D};
use crate::{Complex, Error, Real, Result};

/// Cached 2D FFT plans plus a private workspace.
///
/// Forward transforms are normalized so that coefficient `(0, 0)` is the
/// mean of the field; inverse transforms are unnormalized sums. Methods take
/// `&mut self` because they reuse the workspace; clone one per worker.
#[derive(Clone)]
pub struct Transform<T: Real> {
    grid: Grid2D,
    fwd_x: Arc<dyn Fft<T>>,
    inv_x: Arc<dyn Fft<T>>,
    fwd_y: Arc<dyn Fft<T>>,
    inv_y: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    transposed: Vec<Complex<T>>,
}

impl<T: Real> std::fmt::Debug for Transform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

impl<T: Real> Transform<T> {
    pub fn new(grid: Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx);
        let inv_x = planner.plan_fft_inverse(grid.nx);
        let fwd_y = planner.plan_fft_forward(grid.ny);
        let inv_y = planner.plan_fft_inverse(grid.ny);
        let scratch_len = [&fwd_x, &inv_x, &fwd_y, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            grid,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
            transposed: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn fft2(&mut self, data: &mut [Complex<T>], dir: Direction) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        assert_eq!(data.len(), nx * ny, "buffer does not match the grid");
        let (px, py) = match dir {
            Direction::Forward => (&self.fwd_x, &self.fwd_y),
            Direction::Inverse => (&self.inv_x, &self.inv_y),
        };
        px.process_with_scratch(data, &mut self.scratch);
        for m in 0..ny {
            for j in 0..nx {
                self.transposed[j * ny + m] = data[m * nx + j];
            }
        }
        py.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for j in 0..nx {
            for m in 0..ny {
                data[m * nx + j] = self.transposed[j * ny + m];
            }
        }
    }

    /// In-place normalized forward transform of a complex buffer.
    pub fn forward_in_place(&mut self, data: &mut [Complex<T>]) {
        self.fft2(data, Direction::Forward);
        let scale = T::one() / T::from_usize(self.grid.len()).unwrap();
        for c in data.iter_mut() {
            *c = *c * scale;
        }
    }

    /// In-place inverse transform of a complex buffer (no scaling).
    pub fn inverse_in_place(&mut self, data: &mut [Complex<T>]) {
        self.fft2(data, Direction::Inverse);
    }

    pub fn forward(&mut self, field: &RealField2D<T>) -> Result<SpectralField2D<T>> {
        self.grid.check_same(&field.grid)?;
        if field.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField);
        }
        let mut data: Vec<Complex<T>> = field
            .values
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.forward_in_place(&mut data);
        Ok(SpectralField2D::from_coeffs(self.grid, data))
    }

    /// Forward transform of two real fields with a single complex FFT.
    pub fn forward_pair(
        &mut self,
        a: &RealField2D<T>,
        b: &RealField2D<T>,
    ) -> Result<(SpectralField2D<T>, SpectralField2D<T>)> {
        self.grid.check_same(&a.grid)?;
        self.grid.check_same(&b.grid)?;
        if a.values.iter().chain(b.values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField);
        }
        let mut data: Vec<Complex<T>> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| Complex::new(x, y))
            .collect();
        self.forward_in_place(&mut data);
        Ok(split_packed(&self.grid, &data))
    }

    pub fn inverse(&mut self, field: &SpectralField2D<T>) -> RealField2D<T> {
        let mut data = field.coeffs.clone();
        self.inverse_in_place(&mut data);
        RealField2D {
            grid: self.grid,
            values: data.iter().map(|c| c.re).collect(),
        }
    }

    /// Inverse transform of two Hermitian spectra with a single complex FFT.
    pub fn inverse_pair(
        &mut self,
        a: &SpectralField2D<T>,
        b: &SpectralField2D<T>,
    ) -> (RealField2D<T>, RealField2D<T>) {
        let i = Complex::new(T::zero(), T::one());
        let mut data: Vec<Complex<T>> = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| x + i * y)
            .collect();
        self.inverse_in_place(&mut data);
        let re = data.iter().map(|c| c.re).collect();
        let im = data.iter().map(|c| c.im).collect();
        (
            RealField2D { grid: self.grid, values: re },
            RealField2D { grid: self.grid, values: im },
        )
    }
}

/// Separates `Z = A + iB` into the spectra of two real fields.
fn split_packed<T: Real>(
    grid: &Grid2D,
    z: &[Complex<T>],
) -> (SpectralField2D<T>, SpectralField2D<T>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let half = T::lit(0.5);
    let mut a = vec![Complex::new(T::zero(), T::zero()); nx * ny];
    let mut b = a.clone();
    for m in 0..ny {
        let mm = (ny - m) % ny;
        for j in 0..nx {
            let jj = (nx - j) % nx;
            let zk = z[m * nx + j];
            let zc = z[mm * nx + jj].conj();
            a[m * nx + j] = (zk + zc) * half;
            // (zk - zc) / (2i)
            let d = zk - zc;
            b[m * nx + j] = Complex::new(d.im * half, -d.re * half);
        }
    }
    (
        SpectralField2D::from_coeffs(*grid, a),
        SpectralField2D::from_coeffs(*grid, b),
    )
}
