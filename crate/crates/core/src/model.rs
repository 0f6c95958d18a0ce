//! Navier-Stokes specific terms: the advective Jacobian, forcings, the
//! manufactured test problem and primitive-form velocity operators.
//!
//! Sign conventions: `omega = -Laplacian psi` and the advecting velocity is
//! `u = grad_perp psi = (-d_y psi, d_x psi)`, so the vorticity is recovered
//! from a velocity as `omega = d_y u1 - d_x u2`. This is the mirror image
//! (x -> -x) of the textbook orientation and leaves all dynamics intact.

use std::f64::consts::PI;

use crate::spectral::{Axis, Grid2D, RealField2D, SpectralField2D, Transform};
use crate::{Complex, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingKind {
    /// Velocity forcing `(m^3/Re) cos(m y)` on `(0, 2pi)^2`.
    Kolmogorov { m: u32 },
    /// Sources of the manufactured solution returned by
    /// [`manufactured_case`].
    Manufactured,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    pub re: f64,
}

impl ForcingSpec {
    pub fn validate(&self) -> Result<()> {
        if let ForcingKind::Kolmogorov { m } = self.kind {
            if m < 1 {
                return Err(Error::InvalidConfig("Kolmogorov wavenumber m must be >= 1".into()));
            }
        }
        if !(self.re > 0.0) {
            return Err(Error::InvalidConfig("Re must be positive".into()));
        }
        Ok(())
    }
}

/// Two-component velocity field in spectral space.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity<T: Real> {
    pub u1: SpectralField2D<T>,
    pub u2: SpectralField2D<T>,
}

impl<T: Real> Velocity<T> {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { u1: SpectralField2D::zeros(grid), u2: SpectralField2D::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.u1.grid
    }

    pub fn lincomb(a: T, x: &Self, b: T, y: &Self) -> Self {
        Self {
            u1: SpectralField2D::lincomb(a, &x.u1, b, &y.u1),
            u2: SpectralField2D::lincomb(a, &x.u2, b, &y.u2),
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self { u1: self.u1.scale(alpha), u2: self.u2.scale(alpha) }
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        Ok(self.u1.inner(&other.u1)? + self.u2.inner(&other.u2)?)
    }

    pub fn grad_norm_sq(&self) -> T {
        self.u1.grad_norm_sq() + self.u2.grad_norm_sq()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    pub fn divergence(&self) -> SpectralField2D<T> {
        self.u1.deriv(Axis::X, 1).add_scaled(T::one(), &self.u2.deriv(Axis::Y, 1))
    }

    /// `d_y u1 - d_x u2`, the vorticity in this crate's orientation.
    pub fn vorticity(&self) -> SpectralField2D<T> {
        self.u1.deriv(Axis::Y, 1).add_scaled(-T::one(), &self.u2.deriv(Axis::X, 1))
    }
}

/// `grad_perp psi . grad omega = (-d_y psi)(d_x omega) + (d_x psi)(d_y omega)`,
/// with products formed on the collocation points.
pub fn jacobian<T: Real>(
    psi: &SpectralField2D<T>,
    omega: &SpectralField2D<T>,
    dealias: bool,
    transform: &mut Transform<T>,
) -> Result<SpectralField2D<T>> {
    psi.grid.check_same(&omega.grid)?;
    transform.grid().check_same(&psi.grid)?;
    let (psi, omega) = if dealias {
        (psi.dealias_23(), omega.dealias_23())
    } else {
        (psi.clone(), omega.clone())
    };
    let (psi_x, psi_y) =
        transform.inverse_pair(&psi.deriv(Axis::X, 1), &psi.deriv(Axis::Y, 1));
    let (w_x, w_y) =
        transform.inverse_pair(&omega.deriv(Axis::X, 1), &omega.deriv(Axis::Y, 1));
    let values: Vec<T> = (0..psi_x.values.len())
        .map(|i| psi_x.values[i] * w_y.values[i] - psi_y.values[i] * w_x.values[i])
        .collect();
    let mut out = transform.forward(&RealField2D::from_values(psi.grid, values)?)?;
    if dealias {
        out.dealias_23_in_place();
    }
    Ok(out)
}

/// Vorticity forcing `(m^4/Re) sin(m y)`, the curl of the Kolmogorov
/// velocity forcing.
pub fn kolmogorov_vorticity_forcing<T: Real>(
    grid: Grid2D,
    m: u32,
    re: f64,
) -> Result<SpectralField2D<T>> {
    check_kolmogorov_domain(&grid, m)?;
    let mut f = SpectralField2D::zeros(grid);
    let amp = (m as f64).powi(4) / re;
    // amp sin(m y) = amp/(2i) (e^{imy} - e^{-imy})
    f.set_mode(0, m as i64, Complex::new(T::zero(), T::lit(-0.5 * amp)));
    Ok(f)
}

/// Velocity forcing whose vorticity (`d_y f1 - d_x f2`) is
/// [`kolmogorov_vorticity_forcing`]: `f = (-(m^3/Re) cos(m y), 0)`.
pub fn kolmogorov_velocity_forcing<T: Real>(grid: Grid2D, m: u32, re: f64) -> Result<Velocity<T>> {
    check_kolmogorov_domain(&grid, m)?;
    let mut f = Velocity::zeros(grid);
    let amp = (m as f64).powi(3) / re;
    f.u1.set_mode(0, m as i64, Complex::new(T::lit(-0.5 * amp), T::zero()));
    Ok(f)
}

pub fn check_kolmogorov_domain(grid: &Grid2D, m: u32) -> Result<()> {
    if !grid.is_2pi_square() {
        return Err(Error::DomainMismatch(format!(
            "Kolmogorov forcing needs (0, 2pi)^2, got {} x {}",
            grid.lx, grid.ly
        )));
    }
    if m < 1 || 2 * m as usize >= grid.ny {
        return Err(Error::InvalidConfig(format!("Kolmogorov wavenumber {m} not resolved")));
    }
    Ok(())
}

/// Exact solution pair with closed-form compensating sources.
///
/// The pair does not satisfy `omega = -Laplacian psi`, so the constraint
/// carries its own source `s_p = omega + Laplacian psi`; the discrete
/// Poisson step solves `-Laplacian psi = omega - s_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub re: f64,
    pub lx: f64,
    pub ly: f64,
}

/// `omega = sin t sin 2pi x sin 2pi y`, `psi = cos t cos 2pi x cos 2pi y` on
/// the unit square with `Re = 10`.
pub fn manufactured_case() -> ManufacturedCase {
    ManufacturedCase { re: 10.0, lx: 1.0, ly: 1.0 }
}

impl ManufacturedCase {
    const K: f64 = 2.0 * PI;

    pub fn omega(&self, t: f64, x: f64, y: f64) -> f64 {
        t.sin() * (Self::K * x).sin() * (Self::K * y).sin()
    }

    pub fn psi(&self, t: f64, x: f64, y: f64) -> f64 {
        t.cos() * (Self::K * x).cos() * (Self::K * y).cos()
    }

    /// `grad_perp psi . grad omega` of the exact pair.
    pub fn advection(&self, t: f64, x: f64, y: f64) -> f64 {
        let (sx, cx) = (Self::K * x).sin_cos();
        let (sy, cy) = (Self::K * y).sin_cos();
        Self::K * Self::K * t.sin() * t.cos() * (cx * cx * sy * sy - sx * sx * cy * cy)
    }

    /// `d_t omega - (1/Re) Laplacian omega + grad_perp psi . grad omega`.
    pub fn source_omega(&self, t: f64, x: f64, y: f64) -> f64 {
        let shape = (Self::K * x).sin() * (Self::K * y).sin();
        let lap_factor = 2.0 * Self::K * Self::K;
        t.cos() * shape + lap_factor / self.re * t.sin() * shape + self.advection(t, x, y)
    }

    /// `omega + Laplacian psi`.
    pub fn source_p(&self, t: f64, x: f64, y: f64) -> f64 {
        let lap_factor = 2.0 * Self::K * Self::K;
        self.omega(t, x, y) - lap_factor * self.psi(t, x, y)
    }

    pub fn grid_matches(&self, grid: &Grid2D) -> Result<()> {
        if (grid.lx - self.lx).abs() > 1e-12 || (grid.ly - self.ly).abs() > 1e-12 {
            return Err(Error::DomainMismatch(format!(
                "manufactured case lives on {} x {}, grid is {} x {}",
                self.lx, self.ly, grid.lx, grid.ly
            )));
        }
        Ok(())
    }

    pub fn sample(
        &self,
        grid: Grid2D,
        f: impl Fn(&Self, f64, f64) -> f64,
    ) -> RealField2D<f64> {
        RealField2D::from_fn(grid, |x, y| f(self, x, y))
    }
}

/// `u = (-d_y psi, d_x psi)`.
pub fn velocity_from_streamfunction<T: Real>(psi: &SpectralField2D<T>) -> Velocity<T> {
    Velocity {
        u1: psi.deriv(Axis::Y, 1).scale(-T::one()),
        u2: psi.deriv(Axis::X, 1),
    }
}

/// `(u . grad) v`, componentwise, with physical-space products.
pub fn advection_primitive<T: Real>(
    u: &Velocity<T>,
    v: &Velocity<T>,
    dealias: bool,
    transform: &mut Transform<T>,
) -> Result<Velocity<T>> {
    u.grid().check_same(v.grid())?;
    transform.grid().check_same(u.grid())?;
    let prep = |f: &SpectralField2D<T>| if dealias { f.dealias_23() } else { f.clone() };
    let (u1, u2) = (prep(&u.u1), prep(&u.u2));
    let (v1, v2) = (prep(&v.u1), prep(&v.u2));
    let (pu1, pu2) = transform.inverse_pair(&u1, &u2);
    let (v1x, v1y) = transform.inverse_pair(&v1.deriv(Axis::X, 1), &v1.deriv(Axis::Y, 1));
    let (v2x, v2y) = transform.inverse_pair(&v2.deriv(Axis::X, 1), &v2.deriv(Axis::Y, 1));
    let n = pu1.values.len();
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (pu1.values[i], pu2.values[i]);
        g1.push(a * v1x.values[i] + b * v1y.values[i]);
        g2.push(a * v2x.values[i] + b * v2y.values[i]);
    }
    let grid = *u.grid();
    let (mut f1, mut f2) = transform.forward_pair(
        &RealField2D::from_values(grid, g1)?,
        &RealField2D::from_values(grid, g2)?,
    )?;
    if dealias {
        f1.dealias_23_in_place();
        f2.dealias_23_in_place();
    }
    Ok(Velocity { u1: f1, u2: f2 })
}

/// Fourier-space projection onto divergence-free fields:
/// `f <- f - xi (xi . f) / |xi|^2` for every nonzero mode.
///
/// Odd-derivative Nyquist conventions apply: a Nyquist wavenumber does not
/// take part in `xi . f`, matching [`SpectralField2D::deriv`].
#[allow(clippy::needless_range_loop)]
pub fn leray_project<T: Real>(f: &Velocity<T>) -> Velocity<T> {
    let grid = *f.grid();
    let (nx, ny) = (grid.nx, grid.ny);
    let kx = grid.wavenumbers_x();
    let ky = grid.wavenumbers_y();
    let mut out = f.clone();
    for m in 0..ny {
        let ym = if m == ny / 2 { T::zero() } else { T::lit(ky[m]) };
        for j in 0..nx {
            let xj = if j == nx / 2 { T::zero() } else { T::lit(kx[j]) };
            let k2 = xj * xj + ym * ym;
            if k2 == T::zero() {
                continue;
            }
            let idx = m * nx + j;
            let a = f.u1.coeffs[idx];
            let b = f.u2.coeffs[idx];
            let dot = (a * xj + b * ym) / k2;
            out.u1.coeffs[idx] = a - dot * xj;
            out.u2.coeffs[idx] = b - dot * ym;
        }
    }
    out
}

/// `<nl, v>` with the same quadrature as [`SpectralField2D::inner`]; the
/// scheme uses this single value in both the vorticity and the scalar
/// equation.
pub fn trilinear<T: Real>(nl: &SpectralField2D<T>, v: &SpectralField2D<T>) -> Result<T> {
    nl.inner(v)
}

/// Mean-free random field with modes `|sx|, |sy| <= band`, coefficients
/// uniform in the square of half-width `amplitude`.
pub fn random_band_limited<T: Real, R: rand::Rng + ?Sized>(
    grid: Grid2D,
    band: usize,
    amplitude: f64,
    rng: &mut R,
) -> SpectralField2D<T> {
    let band = band.min(grid.nx / 2 - 1).min(grid.ny / 2 - 1) as i64;
    let mut f = SpectralField2D::zeros(grid);
    for sy in 0..=band {
        for sx in -band..=band {
            if sy == 0 && sx <= 0 {
                continue;
            }
            let re = rng.gen_range(-amplitude..=amplitude);
            let im = rng.gen_range(-amplitude..=amplitude);
            f.set_mode(sx, sy, Complex::new(T::lit(re), T::lit(im)));
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fwd(tr: &mut Transform<f64>, f: impl Fn(f64, f64) -> f64) -> SpectralField2D<f64> {
        let g = *tr.grid();
        tr.forward(&RealField2D::from_fn(g, f)).unwrap()
    }

    fn max_coeff_diff(a: &SpectralField2D<f64>, b: &SpectralField2D<f64>) -> f64 {
        a.coeffs.iter().zip(&b.coeffs).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn jacobian_vanishes_on_basic_kolmogorov_flow() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let psi = fwd(&mut tr, |_, y| (2.0 * y).sin());
        let w = fwd(&mut tr, |_, y| 4.0 * (2.0 * y).sin());
        for dealias in [false, true] {
            let j = jacobian(&psi, &w, dealias, &mut tr).unwrap();
            assert!(j.max_abs_coeff() < 1e-12);
        }
        let c = fwd(&mut tr, |_, _| 3.0);
        assert!(jacobian(&c, &w, false, &mut tr).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn jacobian_of_manufactured_pair() {
        let grid = Grid2D::unit_square(64).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let case = manufactured_case();
        let t = PI / 4.0;
        let psi = fwd(&mut tr, |x, y| case.psi(t, x, y));
        let w = fwd(&mut tr, |x, y| case.omega(t, x, y));
        let j = jacobian(&psi, &w, false, &mut tr).unwrap();
        let j = tr.inverse(&j);
        // symbolic expansion: 4 pi^2 sin t cos t (cos^2 X sin^2 Y - sin^2 X cos^2 Y)
        let exact = RealField2D::<f64>::from_fn(grid, |x, y| {
            let (sx, cx) = (2.0 * PI * x).sin_cos();
            let (sy, cy) = (2.0 * PI * y).sin_cos();
            4.0 * PI * PI * t.sin() * t.cos() * (cx * cx * sy * sy - sx * sx * cy * cy)
        });
        let err = j.values.iter().zip(&exact.values).fold(0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{err}");
        assert!(jacobian(&psi, &SpectralField2D::zeros(Grid2D::unit_square(32).unwrap()), false, &mut tr).is_err());
    }

    #[test]
    fn kolmogorov_forcing_amplitude() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let f = kolmogorov_vorticity_forcing::<f64>(grid, 2, 100.0).unwrap();
        let exact = fwd(&mut tr, |_, y| 0.16 * (2.0 * y).sin());
        assert!(max_coeff_diff(&f, &exact) < 1e-15);
        assert_eq!(f.mean(), 0.0);
        let f1 = kolmogorov_vorticity_forcing::<f64>(grid, 1, 1.0).unwrap();
        assert!(max_coeff_diff(&f1, &fwd(&mut tr, |_, y| y.sin())) < 1e-15);

        let unit = Grid2D::unit_square(32).unwrap();
        assert!(matches!(
            kolmogorov_vorticity_forcing::<f64>(unit, 2, 100.0),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn velocity_forcing_curl_is_vorticity_forcing() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let fv = kolmogorov_velocity_forcing::<f64>(grid, 2, 100.0).unwrap();
        let fw = kolmogorov_vorticity_forcing::<f64>(grid, 2, 100.0).unwrap();
        assert!(max_coeff_diff(&fv.vorticity(), &fw) < 1e-15);
    }

    #[test]
    fn basic_kolmogorov_flow_is_steady() {
        let (m, re) = (2u32, 100.0);
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let psi = fwd(&mut tr, |_, y| (m as f64 * y).sin());
        let w = psi.laplacian().scale(-1.0);
        let f = kolmogorov_vorticity_forcing::<f64>(grid, m, re).unwrap();
        let residual = w
            .laplacian()
            .scale(-1.0 / re)
            .add_scaled(1.0, &jacobian(&psi, &w, false, &mut tr).unwrap())
            .add_scaled(-1.0, &f);
        assert!(residual.max_abs_coeff() < 1e-10);
    }

    #[test]
    fn manufactured_constraint_source_at_zero() {
        let case = manufactured_case();
        for &(x, y) in &[(0.1, 0.2), (0.7, 0.35), (0.0, 0.5)] {
            let expected = -8.0 * PI * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).cos();
            assert!((case.source_p(0.0, x, y) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn manufactured_residual_vanishes() {
        // d_t omega via central differences in t; spatial terms spectrally.
        let case = manufactured_case();
        let grid = Grid2D::unit_square(64).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        for &t in &[0.0, 1.0, 50.0] {
            let w = fwd(&mut tr, |x, y| case.omega(t, x, y));
            let psi = fwd(&mut tr, |x, y| case.psi(t, x, y));
            let dt_w = fwd(&mut tr, |x, y| t.cos() * (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
            let src = fwd(&mut tr, |x, y| case.source_omega(t, x, y));
            let res = dt_w
                .add_scaled(-1.0 / case.re, &w.laplacian())
                .add_scaled(1.0, &jacobian(&psi, &w, false, &mut tr).unwrap())
                .add_scaled(-1.0, &src);
            assert!(tr.inverse(&res).max_abs() < 1e-10);

            let sp = fwd(&mut tr, |x, y| case.source_p(t, x, y));
            let c = w.add_scaled(1.0, &psi.laplacian()).add_scaled(-1.0, &sp);
            assert!(tr.inverse(&c).max_abs() < 1e-10);
        }
    }

    #[test]
    fn manufactured_trilinear_vanishes_by_parity() {
        // Fine-grid quadrature oracle, independent of the jacobian code path.
        let case = manufactured_case();
        let n = 256;
        for &t in &[0.3, 1.0, 2.5] {
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
                    sum += case.advection(t, x, y) * case.omega(t, x, y);
                }
            }
            assert!((sum / (n * n) as f64).abs() < 1e-12);
        }
        let grid = Grid2D::unit_square(32).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let t = 1.0;
        let w = fwd(&mut tr, |x, y| case.omega(t, x, y));
        let psi = fwd(&mut tr, |x, y| case.psi(t, x, y));
        let nl = jacobian(&psi, &w, false, &mut tr).unwrap();
        assert!(trilinear(&nl, &w).unwrap().abs() < 1e-10);
    }

    #[test]
    fn velocity_from_kolmogorov_streamfunction() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let psi = fwd(&mut tr, |_, y| (2.0 * y).sin());
        let u = velocity_from_streamfunction(&psi);
        assert!(max_coeff_diff(&u.u1, &fwd(&mut tr, |_, y| -2.0 * (2.0 * y).cos())) < 1e-14);
        assert!(u.u2.max_abs_coeff() < 1e-15);
        assert!(u.divergence().max_abs_coeff() < 1e-12);
        let z = velocity_from_streamfunction(&SpectralField2D::<f64>::zeros(grid));
        assert_eq!(z, Velocity::zeros(grid));
    }

    #[test]
    fn curl_of_perp_gradient_is_laplacian() {
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let psi = fwd(&mut tr, |x, y| (x + 2.0 * y).sin() + (3.0 * x).cos() * y.sin());
        let u = velocity_from_streamfunction(&psi);
        let curl = u.u2.deriv(Axis::X, 1).add_scaled(-1.0, &u.u1.deriv(Axis::Y, 1));
        assert!(max_coeff_diff(&curl, &psi.laplacian()) < 1e-12);
        assert!(max_coeff_diff(&u.vorticity(), &psi.laplacian().scale(-1.0)) < 1e-12);
    }

    #[test]
    fn advection_examples() {
        let grid = Grid2D::periodic_2pi(32).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let u = velocity_from_streamfunction(&fwd(&mut tr, |_, y| (2.0 * y).sin()));
        let g = advection_primitive(&u, &u, false, &mut tr).unwrap();
        assert!(g.u1.max_abs_coeff() < 1e-14 && g.u2.max_abs_coeff() < 1e-14);

        let mut c = Velocity::zeros(grid);
        c.u1.set_mode(0, 0, Complex::new(1.5, 0.0));
        c.u2.set_mode(0, 0, Complex::new(-0.5, 0.0));
        let g = advection_primitive(&u, &c, false, &mut tr).unwrap();
        assert!(g.u1.max_abs_coeff() < 1e-15 && g.u2.max_abs_coeff() < 1e-15);
    }

    #[test]
    fn curl_of_advection_is_jacobian() {
        // band 3 on a 16-point grid: quadratic products stay resolved
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let psi = fwd(&mut tr, |x, y| {
            (x + 2.0 * y).sin() + 0.5 * (3.0 * x).cos() * y.sin() - 0.2 * (2.0 * x - y).cos()
        });
        let w = psi.laplacian().scale(-1.0);
        let u = velocity_from_streamfunction(&psi);
        let g = advection_primitive(&u, &u, false, &mut tr).unwrap();
        let j = jacobian(&psi, &w, false, &mut tr).unwrap();
        assert!(max_coeff_diff(&g.vorticity(), &j) < 1e-10);
    }

    #[test]
    fn leray_projection_examples() {
        let grid = Grid2D::unit_square(16).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let p = fwd(&mut tr, |x, _| (2.0 * PI * x).sin());
        let grad = Velocity { u1: p.deriv(Axis::X, 1), u2: p.deriv(Axis::Y, 1) };
        let pg = leray_project(&grad);
        assert!(pg.u1.max_abs_coeff() < 1e-14 && pg.u2.max_abs_coeff() < 1e-14);

        let psi = fwd(&mut tr, |x, y| (2.0 * PI * (x + y)).cos() + (4.0 * PI * y).sin());
        let u = velocity_from_streamfunction(&psi);
        let pu = leray_project(&u);
        assert!(max_coeff_diff(&pu.u1, &u.u1) < 1e-12 && max_coeff_diff(&pu.u2, &u.u2) < 1e-12);
    }

    #[test]
    fn trilinear_examples() {
        let grid = Grid2D::unit_square(16).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let s = fwd(&mut tr, |x, _| (2.0 * PI * x).sin());
        assert!((trilinear(&s, &s).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(trilinear(&SpectralField2D::zeros(grid), &s).unwrap(), 0.0);
    }
}
