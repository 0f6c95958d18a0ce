//! Time integrators and the run loop.
//!
//! Every FSAV step is a linear problem solved by superposition: two
//! constant-coefficient Helmholtz (or Brinkman) solves give `w1` and `w2`,
//! the scalar `q` follows from a closed-form update, and the new level is
//! `w1 + q w2`. The denominator of the `q` update is
//! `3/(2k) + gamma - <N, H^{-1}(-N)>`; the last term is never negative
//! because `H^{-1}` is symmetric positive definite, so the update is always
//! well defined.

use crate::diagnostics::{self, EnergyField};
use crate::model::{self, ForcingKind, ForcingSpec, ManufacturedCase, Velocity};
use crate::spectral::{Grid2D, RealField2D, SpectralField2D, Transform};
use crate::{Complex, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    FsavBdf2Sv,
    FsavBdf2Primitive,
    ImexBdf2Sv,
}

impl SchemeKind {
    pub fn tag(self) -> u32 {
        match self {
            SchemeKind::FsavBdf2Sv => 1,
            SchemeKind::FsavBdf2Primitive => 2,
            SchemeKind::ImexBdf2Sv => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            1 => Some(SchemeKind::FsavBdf2Sv),
            2 => Some(SchemeKind::FsavBdf2Primitive),
            3 => Some(SchemeKind::ImexBdf2Sv),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::FsavBdf2Sv => "fsav_bdf2_sv",
            SchemeKind::FsavBdf2Primitive => "fsav_bdf2_primitive",
            SchemeKind::ImexBdf2Sv => "imex_bdf2_sv",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [SchemeKind::FsavBdf2Sv, SchemeKind::FsavBdf2Primitive, SchemeKind::ImexBdf2Sv]
            .into_iter()
            .find(|k| k.name() == s)
    }

    pub fn uses_sav(self) -> bool {
        !matches!(self, SchemeKind::ImexBdf2Sv)
    }
}

pub const DEFAULT_GAMMA: f64 = 1000.0;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub k: f64,
    pub re: f64,
    pub gamma: f64,
    pub grid: Grid2D,
    pub scheme: SchemeKind,
    pub dealias: bool,
    pub forcing: ForcingKind,
    /// Blow-up is declared when `max |omega|` exceeds this value.
    pub blowup_threshold: f64,
}

impl SchemeConfig {
    pub fn new(grid: Grid2D, k: f64, re: f64, scheme: SchemeKind, forcing: ForcingKind) -> Self {
        Self {
            k,
            re,
            gamma: DEFAULT_GAMMA,
            grid,
            scheme,
            dealias: false,
            forcing,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn forcing_spec(&self) -> ForcingSpec {
        ForcingSpec { kind: self.forcing, re: self.re }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("time step k = {} must be positive", self.k)));
        }
        if !(self.re > 0.0 && self.re.is_finite()) {
            return Err(Error::InvalidConfig(format!("Re = {} must be positive", self.re)));
        }
        if self.scheme.uses_sav() && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidConfig("blowup threshold must be positive".into()));
        }
        self.forcing_spec().validate()
    }

    /// Time after `step` steps, computed without accumulation.
    pub fn time_at(&self, step: u64) -> f64 {
        step as f64 * self.k
    }

    /// Number of steps to reach `t_end`; `t_end / k` must be an integer
    /// within `1e-9`.
    pub fn steps_to(&self, t_end: f64) -> Result<u64> {
        let ratio = t_end / self.k;
        let n = ratio.round();
        if !(t_end >= self.k) || (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::NonIntegralHorizon { t_end, k: self.k });
        }
        Ok(n as u64)
    }
}

/// Two time levels of the prognostic field and of `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T: Real, F> {
    pub w_n: F,
    pub w_nm1: F,
    pub q_n: T,
    pub q_nm1: T,
    pub t: f64,
    pub step: u64,
}

impl<T: Real, F: Clone> SolverState<T, F> {
    /// Single-level start at `t = 0` with `q = 1`; the first step taken from
    /// it is the BDF1 initializer.
    pub fn initial(w0: F) -> Self {
        Self { w_nm1: w0.clone(), w_n: w0, q_n: T::one(), q_nm1: T::one(), t: 0.0, step: 0 }
    }

    pub fn has_two_levels(&self) -> bool {
        self.step > 0
    }

    fn advance(&self, w_new: F, q_new: T, cfg: &SchemeConfig) -> Self {
        let step = self.step + 1;
        Self {
            w_nm1: self.w_n.clone(),
            w_n: w_new,
            q_nm1: self.q_n,
            q_n: q_new,
            t: cfg.time_at(step),
            step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport<T> {
    pub q_new: T,
    pub q_denominator: T,
    /// Relative residual of the per-step discrete energy identity.
    pub energy_identity_residual: T,
    pub trilinear_b1: T,
    pub trilinear_b2: T,
    pub max_omega: Option<T>,
}

/// Common interface of the streamfunction-vorticity and primitive steppers.
/// Advanced state and the report of the step that produced it.
pub type StepResult<T, F> = Result<(SolverState<T, F>, StepReport<T>)>;

pub trait TimeStepper<T: Real> {
    type Field: Clone + EnergyField<T>;

    fn config(&self) -> &SchemeConfig;

    /// BDF1 initializer; `state` must hold a single level.
    fn step_first(
        &mut self,
        state: &SolverState<T, Self::Field>,
    ) -> StepResult<T, Self::Field>;

    /// One BDF2 step from two valid levels.
    fn step(
        &mut self,
        state: &SolverState<T, Self::Field>,
    ) -> StepResult<T, Self::Field>;

    /// Vorticity of a prognostic field.
    fn vorticity(&self, field: &Self::Field) -> SpectralField2D<T>;

    fn advance(
        &mut self,
        state: &SolverState<T, Self::Field>,
    ) -> StepResult<T, Self::Field> {
        if state.has_two_levels() {
            self.step(state)
        } else {
            self.step_first(state)
        }
    }
}

/// Per-mode multipliers shared by all steppers on one grid.
#[derive(Debug, Clone)]
struct Symbols<T> {
    /// `|xi|^2`, Nyquist included.
    lap: Vec<T>,
    /// `(3/(2k) + |xi|^2/Re)^{-1}`
    inv_bdf2: Vec<T>,
    /// `(1/k + |xi|^2/Re)^{-1}`
    inv_bdf1: Vec<T>,
}

impl<T: Real> Symbols<T> {
    fn new(cfg: &SchemeConfig) -> Self {
        let g = cfg.grid;
        let kx = g.wavenumbers_x();
        let ky = g.wavenumbers_y();
        let mut lap = Vec::with_capacity(g.len());
        for &ym in &ky {
            for &xj in &kx {
                lap.push(xj * xj + ym * ym);
            }
        }
        let inv = |sigma: f64| -> Vec<T> {
            lap.iter().map(|&l| T::lit(1.0 / (sigma + l / cfg.re))).collect()
        };
        let inv_bdf2 = inv(1.5 / cfg.k);
        let inv_bdf1 = inv(1.0 / cfg.k);
        Self { lap: lap.into_iter().map(T::lit).collect(), inv_bdf2, inv_bdf1 }
    }
}

fn apply_symbol<T: Real>(f: &SpectralField2D<T>, symbol: &[T]) -> SpectralField2D<T> {
    let mut out = f.clone();
    for (c, &s) in out.coeffs.iter_mut().zip(symbol) {
        *c = *c * s;
    }
    out
}

/// Exact solve of `(3/(2k) - (1/Re) Laplacian) w = rhs`.
pub fn helmholtz_solve<T: Real>(rhs: &SpectralField2D<T>, k: f64, re: f64) -> SpectralField2D<T> {
    shifted_solve(rhs, 1.5 / k, re)
}

/// Exact solve of `(sigma - (1/Re) Laplacian) w = rhs`, `sigma > 0`.
pub fn shifted_solve<T: Real>(rhs: &SpectralField2D<T>, sigma: f64, re: f64) -> SpectralField2D<T> {
    let s = T::lit(sigma);
    let inv_re = T::lit(1.0 / re);
    rhs.map_modes(|xi_x, xi_y, _, _| {
        Complex::new(T::one() / (s + (xi_x * xi_x + xi_y * xi_y) * inv_re), T::zero())
    })
}

/// Closed-form `q` update shared by BDF1 and BDF2: returns `(q, denominator)`.
fn q_update<T: Real>(
    sigma: T,
    gamma: T,
    q_history: T,
    b1: T,
    b2: T,
    step: u64,
) -> Result<(T, T)> {
    let den = sigma + gamma - b2;
    if !(den > T::zero()) {
        return Err(Error::DenominatorNonpositive { value: den.to_f64_lossy(), step });
    }
    Ok(((gamma + q_history + b1) / den, den))
}

enum VorticityForcing<T: Real> {
    Zero,
    Constant(SpectralField2D<T>),
    Manufactured(ManufacturedCase),
}

/// FSAV-BDF2 and IMEX-BDF2 in streamfunction-vorticity form.
pub struct SvStepper<T: Real> {
    cfg: SchemeConfig,
    transform: Transform<T>,
    symbols: Symbols<T>,
    forcing: VorticityForcing<T>,
}

impl<T: Real> SvStepper<T> {
    pub fn new(cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.scheme == SchemeKind::FsavBdf2Primitive {
            return Err(Error::InvalidConfig(
                "primitive scheme needs PrimitiveStepper".into(),
            ));
        }
        let forcing = match cfg.forcing {
            ForcingKind::None => VorticityForcing::Zero,
            ForcingKind::Kolmogorov { m } => VorticityForcing::Constant(
                model::kolmogorov_vorticity_forcing(cfg.grid, m, cfg.re)?,
            ),
            ForcingKind::Manufactured => {
                let case = model::manufactured_case();
                case.grid_matches(&cfg.grid)?;
                VorticityForcing::Manufactured(ManufacturedCase { re: cfg.re, ..case })
            }
        };
        Ok(Self {
            cfg,
            transform: Transform::new(cfg.grid),
            symbols: Symbols::new(&cfg),
            forcing,
        })
    }

    pub fn transform(&mut self) -> &mut Transform<T> {
        &mut self.transform
    }

    /// Vorticity source at time `t`.
    pub fn forcing_at(&mut self, t: f64) -> SpectralField2D<T> {
        match &self.forcing {
            VorticityForcing::Zero => SpectralField2D::zeros(self.cfg.grid),
            VorticityForcing::Constant(f) => f.clone(),
            VorticityForcing::Manufactured(case) => {
                let case = *case;
                let field = case.sample(self.cfg.grid, |c, x, y| c.source_omega(t, x, y));
                self.forward_f64(&field)
            }
        }
    }

    fn forward_f64(&mut self, field: &RealField2D<f64>) -> SpectralField2D<T> {
        let values = field.values.iter().map(|&v| T::lit(v)).collect();
        let f = RealField2D::from_values(field.grid, values).expect("grid sized");
        self.transform.forward(&f).expect("closed-form samples are finite")
    }

    /// Constraint source `S_p(t)`; zero unless the run is manufactured.
    fn constraint_source(&mut self, t: f64) -> Option<SpectralField2D<T>> {
        match &self.forcing {
            VorticityForcing::Manufactured(case) => {
                let case = *case;
                let field = case.sample(self.cfg.grid, |c, x, y| c.source_p(t, x, y));
                Some(self.forward_f64(&field))
            }
            _ => None,
        }
    }

    /// Streamfunction of a vorticity level at time `t`:
    /// `-Laplacian psi = omega - S_p(t)`.
    pub fn streamfunction(&mut self, omega: &SpectralField2D<T>, t: f64) -> Result<SpectralField2D<T>> {
        match self.constraint_source(t) {
            Some(sp) => omega.add_scaled(-T::one(), &sp).inv_neg_laplacian(),
            None => omega.inv_neg_laplacian(),
        }
    }

    /// Mean-free advective term of the given streamfunction/vorticity pair.
    fn nonlinear(&mut self, psi: &SpectralField2D<T>, w: &SpectralField2D<T>) -> Result<SpectralField2D<T>> {
        let mut nl = model::jacobian(psi, w, self.cfg.dealias, &mut self.transform)?;
        nl.coeffs[0] = Complex::new(T::zero(), T::zero());
        Ok(nl)
    }

    fn check_blowup(&mut self, w: &SpectralField2D<T>, t: f64, step: u64) -> Result<Option<T>> {
        let threshold = T::lit(self.cfg.blowup_threshold);
        if !w.is_finite() {
            return Err(Error::BlowUp { t, step });
        }
        // sum |c| bounds max |omega|; only transform when the bound trips
        if w.abs_sum() > threshold {
            let max = self.transform.inverse(w).max_abs();
            if !(max <= threshold) {
                return Err(Error::BlowUp { t, step });
            }
            return Ok(Some(max));
        }
        Ok(None)
    }

    /// Energy-identity residual of a completed step (see
    /// [`diagnostics::energy_identity`]); for IMEX the explicit advective
    /// work enters instead of the `q` terms.
    fn residual(
        &self,
        prev: &SolverState<T, SpectralField2D<T>>,
        next: &SolverState<T, SpectralField2D<T>>,
        forcing: &SpectralField2D<T>,
        nl: &SpectralField2D<T>,
        bdf1: bool,
    ) -> T {
        let forcing_work = forcing.inner_unchecked(&next.w_n);
        let advective_work = if self.cfg.scheme.uses_sav() {
            None
        } else {
            Some(nl.inner_unchecked(&next.w_n))
        };
        diagnostics::energy_residual(prev, next, &self.cfg, forcing_work, advective_work, bdf1)
    }
}

impl<T: Real> TimeStepper<T> for SvStepper<T> {
    type Field = SpectralField2D<T>;

    fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    fn vorticity(&self, field: &SpectralField2D<T>) -> SpectralField2D<T> {
        field.clone()
    }

    fn step_first(
        &mut self,
        state: &SolverState<T, SpectralField2D<T>>,
    ) -> StepResult<T, SpectralField2D<T>> {
        let k = T::lit(self.cfg.k);
        let t_new = self.cfg.time_at(state.step + 1);
        let psi = self.streamfunction(&state.w_n, state.t)?;
        let nl = self.nonlinear(&psi, &state.w_n)?;
        let f = self.forcing_at(t_new);
        let rhs = f.add_scaled(T::one() / k, &state.w_n);
        let w1 = apply_symbol(&rhs, &self.symbols.inv_bdf1);
        let w2 = apply_symbol(&nl, &self.symbols.inv_bdf1).scale(-T::one());
        let b1 = nl.inner_unchecked(&w1);
        let b2 = nl.inner_unchecked(&w2);
        let (q, den) = if self.cfg.scheme.uses_sav() {
            let gamma = T::lit(self.cfg.gamma);
            q_update(T::one() / k, gamma, state.q_n / k, b1, b2, state.step)?
        } else {
            (T::one(), T::one() / k)
        };
        let w_new = w1.add_scaled(q, &w2);
        let max_omega = self.check_blowup(&w_new, t_new, state.step + 1)?;
        let next = state.advance(w_new, q, &self.cfg);
        let residual = self.residual(state, &next, &f, &nl, true);
        Ok((
            next,
            StepReport {
                q_new: q,
                q_denominator: den,
                energy_identity_residual: residual,
                trilinear_b1: b1,
                trilinear_b2: b2,
                max_omega,
            },
        ))
    }

    fn step(
        &mut self,
        state: &SolverState<T, SpectralField2D<T>>,
    ) -> StepResult<T, SpectralField2D<T>> {
        let k = T::lit(self.cfg.k);
        let two = T::lit(2.0);
        let t_new = self.cfg.time_at(state.step + 1);
        let w_bar = SpectralField2D::lincomb(two, &state.w_n, -T::one(), &state.w_nm1);
        let psi_bar = if matches!(self.forcing, VorticityForcing::Manufactured(_)) {
            let t_nm1 = self.cfg.time_at(state.step - 1);
            let psi_n = self.streamfunction(&state.w_n, state.t)?;
            let psi_nm1 = self.streamfunction(&state.w_nm1, t_nm1)?;
            SpectralField2D::lincomb(two, &psi_n, -T::one(), &psi_nm1)
        } else {
            w_bar.inv_neg_laplacian()?
        };
        let nl = self.nonlinear(&psi_bar, &w_bar)?;
        let f = self.forcing_at(t_new);
        let history = SpectralField2D::lincomb(T::lit(4.0), &state.w_n, -T::one(), &state.w_nm1);
        let rhs = f.add_scaled(T::one() / (two * k), &history);
        let w1 = apply_symbol(&rhs, &self.symbols.inv_bdf2);
        let w2 = apply_symbol(&nl, &self.symbols.inv_bdf2).scale(-T::one());
        let b1 = nl.inner_unchecked(&w1);
        let b2 = nl.inner_unchecked(&w2);
        let (q, den) = if self.cfg.scheme.uses_sav() {
            let q_hist = (T::lit(4.0) * state.q_n - state.q_nm1) / (two * k);
            q_update(T::lit(1.5) / k, T::lit(self.cfg.gamma), q_hist, b1, b2, state.step)?
        } else {
            (T::one(), T::lit(1.5) / k)
        };
        let w_new = w1.add_scaled(q, &w2);
        let max_omega = self.check_blowup(&w_new, t_new, state.step + 1)?;
        let next = state.advance(w_new, q, &self.cfg);
        let residual = self.residual(state, &next, &f, &nl, false);
        Ok((
            next,
            StepReport {
                q_new: q,
                q_denominator: den,
                energy_identity_residual: residual,
                trilinear_b1: b1,
                trilinear_b2: b2,
                max_omega,
            },
        ))
    }
}

/// FSAV-BDF2 for the velocity form on a periodic box; the pressure is
/// eliminated by Leray projection, so each solve is a Brinkman problem
/// diagonal in Fourier space.
pub struct PrimitiveStepper<T: Real> {
    cfg: SchemeConfig,
    transform: Transform<T>,
    symbols: Symbols<T>,
    forcing: Velocity<T>,
}

impl<T: Real> PrimitiveStepper<T> {
    pub fn new(cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.scheme != SchemeKind::FsavBdf2Primitive {
            return Err(Error::InvalidConfig("PrimitiveStepper needs fsav_bdf2_primitive".into()));
        }
        let forcing = match cfg.forcing {
            ForcingKind::None => Velocity::zeros(cfg.grid),
            ForcingKind::Kolmogorov { m } => model::kolmogorov_velocity_forcing(cfg.grid, m, cfg.re)?,
            ForcingKind::Manufactured => {
                return Err(Error::InvalidConfig(
                    "manufactured forcing is defined for the streamfunction form only".into(),
                ))
            }
        };
        Ok(Self {
            cfg,
            transform: Transform::new(cfg.grid),
            symbols: Symbols::new(&cfg),
            forcing,
        })
    }

    pub fn transform(&mut self) -> &mut Transform<T> {
        &mut self.transform
    }

    fn brinkman(&self, f: &Velocity<T>, symbol: &[T]) -> Velocity<T> {
        let p = model::leray_project(f);
        Velocity { u1: apply_symbol(&p.u1, symbol), u2: apply_symbol(&p.u2, symbol) }
    }

    fn advective(&mut self, u: &Velocity<T>) -> Result<Velocity<T>> {
        let mut g = model::advection_primitive(u, u, self.cfg.dealias, &mut self.transform)?;
        g.u1.coeffs[0] = Complex::new(T::zero(), T::zero());
        g.u2.coeffs[0] = Complex::new(T::zero(), T::zero());
        Ok(g)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &mut self,
        state: &SolverState<T, Velocity<T>>,
        u1: Velocity<T>,
        u2: Velocity<T>,
        g: &Velocity<T>,
        sigma: T,
        q_hist: T,
        bdf1: bool,
    ) -> StepResult<T, Velocity<T>> {
        let t_new = self.cfg.time_at(state.step + 1);
        let b1 = g.inner_unchecked(&u1);
        let b2 = g.inner_unchecked(&u2);
        let (q, den) = q_update(sigma, T::lit(self.cfg.gamma), q_hist, b1, b2, state.step)?;
        let u_new = Velocity::lincomb(T::one(), &u1, q, &u2);
        if !u_new.is_finite() {
            return Err(Error::BlowUp { t: t_new, step: state.step + 1 });
        }
        check_divergence(&u_new)?;
        let w = u_new.vorticity();
        let threshold = T::lit(self.cfg.blowup_threshold);
        let mut max_omega = None;
        if w.abs_sum() > threshold {
            let max = self.transform.inverse(&w).max_abs();
            if !(max <= threshold) {
                return Err(Error::BlowUp { t: t_new, step: state.step + 1 });
            }
            max_omega = Some(max);
        }
        let next = state.advance(u_new, q, &self.cfg);
        let forcing_work = self.forcing.inner_unchecked(&next.w_n);
        let residual =
            diagnostics::energy_residual(state, &next, &self.cfg, forcing_work, None, bdf1);
        Ok((
            next,
            StepReport {
                q_new: q,
                q_denominator: den,
                energy_identity_residual: residual,
                trilinear_b1: b1,
                trilinear_b2: b2,
                max_omega,
            },
        ))
    }
}

fn check_divergence<T: Real>(u: &Velocity<T>) -> Result<()> {
    let div = u.divergence().max_abs_coeff();
    let g = u.grid();
    let kmax = std::f64::consts::PI * (g.nx as f64 / g.lx).max(g.ny as f64 / g.ly);
    let scale = T::one() + T::lit(kmax) * u.u1.max_abs_coeff().max(u.u2.max_abs_coeff());
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(100.0));
    if div > tol * scale {
        return Err(Error::DivergenceViolation { value: div.to_f64_lossy() });
    }
    Ok(())
}

impl<T: Real> TimeStepper<T> for PrimitiveStepper<T> {
    type Field = Velocity<T>;

    fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    fn vorticity(&self, field: &Velocity<T>) -> SpectralField2D<T> {
        field.vorticity()
    }

    fn step_first(
        &mut self,
        state: &SolverState<T, Velocity<T>>,
    ) -> StepResult<T, Velocity<T>> {
        let k = T::lit(self.cfg.k);
        let g = self.advective(&state.w_n)?;
        let rhs = Velocity::lincomb(T::one(), &self.forcing, T::one() / k, &state.w_n);
        let u1 = self.brinkman(&rhs, &self.symbols.inv_bdf1);
        let u2 = self.brinkman(&g, &self.symbols.inv_bdf1).scale(-T::one());
        let q_hist = state.q_n / k;
        self.finish(state, u1, u2, &g, T::one() / k, q_hist, true)
    }

    fn step(
        &mut self,
        state: &SolverState<T, Velocity<T>>,
    ) -> StepResult<T, Velocity<T>> {
        let k = T::lit(self.cfg.k);
        let two = T::lit(2.0);
        let u_bar = Velocity::lincomb(two, &state.w_n, -T::one(), &state.w_nm1);
        let g = self.advective(&u_bar)?;
        let history = Velocity::lincomb(T::lit(4.0), &state.w_n, -T::one(), &state.w_nm1);
        let rhs = Velocity::lincomb(T::one(), &self.forcing, T::one() / (two * k), &history);
        let u1 = self.brinkman(&rhs, &self.symbols.inv_bdf2);
        let u2 = self.brinkman(&g, &self.symbols.inv_bdf2).scale(-T::one());
        let q_hist = (T::lit(4.0) * state.q_n - state.q_nm1) / (two * k);
        self.finish(state, u1, u2, &g, T::lit(1.5) / k, q_hist, false)
    }
}

/// Laplacian symbol of the stepper grid, exposed for diagnostics.
pub fn laplacian_symbol<T: Real>(cfg: &SchemeConfig) -> Vec<T> {
    Symbols::<T>::new(cfg).lap
}

/// What the run loop should do after an observer call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Summary of a [`run`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps_taken: u64,
    pub stopped_early: bool,
}

/// Advances `state` to `t_end`.
///
/// A single-level state is started with the BDF1 initializer; a two-level
/// state (e.g. from a checkpoint) continues with BDF2. `observer` sees the
/// starting state and then every `sample_every`-th step; it may mutate the
/// state (checkpoint canonicalization) or stop the run. Blow-up errors carry
/// the time and step at which they were detected.
pub fn run<T, S, O>(
    stepper: &mut S,
    state: &mut SolverState<T, S::Field>,
    t_end: f64,
    sample_every: u64,
    mut observer: O,
) -> Result<RunSummary>
where
    T: Real,
    S: TimeStepper<T>,
    O: FnMut(&mut SolverState<T, S::Field>, Option<&StepReport<T>>) -> Result<Control>,
{
    let cfg = *stepper.config();
    let n_total = cfg.steps_to(t_end)?;
    let every = sample_every.max(1);
    if state.step == 0 && observer(state, None)? == Control::Stop {
        return Ok(RunSummary { steps_taken: 0, stopped_early: true });
    }
    let mut taken = 0;
    while state.step < n_total {
        let (next, report) = stepper.advance(state)?;
        *state = next;
        taken += 1;
        if (state.step % every == 0 || state.step == n_total)
            && observer(state, Some(&report))? == Control::Stop
        {
            return Ok(RunSummary { steps_taken: taken, stopped_early: state.step < n_total });
        }
    }
    Ok(RunSummary { steps_taken: taken, stopped_early: false })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn kolmogorov_cfg(n: usize, scheme: SchemeKind) -> SchemeConfig {
        SchemeConfig::new(
            Grid2D::periodic_2pi(n).unwrap(),
            0.01,
            100.0,
            scheme,
            ForcingKind::Kolmogorov { m: 2 },
        )
    }

    fn basic_flow(grid: Grid2D) -> SpectralField2D<f64> {
        let mut tr = Transform::<f64>::new(grid);
        tr.forward(&RealField2D::from_fn(grid, |_, y| 4.0 * (2.0 * y).sin())).unwrap()
    }

    #[test]
    fn helmholtz_examples() {
        let grid = Grid2D::unit_square(16).unwrap();
        let mut tr = Transform::<f64>::new(grid);
        let mult = 15.0 + 4.0 * PI * PI / 10.0;
        let rhs = tr
            .forward(&RealField2D::from_fn(grid, |x, _| mult * (2.0 * PI * x).sin()))
            .unwrap();
        let w = tr.inverse(&helmholtz_solve(&rhs, 0.1, 10.0));
        let exact = RealField2D::<f64>::from_fn(grid, |x, _| (2.0 * PI * x).sin());
        let err = w.values.iter().zip(&exact.values).fold(0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-13);
        assert!((mult - 18.947841760435743).abs() < 1e-12);

        assert_eq!(helmholtz_solve(&SpectralField2D::<f64>::zeros(grid), 0.1, 10.0).max_abs_coeff(), 0.0);
        let c = tr.forward(&RealField2D::from_fn(grid, |_, _| 3.0)).unwrap();
        assert!((helmholtz_solve(&c, 0.1, 10.0).mean() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn q_update_rejects_nonpositive_denominator() {
        assert!(matches!(
            q_update(1.0, 1.0, 0.0, 0.0, 3.0, 7),
            Err(Error::DenominatorNonpositive { step: 7, .. })
        ));
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = Grid2D::unit_square(16).unwrap();
        let cfg = SchemeConfig::new(grid, 0.1, 10.0, SchemeKind::FsavBdf2Sv, ForcingKind::None);
        let mut s = SvStepper::<f64>::new(cfg).unwrap();
        let st = SolverState::initial(SpectralField2D::zeros(grid));
        let (st1, r1) = s.step_first(&st).unwrap();
        assert_eq!(st1.q_n, 1.0);
        assert_eq!(st1.w_n.max_abs_coeff(), 0.0);
        assert_eq!(r1.energy_identity_residual, 0.0);
        let (st2, r2) = s.step(&st1).unwrap();
        assert_eq!(st2.q_n, 1.0);
        assert_eq!(st2.w_n.max_abs_coeff(), 0.0);
        assert_eq!(r2.q_denominator, 15.0 + 1000.0);
    }

    #[test]
    fn basic_flow_is_fixed_point_of_all_sv_steppers() {
        for scheme in [SchemeKind::FsavBdf2Sv, SchemeKind::ImexBdf2Sv] {
            let cfg = kolmogorov_cfg(32, scheme);
            let w0 = basic_flow(cfg.grid);
            let mut s = SvStepper::new(cfg).unwrap();
            let mut st = SolverState::initial(w0.clone());
            for _ in 0..5 {
                let (next, report) = s.advance(&st).unwrap();
                st = next;
                assert!((report.q_new - 1.0).abs() < 1e-12);
            }
            let drift = st.w_n.add_scaled(-1.0, &w0).max_abs_coeff() / w0.max_abs_coeff();
            assert!(drift < 1e-10, "{scheme:?} drift {drift}");
        }
    }

    #[test]
    fn basic_flow_is_fixed_point_of_primitive_stepper() {
        let cfg = kolmogorov_cfg(32, SchemeKind::FsavBdf2Primitive);
        let psi = basic_flow(cfg.grid).scale(0.25);
        let u0 = model::velocity_from_streamfunction(&psi);
        let mut s = PrimitiveStepper::new(cfg).unwrap();
        let mut st = SolverState::initial(u0.clone());
        for _ in 0..5 {
            st = s.advance(&st).unwrap().0;
        }
        assert!((st.q_n - 1.0).abs() < 1e-12);
        let drift = st.w_n.u1.add_scaled(-1.0, &u0.u1).max_abs_coeff();
        assert!(drift < 1e-10 * u0.u1.max_abs_coeff());
    }

    #[test]
    fn primitive_zero_state() {
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let cfg = SchemeConfig::new(grid, 0.05, 10.0, SchemeKind::FsavBdf2Primitive, ForcingKind::None);
        let mut s = PrimitiveStepper::<f64>::new(cfg).unwrap();
        let mut st = SolverState::initial(Velocity::zeros(grid));
        for _ in 0..3 {
            st = s.advance(&st).unwrap().0;
        }
        assert_eq!(st.q_n, 1.0);
        assert_eq!(st.w_n, Velocity::zeros(grid));
    }

    #[test]
    fn run_counts_steps() {
        let grid = Grid2D::unit_square(16).unwrap();
        let cfg = SchemeConfig::new(grid, 0.1, 10.0, SchemeKind::FsavBdf2Sv, ForcingKind::None);
        let mut s = SvStepper::<f64>::new(cfg).unwrap();
        let mut st = SolverState::initial(SpectralField2D::zeros(grid));
        let mut seen = Vec::new();
        let summary = run(&mut s, &mut st, 1.0, 1, |st, _| {
            seen.push(st.step);
            Ok(Control::Continue)
        })
        .unwrap();
        assert_eq!(summary.steps_taken, 10);
        assert_eq!(seen, (0..=10).collect::<Vec<_>>());
        assert_eq!(st.step, 10);
        assert!((st.t - 1.0).abs() < 1e-15);

        let mut st = SolverState::initial(SpectralField2D::zeros(grid));
        assert!(matches!(
            run(&mut s, &mut st, 1.05, 1, |_, _| Ok(Control::Continue)),
            Err(Error::NonIntegralHorizon { .. })
        ));
    }

    #[test]
    fn blowup_is_reported_with_time() {
        let grid = Grid2D::periodic_2pi(16).unwrap();
        let mut cfg = SchemeConfig::new(grid, 0.01, 100.0, SchemeKind::FsavBdf2Sv, ForcingKind::Kolmogorov { m: 2 });
        cfg.blowup_threshold = 1.0;
        let mut s = SvStepper::<f64>::new(cfg).unwrap();
        let mut st = SolverState::initial(basic_flow(grid));
        let err = run(&mut s, &mut st, 1.0, 1, |_, _| Ok(Control::Continue)).unwrap_err();
        assert_eq!(err, Error::BlowUp { t: 0.01, step: 1 });
    }

    #[test]
    fn config_validation() {
        let grid = Grid2D::unit_square(16).unwrap();
        let mut cfg = SchemeConfig::new(grid, 0.0, 10.0, SchemeKind::FsavBdf2Sv, ForcingKind::None);
        assert!(cfg.validate().is_err());
        cfg.k = 0.1;
        cfg.gamma = 0.0;
        assert!(cfg.validate().is_err());
        cfg.scheme = SchemeKind::ImexBdf2Sv;
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.steps_to(1.0).unwrap(), 10);
        assert!(cfg.steps_to(0.05).is_err());
        for kind in [SchemeKind::FsavBdf2Sv, SchemeKind::FsavBdf2Primitive, SchemeKind::ImexBdf2Sv] {
            assert_eq!(SchemeKind::from_tag(kind.tag()), Some(kind));
            assert_eq!(SchemeKind::parse(kind.name()), Some(kind));
        }
    }
}
