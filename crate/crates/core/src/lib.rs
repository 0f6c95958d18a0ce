//! Long-time stable SAV-BDF2 time stepping for the forced 2D incompressible
//! Navier-Stokes equations on doubly periodic domains.
//!
//! The crate is organized bottom-up:
//!
//! - [`spectral`]: collocation grid, Fourier transforms, spectral operators.
//! - [`model`]: Jacobian nonlinearity, forcings, manufactured solutions,
//!   primitive-form velocity operators.
//! - [`stepper`]: FSAV-BDF2 (streamfunction-vorticity and primitive forms),
//!   the FSAV-BDF1 initializer, the IMEX-BDF2 baseline and the run loop.
//! - [`abstract_fsav`]: the same scheme over an abstract forced dissipative
//!   system, with a three-mode toy instance.
//! - [`diagnostics`]: norms, G-norm energy bookkeeping, mode tracking, burst
//!   detection and periodograms.
//! - [`io`]: run configuration, CSV time series and binary checkpoints.
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! aliases at the crate root fix it to `f64`.

// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstract_fsav;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod model;
pub mod spectral;
pub mod stepper;

use std::fmt::{Debug, Display};

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex;

/// Floating point scalar usable throughout the solver.
pub trait Real:
    rustfft::FftNum + num_traits::Float + num_traits::FloatConst + Display + Debug + Default
{
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Grid = spectral::Grid2D;
pub type Transform = spectral::Transform<f64>;
pub type RealField = spectral::RealField2D<f64>;
pub type SpectralField = spectral::SpectralField2D<f64>;
pub type Velocity = model::Velocity<f64>;
pub type SchemeConfig = stepper::SchemeConfig;
pub type VorticityState = stepper::SolverState<f64, SpectralField>;
pub type VelocityState = stepper::SolverState<f64, Velocity>;
pub type StepReport = stepper::StepReport<f64>;
