//! Periodic collocation grid, Fourier transforms and spectral operators.

mod field;
mod grid;
mod transform;

pub use field::{Axis, RealField2D, SpectralField2D};
pub use grid::Grid2D;
pub use transform::Transform;

use crate::Real;

/// L2 norm, H1 seminorm and collocation max norm of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub l2: T,
    pub h1_semi: T,
    pub linf: T,
}

pub fn norms<T: Real>(field: &SpectralField2D<T>, transform: &mut Transform<T>) -> Norms<T> {
    Norms {
        l2: field.l2_norm(),
        h1_semi: field.grad_norm_sq().sqrt(),
        linf: transform.inverse(field).max_abs(),
    }
}
