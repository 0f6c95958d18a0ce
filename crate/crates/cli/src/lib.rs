//! Experiment drivers behind the `fsav` binary: convergence sweeps,
//! long simulations with checkpointing, bursting post-processing and the
//! invariant verification suites.

pub mod converge;
pub mod simulate;
pub mod verify;

use fsav::Error;

pub use converge::{cmd_converge, ConvergeRow};
pub use simulate::{cmd_bursting, cmd_simulate, BurstingSummary, RunOptions, SimulateOutcome};
pub use verify::{cmd_verify, SuiteResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Process exit status for an error that ended a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::DenominatorNonpositive { .. }
        | Error::DivergenceViolation { .. }
        | Error::InvariantViolation(_) => EXIT_INVARIANT,
        _ => EXIT_CONFIG,
    }
}

/// Tolerance on the per-step relative energy-identity residual.
pub const ENERGY_RESIDUAL_TOL: f64 = 1e-10;
