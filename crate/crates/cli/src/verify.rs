//! Invariant suites run by `fsav verify`; each returns its worst value next
//! to the tolerance it is judged against.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fsav::abstract_fsav::{self, SvSystem, ToyTriad};
use fsav::io::InitialCondition;
use fsav::model::ForcingKind;
use fsav::spectral::{Grid2D, SpectralField2D, Transform};
use fsav::stepper::{PrimitiveStepper, SchemeConfig, SchemeKind, SolverState, StepReport, SvStepper, TimeStepper};
use fsav::{Error, Result};

use crate::ENERGY_RESIDUAL_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }

    fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, passed: value >= tolerance }
    }
}

impl std::fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        write!(f, "{verdict} {}: {:.3e} (tolerance {:.1e})", self.name, self.value, self.tolerance)
    }
}

/// Worst per-step energy residual and worst `denominator - (sigma + gamma)`
/// margin (must be non-negative) over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyAudit {
    pub steps: u64,
    pub max_residual: f64,
    pub min_denominator_margin: f64,
}

impl EnergyAudit {
    fn new() -> Self {
        Self { steps: 0, max_residual: 0.0, min_denominator_margin: f64::INFINITY }
    }

    fn observe(&mut self, report: &StepReport<f64>, k: f64, gamma: f64, first: bool) {
        let sigma = if first { 1.0 / k } else { 1.5 / k };
        self.steps += 1;
        self.max_residual = self.max_residual.max(report.energy_identity_residual);
        self.min_denominator_margin = self.min_denominator_margin.min(report.q_denominator - (sigma + gamma));
    }

    pub fn passed(&self) -> bool {
        self.max_residual < ENERGY_RESIDUAL_TOL && self.min_denominator_margin >= 0.0
    }
}

fn audit_stepper<S: TimeStepper<f64>>(
    stepper: &mut S,
    mut state: SolverState<f64, S::Field>,
    steps: u64,
) -> Result<EnergyAudit> {
    let cfg = *stepper.config();
    let mut audit = EnergyAudit::new();
    for _ in 0..steps {
        let first = !state.has_two_levels();
        let (next, report) = stepper.advance(&state)?;
        audit.observe(&report, cfg.k, cfg.gamma, first);
        state = next;
    }
    Ok(audit)
}

pub fn audit_manufactured(steps: u64) -> Result<EnergyAudit> {
    let grid = Grid2D::unit_square(32)?;
    let cfg = SchemeConfig::new(grid, 0.0125, 10.0, SchemeKind::FsavBdf2Sv, ForcingKind::Manufactured);
    let mut tr = Transform::new(grid);
    let w0 = InitialCondition::Manufactured.vorticity(grid, cfg.forcing, 0, &mut tr)?;
    audit_stepper(&mut SvStepper::new(cfg)?, SolverState::initial(w0), steps)
}

/// Random band-limited start under Kolmogorov forcing.
pub fn audit_kolmogorov(steps: u64, re: f64, seed: u64) -> Result<EnergyAudit> {
    let grid = Grid2D::periodic_2pi(32)?;
    let cfg = SchemeConfig::new(grid, 0.01, re, SchemeKind::FsavBdf2Sv, ForcingKind::Kolmogorov { m: 2 });
    let mut tr = Transform::new(grid);
    let ic = InitialCondition::Random { amplitude: 1.0, band: 8 };
    let w0 = ic.vorticity(grid, cfg.forcing, seed, &mut tr)?;
    audit_stepper(&mut SvStepper::new(cfg)?, SolverState::initial(w0), steps)
}

pub fn audit_primitive(steps: u64, seed: u64) -> Result<EnergyAudit> {
    let grid = Grid2D::periodic_2pi(32)?;
    let cfg = SchemeConfig::new(grid, 0.01, 100.0, SchemeKind::FsavBdf2Primitive, ForcingKind::Kolmogorov { m: 2 });
    let mut tr = Transform::new(grid);
    let ic = InitialCondition::Random { amplitude: 1.0, band: 8 };
    let u0 = ic.velocity(grid, cfg.forcing, seed, &mut tr)?;
    audit_stepper(&mut PrimitiveStepper::new(cfg)?, SolverState::initial(u0), steps)
}

pub fn audit_triad(steps: u64, k: f64) -> Result<EnergyAudit> {
    let mut sys = ToyTriad::canonical();
    let gamma = fsav::stepper::DEFAULT_GAMMA;
    let mut state = SolverState::initial([0.5f64, -0.25, 0.75]);
    let mut audit = EnergyAudit::new();
    for _ in 0..steps {
        let first = !state.has_two_levels();
        let (next, report) = abstract_fsav::abstract_advance(&state, &mut sys, k, gamma)?;
        audit.observe(&report, k, gamma, first);
        state = next;
    }
    Ok(audit)
}

/// Largest `|u| + |q|` over `steps` steps of the canonical triad.
pub fn triad_sup_norm(k: f64, steps: u64) -> Result<f64> {
    let mut sys = ToyTriad::canonical();
    let mut state = SolverState::initial([0.5f64, -0.25, 0.75]);
    let mut sup = 0f64;
    for _ in 0..steps {
        state = abstract_fsav::abstract_advance(&state, &mut sys, k, fsav::stepper::DEFAULT_GAMMA)?.0;
        let [a, b, c] = state.w_n;
        let norm = (a * a + b * b + c * c).sqrt() + state.q_n.abs();
        if !norm.is_finite() {
            return Err(Error::BlowUp { t: state.t, step: state.step });
        }
        sup = sup.max(norm);
    }
    Ok(sup)
}

/// Relative l-infinity drift and `|q - 1|` after `steps` steps from the
/// basic Kolmogorov flow (m = 2, Re = 100, k = 0.01).
pub fn steady_state_drift(scheme: SchemeKind, n: usize, steps: u64) -> Result<(f64, f64)> {
    let grid = Grid2D::periodic_2pi(n)?;
    let cfg = SchemeConfig::new(grid, 0.01, 100.0, scheme, ForcingKind::Kolmogorov { m: 2 });
    let mut tr = Transform::new(grid);
    let forcing = cfg.forcing;
    let drift = |w: &SpectralField2D<f64>, w0: &SpectralField2D<f64>, tr: &mut Transform<f64>| {
        let d = tr.inverse(&w.add_scaled(-1.0, w0)).max_abs();
        d / tr.inverse(w0).max_abs()
    };
    if scheme == SchemeKind::FsavBdf2Primitive {
        let u0 = InitialCondition::Basic.velocity(grid, forcing, 0, &mut tr)?;
        let w0 = u0.vorticity();
        let mut stepper = PrimitiveStepper::new(cfg)?;
        let mut st = SolverState::initial(u0);
        for _ in 0..steps {
            st = stepper.advance(&st)?.0;
        }
        Ok((drift(&st.w_n.vorticity(), &w0, &mut tr), (st.q_n - 1.0).abs()))
    } else {
        let w0 = InitialCondition::Basic.vorticity(grid, forcing, 0, &mut tr)?;
        let mut stepper = SvStepper::new(cfg)?;
        let mut st = SolverState::initial(w0.clone());
        for _ in 0..steps {
            st = stepper.advance(&st)?.0;
        }
        Ok((drift(&st.w_n, &w0, &mut tr), (st.q_n - 1.0).abs()))
    }
}

/// Per-step relative difference between the abstract scheme on the
/// streamfunction system and the specialized stepper.
pub fn wrapper_discrepancy(steps: u64) -> Result<f64> {
    let grid = Grid2D::periodic_2pi(32)?;
    let cfg = SchemeConfig::new(grid, 0.01, 100.0, SchemeKind::FsavBdf2Sv, ForcingKind::Kolmogorov { m: 2 });
    let mut tr = Transform::new(grid);
    let w0 = InitialCondition::Random { amplitude: 1.0, band: 8 }.vorticity(grid, cfg.forcing, 11, &mut tr)?;
    let mut sys = SvSystem::new(&cfg)?;
    let mut stepper = SvStepper::new(cfg)?;
    let mut a = SolverState::initial(w0.clone());
    let mut b = SolverState::initial(w0);
    let mut worst = 0f64;
    for _ in 0..steps {
        a = abstract_fsav::abstract_advance(&a, &mut sys, cfg.k, cfg.gamma)?.0;
        b = stepper.advance(&b)?.0;
        let diff = a.w_n.add_scaled(-1.0, &b.w_n).max_abs_coeff() / b.w_n.max_abs_coeff();
        worst = worst.max(diff).max((a.q_n - b.q_n).abs());
    }
    Ok(worst)
}

/// Structural checks: triad, NSE wrapper, and the non-symmetric negative
/// control (whose violation must be large).
pub fn structure_checks(trials: usize) -> Result<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let triad = abstract_fsav::verify_system::<f64, _, _>(&mut ToyTriad::canonical(), trials, &mut rng)?;
    let grid = Grid2D::periodic_2pi(32)?;
    let cfg = SchemeConfig::new(grid, 0.01, 100.0, SchemeKind::FsavBdf2Sv, ForcingKind::Kolmogorov { m: 2 });
    let mut sys = SvSystem::<f64>::new(&cfg)?;
    let nse = abstract_fsav::verify_system(&mut sys, trials, &mut rng)?;
    let skewed = [[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut control = ToyTriad::with_matrix(skewed, [1.0, 1.0, -2.0], [0.0; 3]);
    let negative = abstract_fsav::verify_system::<f64, _, _>(&mut control, trials, &mut rng)?;
    Ok((triad.max_violation(), nse.max_violation(), negative.max_violation()))
}

/// Vorticity at `t_end` of both formulations from the same smooth start,
/// for each time step; returns the relative l-infinity discrepancies.
pub fn cross_formulation(n: usize, ks: &[f64], t_end: f64) -> Result<Vec<f64>> {
    let grid = Grid2D::periodic_2pi(n)?;
    let mut tr = Transform::new(grid);
    let forcing = ForcingKind::Kolmogorov { m: 2 };
    let ic = InitialCondition::Perturbed { amplitude: 0.5, mode: (1, 1) };
    let w0 = ic.vorticity(grid, forcing, 0, &mut tr)?;
    let u0 = ic.velocity(grid, forcing, 0, &mut tr)?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut sv_cfg = SchemeConfig::new(grid, k, 20.0, SchemeKind::FsavBdf2Sv, forcing);
        sv_cfg.dealias = true;
        let prim_cfg = SchemeConfig { scheme: SchemeKind::FsavBdf2Primitive, ..sv_cfg };
        let steps = sv_cfg.steps_to(t_end)?;
        let mut sv = SvStepper::new(sv_cfg)?;
        let mut prim = PrimitiveStepper::new(prim_cfg)?;
        let mut a = SolverState::initial(w0.clone());
        let mut b = SolverState::initial(u0.clone());
        for _ in 0..steps {
            a = sv.advance(&a)?.0;
            b = prim.advance(&b)?.0;
        }
        let wa = tr.inverse(&a.w_n);
        let wb = tr.inverse(&b.w_n.vorticity());
        let diff = wa.values.iter().zip(&wb.values).fold(0f64, |m, (x, y)| m.max((x - y).abs()));
        out.push(diff / wa.max_abs());
    }
    Ok(out)
}

pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect()
}

/// All suites; the process exits 0 iff every entry passes.
pub fn cmd_verify() -> Result<Vec<SuiteResult>> {
    let mut out = Vec::new();
    for (name, audit) in [
        ("energy identity, manufactured", audit_manufactured(200)?),
        ("energy identity, kolmogorov", audit_kolmogorov(200, 10.0, 1)?),
        ("energy identity, primitive", audit_primitive(200, 2)?),
        ("energy identity, toy triad", audit_triad(200, 0.1)?),
    ] {
        out.push(SuiteResult::at_most(name, audit.max_residual, ENERGY_RESIDUAL_TOL));
        out.push(SuiteResult::at_least(
            &format!("{name}: denominator margin"),
            audit.min_denominator_margin,
            0.0,
        ));
    }
    for scheme in [SchemeKind::FsavBdf2Sv, SchemeKind::ImexBdf2Sv, SchemeKind::FsavBdf2Primitive] {
        let (drift, q) = steady_state_drift(scheme, 32, 1000)?;
        out.push(SuiteResult::at_most(&format!("steady state drift, {}", scheme.name()), drift, 1e-10));
        out.push(SuiteResult::at_most(&format!("steady state |q-1|, {}", scheme.name()), q, 1e-10));
    }
    let (triad, nse, negative) = structure_checks(20)?;
    out.push(SuiteResult::at_most("structure, toy triad", triad, 1e-14));
    out.push(SuiteResult::at_most("structure, streamfunction system", nse, 1e-10));
    out.push(SuiteResult::at_least("structure, non-symmetric control flagged", negative, 1e-3));
    out.push(SuiteResult::at_most("abstract vs specialized stepper", wrapper_discrepancy(20)?, 1e-12));
    for k in [0.01, 1.0, 10.0, 100.0] {
        let sup = triad_sup_norm(k, 100_000)?;
        out.push(SuiteResult::at_most(&format!("toy triad bounded, k = {k}"), sup, 1e3));
    }
    let disc = cross_formulation(32, &[0.004, 0.002, 0.001, 0.0005], 1.0)?;
    let min_order = observed_orders(&disc, 2.0).into_iter().fold(f64::INFINITY, f64::min);
    out.push(SuiteResult::at_least("primitive vs streamfunction order", min_order, 1.9));
    Ok(out)
}
