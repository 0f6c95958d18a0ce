use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fsav::diagnostics::{self, EnergyField, TimeSeriesRecord};
use fsav::io::{self, Checkpoint, RunConfig, TimeSeriesWriter, TrackedField};
use fsav::model::Velocity;
use fsav::spectral::{SpectralField2D, Transform};
use fsav::stepper::{self, Control, PrimitiveStepper, SchemeKind, SolverState, StepReport, SvStepper, TimeStepper};
use fsav::{Error, Result};

use crate::ENERGY_RESIDUAL_TOL;

/// Command-line overrides shared by `simulate` and `bursting`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Wall-clock budget. Once spent, the run stops at the next scheduled
    /// checkpoint, or right away when `checkpoint_every = 0`.
    pub max_wall_seconds: Option<f64>,
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulateOutcome {
    Completed { steps: u64 },
    BlowUp { t: f64, step: u64 },
    /// Wall-clock budget exhausted; the run can continue from `checkpoint`.
    TimedOut { step: u64, checkpoint: PathBuf },
}

/// Prognostic field types the driver knows how to checkpoint.
trait Prognostic: Clone + EnergyField<f64> + Sized {
    fn vorticity(&self) -> SpectralField2D<f64>;
    fn canonicalize(
        state: &mut SolverState<f64, Self>,
        scheme: SchemeKind,
        tr: &mut Transform<f64>,
    ) -> Result<Checkpoint>;
}

impl Prognostic for SpectralField2D<f64> {
    fn vorticity(&self) -> SpectralField2D<f64> {
        self.clone()
    }

    fn canonicalize(
        state: &mut SolverState<f64, Self>,
        scheme: SchemeKind,
        tr: &mut Transform<f64>,
    ) -> Result<Checkpoint> {
        io::canonicalize_vorticity(state, scheme, tr)
    }
}

impl Prognostic for Velocity<f64> {
    fn vorticity(&self) -> SpectralField2D<f64> {
        Velocity::vorticity(self)
    }

    fn canonicalize(
        state: &mut SolverState<f64, Self>,
        _scheme: SchemeKind,
        tr: &mut Transform<f64>,
    ) -> Result<Checkpoint> {
        io::canonicalize_velocity(state, tr)
    }
}

fn record<F: Prognostic>(
    state: &SolverState<f64, F>,
    report: Option<&StepReport<f64>>,
    cfg: &RunConfig,
    beta: f64,
    tr: &mut Transform<f64>,
) -> Result<TimeSeriesRecord> {
    let w = state.w_n.vorticity();
    let tracked = match cfg.tracked_field {
        TrackedField::Omega => diagnostics::track_mode(&w, cfg.tracked_mode.0, cfg.tracked_mode.1)?,
        TrackedField::Psi => diagnostics::track_mode(
            &w.inv_neg_laplacian_unchecked(),
            cfg.tracked_mode.0,
            cfg.tracked_mode.1,
        )?,
    };
    Ok(TimeSeriesRecord {
        t: state.t,
        l2_omega: w.l2_norm(),
        h1_omega: w.grad_norm_sq().sqrt(),
        max_omega: tr.inverse(&w).max_abs(),
        q: state.q_n,
        e_gnorm: diagnostics::discrete_energy(state, &cfg.scheme, beta),
        energy_residual: report.map_or(0.0, |r| r.energy_identity_residual),
        mode_re: tracked.re,
        mode_im: tracked.im,
    })
}

fn check_report(report: &StepReport<f64>, cfg: &RunConfig, step: u64) -> Result<()> {
    if !cfg.scheme.scheme.uses_sav() {
        return Ok(());
    }
    let k = cfg.scheme.k;
    let sigma = if step == 1 { 1.0 / k } else { 1.5 / k };
    let floor = (sigma + cfg.scheme.gamma) * (1.0 - 1e-12);
    if report.q_denominator < floor {
        return Err(Error::InvariantViolation(format!(
            "q denominator {} below {floor} at step {step}",
            report.q_denominator
        )));
    }
    // a NaN residual fails too
    let within = report.energy_identity_residual < ENERGY_RESIDUAL_TOL;
    if !within {
        return Err(Error::InvariantViolation(format!(
            "energy identity residual {:e} at step {step}",
            report.energy_identity_residual
        )));
    }
    Ok(())
}

/// Keeps the rows of an existing series up to `t_max` and reopens it for
/// appending.
fn reopen_series(path: &Path, t_max: f64) -> Result<TimeSeriesWriter<fs::File>> {
    let kept: Vec<_> = if path.exists() {
        io::read_timeseries(path)?.into_iter().filter(|r| r.t <= t_max).collect()
    } else {
        Vec::new()
    };
    let mut w = TimeSeriesWriter::create(path)?;
    for r in &kept {
        w.push(r)?;
    }
    Ok(w)
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("ckpt_{step}.fsav"))
}

pub fn snapshot_path(dir: &Path, t: f64) -> PathBuf {
    dir.join("snapshots").join(format!("omega_{t:.3}.fsav"))
}

fn drive<S>(mut stepper: S, mut state: SolverState<f64, S::Field>, cfg: &RunConfig, opts: &RunOptions) -> Result<SimulateOutcome>
where
    S: TimeStepper<f64>,
    S::Field: Prognostic,
{
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    if cfg.snapshot_every > 0 {
        fs::create_dir_all(out.join("snapshots"))?;
    }
    let mut tr = Transform::new(cfg.scheme.grid);
    let beta = diagnostics::default_beta(&cfg.scheme);
    let series_path = out.join("series.csv");
    let mut series = if state.step > 0 {
        reopen_series(&series_path, state.t)?
    } else {
        TimeSeriesWriter::create(&series_path)?
    };
    let start = Instant::now();
    let budget = opts.max_wall_seconds.map(Duration::from_secs_f64);
    let scheme = cfg.scheme.scheme;
    let mut timed_out: Option<(u64, PathBuf)> = None;

    let result = stepper::run(&mut stepper, &mut state, cfg.t_end, 1, |st, report| {
        if let Some(r) = report {
            check_report(r, cfg, st.step)?;
        }
        let want_ckpt = cfg.checkpoint_every > 0 && st.step > 0 && st.step % cfg.checkpoint_every == 0;
        let want_snap = cfg.snapshot_every > 0 && st.step % cfg.snapshot_every == 0;
        if want_ckpt || want_snap {
            // the live state becomes exactly what a reload would produce
            let ckpt = S::Field::canonicalize(st, scheme, &mut tr)?;
            if want_ckpt {
                io::write_checkpoint(&checkpoint_path(out, st.step), &ckpt)?;
            }
            if want_snap {
                io::write_checkpoint(&snapshot_path(out, st.t), &ckpt)?;
            }
        }
        if st.step % cfg.sample_every == 0 {
            series.push(&record(st, report, cfg, beta, &mut tr)?)?;
            // rows on disk never lag behind the newest checkpoint
            series.flush()?;
        }
        if let Some(limit) = budget {
            // with a checkpoint schedule, stop on it so that a resumed run
            // matches an uninterrupted one bitwise
            let on_schedule = cfg.checkpoint_every == 0 || want_ckpt;
            if on_schedule && st.step > 0 && start.elapsed() >= limit {
                let path = checkpoint_path(out, st.step);
                if !want_ckpt {
                    let ckpt = S::Field::canonicalize(st, scheme, &mut tr)?;
                    io::write_checkpoint(&path, &ckpt)?;
                }
                timed_out = Some((st.step, path));
                return Ok(Control::Stop);
            }
        }
        Ok(Control::Continue)
    });
    series.flush()?;
    match result {
        Ok(summary) => match timed_out {
            Some((step, checkpoint)) if summary.stopped_early => Ok(SimulateOutcome::TimedOut { step, checkpoint }),
            _ => Ok(SimulateOutcome::Completed { steps: state.step }),
        },
        Err(Error::BlowUp { t, step }) => Ok(SimulateOutcome::BlowUp { t, step }),
        Err(e) => Err(e),
    }
}

fn load_resume(cfg: &RunConfig, path: &Path) -> Result<Checkpoint> {
    let ckpt = io::read_checkpoint(path)?;
    if ckpt.grid != cfg.scheme.grid {
        return Err(Error::GridMismatch("checkpoint grid differs from the config".into()));
    }
    if ckpt.scheme != cfg.scheme.scheme {
        return Err(Error::InvalidConfig(format!(
            "checkpoint was written by {}, config asks for {}",
            ckpt.scheme.name(),
            cfg.scheme.scheme.name()
        )));
    }
    Ok(ckpt)
}

/// Runs the configured simulation, writing `series.csv`, checkpoints and
/// snapshots under the output directory.
pub fn cmd_simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<SimulateOutcome> {
    let grid = cfg.scheme.grid;
    let mut tr = Transform::new(grid);
    let resume = opts.resume.as_deref().map(|p| load_resume(cfg, p)).transpose()?;
    match cfg.scheme.scheme {
        SchemeKind::FsavBdf2Primitive => {
            let stepper = PrimitiveStepper::new(cfg.scheme)?;
            let state = match &resume {
                Some(ckpt) => io::velocity_from_checkpoint(ckpt, &mut tr)?,
                None => SolverState::initial(cfg.initial.velocity(grid, cfg.scheme.forcing, cfg.seed, &mut tr)?),
            };
            drive(stepper, state, cfg, opts)
        }
        SchemeKind::FsavBdf2Sv | SchemeKind::ImexBdf2Sv => {
            let stepper = SvStepper::new(cfg.scheme)?;
            let state = match &resume {
                Some(ckpt) => io::vorticity_from_checkpoint(ckpt, &mut tr)?,
                None => SolverState::initial(cfg.initial.vorticity(grid, cfg.scheme.forcing, cfg.seed, &mut tr)?),
            };
            drive(stepper, state, cfg, opts)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurstingSummary {
    pub outcome: SimulateOutcome,
    pub events: Vec<diagnostics::BurstEvent>,
    pub intervals: Vec<f64>,
    /// Share of fluctuation power below 10% of the Nyquist frequency.
    pub low_frequency_share: f64,
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurstAnalysis {
    pub events: Vec<diagnostics::BurstEvent>,
    pub intervals: Vec<f64>,
    /// `(frequency, power)` of the post-warmup `max_omega` fluctuation.
    pub spectrum: Vec<(f64, f64)>,
}

/// Post-processing of a bursting run: burst events and inter-burst
/// intervals from the `max_omega` trace, and the periodogram of its
/// fluctuation after the warmup window.
pub fn analyze_bursting(records: &[TimeSeriesRecord], cfg: &RunConfig) -> Result<BurstAnalysis> {
    let trace: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.max_omega)).collect();
    let events = diagnostics::detect_bursts(&trace, &cfg.burst)?;
    let intervals = diagnostics::inter_burst_intervals(&events);
    let t0 = trace.first().map_or(0.0, |p| p.0) + cfg.burst.warmup;
    let tail: Vec<_> = trace.iter().copied().filter(|p| p.0 >= t0).collect();
    let spectrum = diagnostics::psd(&tail)?;
    Ok(BurstAnalysis { events, intervals, spectrum })
}

/// Simulation followed by burst analysis; writes `bursts.csv`, `psd.csv`
/// and `intervals.csv` next to `series.csv`.
pub fn cmd_bursting(cfg: &RunConfig, opts: &RunOptions) -> Result<BurstingSummary> {
    if !matches!(cfg.scheme.forcing, fsav::model::ForcingKind::Kolmogorov { .. }) {
        return Err(Error::InvalidConfig("bursting runs need Kolmogorov forcing".into()));
    }
    let outcome = cmd_simulate(cfg, opts)?;
    let records = io::read_timeseries(&cfg.output_dir.join("series.csv"))?;
    let BurstAnalysis { events, intervals, spectrum } = analyze_bursting(&records, cfg)?;
    let out = &cfg.output_dir;
    write_rows(
        &out.join("bursts.csv"),
        "t_start,t_peak,t_end,peak_value",
        events.iter().map(|e| format!("{:.16e},{:.16e},{:.16e},{:.16e}", e.t_start, e.t_peak, e.t_end, e.peak_value)),
    )?;
    write_rows(&out.join("intervals.csv"), "interval", intervals.iter().map(|v| format!("{v:.16e}")))?;
    write_rows(
        &out.join("psd.csv"),
        "freq,power",
        spectrum.iter().map(|(f, p)| format!("{f:.16e},{p:.16e}")),
    )?;
    Ok(BurstingSummary {
        outcome,
        events,
        intervals,
        low_frequency_share: diagnostics::low_frequency_share(&spectrum, 0.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: impl Fn(f64) -> f64) -> Vec<TimeSeriesRecord> {
        (0..6000)
            .map(|i| {
                let t = i as f64 * 0.5;
                TimeSeriesRecord {
                    t,
                    l2_omega: 0.0,
                    h1_omega: 0.0,
                    max_omega: values(t),
                    q: 1.0,
                    e_gnorm: 0.0,
                    energy_residual: 0.0,
                    mode_re: 0.0,
                    mode_im: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn injected_bursts_are_recovered() {
        let cfg = io::parse_config("nx = 16\nre = 25\nk = 0.5\nT = 3000\n").unwrap();
        let peaks = [900.0, 1400.0, 2300.0];
        let series = rows(|t| {
            let bumps: f64 = peaks.iter().map(|c| 30.0 * (-((t - c) / 4.0).powi(2)).exp()).sum();
            4.0 + 0.1 * (0.9 * t).sin() + bumps
        });
        let analysis = analyze_bursting(&series, &cfg).unwrap();
        let found: Vec<f64> = analysis.events.iter().map(|e| e.t_peak).collect();
        assert_eq!(found, peaks);
        assert_eq!(analysis.intervals, vec![500.0, 900.0]);
        assert!(analysis.spectrum.iter().all(|&(f, p)| f >= 0.0 && p >= 0.0));
    }

    #[test]
    fn flat_series_has_no_events() {
        let cfg = io::parse_config("nx = 16\nre = 20\nk = 0.5\nT = 3000\n").unwrap();
        let analysis = analyze_bursting(&rows(|t| 3.0 + 0.01 * (0.3 * t).sin()), &cfg).unwrap();
        assert!(analysis.events.is_empty());
        assert!(analysis.intervals.is_empty());
    }
}
