//! Energy bookkeeping, mode tracking and time-series analysis.

use rustfft::FftPlanner;

use crate::model::Velocity;
use crate::spectral::{Grid2D, SpectralField2D};
use crate::stepper::{SchemeConfig, SolverState};
use crate::{Complex, Error, Real, Result};

/// Smallest and largest eigenvalues of `G = 1/4 [[1, -2], [-2, 5]]`.
pub const G_LAMBDA_MIN: f64 = (1.5 - std::f64::consts::SQRT_2) / 2.0;
pub const G_LAMBDA_MAX: f64 = (1.5 + std::f64::consts::SQRT_2) / 2.0;

/// Inner-product structure needed by the energy bookkeeping, implemented for
/// vorticity and velocity fields.
pub trait EnergyField<T: Real>: Sized {
    fn inner_unchecked(&self, other: &Self) -> T;
    fn grad_norm_sq(&self) -> T;
    fn lincomb(a: T, x: &Self, b: T, y: &Self) -> Self;

    fn norm_sq(&self) -> T {
        self.inner_unchecked(self)
    }
}

impl<T: Real> EnergyField<T> for SpectralField2D<T> {
    fn inner_unchecked(&self, other: &Self) -> T {
        SpectralField2D::inner_unchecked(self, other)
    }

    fn grad_norm_sq(&self) -> T {
        SpectralField2D::grad_norm_sq(self)
    }

    fn lincomb(a: T, x: &Self, b: T, y: &Self) -> Self {
        SpectralField2D::lincomb(a, x, b, y)
    }
}

impl<T: Real> EnergyField<T> for Velocity<T> {
    fn inner_unchecked(&self, other: &Self) -> T {
        self.u1.inner_unchecked(&other.u1) + self.u2.inner_unchecked(&other.u2)
    }

    fn grad_norm_sq(&self) -> T {
        Velocity::grad_norm_sq(self)
    }

    fn lincomb(a: T, x: &Self, b: T, y: &Self) -> Self {
        Velocity::lincomb(a, x, b, y)
    }
}

/// `V . G V` for scalars, `V = [first, second]`.
pub fn gnorm_scalar<T: Real>(first: T, second: T) -> T {
    let quarter = T::lit(0.25);
    quarter * (first * first - T::lit(4.0) * first * second + T::lit(5.0) * second * second)
}

/// `V . G V` with `V = [first, second]` and entries paired by the L2 inner
/// product: `1/4 |first|^2 - <first, second> + 5/4 |second|^2`.
///
/// The G-norm that telescopes under BDF2 is `gnorm_pair(older, newer)`.
pub fn gnorm_pair<T: Real, F: EnergyField<T>>(first: &F, second: &F) -> T {
    let quarter = T::lit(0.25);
    quarter * first.norm_sq() - first.inner_unchecked(second) + T::lit(1.25) * second.norm_sq()
}

/// Checked variant of [`gnorm_pair`] for vorticity fields.
pub fn gnorm_fields<T: Real>(first: &SpectralField2D<T>, second: &SpectralField2D<T>) -> Result<T> {
    first.grid.check_same(&second.grid)?;
    Ok(gnorm_pair(first, second))
}

/// Largest admissible `beta` for the discrete energy: `beta <= min(c0/(8 Re),
/// gamma/4)` with `c0` the first eigenvalue of `-Laplacian` on mean-free
/// fields.
pub fn default_beta(cfg: &SchemeConfig) -> f64 {
    let c0 = cfg.grid.poincare_constant();
    (c0 / (8.0 * cfg.re)).min(cfg.gamma / 4.0)
}

/// `E^n = |[w_{n-1}, w_n]|_G + |[q_{n-1}, q_n]|_G + beta k (|w_n|^2 + q_n^2)`.
pub fn discrete_energy<T: Real, F: EnergyField<T>>(
    state: &SolverState<T, F>,
    cfg: &SchemeConfig,
    beta: f64,
) -> T {
    let bk = T::lit(beta * cfg.k);
    gnorm_pair(&state.w_nm1, &state.w_n)
        + gnorm_scalar(state.q_nm1, state.q_n)
        + bk * (state.w_n.norm_sq() + state.q_n * state.q_n)
}

/// Relative residual of the per-step energy identity
///
/// ```text
/// G(w_n, w_{n+1}) - G(w_{n-1}, w_n) + 1/4 |w_{n+1} - 2 w_n + w_{n-1}|^2
///   + (k/Re) |grad w_{n+1}|^2 + (same G and second-difference terms for q)
///   + k gamma q_{n+1}^2  =  k <F, w_{n+1}> + k gamma q_{n+1}
/// ```
///
/// for a BDF2 step (the advective work cancels between the field and the
/// scalar equation). `forcing_work` is `<F^{n+1}, w_{n+1}>`.
pub fn energy_identity<T: Real, F: EnergyField<T>>(
    prev: &SolverState<T, F>,
    next: &SolverState<T, F>,
    cfg: &SchemeConfig,
    forcing_work: T,
) -> T {
    energy_residual(prev, next, cfg, forcing_work, None, false)
}

/// General form used by the steppers. With `advective_work = Some(<N, w>)`
/// the `q` terms are dropped and the explicit advective work enters instead
/// (IMEX). `bdf1` selects the first-order identity
/// `1/2 (|a|^2 - |b|^2 + |a - b|^2)` for the initializer step.
pub(crate) fn energy_residual<T: Real, F: EnergyField<T>>(
    prev: &SolverState<T, F>,
    next: &SolverState<T, F>,
    cfg: &SchemeConfig,
    forcing_work: T,
    advective_work: Option<T>,
    bdf1: bool,
) -> T {
    let k = T::lit(cfg.k);
    let gamma = T::lit(cfg.gamma);
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let (a, b) = (&next.w_n, &prev.w_n);
    let mut lhs: Vec<T> = Vec::with_capacity(10);
    if bdf1 {
        let d = F::lincomb(T::one(), a, -T::one(), b);
        lhs.extend([half * a.norm_sq(), -half * b.norm_sq(), half * d.norm_sq()]);
    } else {
        let c = &prev.w_nm1;
        let d2 = F::lincomb(T::one(), &F::lincomb(T::one(), a, T::lit(-2.0), b), T::one(), c);
        lhs.extend([gnorm_pair(b, a), -gnorm_pair(c, b), quarter * d2.norm_sq()]);
    }
    lhs.push(k / T::lit(cfg.re) * a.grad_norm_sq());
    let mut rhs = vec![k * forcing_work];
    match advective_work {
        Some(work) => lhs.push(k * work),
        None => {
            let (qa, qb) = (next.q_n, prev.q_n);
            if bdf1 {
                let d = qa - qb;
                lhs.extend([half * qa * qa, -half * qb * qb, half * d * d]);
            } else {
                let qc = prev.q_nm1;
                let d2 = qa - T::lit(2.0) * qb + qc;
                lhs.extend([gnorm_scalar(qb, qa), -gnorm_scalar(qc, qb), quarter * d2 * d2]);
            }
            lhs.push(k * gamma * qa * qa);
            rhs.push(k * gamma * qa);
        }
    }
    let sum = lhs.iter().fold(T::zero(), |s, &v| s + v) - rhs.iter().fold(T::zero(), |s, &v| s + v);
    let scale = lhs.iter().chain(&rhs).fold(T::zero(), |s, &v| s + v.abs());
    if scale > T::zero() {
        sum.abs() / scale
    } else {
        T::zero()
    }
}

/// Coefficient of `exp(i (jx 2pi x / lx + jy 2pi y / ly))`.
pub fn track_mode<T: Real>(field: &SpectralField2D<T>, jx: i64, jy: i64) -> Result<Complex<T>> {
    let Grid2D { nx, ny, .. } = field.grid;
    if jx.unsigned_abs() as usize >= nx / 2 || jy.unsigned_abs() as usize >= ny / 2 {
        return Err(Error::ModeOutOfRange { jx, jy });
    }
    Ok(field.coeff(jx, jy))
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub l2_omega: f64,
    pub h1_omega: f64,
    pub max_omega: f64,
    pub q: f64,
    pub e_gnorm: f64,
    pub energy_residual: f64,
    pub mode_re: f64,
    pub mode_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstEvent {
    pub t_start: f64,
    pub t_peak: f64,
    pub t_end: f64,
    pub peak_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstParams {
    /// Baseline window `[t_0, t_0 + warmup]`.
    pub warmup: f64,
    pub open_sigma: f64,
    pub close_sigma: f64,
    /// Events whose gap is shorter than this (time units) are merged.
    pub merge_gap: f64,
}

impl BurstParams {
    pub fn with_warmup(warmup: f64) -> Self {
        Self { warmup, open_sigma: 4.0, close_sigma: 2.0, merge_gap: 10.0 }
    }
}

/// Threshold burst detector with hysteresis.
///
/// Baseline mean and standard deviation come from the samples with
/// `t <= t_0 + warmup`. An event opens above `mu + open_sigma sigma`, closes
/// below `mu + close_sigma sigma`, and an event still open at the end of the
/// series is closed at the last sample.
pub fn detect_bursts(series: &[(f64, f64)], params: &BurstParams) -> Result<Vec<BurstEvent>> {
    let (Some(first), Some(last)) = (series.first(), series.last()) else {
        return Err(Error::InsufficientData("empty series".into()));
    };
    if params.warmup > last.0 - first.0 {
        return Err(Error::InsufficientData(format!(
            "warmup {} exceeds series span {}",
            params.warmup,
            last.0 - first.0
        )));
    }
    let base: Vec<f64> =
        series.iter().take_while(|(t, _)| *t <= first.0 + params.warmup).map(|p| p.1).collect();
    let n = base.len() as f64;
    let mu = base.iter().sum::<f64>() / n;
    let sigma = (base.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
    let open = mu + params.open_sigma * sigma;
    let close = mu + params.close_sigma * sigma;

    let mut events: Vec<BurstEvent> = Vec::new();
    let mut current: Option<BurstEvent> = None;
    let mut prev_t = first.0;
    for &(t, v) in series {
        match current.as_mut() {
            None if v > open => {
                current = Some(BurstEvent { t_start: prev_t, t_peak: t, t_end: t, peak_value: v });
            }
            None => {}
            Some(ev) => {
                if v > ev.peak_value {
                    ev.peak_value = v;
                    ev.t_peak = t;
                }
                if v < close {
                    ev.t_end = t;
                    events.push(*ev);
                    current = None;
                }
            }
        }
        prev_t = t;
    }
    if let Some(mut ev) = current {
        ev.t_end = last.0;
        events.push(ev);
    }

    let mut merged: Vec<BurstEvent> = Vec::with_capacity(events.len());
    for ev in events {
        match merged.last_mut() {
            Some(prev) if ev.t_start - prev.t_end < params.merge_gap => {
                if ev.peak_value > prev.peak_value {
                    prev.peak_value = ev.peak_value;
                    prev.t_peak = ev.t_peak;
                }
                prev.t_end = ev.t_end;
            }
            _ => merged.push(ev),
        }
    }
    Ok(merged)
}

/// Gaps between consecutive burst peaks.
pub fn inter_burst_intervals(events: &[BurstEvent]) -> Vec<f64> {
    events.windows(2).map(|w| w[1].t_peak - w[0].t_peak).collect()
}

/// Coefficient of variation (population standard deviation over mean).
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean != 0.0).then(|| var.sqrt() / mean.abs())
}

/// One-sided, mean-removed periodogram.
///
/// With `Ns` samples at spacing `dt`, bin `j` sits at `j / (Ns dt)` and
/// carries `|DFT_j(v - mean)|^2 dt / Ns`; interior bins are doubled to fold
/// in negative frequencies, so `sum(power) * df` equals the variance.
pub fn psd(series: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let ns = series.len();
    if ns < 2 {
        return Err(Error::InsufficientData(format!("{ns} samples")));
    }
    let dt = (series[ns - 1].0 - series[0].0) / (ns - 1) as f64;
    if !(dt > 0.0) || series.windows(2).any(|w| ((w[1].0 - w[0].0) - dt).abs() > 1e-6 * dt) {
        return Err(Error::NonUniformSampling);
    }
    let mean = series.iter().map(|p| p.1).sum::<f64>() / ns as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|p| Complex::new(p.1 - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(ns).process(&mut buf);
    let df = 1.0 / (ns as f64 * dt);
    Ok((0..=ns / 2)
        .map(|j| {
            let mut p = buf[j].norm_sqr() * dt / ns as f64;
            let nyquist = ns.is_multiple_of(2) && j == ns / 2;
            if j != 0 && !nyquist {
                p *= 2.0;
            }
            (j as f64 * df, p)
        })
        .collect())
}

/// Fraction of total power in bins below `fraction` of the Nyquist frequency.
pub fn low_frequency_share(spectrum: &[(f64, f64)], fraction: f64) -> f64 {
    let f_nyq = spectrum.last().map_or(0.0, |p| p.0);
    let total: f64 = spectrum.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return 0.0;
    }
    spectrum.iter().filter(|p| p.0 < fraction * f_nyq).map(|p| p.1).sum::<f64>() / total
}
