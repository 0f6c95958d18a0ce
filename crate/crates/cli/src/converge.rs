use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use fsav::io::{InitialCondition, RunConfig};
use fsav::model::{self, ForcingKind};
use fsav::spectral::{RealField2D, Transform};
use fsav::stepper::{self, Control, SchemeConfig, SolverState, SvStepper};
use fsav::{Error, Result};

/// One entry of a convergence sweep. Orders compare against the previous
/// (twice larger) time step and are absent for the first row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub k: f64,
    pub error_omega: f64,
    pub error_psi: f64,
    pub q_error: f64,
    pub order_omega: Option<f64>,
    pub order_psi: Option<f64>,
    pub runtime_s: f64,
    /// `None` when the run completed, otherwise the blow-up time.
    pub blowup_t: Option<f64>,
}

fn rel_linf(a: &RealField2D<f64>, exact: &RealField2D<f64>) -> f64 {
    let diff = a.values.iter().zip(&exact.values).fold(0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / exact.max_abs()
}

/// Manufactured run at one time step; returns relative l-infinity errors of
/// omega and psi and `|q - 1|`, all at the final time.
pub fn manufactured_errors(base: &SchemeConfig, t_end: f64) -> Result<(f64, f64, f64)> {
    let cfg = *base;
    let grid = cfg.grid;
    let case = model::ManufacturedCase { re: cfg.re, ..model::manufactured_case() };
    let mut tr = Transform::new(grid);
    let w0 = InitialCondition::Manufactured.vorticity(grid, cfg.forcing, 0, &mut tr)?;
    let mut stepper = SvStepper::new(cfg)?;
    let mut state = SolverState::initial(w0);
    stepper::run(&mut stepper, &mut state, t_end, u64::MAX, |_, _| Ok(Control::Continue))?;
    let psi = stepper.streamfunction(&state.w_n, state.t)?;
    let t = state.t;
    let (w_h, psi_h) = tr.inverse_pair(&state.w_n, &psi);
    let w_exact = case.sample(grid, |c, x, y| c.omega(t, x, y));
    let psi_exact = case.sample(grid, |c, x, y| c.psi(t, x, y));
    Ok((rel_linf(&w_h, &w_exact), rel_linf(&psi_h, &psi_exact), (state.q_n - 1.0).abs()))
}

fn order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// Time-step refinement study on the manufactured problem. Runs are
/// independent and spread over the available cores; a blow-up is recorded
/// in its row and does not stop the sweep.
pub fn cmd_converge(cfg: &RunConfig, ks: &[f64]) -> Result<Vec<ConvergeRow>> {
    if cfg.scheme.forcing != ForcingKind::Manufactured {
        return Err(Error::InvalidConfig("convergence study needs forcing = manufactured".into()));
    }
    let mut ks = ks.to_vec();
    ks.sort_by(|a, b| b.partial_cmp(a).expect("finite time steps"));
    for &k in &ks {
        SchemeConfig { k, ..cfg.scheme }.steps_to(cfg.t_end)?;
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(ks.len()).max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ConvergeRow>>>> = Mutex::new(vec![None; ks.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&k) = ks.get(i) else { break };
                let start = Instant::now();
                let run = manufactured_errors(&SchemeConfig { k, ..cfg.scheme }, cfg.t_end);
                let runtime_s = start.elapsed().as_secs_f64();
                let row = match run {
                    Ok((error_omega, error_psi, q_error)) => Ok(ConvergeRow {
                        k,
                        error_omega,
                        error_psi,
                        q_error,
                        order_omega: None,
                        order_psi: None,
                        runtime_s,
                        blowup_t: None,
                    }),
                    Err(Error::BlowUp { t, .. }) => Ok(ConvergeRow {
                        k,
                        error_omega: f64::NAN,
                        error_psi: f64::NAN,
                        q_error: f64::NAN,
                        order_omega: None,
                        order_psi: None,
                        runtime_s,
                        blowup_t: Some(t),
                    }),
                    Err(e) => Err(e),
                };
                results.lock().expect("no worker panicked")[i] = Some(row);
            });
        }
    });
    let mut rows = results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect::<Result<Vec<_>>>()?;
    for i in 1..rows.len() {
        let ratio = rows[i - 1].k / rows[i].k;
        rows[i].order_omega = Some(order(rows[i - 1].error_omega, rows[i].error_omega, ratio));
        rows[i].order_psi = Some(order(rows[i - 1].error_psi, rows[i].error_psi, ratio));
    }
    Ok(rows)
}

pub fn write_converge_csv(path: &Path, rows: &[ConvergeRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "k,error_omega,error_psi,q_error,order_omega,order_psi,runtime_s,status,blowup_t")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
    for r in rows {
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.3},{},{}",
            r.k,
            r.error_omega,
            r.error_psi,
            r.q_error,
            opt(r.order_omega),
            opt(r.order_psi),
            r.runtime_s,
            if r.blowup_t.is_some() { "blowup" } else { "completed" },
            r.blowup_t.map_or(String::new(), |t| format!("{t}")),
        )?;
    }
    f.flush()?;
    Ok(())
}
