use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::BurstParams;
use crate::model::{self, ForcingKind, Velocity};
use crate::spectral::{Grid2D, RealField2D, SpectralField2D, Transform};
use crate::stepper::{SchemeConfig, SchemeKind, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_GAMMA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// Basic Kolmogorov flow `psi = sin(m y)`.
    Basic,
    /// `psi = sin(m y) + amplitude sin(a x) sin(b y)`.
    Perturbed { amplitude: f64, mode: (u32, u32) },
    /// Band-limited random vorticity, reproducible from the run seed.
    Random { amplitude: f64, band: usize },
    /// Exact manufactured vorticity at `t = 0`.
    Manufactured,
}

impl InitialCondition {
    /// Streamfunction of the initial state (mean free).
    pub fn streamfunction(
        &self,
        grid: Grid2D,
        forcing: ForcingKind,
        seed: u64,
        transform: &mut Transform<f64>,
    ) -> Result<SpectralField2D<f64>> {
        let m = match forcing {
            ForcingKind::Kolmogorov { m } => m as f64,
            _ => 0.0,
        };
        let needs_m = matches!(self, InitialCondition::Basic | InitialCondition::Perturbed { .. });
        if needs_m && m == 0.0 {
            return Err(Error::InvalidConfig("basic-flow initial conditions need Kolmogorov forcing".into()));
        }
        match *self {
            InitialCondition::Zero => Ok(SpectralField2D::zeros(grid)),
            InitialCondition::Basic => transform.forward(&RealField2D::from_fn(grid, |_, y| (m * y).sin())),
            InitialCondition::Perturbed { amplitude, mode: (a, b) } => {
                let (a, b) = (a as f64, b as f64);
                let (kx, ky) = (2.0 * PI / grid.lx, 2.0 * PI / grid.ly);
                transform.forward(&RealField2D::from_fn(grid, |x, y| {
                    (m * y).sin() + amplitude * (a * kx * x).sin() * (b * ky * y).sin()
                }))
            }
            InitialCondition::Random { .. } | InitialCondition::Manufactured => {
                self.vorticity(grid, forcing, seed, transform)?.inv_neg_laplacian()
            }
        }
    }

    /// Initial vorticity `-Laplacian psi` (the manufactured case has its own
    /// exact vorticity, which is zero at `t = 0`).
    pub fn vorticity(
        &self,
        grid: Grid2D,
        forcing: ForcingKind,
        seed: u64,
        transform: &mut Transform<f64>,
    ) -> Result<SpectralField2D<f64>> {
        match *self {
            InitialCondition::Random { amplitude, band } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(model::random_band_limited(grid, band, amplitude, &mut rng))
            }
            InitialCondition::Manufactured => {
                let case = model::manufactured_case();
                case.grid_matches(&grid)?;
                transform.forward(&case.sample(grid, |c, x, y| c.omega(0.0, x, y)))
            }
            _ => Ok(self.streamfunction(grid, forcing, seed, transform)?.laplacian().scale(-1.0)),
        }
    }

    pub fn velocity(
        &self,
        grid: Grid2D,
        forcing: ForcingKind,
        seed: u64,
        transform: &mut Transform<f64>,
    ) -> Result<Velocity<f64>> {
        let psi = self.streamfunction(grid, forcing, seed, transform)?;
        Ok(model::velocity_from_streamfunction(&psi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackedField {
    Omega,
    Psi,
}

/// Everything a CLI run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeConfig,
    pub t_end: f64,
    pub sample_every: u64,
    /// Steps between checkpoints; 0 disables them.
    pub checkpoint_every: u64,
    /// Steps between vorticity snapshots; 0 disables them.
    pub snapshot_every: u64,
    pub output_dir: PathBuf,
    pub initial: InitialCondition,
    pub tracked_mode: (i64, i64),
    pub tracked_field: TrackedField,
    pub burst: BurstParams,
    pub seed: u64,
}

impl RunConfig {
    pub fn steps(&self) -> u64 {
        self.scheme.steps_to(self.t_end).expect("validated at parse time")
    }
}

fn parse_value<V: FromStr>(line: usize, key: &str, value: &str) -> Result<V> {
    value.parse().map_err(|_| Error::Config {
        line,
        msg: format!("cannot parse {key} = {value:?}"),
    })
}

fn parse_pair<V: FromStr>(line: usize, key: &str, value: &str) -> Result<(V, V)> {
    let bad = || Error::Config { line, msg: format!("{key} expects two comma-separated values") };
    let (a, b) = value.split_once(',').ok_or_else(bad)?;
    Ok((parse_value(line, key, a.trim())?, parse_value(line, key, b.trim())?))
}

const KEYS: &[&str] = &[
    "k",
    "re",
    "gamma",
    "nx",
    "ny",
    "lx",
    "ly",
    "T",
    "scheme",
    "dealias",
    "forcing",
    "m",
    "blowup_threshold",
    "sample_every",
    "checkpoint_every",
    "snapshot_every",
    "output_dir",
    "ic",
    "ic_amplitude",
    "ic_mode",
    "ic_band",
    "tracked_mode",
    "tracked_field",
    "burst_warmup",
    "burst_open_sigma",
    "burst_close_sigma",
    "burst_merge_gap",
    "seed",
];

/// Parses a `key = value` document (`#` starts a comment).
///
/// Required keys: `k`, `re`, `nx`, `T`. Defaults: `ny = nx`,
/// `lx = ly = 2pi`, `scheme = fsav_bdf2_sv`, `forcing = kolmogorov`, `m = 2`,
/// `gamma = 1000`, `dealias = false`, `blowup_threshold = 1e8`,
/// `sample_every = 1`, `checkpoint_every = 0`, `snapshot_every = 0`,
/// `output_dir = out`, `ic = perturbed`, `ic_amplitude = 0.001`,
/// `ic_mode = 2,2`, `ic_band = 4`, `tracked_mode = 0,1`,
/// `tracked_field = omega`, `burst_warmup = 200`, `burst_open_sigma = 4`,
/// `burst_close_sigma = 2`, `burst_merge_gap = 10`, `seed = 0`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected key = value, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config { line, msg: format!("unknown key {key:?}") });
        }
        if let Some((first, ..)) = entries.iter().find(|e| e.1 == key) {
            return Err(Error::Config { line, msg: format!("{key} already set on line {first}") });
        }
        entries.push((line, key.to_string(), value.to_string()));
    }
    let find = |key: &str| entries.iter().find(|e| e.1 == key).map(|e| (e.0, e.2.as_str()));
    let last_line = text.lines().count().max(1);
    let required = |key: &str| {
        find(key).ok_or_else(|| Error::Config { line: last_line, msg: format!("missing required key {key}") })
    };
    macro_rules! get {
        ($key:expr, $default:expr) => {
            match find($key) {
                Some((line, v)) => parse_value(line, $key, v)?,
                None => $default,
            }
        };
    }
    let line_of = |key: &str| find(key).map_or(last_line, |e| e.0);

    let (k_line, k_str) = required("k")?;
    let k: f64 = parse_value(k_line, "k", k_str)?;
    let (re_line, re_str) = required("re")?;
    let re: f64 = parse_value(re_line, "re", re_str)?;
    let (nx_line, nx_str) = required("nx")?;
    let nx: usize = parse_value(nx_line, "nx", nx_str)?;
    let (t_line, t_str) = required("T")?;
    let t_end: f64 = parse_value(t_line, "T", t_str)?;
    let ny: usize = get!("ny", nx);
    let lx: f64 = get!("lx", 2.0 * PI);
    let ly: f64 = get!("ly", 2.0 * PI);
    let grid = Grid2D::new(nx, ny, lx, ly)
        .map_err(|e| Error::Config { line: nx_line, msg: e.to_string() })?;

    let scheme = match find("scheme") {
        Some((line, v)) => SchemeKind::parse(v)
            .ok_or_else(|| Error::Config { line, msg: format!("unknown scheme {v:?}") })?,
        None => SchemeKind::FsavBdf2Sv,
    };
    let m: u32 = get!("m", 2);
    let forcing = match find("forcing") {
        None | Some((_, "kolmogorov")) => ForcingKind::Kolmogorov { m },
        Some((_, "manufactured")) => ForcingKind::Manufactured,
        Some((_, "none")) => ForcingKind::None,
        Some((line, v)) => return Err(Error::Config { line, msg: format!("unknown forcing {v:?}") }),
    };

    let scheme_cfg = SchemeConfig {
        k,
        re,
        gamma: get!("gamma", DEFAULT_GAMMA),
        grid,
        scheme,
        dealias: get!("dealias", false),
        forcing,
        blowup_threshold: get!("blowup_threshold", DEFAULT_BLOWUP_THRESHOLD),
    };
    let invalid = |line: usize| move |e: Error| Error::Config { line, msg: e.to_string() };
    scheme_cfg.validate().map_err(invalid(k_line))?;
    scheme_cfg.steps_to(t_end).map_err(invalid(t_line))?;
    match forcing {
        ForcingKind::Kolmogorov { m } => {
            model::check_kolmogorov_domain(&grid, m).map_err(invalid(line_of("lx")))?
        }
        ForcingKind::Manufactured => {
            model::manufactured_case().grid_matches(&grid).map_err(invalid(line_of("lx")))?;
            if scheme == SchemeKind::FsavBdf2Primitive {
                return Err(Error::Config {
                    line: line_of("scheme"),
                    msg: "manufactured forcing needs a streamfunction scheme".into(),
                });
            }
        }
        ForcingKind::None => {}
    }

    let sample_every: u64 = get!("sample_every", 1);
    if sample_every == 0 {
        return Err(Error::Config { line: line_of("sample_every"), msg: "sample_every must be >= 1".into() });
    }
    let initial = match find("ic") {
        None | Some((_, "perturbed")) => {
            let mode = match find("ic_mode") {
                Some((line, v)) => parse_pair(line, "ic_mode", v)?,
                None => (2, 2),
            };
            InitialCondition::Perturbed { amplitude: get!("ic_amplitude", 0.001), mode }
        }
        Some((_, "basic")) => InitialCondition::Basic,
        Some((_, "zero")) => InitialCondition::Zero,
        Some((_, "random")) => {
            InitialCondition::Random { amplitude: get!("ic_amplitude", 0.001), band: get!("ic_band", 4) }
        }
        Some((_, "manufactured")) => InitialCondition::Manufactured,
        Some((line, v)) => return Err(Error::Config { line, msg: format!("unknown ic {v:?}") }),
    };
    if matches!(initial, InitialCondition::Basic | InitialCondition::Perturbed { .. })
        && !matches!(forcing, ForcingKind::Kolmogorov { .. })
    {
        return Err(Error::Config {
            line: line_of("ic"),
            msg: "basic-flow initial conditions need Kolmogorov forcing".into(),
        });
    }
    let tracked_mode = match find("tracked_mode") {
        Some((line, v)) => {
            let (jx, jy): (i64, i64) = parse_pair(line, "tracked_mode", v)?;
            if jx.unsigned_abs() as usize >= nx / 2 || jy.unsigned_abs() as usize >= ny / 2 {
                return Err(Error::Config { line, msg: format!("mode ({jx}, {jy}) outside the grid band") });
            }
            (jx, jy)
        }
        None => (0, 1),
    };
    let tracked_field = match find("tracked_field") {
        None | Some((_, "omega")) => TrackedField::Omega,
        Some((_, "psi")) => TrackedField::Psi,
        Some((line, v)) => return Err(Error::Config { line, msg: format!("unknown tracked_field {v:?}") }),
    };
    let burst = BurstParams {
        warmup: get!("burst_warmup", 200.0),
        open_sigma: get!("burst_open_sigma", 4.0),
        close_sigma: get!("burst_close_sigma", 2.0),
        merge_gap: get!("burst_merge_gap", 10.0),
    };
    if !(burst.close_sigma <= burst.open_sigma) {
        return Err(Error::Config {
            line: line_of("burst_close_sigma"),
            msg: "burst_close_sigma must not exceed burst_open_sigma".into(),
        });
    }

    Ok(RunConfig {
        scheme: scheme_cfg,
        t_end,
        sample_every,
        checkpoint_every: get!("checkpoint_every", 0),
        snapshot_every: get!("snapshot_every", 0),
        output_dir: PathBuf::from(find("output_dir").map_or("out", |e| e.1)),
        initial,
        tracked_mode,
        tracked_field,
        burst,
        seed: get!("seed", 0),
    })
}
