//! Binary checkpoint format (all little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FSAV"
//!      4     4  format version (u32, = 1)
//!      8     4  nx (u32)
//!     12     4  ny (u32)
//!     16     8  lx (f64)
//!     24     8  ly (f64)
//!     32     8  t (f64)
//!     40     8  step (u64)
//!     48     8  q_n (f64)
//!     56     8  q_nm1 (f64)
//!     64     4  scheme tag (u32)
//!     68     .  vorticity at levels n and n-1, nx*ny f64 each,
//!               row-major with x fastest
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::model::{self, Velocity};
use crate::spectral::{Grid2D, RealField2D, SpectralField2D, Transform};
use crate::stepper::{SchemeKind, SolverState};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FSAV";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const CHECKPOINT_HEADER_LEN: usize = 68;

/// In-memory image of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grid: Grid2D,
    pub t: f64,
    pub step: u64,
    pub q_n: f64,
    pub q_nm1: f64,
    pub scheme: SchemeKind,
    pub omega_n: RealField2D<f64>,
    pub omega_nm1: RealField2D<f64>,
}

impl Checkpoint {
    pub fn from_vorticity_state(
        state: &SolverState<f64, SpectralField2D<f64>>,
        scheme: SchemeKind,
        transform: &mut Transform<f64>,
    ) -> Self {
        let (omega_n, omega_nm1) = transform.inverse_pair(&state.w_n, &state.w_nm1);
        Self {
            grid: state.w_n.grid,
            t: state.t,
            step: state.step,
            q_n: state.q_n,
            q_nm1: state.q_nm1,
            scheme,
            omega_n,
            omega_nm1,
        }
    }

    pub fn from_velocity_state(
        state: &SolverState<f64, Velocity<f64>>,
        transform: &mut Transform<f64>,
    ) -> Self {
        let (omega_n, omega_nm1) =
            transform.inverse_pair(&state.w_n.vorticity(), &state.w_nm1.vorticity());
        Self {
            grid: *state.w_n.grid(),
            t: state.t,
            step: state.step,
            q_n: state.q_n,
            q_nm1: state.q_nm1,
            scheme: SchemeKind::FsavBdf2Primitive,
            omega_n,
            omega_nm1,
        }
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let g = ckpt.grid;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_u32::<LittleEndian>(g.nx as u32)?;
    w.write_u32::<LittleEndian>(g.ny as u32)?;
    w.write_f64::<LittleEndian>(g.lx)?;
    w.write_f64::<LittleEndian>(g.ly)?;
    w.write_f64::<LittleEndian>(ckpt.t)?;
    w.write_u64::<LittleEndian>(ckpt.step)?;
    w.write_f64::<LittleEndian>(ckpt.q_n)?;
    w.write_f64::<LittleEndian>(ckpt.q_nm1)?;
    w.write_u32::<LittleEndian>(ckpt.scheme.tag())?;
    for field in [&ckpt.omega_n, &ckpt.omega_nm1] {
        for &v in &field.values {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let corrupt = |msg: &str| Error::CorruptCheckpoint(format!("{}: {msg}", path.display()));
    if bytes.len() < CHECKPOINT_HEADER_LEN {
        return Err(corrupt("truncated header"));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut r = &bytes[4..];
    let version = r.read_u32::<LittleEndian>()?;
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(&format!("unsupported version {version}")));
    }
    let nx = r.read_u32::<LittleEndian>()? as usize;
    let ny = r.read_u32::<LittleEndian>()? as usize;
    let lx = r.read_f64::<LittleEndian>()?;
    let ly = r.read_f64::<LittleEndian>()?;
    let t = r.read_f64::<LittleEndian>()?;
    let step = r.read_u64::<LittleEndian>()?;
    let q_n = r.read_f64::<LittleEndian>()?;
    let q_nm1 = r.read_f64::<LittleEndian>()?;
    let tag = r.read_u32::<LittleEndian>()?;
    let scheme = SchemeKind::from_tag(tag).ok_or_else(|| corrupt(&format!("unknown scheme tag {tag}")))?;
    let grid = Grid2D::new(nx, ny, lx, ly).map_err(|e| corrupt(&e.to_string()))?;
    let expected = 2 * nx * ny * 8;
    if r.len() != expected {
        return Err(corrupt(&format!("payload is {} bytes, expected {expected}", r.len())));
    }
    let mut read_field = || -> Result<RealField2D<f64>> {
        let mut values = vec![0.0; nx * ny];
        r.read_f64_into::<LittleEndian>(&mut values)?;
        RealField2D::from_values(grid, values)
    };
    let omega_n = read_field()?;
    let omega_nm1 = read_field()?;
    Ok(Checkpoint { grid, t, step, q_n, q_nm1, scheme, omega_n, omega_nm1 })
}

fn spectral_levels(
    ckpt: &Checkpoint,
    transform: &mut Transform<f64>,
) -> Result<(SpectralField2D<f64>, SpectralField2D<f64>)> {
    transform.grid().check_same(&ckpt.grid)?;
    transform
        .forward_pair(&ckpt.omega_n, &ckpt.omega_nm1)
        .map_err(|_| Error::CorruptCheckpoint("non-finite vorticity".into()))
}

pub fn vorticity_from_checkpoint(
    ckpt: &Checkpoint,
    transform: &mut Transform<f64>,
) -> Result<SolverState<f64, SpectralField2D<f64>>> {
    let (w_n, w_nm1) = spectral_levels(ckpt, transform)?;
    Ok(SolverState { w_n, w_nm1, q_n: ckpt.q_n, q_nm1: ckpt.q_nm1, t: ckpt.t, step: ckpt.step })
}

/// Rebuilds velocities as `grad_perp` of the streamfunction of the stored
/// vorticity, i.e. assuming zero mean velocity.
pub fn velocity_from_checkpoint(
    ckpt: &Checkpoint,
    transform: &mut Transform<f64>,
) -> Result<SolverState<f64, Velocity<f64>>> {
    let (w_n, w_nm1) = spectral_levels(ckpt, transform)?;
    let to_u = |w: &SpectralField2D<f64>| -> Result<Velocity<f64>> {
        Ok(model::velocity_from_streamfunction(&w.inv_neg_laplacian_unchecked()))
    };
    Ok(SolverState {
        w_n: to_u(&w_n)?,
        w_nm1: to_u(&w_nm1)?,
        q_n: ckpt.q_n,
        q_nm1: ckpt.q_nm1,
        t: ckpt.t,
        step: ckpt.step,
    })
}

/// Replaces the state by exactly what a reload of its checkpoint yields, so
/// that a run resumed from the file continues bitwise identically to the
/// run that wrote it.
pub fn canonicalize_vorticity(
    state: &mut SolverState<f64, SpectralField2D<f64>>,
    scheme: SchemeKind,
    transform: &mut Transform<f64>,
) -> Result<Checkpoint> {
    let ckpt = Checkpoint::from_vorticity_state(state, scheme, transform);
    *state = vorticity_from_checkpoint(&ckpt, transform)?;
    Ok(ckpt)
}

/// Velocity counterpart of [`canonicalize_vorticity`].
pub fn canonicalize_velocity(
    state: &mut SolverState<f64, Velocity<f64>>,
    transform: &mut Transform<f64>,
) -> Result<Checkpoint> {
    let ckpt = Checkpoint::from_velocity_state(state, transform);
    *state = velocity_from_checkpoint(&ckpt, transform)?;
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let grid = Grid2D::periodic_2pi(8).unwrap();
        Checkpoint {
            grid,
            t: 5.0,
            step: 500,
            q_n: 1.0 - 1e-9,
            q_nm1: 1.0 + 1e-9,
            scheme: SchemeKind::FsavBdf2Sv,
            omega_n: RealField2D::from_fn(grid, |x, y| x.sin() * y.cos()),
            omega_nm1: RealField2D::from_fn(grid, |x, y| (x + y).sin() / 3.0),
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt_500.fsav");
        let ckpt = sample();
        write_checkpoint(&path, &ckpt).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), CHECKPOINT_HEADER_LEN + 2 * 64 * 8);
        assert_eq!(&bytes[..4], b"FSAV");
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back, ckpt);
    }

    #[test]
    fn truncated_and_bad_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.fsav");
        write_checkpoint(&path, &sample()).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::CorruptCheckpoint(_))));
        std::fs::write(&path, &bytes[..20]).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::CorruptCheckpoint(_))));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::CorruptCheckpoint(_))));

        let mut bad = bytes;
        bad[4] = 2;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::CorruptCheckpoint(_))));
    }

    #[test]
    fn canonical_state_matches_reload() {
        let ckpt = sample();
        let mut tr = Transform::new(ckpt.grid);
        let mut st = vorticity_from_checkpoint(&ckpt, &mut tr).unwrap();
        st.w_n = st.w_n.scale(1.0 / 3.0);
        let written = canonicalize_vorticity(&mut st, SchemeKind::FsavBdf2Sv, &mut tr).unwrap();
        assert_eq!(vorticity_from_checkpoint(&written, &mut tr).unwrap(), st);
    }
}
