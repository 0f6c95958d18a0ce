use fsav::io::{self, InitialCondition};
use fsav::model::ForcingKind;
use fsav::spectral::{Grid2D, Transform};
use fsav::stepper::{PrimitiveStepper, SchemeConfig, SchemeKind, SolverState, SvStepper, TimeStepper};

fn kolmogorov(scheme: SchemeKind) -> SchemeConfig {
    let grid = Grid2D::periodic_2pi(32).unwrap();
    SchemeConfig::new(grid, 0.01, 100.0, scheme, ForcingKind::Kolmogorov { m: 2 })
}

fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

#[test]
fn vorticity_run_resumes_bitwise() {
    let cfg = kolmogorov(SchemeKind::FsavBdf2Sv);
    let mut tr = Transform::new(cfg.grid);
    let ic = InitialCondition::Random { amplitude: 0.5, band: 6 };
    let w0 = ic.vorticity(cfg.grid, cfg.forcing, 3, &mut tr).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt_500.fsav");

    let mut stepper = SvStepper::new(cfg).unwrap();
    let mut straight = SolverState::initial(w0);
    for step in 1..=1000 {
        straight = stepper.advance(&straight).unwrap().0;
        if step == 500 {
            let ckpt = io::canonicalize_vorticity(&mut straight, cfg.scheme, &mut tr).unwrap();
            io::write_checkpoint(&path, &ckpt).unwrap();
        }
    }

    let ckpt = io::read_checkpoint(&path).unwrap();
    assert_eq!(ckpt.step, 500);
    let mut resumed = io::vorticity_from_checkpoint(&ckpt, &mut tr).unwrap();
    let mut fresh = SvStepper::new(cfg).unwrap();
    for _ in 500..1000 {
        resumed = fresh.advance(&resumed).unwrap().0;
    }
    assert_eq!(resumed.step, straight.step);
    assert_eq!(resumed.q_n.to_bits(), straight.q_n.to_bits());
    let a = Levels::of(&straight, &mut tr);
    let b = Levels::of(&resumed, &mut tr);
    assert_eq!(bits(&a), bits(&b));
}

struct Levels;

impl Levels {
    fn of(state: &SolverState<f64, fsav::spectral::SpectralField2D<f64>>, tr: &mut Transform<f64>) -> Vec<f64> {
        let (a, b) = tr.inverse_pair(&state.w_n, &state.w_nm1);
        a.values.into_iter().chain(b.values).collect()
    }
}

#[test]
fn velocity_run_resumes_bitwise() {
    let cfg = kolmogorov(SchemeKind::FsavBdf2Primitive);
    let mut tr = Transform::new(cfg.grid);
    let ic = InitialCondition::Perturbed { amplitude: 0.1, mode: (1, 1) };
    let u0 = ic.velocity(cfg.grid, cfg.forcing, 0, &mut tr).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.fsav");

    let mut stepper = PrimitiveStepper::new(cfg).unwrap();
    let mut straight = SolverState::initial(u0);
    for step in 1..=200 {
        straight = stepper.advance(&straight).unwrap().0;
        if step == 100 {
            let ckpt = io::canonicalize_velocity(&mut straight, &mut tr).unwrap();
            io::write_checkpoint(&path, &ckpt).unwrap();
        }
    }
    let mut resumed = io::velocity_from_checkpoint(&io::read_checkpoint(&path).unwrap(), &mut tr).unwrap();
    let mut fresh = PrimitiveStepper::new(cfg).unwrap();
    for _ in 100..200 {
        resumed = fresh.advance(&resumed).unwrap().0;
    }
    let a = io::Checkpoint::from_velocity_state(&straight, &mut tr);
    let b = io::Checkpoint::from_velocity_state(&resumed, &mut tr);
    assert_eq!(a, b);
    assert_eq!(bits(&a.omega_n.values), bits(&b.omega_n.values));
}

#[test]
fn truncated_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.fsav");
    let cfg = kolmogorov(SchemeKind::FsavBdf2Sv);
    let mut tr = Transform::new(cfg.grid);
    let w0 = InitialCondition::Basic.vorticity(cfg.grid, cfg.forcing, 0, &mut tr).unwrap();
    let ckpt = io::Checkpoint::from_vorticity_state(&SolverState::initial(w0), cfg.scheme, &mut tr);
    io::write_checkpoint(&path, &ckpt).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 8);
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(io::read_checkpoint(&path), Err(fsav::Error::CorruptCheckpoint(_))));
}
