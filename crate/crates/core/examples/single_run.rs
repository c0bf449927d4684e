//! One trajectory from a Gausson, step by step, with the mass trace and the
//! distance to the closed-form solution. Artifacts go to a temporary directory.

use logse::harness::{gausson_coeffs, mass_report};
use logse::initdata::{GaussonParams, InitialData};
use logse::splitting::{init, run, SnapshotMeta, SolverConfig, Stepper};

fn main() -> logse::Result<()> {
    let params = GaussonParams::standard();
    let u0 = InitialData::gausson(params.clone())?;
    let config = SolverConfig::new(-16.0, 1e-3, 1.0, 200).with_snapshots(&[0.25, 0.5, 1.0]);

    // manual stepping
    let mut stepper = Stepper::new(&config)?;
    let mut state = init(&u0, &config)?;
    for _ in 0..10 {
        stepper.step(&mut state)?;
    }
    println!("after 10 steps: mass {:.15}", state.mass);

    // the whole run
    let traj = run(&u0, &config)?;
    for snap in &traj.snapshots {
        let exact = gausson_coeffs(&params, snap.time, 200, 4)?;
        let err = snap.coeffs.difference(&exact)?.l2_norm();
        println!("t = {:.2}: error vs closed form {err:.3e}", snap.time);
    }
    let report = mass_report(&traj);
    println!("mass drift {:.2e}, monotone {}", report.max_rel_drift, report.monotone_ok);

    let dir = std::env::temp_dir().join("logse-single-run");
    for (file, sha) in traj.write_artifacts(&dir, SnapshotMeta::default())? {
        println!("{}  {file}", &sha[..12]);
    }
    Ok(())
}
