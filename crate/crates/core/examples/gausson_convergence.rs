//! First-order convergence on the Gausson `u = e^{-16it} e^{-8x²}` with a
//! fixed `N = 200`, measured against the closed form.

use std::time::Instant;

use logse::harness::{dyadic_taus, run_sweep, Coupling, ReferenceSpec, SweepSpec, DEFAULT_MEASURE_TIMES};
use logse::initdata::{gausson_exact, gausson_residual, GaussonParams, InitialData};

fn main() -> logse::Result<()> {
    env_logger::init();
    let params = GaussonParams::standard();
    println!("|u0(±π)| = {:.3e}", gausson_exact(&params, &[std::f64::consts::PI], 0.0).norm());
    println!("PDE residual at t = 0.3: {:.2e}", gausson_residual(&params, 200, 4, 0.3)?);

    let u0 = InitialData::gausson(params)?;
    let spec = SweepSpec {
        lambda: -16.0,
        taus: dyadic_taus(7, 13),
        coupling: Coupling::Fixed(200),
        measure_times: DEFAULT_MEASURE_TIMES.to_vec(),
        reference: ReferenceSpec::ExactGausson,
        oversample: 4,
        eps: 0.0,
    };
    let start = Instant::now();
    let out = run_sweep(&u0, &spec, None)?;
    println!("{}", out.table.to_csv().render());
    for fit in &out.fits {
        println!("t = {:.1}: slope {:.4} (r² = {:.4})", fit.t, fit.slope, fit.r2);
    }
    for (tau, m) in &out.mass {
        println!("tau = {tau:.3e}: mass drift {:.2e}, monotone {}", m.max_rel_drift, m.monotone_ok);
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
