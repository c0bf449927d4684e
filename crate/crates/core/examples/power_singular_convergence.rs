//! Convergence for `u₀ = |x|^γ e^{2ix}`, which sits in `H^s` for `s < γ + 1/2`.
//!
//! ```bash
//! cargo run --release --example power_singular_convergence -- 0.3
//! cargo run --release --example power_singular_convergence -- 0.5
//! ```

use std::time::Instant;

use logse::harness::{dyadic_taus, run_sweep, Coupling, ReferenceSpec, SweepSpec, DEFAULT_MEASURE_TIMES};
use logse::initdata::{InitialData, PowerSingularParams, DEFAULT_POWER_CUTOFF};
use logse::quadrature::QuadratureSpec;

fn main() -> logse::Result<()> {
    env_logger::init();
    let gamma: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.3);
    let start = Instant::now();
    let params = PowerSingularParams { gamma, ell: 2 };
    let u0 = InitialData::power_singular(params, DEFAULT_POWER_CUTOFF, &QuadratureSpec::default())?;
    print!("{}", u0.data_card());
    println!("coefficients ready after {:.1?}", start.elapsed());

    let spec = SweepSpec {
        lambda: -1.0,
        taus: dyadic_taus(7, 13),
        coupling: Coupling::Sqrt,
        measure_times: DEFAULT_MEASURE_TIMES.to_vec(),
        reference: ReferenceSpec::Numeric {
            tau: 2f64.powi(-16),
            modes: 256,
        },
        oversample: 4,
        eps: 0.0,
    };
    let out = run_sweep(&u0, &spec, logse::harness::cache_dir_from_env().as_deref())?;
    let target = (params.regularity().min(1.0)) / 2.0;
    for fit in &out.fits {
        println!("t = {:.1}: slope {:.3} (r² = {:.4}), expected about {target:.2}", fit.t, fit.slope, fit.r2);
    }
    let drift = out.mass.iter().map(|m| m.1.max_rel_drift).fold(0.0, f64::max);
    println!("max mass drift {drift:.2e}, elapsed {:.1?}", start.elapsed());
    Ok(())
}
