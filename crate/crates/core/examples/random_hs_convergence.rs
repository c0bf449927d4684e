//! Fractional-order convergence on random data with `û_k = a_k/|k|^{s+β}`.
//!
//! Sweeps `τ = 2^-7 … 2^-13` with `N = floor(1/√τ)` against a `τ = 2^-16`,
//! `N = 256` reference and fits the slope at `t = 0.4, 0.7, 1`.
//!
//! ```bash
//! cargo run --release --example random_hs_convergence -- 0.8   # s (default 0.8)
//! ```

use std::time::Instant;

use logse::harness::{dyadic_taus, run_sweep, Coupling, ReferenceSpec, SweepSpec, DEFAULT_MEASURE_TIMES};
use logse::initdata::{InitialData, RandomHsParams, DEFAULT_RANDOM_CUTOFF};

fn main() -> logse::Result<()> {
    env_logger::init();
    let s: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.8);
    let u0 = InitialData::random_hs(RandomHsParams {
        s,
        beta: 0.51,
        cutoff: DEFAULT_RANDOM_CUTOFF,
        seed: 42,
    })?;
    print!("{}", u0.data_card());

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
    let start = Instant::now();
    let out = run_sweep(&u0, &spec, logse::harness::cache_dir_from_env().as_deref())?;
    println!("\n{}", out.table.to_csv().render());
    for fit in &out.fits {
        println!("t = {:.1}: slope {:.3} (r² = {:.4}), expected about s/2 = {:.2}", fit.t, fit.slope, fit.r2, s / 2.0);
    }
    let drift = out.mass.iter().map(|m| m.1.max_rel_drift).fold(0.0, f64::max);
    println!("max mass drift {drift:.2e}, elapsed {:.1?}", start.elapsed());
    Ok(())
}
