//! The free flow `e^{itΔ}` moves `v₀` by exactly `2|T|^{1/2}(Σ sin²(k²t/2)|v̂_k|²)^{1/2}`.
//! This is bounded by `2^{1-r/2} t^{r/2} |v₀|_{H^r}`, and the rate is sharp on the
//! band of modes where `sin(k²t/2)` stays above `c₀ (k²t/2)`.

use logse::harness::free_flow_sweep;
use logse::propagator::{build_kc0, sinc_inverse, free_flow_experiment};
use logse::spectral::SpectralField;
use num_complex::Complex64;

fn main() -> logse::Result<()> {
    let c0 = 0.1;
    let xi = sinc_inverse(c0)?;
    println!("sinc^-1({c0}) = {xi:.6}, window length {:.4}", xi - c0.asin());

    let t = 0.01;
    let band = build_kc0(c0, t, 64, 1)?;
    let ks: Vec<i64> = band.members.iter().map(|k| k[0]).filter(|&k| k > 0).collect();
    println!("t = {t}: k² in [{:.2}, {:.2}], positive members {:?}", band.window.0, band.window.1, ks);

    // a single band mode: the ratio err / (√t |v|_{H¹}) sits in [√2 c₀, √2]
    let v = SpectralField::single_mode(1, 64, &[10], Complex64::new(1.0, 0.0))?;
    let rep = free_flow_experiment(&v, 1.0, t, c0)?;
    let ratio = rep.err / (t.sqrt() * v.hs_seminorm(1.0));
    println!("mode 10: err {:.4e}, lower {:.4e}, upper {:.4e}, ratio {ratio:.4}", rep.err, rep.lower, rep.upper);

    let summary = free_flow_sweep(11, 100)?;
    println!(
        "random sweep: upper {}/{} violations, lower {}/{} violations",
        summary.upper_violations, summary.upper_samples, summary.lower_violations, summary.lower_samples
    );
    Ok(())
}
