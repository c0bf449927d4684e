//! Physical-side fractional energy of `|x|^γ` against its closed-form bound,
//! and the per-mode equivalence ratios `B̃_n / n^{2s}`.

use logse::initdata::{gagliardo_bound_check, PowerSingularParams};
use logse::quadrature::QuadratureSpec;
use logse::spectral::mode_kernel_ratio_bounds;

fn main() -> logse::Result<()> {
    let quad = QuadratureSpec::default();
    let rep = gagliardo_bound_check(&PowerSingularParams { gamma: 0.3, ell: 0 }, 0.2, 1024, &quad)?;
    println!(
        "|x|^0.3 at s = 0.2: energy {:.6} (refined {:.6}), bound {:.4}, holds {}, self-consistency {:.1e}",
        rep.value,
        rep.refined_value,
        rep.bound,
        rep.holds,
        rep.self_consistency()
    );
    for s in [0.2, 0.5, 0.8] {
        let b = mode_kernel_ratio_bounds(s, 512, &quad)?;
        println!(
            "s = {s}: B_n/n^2s in [{:.4} (n={}), {:.4} (n={})], spread {:.3}",
            b.min,
            b.argmin,
            b.max,
            b.argmax,
            b.spread()
        );
    }
    Ok(())
}
