//! The free Schrödinger flow `e^{itΔ}` as a Fourier multiplier, and the
//! experiment showing that its `t^{r/2}` approximation rate is sharp.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::{fmt_f64, CsvTable};
use crate::spectral::{wave_number_squares, wave_vector, SpectralField, PERIOD};

/// `sin 1`, the upper end of the admissible `c₀` range.
pub const SIN_ONE: f64 = 0.841_470_984_807_896_5;

/// Multipliers `e^{-i|k|²t}` in storage order, from exact integer `|k|²`.
pub fn free_flow_multipliers(dim: usize, modes: usize, t: f64) -> Vec<Complex64> {
    wave_number_squares(dim, modes)
        .into_iter()
        .map(|k2| {
            let (sin, cos) = (-(k2 as f64) * t).sin_cos();
            Complex64::new(cos, sin)
        })
        .collect()
}

/// `Φ_A^t`: `û_k ↦ e^{-i|k|²t} û_k`. Negative `t` runs the flow backwards.
pub fn phi_a(field: &SpectralField, t: f64) -> SpectralField {
    let mut out = field.clone();
    let mult = free_flow_multipliers(field.dim(), field.modes(), t);
    for (c, m) in out.coeffs_mut().iter_mut().zip(mult) {
        *c *= m;
    }
    out
}

/// The unique `ξ ∈ (1, π)` with `sin ξ / ξ = c₀`, by bisection.
pub fn sinc_inverse(c0: f64) -> Result<f64> {
    check_c0(c0)?;
    let sinc = |x: f64| x.sin() / x;
    let (mut lo, mut hi) = (1.0f64, std::f64::consts::PI);
    // sinc is strictly decreasing on (0, π)
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if sinc(mid) > c0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_c0(c0: f64) -> Result<()> {
    if !(c0 > 0.0 && c0 < SIN_ONE) {
        return Err(Error::invalid("c0", format!("{c0} outside (0, sin 1)")));
    }
    Ok(())
}

/// Endpoints of the `|k|²` window `[(2/t) arcsin c₀, (2/t) sinc⁻¹ c₀]`.
///
/// `sin⁻¹` here is the functional inverse `arcsin`, not `1/sin`.
pub fn kc0_window(c0: f64, t: f64) -> Result<(f64, f64)> {
    check_c0(c0)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("window needs t > 0, got {t}")));
    }
    Ok((2.0 / t * c0.asin(), 2.0 / t * sinc_inverse(c0)?))
}

fn in_window(k2: i64, window: (f64, f64)) -> bool {
    let k2 = k2 as f64;
    k2 >= window.0 && k2 <= window.1 && k2 > 0.0
}

/// Modes whose free-flow phase shift is bounded below by `c₀`.
#[derive(Clone, Debug, Serialize)]
pub struct Kc0Set {
    pub c0: f64,
    pub t: f64,
    pub dim: usize,
    pub window: (f64, f64),
    pub members: Vec<Vec<i64>>,
}

impl Kc0Set {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        in_window(k.iter().map(|x| x * x).sum(), self.window)
    }
}

/// Enumerates every `k` with `|k_i| <= kmax` inside the window.
pub fn build_kc0(c0: f64, t: f64, kmax: usize, dim: usize) -> Result<Kc0Set> {
    let window = kc0_window(c0, t)?;
    let k2 = wave_number_squares(dim, kmax);
    let members = k2
        .iter()
        .enumerate()
        .filter(|(_, &k2)| in_window(k2, window))
        .map(|(flat, _)| wave_vector(dim, kmax, flat))
        .collect();
    Ok(Kc0Set {
        c0,
        t,
        dim,
        window,
        members,
    })
}

/// `g(ξ; s) = sin ξ / ξ^s`.
pub fn sinc_kernel(xi: f64, s: f64) -> f64 {
    xi.sin() / xi.powf(s)
}

/// Exact shift error and both bounds for `‖Φ_A^t[v₀] - v₀‖`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FreeFlowReport {
    pub r: f64,
    pub t: f64,
    pub c0: f64,
    pub err: f64,
    pub upper: f64,
    pub lower: f64,
    pub holds_upper: bool,
    pub holds_lower: bool,
}

pub fn free_flow_experiment(v0: &SpectralField, r: f64, t: f64, c0: f64) -> Result<FreeFlowReport> {
    if !(0.0..=2.0).contains(&r) {
        return Err(Error::invalid("r", format!("{r} outside [0, 2]")));
    }
    let window = kc0_window(c0, t)?;
    let k2 = wave_number_squares(v0.dim(), v0.modes());
    let mut shift = 0.0;
    let mut windowed = 0.0;
    for (c, &k2) in v0.coeffs().iter().zip(&k2) {
        if k2 == 0 {
            continue;
        }
        let half_phase = 0.5 * k2 as f64 * t;
        shift += half_phase.sin().powi(2) * c.norm_sqr();
        if in_window(k2, window) {
            windowed += (k2 as f64).powf(r) * c.norm_sqr();
        }
    }
    let volume_root = PERIOD.powf(v0.dim() as f64 / 2.0);
    let err = 2.0 * volume_root * shift.sqrt();
    let prefactor = 2f64.powf(1.0 - r / 2.0) * t.powf(r / 2.0);
    let upper = prefactor * v0.hs_seminorm(r);
    let lower = if t < 1.0 {
        prefactor * volume_root * c0 * windowed.sqrt()
    } else {
        0.0
    };
    let slack = |x: f64| crate::nonlinear::RELATIVE_SLACK * x.max(1.0);
    Ok(FreeFlowReport {
        r,
        t,
        c0,
        err,
        upper,
        lower,
        holds_upper: err <= upper + slack(upper),
        holds_lower: err + slack(err) >= lower,
    })
}

/// One row per experiment: `r,t,c0,err,upper,lower`.
pub fn free_flow_csv(reports: &[FreeFlowReport]) -> CsvTable {
    let mut table = CsvTable::new(&["r", "t", "c0", "err", "upper", "lower"]);
    for rep in reports {
        table.push([rep.r, rep.t, rep.c0, rep.err, rep.upper, rep.lower].iter().map(|&x| fmt_f64(x)).collect());
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(rng: &mut ChaCha8Rng, modes: usize) -> SpectralField {
        SpectralField::from_fn(1, modes, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn identity_at_zero_time_and_single_mode_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(&mut rng, 8);
        assert_eq!(phi_a(&u, 0.0), u);
        let e1 = SpectralField::single_mode(1, 3, &[1], Complex64::new(1.0, 0.0)).unwrap();
        let out = phi_a(&e1, PI);
        assert!((out.get(&[1]) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unitary_reversible_and_composable() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let u = random_field(&mut rng, 24);
            let t = rng.gen_range(-3.0..3.0);
            let v = phi_a(&u, t);
            for s in [0.0, 0.5, 1.0] {
                assert!((v.hs_norm(s) - u.hs_norm(s)).abs() <= 1e-15 * u.hs_norm(s) * 4.0);
                assert!((v.hs_seminorm(s) - u.hs_seminorm(s)).abs() <= 1e-14 * u.hs_seminorm(s));
            }
            let back = phi_a(&v, -t);
            assert!(back.difference(&u).unwrap().l2_norm() <= 1e-13 * u.l2_norm());
            let t2 = rng.gen_range(-1.0..1.0);
            let composed = phi_a(&phi_a(&u, t), t2);
            let direct = phi_a(&u, t + t2);
            assert!(composed.difference(&direct).unwrap().l2_norm() <= 1e-13 * u.l2_norm() * 10.0);
        }
    }

    #[test]
    fn sinc_inverse_values() {
        let xi = sinc_inverse(0.1).unwrap();
        assert!((xi - 2.8523).abs() < 1e-4);
        assert!((xi.sin() / xi - 0.1).abs() < 1e-12);
        assert!((xi - 0.1f64.asin() - 2.75).abs() < 0.01);
        let near = sinc_inverse(SIN_ONE - 1e-9).unwrap();
        assert!(near > 1.0 && near - 1.0 < 1e-4);
        for bad in [0.0, -0.1, SIN_ONE, 0.9] {
            assert!(sinc_inverse(bad).is_err());
        }
    }

    #[test]
    fn sinc_inverse_half_matches_scan() {
        let xi = sinc_inverse(0.5).unwrap();
        // scan oracle on (1, π)
        let n = 1_000_000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..n {
            let x = 1.0 + (PI - 1.0) * i as f64 / n as f64;
            let d = (x.sin() - 0.5 * x).abs();
            if d < best.0 {
                best = (d, x);
            }
        }
        assert!((xi - best.1).abs() < 3e-6);
        assert!((xi.sin() - 0.5 * xi).abs() < 1e-12);
    }

    #[test]
    fn kc0_membership_for_c0_point_one() {
        let set = build_kc0(0.1, 0.01, 40, 1).unwrap();
        let mut ks: Vec<i64> = set.members.iter().map(|k| k[0].abs()).collect();
        ks.sort();
        ks.dedup();
        assert_eq!(ks, (5..=23).collect::<Vec<_>>());
        // integer scan oracle on the window endpoints
        let lo = 200.0 * 0.1f64.asin();
        let hi = 200.0 * sinc_inverse(0.1).unwrap();
        assert!((lo - 20.03).abs() < 0.01 && (hi - 570.5).abs() < 0.1);
        for k in 1..=40i64 {
            let k2 = (k * k) as f64;
            assert_eq!(set.contains(&[k]), k2 >= lo && k2 <= hi);
        }
        // g(ξ; s) >= c₀ on every member for s ∈ [0, 1]
        for k in &set.members {
            let xi = 0.5 * (k[0] * k[0]) as f64 * 0.01;
            for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
                assert!(sinc_kernel(xi, s) >= 0.1 - 1e-15, "k={k:?} s={s}");
            }
        }
    }

    #[test]
    fn kc0_empty_for_large_time() {
        // window [2 arcsin(c0)/t, 2 sinc^{-1}(c0)/t] below 1 excludes every k != 0
        let set = build_kc0(0.1, 10.0, 10, 1).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn free_flow_single_mode_and_constant() {
        let t = 0.01;
        let v = SpectralField::single_mode(1, 12, &[10], Complex64::new(1.0, 0.0)).unwrap();
        let r = free_flow_experiment(&v, 1.0, t, 0.1).unwrap();
        assert!(r.holds_upper && r.holds_lower);
        let ratio = r.err / (t.sqrt() * v.hs_seminorm(1.0));
        assert!(ratio >= 2f64.sqrt() * 0.1 && ratio <= 2f64.sqrt());

        let c = SpectralField::single_mode(1, 4, &[0], Complex64::new(2.0, 0.0)).unwrap();
        let r = free_flow_experiment(&c, 1.5, 0.1, 0.1).unwrap();
        assert_eq!(r.err, 0.0);
        assert!(r.holds_upper && r.holds_lower);
    }

    #[test]
    fn free_flow_random_fields_on_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &t in &[1e-3, 1e-2] {
            let set = build_kc0(0.1, t, 80, 1).unwrap();
            for _ in 0..100 {
                let v = SpectralField::from_fn(1, 80, |k| {
                    if set.contains(k) {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .unwrap();
                let r = rng.gen_range(0.0..=2.0);
                let rep = free_flow_experiment(&v, r, t, 0.1).unwrap();
                assert!(rep.holds_upper && rep.holds_lower, "{rep:?}");
            }
        }
    }
}
