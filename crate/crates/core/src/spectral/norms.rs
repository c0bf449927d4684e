use rayon::prelude::*;
use serde::Serialize;

use super::{synthesize, SobolevIndex, SpectralField, PERIOD};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_graded, QuadratureSpec};

/// Per-mode Gagliardo kernel `B̃_n = ∫_T |e^{inx} - 1|² / |x|^{1+2s} dx`.
///
/// Evaluated as `8 ∫_0^π sin²(nx/2) / x^{1+2s} dx`; the integrand behaves like
/// `x^{1-2s}` at the origin, which the graded panels absorb.
pub fn mode_kernel(n: i64, s: f64, quad: &QuadratureSpec) -> Result<f64> {
    let s = SobolevIndex::fractional(s)?.value();
    if n == 0 {
        return Ok(0.0);
    }
    let nf = n.unsigned_abs() as f64;
    let exponent = 1.0 + 2.0 * s;
    let half = 0.5 * nf;
    let integral = integrate_graded(
        0.0,
        std::f64::consts::PI,
        nf,
        quad,
        || format!("Gagliardo kernel n={n}, s={s}"),
        |x| {
            let sn = (half * x).sin();
            sn * sn / x.powf(exponent)
        },
    )?;
    Ok(8.0 * integral)
}

/// `∫_T ∫_T |u(x+y) - u(y)|² / |x|^{1+2s} dx dy` for a one-dimensional coefficient list,
/// computed as `|T| Σ_{n≠0} |û_n|² B̃_n`.
pub fn gagliardo_energy_1d(field: &SpectralField, s: f64, quad: &QuadratureSpec) -> Result<f64> {
    if field.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: field.dim(),
        });
    }
    SobolevIndex::fractional(s)?;
    let n = field.modes() as i64;
    let coeffs = field.coeffs();
    let weights: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|m| {
            let amp = coeffs[(n + m) as usize].norm_sqr() + coeffs[(n - m) as usize].norm_sqr();
            if amp == 0.0 {
                Ok(0.0)
            } else {
                mode_kernel(m, s, quad).map(|b| amp * b)
            }
        })
        .collect::<Result<_>>()?;
    Ok(PERIOD * weights.iter().sum::<f64>())
}

/// Square root of [`gagliardo_energy_1d`].
pub fn gagliardo_seminorm_1d(field: &SpectralField, s: f64, quad: &QuadratureSpec) -> Result<f64> {
    gagliardo_energy_1d(field, s, quad).map(f64::sqrt)
}

/// Empirical range of `B̃_n |n|^{-2s}` over `n = 1..=n_max`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelRatioBounds {
    pub s: f64,
    pub n_max: i64,
    pub min: f64,
    pub argmin: i64,
    pub max: f64,
    pub argmax: i64,
}

impl KernelRatioBounds {
    /// `max / min`, the measured spread of the two-sided equivalence.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

pub fn mode_kernel_ratio_bounds(s: f64, n_max: i64, quad: &QuadratureSpec) -> Result<KernelRatioBounds> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "need at least one mode"));
    }
    let ratios: Vec<(i64, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| mode_kernel(n, s, quad).map(|b| (n, b / (n as f64).powf(2.0 * s))))
        .collect::<Result<_>>()?;
    let (argmin, min) = ratios
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |acc, r| if r.1 < acc.1 { r } else { acc });
    let (argmax, max) = ratios
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |acc, r| if r.1 > acc.1 { r } else { acc });
    Ok(KernelRatioBounds {
        s,
        n_max,
        min,
        argmin,
        max,
        argmax,
    })
}

/// Both sides of `‖φ‖_∞ <= ((2N+1)/|T|)^{d/2} ‖φ‖` for `φ ∈ X_N^d`.
///
/// `linf` is the largest modulus on an oversampled grid, a lower bound for the
/// continuum supremum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InverseInequalityReport {
    pub linf: f64,
    pub l2: f64,
    pub bound: f64,
    pub oversample: usize,
    pub holds: bool,
}

pub fn inverse_inequality_check(field: &SpectralField) -> Result<InverseInequalityReport> {
    const OVERSAMPLE: usize = 8;
    let nodal = synthesize(field, OVERSAMPLE)?;
    let linf = nodal.grid_linf();
    let l2 = field.l2_norm();
    let factor = ((2 * field.modes() + 1) as f64 / PERIOD).powf(field.dim() as f64 / 2.0);
    let bound = factor * l2;
    Ok(InverseInequalityReport {
        linf,
        l2,
        bound,
        oversample: OVERSAMPLE,
        holds: linf <= bound + 1e-12 * bound.max(1.0),
    })
}
