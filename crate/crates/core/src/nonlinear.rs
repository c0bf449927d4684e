//! The logarithmic nonlinearity, its regularization, and the pointwise flows
//! `Φ_B^t[w] = w·e^{-iλt ln|w|²}` and `Φ_B^{t,ε}[w] = w·e^{-iλt ln(|w|+ε)²}`.
//!
//! Zero is a fixed point of every map here (`f(0) = 0`, `Φ_B^t[0] = 0`). The test
//! for zero is exact equality: tiny moduli go through the logarithm unchanged,
//! since a floor would amount to regularizing the non-regularized flow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{PhysicalField, SpectralField, SpectralTransform, TorusGrid, PERIOD};

/// Relative slack used by every inequality check.
pub const RELATIVE_SLACK: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coupling `λ` and regularization `ε` (zero for the non-regularized flow).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinParams {
    lambda: f64,
    eps: f64,
}

impl NonlinParams {
    pub fn new(lambda: f64, eps: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda != 0.0) {
            return Err(Error::invalid("lambda", format!("coupling must be finite and nonzero, got {lambda}")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::invalid("eps", format!("regularization must be finite and >= 0, got {eps}")));
        }
        Ok(Self { lambda, eps })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_regularized(&self) -> bool {
        self.eps > 0.0
    }

    /// Lipschitz growth factor `1 + 2|λ|t` of the nonlinear flow.
    pub fn growth(&self, t: f64) -> f64 {
        1.0 + 2.0 * self.lambda.abs() * t
    }
}

/// `f(z) = z ln|z|²`, with `f(0) = 0`.
pub fn f(z: Complex64) -> Complex64 {
    if z == ZERO {
        return ZERO;
    }
    z * (2.0 * z.norm().ln())
}

/// `f^ε(z) = z ln(|z| + ε)²`.
pub fn f_eps(z: Complex64, eps: f64) -> Result<Complex64> {
    require_eps(eps)?;
    Ok(z * (2.0 * (z.norm() + eps).ln()))
}

fn require_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps", format!("regularized map needs eps > 0, got {eps}")));
    }
    Ok(())
}

fn require_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("flow time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// One value of `Φ_B^t`: the phase is `-2λt ln|w|`, a single log of the modulus.
#[inline]
pub fn rotate(w: Complex64, lambda: f64, t: f64) -> Complex64 {
    if w == ZERO {
        return ZERO;
    }
    let (sin, cos) = (-2.0 * lambda * t * w.norm().ln()).sin_cos();
    w * Complex64::new(cos, sin)
}

/// One value of `Φ_B^{t,ε}`.
#[inline]
pub fn rotate_eps(w: Complex64, lambda: f64, eps: f64, t: f64) -> Complex64 {
    let (sin, cos) = (-2.0 * lambda * t * (w.norm() + eps).ln()).sin_cos();
    w * Complex64::new(cos, sin)
}

/// In-place `Φ_B^t` (or `Φ_B^{t,ε}` when `params` is regularized).
pub fn apply_nonlinear_flow(values: &mut [Complex64], params: &NonlinParams, t: f64) {
    let lambda = params.lambda;
    if params.is_regularized() {
        let eps = params.eps;
        values.iter_mut().for_each(|w| *w = rotate_eps(*w, lambda, eps, t));
    } else {
        values.iter_mut().for_each(|w| *w = rotate(*w, lambda, t));
    }
}

/// `Φ_B^t[w]`, ignoring `params.eps`.
pub fn phi_b(field: &PhysicalField, params: &NonlinParams, t: f64) -> Result<PhysicalField> {
    require_time(t)?;
    let values = field.values().iter().map(|&w| rotate(w, params.lambda, t)).collect();
    PhysicalField::new(*field.grid(), values)
}

/// `Φ_B^{t,ε}[w]`; requires `params.eps > 0`.
pub fn phi_b_eps(field: &PhysicalField, params: &NonlinParams, t: f64) -> Result<PhysicalField> {
    require_time(t)?;
    require_eps(params.eps)?;
    let values = field
        .values()
        .iter()
        .map(|&w| rotate_eps(w, params.lambda, params.eps, t))
        .collect();
    PhysicalField::new(*field.grid(), values)
}

/// Two sides of an inequality `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Relative slack applied as `slack·max(1, rhs)`.
    pub slack: f64,
}

impl InequalityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack: RELATIVE_SLACK,
        }
    }

    pub fn with_slack(lhs: f64, rhs: f64, slack: f64) -> Self {
        Self { lhs, rhs, slack }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// Margin relative to `max(1, rhs)`, comparable across inequalities.
    pub fn scaled_margin(&self) -> f64 {
        self.margin() / self.rhs.abs().max(1.0)
    }

    pub fn holds(&self) -> bool {
        self.lhs.is_finite() && self.rhs.is_finite() && self.margin() >= -self.slack * self.rhs.abs().max(1.0)
    }
}

/// `|f^ε(z) - f(z)| <= 2ε`.
pub fn eps_gap_check(z: Complex64, eps: f64) -> Result<InequalityCheck> {
    Ok(InequalityCheck::new((f_eps(z, eps)? - f(z)).norm(), 2.0 * eps))
}

/// Both Hölder-type bounds for a pair of complex numbers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderPairReport {
    /// `|f^ε(z₂) - f^ε(z₁)| <= 2(|ln(ζ+ε)| + 1)|z₁ - z₂|`
    pub regularized: InequalityCheck,
    /// `|f(z₁) - f(z₂)| <= 4ε + 2(|ln(ζ+ε)| + 1)|z₁ - z₂|`
    pub unregularized: InequalityCheck,
}

impl HolderPairReport {
    pub fn holds(&self) -> bool {
        self.regularized.holds() && self.unregularized.holds()
    }
}

pub fn holder_pair_check(z1: Complex64, z2: Complex64, eps: f64) -> Result<HolderPairReport> {
    require_eps(eps)?;
    let zeta = z1.norm().max(z2.norm());
    let factor = 2.0 * ((zeta + eps).ln().abs() + 1.0);
    let dist = (z1 - z2).norm();
    let regularized = InequalityCheck::new((f_eps(z2, eps)? - f_eps(z1, eps)?).norm(), factor * dist);
    let unregularized = InequalityCheck::new((f(z1) - f(z2)).norm(), 4.0 * eps + factor * dist);
    Ok(HolderPairReport {
        regularized,
        unregularized,
    })
}

/// `|Im{(f(z₁) - f(z₂))(z̄₁ - z̄₂)}| <= 2|z₁ - z₂|²`.
pub fn ch_monotonicity_check(z1: Complex64, z2: Complex64) -> InequalityCheck {
    let lhs = ((f(z1) - f(z2)) * (z1 - z2).conj()).im.abs();
    InequalityCheck::new(lhs, 2.0 * (z1 - z2).norm_sqr())
}

/// Worst node pair for `|Φ_B[w](x) - Φ_B[w](y)| <= (1+2|λ|t)|w(x) - w(y)|`.
pub fn pointwise_lipschitz_check(w: &PhysicalField, params: &NonlinParams, t: f64) -> Result<InequalityCheck> {
    let rotated = phi_b(w, params, t)?;
    let growth = params.growth(t);
    let (a, b) = (w.values(), rotated.values());
    let mut worst = InequalityCheck::new(0.0, 0.0);
    let mut worst_margin = f64::INFINITY;
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let check = InequalityCheck::new((b[i] - b[j]).norm(), growth * (a[i] - a[j]).norm());
            let m = check.scaled_margin();
            if m < worst_margin {
                worst_margin = m;
                worst = check;
            }
        }
    }
    Ok(worst)
}

/// `‖Φ_B[u] - Φ_B[v]‖ <= (1+2|λ|t)‖u - v‖` on the grid.
pub fn l2_lipschitz_check(u: &PhysicalField, v: &PhysicalField, params: &NonlinParams, t: f64) -> Result<InequalityCheck> {
    let lhs = phi_b(u, params, t)?.l2_distance(&phi_b(v, params, t)?);
    Ok(InequalityCheck::new(lhs, params.growth(t) * u.l2_distance(v)))
}

/// Largest nodal gap `|Φ_B^{t,ε}[w] - Φ_B^t[w]|` against `2|λ|tε`.
pub fn regularized_gap_check(w: &PhysicalField, params: &NonlinParams, t: f64) -> Result<InequalityCheck> {
    let a = phi_b_eps(w, params, t)?;
    let b = phi_b(w, params, t)?;
    let gap = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok(InequalityCheck::new(gap, 2.0 * params.lambda.abs() * t * params.eps))
}

/// Slack budget for the discrete gradient-stability check.
pub const GRADIENT_SLACK: f64 = 1e-6;

/// `‖∇Φ_B^{t,ε}[w]‖ <= (1+2|λ|t)‖∇w‖` for `w ∈ X_N^d`.
///
/// The gradient of the rotated field is assembled node by node from the chain
/// rule, with `∇w` differentiated spectrally on an oversampled grid, and
/// integrated by the trapezoidal rule. The right side is the exact spectral
/// `H¹` seminorm.
pub fn gradient_stability_check(
    w: &SpectralField,
    params: &NonlinParams,
    t: f64,
    oversample: usize,
) -> Result<InequalityCheck> {
    require_time(t)?;
    require_eps(params.eps)?;
    let dim = w.dim();
    let grid = TorusGrid::oversampled(dim, w.modes(), oversample.max(8))?;
    let mut transform = SpectralTransform::new(grid);
    let nodal = transform.synthesize(w)?;
    let mut grads = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut dw = w.clone();
        for (flat, c) in dw.coeffs_mut().iter_mut().enumerate() {
            let k = crate::spectral::wave_vector(dim, w.modes(), flat)[axis];
            *c *= Complex64::new(0.0, k as f64);
        }
        grads.push(transform.synthesize(&dw)?.into_values());
    }
    let (lambda, eps) = (params.lambda, params.eps);
    let mut sum = 0.0;
    for (j, &wj) in nodal.values().iter().enumerate() {
        let modulus = wj.norm();
        let (sin, cos) = (-2.0 * lambda * t * (modulus + eps).ln()).sin_cos();
        let phase = Complex64::new(cos, sin);
        for g in &grads {
            let dwj = g[j];
            let d_modulus = if modulus > 0.0 { (wj.conj() * dwj).re / modulus } else { 0.0 };
            let term = dwj - Complex64::new(0.0, 2.0 * lambda * t) * (wj / (modulus + eps)) * d_modulus;
            sum += (phase * term).norm_sqr();
        }
    }
    let lhs = (grid.cell_volume() * sum).sqrt();
    Ok(InequalityCheck::with_slack(lhs, params.growth(t) * w.hs_seminorm(1.0), GRADIENT_SLACK))
}

/// `Υ(ε) = max{|ln ε|, ln(‖u‖_∞+1), ln(‖v‖_∞+1)} + 1`, with grid sup norms.
pub fn upsilon(eps: f64, linf_u: f64, linf_v: f64) -> f64 {
    eps.ln().abs().max((linf_u + 1.0).ln()).max((linf_v + 1.0).ln()) + 1.0
}

/// `‖f^ε(u) - f^ε(v)‖ <= 2Υ(ε)‖u - v‖` on the grid (`0 < ε < 1`).
pub fn f_eps_l2_stability_check(u: &PhysicalField, v: &PhysicalField, eps: f64) -> Result<InequalityCheck> {
    require_eps(eps)?;
    let lhs = map_distance(u, v, |z| z * (2.0 * (z.norm() + eps).ln()));
    let rhs = 2.0 * upsilon(eps, u.grid_linf(), v.grid_linf()) * u.l2_distance(v);
    Ok(InequalityCheck::new(lhs, rhs))
}

/// `‖f(u) - f(v)‖ <= 4|Ω|^{1/2}ε + 2Υ(ε)‖u - v‖` on the grid (`0 < ε < 1`).
pub fn f_l2_difference_check(u: &PhysicalField, v: &PhysicalField, eps: f64) -> Result<InequalityCheck> {
    require_eps(eps)?;
    let lhs = map_distance(u, v, f);
    let volume = PERIOD.powi(u.grid().dim() as i32);
    let rhs = 4.0 * volume.sqrt() * eps + 2.0 * upsilon(eps, u.grid_linf(), v.grid_linf()) * u.l2_distance(v);
    Ok(InequalityCheck::new(lhs, rhs))
}

fn map_distance(u: &PhysicalField, v: &PhysicalField, g: impl Fn(Complex64) -> Complex64) -> f64 {
    assert_eq!(u.grid(), v.grid(), "fields live on different grids");
    let sum: f64 = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(&a, &b)| (g(a) - g(b)).norm_sqr())
        .sum();
    (u.grid().cell_volume() * sum).sqrt()
}
