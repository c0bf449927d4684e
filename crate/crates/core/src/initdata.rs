//! Initial data families: the Gausson (with its closed-form solution), random
//! decaying Fourier coefficients, and the power singularity `|x|^γ e^{iℓx}`.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_graded, QuadratureSpec};
use crate::spectral::{
    gagliardo_energy_1d, PhysicalField, SpectralField, SpectralTransform, TorusGrid, PERIOD,
};

/// Default cutoff for random coefficient data.
pub const DEFAULT_RANDOM_CUTOFF: usize = 100_000;
/// Default cutoff for power-singularity data.
pub const DEFAULT_POWER_CUTOFF: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussonParams {
    pub lambda: f64,
    pub b: f64,
    /// Velocity `ζ`; its length is the dimension.
    pub zeta: Vec<f64>,
}

impl GaussonParams {
    /// The standing Gausson used in the accuracy tests: `λ = -16`, `b = 1`, `ζ = 0`, `d = 1`.
    pub fn standard() -> Self {
        Self {
            lambda: -16.0,
            b: 1.0,
            zeta: vec![0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    /// `a = -λ(d - ln b²)`.
    pub fn frequency(&self) -> f64 {
        -self.lambda * (self.dim() as f64 - (self.b * self.b).ln())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda != 0.0) {
            return Err(Error::invalid("lambda", "Gausson needs a finite nonzero coupling"));
        }
        if self.lambda > 0.0 {
            log::warn!("Gausson with lambda > 0 grows at infinity and is not periodic on the torus");
        }
        if !(self.b.is_finite() && self.b != 0.0) {
            return Err(Error::invalid("b", "Gausson amplitude must be finite and nonzero"));
        }
        if self.zeta.is_empty() || self.zeta.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("zeta", "velocity must be a nonempty finite vector"));
        }
        if !self.frequency().is_finite() {
            return Err(Error::invalid("b", "a = -λ(d - ln b²) is not finite"));
        }
        Ok(())
    }
}

/// `u(x,t) = b exp{i(x·ζ - (a+|ζ|²)t) + (λ/2)|x - 2ζt|²}`.
pub fn gausson_exact(params: &GaussonParams, x: &[f64], t: f64) -> Complex64 {
    let a = params.frequency();
    let zeta2: f64 = params.zeta.iter().map(|z| z * z).sum();
    let x_dot_zeta: f64 = x.iter().zip(&params.zeta).map(|(x, z)| x * z).sum();
    let shifted2: f64 = x.iter().zip(&params.zeta).map(|(x, z)| (x - 2.0 * z * t).powi(2)).sum();
    let phase = x_dot_zeta - (a + zeta2) * t;
    let (sin, cos) = phase.sin_cos();
    params.b * (0.5 * params.lambda * shifted2).exp() * Complex64::new(cos, sin)
}

/// Grid sup-norm of the residual `i∂_t u + Δu - λu ln|u|²` of the closed form,
/// with `∂_t u` exact and `Δu` spectral on `N` modes.
pub fn gausson_residual(params: &GaussonParams, modes: usize, oversample: usize, t: f64) -> Result<f64> {
    params.validate()?;
    let dim = params.dim();
    let grid = TorusGrid::oversampled(dim, modes, oversample)?;
    let mut transform = SpectralTransform::new(grid);
    let nodal = PhysicalField::from_fn(grid, |x| gausson_exact(params, x, t))?;
    let coeffs = transform.forward(&nodal, modes)?;
    let mut laplacian = coeffs.clone();
    let k2 = crate::spectral::wave_number_squares(dim, modes);
    for (c, k2) in laplacian.coeffs_mut().iter_mut().zip(k2) {
        *c *= -(k2 as f64);
    }
    let lap = transform.synthesize(&laplacian)?;
    let a = params.frequency();
    let zeta2: f64 = params.zeta.iter().map(|z| z * z).sum();
    let mut worst = 0.0f64;
    for (j, (&u, &du)) in nodal.values().iter().zip(lap.values()).enumerate() {
        let x = grid.point(j);
        let drift: f64 = x
            .iter()
            .zip(&params.zeta)
            .map(|(x, z)| (x - 2.0 * z * t) * (-2.0 * z))
            .sum();
        let dt = u * Complex64::new(params.lambda * drift, -(a + zeta2));
        let nonlinear = params.lambda * crate::nonlinear::f(u);
        let residual = Complex64::new(0.0, 1.0) * dt + du - nonlinear;
        worst = worst.max(residual.norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomHsParams {
    pub s: f64,
    pub beta: f64,
    pub cutoff: usize,
    pub seed: u64,
}

impl RandomHsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::invalid("s", format!("{} outside (0, 1]", self.s)));
        }
        if !(self.beta > 0.5 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", format!("{} must exceed 1/2", self.beta)));
        }
        if self.cutoff == 0 {
            return Err(Error::invalid("K", "cutoff must be positive"));
        }
        Ok(())
    }

    /// `2^{s+1}/(2β-1)`, the bound on `Σ (1+k²)^s |û_k|²`.
    pub fn norm_bound(&self) -> f64 {
        2f64.powf(self.s + 1.0) / (2.0 * self.beta - 1.0)
    }
}

/// `û_0 = 0`, `û_k = a_k / |k|^{s+β}` with `Re a_k, Im a_k` uniform on `[-1, 1]`.
///
/// Draws are made in the order `k = 1, -1, 2, -2, …` (real part then imaginary
/// part) from a ChaCha20 stream, so a smaller cutoff is a prefix of a larger one.
pub fn random_hs_coeffs(params: &RandomHsParams) -> Result<SpectralField> {
    params.validate()?;
    let k_max = params.cutoff;
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k_max + 1];
    let exponent = params.s + params.beta;
    for n in 1..=k_max {
        let decay = (n as f64).powf(-exponent);
        for k in [n as i64, -(n as i64)] {
            let re = 2.0 * rng.gen::<f64>() - 1.0;
            let im = 2.0 * rng.gen::<f64>() - 1.0;
            coeffs[(k + k_max as i64) as usize] = Complex64::new(re, im) * decay;
        }
    }
    SpectralField::new(1, k_max, coeffs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSingularParams {
    pub gamma: f64,
    pub ell: i64,
}

impl PowerSingularParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma", format!("{} outside (0, 1]", self.gamma)));
        }
        Ok(())
    }

    /// Sobolev index `γ + 1/2` the data just fails to exceed.
    pub fn regularity(&self) -> f64 {
        self.gamma + 0.5
    }
}

/// Cosine coefficients `c_m = (1/π) ∫_0^π x^γ cos(mx) dx` of `|x|^γ` for `m = 0..=m_max`.
///
/// For `m >= 1` the integral is first integrated by parts,
/// `c_m = -(γ/(πm)) ∫_0^π x^{γ-1} sin(mx) dx`, which keeps the quadrature sum
/// free of the cancellation that a direct cosine sum suffers at large `m`.
pub fn power_cosine_coeffs(gamma: f64, m_max: usize, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let pi = std::f64::consts::PI;
    let spec = QuadratureSpec {
        rel_tol: quad.rel_tol.min(1e-11),
        ..*quad
    };
    (0..=m_max)
        .into_par_iter()
        .map(|m| {
            if m == 0 {
                return Ok(pi.powf(gamma) / (gamma + 1.0));
            }
            let mf = m as f64;
            let integral = integrate_graded(
                0.0,
                pi,
                mf,
                &spec,
                || format!("|x|^{gamma} coefficient, mode {m}"),
                |x| x.powf(gamma - 1.0) * (mf * x).sin(),
            )?;
            Ok(-gamma / (pi * mf) * integral)
        })
        .collect()
}

/// Coefficients of `|x|^γ e^{iℓx}` for `k = -K..=K`: `û_k = c_{|k-ℓ|}`.
pub fn power_singular_coeffs(params: &PowerSingularParams, cutoff: usize, quad: &QuadratureSpec) -> Result<SpectralField> {
    params.validate()?;
    if cutoff < params.ell.unsigned_abs() as usize + 1 {
        return Err(Error::invalid("K", format!("cutoff {cutoff} must exceed |ℓ| = {}", params.ell.abs())));
    }
    let k_max = cutoff as i64;
    let m_max = (k_max + params.ell.abs()) as usize;
    let cosines = power_cosine_coeffs(params.gamma, m_max, quad)?;
    let coeffs = (-k_max..=k_max)
        .map(|k| Complex64::new(cosines[(k - params.ell).unsigned_abs() as usize], 0.0))
        .collect();
    SpectralField::new(1, cutoff, coeffs)
}

/// Both sides of the Gagliardo bound for `|x|^γ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GagliardoBoundReport {
    pub gamma: f64,
    pub s: f64,
    pub cutoff: usize,
    /// The double integral over the coefficient list.
    pub value: f64,
    /// The same with the refined quadrature rule.
    pub refined_value: f64,
    /// `(2π)^{2γ-2s+1} / ((γ-s)(2γ-2s+1))`.
    pub bound: f64,
    pub holds: bool,
}

impl GagliardoBoundReport {
    pub fn self_consistency(&self) -> f64 {
        (self.value - self.refined_value).abs() / self.refined_value.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn gagliardo_bound(gamma: f64, s: f64) -> f64 {
    let e = 2.0 * gamma - 2.0 * s + 1.0;
    PERIOD.powf(e) / ((gamma - s) * e)
}

/// Computes the Gagliardo energy of `|x|^γ` from its coefficients (cutoff `K`)
/// and compares it with the closed-form bound; requires `0 < s < γ`.
pub fn gagliardo_bound_check(
    params: &PowerSingularParams,
    s: f64,
    cutoff: usize,
    quad: &QuadratureSpec,
) -> Result<GagliardoBoundReport> {
    params.validate()?;
    if !(s > 0.0 && s < params.gamma) {
        return Err(Error::invalid("s", format!("bound needs 0 < s < γ = {}, got {s}", params.gamma)));
    }
    let phi = PowerSingularParams {
        gamma: params.gamma,
        ell: 0,
    };
    let coarse = power_singular_coeffs(&phi, cutoff, quad)?;
    let value = gagliardo_energy_1d(&coarse, s, quad)?;
    let refined_quad = quad.refined();
    let fine = power_singular_coeffs(&phi, cutoff, &refined_quad)?;
    let refined_value = gagliardo_energy_1d(&fine, s, &refined_quad)?;
    let bound = gagliardo_bound(params.gamma, s);
    Ok(GagliardoBoundReport {
        gamma: params.gamma,
        s,
        cutoff,
        value,
        refined_value,
        bound,
        holds: value <= bound && refined_value <= bound,
    })
}

/// Which family an initial datum belongs to, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gausson(GaussonParams),
    RandomHs(RandomHsParams),
    PowerSingular { gamma: f64, ell: i64, cutoff: usize },
    CoefficientFile { label: String },
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Evaluator(Evaluator),
    Coefficients(Arc<SpectralField>),
}

/// An initial datum `u₀` together with the Sobolev index it targets and its norm there.
#[derive(Clone)]
pub struct InitialData {
    family: Family,
    dim: usize,
    hs_index: f64,
    hs_norm: f64,
    source: Source,
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialData")
            .field("family", &self.family)
            .field("hs_index", &self.hs_index)
            .field("hs_norm", &self.hs_norm)
            .finish()
    }
}

impl InitialData {
    /// Gausson at `t = 0`. Its reference norm is the `H¹` norm, evaluated spectrally.
    pub fn gausson(params: GaussonParams) -> Result<Self> {
        params.validate()?;
        let dim = params.dim();
        let probe_modes = 256;
        let grid = TorusGrid::oversampled(dim, probe_modes, 4)?;
        let p = params.clone();
        let nodal = PhysicalField::from_fn(grid, |x| gausson_exact(&p, x, 0.0))?;
        let coeffs = SpectralTransform::new(grid).forward(&nodal, probe_modes)?;
        let hs_index = 1.0;
        let hs_norm = coeffs.hs_norm(hs_index);
        let eval_params = params.clone();
        Ok(Self {
            family: Family::Gausson(params),
            dim,
            hs_index,
            hs_norm,
            source: Source::Evaluator(Arc::new(move |x| gausson_exact(&eval_params, x, 0.0))),
        })
    }

    pub fn random_hs(params: RandomHsParams) -> Result<Self> {
        let coeffs = random_hs_coeffs(&params)?;
        Self::with_coefficients(Family::RandomHs(params), coeffs, params.s)
    }

    /// `|x|^γ e^{iℓx}`; its reference index is `γ + 1/2` (capped at 1 for the `H¹` case),
    /// with the norm summed over the available coefficients.
    pub fn power_singular(params: PowerSingularParams, cutoff: usize, quad: &QuadratureSpec) -> Result<Self> {
        let coeffs = power_singular_coeffs(&params, cutoff, quad)?;
        let family = Family::PowerSingular {
            gamma: params.gamma,
            ell: params.ell,
            cutoff,
        };
        Self::with_coefficients(family, coeffs, params.regularity().min(1.0))
    }

    pub fn from_coefficients(coeffs: SpectralField, hs_index: f64, label: impl Into<String>) -> Result<Self> {
        Self::with_coefficients(Family::CoefficientFile { label: label.into() }, coeffs, hs_index)
    }

    fn with_coefficients(family: Family, coeffs: SpectralField, hs_index: f64) -> Result<Self> {
        let hs_norm = coeffs.hs_norm(hs_index);
        if !(hs_norm > 0.0) {
            return Err(Error::invalid("u0", "initial data has zero norm"));
        }
        Ok(Self {
            family,
            dim: coeffs.dim(),
            hs_index,
            hs_norm,
            source: Source::Coefficients(Arc::new(coeffs)),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hs_index(&self) -> f64 {
        self.hs_index
    }

    /// `‖u₀‖_{H^s}` at [`Self::hs_index`].
    pub fn hs_norm(&self) -> f64 {
        self.hs_norm
    }

    pub fn coefficients(&self) -> Option<&SpectralField> {
        match &self.source {
            Source::Coefficients(c) => Some(c),
            Source::Evaluator(_) => None,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Option<Complex64> {
        match &self.source {
            Source::Evaluator(f) => Some(f(x)),
            Source::Coefficients(_) => None,
        }
    }

    /// `Π_N u₀`: truncation of a coefficient list, or the discrete transform of
    /// the evaluator on the `q`-oversampled grid.
    pub fn project(&self, modes: usize, oversample: usize) -> Result<SpectralField> {
        match &self.source {
            Source::Coefficients(c) => c.project(modes),
            Source::Evaluator(f) => {
                let grid = TorusGrid::oversampled(self.dim, modes, oversample)?;
                let nodal = PhysicalField::from_fn(grid, |x| f(x))?;
                SpectralTransform::new(grid).forward(&nodal, modes)
            }
        }
    }

    /// Human-readable summary: family, parameters, seed, cutoff and norms.
    pub fn data_card(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "family: {}", family_name(&self.family));
        match &self.family {
            Family::Gausson(p) => {
                let _ = writeln!(out, "lambda: {}\nb: {}\nzeta: {:?}\na: {}", p.lambda, p.b, p.zeta, p.frequency());
            }
            Family::RandomHs(p) => {
                let _ = writeln!(
                    out,
                    "s: {}\nbeta: {}\nK: {}\nseed: {}\nrng: ChaCha20, draw order k = 1, -1, 2, -2, ...",
                    p.s, p.beta, p.cutoff, p.seed
                );
                let _ = writeln!(out, "norm_bound_2^(s+1)/(2beta-1): {}", p.norm_bound());
            }
            Family::PowerSingular { gamma, ell, cutoff } => {
                let _ = writeln!(out, "gamma: {gamma}\nell: {ell}\nK: {cutoff}");
            }
            Family::CoefficientFile { label } => {
                let _ = writeln!(out, "source: {label}");
            }
        }
        if let Some(c) = self.coefficients() {
            let _ = writeln!(out, "l2_norm: {}", c.l2_norm());
        }
        let _ = writeln!(out, "hs_index: {}\nhs_norm: {}", self.hs_index, self.hs_norm);
        out
    }
}

pub fn family_name(family: &Family) -> &'static str {
    match family {
        Family::Gausson(_) => "gausson",
        Family::RandomHs(_) => "random_hs",
        Family::PowerSingular { .. } => "power_singular",
        Family::CoefficientFile { .. } => "coefficient_file",
    }
}
