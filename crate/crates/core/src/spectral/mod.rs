//! Periodic torus grids, Fourier coefficient fields and the norms defined on them.
//!
//! Coefficients are stored for the index set `K_N^d = {k : |k_i| <= N}` in natural
//! order (`k_i = -N..=N`, row-major over dimensions). Physical fields hold nodal
//! values on the uniform grid `x_j = -π + j·2π/M` in each dimension.

mod io;
mod norms;
mod transform;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{decode, encode, read_coefficients, write_coefficients, write_coefficients_csv, CoefficientHeader, MAGIC};
pub use norms::{
    gagliardo_energy_1d, gagliardo_seminorm_1d, inverse_inequality_check, mode_kernel,
    mode_kernel_ratio_bounds, InverseInequalityReport, KernelRatioBounds,
};
pub use transform::{forward, synthesize, SpectralTransform};

/// Length of the period in each dimension, `|T| = 2π`.
pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;

/// Default over-quadrature factor.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Uniform grid on `[-π, π)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    modes: usize,
    nodes: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, modes: usize, nodes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be positive"));
        }
        if nodes < 2 * modes + 1 || nodes < 2 {
            return Err(Error::Aliasing { nodes, modes });
        }
        Ok(Self { dim, modes, nodes })
    }

    /// Grid whose node count is the smallest power of two `>= q·(2N+1)`.
    pub fn oversampled(dim: usize, modes: usize, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("oversample", "oversampling factor must be at least 1"));
        }
        let nodes = (q * (2 * modes + 1)).next_power_of_two().max(2);
        Self::new(dim, modes, nodes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Nodes per dimension, `M`.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Total number of nodes, `M^d`.
    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        PERIOD / self.nodes as f64
    }

    /// Quadrature weight of one node, `(2π/M)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// One-dimensional node coordinate `x_j = -π + j·2π/M`.
    pub fn coordinate(&self, j: usize) -> f64 {
        -std::f64::consts::PI + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.coordinate(j)).collect()
    }

    /// Coordinates of the node with flat (row-major) index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = flat;
        let mut x = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            x[axis] = self.coordinate(idx % self.nodes);
            idx /= self.nodes;
        }
        x
    }
}

/// Validated Sobolev order for the norm routines.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const L2: SobolevIndex = SobolevIndex(0.0);
    pub const H1: SobolevIndex = SobolevIndex(1.0);

    pub fn new(s: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&s) {
            return Err(Error::invalid("s", format!("Sobolev order {s} outside [0, 2]")));
        }
        Ok(Self(s))
    }

    /// Order restricted to the fractional range `(0, 1)`.
    pub fn fractional(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::invalid("s", format!("fractional order {s} outside (0, 1)")));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Number of coefficients in `K_N^d`.
pub fn mode_count(dim: usize, modes: usize) -> usize {
    (2 * modes + 1).pow(dim as u32)
}

/// Wave vector of the coefficient with flat index `flat`.
pub fn wave_vector(dim: usize, modes: usize, flat: usize) -> Vec<i64> {
    let side = 2 * modes + 1;
    let mut idx = flat;
    let mut k = vec![0i64; dim];
    for axis in (0..dim).rev() {
        k[axis] = (idx % side) as i64 - modes as i64;
        idx /= side;
    }
    k
}

/// `|k|^2` for every coefficient, in storage order. Exact integers.
pub fn wave_number_squares(dim: usize, modes: usize) -> Vec<i64> {
    let side = 2 * modes + 1;
    let one_d: Vec<i64> = (0..side as i64).map(|i| (i - modes as i64).pow(2)).collect();
    let mut out = vec![0i64; mode_count(dim, modes)];
    for (flat, v) in out.iter_mut().enumerate() {
        let mut idx = flat;
        let mut acc = 0;
        for _ in 0..dim {
            acc += one_d[idx % side];
            idx /= side;
        }
        *v = acc;
    }
    out
}

/// Fourier coefficients on `K_N^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    dim: usize,
    modes: usize,
    coeffs: Vec<Complex64>,
}

/// A full coefficient list with some cutoff `K`; the same representation as a field.
pub type CoefficientList = SpectralField;

impl SpectralField {
    pub fn new(dim: usize, modes: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "dimension must be positive"));
        }
        let expected = mode_count(dim, modes);
        if coeffs.len() != expected {
            return Err(Error::invalid(
                "coeffs",
                format!("expected {expected} coefficients for d={dim}, N={modes}, got {}", coeffs.len()),
            ));
        }
        if let Some(index) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "spectral coefficient",
            });
        }
        Ok(Self { dim, modes, coeffs })
    }

    pub fn zeros(dim: usize, modes: usize) -> Self {
        Self {
            dim,
            modes,
            coeffs: vec![Complex64::new(0.0, 0.0); mode_count(dim, modes)],
        }
    }

    /// Builds a field from a function of the wave vector.
    pub fn from_fn<F: FnMut(&[i64]) -> Complex64>(dim: usize, modes: usize, mut f: F) -> Result<Self> {
        let coeffs = (0..mode_count(dim, modes))
            .map(|flat| f(&wave_vector(dim, modes, flat)))
            .collect();
        Self::new(dim, modes, coeffs)
    }

    pub fn single_mode(dim: usize, modes: usize, k: &[i64], value: Complex64) -> Result<Self> {
        let mut field = Self::zeros(dim, modes);
        let idx = field
            .index_of(k)
            .ok_or_else(|| Error::invalid("k", format!("{k:?} outside K_N for N={modes}")))?;
        field.coeffs[idx] = value;
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let n = self.modes as i64;
        let side = 2 * self.modes + 1;
        let mut flat = 0usize;
        for &ki in k {
            if ki.abs() > n {
                return None;
            }
            flat = flat * side + (ki + n) as usize;
        }
        Some(flat)
    }

    /// Coefficient for wave vector `k`, zero outside `K_N^d`.
    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Iterates `(k, û_k)` pairs.
    pub fn iter_modes(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(flat, &c)| (wave_vector(self.dim, self.modes, flat), c))
    }

    /// Truncation `Π_N` onto `K_N^d`.
    pub fn project(&self, modes: usize) -> Result<SpectralField> {
        if modes > self.modes {
            return Err(Error::Cutoff {
                available: self.modes,
                requested: modes,
            });
        }
        self.resize(modes)
    }

    /// Zero-pads to a larger cutoff.
    pub fn zero_pad(&self, modes: usize) -> Result<SpectralField> {
        if modes < self.modes {
            return Err(Error::invalid(
                "modes",
                format!("cannot zero-pad N={} down to {modes}", self.modes),
            ));
        }
        self.resize(modes)
    }

    fn resize(&self, modes: usize) -> Result<SpectralField> {
        let mut out = SpectralField::zeros(self.dim, modes);
        let shared = self.modes.min(modes) as i64;
        for flat in 0..out.coeffs.len() {
            let k = wave_vector(self.dim, modes, flat);
            if k.iter().all(|ki| ki.abs() <= shared) {
                out.coeffs[flat] = self.get(&k);
            }
        }
        Ok(out)
    }

    /// `self - other`, after zero-padding both to the larger cutoff.
    pub fn difference(&self, other: &SpectralField) -> Result<SpectralField> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        let modes = self.modes.max(other.modes);
        let mut a = self.zero_pad(modes)?;
        let b = other.zero_pad(modes)?;
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= y;
        }
        Ok(a)
    }

    pub fn scaled(&self, factor: Complex64) -> SpectralField {
        SpectralField {
            dim: self.dim,
            modes: self.modes,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `‖u‖ = |T|^{d/2} (Σ |û_k|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (PERIOD.powi(self.dim as i32) * sum).sqrt()
    }

    /// `|u|_{H^s} = |T|^{d/2} (Σ_{k≠0} |k|^{2s} |û_k|²)^{1/2}`.
    ///
    /// # Panics
    /// If `s` is outside `[0, 2]`.
    pub fn hs_seminorm(&self, s: f64) -> f64 {
        let s = SobolevIndex::new(s).expect("hs_seminorm order").value();
        self.weighted_sum(|k2| if k2 == 0 { 0.0 } else { (k2 as f64).powf(s) })
    }

    /// `‖u‖_{H^s} = |T|^{d/2} (Σ (1+|k|²)^s |û_k|²)^{1/2}`.
    ///
    /// # Panics
    /// If `s` is outside `[0, 2]`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let s = SobolevIndex::new(s).expect("hs_norm order").value();
        self.weighted_sum(|k2| (1.0 + k2 as f64).powf(s))
    }

    fn weighted_sum(&self, weight: impl Fn(i64) -> f64) -> f64 {
        let k2 = wave_number_squares(self.dim, self.modes);
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(&k2)
            .map(|(c, &k2)| weight(k2) * c.norm_sqr())
            .sum();
        (PERIOD.powi(self.dim as i32) * sum).sqrt()
    }
}

/// Nodal values on a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: TorusGrid,
    values: Vec<Complex64>,
}

impl PhysicalField {
    pub fn new(grid: TorusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} nodal values, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(index) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "nodal value",
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(grid: TorusGrid, mut f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|j| f(&grid.point(j))).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: TorusGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Trapezoidal `L²` norm; equals the spectral norm for band-limited data.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (self.grid.cell_volume() * sum).sqrt()
    }

    /// Largest nodal modulus (an approximation of the continuum `L∞` norm).
    pub fn grid_linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖u - v‖` by the trapezoidal rule.
    pub fn l2_distance(&self, other: &PhysicalField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (self.grid.cell_volume() * sum).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_rejects_aliasing() {
        assert!(matches!(TorusGrid::new(1, 5, 10), Err(Error::Aliasing { nodes: 10, modes: 5 })));
        assert!(TorusGrid::new(1, 5, 11).is_ok());
    }

    #[test]
    fn oversampled_grid_is_power_of_two() {
        let g = TorusGrid::oversampled(1, 200, 4).unwrap();
        assert_eq!(g.nodes(), 2048);
        let g = TorusGrid::oversampled(1, 64, 1).unwrap();
        assert_eq!(g.nodes(), 256);
        assert!(TorusGrid::oversampled(1, 4, 0).is_err());
    }

    #[test]
    fn grid_nodes_start_at_minus_pi() {
        let g = TorusGrid::new(1, 2, 8).unwrap();
        assert_eq!(g.coordinate(0), -PI);
        assert!((g.coordinate(4)).abs() < 1e-15);
        let g2 = TorusGrid::new(2, 1, 4).unwrap();
        assert_eq!(g2.point(5), vec![-PI + PI / 2.0, -PI + PI / 2.0]);
    }

    #[test]
    fn constant_l2_norm_is_sqrt_two_pi() {
        let u = SpectralField::single_mode(1, 3, &[0], c(1.0, 0.0)).unwrap();
        assert!((u.l2_norm() - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((u.l2_norm() - 2.50663).abs() < 1e-5);
    }

    #[test]
    fn two_mode_l2_norm() {
        let mut u = SpectralField::zeros(1, 3);
        let (i, j) = (u.index_of(&[1]).unwrap(), u.index_of(&[-1]).unwrap());
        u.coeffs_mut()[i] = c(1.0, 0.0);
        u.coeffs_mut()[j] = c(1.0, 0.0);
        assert!((u.l2_norm() - (4.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn seminorm_excludes_zero_mode() {
        let u = SpectralField::single_mode(1, 4, &[0], c(5.0, 0.0)).unwrap();
        assert_eq!(u.hs_seminorm(1.0), 0.0);
        assert_eq!(u.hs_seminorm(0.0), 0.0);
        let v = SpectralField::single_mode(1, 4, &[2], c(1.0, 0.0)).unwrap();
        assert!((v.hs_seminorm(0.5) - (2.0 * PI).sqrt() * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hs_norm_single_modes() {
        let u = SpectralField::single_mode(1, 4, &[0], c(1.0, 0.0)).unwrap();
        for s in [0.0, 0.3, 1.0, 2.0] {
            assert!((u.hs_norm(s) - (2.0 * PI).sqrt()).abs() < 1e-14);
        }
        let v = SpectralField::single_mode(1, 4, &[1], c(1.0, 0.0)).unwrap();
        assert!((v.hs_norm(1.0) - (2.0 * PI).sqrt() * 2f64.sqrt()).abs() < 1e-14);
        let w = SpectralField::single_mode(2, 2, &[0, 0], c(1.0, 0.0)).unwrap();
        assert!((w.hs_norm(0.7) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    #[should_panic]
    fn seminorm_order_out_of_range_panics() {
        SpectralField::zeros(1, 2).hs_seminorm(2.5);
    }

    #[test]
    fn projection_drops_high_modes_and_is_idempotent() {
        let u = SpectralField::single_mode(1, 6, &[5], c(1.0, 2.0)).unwrap();
        let p = u.project(4).unwrap();
        assert!(p.coeffs().iter().all(|c| c.norm() == 0.0));
        let w = SpectralField::from_fn(1, 8, |k| c(k[0] as f64, 1.0)).unwrap();
        let once = w.project(5).unwrap();
        assert_eq!(once.project(5).unwrap(), once);
        assert!(matches!(w.project(9), Err(Error::Cutoff { available: 8, requested: 9 })));
    }

    #[test]
    fn rejects_non_finite_coefficients() {
        let mut coeffs = vec![c(0.0, 0.0); 5];
        coeffs[3] = c(f64::NAN, 0.0);
        assert!(matches!(SpectralField::new(1, 2, coeffs), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn wave_vectors_round_trip_through_index() {
        let f = SpectralField::zeros(3, 2);
        for flat in 0..f.coeffs().len() {
            let k = wave_vector(3, 2, flat);
            assert_eq!(f.index_of(&k), Some(flat));
        }
        let k2 = wave_number_squares(2, 1);
        assert_eq!(k2, vec![2, 1, 2, 1, 0, 1, 2, 1, 2]);
    }

    #[test]
    fn difference_zero_pads() {
        let a = SpectralField::single_mode(1, 2, &[1], c(1.0, 0.0)).unwrap();
        let b = SpectralField::single_mode(1, 4, &[3], c(0.0, 1.0)).unwrap();
        let d = a.difference(&b).unwrap();
        assert_eq!(d.modes(), 4);
        assert_eq!(d.get(&[1]), c(1.0, 0.0));
        assert_eq!(d.get(&[3]), c(0.0, -1.0));
    }
}
