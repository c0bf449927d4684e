use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{mode_count, PhysicalField, SpectralField, TorusGrid};
use crate::error::{Error, Result};

/// FFT plans and scratch space for one torus grid.
///
/// Holds mutable workspaces, so each worker owns its own instance.
pub struct SpectralTransform {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    lane: Vec<Complex64>,
    // (cutoff, fft slot and sign per coefficient)
    index_map: Option<(usize, Vec<(usize, f64)>)>,
}

impl std::fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralTransform").field("grid", &self.grid).finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.nodes());
        let inverse = planner.plan_fft_inverse(grid.nodes());
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            grid,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            lane: vec![Complex64::new(0.0, 0.0); grid.nodes()],
            index_map: None,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn check_modes(&self, dim: usize, modes: usize) -> Result<()> {
        if dim != self.grid.dim() {
            return Err(Error::Dimension {
                expected: self.grid.dim(),
                found: dim,
            });
        }
        if self.grid.nodes() < 2 * modes + 1 {
            return Err(Error::Aliasing {
                nodes: self.grid.nodes(),
                modes,
            });
        }
        Ok(())
    }

    fn slots(&mut self, modes: usize) -> &[(usize, f64)] {
        let stale = !matches!(&self.index_map, Some((n, _)) if *n == modes);
        if stale {
            let dim = self.grid.dim();
            let m = self.grid.nodes();
            let side = 2 * modes + 1;
            let map = (0..mode_count(dim, modes))
                .map(|flat| {
                    let mut idx = flat;
                    let mut slot = 0usize;
                    let mut place = 1usize;
                    let mut parity = 0i64;
                    for _ in 0..dim {
                        let k = (idx % side) as i64 - modes as i64;
                        idx /= side;
                        parity += k;
                        slot += k.rem_euclid(m as i64) as usize * place;
                        place *= m;
                    }
                    (slot, if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 })
                })
                .collect();
            self.index_map = Some((modes, map));
        }
        &self.index_map.as_ref().expect("index map").1
    }

    fn transform_all_axes(&mut self, buffer: &mut [Complex64], inverse: bool) {
        let m = self.grid.nodes();
        let dim = self.grid.dim();
        let plan = if inverse { &self.inverse } else { &self.forward };
        // Last axis is contiguous.
        plan.process_with_scratch(buffer, &mut self.scratch);
        for axis in (0..dim.saturating_sub(1)).rev() {
            let stride = m.pow((dim - 1 - axis) as u32);
            let outer = m.pow(axis as u32);
            for o in 0..outer {
                for inner in 0..stride {
                    let base = o * m * stride + inner;
                    for j in 0..m {
                        self.lane[j] = buffer[base + j * stride];
                    }
                    plan.process_with_scratch(&mut self.lane, &mut self.scratch);
                    for j in 0..m {
                        buffer[base + j * stride] = self.lane[j];
                    }
                }
            }
        }
    }

    /// Nodal values of the trigonometric polynomial into `out` (resized to `M^d`).
    pub fn synthesize_into(&mut self, field: &SpectralField, out: &mut Vec<Complex64>) -> Result<()> {
        self.check_modes(field.dim(), field.modes())?;
        out.clear();
        out.resize(self.grid.len(), Complex64::new(0.0, 0.0));
        let slots = self.slots(field.modes()).to_vec();
        for (&(slot, sign), &c) in slots.iter().zip(field.coeffs()) {
            out[slot] = c * sign;
        }
        self.transform_all_axes(out, true);
        Ok(())
    }

    /// Discrete Fourier coefficients on `K_N^d` of the nodal values in `values`.
    /// The buffer is overwritten.
    pub fn forward_from(&mut self, values: &mut [Complex64], modes: usize) -> Result<SpectralField> {
        self.check_modes(self.grid.dim(), modes)?;
        if values.len() != self.grid.len() {
            return Err(Error::invalid("values", "buffer length does not match grid"));
        }
        if let Some(index) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "forward transform input",
            });
        }
        self.transform_all_axes(values, false);
        let scale = 1.0 / self.grid.len() as f64;
        let slots = self.slots(modes);
        let coeffs = slots
            .iter()
            .map(|&(slot, sign)| values[slot] * (sign * scale))
            .collect();
        SpectralField::new(self.grid.dim(), modes, coeffs)
    }

    pub fn synthesize(&mut self, field: &SpectralField) -> Result<PhysicalField> {
        let mut out = Vec::new();
        self.synthesize_into(field, &mut out)?;
        Ok(PhysicalField::from_parts_unchecked(self.grid, out))
    }

    pub fn forward(&mut self, field: &PhysicalField, modes: usize) -> Result<SpectralField> {
        if field.grid().nodes() != self.grid.nodes() || field.grid().dim() != self.grid.dim() {
            return Err(Error::invalid("field", "field grid differs from transform grid"));
        }
        let mut buffer = field.values().to_vec();
        self.forward_from(&mut buffer, modes)
    }
}

/// Discrete Fourier coefficients on `K_N^d` from nodal values.
///
/// Exact for trigonometric polynomials of degree `<= M - N - 1`.
pub fn forward(field: &PhysicalField, modes: usize) -> Result<SpectralField> {
    let grid = *field.grid();
    if grid.nodes() < 2 * modes + 1 {
        return Err(Error::Aliasing {
            nodes: grid.nodes(),
            modes,
        });
    }
    SpectralTransform::new(grid).forward(field, modes)
}

/// Nodal values on the `q`-oversampled grid (`M` = next power of two `>= q(2N+1)`).
pub fn synthesize(field: &SpectralField, oversample: usize) -> Result<PhysicalField> {
    let grid = TorusGrid::oversampled(field.dim(), field.modes(), oversample)?;
    SpectralTransform::new(grid).synthesize(field)
}
