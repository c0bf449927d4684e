//! The Lie splitting stepper `u^{m+1} = Φ_A^τ Π_N Φ_B^τ [u^m]`.
//!
//! Each step synthesizes the current coefficients on the oversampled grid,
//! rotates every node by the logarithmic phase, transforms back and truncates
//! to `K_N`, then applies the free flow as a multiplier.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initdata::InitialData;
use crate::nonlinear::{apply_nonlinear_flow, NonlinParams};
use crate::output::{fmt_f64, sha256_file, CsvTable};
use crate::propagator::free_flow_multipliers;
use crate::spectral::{write_coefficients, SpectralField, SpectralTransform, TorusGrid, DEFAULT_OVERSAMPLE};

/// Tolerance on `T/τ` being an integer.
pub const STEP_TOLERANCE: f64 = 1e-9;
/// Relative per-step slack on mass monotonicity.
pub const MASS_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub tau: f64,
    pub final_time: f64,
    pub modes: usize,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Record the mass every `mass_stride` steps (the final step is always recorded).
    #[serde(default = "default_stride")]
    pub mass_stride: usize,
}

fn default_oversample() -> usize {
    DEFAULT_OVERSAMPLE
}

fn default_stride() -> usize {
    1
}

impl SolverConfig {
    pub fn new(lambda: f64, tau: f64, final_time: f64, modes: usize) -> Self {
        Self {
            lambda,
            tau,
            final_time,
            modes,
            oversample: DEFAULT_OVERSAMPLE,
            eps: 0.0,
            snapshot_times: vec![final_time],
            mass_stride: 1,
        }
    }

    pub fn with_snapshots(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        NonlinParams::new(self.lambda, self.eps)?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid("tau", format!("step must be positive, got {}", self.tau)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::invalid("T", format!("final time must be positive, got {}", self.final_time)));
        }
        if self.modes == 0 {
            return Err(Error::invalid("N", "mode cutoff must be positive"));
        }
        if self.oversample == 0 {
            return Err(Error::invalid("q", "oversampling factor must be positive"));
        }
        if self.mass_stride == 0 {
            return Err(Error::invalid("mass_stride", "must be positive"));
        }
        let ratio = self.final_time / self.tau;
        if (ratio - ratio.round()).abs() > STEP_TOLERANCE * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::invalid(
                "T",
                format!(
                    "T/tau = {ratio} is not an integer step count (tolerance {STEP_TOLERANCE:e}); partial final steps are not allowed"
                ),
            ));
        }
        let mut last = 0.0;
        for &t in &self.snapshot_times {
            if !(t > last && (t / self.tau).round() <= self.steps() as f64) {
                return Err(Error::invalid(
                    "snapshot_times",
                    format!("{t} must be increasing and map to a step inside (0, T = {}]", self.final_time),
                ));
            }
            last = t;
        }
        Ok(())
    }

    /// Number of steps `T/τ`.
    pub fn steps(&self) -> usize {
        (self.final_time / self.tau).round() as usize
    }

    /// Each snapshot time mapped to its nearest step index.
    pub fn snapshot_steps(&self) -> Vec<(f64, usize)> {
        self.snapshot_times.iter().map(|&t| (t, (t / self.tau).round() as usize)).collect()
    }

    pub fn nonlinearity(&self) -> Result<NonlinParams> {
        NonlinParams::new(self.lambda, self.eps)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::oversampled(1, self.modes, self.oversample)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub coeffs: SpectralField,
    pub step_index: usize,
    /// `‖u_N^m‖`.
    pub mass: f64,
}

impl SolverState {
    pub fn new(coeffs: SpectralField, step_index: usize) -> Self {
        let mass = coeffs.l2_norm();
        Self {
            coeffs,
            step_index,
            mass,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub coeffs: SpectralField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    /// `(step, t, ‖u‖)`.
    pub mass_trace: Vec<(usize, f64, f64)>,
    pub config: SolverConfig,
}

/// Reusable stepping machinery: transform plans, multipliers and a nodal buffer.
pub struct Stepper {
    config: SolverConfig,
    params: NonlinParams,
    transform: SpectralTransform,
    multipliers: Vec<Complex64>,
    buffer: Vec<Complex64>,
}

impl Stepper {
    pub fn new(config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = TorusGrid::oversampled(1, config.modes, config.oversample)?;
        Ok(Self {
            config: config.clone(),
            params: config.nonlinearity()?,
            transform: SpectralTransform::new(grid),
            multipliers: free_flow_multipliers(1, config.modes, config.tau),
            buffer: Vec::with_capacity(grid.len()),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Advances `state` by one step in place.
    pub fn step(&mut self, state: &mut SolverState) -> Result<()> {
        let step = state.step_index + 1;
        self.transform.synthesize_into(&state.coeffs, &mut self.buffer)?;
        apply_nonlinear_flow(&mut self.buffer, &self.params, self.config.tau);
        let mut next = self
            .transform
            .forward_from(&mut self.buffer, self.config.modes)
            .map_err(|e| match e {
                Error::NonFinite { index, .. } => Error::NumericalAbort { step, node: index },
                other => other,
            })?;
        for (c, m) in next.coeffs_mut().iter_mut().zip(&self.multipliers) {
            *c *= m;
        }
        if let Some(node) = next.coeffs().iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NumericalAbort { step, node });
        }
        *state = SolverState::new(next, step);
        Ok(())
    }
}

/// `u_N^0 = Π_N u₀`.
pub fn init(u0: &InitialData, config: &SolverConfig) -> Result<SolverState> {
    config.validate()?;
    if u0.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: u0.dim(),
        });
    }
    let coeffs = u0.project(config.modes, config.oversample)?;
    Ok(SolverState::new(coeffs, 0))
}

/// One step, allocating a fresh [`Stepper`]. Prefer [`Stepper`] in loops.
pub fn step(state: &SolverState, config: &SolverConfig) -> Result<SolverState> {
    let mut next = state.clone();
    Stepper::new(config)?.step(&mut next)?;
    Ok(next)
}

/// Runs `T/τ` steps from an explicit starting state.
pub fn run_from(initial: SolverState, config: &SolverConfig) -> Result<Trajectory> {
    let mut stepper = Stepper::new(config)?;
    let total = config.steps();
    let targets = config.snapshot_steps();
    let mut state = initial;
    let mut snapshots = Vec::with_capacity(targets.len());
    let mut next_target = targets.iter().peekable();
    let mut mass_trace = vec![(0, 0.0, state.mass)];
    while let Some(&&(time, 0)) = next_target.peek() {
        snapshots.push(Snapshot {
            time,
            step: 0,
            coeffs: state.coeffs.clone(),
        });
        next_target.next();
    }
    for m in 1..=total {
        stepper.step(&mut state)?;
        if m % config.mass_stride == 0 || m == total {
            mass_trace.push((m, m as f64 * config.tau, state.mass));
        }
        while let Some(&&(time, step)) = next_target.peek() {
            if step != m {
                break;
            }
            snapshots.push(Snapshot {
                time,
                step,
                coeffs: state.coeffs.clone(),
            });
            next_target.next();
        }
    }
    Ok(Trajectory {
        snapshots,
        mass_trace,
        config: config.clone(),
    })
}

pub fn run(u0: &InitialData, config: &SolverConfig) -> Result<Trajectory> {
    run_from(init(u0, config)?, config)
}

impl Trajectory {
    /// Snapshot whose time is within `τ/2` of `t`.
    pub fn snapshot_at(&self, t: f64) -> Result<&Snapshot> {
        let half = 0.5 * self.config.tau;
        self.snapshots
            .iter()
            .find(|s| (s.time - t).abs() <= half)
            .ok_or(Error::MissingSnapshot { time: t })
    }

    pub fn initial_mass(&self) -> f64 {
        self.mass_trace.first().map_or(0.0, |m| m.2)
    }

    /// Whether every recorded mass is at most its predecessor times `1 + 1e-12`.
    pub fn mass_monotone(&self) -> bool {
        self.mass_trace.windows(2).all(|w| w[1].2 <= w[0].2 * (1.0 + MASS_SLACK))
    }

    pub fn mass_table(&self) -> CsvTable {
        let initial = self.initial_mass();
        let mut table = CsvTable::new(&["step", "t", "mass", "mass_over_initial"]);
        for &(step, t, mass) in &self.mass_trace {
            let ratio = if initial > 0.0 { mass / initial } else { 1.0 };
            table.push(vec![step.to_string(), fmt_f64(t), fmt_f64(mass), fmt_f64(ratio)]);
        }
        table
    }

    /// Writes `mass.csv` and one `snapshot_<step>.bin` per snapshot into `dir`;
    /// returns `(file name, sha256)` for each artifact.
    pub fn write_artifacts(&self, dir: &Path, meta: SnapshotMeta) -> Result<Vec<(String, String)>> {
        let mut written: Vec<(String, PathBuf)> = Vec::new();
        for snap in &self.snapshots {
            let name = format!("snapshot_{:08}.bin", snap.step);
            let path = dir.join(&name);
            write_coefficients(&path, &snap.coeffs, meta.seed, meta.s, meta.beta)?;
            written.push((name, path));
        }
        let mass_path = dir.join("mass.csv");
        self.mass_table().write(&mass_path)?;
        written.push(("mass.csv".into(), mass_path));
        written
            .into_iter()
            .map(|(name, path)| Ok((name, sha256_file(&path)?)))
            .collect()
    }
}

/// Header fields stamped on snapshot binaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub seed: u64,
    pub s: f64,
    pub beta: f64,
}
