//! Convergence sweeps against exact or fine-step references, least-squares
//! order fits, mass reports, and the randomized inequality suite.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initdata::{gausson_exact, Family, GaussonParams, InitialData};
use crate::nonlinear::{self, InequalityCheck, NonlinParams};
use crate::output::{atomic_write, fmt_f64, sha256_file, sha256_hex, CsvTable};
use crate::propagator::{build_kc0, free_flow_experiment, kc0_window, FreeFlowReport};
use crate::spectral::{
    self, inverse_inequality_check, read_coefficients, synthesize, PhysicalField, SpectralField, SpectralTransform,
    TorusGrid,
};
use crate::splitting::{self, Snapshot, SnapshotMeta, SolverConfig, Trajectory, STEP_TOLERANCE};

/// Environment variable naming the reference-solution cache directory.
pub const CACHE_ENV: &str = "LOGSE_CACHE_DIR";
pub const DEFAULT_MEASURE_TIMES: [f64; 3] = [0.4, 0.7, 1.0];

/// How the mode cutoff follows the step size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `N = floor(1/√τ)`.
    Sqrt,
    Fixed(usize),
}

impl Coupling {
    pub fn modes(&self, tau: f64) -> usize {
        match *self {
            // nudge so exact powers of four land on the integer
            Coupling::Sqrt => ((1.0 / tau.sqrt()) * (1.0 + 1e-12)).floor() as usize,
            Coupling::Fixed(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    ExactGausson,
    Numeric { tau: f64, modes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lambda: f64,
    pub taus: Vec<f64>,
    pub coupling: Coupling,
    pub measure_times: Vec<f64>,
    pub reference: ReferenceSpec,
    pub oversample: usize,
    pub eps: f64,
}

/// `τ = 2^{-lo}, …, 2^{-hi}`.
pub fn dyadic_taus(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(-j)).collect()
}

fn integer_ratio(a: f64, b: f64) -> bool {
    let r = a / b;
    (r - r.round()).abs() <= STEP_TOLERANCE * r.max(1.0) && r.round() >= 1.0
}

/// `m τ` with `m = round(t/τ)`: the step time at which a nominal time is measured.
pub fn step_time(t: f64, tau: f64) -> f64 {
    (t / tau).round() * tau
}

impl SweepSpec {
    pub fn final_time(&self) -> f64 {
        self.measure_times.iter().copied().fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        NonlinParams::new(self.lambda, self.eps)?;
        if self.taus.is_empty() {
            return Err(Error::invalid("taus", "step list is empty"));
        }
        if self.taus.windows(2).any(|w| w[1] >= w[0]) || self.taus.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::invalid("taus", "steps must be positive and strictly decreasing"));
        }
        if self.measure_times.is_empty() {
            return Err(Error::invalid("measure_times", "no measure times"));
        }
        if self.measure_times.windows(2).any(|w| w[1] <= w[0]) || self.measure_times[0] <= 0.0 {
            return Err(Error::invalid("measure_times", "times must be positive and increasing"));
        }
        for &tau in &self.taus {
            if (self.measure_times[0] / tau).round() < 1.0 {
                return Err(Error::invalid("taus", format!("tau = {tau} exceeds the first measure time")));
            }
            if self.coupling.modes(tau) == 0 {
                return Err(Error::invalid("N", format!("tau = {tau} gives zero modes")));
            }
        }
        if let ReferenceSpec::Numeric { tau, modes } = self.reference {
            let min = self.taus.last().copied().unwrap_or(f64::INFINITY);
            if !(tau > 0.0 && tau <= min / 8.0 * (1.0 + 1e-12)) {
                return Err(Error::invalid("reference.tau", format!("{tau} must be at most min(taus)/8 = {}", min / 8.0)));
            }
            if let Some(bad) = self.taus.iter().find(|&&t| !integer_ratio(t, tau)) {
                return Err(Error::invalid(
                    "reference.tau",
                    format!("{tau} must divide every coarse step; it does not divide {bad}"),
                ));
            }
            let coarse_max = self.taus.iter().map(|&t| self.coupling.modes(t)).max().unwrap_or(0);
            if modes < coarse_max {
                return Err(Error::invalid("reference.N", format!("{modes} is below the largest coarse cutoff {coarse_max}")));
            }
        }
        Ok(())
    }

    /// Coarse run: `round(T/τ)` steps with snapshots at the nominal measure times.
    pub fn solver_config(&self, tau: f64, modes: usize) -> SolverConfig {
        let mut config = SolverConfig::new(self.lambda, tau, step_time(self.final_time(), tau), modes)
            .with_snapshots(&self.measure_times);
        config.oversample = self.oversample;
        config.eps = self.eps;
        config
    }

    /// Every step time `round(t/τ)τ` some coarse run measures at, sorted.
    pub fn coarse_step_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .taus
            .iter()
            .flat_map(|&tau| self.measure_times.iter().map(move |&t| step_time(t, tau)))
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        times
    }

    /// Reference run with a snapshot at every coarse step time.
    pub fn reference_config(&self) -> Option<SolverConfig> {
        match self.reference {
            ReferenceSpec::ExactGausson => None,
            ReferenceSpec::Numeric { tau, modes } => {
                let times = self.coarse_step_times();
                let final_time = step_time(times.last().copied().unwrap_or(tau), tau);
                let mut config = SolverConfig::new(self.lambda, tau, final_time, modes).with_snapshots(&times);
                config.oversample = self.oversample;
                config.eps = self.eps;
                Some(config)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub tau: f64,
    pub modes: usize,
    pub t: f64,
    pub err: f64,
    /// Largest `|‖u‖²/‖u⁰‖² - 1|` up to time `t`.
    pub mass_drift: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub normalization: f64,
}

impl ErrorTable {
    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(&["tau", "N", "t", "err", "mass_drift"]);
        for r in &self.rows {
            table.push(vec![fmt_f64(r.tau), r.modes.to_string(), fmt_f64(r.t), fmt_f64(r.err), fmt_f64(r.mass_drift)]);
        }
        table
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    pub t: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub used: usize,
}

pub fn orders_csv(fits: &[OrderFit]) -> CsvTable {
    let mut table = CsvTable::new(&["t", "slope", "intercept", "r2"]);
    for f in fits {
        table.push(vec![fmt_f64(f.t), fmt_f64(f.slope), fmt_f64(f.intercept), fmt_f64(f.r2)]);
    }
    table
}

/// Least squares on `(ln τ, ln err)` over the rows at time `t`; zero errors are skipped.
pub fn fit_order(table: &ErrorTable, t: f64) -> Result<OrderFit> {
    let at_t: Vec<&ErrorRow> = table.rows.iter().filter(|r| (r.t - t).abs() <= 1e-12 * t.max(1.0)).collect();
    let points: Vec<(f64, f64)> = at_t
        .iter()
        .filter(|r| {
            let keep = r.err > 0.0;
            if !keep {
                log::warn!("fit at t={t}: excluding tau={} with zero error", r.tau);
            }
            keep
        })
        .map(|r| (r.tau.ln(), r.err.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            time: t,
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(OrderFit {
        t,
        slope,
        intercept,
        r2,
        used: points.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassReport {
    /// Largest `|‖u‖²/‖u⁰‖² - 1|` along the trace.
    pub max_rel_drift: f64,
    /// Every recorded mass is at most its predecessor times `1 + 1e-12`.
    pub monotone_ok: bool,
}

pub fn mass_report(traj: &Trajectory) -> MassReport {
    MassReport {
        max_rel_drift: drift_until(traj, f64::INFINITY),
        monotone_ok: traj.mass_monotone(),
    }
}

fn drift_until(traj: &Trajectory, t: f64) -> f64 {
    let m0 = traj.initial_mass();
    if m0 == 0.0 {
        return 0.0;
    }
    traj.mass_trace
        .iter()
        .filter(|m| m.1 <= t + 0.5 * traj.config.tau)
        .map(|m| ((m.2 / m0).powi(2) - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `‖u_ref(t_m) - u_N^m‖ / normalization` with `t_m` the coarse step time nearest `t`;
/// the coarse coefficients are zero-padded to the reference cutoff.
pub fn error_against_reference(coarse: &Trajectory, reference: &Trajectory, t: f64, normalization: f64) -> Result<f64> {
    let a = coarse.snapshot_at(t)?;
    let b = reference.snapshot_at(a.step as f64 * coarse.config.tau)?;
    if a.coeffs.modes() > b.coeffs.modes() {
        return Err(Error::invalid("reference", "reference cutoff is below the coarse cutoff"));
    }
    Ok(b.coeffs.difference(&a.coeffs)?.l2_norm() / normalization)
}

/// Coefficients on `K_N` of the closed-form Gausson at time `t`.
pub fn gausson_coeffs(params: &GaussonParams, t: f64, modes: usize, oversample: usize) -> Result<SpectralField> {
    let grid = TorusGrid::oversampled(params.dim(), modes, oversample)?;
    let nodal = PhysicalField::from_fn(grid, |x| gausson_exact(params, x, t))?;
    SpectralTransform::new(grid).forward(&nodal, modes)
}

#[derive(Serialize, Deserialize)]
struct CachedSnapshot {
    time: f64,
    step: usize,
    file: String,
    sha256: String,
}

#[derive(Serialize, Deserialize)]
struct CacheIndex {
    version: String,
    config: SolverConfig,
    snapshots: Vec<CachedSnapshot>,
    mass_trace: Vec<(usize, f64, f64)>,
}

/// Cache key: hash of the crate version, the solver configuration, and the projected data.
pub fn reference_key(u0_projected: &SpectralField, config: &SolverConfig) -> String {
    let mut bytes = env!("CARGO_PKG_VERSION").as_bytes().to_vec();
    bytes.extend(serde_json::to_vec(config).expect("config serializes"));
    bytes.extend(spectral::encode(u0_projected, 0, 0.0, 0.0));
    sha256_hex(&bytes)
}

pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn load_cached(dir: &Path, config: &SolverConfig) -> Result<Option<Trajectory>> {
    let index_path = dir.join("reference.json");
    if !index_path.exists() {
        return Ok(None);
    }
    let index: CacheIndex = serde_json::from_slice(&std::fs::read(&index_path)?)
        .map_err(|e| Error::Config(format!("cache index {}: {e}", index_path.display())))?;
    if &index.config != config {
        return Ok(None);
    }
    let mut snapshots = Vec::new();
    for snap in &index.snapshots {
        let path = dir.join(&snap.file);
        if !path.exists() || sha256_file(&path)? != snap.sha256 {
            log::warn!("reference cache {}: checksum mismatch on {}, recomputing", dir.display(), snap.file);
            return Ok(None);
        }
        let (_, coeffs) = read_coefficients(&path)?;
        snapshots.push(Snapshot {
            time: snap.time,
            step: snap.step,
            coeffs,
        });
    }
    Ok(Some(Trajectory {
        snapshots,
        mass_trace: index.mass_trace,
        config: config.clone(),
    }))
}

fn store_cached(dir: &Path, traj: &Trajectory) -> Result<()> {
    let files = traj.write_artifacts(dir, SnapshotMeta::default())?;
    let snapshots = traj
        .snapshots
        .iter()
        .zip(&files)
        .map(|(s, (file, sha))| CachedSnapshot {
            time: s.time,
            step: s.step,
            file: file.clone(),
            sha256: sha.clone(),
        })
        .collect();
    let index = CacheIndex {
        version: env!("CARGO_PKG_VERSION").into(),
        config: traj.config.clone(),
        snapshots,
        mass_trace: traj.mass_trace.clone(),
    };
    let json = serde_json::to_vec(&index).map_err(|e| Error::Config(e.to_string()))?;
    atomic_write(&dir.join("reference.json"), &json)
}

/// Fine-step reference trajectory, read from `cache` when a verified copy exists.
pub fn reference_solution(u0: &InitialData, config: &SolverConfig, cache: Option<&Path>) -> Result<Trajectory> {
    let initial = splitting::init(u0, config)?;
    let slot = cache.map(|c| c.join(reference_key(&initial.coeffs, config)));
    if let Some(dir) = &slot {
        match load_cached(dir, config) {
            Ok(Some(traj)) => {
                log::info!("reference loaded from {}", dir.display());
                return Ok(traj);
            }
            Ok(None) => {}
            Err(e) => log::warn!("reference cache {} unreadable ({e}), recomputing", dir.display()),
        }
    }
    log::info!("computing reference: tau={}, N={}, {} steps", config.tau, config.modes, config.steps());
    let traj = splitting::run_from(initial, config)?;
    if let Some(dir) = &slot {
        if let Err(e) = store_cached(dir, &traj) {
            log::warn!("could not store reference in {}: {e}", dir.display());
        }
    }
    Ok(traj)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepOutcome {
    pub table: ErrorTable,
    pub fits: Vec<OrderFit>,
    pub mass: Vec<(f64, MassReport)>,
}

/// Runs every sweep point (in parallel) and measures errors at each measure time.
pub fn run_sweep(u0: &InitialData, spec: &SweepSpec, cache: Option<&Path>) -> Result<SweepOutcome> {
    spec.validate()?;
    let (reference, normalization) = match spec.reference {
        ReferenceSpec::ExactGausson => {
            if !matches!(u0.family(), Family::Gausson(_)) {
                return Err(Error::invalid("reference", "exact reference needs Gausson data"));
            }
            (None, 1.0)
        }
        ReferenceSpec::Numeric { .. } => {
            let config = spec.reference_config().expect("numeric reference");
            (Some(reference_solution(u0, &config, cache)?), u0.hs_norm())
        }
    };
    let runs: Vec<(f64, usize, Trajectory)> = spec
        .taus
        .par_iter()
        .map(|&tau| {
            let modes = spec.coupling.modes(tau);
            splitting::run(u0, &spec.solver_config(tau, modes)).map(|t| (tau, modes, t))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (tau, modes, traj) in &runs {
        for &t in &spec.measure_times {
            let err = match (&reference, u0.family()) {
                (Some(r), _) => error_against_reference(traj, r, t, normalization)?,
                (None, Family::Gausson(p)) => {
                    let snap = traj.snapshot_at(t)?;
                    let exact = gausson_coeffs(p, snap.step as f64 * tau, *modes, spec.oversample)?;
                    snap.coeffs.difference(&exact)?.l2_norm()
                }
                (None, _) => unreachable!("checked above"),
            };
            rows.push(ErrorRow {
                tau: *tau,
                modes: *modes,
                t,
                err,
                mass_drift: drift_until(traj, t),
            });
        }
    }
    let table = ErrorTable { rows, normalization };
    let fits = spec.measure_times.iter().map(|&t| fit_order(&table, t)).collect::<Result<_>>()?;
    let mass = runs.iter().map(|(tau, _, traj)| (*tau, mass_report(traj))).collect();
    Ok(SweepOutcome { table, fits, mass })
}

/// Sample counts for [`property_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCounts {
    pub scalar_pairs: usize,
    pub fields: usize,
}

impl Default for PropertyCounts {
    fn default() -> Self {
        Self {
            scalar_pairs: 100_000,
            fields: 1000,
        }
    }
}

/// A deliberate defect for checking that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// The regularized nonlinearity uses `ln(|z|+ε)⁴` instead of `ln(|z|+ε)²`.
    DoubledLogarithm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyEntry {
    pub inequality: &'static str,
    pub samples: usize,
    /// Smallest `(rhs - lhs)/max(1, rhs)` seen.
    pub worst_margin: f64,
    pub violations: usize,
    pub first_violation: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PropertyReport {
    pub seed: u64,
    pub entries: Vec<PropertyEntry>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.violations == 0)
    }

    pub fn violated(&self) -> impl Iterator<Item = &PropertyEntry> {
        self.entries.iter().filter(|e| e.violations > 0)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::new(&["inequality", "samples", "worst_margin"]);
        for e in &self.entries {
            table.push(vec![e.inequality.to_string(), e.samples.to_string(), fmt_f64(e.worst_margin)]);
        }
        table
    }
}

struct Tally {
    entry: PropertyEntry,
}

impl Tally {
    fn new(inequality: &'static str) -> Self {
        Self {
            entry: PropertyEntry {
                inequality,
                samples: 0,
                worst_margin: f64::INFINITY,
                violations: 0,
                first_violation: None,
            },
        }
    }

    fn record(&mut self, check: InequalityCheck, inputs: impl FnOnce() -> String) {
        self.entry.samples += 1;
        let margin = if check.lhs.is_finite() && check.rhs.is_finite() {
            check.scaled_margin()
        } else {
            f64::NEG_INFINITY
        };
        self.entry.worst_margin = self.entry.worst_margin.min(margin);
        if !check.holds() {
            self.entry.violations += 1;
            if self.entry.first_violation.is_none() {
                self.entry.first_violation = Some(format!(
                    "{}: lhs={:e} rhs={:e} margin={:e}",
                    inputs(),
                    check.lhs,
                    check.rhs,
                    check.margin()
                ));
            }
        }
    }

    fn finish(self, out: &mut Vec<PropertyEntry>) {
        if self.entry.samples > 0 {
            out.push(self.entry);
        }
    }
}

fn f_eps_under(fault: Option<Fault>, z: Complex64, eps: f64) -> Result<Complex64> {
    let v = nonlinear::f_eps(z, eps)?;
    Ok(match fault {
        Some(Fault::DoubledLogarithm) => v * 2.0,
        None => v,
    })
}

fn random_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    // log-uniform modulus covers both the near-zero and the large regime
    let modulus = if rng.gen_bool(0.5) {
        radius * rng.gen::<f64>().sqrt()
    } else {
        radius * 10f64.powf(-rng.gen_range(0.0..12.0))
    };
    Complex64::from_polar(modulus, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn scalar_checks(
    rng: &mut ChaCha8Rng,
    pairs: usize,
    fault: Option<Fault>,
    out: &mut Vec<PropertyEntry>,
) -> Result<()> {
    let mut gap = Tally::new("f_eps_gap");
    let mut holder_reg = Tally::new("f_eps_lipschitz");
    let mut holder = Tally::new("f_holder");
    let mut ch = Tally::new("ch_monotonicity");
    let mut corners: Vec<(Complex64, Complex64, f64)> = Vec::new();
    if pairs > 0 {
        let tiny = [0.0, 1e-300, 1e-15];
        for &a in &tiny {
            for &b in &tiny {
                corners.push((Complex64::new(a, 0.0), Complex64::new(0.0, b), 1e-3));
            }
            for z in [Complex64::new(1.0, 0.0), Complex64::new(-3.0, 4.0), Complex64::new(1e-8, 1e-8)] {
                corners.push((Complex64::from_polar(a, 0.7), z, 1e-3));
            }
        }
    }
    let random = (0..pairs).map(|i| {
        let eps = if i % 2 == 0 { 1e-3 } else { 1e-1 };
        (random_in_disk(rng, 10.0), random_in_disk(rng, 10.0), eps)
    });
    let samples: Vec<_> = corners.into_iter().chain(random).collect();
    for (z1, z2, eps) in samples {
        let label = || format!("z1={z1}, z2={z2}, eps={eps}");
        let f1 = f_eps_under(fault, z1, eps)?;
        let f2 = f_eps_under(fault, z2, eps)?;
        gap.record(InequalityCheck::new((f1 - nonlinear::f(z1)).norm(), 2.0 * eps), label);
        let zeta = z1.norm().max(z2.norm());
        let factor = 2.0 * ((zeta + eps).ln().abs() + 1.0);
        let dist = (z1 - z2).norm();
        holder_reg.record(InequalityCheck::new((f2 - f1).norm(), factor * dist), label);
        let plain = nonlinear::holder_pair_check(z1, z2, eps)?.unregularized;
        holder.record(plain, label);
        ch.record(nonlinear::ch_monotonicity_check(z1, z2), label);
    }
    for t in [gap, holder_reg, holder, ch] {
        t.finish(out);
    }
    Ok(())
}

fn random_spectral(rng: &mut ChaCha8Rng, modes: usize) -> SpectralField {
    let decay = rng.gen_range(0.0..2.5);
    let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
    SpectralField::from_fn(1, modes, |k| {
        let w = scale / (1.0 + k[0].abs() as f64).powf(decay);
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w
    })
    .expect("finite coefficients")
}

fn field_checks(rng: &mut ChaCha8Rng, count: usize, out: &mut Vec<PropertyEntry>) -> Result<()> {
    let mut pointwise = Tally::new("phi_b_pointwise_lipschitz");
    let mut l2 = Tally::new("phi_b_l2_lipschitz");
    let mut eps_gap = Tally::new("phi_b_eps_gap");
    let mut gradient = Tally::new("phi_b_eps_gradient");
    let mut inverse = Tally::new("inverse_inequality");
    let mut contraction = Tally::new("projection_contraction");
    let mut proj0 = Tally::new("projection_error_l2");
    let mut proj_half = Tally::new("projection_error_half");
    let mut stab = Tally::new("f_eps_l2_stability");
    let mut diff = Tally::new("f_l2_difference");
    let mut upper = Tally::new("free_flow_upper");
    let mut lower = Tally::new("free_flow_lower");
    for i in 0..count {
        let lambda = if rng.gen_bool(0.5) { -rng.gen_range(0.1..20.0) } else { rng.gen_range(0.1..20.0) };
        let t = 10f64.powf(-rng.gen_range(0.0..4.0));
        let eps = 10f64.powf(-rng.gen_range(1.0..8.0));
        let params = NonlinParams::new(lambda, eps)?;
        let label = |what: &str| format!("field #{i} ({what}), lambda={lambda}, t={t}, eps={eps}");

        let small = random_spectral(rng, 8);
        let w = synthesize(&small, 4)?;
        pointwise.record(nonlinear::pointwise_lipschitz_check(&w, &params, t)?, || label("pointwise"));
        eps_gap.record(nonlinear::regularized_gap_check(&w, &params, t)?, || label("gap"));

        let u_c = random_spectral(rng, 16);
        let v_c = if rng.gen_bool(0.5) {
            u_c.difference(&random_spectral(rng, 16).scaled(Complex64::new(1e-3, 0.0)))?
        } else {
            random_spectral(rng, 16)
        };
        let u = synthesize(&u_c, 4)?;
        let v = synthesize(&v_c, 4)?;
        l2.record(nonlinear::l2_lipschitz_check(&u, &v, &params, t)?, || label("l2 pair"));
        let small_eps = 10f64.powf(-rng.gen_range(0.5..8.0));
        stab.record(nonlinear::f_eps_l2_stability_check(&u, &v, small_eps)?, || label("f_eps pair"));
        diff.record(nonlinear::f_l2_difference_check(&u, &v, small_eps)?, || label("f pair"));

        gradient.record(nonlinear::gradient_stability_check(&u_c, &params, t, 8)?, || label("gradient"));

        let n = 1 + rng.gen_range(0..32usize);
        let phi = random_spectral(rng, n);
        let rep = inverse_inequality_check(&phi)?;
        inverse.record(InequalityCheck::new(rep.linf, rep.bound), || label("inverse"));

        let big = random_spectral(rng, 64);
        let s = rng.gen_range(0.0..=2.0);
        let cut = rng.gen_range(1..64usize);
        let projected = big.project(cut)?;
        contraction.record(InequalityCheck::new(projected.hs_seminorm(s), big.hs_seminorm(s)), || label("contraction"));
        let tail = big.difference(&projected)?;
        let s1 = rng.gen_range(0.0..=1.0);
        let nf = cut as f64;
        proj0.record(
            InequalityCheck::new(tail.l2_norm(), nf.powf(-s1) * big.hs_seminorm(s1)),
            || label("projection mu=0"),
        );
        proj_half.record(
            InequalityCheck::new(tail.hs_seminorm(s1 / 2.0), nf.powf(-s1 / 2.0) * big.hs_seminorm(s1)),
            || label("projection mu=s/2"),
        );

        if i % 10 == 0 {
            let r = rng.gen_range(0.0..=2.0);
            let tt = 10f64.powf(-rng.gen_range(0.0..3.0));
            let v0 = random_spectral(rng, 48);
            let rep = free_flow_experiment(&v0, r, tt, 0.1)?;
            upper.record(InequalityCheck::new(rep.err, rep.upper), || label("free flow upper"));
            let tt = if rng.gen_bool(0.5) { 1e-3 } else { 1e-2 };
            let v0 = random_on_window(rng, 0.1, tt)?;
            let rep = free_flow_experiment(&v0, r, tt, 0.1)?;
            lower.record(InequalityCheck::new(rep.lower, rep.err), || label("free flow lower"));
        }
    }
    for t in [pointwise, l2, eps_gap, gradient, inverse, contraction, proj0, proj_half, stab, diff, upper, lower] {
        t.finish(out);
    }
    Ok(())
}

/// Random coefficients supported on the `K_{c₀}` window for `(c0, t)`.
pub fn random_on_window(rng: &mut ChaCha8Rng, c0: f64, t: f64) -> Result<SpectralField> {
    let (_, hi) = kc0_window(c0, t)?;
    let kmax = hi.sqrt().ceil() as usize + 1;
    let set = build_kc0(c0, t, kmax, 1)?;
    let mut field = SpectralField::zeros(1, kmax);
    for k in &set.members {
        let idx = field.index_of(k).expect("member inside cutoff");
        field.coeffs_mut()[idx] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    Ok(field)
}

/// Every randomized inequality sweep, seeded. `fault` plants a known defect.
pub fn property_suite(seed: u64, counts: PropertyCounts, fault: Option<Fault>) -> Result<PropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    scalar_checks(&mut rng, counts.scalar_pairs, fault, &mut entries)?;
    field_checks(&mut rng, counts.fields, &mut entries)?;
    Ok(PropertyReport { seed, entries })
}

/// Outcome of the free-flow optimality sweep.
#[derive(Clone, Debug, Serialize)]
pub struct OptimalitySummary {
    pub upper_samples: usize,
    pub upper_violations: usize,
    pub lower_samples: usize,
    pub lower_violations: usize,
    /// `sinc⁻¹(c₀) - arcsin(c₀)`.
    pub window_length: f64,
    /// Every experiment, upper-bound samples first.
    pub reports: Vec<FreeFlowReport>,
}

/// Upper bound on `count` random `(v₀, r, t)`; lower bound on `count` random
/// `v₀` supported on the window for `c₀ = 0.1` and `t ∈ {1e-3, 1e-2}`.
pub fn free_flow_sweep(seed: u64, count: usize) -> Result<OptimalitySummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = 0.1;
    let mut summary = OptimalitySummary {
        upper_samples: 0,
        upper_violations: 0,
        lower_samples: 0,
        lower_violations: 0,
        window_length: crate::propagator::sinc_inverse(c0)? - c0.asin(),
        reports: Vec::with_capacity(2 * count),
    };
    let mut lower_reports = Vec::with_capacity(count);
    for i in 0..count {
        let r = rng.gen_range(0.0..=2.0);
        let t = 10f64.powf(-rng.gen_range(0.0..4.0));
        let v0 = random_spectral(&mut rng, 64);
        let rep = free_flow_experiment(&v0, r, t, c0)?;
        summary.upper_samples += 1;
        summary.upper_violations += usize::from(!rep.holds_upper);
        summary.reports.push(rep);

        let t = if i % 2 == 0 { 1e-3 } else { 1e-2 };
        let v0 = random_on_window(&mut rng, c0, t)?;
        let rep = free_flow_experiment(&v0, r, t, c0)?;
        summary.lower_samples += 1;
        summary.lower_violations += usize::from(!rep.holds_lower);
        lower_reports.push(rep);
    }
    summary.reports.extend(lower_reports);
    Ok(summary)
}

/// `u₀` at its full cutoff for the mass check: the Gausson standard run.
pub fn gausson_mass_run(tau: f64, modes: usize) -> Result<Trajectory> {
    let u0 = InitialData::gausson(GaussonParams::standard())?;
    splitting::run(&u0, &SolverConfig::new(-16.0, tau, 1.0, modes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn table(points: &[(f64, f64)]) -> ErrorTable {
        ErrorTable {
            rows: points
                .iter()
                .map(|&(tau, err)| ErrorRow {
                    tau,
                    modes: 1,
                    t: 1.0,
                    err,
                    mass_drift: 0.0,
                })
                .collect(),
            normalization: 1.0,
        }
    }

    #[test]
    fn exact_power_laws_fit_exactly() {
        let taus = dyadic_taus(7, 13);
        let linear: Vec<_> = taus.iter().map(|&t| (t, 3.0 * t)).collect();
        let fit = fit_order(&table(&linear), 1.0).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let frac: Vec<_> = taus.iter().map(|&t| (t, 0.7 * t.powf(0.4))).collect();
        assert!((fit_order(&table(&frac), 1.0).unwrap().slope - 0.4).abs() < 1e-12);
    }

    #[test]
    fn fit_skips_zero_errors_and_needs_three_points() {
        let t = table(&[(0.1, 0.1), (0.05, 0.0), (0.025, 0.025), (0.0125, 0.0125)]);
        let fit = fit_order(&t, 1.0).unwrap();
        assert_eq!(fit.used, 3);
        assert!((fit.slope - 1.0).abs() < 1e-12);
        let t = table(&[(0.1, 0.1), (0.05, 0.0), (0.025, 0.025)]);
        assert!(matches!(fit_order(&t, 1.0), Err(Error::InsufficientData { found: 2, .. })));
    }

    #[test]
    fn sqrt_coupling() {
        assert_eq!(Coupling::Sqrt.modes(2f64.powi(-8)), 16);
        assert_eq!(Coupling::Sqrt.modes(2f64.powi(-7)), 11);
        assert_eq!(Coupling::Sqrt.modes(2f64.powi(-16)), 256);
        assert_eq!(Coupling::Fixed(200).modes(0.1), 200);
    }

    fn spec() -> SweepSpec {
        SweepSpec {
            lambda: -1.0,
            taus: dyadic_taus(7, 9),
            coupling: Coupling::Sqrt,
            measure_times: DEFAULT_MEASURE_TIMES.to_vec(),
            reference: ReferenceSpec::Numeric {
                tau: 2f64.powi(-12),
                modes: 64,
            },
            oversample: 4,
            eps: 0.0,
        }
    }

    #[test]
    fn sweep_validation() {
        assert!(spec().validate().is_ok());
        let mut s = spec();
        s.taus.clear();
        assert!(s.validate().is_err());
        let mut s = spec();
        s.taus = vec![0.01, 0.02];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.taus = vec![1.0];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.taus = vec![0.01, 0.003];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.reference = ReferenceSpec::Numeric {
            tau: 2f64.powi(-11),
            modes: 64,
        };
        assert!(s.validate().is_err());
        let mut s = spec();
        s.reference = ReferenceSpec::Numeric {
            tau: 2f64.powi(-12),
            modes: 8,
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn error_metric_single_mode_phase() {
        let config = SolverConfig::new(-1.0, 0.5, 1.0, 2);
        let mk = |phase: f64| Trajectory {
            snapshots: vec![Snapshot {
                time: 1.0,
                step: 2,
                coeffs: SpectralField::single_mode(1, 2, &[1], Complex64::from_polar(1.0, phase)).unwrap(),
            }],
            mass_trace: vec![],
            config: config.clone(),
        };
        let delta = 0.3;
        let e = error_against_reference(&mk(delta), &mk(0.0), 1.0, 2.0).unwrap();
        let expected = 2.0 * (delta / 2.0).sin().abs() * (2.0 * PI).sqrt() / 2.0;
        assert!((e - expected).abs() < 1e-15);
        assert_eq!(error_against_reference(&mk(0.0), &mk(0.0), 1.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            error_against_reference(&mk(0.0), &mk(0.0), 0.4, 1.0),
            Err(Error::MissingSnapshot { .. })
        ));
    }

    #[test]
    fn empty_trace_has_zero_drift() {
        let traj = Trajectory {
            snapshots: vec![],
            mass_trace: vec![(0, 0.0, 1.0)],
            config: SolverConfig::new(-1.0, 0.1, 1.0, 4),
        };
        let r = mass_report(&traj);
        assert_eq!(r.max_rel_drift, 0.0);
        assert!(r.monotone_ok);
    }

    #[test]
    fn small_suite_passes_and_fault_is_caught() {
        let counts = PropertyCounts {
            scalar_pairs: 2000,
            fields: 30,
        };
        let report = property_suite(7, counts, None).unwrap();
        for e in &report.entries {
            assert_eq!(e.violations, 0, "{e:?}");
        }
        assert!(report.entries.len() >= 14);
        let bad = property_suite(7, counts, Some(Fault::DoubledLogarithm)).unwrap();
        assert!(!bad.passed());
        assert!(bad.violated().any(|e| e.inequality == "f_eps_gap"));
        let empty = property_suite(7, PropertyCounts { scalar_pairs: 0, fields: 0 }, None).unwrap();
        assert!(empty.entries.is_empty() && empty.passed());
        assert_eq!(empty.to_csv().render(), "inequality,samples,worst_margin\n");
    }

    #[test]
    fn numeric_sweep_small_and_cached_reference() {
        let u0 = InitialData::random_hs(crate::initdata::RandomHsParams {
            s: 1.0,
            beta: 0.51,
            cutoff: 2000,
            seed: 3,
        })
        .unwrap();
        let spec = spec();
        let dir = tempfile::tempdir().unwrap();
        let out = run_sweep(&u0, &spec, Some(dir.path())).unwrap();
        assert_eq!(out.table.rows.len(), 9);
        assert_eq!(out.fits.len(), 3);
        for r in &out.table.rows {
            assert!(r.err > 0.0 && r.err < 1.0, "{r:?}");
        }
        assert!(out.mass.iter().all(|m| m.1.monotone_ok));
        // second run reads the cache and reproduces the table bit for bit
        let again = run_sweep(&u0, &spec, Some(dir.path())).unwrap();
        assert_eq!(again.table, out.table);
        // corrupt a cached snapshot: recomputed with identical results
        let entry = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
        let snap = std::fs::read_dir(&entry)
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.extension().is_some_and(|x| x == "bin"))
            .unwrap();
        let mut bytes = std::fs::read(&snap).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x55;
        std::fs::write(&snap, bytes).unwrap();
        let third = run_sweep(&u0, &spec, Some(dir.path())).unwrap();
        assert_eq!(third.table, out.table);
    }
}
