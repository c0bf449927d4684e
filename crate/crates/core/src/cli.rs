//! Command implementations behind the `logse` binary. Each command writes its
//! artifacts into an output directory and finishes with a `manifest.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{Config, FamilyKind};
use crate::error::{Error, Result};
use crate::harness::{self, free_flow_sweep, mass_report, orders_csv, property_suite, Fault, PropertyCounts, PropertyReport};
use crate::propagator::free_flow_csv;
use crate::initdata::{gagliardo_bound, Family};
use crate::output::{atomic_write, fmt_f64, sha256_file, sha256_hex, CsvTable};
use crate::quadrature::QuadratureSpec;
use crate::spectral::{gagliardo_energy_1d, read_coefficients, write_coefficients, write_coefficients_csv};
use crate::splitting::{self, SnapshotMeta};

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to replay a command and check its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

struct ManifestBuilder {
    command: &'static str,
    config: serde_json::Value,
    seeds: Vec<u64>,
    out: PathBuf,
    files: Vec<String>,
    started: f64,
}

impl ManifestBuilder {
    fn new(command: &'static str, config: serde_json::Value, seeds: Vec<u64>, out: &Path) -> Result<Self> {
        std::fs::create_dir_all(out)?;
        Ok(Self {
            command,
            config,
            seeds,
            out: out.to_path_buf(),
            files: Vec::new(),
            started: now(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.out.join(name)
    }

    fn add_existing(&mut self, names: impl IntoIterator<Item = String>) {
        self.files.extend(names);
    }

    fn finish(self) -> Result<RunManifest> {
        let artifacts = self
            .files
            .iter()
            .map(|f| {
                Ok(Artifact {
                    file: f.clone(),
                    sha256: sha256_file(&self.out.join(f))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let id_source = serde_json::to_vec(&(&self.command, &self.config)).expect("json");
        let manifest = RunManifest {
            run_id: sha256_hex(&id_source)[..16].to_string(),
            command: self.command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.config,
            seeds: self.seeds,
            artifacts,
            started_unix: self.started,
            finished_unix: now(),
        };
        let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        atomic_write(&self.out.join("manifest.json"), &json)?;
        Ok(manifest)
    }
}

fn config_json(config: &Config) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

fn seeds_of(config: &Config) -> Vec<u64> {
    match config.family {
        Some(FamilyKind::RandomHs) => vec![config.seed()],
        _ => Vec::new(),
    }
}

fn meta_of(config: &Config, hs_index: f64) -> SnapshotMeta {
    SnapshotMeta {
        seed: config.seed.unwrap_or(0),
        s: hs_index,
        beta: config.beta.unwrap_or(0.0),
    }
}

/// `run`: one trajectory with snapshots, mass trace, data card and manifest.
pub fn cmd_run(config: &Config, out: &Path) -> Result<RunManifest> {
    let solver = config.solver_config()?;
    let u0 = config.initial_data()?;
    let mut manifest = ManifestBuilder::new("run", config_json(config), seeds_of(config), out)?;
    let traj = splitting::run(&u0, &solver)?;
    let files = traj.write_artifacts(out, meta_of(config, u0.hs_index()))?;
    manifest.add_existing(files.into_iter().map(|f| f.0));
    let card = manifest.path("data_card.txt");
    let report = mass_report(&traj);
    let text = format!(
        "{}steps: {}\nmax_rel_mass_drift: {}\nmass_monotone: {}\n",
        u0.data_card(),
        solver.steps(),
        fmt_f64(report.max_rel_drift),
        report.monotone_ok
    );
    atomic_write(&card, text.as_bytes())?;
    manifest.finish()
}

/// `converge`: a τ-sweep with `errors.csv` and `orders.csv`.
pub fn cmd_converge(config: &Config, out: &Path) -> Result<(RunManifest, harness::SweepOutcome)> {
    let spec = config.sweep_spec()?;
    let u0 = config.initial_data()?;
    let mut manifest = ManifestBuilder::new("converge", config_json(config), seeds_of(config), out)?;
    let outcome = harness::run_sweep(&u0, &spec, harness::cache_dir_from_env().as_deref())?;
    outcome.table.to_csv().write(&manifest.path("errors.csv"))?;
    orders_csv(&outcome.fits).write(&manifest.path("orders.csv"))?;
    let card = manifest.path("data_card.txt");
    atomic_write(&card, u0.data_card().as_bytes())?;
    Ok((manifest.finish()?, outcome))
}

/// `proptest`: the randomized inequality suite plus the free-flow experiments
/// (props.csv, free_flow.csv); a violation is reported as an error.
pub fn cmd_proptest(seed: u64, counts: PropertyCounts, fault: Option<Fault>, out: &Path) -> Result<PropertyReport> {
    let config = serde_json::json!({ "seed": seed, "counts": counts, "fault": fault });
    let mut manifest = ManifestBuilder::new("proptest", config, vec![seed], out)?;
    let report = property_suite(seed, counts, fault)?;
    report.to_csv().write(&manifest.path("props.csv"))?;
    let flow = free_flow_sweep(seed, counts.fields.min(100))?;
    free_flow_csv(&flow.reports).write(&manifest.path("free_flow.csv"))?;
    manifest.finish()?;
    let violated: Vec<String> = report
        .violated()
        .map(|e| {
            format!(
                "{} ({} of {} samples; first: {})",
                e.inequality,
                e.violations,
                e.samples,
                e.first_violation.as_deref().unwrap_or("?")
            )
        })
        .collect();
    if violated.is_empty() {
        Ok(report)
    } else {
        Err(Error::PropertyViolation(violated.join("; ")))
    }
}

#[derive(Clone, Debug)]
pub struct NormsOptions {
    pub orders: Vec<f64>,
    /// Compare the Gagliardo energy with the closed-form bound for `|x|^γ`.
    pub gamma: Option<f64>,
    /// Modes kept for the Gagliardo quadrature (it costs one integral per mode).
    pub gagliardo_modes: usize,
}

impl Default for NormsOptions {
    fn default() -> Self {
        Self {
            orders: vec![0.2, 0.5, 0.8, 1.0],
            gamma: None,
            gagliardo_modes: 1024,
        }
    }
}

/// `norms`: L², `H^s` norms and seminorms, Gagliardo energies and their ratios.
pub fn cmd_norms(data: &Path, options: &NormsOptions) -> Result<(String, CsvTable)> {
    let (header, field) = read_coefficients(data)?;
    let quad = QuadratureSpec::default();
    let mut text = String::new();
    let _ = writeln!(text, "file: {}\nd: {}\nK: {}\nseed: {}", data.display(), header.dim, header.modes, header.seed);
    let _ = writeln!(text, "l2_norm: {}", fmt_f64(field.l2_norm()));
    let mut table = CsvTable::new(&["s", "hs_norm", "hs_seminorm", "gagliardo", "ratio", "bound", "holds"]);
    let truncated = if header.dim == 1 {
        Some(field.project(field.modes().min(options.gagliardo_modes))?)
    } else {
        None
    };
    for &s in &options.orders {
        if !(0.0..=2.0).contains(&s) {
            return Err(Error::invalid("s", format!("{s} outside [0, 2]")));
        }
        let norm = field.hs_norm(s);
        let semi = field.hs_seminorm(s);
        let mut row = vec![fmt_f64(s), fmt_f64(norm), fmt_f64(semi)];
        let _ = write!(text, "s={s}: hs_norm={} hs_seminorm={}", fmt_f64(norm), fmt_f64(semi));
        match &truncated {
            Some(f) if s > 0.0 && s < 1.0 => {
                let energy = gagliardo_energy_1d(f, s, &quad)?;
                let semi_trunc = f.hs_seminorm(s);
                let ratio = if semi_trunc > 0.0 { energy / semi_trunc.powi(2) } else { 0.0 };
                let _ = write!(text, " gagliardo(K<={})={} ratio={}", f.modes(), fmt_f64(energy), fmt_f64(ratio));
                row.push(fmt_f64(energy));
                row.push(fmt_f64(ratio));
                match options.gamma {
                    Some(g) if s < g => {
                        let bound = gagliardo_bound(g, s);
                        let _ = write!(text, " bound={} holds={}", fmt_f64(bound), energy <= bound);
                        row.push(fmt_f64(bound));
                        row.push((energy <= bound).to_string());
                    }
                    _ => row.extend(["".into(), "".into()]),
                }
            }
            _ => row.extend(["".into(), "".into(), "".into(), "".into()]),
        }
        let _ = writeln!(text);
        table.push(row);
    }
    if header.beta > 0.5 && header.s > 0.0 && header.dim == 1 {
        let sum = field.hs_norm(header.s).powi(2) / crate::spectral::PERIOD;
        let bound = 2f64.powf(header.s + 1.0) / (2.0 * header.beta - 1.0);
        let _ = writeln!(
            text,
            "random-data bound at s={}: sum (1+k^2)^s |u_k|^2 = {} <= 2^(s+1)/(2beta-1) = {}: {}",
            header.s,
            fmt_f64(sum),
            fmt_f64(bound),
            sum <= bound
        );
    }
    Ok((text, table))
}

/// `gen-data`: persist `u₀` as a coefficient binary, CSV and data card.
pub fn cmd_gen_data(config: &Config, out: &Path) -> Result<RunManifest> {
    let u0 = config.initial_data()?;
    let mut manifest = ManifestBuilder::new("gen-data", config_json(config), seeds_of(config), out)?;
    let coeffs = match u0.coefficients() {
        Some(c) => c.clone(),
        None => {
            let modes = config.modes.ok_or_else(|| Error::Config("missing key `N` (evaluator data needs a cutoff)".into()))?;
            u0.project(modes, config.oversample())?
        }
    };
    let (s, beta) = match u0.family() {
        Family::RandomHs(p) => (p.s, p.beta),
        _ => (u0.hs_index(), 0.0),
    };
    write_coefficients(&manifest.path("data.bin"), &coeffs, config.seed.unwrap_or(0), s, beta)?;
    write_coefficients_csv(&manifest.path("data.csv"), &coeffs)?;
    let card = manifest.path("data_card.txt");
    atomic_write(&card, u0.data_card().as_bytes())?;
    manifest.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralField;

    fn gausson_run() -> Config {
        Config::from_toml("family = \"gausson\"\ntau = 0.01\nT = 0.1\nN = 32\nsnapshot_times = [0.05, 0.1]\n").unwrap()
    }

    #[test]
    fn run_writes_artifacts_with_matching_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let m = cmd_run(&gausson_run(), dir.path()).unwrap();
        assert_eq!(m.artifacts.len(), 4);
        for a in &m.artifacts {
            assert_eq!(sha256_file(&dir.path().join(&a.file)).unwrap(), a.sha256);
        }
        let json = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(json.contains("\"command\": \"run\""));
    }

    #[test]
    fn manifest_replay_reproduces_outputs() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = cmd_run(&gausson_run(), a.path()).unwrap();
        let replay = Config::load(&a.path().join("manifest.json")).unwrap();
        let second = cmd_run(&replay, b.path()).unwrap();
        assert_eq!(first.run_id, second.run_id);
        for (x, y) in first.artifacts.iter().zip(&second.artifacts) {
            assert_eq!(x.sha256, y.sha256, "{}", x.file);
        }
    }

    #[test]
    fn proptest_counts_zero_passes_and_fault_fails() {
        let dir = tempfile::tempdir().unwrap();
        let zero = PropertyCounts {
            scalar_pairs: 0,
            fields: 0,
        };
        assert!(cmd_proptest(1, zero, None, dir.path()).unwrap().passed());
        let small = PropertyCounts {
            scalar_pairs: 500,
            fields: 2,
        };
        let err = cmd_proptest(1, small, Some(Fault::DoubledLogarithm), dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("f_eps_gap"));
    }

    #[test]
    fn norms_of_empty_file_are_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("zero.bin");
        write_coefficients(&p, &SpectralField::zeros(1, 0), 0, 0.0, 0.0).unwrap();
        let (text, table) = cmd_norms(&p, &NormsOptions::default()).unwrap();
        assert!(text.contains("l2_norm: 0\n"), "{text}");
        for line in table.render().lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells[1], "0");
            assert_eq!(cells[2], "0");
        }
    }

    #[test]
    fn gen_data_then_norms_with_power_bound() {
        let dir = tempfile::tempdir().unwrap();
        let config = Config::from_toml("family = \"power_singular\"\ngamma = 0.3\nell = 0\nK = 128\n").unwrap();
        cmd_gen_data(&config, dir.path()).unwrap();
        let options = NormsOptions {
            orders: vec![0.2],
            gamma: Some(0.3),
            gagliardo_modes: 128,
        };
        let (text, table) = cmd_norms(&dir.path().join("data.bin"), &options).unwrap();
        assert!(text.contains("holds=true"), "{text}");
        assert!(table.render().lines().nth(1).unwrap().ends_with(",true"));
    }
}
