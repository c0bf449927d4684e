//! Experiment configuration files (TOML), resolved into initial data, solver
//! settings and sweep specifications. Unknown keys are rejected.
//!
//! ```toml
//! family = "random_hs"        # gausson | random_hs | power_singular | coefficient_file
//! lambda = -1.0
//! tau = 0.001                 # run
//! T = 1.0                     # run
//! N = 64                      # run; a fixed cutoff for converge
//! q = 4
//! eps = 0.0
//! seed = 42
//! K = 100000
//! s = 0.8
//! beta = 0.51
//! snapshot_times = [0.5, 1.0]
//! taus = [0.0078125, 0.00390625, 0.001953125]   # converge
//! measure_times = [0.4, 0.7, 1.0]
//!
//! [reference]
//! kind = "numeric"            # numeric | exact_gausson
//! tau = 1.52587890625e-05
//! N = 256
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{Coupling, ReferenceSpec, SweepSpec, DEFAULT_MEASURE_TIMES};
use crate::initdata::{
    GaussonParams, InitialData, PowerSingularParams, RandomHsParams, DEFAULT_POWER_CUTOFF, DEFAULT_RANDOM_CUTOFF,
};
use crate::quadrature::QuadratureSpec;
use crate::spectral::{read_coefficients, DEFAULT_OVERSAMPLE};
use crate::splitting::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Gausson,
    RandomHs,
    PowerSingular,
    CoefficientFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Numeric,
    ExactGausson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    pub tau: Option<f64>,
    #[serde(rename = "N")]
    pub modes: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub family: Option<FamilyKind>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    #[serde(rename = "T")]
    pub final_time: Option<f64>,
    #[serde(rename = "N")]
    pub modes: Option<usize>,
    pub q: Option<usize>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    #[serde(rename = "K")]
    pub cutoff: Option<usize>,
    pub s: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub ell: Option<i64>,
    pub b: Option<f64>,
    pub zeta: Option<Vec<f64>>,
    /// Coefficient file for `family = "coefficient_file"`.
    pub data: Option<PathBuf>,
    pub snapshot_times: Option<Vec<f64>>,
    pub mass_stride: Option<usize>,
    pub taus: Option<Vec<f64>>,
    pub measure_times: Option<Vec<f64>>,
    pub reference: Option<ReferenceConfig>,
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing key `{key}`"))
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads TOML, or the `config` echo of a run manifest when the file is JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let config = value
                .get("config")
                .ok_or_else(|| Error::Config(format!("{}: manifest has no `config`", path.display())))?;
            return serde_json::from_value(config.clone()).map_err(|e| Error::Config(format!("{}: {e}", path.display())));
        }
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn family(&self) -> Result<FamilyKind> {
        self.family.ok_or_else(|| missing("family"))
    }

    pub fn lambda(&self) -> Result<f64> {
        match (self.lambda, self.family) {
            (Some(l), _) => Ok(l),
            (None, Some(FamilyKind::Gausson)) => Ok(-16.0),
            _ => Err(missing("lambda")),
        }
    }

    pub fn oversample(&self) -> usize {
        self.q.unwrap_or(DEFAULT_OVERSAMPLE)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    /// Builds `u₀` for the configured family.
    pub fn initial_data(&self) -> Result<InitialData> {
        match self.family()? {
            FamilyKind::Gausson => InitialData::gausson(GaussonParams {
                lambda: self.lambda()?,
                b: self.b.unwrap_or(1.0),
                zeta: self.zeta.clone().unwrap_or_else(|| vec![0.0]),
            }),
            FamilyKind::RandomHs => InitialData::random_hs(self.random_params()?),
            FamilyKind::PowerSingular => {
                let params = PowerSingularParams {
                    gamma: self.gamma.ok_or_else(|| missing("gamma"))?,
                    ell: self.ell.unwrap_or(0),
                };
                let cutoff = self.cutoff.unwrap_or(DEFAULT_POWER_CUTOFF);
                InitialData::power_singular(params, cutoff, &QuadratureSpec::default())
            }
            FamilyKind::CoefficientFile => {
                let path = self.data.as_ref().ok_or_else(|| missing("data"))?;
                let (header, coeffs) = read_coefficients(path)?;
                let s = self.s.unwrap_or(header.s);
                InitialData::from_coefficients(coeffs, s.clamp(0.0, 2.0), path.display().to_string())
            }
        }
    }

    pub fn random_params(&self) -> Result<RandomHsParams> {
        let params = RandomHsParams {
            s: self.s.ok_or_else(|| missing("s"))?,
            beta: self.beta.ok_or_else(|| missing("beta"))?,
            cutoff: self.cutoff.unwrap_or(DEFAULT_RANDOM_CUTOFF),
            seed: self.seed(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let final_time = self.final_time.ok_or_else(|| missing("T"))?;
        let mut config = SolverConfig::new(
            self.lambda()?,
            self.tau.ok_or_else(|| missing("tau"))?,
            final_time,
            self.modes.ok_or_else(|| missing("N"))?,
        );
        config.oversample = self.oversample();
        config.eps = self.eps.unwrap_or(0.0);
        config.snapshot_times = self.snapshot_times.clone().unwrap_or_else(|| vec![final_time]);
        config.mass_stride = self.mass_stride.unwrap_or(1);
        config.validate()?;
        Ok(config)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let taus = self.taus.clone().ok_or_else(|| missing("taus"))?;
        let coupling = match self.modes {
            Some(n) => Coupling::Fixed(n),
            None => Coupling::Sqrt,
        };
        let reference = match &self.reference {
            None if self.family == Some(FamilyKind::Gausson) => ReferenceSpec::ExactGausson,
            None => return Err(missing("reference")),
            Some(r) => match r.kind {
                ReferenceKind::ExactGausson => ReferenceSpec::ExactGausson,
                ReferenceKind::Numeric => ReferenceSpec::Numeric {
                    tau: r.tau.ok_or_else(|| missing("reference.tau"))?,
                    modes: r.modes.ok_or_else(|| missing("reference.N"))?,
                },
            },
        };
        let spec = SweepSpec {
            lambda: self.lambda()?,
            taus,
            coupling,
            measure_times: self.measure_times.clone().unwrap_or_else(|| DEFAULT_MEASURE_TIMES.to_vec()),
            reference,
            oversample: self.oversample(),
            eps: self.eps.unwrap_or(0.0),
        };
        spec.validate()?;
        Ok(spec)
    }
}
