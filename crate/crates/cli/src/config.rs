//! Experiment configuration read from a single JSON file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qbattery::claims::ExamplesConfig;
use qbattery::hamiltonians::{build_ising, BareHamiltonianSpec, IsingSpec, ProbingHamiltonianSpec};
use qbattery::linalg::{hilbert_dim, pauli, C64, PureState};
use qbattery::optimize::OptimizerConfig;
use qbattery::output::{from_complex_pairs, StateClass};
use qbattery::witnesses::{dicke_state, ghz_state};
use qbattery::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Speed,
    Bounds,
    IsingSweep,
    Witness,
    Examples,
    Verify,
}

/// Either a general probing Hamiltonian or the Ising chain shorthand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Probing {
    General(ProbingHamiltonianSpec),
    Ising(IsingSpec),
}

impl Probing {
    pub fn to_general(&self) -> Result<ProbingHamiltonianSpec> {
        match self {
            Probing::General(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            Probing::Ising(s) => build_ising(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateConfig {
    Ghz {
        n: usize,
    },
    Dicke {
        n: usize,
        m: usize,
    },
    PlusProduct {
        n: usize,
    },
    Basis {
        n: usize,
        #[serde(default = "two")]
        d: usize,
        index: usize,
    },
    Amplitudes {
        n: usize,
        #[serde(default = "two")]
        d: usize,
        /// `[re, im]` pairs; normalized on load.
        amplitudes: Vec<[f64; 2]>,
    },
}

fn two() -> usize {
    2
}

impl StateConfig {
    pub fn sites(&self) -> (usize, usize) {
        match *self {
            StateConfig::Ghz { n } | StateConfig::Dicke { n, .. } | StateConfig::PlusProduct { n } => (n, 2),
            StateConfig::Basis { n, d, .. } | StateConfig::Amplitudes { n, d, .. } => (n, d),
        }
    }

    pub fn build(&self) -> Result<PureState> {
        match self {
            StateConfig::Ghz { n } => ghz_state(*n),
            StateConfig::Dicke { n, m } => dicke_state(*n, *m),
            StateConfig::PlusProduct { n } => {
                hilbert_dim(2, *n)?;
                Ok(pauli::plus_product(*n))
            }
            StateConfig::Basis { n, d, index } => PureState::basis(hilbert_dim(*d, *n)?, *index),
            StateConfig::Amplitudes { n, d, amplitudes } => {
                let dim = hilbert_dim(*d, *n)?;
                if amplitudes.len() != dim {
                    return Err(Error::WrongVectorLength {
                        expected: dim,
                        actual: amplitudes.len(),
                    });
                }
                let v: Vec<C64> = from_complex_pairs(amplitudes);
                PureState::normalized(v.into())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {}", self.points)));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            return Err(Error::InvalidArgument(format!("bad grid range [{}, {}]", self.min, self.max)));
        }
        let step = (self.max - self.min) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| if i + 1 == self.points { self.max } else { self.min + step * i as f64 })
            .collect())
    }
}

/// Hamiltonian used by the witness experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessHamiltonian {
    /// The configured `probing` Hamiltonian.
    Probing,
    /// Projector on the most balanced computational basis state.
    Coherence,
    /// Projector on a product state at overlap 1/2 across the first-site cut.
    Entanglement,
    /// `(1/2) sum sigma_z`.
    CollectiveZ,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub battery: Option<BareHamiltonianSpec>,
    #[serde(default)]
    pub probing: Option<Probing>,
    #[serde(default)]
    pub state: Option<StateConfig>,
    /// Coupling grid for the Ising sweep.
    #[serde(default)]
    pub sweep: Option<Grid>,
    /// Time grid for the speed trajectory.
    #[serde(default)]
    pub times: Option<Grid>,
    /// Time at which the speed is maximized over bare Hamiltonians.
    #[serde(default)]
    pub report_time: f64,
    /// Unit energy; falls back to the battery's, then 1.
    #[serde(default)]
    pub energy: Option<f64>,
    #[serde(default)]
    pub class: Option<StateClass>,
    #[serde(default)]
    pub witness_hamiltonian: Option<WitnessHamiltonian>,
    #[serde(default)]
    pub examples: ExamplesConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_path: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn energy(&self) -> f64 {
        self.energy
            .or(self.battery.as_ref().map(|b| b.unit_energy))
            .unwrap_or(1.0)
    }

    /// Optimizer settings with the run seed applied.
    pub fn optimizer(&self) -> Result<OptimizerConfig> {
        let cfg = OptimizerConfig {
            seed: self.seed,
            ..self.optimizer
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn require_probing(&self) -> Result<&Probing> {
        self.probing.as_ref().ok_or_else(|| missing("probing"))
    }

    pub fn require_state(&self) -> Result<&StateConfig> {
        self.state.as_ref().ok_or_else(|| missing("state"))
    }

    pub fn require_battery(&self) -> Result<&BareHamiltonianSpec> {
        self.battery.as_ref().ok_or_else(|| missing("battery"))
    }
}

pub fn missing(field: &str) -> Error {
    Error::InvalidArgument(format!("config field `{field}` is required for this experiment"))
}
