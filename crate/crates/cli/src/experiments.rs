//! One function per experiment; each writes its artifacts under the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use qbattery::bounds::{
    biseparable_bound, incoherent_bound_enumerate, ising_sweep, separable_bound_optimize, write_sweep_csv,
    BoundReport,
};
use qbattery::claims::{examples_table, write_claims_csv};
use qbattery::dynamics::CyclicProtocol;
use qbattery::hamiltonians::{build_bare, build_probing};
use qbattery::linalg::{pauli, HermitianOperator, PureState};
use qbattery::output::StateClass;
use qbattery::speed::{maximize_over_bare, SpeedReport};
use qbattery::verify::{run_all, Fault, SuiteResult};
use qbattery::witnesses::{
    coherence_witness_hamiltonian, entanglement_witness_hamiltonian, witness_report, Bipartition, WitnessState,
    WitnessVerdict,
};
use qbattery::Error;

use crate::config::{missing, ExperimentConfig, Grid, Probing, WitnessHamiltonian};
use crate::CliError;

type Outcome = std::result::Result<Vec<PathBuf>, CliError>;

fn create(dir: &Path, name: &str) -> std::result::Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> std::result::Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(path)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Serialize)]
struct SpeedOutput {
    report_time: f64,
    report: SpeedReport,
    /// Grid times where the speed is the boundary limit.
    boundary_times: Vec<f64>,
}

pub fn speed(config: &ExperimentConfig) -> Outcome {
    let bare = build_bare(config.require_battery()?)?;
    let generator = build_probing(&config.require_probing()?.to_general()?)?;
    let rho = config.require_state()?.build()?.to_density();
    let times = config
        .times
        .unwrap_or(Grid {
            min: 0.0,
            max: std::f64::consts::PI,
            points: 101,
        })
        .values()?;

    let protocol = CyclicProtocol::new(rho.clone(), generator.clone(), bare)?;
    let trajectory = protocol.trajectory(&times)?;
    let (csv_path, w) = create(&config.output_path, "trajectory.csv")?;
    trajectory.write_csv(w).map_err(csv_err)?;

    let report = maximize_over_bare(&rho, &generator, config.report_time, config.energy(), &config.optimizer()?)?;
    let boundary_times = times
        .iter()
        .zip(&trajectory.boundary_limit)
        .filter(|(_, &flag)| flag)
        .map(|(t, _)| *t)
        .collect();
    let out = SpeedOutput {
        report_time: config.report_time,
        report,
        boundary_times,
    };
    let json_path = write_json(&config.output_path, "speed_report.json", &out)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Serialize)]
struct BoundsOutput {
    incoherent: BoundReport,
    fully_separable: BoundReport,
    biseparable: Option<BoundReport>,
}

pub fn bounds(config: &ExperimentConfig) -> Outcome {
    let spec = config.require_probing()?.to_general()?;
    let energy = config.energy();
    let optimizer = config.optimizer()?;
    let biseparable = if spec.n >= 2 {
        Some(biseparable_bound(&build_probing(&spec)?, spec.n, spec.d, energy, &optimizer)?)
    } else {
        None
    };
    let out = BoundsOutput {
        incoherent: incoherent_bound_enumerate(&spec, energy)?,
        fully_separable: separable_bound_optimize(&spec, energy, &optimizer)?,
        biseparable,
    };
    Ok(vec![write_json(&config.output_path, "bounds.json", &out)?])
}

pub fn ising(config: &ExperimentConfig) -> Outcome {
    let Probing::Ising(base) = config.require_probing()? else {
        return Err(Error::InvalidArgument("the Ising sweep needs an Ising probing spec".into()).into());
    };
    let gammas = config.sweep.ok_or_else(|| missing("sweep"))?.values()?;
    let rows = ising_sweep(base, &gammas, config.energy(), &config.optimizer()?)?;
    let (path, w) = create(&config.output_path, "ising_sweep.csv")?;
    write_sweep_csv(&rows, w).map_err(csv_err)?;
    Ok(vec![path])
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum WitnessOutput {
    Verdict(WitnessVerdict),
    OverlapUnreachable {
        /// Largest Schmidt coefficient across the cut; must reach 1/2.
        best_schmidt_coefficient: f64,
        witnessed: bool,
    },
}

/// Basis index whose population is closest to 1/2.
fn most_balanced_index(phi: &PureState) -> usize {
    let score = |z: &qbattery::linalg::C64| {
        let p = z.norm_sqr();
        p * (1.0 - p)
    };
    let amps = phi.amplitudes();
    (0..amps.len()).fold(0, |best, i| if score(&amps[i]) > score(&amps[best]) { i } else { best })
}

fn witness_hamiltonian(
    config: &ExperimentConfig,
    phi: &PureState,
    class: StateClass,
    n: usize,
    d: usize,
) -> std::result::Result<(HermitianOperator, String), CliError> {
    let choice = config.witness_hamiltonian.unwrap_or(match (class, &config.probing) {
        (_, Some(_)) => WitnessHamiltonian::Probing,
        (StateClass::Incoherent, None) => WitnessHamiltonian::Coherence,
        (StateClass::FullySeparable, None) => WitnessHamiltonian::CollectiveZ,
        (StateClass::Biseparable, None) => WitnessHamiltonian::Entanglement,
    });
    Ok(match choice {
        WitnessHamiltonian::Probing => {
            let spec = config.require_probing()?.to_general()?;
            (build_probing(&spec)?, format!("probing spec, n={} d={} k={}", spec.n, spec.d, spec.k))
        }
        WitnessHamiltonian::Coherence => {
            let b = most_balanced_index(phi);
            let h = match coherence_witness_hamiltonian(phi, b) {
                Ok((h, _)) => h,
                // an incoherent input: any diagonal projector gives zero speed
                Err(Error::UselessWitness(_)) => HermitianOperator::projector(&PureState::basis(phi.dim(), b)?),
                Err(e) => return Err(e.into()),
            };
            (h, format!("coherence witness on basis state {b}"))
        }
        WitnessHamiltonian::Entanglement => {
            let w = entanglement_witness_hamiltonian(phi, &Bipartition::first_site(n), d, n)?;
            (w.hamiltonian, "entanglement witness across {0}|rest".to_string())
        }
        WitnessHamiltonian::CollectiveZ => {
            if d != 2 {
                return Err(Error::InvalidArgument("collective-z needs qubits".into()).into());
            }
            (pauli::collective(&pauli::z(), n)?, "(1/2) sum sigma_z".to_string())
        }
    })
}

pub fn witness(config: &ExperimentConfig) -> Outcome {
    let state = config.require_state()?;
    let (n, d) = state.sites();
    let phi = state.build()?;
    let class = config.class.unwrap_or(StateClass::FullySeparable);
    let out = match witness_hamiltonian(config, &phi, class, n, d) {
        Ok((h, label)) => WitnessOutput::Verdict(witness_report(
            &WitnessState::Pure(phi),
            &h,
            &label,
            class,
            n,
            d,
            config.energy(),
            &config.optimizer()?,
        )?),
        Err(CliError::Core(Error::OverlapUnreachable { best })) => WitnessOutput::OverlapUnreachable {
            best_schmidt_coefficient: best,
            witnessed: false,
        },
        Err(e) => return Err(e),
    };
    Ok(vec![write_json(&config.output_path, "witness.json", &out)?])
}

pub fn examples(config: &ExperimentConfig) -> Outcome {
    let rows = examples_table(&config.examples, &config.optimizer()?)?;
    let (path, w) = create(&config.output_path, "claims.csv")?;
    write_claims_csv(&rows, w).map_err(csv_err)?;
    Ok(vec![path])
}

/// Runs the invariant suites, prints a table and fails when any suite fails.
pub fn verify(config: &ExperimentConfig, fault: Fault) -> Outcome {
    let results = run_all(config.seed, fault, &config.optimizer()?);
    print_table(&results);
    let path = write_json(&config.output_path, "verify.json", &results)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(vec![path])
}

fn print_table(results: &[SuiteResult]) {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in results {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:width$}  {:>5} cases  {}", r.name, r.cases, r.detail);
    }
}
