//! Cross-module invariant suites on small registers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    biseparable_bound, incoherent_bound_of_operator, inhomogeneous_upper_bound, nu_decomposition,
    separable_bound_of_operator, separable_bound_optimize,
};
use crate::dynamics::CyclicProtocol;
use crate::error::Result;
use crate::hamiltonians::{axes, build_ising, build_probing, IsingSpec, ProbingHamiltonianSpec};
use crate::linalg::{c, hermitian_defect, pauli, HermitianOperator, PureState};
use crate::optimize::OptimizerConfig;
use crate::output::StateClass;
use crate::random::{
    random_density_matrix, random_hermitian, random_probing_spec, random_pure_state, rng_from_seed, substream,
    SimRng,
};
use crate::speed::{convexity_probe, pure_state_speed, sld_speed};
use crate::witnesses::{
    coherence_witness_hamiltonian, entanglement_witness_hamiltonian, ghz_state, soundness_sweep, Bipartition,
    SOUNDNESS_SLACK,
};

/// Deliberate corruption used as a negative control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    /// Adds an anti-Hermitian perturbation to every built probing Hamiltonian.
    Hermiticity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub worst: f64,
    pub detail: String,
}

struct Tally {
    cases: usize,
    worst: f64,
    failure: Option<String>,
}

impl Tally {
    fn new() -> Self {
        Self {
            cases: 0,
            worst: 0.0,
            failure: None,
        }
    }

    /// Records `excess`, failing when positive.
    fn check(&mut self, excess: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        if excess > self.worst || excess.is_nan() {
            self.worst = excess;
        }
        if (excess > 0.0 || excess.is_nan()) && self.failure.is_none() {
            self.failure = Some(what());
        }
    }

    fn finish(self, name: &str) -> SuiteResult {
        SuiteResult {
            name: name.to_string(),
            passed: self.failure.is_none(),
            cases: self.cases,
            worst: self.worst,
            detail: self.failure.unwrap_or_default(),
        }
    }
}

fn finish_or_error(name: &str, outcome: Result<Tally>) -> SuiteResult {
    match outcome {
        Ok(t) => t.finish(name),
        Err(e) => SuiteResult {
            name: name.to_string(),
            passed: false,
            cases: 0,
            worst: f64::NAN,
            detail: e.to_string(),
        },
    }
}

fn bare_for(dim: usize, rng: &mut SimRng) -> HermitianOperator {
    let mut lambdas: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 3.0).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas[0] = 0.0;
    lambdas[dim - 1] += 0.1;
    HermitianOperator::from_real_diagonal(&lambdas)
}

fn suite_hermiticity(seed: u64, fault: Fault) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..20 {
        let mut rng = substream(seed, i);
        let n = 2 + (i as usize % 3);
        let spec = random_probing_spec(n, 2, 1 + (i as usize % 2), &mut rng);
        let mut m = build_probing(&spec)?.into_matrix();
        if fault == Fault::Hermiticity {
            m[(0, 1)] += c(0.0, 1e-3);
        }
        let defect = hermitian_defect(&m);
        t.check(defect - 1e-12, || format!("probing Hamiltonian {i} has defect {defect:.3e}"));
    }
    Ok(t)
}

fn suite_complement(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..100 {
        let mut rng = substream(seed, i);
        let dim = [2, 3, 4, 8, 9][i as usize % 5];
        let rho = random_density_matrix(dim, 1 + i as usize % dim, &mut rng);
        let h = random_hermitian(dim, &mut rng);
        let bare = bare_for(dim, &mut rng);
        let trace = bare.trace();
        let p = CyclicProtocol::new(rho, h, bare)?;
        let time = rng.random_range(-5.0..5.0);
        let gap = (p.energy(time)? + trace * p.complement_energy(time)? - trace).abs();
        t.check(gap - 1e-10, || format!("complement identity off by {gap:.3e}"));
    }
    Ok(t)
}

fn suite_speed_derivative(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..100 {
        let mut rng = substream(seed, i);
        let dim = 2 + i as usize % 3;
        let rho = random_density_matrix(dim, 1 + i as usize % dim, &mut rng);
        let p = CyclicProtocol::new(rho, random_hermitian(dim, &mut rng), bare_for(dim, &mut rng))?;
        let time = rng.random_range(0.0..3.0);
        let f = p.energy(time)?;
        if f.min(p.trace_bare() - f) < 1e-3 * p.trace_bare() {
            continue;
        }
        let v = p.speed(time)?.value;
        let h = 1e-4;
        let forward = |step: f64| p.hellinger_distance(time, time + step).map(|d| d / step);
        let fd = 2.0 * forward(h / 2.0)? - forward(h)?;
        let rel = (fd - v).abs() / v.max(1e-3);
        t.check(rel - 1e-6, || format!("speed {v} against finite difference {fd}"));
    }
    Ok(t)
}

fn suite_arcsin(_seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    let rho = PureState::basis(2, 0)?.to_density();
    let p = CyclicProtocol::new(rho, pauli::x().scaled(0.5), HermitianOperator::from_real_diagonal(&[0.0, 1.0]))?;
    for j in 1..=8 {
        let end = std::f64::consts::PI * j as f64 / 8.0;
        let work = p.charging_work(end)?;
        let integral = p.integrate_speed(0.0, end, 400)?;
        t.check((work - integral).abs() - 1e-6, || format!("arcsin work {work} against integral {integral}"));
    }
    Ok(t)
}

fn suite_sld(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..60 {
        let mut rng = substream(seed, i);
        let dim = 2 + i as usize % 7;
        let phi = random_pure_state(dim, &mut rng);
        let h = random_hermitian(dim, &mut rng);
        let a = sld_speed(&phi.to_density(), &h, 1.0)?;
        let b = pure_state_speed(&phi, &h, 1.0)?;
        t.check((a - b).abs() - 1e-9 * (1.0 + b), || format!("SLD {a} against variance {b}"));

        let rho = random_density_matrix(dim, 1 + i as usize % dim, &mut rng);
        let lambda = random_pure_state(dim, &mut rng);
        let p = CyclicProtocol::new(rho.clone(), h.clone(), HermitianOperator::projector(&lambda))?;
        if let Ok(s) = p.speed(rng.random_range(0.0..2.0)) {
            let bound = sld_speed(&rho, &h, 1.0)?;
            t.check(s.value.powi(2) - bound - 1e-8, || format!("projector speed^2 {} above {bound}", s.value.powi(2)));
        }
    }
    Ok(t)
}

fn suite_convexity(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..60 {
        let mut rng = substream(seed, i);
        let dim = 2 + i as usize % 3;
        let h = random_hermitian(dim, &mut rng);
        let raw: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let mut states: Vec<_> = raw
            .iter()
            .map(|w| (w / total, random_density_matrix(dim, 1 + i as usize % dim, &mut rng)))
            .collect();
        let drift = 1.0 - states.iter().map(|s| s.0).sum::<f64>();
        states[0].0 += drift;
        let (lhs, rhs) = convexity_probe(&states, &h, 1.0)?;
        t.check(lhs - rhs - 1e-9, || format!("mixture {lhs} above average {rhs}"));
    }
    Ok(t)
}

fn suite_nu(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..100 {
        let mut rng = substream(seed, i);
        let dim = 2 + i as usize % 15;
        let psi = random_pure_state(dim, &mut rng);
        let (h1, h2) = (random_hermitian(dim, &mut rng), random_hermitian(dim, &mut rng));
        let gamma = rng.random_range(-3.0..3.0);
        let (a, b, cc) = nu_decomposition(&psi, &h1, &h2, 1.0)?;
        let direct = pure_state_speed(&psi, &(&h1 + &h2.scaled(gamma)), 1.0)?;
        let gap = (direct - (a + gamma * b + gamma * gamma * cc)).abs();
        t.check(gap - 1e-9 * (1.0 + direct), || format!("polynomial identity off by {gap:.3e}"));
    }
    Ok(t)
}

fn suite_nesting(seed: u64, config: &OptimizerConfig) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..6 {
        let mut rng = substream(seed, i);
        let n = 2 + i as usize % 3;
        let spec = random_probing_spec(n, 2, 1 + i as usize % 2, &mut rng);
        let h = build_probing(&spec)?;
        let inc = incoherent_bound_of_operator(&h, 2, n, 1.0)?.oracle_value;
        let sep = separable_bound_of_operator(&h, 2, n, 1.0, config)?.oracle_value;
        let bis = biseparable_bound(&h, n, 2, 1.0, config)?.oracle_value;
        t.check(inc - sep - 1e-6, || format!("incoherent {inc} above separable {sep}"));
        t.check(sep - bis - 1e-6, || format!("separable {sep} above biseparable {bis}"));
    }
    Ok(t)
}

fn suite_separable_local(seed: u64, config: &OptimizerConfig) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..6 {
        let mut rng = substream(seed, i);
        let n = 1 + i as usize % 4;
        let alpha: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let spec = ProbingHamiltonianSpec {
            v: (0..n).map(|_| crate::random::random_unit_vector(3, &mut rng)).collect(),
            ..ProbingHamiltonianSpec::local(alpha.clone(), axes::z(), 2)
        };
        let value = separable_bound_optimize(&spec, 1.0, config)?.oracle_value;
        let expected = alpha.iter().map(|a| a * a).sum::<f64>() / 4.0;
        t.check((value - expected).abs() - 1e-6, || format!("local ceiling {value} against {expected}"));
    }
    Ok(t)
}

fn suite_inhomogeneous(seed: u64, config: &OptimizerConfig) -> Result<Tally> {
    let mut t = Tally::new();
    for i in 0..6 {
        let mut rng = substream(seed, i);
        let n = 2 + i as usize % 3;
        let spec = IsingSpec::qubits(n, 1, rng.random::<f64>(), rng.random_range(0.0..2.0));
        let mut probing = build_ising(&spec)?;
        for a in probing.alpha.iter_mut() {
            *a = rng.random::<f64>();
        }
        let value = separable_bound_optimize(&probing, 1.0, config)?.oracle_value;
        let bound = inhomogeneous_upper_bound(&probing.alpha, probing.gamma, n, 1.0)?;
        t.check(value - bound - 1e-6, || format!("separable {value} above the term-wise bound {bound}"));
    }
    Ok(t)
}

fn suite_witnesses(config: &OptimizerConfig) -> Result<Tally> {
    let mut t = Tally::new();
    for n in 1..=4 {
        let phi = pauli::plus_product(n);
        let (h, lambda) = coherence_witness_hamiltonian(&phi, 0)?;
        let v = pure_state_speed(&phi, &h, 1.0)?;
        t.check((v - lambda * (1.0 - lambda)).abs() - 1e-12, || format!("coherence witness speed {v}"));
    }
    for n in 2..=4 {
        let ghz = ghz_state(n)?;
        let w = entanglement_witness_hamiltonian(&ghz, &Bipartition::first_site(n), 2, n)?;
        let v = pure_state_speed(&ghz, &w.hamiltonian, 1.0)?;
        t.check((v - 0.25).abs() - 1e-10, || format!("entanglement witness speed {v}"));
        let ceiling = biseparable_bound(&w.hamiltonian, n, 2, 1.0, config)?.oracle_value;
        t.check(ceiling - 0.25 - 1e-6, || format!("biseparable ceiling {ceiling} above E/4"));
    }
    for n in 2..=8 {
        let h = pauli::collective(&pauli::z(), n)?;
        let v = pure_state_speed(&ghz_state(n)?, &h, 1.0)?;
        let single = pure_state_speed(&pauli::plus(), &pauli::z().scaled(0.5), 1.0)?;
        let expected = (n * n) as f64 * single;
        t.check((v - expected).abs() - 1e-9, || format!("GHZ({n}) speed {v} against {expected}"));
    }
    Ok(t)
}

fn suite_soundness(seed: u64, config: &OptimizerConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let mut rng = rng_from_seed(seed);
    let h = random_hermitian(8, &mut rng);
    for class in [StateClass::Incoherent, StateClass::FullySeparable, StateClass::Biseparable] {
        for row in soundness_sweep(&h, class, 3, 2, 1.0, 100, seed, config)? {
            t.check(row.speed - row.ceiling - SOUNDNESS_SLACK, || {
                format!("{class} sample {} at {} above {}", row.sample_id, row.speed, row.ceiling)
            });
        }
    }
    Ok(t)
}

fn suite_determinism(seed: u64, config: &OptimizerConfig) -> Result<Tally> {
    let mut t = Tally::new();
    let mut rng = rng_from_seed(seed);
    let h = random_hermitian(8, &mut rng);
    let first = separable_bound_of_operator(&h, 2, 3, 1.0, config)?.oracle_value;
    let second = separable_bound_of_operator(&h, 2, 3, 1.0, config)?.oracle_value;
    t.check(if first == second { 0.0 } else { 1.0 }, || format!("repeat gave {first} then {second}"));
    let doubled = OptimizerConfig {
        restarts: 2 * config.restarts,
        ..*config
    };
    let more = separable_bound_of_operator(&h, 2, 3, 1.0, &doubled)?.oracle_value;
    t.check(first - more, || format!("doubling restarts lowered {first} to {more}"));
    Ok(t)
}

/// Runs every suite; a suite fails on the first violated invariant.
pub fn run_all(seed: u64, fault: Fault, config: &OptimizerConfig) -> Vec<SuiteResult> {
    let config = OptimizerConfig { seed, ..*config };
    vec![
        finish_or_error("hermiticity", suite_hermiticity(seed, fault)),
        finish_or_error("complement identity", suite_complement(seed)),
        finish_or_error("speed vs distance derivative", suite_speed_derivative(seed)),
        finish_or_error("arcsin work vs integral", suite_arcsin(seed)),
        finish_or_error("SLD consistency and bound", suite_sld(seed)),
        finish_or_error("QFI convexity", suite_convexity(seed)),
        finish_or_error("moment polynomial identity", suite_nu(seed)),
        finish_or_error("class nesting", suite_nesting(seed, &config)),
        finish_or_error("local separable ceiling", suite_separable_local(seed, &config)),
        finish_or_error("term-wise Ising bound", suite_inhomogeneous(seed, &config)),
        finish_or_error("witness constructions", suite_witnesses(&config)),
        finish_or_error("witness soundness", suite_soundness(seed, &config)),
        finish_or_error("optimizer determinism", suite_determinism(seed, &config)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> OptimizerConfig {
        OptimizerConfig::default().with_restarts(6)
    }

    #[test]
    fn all_suites_pass() {
        for r in run_all(7, Fault::None, &quick()) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
            assert!(r.cases > 0, "{} ran no cases", r.name);
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let results = run_all(3, Fault::Hermiticity, &quick());
        let herm = results.iter().find(|r| r.name == "hermiticity").unwrap();
        assert!(!herm.passed);
        assert!(results.iter().filter(|r| r.name != "hermiticity").all(|r| r.passed));
    }

    #[test]
    fn verdicts_do_not_depend_on_seed() {
        for r in run_all(7, Fault::None, &quick()) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
