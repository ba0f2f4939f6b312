//! Bare Hamiltonians, their complements, and the k-body probing family.
//!
//! Sites are counted from 0. A probing Hamiltonian is
//!
//! ```text
//! H = (1/d) sum_i alpha_i sigma_{v_i}^{(i)}
//!   + (gamma/d^k) sum_{i_1..i_k} beta_{i_1..i_k} sigma_{u_{i_1}}^{(i_1)} ... sigma_{u_{i_k}}^{(i_k)}
//! ```
//!
//! where the coupling sum runs over ordered tuples of pairwise-distinct sites.
//! `beta` is stored once per site set (sorted tuple); the builder multiplies each
//! stored term by `k!` to reproduce the ordered sum. Tuples with repeated sites
//! are not part of the model and are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    direction_operator, embed_product, gell_mann_generators, hilbert_dim, CMatrix, HermitianOperator,
    UnitaryOperator, C64,
};

const DIRECTION_TOL: f64 = 1e-10;
const BETA_SYMMETRY_TOL: f64 = 1e-12;

/// Spectrum `lambda_j E` of a bare Hamiltonian in a chosen eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BareHamiltonianSpec {
    pub dim: usize,
    /// Dimensionless multiples of `unit_energy`, ascending, starting at 0.
    pub eigenvalues: Vec<f64>,
    pub unit_energy: f64,
    /// Columns are the eigenvectors, entries as `[re, im]`, row-major.
    /// Defaults to the computational basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenbasis: Option<Vec<Vec<[f64; 2]>>>,
}

impl BareHamiltonianSpec {
    pub fn diagonal(eigenvalues: Vec<f64>, unit_energy: f64) -> Self {
        Self {
            dim: eigenvalues.len(),
            eigenvalues,
            unit_energy,
            eigenbasis: None,
        }
    }

    /// `E |1><1|` on a qubit.
    pub fn qubit(unit_energy: f64) -> Self {
        Self::diagonal(vec![0.0, 1.0], unit_energy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.eigenvalues.len() != self.dim {
            return Err(Error::WrongVectorLength {
                expected: self.dim,
                actual: self.eigenvalues.len(),
            });
        }
        if !(self.unit_energy.is_finite() && self.unit_energy > 0.0) {
            return Err(Error::InvalidUnitEnergy(self.unit_energy));
        }
        if self.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if self.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::UnsortedEigenvalues);
        }
        if self.eigenvalues[0] != 0.0 {
            return Err(Error::NonzeroGroundEnergy(self.eigenvalues[0]));
        }
        Ok(())
    }

    fn eigenbasis_operator(&self) -> Result<UnitaryOperator> {
        let Some(rows) = &self.eigenbasis else {
            return Ok(UnitaryOperator::identity(self.dim));
        };
        if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
            return Err(Error::InvalidDimension(format!(
                "eigenbasis must be {0}x{0}",
                self.dim
            )));
        }
        let m = CMatrix::from_fn(self.dim, self.dim, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
        UnitaryOperator::new(m)
    }
}

/// `H0 = sum_j lambda_j E |lambda_j><lambda_j|`.
pub fn build_bare(spec: &BareHamiltonianSpec) -> Result<HermitianOperator> {
    spec.validate()?;
    let basis = spec.eigenbasis_operator()?;
    let diag: Vec<f64> = spec.eigenvalues.iter().map(|l| l * spec.unit_energy).collect();
    let d = HermitianOperator::from_real_diagonal(&diag);
    HermitianOperator::new(basis.conjugate(d.matrix()))
}

/// Complement `1 - H0 / Tr H0`.
pub fn complement(h0: &HermitianOperator) -> Result<HermitianOperator> {
    let trace = h0.trace();
    if !(trace > 0.0) {
        return Err(Error::DegenerateBareHamiltonian(trace));
    }
    Ok(&HermitianOperator::identity(h0.dim()) - &h0.scaled(1.0 / trace))
}

/// One stored coupling `beta` for an unordered site set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub sites: Vec<usize>,
    pub value: f64,
}

/// Parameters of the k-body probing Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbingHamiltonianSpec {
    /// Number of particles.
    pub n: usize,
    /// Local dimension.
    pub d: usize,
    /// Local weights in `[0, 1]`.
    pub alpha: Vec<f64>,
    /// Local directions on the Gell-Mann sphere, one per site.
    pub v: Vec<Vec<f64>>,
    /// Correlation order.
    pub k: usize,
    /// Couplings. Entries naming the same site set in different orders must agree.
    #[serde(default)]
    pub beta: Vec<BetaEntry>,
    /// Coupling directions, one per site.
    pub u: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl ProbingHamiltonianSpec {
    /// Local terms only (`gamma = 0`) with a shared direction.
    pub fn local(alpha: Vec<f64>, direction: Vec<f64>, d: usize) -> Self {
        let n = alpha.len();
        Self {
            n,
            d,
            alpha,
            v: vec![direction.clone(); n],
            k: 2,
            beta: Vec::new(),
            u: vec![direction; n],
            gamma: 0.0,
        }
    }

    pub fn hilbert_dim(&self) -> Result<usize> {
        hilbert_dim(self.d, self.n)
    }

    /// Validates the invariants and returns `beta` keyed by sorted site tuple.
    pub fn canonical_beta(&self) -> Result<BTreeMap<Vec<usize>, f64>> {
        if self.n == 0 {
            return Err(Error::InvalidDimension("no sites".into()));
        }
        if self.d < 2 {
            return Err(Error::InvalidDimension(format!("local dimension {}", self.d)));
        }
        for (name, len) in [("alpha", self.alpha.len()), ("v", self.v.len()), ("u", self.u.len())] {
            if len != self.n {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {len} entries for {} sites",
                    self.n
                )));
            }
        }
        if let Some(&a) = self.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidAlpha(a));
        }
        let generators = self.d * self.d - 1;
        for dir in self.v.iter().chain(&self.u) {
            if dir.len() != generators {
                return Err(Error::WrongVectorLength {
                    expected: generators,
                    actual: dir.len(),
                });
            }
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() <= DIRECTION_TOL) {
                return Err(Error::NonUnitDirection(norm));
            }
        }
        if !self.gamma.is_finite() {
            return Err(Error::NonFinite);
        }
        // k > n is tolerated only when there are no couplings to place
        if self.k == 0 || (self.k > self.n && !self.beta.is_empty()) {
            return Err(Error::OrderOutOfRange {
                order: self.k,
                n_sites: self.n,
            });
        }
        let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for entry in &self.beta {
            if entry.sites.len() != self.k || entry.sites.iter().any(|&s| s >= self.n) {
                return Err(Error::InvalidTuple(entry.sites.clone()));
            }
            if !entry.value.is_finite() {
                return Err(Error::NonFinite);
            }
            let mut key = entry.sites.clone();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidTuple(entry.sites.clone()));
            }
            match table.get(&key) {
                Some(&prev) if (prev - entry.value).abs() > BETA_SYMMETRY_TOL => {
                    return Err(Error::AsymmetricBeta(entry.sites.clone()));
                }
                Some(_) => {}
                None => {
                    table.insert(key, entry.value);
                }
            }
        }
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        self.canonical_beta().map(|_| ())
    }

    /// `beta` of an ordered tuple, zero when absent or when sites repeat.
    pub fn beta_of(&self, sites: &[usize]) -> Result<f64> {
        let table = self.canonical_beta()?;
        let mut key = sites.to_vec();
        key.sort_unstable();
        Ok(table.get(&key).copied().unwrap_or(0.0))
    }

    /// Local part `H1 = (1/d) sum_i alpha_i sigma_{v_i}^{(i)}`.
    pub fn local_part(&self) -> Result<HermitianOperator> {
        self.validate()?;
        let basis = gell_mann_generators(self.d)?;
        let dim = self.hilbert_dim()?;
        let mut acc = HermitianOperator::zeros(dim);
        for (site, (&a, dir)) in self.alpha.iter().zip(&self.v).enumerate() {
            if a == 0.0 {
                continue;
            }
            let local = direction_operator(&basis, dir)?;
            let term = embed_product(&[(site, &local)], self.n)?;
            acc = &acc + &term.scaled(a / self.d as f64);
        }
        Ok(acc)
    }

    /// Coupling part `H2` without the factor `gamma`, summed over ordered tuples.
    pub fn coupling_part(&self) -> Result<HermitianOperator> {
        let table = self.canonical_beta()?;
        let basis = gell_mann_generators(self.d)?;
        let dim = self.hilbert_dim()?;
        let locals = self
            .u
            .iter()
            .map(|dir| direction_operator(&basis, dir))
            .collect::<Result<Vec<_>>>()?;
        let multiplicity: f64 = (1..=self.k).map(|x| x as f64).product();
        let prefactor = multiplicity / (self.d as f64).powi(self.k as i32);
        let mut acc = HermitianOperator::zeros(dim);
        for (sites, &value) in &table {
            if value == 0.0 {
                continue;
            }
            let factors: Vec<(usize, &HermitianOperator)> = sites.iter().map(|&s| (s, &locals[s])).collect();
            let term = embed_product(&factors, self.n)?;
            acc = &acc + &term.scaled(prefactor * value);
        }
        Ok(acc)
    }
}

/// Assembles `H1 + gamma H2`.
pub fn build_probing(spec: &ProbingHamiltonianSpec) -> Result<HermitianOperator> {
    let local = spec.local_part()?;
    if spec.gamma == 0.0 {
        return Ok(local);
    }
    let coupling = spec.coupling_part()?;
    Ok(&local + &coupling.scaled(spec.gamma))
}

/// Ising chain with range-`k` pair couplings `V_ij = 1/(2k)` for `0 < |i-j| <= k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingSpec {
    pub n: usize,
    /// Interaction range.
    pub k: usize,
    /// Homogeneous local weight in `[0, 1]`.
    pub a: f64,
    pub gamma: f64,
    /// Shared direction `v = u`; defaults to `z` for qubits.
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
    #[serde(default = "default_local_dim")]
    pub d: usize,
}

fn default_local_dim() -> usize {
    2
}

impl IsingSpec {
    pub fn qubits(n: usize, k: usize, a: f64, gamma: f64) -> Self {
        Self {
            n,
            k,
            a,
            gamma,
            direction: None,
            d: 2,
        }
    }
}

/// Translates an Ising chain into the general pairwise probing form.
pub fn build_ising(spec: &IsingSpec) -> Result<ProbingHamiltonianSpec> {
    if spec.n < 2 || spec.k < 1 || spec.k > spec.n - 1 {
        return Err(Error::OrderOutOfRange {
            order: spec.k,
            n_sites: spec.n,
        });
    }
    if !(0.0..=1.0).contains(&spec.a) {
        return Err(Error::InvalidAlpha(spec.a));
    }
    let direction = match &spec.direction {
        Some(dir) => dir.clone(),
        None => {
            // last generator is the lowest diagonal one; for qubits this is sigma_z
            let mut z = vec![0.0; spec.d * spec.d - 1];
            if spec.d != 2 {
                return Err(Error::InvalidArgument(
                    "an explicit direction is required for d != 2".into(),
                ));
            }
            z[2] = 1.0;
            z
        }
    };
    let coupling = 1.0 / (2.0 * spec.k as f64);
    let mut beta = Vec::new();
    for i in 0..spec.n {
        for j in (i + 1)..spec.n.min(i + spec.k + 1) {
            beta.push(BetaEntry {
                sites: vec![i, j],
                value: coupling,
            });
        }
    }
    let probing = ProbingHamiltonianSpec {
        n: spec.n,
        d: spec.d,
        alpha: vec![spec.a; spec.n],
        v: vec![direction.clone(); spec.n],
        k: 2,
        beta,
        u: vec![direction; spec.n],
        gamma: spec.gamma,
    };
    probing.validate()?;
    Ok(probing)
}

/// Unit direction vectors for qubits.
pub mod axes {
    pub fn x() -> Vec<f64> {
        vec![1.0, 0.0, 0.0]
    }

    pub fn y() -> Vec<f64> {
        vec![0.0, 1.0, 0.0]
    }

    pub fn z() -> Vec<f64> {
        vec![0.0, 0.0, 1.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, embed_local, pauli};
    use crate::random::{random_unit_vector, rng_from_seed};
    use proptest::prelude::*;

    fn close(a: &HermitianOperator, b: &HermitianOperator, tol: f64) {
        let diff = a.max_abs_diff(b);
        assert!(diff < tol, "operators differ by {diff:.3e}");
    }

    #[test]
    fn bare_diagonal_cases() {
        let h = build_bare(&BareHamiltonianSpec::diagonal(vec![0.0, 1.0], 1.0)).unwrap();
        close(&h, &HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1e-15);
        let h = build_bare(&BareHamiltonianSpec::diagonal(vec![0.0, 1.0, 1.0], 2.0)).unwrap();
        close(&h, &HermitianOperator::from_real_diagonal(&[0.0, 2.0, 2.0]), 1e-15);
    }

    #[test]
    fn bare_rejects_bad_spectra() {
        let unsorted = BareHamiltonianSpec::diagonal(vec![0.0, 2.0, 1.0], 1.0);
        assert!(matches!(build_bare(&unsorted), Err(Error::UnsortedEigenvalues)));
        let shifted = BareHamiltonianSpec::diagonal(vec![0.5, 1.0], 1.0);
        assert!(matches!(build_bare(&shifted), Err(Error::NonzeroGroundEnergy(_))));
        let bad_energy = BareHamiltonianSpec::diagonal(vec![0.0, 1.0], 0.0);
        assert!(matches!(build_bare(&bad_energy), Err(Error::InvalidUnitEnergy(_))));
    }

    #[test]
    fn bare_round_trip_in_random_basis() {
        let mut rng = rng_from_seed(21);
        let basis = eigh(&crate::random::random_hermitian(4, &mut rng)).unwrap().vectors;
        let rows: Vec<Vec<[f64; 2]>> = (0..4)
            .map(|i| (0..4).map(|j| [basis.matrix()[(i, j)].re, basis.matrix()[(i, j)].im]).collect())
            .collect();
        let spec = BareHamiltonianSpec {
            dim: 4,
            eigenvalues: vec![0.0, 0.3, 1.2, 2.5],
            unit_energy: 1.7,
            eigenbasis: Some(rows),
        };
        let spectrum = eigh(&build_bare(&spec).unwrap()).unwrap();
        for (got, lambda) in spectrum.values.iter().zip(&spec.eigenvalues) {
            assert!((got - lambda * 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_cases() {
        let qubit = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        close(&complement(&qubit).unwrap(), &HermitianOperator::from_real_diagonal(&[1.0, 0.0]), 1e-15);
        let qutrit = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0]);
        close(
            &complement(&qutrit).unwrap(),
            &HermitianOperator::from_real_diagonal(&[1.0, 2.0 / 3.0, 1.0 / 3.0]),
            1e-15,
        );
        assert!(matches!(
            complement(&HermitianOperator::zeros(3)),
            Err(Error::DegenerateBareHamiltonian(_))
        ));
    }

    proptest! {
        #[test]
        fn complement_trace_and_identity(raw in proptest::collection::vec(0.0f64..5.0, 2..6), energy in 0.1f64..3.0) {
            let mut lambdas = raw;
            lambdas.sort_by(f64::total_cmp);
            lambdas[0] = 0.0;
            prop_assume!(lambdas.iter().any(|&l| l > 1e-6));
            let h0 = build_bare(&BareHamiltonianSpec::diagonal(lambdas.clone(), energy)).unwrap();
            let bar = complement(&h0).unwrap();
            prop_assert!((bar.trace() - (lambdas.len() as f64 - 1.0)).abs() < 1e-12);
            let tr = h0.trace();
            let lhs = &h0 + &bar.scaled(tr);
            prop_assert!(lhs.max_abs_diff(&HermitianOperator::identity(lambdas.len()).scaled(tr)) < 1e-12 * tr.max(1.0));
        }
    }

    #[test]
    fn probing_single_and_local_terms() {
        let spec = ProbingHamiltonianSpec::local(vec![1.0], axes::z(), 2);
        close(&build_probing(&spec).unwrap(), &pauli::z().scaled(0.5), 1e-15);

        let a = 0.6;
        let spec = ProbingHamiltonianSpec::local(vec![a, a], axes::z(), 2);
        let expected = &embed_local(&pauli::z(), 0, 2).unwrap() + &embed_local(&pauli::z(), 1, 2).unwrap();
        close(&build_probing(&spec).unwrap(), &expected.scaled(a / 2.0), 1e-15);
    }

    #[test]
    fn probing_pair_counts_both_orderings() {
        let spec = ProbingHamiltonianSpec {
            n: 3,
            d: 2,
            alpha: vec![0.0; 3],
            v: vec![axes::z(); 3],
            k: 2,
            beta: vec![
                BetaEntry { sites: vec![0, 1], value: 1.0 },
                BetaEntry { sites: vec![1, 0], value: 1.0 },
            ],
            u: vec![axes::z(); 3],
            gamma: 1.0,
        };
        let zz = pauli::z().kron(&pauli::z()).kron(&HermitianOperator::identity(2));
        close(&build_probing(&spec).unwrap(), &zz.scaled(2.0 / 4.0), 1e-15);
    }

    #[test]
    fn probing_rejects_invalid_specs() {
        let mut spec = ProbingHamiltonianSpec::local(vec![0.5, 0.5], axes::z(), 2);
        spec.gamma = 1.0;
        spec.beta = vec![
            BetaEntry { sites: vec![0, 1], value: 1.0 },
            BetaEntry { sites: vec![1, 0], value: 0.5 },
        ];
        assert!(matches!(build_probing(&spec), Err(Error::AsymmetricBeta(_))));

        spec.beta = vec![BetaEntry { sites: vec![1, 1], value: 1.0 }];
        assert!(matches!(build_probing(&spec), Err(Error::InvalidTuple(_))));

        let mut spec = ProbingHamiltonianSpec::local(vec![0.5, 0.5], axes::z(), 2);
        spec.v[1] = vec![1.0, 1.0, 0.0];
        assert!(matches!(build_probing(&spec), Err(Error::NonUnitDirection(_))));

        let spec = ProbingHamiltonianSpec::local(vec![1.5], axes::z(), 2);
        assert!(matches!(build_probing(&spec), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn gamma_zero_ignores_couplings() {
        let mut rng = rng_from_seed(8);
        let base = ProbingHamiltonianSpec::local(vec![0.3, 0.9, 0.1], random_unit_vector(3, &mut rng), 2);
        let mut other = base.clone();
        other.k = 3;
        other.beta = vec![BetaEntry { sites: vec![0, 1, 2], value: 4.0 }];
        other.u = (0..3).map(|_| random_unit_vector(3, &mut rng)).collect();
        close(&build_probing(&base).unwrap(), &build_probing(&other).unwrap(), 0.0 + 1e-15);
    }

    #[test]
    fn probing_is_invariant_under_site_relabelling_of_beta() {
        let mut rng = rng_from_seed(4);
        let dirs: Vec<Vec<f64>> = (0..4).map(|_| random_unit_vector(3, &mut rng)).collect();
        let mk = |entries: Vec<BetaEntry>| ProbingHamiltonianSpec {
            n: 4,
            d: 2,
            alpha: vec![0.2, 0.4, 0.6, 0.8],
            v: dirs.clone(),
            k: 3,
            beta: entries,
            u: dirs.clone(),
            gamma: 0.7,
        };
        let a = mk(vec![
            BetaEntry { sites: vec![0, 1, 2], value: 0.3 },
            BetaEntry { sites: vec![1, 2, 3], value: -1.1 },
        ]);
        let b = mk(vec![
            BetaEntry { sites: vec![2, 0, 1], value: 0.3 },
            BetaEntry { sites: vec![3, 1, 2], value: -1.1 },
            BetaEntry { sites: vec![1, 3, 2], value: -1.1 },
        ]);
        close(&build_probing(&a).unwrap(), &build_probing(&b).unwrap(), 1e-14);
    }

    #[test]
    fn ising_couplings() {
        let p = build_ising(&IsingSpec::qubits(3, 1, 1.0, 1.0)).unwrap();
        assert_eq!(p.beta_of(&[0, 1]).unwrap(), 0.5);
        assert_eq!(p.beta_of(&[1, 0]).unwrap(), 0.5);
        assert_eq!(p.beta_of(&[2, 1]).unwrap(), 0.5);
        assert_eq!(p.beta_of(&[0, 2]).unwrap(), 0.0);

        let p = build_ising(&IsingSpec::qubits(4, 2, 1.0, 1.0)).unwrap();
        assert_eq!(p.beta_of(&[0, 2]).unwrap(), 0.25);

        // pairs with |i-j| <= 2 on five sites, counted independently
        let p = build_ising(&IsingSpec::qubits(5, 2, 1.0, 1.0)).unwrap();
        let mut count = 0;
        for i in 0..5usize {
            for j in (i + 1)..5usize {
                if p.beta_of(&[i, j]).unwrap() != 0.0 {
                    assert!(j - i <= 2);
                    count += 1;
                }
            }
        }
        assert_eq!(count, 7);

        assert!(matches!(
            build_ising(&IsingSpec::qubits(3, 3, 1.0, 1.0)),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(build_ising(&IsingSpec::qubits(3, 0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn ising_operator_matches_pair_sum() {
        // H = (a/2) sum Z_i + (gamma/(4k)) sum_{i<j, |i-j|<=k} Z_i Z_j
        let (n, k, a, gamma) = (4, 2, 0.7, 1.3);
        let h = build_probing(&build_ising(&IsingSpec::qubits(n, k, a, gamma)).unwrap()).unwrap();
        let mut expected = HermitianOperator::zeros(16);
        for i in 0..n {
            expected = &expected + &embed_local(&pauli::z(), i, n).unwrap().scaled(a / 2.0);
            for j in (i + 1)..n.min(i + k + 1) {
                let zz = embed_product(&[(i, &pauli::z()), (j, &pauli::z())], n).unwrap();
                expected = &expected + &zz.scaled(gamma / (4.0 * k as f64));
            }
        }
        close(&h, &expected, 1e-14);
    }

    #[test]
    fn spec_json_round_trip() {
        let p = build_ising(&IsingSpec::qubits(3, 1, 0.5, 2.0)).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: ProbingHamiltonianSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        let bare = BareHamiltonianSpec::diagonal(vec![0.0, 1.0, 2.0], 1.5);
        let back: BareHamiltonianSpec = serde_json::from_str(&serde_json::to_string(&bare).unwrap()).unwrap();
        assert_eq!(bare, back);
    }
}
