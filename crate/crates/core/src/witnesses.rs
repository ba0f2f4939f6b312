//! Witness Hamiltonians for coherence and genuine entanglement, canonical
//! many-body states, and verdicts against the classical ceilings.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{biseparable_bound, bipartitions, incoherent_bound_of_operator, separable_bound_of_operator};
use crate::error::{Error, Result};
use crate::linalg::{c, hilbert_dim, pauli, CMatrix, CVector, DensityMatrix, HermitianOperator, PureState};
use crate::optimize::{OptimizerConfig, ProductLayout};
use crate::output::{fmt_sig, StateClass};
use crate::random::{random_pure_state, substream};
use crate::speed::{check_unit_energy, pure_state_speed, sld_speed};

/// Strict margin a speed must clear to count as witnessed.
pub const WITNESS_MARGIN: f64 = 1e-9;
/// Slack allowed in the soundness sweep.
pub const SOUNDNESS_SLACK: f64 = 1e-6;

/// Projector `|b><b|` on a computational basis state with `lambda = |<b|phi>|^2`.
pub fn coherence_witness_hamiltonian(phi: &PureState, basis_index: usize) -> Result<(HermitianOperator, f64)> {
    if basis_index >= phi.dim() {
        return Err(Error::InvalidArgument(format!(
            "basis index {basis_index} outside dimension {}",
            phi.dim()
        )));
    }
    let lambda = phi.amplitudes()[basis_index].norm_sqr();
    if !(1e-12..=1.0 - 1e-12).contains(&lambda) {
        return Err(Error::UselessWitness(lambda));
    }
    let b = PureState::basis(phi.dim(), basis_index)?;
    Ok((HermitianOperator::projector(&b), lambda))
}

/// Two complementary site sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl Bipartition {
    pub fn new(first: Vec<usize>, second: Vec<usize>) -> Self {
        Self { first, second }
    }

    /// `{0} | {1, ..., n-1}`
    pub fn first_site(n: usize) -> Self {
        Self::new(vec![0], (1..n).collect())
    }

    fn layout(&self, d: usize, n: usize) -> Result<ProductLayout> {
        if self.first.is_empty() || self.second.is_empty() {
            return Err(Error::InvalidPartition("both sides must be non-empty".into()));
        }
        ProductLayout::new(d, n, vec![self.first.clone(), self.second.clone()])
    }
}

/// Schmidt coefficients `mu_j` (squared singular values, descending) and the
/// matching local vectors of `phi` across `partition`.
pub fn schmidt_decomposition(
    phi: &PureState,
    partition: &Bipartition,
    d: usize,
    n: usize,
) -> Result<(Vec<f64>, Vec<CVector>, Vec<CVector>)> {
    let layout = partition.layout(d, n)?;
    if layout.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            actual: phi.dim(),
        });
    }
    let dims = layout.block_dims();
    let mut m = CMatrix::zeros(dims[0], dims[1]);
    for x in 0..layout.dim() {
        m[(layout.block_index(0, x), layout.block_index(1, x))] = phi.amplitudes()[x];
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mu = order.iter().map(|&j| svd.singular_values[j].powi(2)).collect();
    let left = order.iter().map(|&j| u.column(j).into_owned()).collect();
    let right = order
        .iter()
        .map(|&j| v_t.row(j).transpose().into_owned())
        .collect();
    Ok((mu, left, right))
}

/// A unit vector orthogonal to `v`.
fn orthogonal_unit(v: &CVector) -> Option<CVector> {
    (0..v.len()).find_map(|i| {
        let mut e = CVector::zeros(v.len());
        e[i] = c(1.0, 0.0);
        let along = v.dotc(&e);
        let w = e - v * along;
        let norm = w.norm();
        (norm > 1e-6).then(|| w / c(norm, 0.0))
    })
}

#[derive(Clone, Debug)]
pub struct EntanglementWitness {
    pub hamiltonian: HermitianOperator,
    pub overlap: f64,
    pub product_state: PureState,
    pub schmidt: Vec<f64>,
}

/// Projector onto a product `|psi>_{S1} |chi>_{S2}` with `|<psi chi|phi>|^2 = 1/2`,
/// built from the leading Schmidt pair: `psi = a_1`, `chi = cos t b_1 + sin t b_perp`
/// with `cos^2 t = 1 / (2 mu_max)`.
pub fn entanglement_witness_hamiltonian(
    phi: &PureState,
    partition: &Bipartition,
    d: usize,
    n: usize,
) -> Result<EntanglementWitness> {
    let (mu, left, right) = schmidt_decomposition(phi, partition, d, n)?;
    let mu_max = mu[0];
    if mu_max < 0.5 - 1e-12 {
        return Err(Error::OverlapUnreachable { best: mu_max });
    }
    let cos2 = (0.5 / mu_max).min(1.0);
    let (cos_t, sin_t) = (cos2.sqrt(), (1.0 - cos2).max(0.0).sqrt());
    let chi = if sin_t > 0.0 {
        let perp = orthogonal_unit(&right[0])
            .ok_or_else(|| Error::InvalidPartition("second block has dimension 1".into()))?;
        &right[0] * c(cos_t, 0.0) + perp * c(sin_t, 0.0)
    } else {
        right[0].clone()
    };
    let layout = partition.layout(d, n)?;
    let product = PureState::normalized(layout.assemble(&[left[0].clone(), chi]))?;
    let overlap = product.overlap(phi);
    Ok(EntanglementWitness {
        hamiltonian: HermitianOperator::projector(&product),
        overlap,
        product_state: product,
        schmidt: mu,
    })
}

/// Symmetric superposition of the `C(n, m)` basis states with `m` ones.
pub fn dicke_state(n: usize, m: usize) -> Result<PureState> {
    if m > n {
        return Err(Error::ExcitationsOutOfRange {
            excitations: m,
            n_sites: n,
        });
    }
    let dim = hilbert_dim(2, n)?;
    let v = CVector::from_fn(dim, |x, _| {
        if x.count_ones() as usize == m {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    PureState::normalized(v)
}

/// `(|0...0> + |1...1>) / sqrt 2`
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("GHZ needs at least 2 sites, got {n}")));
    }
    let dim = hilbert_dim(2, n)?;
    let mut v = CVector::zeros(dim);
    v[0] = c(1.0, 0.0);
    v[dim - 1] = c(1.0, 0.0);
    PureState::normalized(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DickeCheck {
    pub oracle: f64,
    pub printed_formula: f64,
    pub discrepancy: f64,
}

/// Speed of `|N, m>` under `(1/2) sum sigma_x` next to `E((m + 2) N - m^2) / 2`.
pub fn dicke_speed_check(n: usize, m: usize, energy: f64) -> Result<DickeCheck> {
    check_unit_energy(energy)?;
    let state = dicke_state(n, m)?;
    let h = pauli::collective(&pauli::x(), n)?;
    let oracle = pure_state_speed(&state, &h, energy)?;
    let (nf, mf) = (n as f64, m as f64);
    let printed_formula = energy * ((mf + 2.0) * nf - mf * mf) / 2.0;
    Ok(DickeCheck {
        oracle,
        printed_formula,
        discrepancy: printed_formula - oracle,
    })
}

/// Pure or mixed input to a verdict.
#[derive(Clone, Debug)]
pub enum WitnessState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl WitnessState {
    pub fn dim(&self) -> usize {
        match self {
            WitnessState::Pure(p) => p.dim(),
            WitnessState::Mixed(r) => r.dim(),
        }
    }

    /// `E Var(H)` for pure input, `(E/4) QFI` for mixed input.
    pub fn speed(&self, h: &HermitianOperator, energy: f64) -> Result<f64> {
        match self {
            WitnessState::Pure(p) => pure_state_speed(p, h, energy),
            WitnessState::Mixed(r) => sld_speed(r, h, energy),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub state_speed: f64,
    pub classical_ceiling: f64,
    pub ceiling_class: StateClass,
    pub witnessed: bool,
    pub probing_spec: String,
}

/// Oracle ceiling of `h` for the given class.
pub fn class_ceiling(
    h: &HermitianOperator,
    class: StateClass,
    n: usize,
    d: usize,
    energy: f64,
    config: &OptimizerConfig,
) -> Result<f64> {
    let report = match class {
        StateClass::Incoherent => incoherent_bound_of_operator(h, d, n, energy)?,
        StateClass::FullySeparable => separable_bound_of_operator(h, d, n, energy, config)?,
        StateClass::Biseparable => biseparable_bound(h, n, d, energy, config)?,
    };
    Ok(report.oracle_value)
}

/// Speed against the class ceiling; witnessed iff strictly above it by the margin.
#[allow(clippy::too_many_arguments)]
pub fn witness_report(
    state: &WitnessState,
    h: &HermitianOperator,
    probing_spec: &str,
    class: StateClass,
    n: usize,
    d: usize,
    energy: f64,
    config: &OptimizerConfig,
) -> Result<WitnessVerdict> {
    let state_speed = state.speed(h, energy)?;
    let classical_ceiling = class_ceiling(h, class, n, d, energy, config)?;
    Ok(verdict(state_speed, classical_ceiling, class, probing_spec))
}

fn verdict(state_speed: f64, classical_ceiling: f64, class: StateClass, probing_spec: &str) -> WitnessVerdict {
    WitnessVerdict {
        state_speed,
        classical_ceiling,
        ceiling_class: class,
        witnessed: state_speed > classical_ceiling + WITNESS_MARGIN,
        probing_spec: probing_spec.to_string(),
    }
}

/// Random member of `class`: basis states or their mixtures, Haar product
/// states, or Haar block states across a random cut.
pub fn sample_in_class<R: Rng + ?Sized>(class: StateClass, n: usize, d: usize, rng: &mut R) -> Result<WitnessState> {
    let dim = hilbert_dim(d, n)?;
    match class {
        StateClass::Incoherent => {
            if rng.random_bool(0.5) {
                Ok(WitnessState::Pure(PureState::basis(dim, rng.random_range(0..dim))?))
            } else {
                let weights: Vec<f64> = (0..dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let total: f64 = weights.iter().sum();
                let diag = nalgebra::DVector::from_iterator(dim, weights.iter().map(|w| c(w / total, 0.0)));
                Ok(WitnessState::Mixed(DensityMatrix::new(CMatrix::from_diagonal(&diag))?))
            }
        }
        StateClass::FullySeparable => {
            let layout = ProductLayout::fully_separable(d, n)?;
            let parts: Vec<CVector> = (0..n).map(|_| random_pure_state(d, rng).amplitudes().clone()).collect();
            Ok(WitnessState::Pure(PureState::normalized(layout.assemble(&parts))?))
        }
        StateClass::Biseparable => {
            let cuts = bipartitions(n);
            if cuts.is_empty() {
                return Err(Error::InvalidPartition(format!("{n} site(s) admit no bipartition")));
            }
            let (s1, s2) = cuts[rng.random_range(0..cuts.len())].clone();
            let layout = ProductLayout::new(d, n, vec![s1, s2])?;
            let parts: Vec<CVector> = layout
                .block_dims()
                .into_iter()
                .map(|bd| random_pure_state(bd, rng).amplitudes().clone())
                .collect();
            Ok(WitnessState::Pure(PureState::normalized(layout.assemble(&parts))?))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessRow {
    pub sample_id: usize,
    pub speed: f64,
    pub ceiling: f64,
    pub witnessed: bool,
}

/// Speeds of `samples` random in-class states against the class ceiling of `h`.
#[allow(clippy::too_many_arguments)]
pub fn soundness_sweep(
    h: &HermitianOperator,
    class: StateClass,
    n: usize,
    d: usize,
    energy: f64,
    samples: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<Vec<SoundnessRow>> {
    let ceiling = class_ceiling(h, class, n, d, energy, config)?;
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let state = sample_in_class(class, n, d, &mut rng)?;
            let speed = state.speed(h, energy)?;
            Ok(SoundnessRow {
                sample_id: i,
                speed,
                ceiling,
                witnessed: speed > ceiling + WITNESS_MARGIN,
            })
        })
        .collect()
}

pub const SOUNDNESS_CSV_HEADER: [&str; 3] = ["sample_id", "speed", "ceiling"];

pub fn write_soundness_csv<W: Write>(rows: &[SoundnessRow], writer: W) -> std::result::Result<(), csv::Error> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    out.write_record(SOUNDNESS_CSV_HEADER)?;
    for r in rows {
        out.write_record([r.sample_id.to_string(), fmt_sig(r.speed), fmt_sig(r.ceiling)])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng_from_seed};
    use approx::assert_abs_diff_eq;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::with_seed(7).with_restarts(8)
    }

    #[test]
    fn coherence_witness_examples() {
        let (h, lambda) = coherence_witness_hamiltonian(&pauli::plus(), 0).unwrap();
        assert_abs_diff_eq!(lambda, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pure_state_speed(&pauli::plus(), &h, 1.0).unwrap(), 0.25, epsilon = 1e-12);

        let plus3 = pauli::plus_product(3);
        let (h, lambda) = coherence_witness_hamiltonian(&plus3, 0).unwrap();
        assert_abs_diff_eq!(lambda, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(pure_state_speed(&plus3, &h, 1.0).unwrap(), 7.0 / 64.0, epsilon = 1e-12);

        let basis = PureState::basis(4, 1).unwrap();
        assert!(matches!(coherence_witness_hamiltonian(&basis, 1), Err(Error::UselessWitness(_))));
        assert!(matches!(coherence_witness_hamiltonian(&basis, 2), Err(Error::UselessWitness(_))));
    }

    #[test]
    fn entanglement_witness_on_ghz_and_bell() {
        let ghz = ghz_state(3).unwrap();
        let w = entanglement_witness_hamiltonian(&ghz, &Bipartition::first_site(3), 2, 3).unwrap();
        assert_abs_diff_eq!(w.overlap, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.schmidt[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pure_state_speed(&ghz, &w.hamiltonian, 1.0).unwrap(), 0.25, epsilon = 1e-12);

        let bell = ghz_state(2).unwrap();
        let w = entanglement_witness_hamiltonian(&bell, &Bipartition::first_site(2), 2, 2).unwrap();
        assert_abs_diff_eq!(w.overlap, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn entanglement_witness_interpolates_for_weakly_entangled_states() {
        let s = (0.8f64).sqrt();
        let t = (0.2f64).sqrt();
        let phi = PureState::from_slice(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(t, 0.0)]).unwrap();
        let w = entanglement_witness_hamiltonian(&phi, &Bipartition::first_site(2), 2, 2).unwrap();
        assert_abs_diff_eq!(w.overlap, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.schmidt[0], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn maximally_entangled_qutrits_are_unreachable() {
        let v: Vec<_> = (0..9)
            .map(|x| if x % 4 == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) })
            .collect();
        let phi = PureState::normalized(CVector::from_vec(v)).unwrap();
        match entanglement_witness_hamiltonian(&phi, &Bipartition::first_site(2), 3, 2) {
            Err(Error::OverlapUnreachable { best }) => assert_abs_diff_eq!(best, 1.0 / 3.0, epsilon = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn biseparable_ceiling_of_witness_is_a_quarter() {
        let ghz = ghz_state(3).unwrap();
        let w = entanglement_witness_hamiltonian(&ghz, &Bipartition::first_site(3), 2, 3).unwrap();
        let ceiling = class_ceiling(&w.hamiltonian, StateClass::Biseparable, 3, 2, 1.0, &cfg()).unwrap();
        assert!(ceiling <= 0.25 + 1e-6);
    }

    #[test]
    fn dicke_states() {
        let d = dicke_state(2, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(d.amplitudes()[1].re, s, epsilon = 1e-15);
        assert_abs_diff_eq!(d.amplitudes()[2].re, s, epsilon = 1e-15);
        let d = dicke_state(4, 2).unwrap();
        let nonzero: Vec<f64> = d.amplitudes().iter().map(|z| z.re).filter(|x| *x != 0.0).collect();
        assert_eq!(nonzero.len(), 6);
        assert!(nonzero.iter().all(|x| (x - 1.0 / 6f64.sqrt()).abs() < 1e-15));
        // swapping sites 0 and 3 leaves the state unchanged
        let swapped = CVector::from_fn(16, |x, _| {
            let (b0, b3) = ((x >> 3) & 1, x & 1);
            let y = (x & 0b0110) | (b3 << 3) | b0;
            d.amplitudes()[y]
        });
        assert!((swapped - d.amplitudes()).norm() < 1e-15);
        assert!(dicke_state(3, 4).is_err());
    }

    #[test]
    fn ghz_states() {
        let g = ghz_state(3).unwrap();
        assert_eq!(g.dim(), 8);
        assert_eq!(g.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 2);
        assert!(ghz_state(1).is_err());
        for n in 2..7 {
            let h = pauli::collective(&pauli::z(), n).unwrap();
            let v = pure_state_speed(&ghz_state(n).unwrap(), &h, 1.0).unwrap();
            assert_abs_diff_eq!(v, (n * n) as f64 / 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn dicke_check_values() {
        let r = dicke_speed_check(2, 1, 1.0).unwrap();
        assert_abs_diff_eq!(r.oracle, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.printed_formula, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.discrepancy, 1.5, epsilon = 1e-12);
        let r = dicke_speed_check(5, 0, 2.0).unwrap();
        assert_abs_diff_eq!(r.oracle, 2.0 * 5.0 / 4.0, epsilon = 1e-12);
        // direct variance formula (N + 2Nm - 2m^2)/4
        let r = dicke_speed_check(6, 2, 1.0).unwrap();
        assert_abs_diff_eq!(r.oracle, (6.0 + 24.0 - 8.0) / 4.0, epsilon = 1e-12);
        assert!(r.discrepancy.abs() > 1.0);
    }

    #[test]
    fn verdict_examples() {
        let h = pauli::collective(&pauli::z(), 4).unwrap();
        let ghz = WitnessState::Pure(ghz_state(4).unwrap());
        let v = witness_report(&ghz, &h, "collective z", StateClass::FullySeparable, 4, 2, 1.0, &cfg()).unwrap();
        assert_abs_diff_eq!(v.state_speed, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.classical_ceiling, 1.0, epsilon = 1e-6);
        assert!(v.witnessed);

        let plus3 = pauli::plus_product(3);
        let (h, _) = coherence_witness_hamiltonian(&plus3, 0).unwrap();
        let v = witness_report(&WitnessState::Pure(plus3.clone()), &h, "|000><000|", StateClass::Incoherent, 3, 2, 1.0, &cfg())
            .unwrap();
        assert_eq!(v.classical_ceiling, 0.0);
        assert!(v.witnessed);

        let v = witness_report(&WitnessState::Pure(plus3), &h, "|000><000|", StateClass::FullySeparable, 3, 2, 1.0, &cfg())
            .unwrap();
        assert!(!v.witnessed);
    }

    #[test]
    fn mixed_input_uses_the_sld_form() {
        let h = pauli::x().scaled(0.5);
        let rho = DensityMatrix::maximally_mixed(2);
        let v = witness_report(&WitnessState::Mixed(rho), &h, "x/2", StateClass::Incoherent, 1, 2, 1.0, &cfg()).unwrap();
        assert_eq!(v.state_speed, 0.0);
        assert!(!v.witnessed);
    }

    #[test]
    fn small_soundness_sweeps() {
        let mut rng = rng_from_seed(3);
        let h = random_hermitian(8, &mut rng);
        for class in [StateClass::Incoherent, StateClass::FullySeparable, StateClass::Biseparable] {
            let rows = soundness_sweep(&h, class, 3, 2, 1.0, 60, 11, &cfg()).unwrap();
            assert_eq!(rows.len(), 60);
            assert!(rows.iter().all(|r| r.speed <= r.ceiling + SOUNDNESS_SLACK));
        }
        let rows = soundness_sweep(&h, StateClass::Incoherent, 3, 2, 1.0, 3, 1, &cfg()).unwrap();
        let mut buf = Vec::new();
        write_soundness_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample_id,speed,ceiling\n"));
    }
}
