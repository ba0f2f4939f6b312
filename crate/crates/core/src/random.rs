//! Seeded random states and operators for oracles, sweeps and restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, CVector, DensityMatrix, HermitianOperator, PureState};

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for the `index`-th task derived from a base seed.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_unit_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn random_complex_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    CVector::from_fn(dim, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Haar-distributed pure state.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    loop {
        if let Ok(s) = PureState::normalized(random_complex_vector(dim, rng)) {
            return s;
        }
    }
}

/// GUE-like Hermitian matrix with unit-variance entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    HermitianOperator::new(h).expect("symmetrized matrix is Hermitian")
}

/// Mixture of `rank` Haar states with Dirichlet-like weights.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let rank = rank.max(1);
    let weights: Vec<f64> = (0..rank).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = weights.iter().sum();
    let parts: Vec<(f64, DensityMatrix)> = weights
        .iter()
        .map(|w| (w / total, random_pure_state(dim, rng).to_density()))
        .collect();
    let mut m = CMatrix::zeros(dim, dim);
    for (w, rho) in &parts {
        m += rho.matrix() * c(*w, 0.0);
    }
    let trace: f64 = m.diagonal().iter().map(|z| z.re).sum();
    m.unscale_mut(trace);
    DensityMatrix::new(m).expect("convex mixture is a density matrix")
}

/// Probing spec with uniform local weights, random directions and random
/// couplings on every `k`-subset of sites.
pub fn random_probing_spec<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    k: usize,
    rng: &mut R,
) -> crate::hamiltonians::ProbingHamiltonianSpec {
    use crate::hamiltonians::{BetaEntry, ProbingHamiltonianSpec};
    let len = d * d - 1;
    let mut beta = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    if k <= n {
        loop {
            beta.push(BetaEntry {
                sites: subset.clone(),
                value: rng.random_range(-1.0..1.0),
            });
            // next k-subset in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
                break;
            };
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }
    ProbingHamiltonianSpec {
        n,
        d,
        alpha: (0..n).map(|_| rng.random::<f64>()).collect(),
        v: (0..n).map(|_| random_unit_vector(len, rng)).collect(),
        k,
        beta,
        u: (0..n).map(|_| random_unit_vector(len, rng)).collect(),
        gamma: rng.random_range(0.0..2.0),
    }
}
