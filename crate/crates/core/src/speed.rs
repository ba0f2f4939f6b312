//! Maximal energy-exchange speed.
//!
//! For a pure state the maximal speed is `E * Var(H)`. For mixed states the
//! bound is carried by the symmetric logarithmic derivative `L`, defined here
//! by `d rho/dt = (L rho + rho L) / 2`, with `v^2 = (E/4) Tr(rho L^2) = (E/4) QFI`.
//! With this normalization the two forms coincide on pure states.
//!
//! The supremum over bare Hamiltonians is taken over rank-one projectors
//! `H0 = E |lambda><lambda|`. The speed along such an `H0` does not depend on
//! `E`, so reported values carry one explicit factor `E` to match `E * Var(H)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::CyclicProtocol;
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, eigh, variance, CMatrix, DensityMatrix, HermitianOperator, PureState, QuantumState,
};
use crate::optimize::{coordinates_of, nelder_mead, state_from_coordinates, OptimizerConfig};
use crate::output::{complex_pairs, from_complex_pairs};
use crate::random::{random_pure_state, substream};

/// Cutoff on `p_j + p_k` below which a pair lies outside the support.
pub const SUPPORT_CUTOFF: f64 = 1e-12;
pub const SLD_RESIDUAL_TOL: f64 = 1e-8;

pub(crate) fn check_unit_energy(energy: f64) -> Result<()> {
    if energy.is_finite() && energy > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidUnitEnergy(energy))
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// `E * Var(H)` on a pure state.
pub fn pure_state_speed(phi: &PureState, h: &HermitianOperator, energy: f64) -> Result<f64> {
    check_unit_energy(energy)?;
    check_dims(phi.dim(), h.dim())?;
    Ok(energy * variance(phi, h)?)
}

/// Quantum Fisher information of `rho` for the generator `h`.
pub fn quantum_fisher_information(rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
    check_dims(rho.dim(), h.dim())?;
    let spec = rho.spectrum()?;
    let v = spec.vectors.matrix();
    let local = v.adjoint() * h.matrix() * v;
    let p = &spec.values;
    let mut qfi = 0.0;
    for j in 0..p.len() {
        for k in 0..p.len() {
            let total = p[j] + p[k];
            if total > SUPPORT_CUTOFF {
                qfi += 2.0 * (p[j] - p[k]).powi(2) / total * local[(j, k)].norm_sqr();
            }
        }
    }
    Ok(qfi)
}

/// `(E/4) * QFI(rho; H)`.
pub fn sld_speed(rho: &DensityMatrix, h: &HermitianOperator, energy: f64) -> Result<f64> {
    check_unit_energy(energy)?;
    Ok(0.25 * energy * quantum_fisher_information(rho, h)?)
}

/// `d rho/dt = -i [H, rho]`.
pub fn state_derivative(rho: &DensityMatrix, h: &HermitianOperator) -> Result<CMatrix> {
    check_dims(rho.dim(), h.dim())?;
    Ok(commutator(h.matrix(), rho.matrix()) * c(0.0, -1.0))
}

/// Symmetric logarithmic derivative of `rho` along the flow generated by `H`.
#[derive(Clone, Debug)]
pub struct SldOperator {
    pub dim: usize,
    pub matrix: HermitianOperator,
    pub support_rank: usize,
}

impl SldOperator {
    pub fn new(rho: &DensityMatrix, h: &HermitianOperator) -> Result<Self> {
        check_dims(rho.dim(), h.dim())?;
        let spec = rho.spectrum()?;
        let v = spec.vectors.matrix();
        let local = v.adjoint() * h.matrix() * v;
        let p = &spec.values;
        let dim = p.len();
        let l_local = CMatrix::from_fn(dim, dim, |j, k| {
            let total = p[j] + p[k];
            if total > SUPPORT_CUTOFF {
                local[(j, k)] * c(0.0, 2.0 * (p[j] - p[k]) / total)
            } else {
                c(0.0, 0.0)
            }
        });
        let matrix = HermitianOperator::new(v * l_local * v.adjoint())?;
        let support_rank = p.iter().filter(|&&x| x > SUPPORT_CUTOFF).count();
        let sld = Self {
            dim,
            matrix,
            support_rank,
        };
        let residual = sld.residual(rho, h)?;
        if residual > SLD_RESIDUAL_TOL * (1.0 + h.matrix().norm()) {
            return Err(Error::NumericalFailure(format!("SLD residual {residual:.3e}")));
        }
        Ok(sld)
    }

    /// Max-abs entry of `(L rho + rho L)/2 - d rho/dt`.
    pub fn residual(&self, rho: &DensityMatrix, h: &HermitianOperator) -> Result<f64> {
        let l = self.matrix.matrix();
        let lhs = (l * rho.matrix() + rho.matrix() * l) * c(0.5, 0.0);
        let diff = lhs - state_derivative(rho, h)?;
        Ok(diff.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// `Tr(rho L^2)`.
    pub fn second_moment(&self, rho: &DensityMatrix) -> f64 {
        rho.raw_variance(&self.matrix) + rho.mean_of(self.matrix.matrix()).re.powi(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedReport {
    pub v_squared: f64,
    pub saturation_ratio: f64,
    pub sld_bound: f64,
    /// `|lambda>` with `H0 = E |lambda><lambda|`, as `[re, im]` pairs.
    pub achieving_state: Vec<[f64; 2]>,
}

impl SpeedReport {
    pub fn achieving_bare_state(&self) -> Result<PureState> {
        PureState::from_slice(&from_complex_pairs(&self.achieving_state))
    }
}

/// Squared speed `p'^2 / (4 p (1 - p))` of the projector onto `lambda`;
/// zero where `p` sits at a boundary.
fn projector_speed_sq(lambda: &PureState, rho_t: &DensityMatrix, rate: &CMatrix) -> f64 {
    let a = lambda.amplitudes();
    let p = a.dotc(&(rho_t.matrix() * a)).re;
    let dp = a.dotc(&(rate * a)).re;
    let spread = p * (1.0 - p);
    if spread < 1e-9 {
        0.0
    } else {
        dp * dp / (4.0 * spread)
    }
}

/// Starting points suggested by the state: SLD eigenvectors and, for each
/// eigenvector `psi` of `rho_t`, `(psi + i dH psi / |dH psi|) / sqrt 2`.
fn informed_starts(rho_t: &DensityMatrix, h: &HermitianOperator) -> Result<Vec<PureState>> {
    let mut starts = Vec::new();
    let spec = rho_t.spectrum()?;
    let dim = rho_t.dim();
    for j in (0..dim).rev() {
        if spec.values[j] <= SUPPORT_CUTOFF {
            continue;
        }
        let psi = spec.vectors.column(j);
        let hpsi = h.matrix() * &psi;
        let mean = psi.dotc(&hpsi);
        let spread = hpsi - &psi * mean;
        if spread.norm() > 1e-12 {
            let lambda = (&psi + spread.normalize() * c(0.0, 1.0)) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            starts.push(PureState::normalized(lambda)?);
        }
    }
    if let Ok(sld) = SldOperator::new(rho_t, h) {
        let sld_spec = eigh(&sld.matrix)?;
        for j in 0..dim {
            starts.push(PureState::normalized(sld_spec.vectors.column(j))?);
        }
    }
    Ok(starts)
}

/// Supremum of `E * v^2` over `H0 = E |lambda><lambda|` at time `t`.
pub fn maximize_over_bare(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    t: f64,
    energy: f64,
    config: &OptimizerConfig,
) -> Result<SpeedReport> {
    check_unit_energy(energy)?;
    check_dims(rho.dim(), h.dim())?;
    config.validate()?;
    let dim = rho.dim();
    let rho_t = crate::dynamics::evolve(rho, h, t)?;
    let rate = state_derivative(&rho_t, h)?;
    let bound = sld_speed(&rho_t, h, energy)?;

    let mut starts = informed_starts(&rho_t, h)?;
    starts.truncate(config.restarts);
    let random_needed = config.restarts.saturating_sub(starts.len()).max(1);
    for r in 0..random_needed {
        let mut rng = substream(config.seed, r as u64);
        starts.push(random_pure_state(dim, &mut rng));
    }

    let objective = |x: &[f64]| match state_from_coordinates(x) {
        Some(lambda) => -projector_speed_sq(&lambda, &rho_t, &rate),
        None => 0.0,
    };
    let runs: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|s| {
            let x0 = coordinates_of(s);
            let m = nelder_mead(objective, &x0, 0.2, config.tolerance * 1e-4, config.max_iterations);
            let start_value = objective(&x0);
            if start_value <= m.value {
                (start_value, x0)
            } else {
                (m.value, m.point)
            }
        })
        .collect();
    let (_, best_x) = runs
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one start");
    let lambda = state_from_coordinates(&best_x)
        .ok_or_else(|| Error::OptimizerNotConverged("optimizer left the sphere".into()))?;

    // re-evaluate through the trajectory machinery
    let bare = HermitianOperator::projector(&lambda).scaled(energy);
    let p = rho_t.mean_of(bare.matrix()).re / energy;
    let v_squared = if p * (1.0 - p) < 1e-9 {
        0.0
    } else {
        let protocol = CyclicProtocol::new(rho.clone(), h.clone(), bare)?;
        energy * protocol.speed(t)?.value.powi(2)
    };
    if v_squared > bound * (1.0 + 1e-6) + 1e-12 {
        return Err(Error::NumericalFailure(format!(
            "projector speed {v_squared} exceeds the SLD bound {bound}"
        )));
    }
    let saturation_ratio = if bound <= 1e-14 {
        if v_squared <= 1e-14 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        v_squared / bound
    };
    Ok(SpeedReport {
        v_squared,
        saturation_ratio,
        sld_bound: bound,
        achieving_state: complex_pairs(&lambda),
    })
}

pub(crate) fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidWeights(format!("weight {w} is not a probability")));
        }
        total += w;
        count += 1;
    }
    if count == 0 || (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// `(sld_speed(sum w_i rho_i), sum w_i sld_speed(rho_i))`.
pub fn convexity_probe(states: &[(f64, DensityMatrix)], h: &HermitianOperator, energy: f64) -> Result<(f64, f64)> {
    check_weights(states.iter().map(|(w, _)| *w))?;
    let mixture = DensityMatrix::mixture(states)?;
    let lhs = sld_speed(&mixture, h, energy)?;
    let mut rhs = 0.0;
    for (w, rho) in states {
        rhs += w * sld_speed(rho, h, energy)?;
    }
    Ok((lhs, rhs))
}
