//! Classical ceilings on the maximal speed.
//!
//! Exact oracles maximize `E * Var(H)` over computational basis states
//! (incoherent), product states (fully separable) and products across a
//! bipartition (biseparable). Closed forms for product states and for the
//! range-`k` Ising chain are reproduced as printed and reported next to the
//! oracle values; when they disagree the oracle is the reference.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{build_ising, build_probing, IsingSpec, ProbingHamiltonianSpec};
use crate::linalg::{
    basis_digits, direction_operator, gell_mann_generators, hilbert_dim, CVector, HermitianOperator, PureState,
    QuantumState,
};
use crate::optimize::{maximize_variance, AscentResult, OptimizerConfig, ProductLayout};
use crate::output::{complex_pairs, fmt_sig, StateClass};
use crate::speed::check_unit_energy;

/// Largest register enumerated exactly over its computational basis.
pub const MAX_ENUMERATION: usize = 1 << 14;
/// Grid used for direct optimization of the `s`-parametrized Ising form.
pub const ISING_S_GRID: usize = 1001;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Exact moments `(nu1^2, nu2^2, nu3^2)` of `H1 + gamma H2`, so that
/// `E Var(H1 + gamma H2) = nu1^2 + gamma nu2^2 + gamma^2 nu3^2`.
pub fn nu_decomposition(
    state: &PureState,
    h1: &HermitianOperator,
    h2: &HermitianOperator,
    energy: f64,
) -> Result<(f64, f64, f64)> {
    check_unit_energy(energy)?;
    check_dims(state.dim(), h1.dim())?;
    check_dims(state.dim(), h2.dim())?;
    let psi = state.amplitudes();
    let a = h1.matrix() * psi;
    let b = h2.matrix() * psi;
    let m1 = psi.dotc(&a).re;
    let m2 = psi.dotc(&b).re;
    let nu1 = a.norm_squared() - m1 * m1;
    let nu2 = 2.0 * a.dotc(&b).re - 2.0 * m1 * m2;
    let nu3 = b.norm_squared() - m2 * m2;
    Ok((energy * nu1, energy * nu2, energy * nu3))
}

/// Single-site expectations of a product state along the probing directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductStateCorrelators {
    /// `<sigma_{v_i}>`
    pub s: Vec<f64>,
    /// `<sigma_{u_i}>`
    pub s_u: Vec<f64>,
    /// `v_i . u_i`
    pub overlaps: Vec<f64>,
}

impl ProductStateCorrelators {
    pub fn new(s: Vec<f64>, s_u: Vec<f64>, overlaps: Vec<f64>) -> Result<Self> {
        let corr = Self { s, s_u, overlaps };
        corr.validate()?;
        Ok(corr)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.s.len();
        if self.s_u.len() != n || self.overlaps.len() != n {
            return Err(Error::InvalidCorrelators("vectors differ in length".into()));
        }
        for x in self.s.iter().chain(&self.s_u) {
            if !(x.is_finite() && x.abs() <= 1.0 + 1e-12) {
                return Err(Error::InvalidCorrelators(format!("expectation {x} outside [-1, 1]")));
            }
        }
        for x in &self.overlaps {
            if !(x.is_finite() && x.abs() <= 1.0 + 1e-12) {
                return Err(Error::InvalidCorrelators(format!("overlap {x} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// Correlators of `|psi_0> (x) ... (x) |psi_{N-1}>` for the directions of `spec`.
    pub fn of_product(spec: &ProbingHamiltonianSpec, sites: &[PureState]) -> Result<Self> {
        spec.validate()?;
        if sites.len() != spec.n {
            return Err(Error::WrongVectorLength {
                expected: spec.n,
                actual: sites.len(),
            });
        }
        let basis = gell_mann_generators(spec.d)?;
        let mut s = Vec::with_capacity(spec.n);
        let mut s_u = Vec::with_capacity(spec.n);
        let mut overlaps = Vec::with_capacity(spec.n);
        for (i, psi) in sites.iter().enumerate() {
            check_dims(spec.d, psi.dim())?;
            let sv = direction_operator(&basis, &spec.v[i])?;
            let su = direction_operator(&basis, &spec.u[i])?;
            s.push(psi.mean_of(sv.matrix()).re);
            s_u.push(psi.mean_of(su.matrix()).re);
            overlaps.push(spec.v[i].iter().zip(&spec.u[i]).map(|(a, b)| a * b).sum());
        }
        Self::new(s, s_u, overlaps)
    }

    /// Correlators of the computational basis state with the given digits.
    pub fn of_basis_state(spec: &ProbingHamiltonianSpec, digits: &[usize]) -> Result<Self> {
        let sites = digits
            .iter()
            .map(|&x| PureState::basis(spec.d, x))
            .collect::<Result<Vec<_>>>()?;
        Self::of_product(spec, &sites)
    }
}

/// The three product-state moment forms as printed, with the free index of
/// the middle term read as the local term paired with each tuple slot.
pub fn nu_closed_forms(
    spec: &ProbingHamiltonianSpec,
    corr: &ProductStateCorrelators,
    energy: f64,
) -> Result<(f64, f64, f64)> {
    check_unit_energy(energy)?;
    corr.validate()?;
    if corr.s.len() != spec.n {
        return Err(Error::InvalidCorrelators(format!(
            "{} correlators for {} sites",
            corr.s.len(),
            spec.n
        )));
    }
    let beta = spec.canonical_beta()?;
    let d = spec.d as f64;
    let k = spec.k;

    let nu1 = energy / (d * d)
        * spec
            .alpha
            .iter()
            .zip(&corr.s)
            .map(|(a, s)| a * a * (1.0 - s * s))
            .sum::<f64>();

    // ordered tuples of distinct sites: k! copies of every stored set
    let ordered = factorial(k);
    let mut nu2_sum = 0.0;
    for (sites, b) in &beta {
        for (t, &jt) in sites.iter().enumerate() {
            let rest: f64 = sites
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != t)
                .map(|(_, &j)| corr.s_u[j])
                .product();
            nu2_sum += spec.alpha[jt] * b * (corr.overlaps[jt] - corr.s[jt].powi(2)) * rest;
        }
    }
    let nu2 = 4.0 * energy / d.powi(k as i32 + 1) * ordered * nu2_sum;

    let entries: Vec<(&Vec<usize>, f64)> = beta.iter().map(|(s, b)| (s, *b)).collect();
    let mut nu3_sum = 0.0;
    for (si, bi) in &entries {
        for (sj, bj) in &entries {
            let mut shared = 1.0;
            let mut exclusive = 1.0;
            for &x in si.iter() {
                if sj.contains(&x) {
                    shared *= corr.s_u[x].powi(2);
                } else {
                    exclusive *= corr.s_u[x];
                }
            }
            for &x in sj.iter() {
                if !si.contains(&x) {
                    exclusive *= corr.s_u[x];
                }
            }
            nu3_sum += bi * bj * (1.0 - shared) * exclusive;
        }
    }
    let nu3 = energy / d.powi(2 * k as i32) * ordered * ordered * nu3_sum;
    Ok((nu1, nu2, nu3))
}

/// `nu1^2 + gamma nu2^2 + gamma^2 nu3^2` from the printed product-state forms.
pub fn incoherent_bound_closed(
    spec: &ProbingHamiltonianSpec,
    corr: &ProductStateCorrelators,
    energy: f64,
) -> Result<f64> {
    let (n1, n2, n3) = nu_closed_forms(spec, corr, energy)?;
    Ok(n1 + spec.gamma * n2 + spec.gamma * spec.gamma * n3)
}

/// Arg-max of a classical-ceiling search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub description: String,
    pub blocks: Vec<Vec<usize>>,
    pub amplitudes: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlators: Option<ProductStateCorrelators>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub class_tag: StateClass,
    pub oracle_value: f64,
    pub closed_form: Option<f64>,
    /// `closed_form - oracle_value`
    pub discrepancy: Option<f64>,
    pub optimizer_state: OptimizerState,
}

impl BoundReport {
    fn new(class_tag: StateClass, oracle_value: f64, closed_form: Option<f64>, state: OptimizerState) -> Self {
        Self {
            class_tag,
            oracle_value,
            closed_form,
            discrepancy: closed_form.map(|c| c - oracle_value),
            optimizer_state: state,
        }
    }
}

fn digits_label(digits: &[usize]) -> String {
    digits.iter().map(|d| d.to_string()).collect()
}

/// Exact `max E Var(H)` over the computational basis of `n` sites of dimension `d`;
/// returns the value and the arg-max index.
pub fn incoherent_max_of_operator(h: &HermitianOperator, energy: f64) -> Result<(f64, usize)> {
    check_unit_energy(energy)?;
    if h.dim() > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge(h.dim()));
    }
    let m = h.matrix();
    let mut best = (f64::NEG_INFINITY, 0);
    for x in 0..h.dim() {
        let col = m.column(x);
        let mean = col[x].re;
        let var = (col.norm_squared() - mean * mean).max(0.0);
        if var > best.0 + 1e-15 {
            best = (var, x);
        }
    }
    Ok((energy * best.0, best.1))
}

pub fn incoherent_bound_of_operator(h: &HermitianOperator, d: usize, n: usize, energy: f64) -> Result<BoundReport> {
    check_dims(hilbert_dim(d, n)?, h.dim())?;
    let (value, index) = incoherent_max_of_operator(h, energy)?;
    let digits = basis_digits(index, d, n);
    Ok(BoundReport::new(
        StateClass::Incoherent,
        value,
        None,
        OptimizerState {
            description: format!("|{}>", digits_label(&digits)),
            blocks: (0..n).map(|s| vec![s]).collect(),
            amplitudes: complex_pairs(&PureState::basis(h.dim(), index)?),
            correlators: None,
        },
    ))
}

/// Exact incoherent ceiling of a probing spec, with the printed closed form
/// maximized over the same basis states.
pub fn incoherent_bound_enumerate(spec: &ProbingHamiltonianSpec, energy: f64) -> Result<BoundReport> {
    spec.validate()?;
    let dim = spec.hilbert_dim()?;
    if dim > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge(dim));
    }
    let h = build_probing(spec)?;
    let mut report = incoherent_bound_of_operator(&h, spec.d, spec.n, energy)?;
    let closed = (0..dim)
        .into_par_iter()
        .map(|x| {
            let corr = ProductStateCorrelators::of_basis_state(spec, &basis_digits(x, spec.d, spec.n))?;
            incoherent_bound_closed(spec, &corr, energy)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let digits = basis_digits(
        report.optimizer_state.amplitudes.iter().position(|z| z[0] != 0.0).unwrap_or(0),
        spec.d,
        spec.n,
    );
    report.optimizer_state.correlators = Some(ProductStateCorrelators::of_basis_state(spec, &digits)?);
    report.closed_form = Some(closed);
    report.discrepancy = Some(closed - report.oracle_value);
    Ok(report)
}

fn best_basis_parts(h: &HermitianOperator, d: usize, n: usize) -> Result<Vec<CVector>> {
    let (_, index) = incoherent_max_of_operator(h, 1.0)?;
    basis_digits(index, d, n)
        .into_iter()
        .map(|x| Ok(PureState::basis(d, x)?.amplitudes().clone()))
        .collect()
}

fn separable_search(
    h: &HermitianOperator,
    d: usize,
    n: usize,
    config: &OptimizerConfig,
) -> Result<(AscentResult, ProductLayout)> {
    let layout = ProductLayout::fully_separable(d, n)?;
    check_dims(layout.dim(), h.dim())?;
    let warm = best_basis_parts(h, d, n)?;
    let best = maximize_variance(h, &layout, Some(warm), config)?;
    Ok((best, layout))
}

/// `max E Var(H)` over pure product states of `n` sites.
pub fn separable_bound_of_operator(
    h: &HermitianOperator,
    d: usize,
    n: usize,
    energy: f64,
    config: &OptimizerConfig,
) -> Result<BoundReport> {
    check_unit_energy(energy)?;
    let (best, layout) = separable_search(h, d, n, config)?;
    let state = best.state(&layout);
    Ok(BoundReport::new(
        StateClass::FullySeparable,
        energy * best.value,
        None,
        OptimizerState {
            description: format!("product state over {n} sites"),
            blocks: layout.block_sites(),
            amplitudes: complex_pairs(&state),
            correlators: None,
        },
    ))
}

/// Fully separable ceiling of a probing spec, reporting the arg-max correlators.
pub fn separable_bound_optimize(
    spec: &ProbingHamiltonianSpec,
    energy: f64,
    config: &OptimizerConfig,
) -> Result<BoundReport> {
    spec.validate()?;
    let h = build_probing(spec)?;
    let (best, layout) = separable_search(&h, spec.d, spec.n, config)?;
    let sites = best
        .parts
        .iter()
        .map(|p| PureState::normalized(p.clone()))
        .collect::<Result<Vec<_>>>()?;
    let correlators = ProductStateCorrelators::of_product(spec, &sites)?;
    Ok(BoundReport::new(
        StateClass::FullySeparable,
        energy * best.value,
        None,
        OptimizerState {
            description: format!("product state over {} sites", spec.n),
            blocks: layout.block_sites(),
            amplitudes: complex_pairs(&best.state(&layout)),
            correlators: Some(correlators),
        },
    ))
}

/// All bipartitions `S1 | S2` with site 0 in `S1`.
pub fn bipartitions(n: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Vec::new();
    }
    (1..(1usize << (n - 1)))
        .map(|mask| {
            let (mut first, mut second) = (vec![0], Vec::new());
            for s in 1..n {
                if mask >> (s - 1) & 1 == 1 {
                    second.push(s);
                } else {
                    first.push(s);
                }
            }
            (first, second)
        })
        .collect()
}

/// `max E Var(H)` over `|psi>_{S1} (x) |chi>_{S2}` and every bipartition.
pub fn biseparable_bound(
    h: &HermitianOperator,
    n: usize,
    d: usize,
    energy: f64,
    config: &OptimizerConfig,
) -> Result<BoundReport> {
    check_unit_energy(energy)?;
    if n < 2 {
        return Err(Error::InvalidPartition(format!("{n} site(s) admit no bipartition")));
    }
    let (separable, _) = separable_search(h, d, n, config)?;
    let cuts = bipartitions(n);
    let results = cuts
        .par_iter()
        .map(|(s1, s2)| -> Result<(AscentResult, ProductLayout)> {
            let layout = ProductLayout::new(d, n, vec![s1.clone(), s2.clone()])?;
            let warm = layout.regroup_sites(&separable.parts);
            let best = maximize_variance(h, &layout, Some(warm), config)?;
            Ok((best, layout))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, layout) = results
        .into_iter()
        .reduce(|a, b| if b.0.value > a.0.value { b } else { a })
        .expect("n >= 2 gives at least one cut");
    let blocks = layout.block_sites();
    Ok(BoundReport::new(
        StateClass::Biseparable,
        energy * best.value,
        None,
        OptimizerState {
            description: format!("product across {:?} | {:?}", blocks[0], blocks[1]),
            amplitudes: complex_pairs(&best.state(&layout)),
            blocks,
            correlators: None,
        },
    ))
}

/// Which closed-form branch gives the reported Ising value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsingBranch {
    SmallGamma,
    LargeGamma,
}

impl std::fmt::Display for IsingBranch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IsingBranch::SmallGamma => "small_gamma",
            IsingBranch::LargeGamma => "large_gamma",
        })
    }
}

fn check_ising(n: usize, k: usize, a: f64, gamma: f64, energy: f64) -> Result<()> {
    check_unit_energy(energy)?;
    if n < 2 || k < 1 || k > n - 1 {
        return Err(Error::OrderOutOfRange { order: k, n_sites: n });
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidAlpha(a));
    }
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("coupling {gamma} is not finite")));
    }
    Ok(())
}

/// Coefficient of `gamma^2` in the small-coupling branch.
pub fn ising_a0(n: usize, k: usize, a: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    (8.0 * (n - k + 1.0) * k * a - n * k * a * a + n + k * k) / (4.0 * n * k)
}

/// `(N E / 4) [a^2 + a0 gamma^2]`
pub fn ising_small_gamma(n: usize, k: usize, a: f64, gamma: f64, energy: f64) -> f64 {
    n as f64 * energy / 4.0 * (a * a + ising_a0(n, k, a) * gamma * gamma)
}

/// `(N E / 4) [a^2/k + a gamma + (1/k + k/N) gamma^2]`
pub fn ising_large_gamma(n: usize, k: usize, a: f64, gamma: f64, energy: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    nf * energy / 4.0 * (a * a / kf + a * gamma + (1.0 / kf + kf / nf) * gamma * gamma)
}

/// `N E gamma^2 / (4k)`
pub fn ising_asymptote(n: usize, k: usize, gamma: f64, energy: f64) -> f64 {
    n as f64 * energy * gamma * gamma / (4.0 * k as f64)
}

/// Positive coupling where the two branches are equal, if any.
pub fn ising_critical_coupling(n: usize, k: usize, a: f64) -> Option<f64> {
    let (nf, kf) = (n as f64, k as f64);
    let c1 = ising_a0(n, k, a) - 1.0 / kf - kf / nf;
    let c2 = -a;
    let c3 = a * a * (1.0 - 1.0 / kf);
    positive_root(c1, c2, c3)
}

/// The root `-c2/(2 c1) + sqrt(c2^2 - 4 c1 c3)/(2 c1)` when positive, else
/// the other root when positive.
fn positive_root(c1: f64, c2: f64, c3: f64) -> Option<f64> {
    if c1.abs() < 1e-15 {
        let r = -c3 / c2;
        return (c2.abs() > 1e-15 && r > 0.0).then_some(r);
    }
    let disc = c2 * c2 - 4.0 * c1 * c3;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    [(-c2 + root) / (2.0 * c1), (-c2 - root) / (2.0 * c1)]
        .into_iter()
        .find(|r| *r > 1e-12)
}

/// The `s`-dependent coefficients `(c1, c2, c3)` as printed.
pub fn printed_critical_coefficients(n: usize, k: usize, a: f64, s: f64) -> (f64, f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    let s2 = s * s;
    let c1 = -3.0 / (4.0 * kf) - 3.0 * kf / (4.0 * nf) + ((1.0 - 1.0 / (2.0 * kf)) * nf - 5.0 * kf / 6.0 - 1.0) * s2 / nf
        - ((1.0 - 1.0 / (4.0 * kf)) * nf - 7.0 * kf / 12.0 - 9.0 / 8.0) * s2 * s2 / nf
        - 1.0 / kf
        - kf / nf;
    let c2 = a * (2.0 * (s - s2 * s) * (nf - kf + 1.0) - 1.0);
    let c3 = a * a * ((kf - 1.0) / kf - s2);
    (c1, c2, c3)
}

pub fn printed_critical_coupling(n: usize, k: usize, a: f64, s: f64) -> Option<f64> {
    let (c1, c2, c3) = printed_critical_coefficients(n, k, a, s);
    positive_root(c1, c2, c3)
}

/// Fixed point of the printed critical coupling with `s` re-optimized on the
/// grid at each step.
pub fn printed_critical_coupling_self_consistent(n: usize, k: usize, a: f64) -> Option<f64> {
    let mut gamma = 1.0;
    for _ in 0..100 {
        let (_, s) = ising1sep_grid_max(n, k, a, gamma, 1.0);
        let next = printed_critical_coupling(n, k, a, s)?;
        if (next - gamma).abs() < 1e-12 {
            return Some(next);
        }
        gamma = next;
    }
    Some(gamma)
}

/// Product-state speed of the Ising chain with every `<sigma_u>` equal to `s`.
pub fn ising1sep(n: usize, k: usize, a: f64, gamma: f64, s: f64, energy: f64) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let s2 = s * s;
    let nu1 = nf * energy / 4.0 * a * a * (1.0 - s2);
    let nu2 = energy / 2.0 * a * (nf - kf + 1.0) * (s - s2 * s);
    let nu3 = energy / 4.0
        * ((nf + kf * kf) / (4.0 * kf) + ((1.0 - 1.0 / (2.0 * kf)) * nf - 5.0 * kf / 6.0 - 1.0) * s2
            - ((1.0 - 1.0 / (4.0 * kf)) * nf - 7.0 * kf / 12.0 - 9.0 / 8.0) * s2 * s2);
    nu1 + nu2 * gamma + nu3 * gamma * gamma
}

/// Maximum of [`ising1sep`] over `s` on a uniform grid of `[-1, 1]`; returns `(value, s)`.
pub fn ising1sep_grid_max(n: usize, k: usize, a: f64, gamma: f64, energy: f64) -> (f64, f64) {
    (0..ISING_S_GRID)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (ISING_S_GRID - 1) as f64;
            (ising1sep(n, k, a, gamma, s, energy), s)
        })
        .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingClosedForm {
    pub v_fs_sq: f64,
    pub branch: IsingBranch,
    pub small_gamma: f64,
    pub large_gamma: f64,
    pub gamma_c: Option<f64>,
    pub gamma_c_printed: Option<f64>,
    pub s_grid_max: f64,
}

/// Both closed-form branches, their maximum and the critical coupling.
pub fn ising_fs_closed(n: usize, k: usize, a: f64, gamma: f64, energy: f64) -> Result<IsingClosedForm> {
    check_ising(n, k, a, gamma, energy)?;
    let small = ising_small_gamma(n, k, a, gamma, energy);
    let large = ising_large_gamma(n, k, a, gamma, energy);
    let (v_fs_sq, branch) = if small >= large {
        (small, IsingBranch::SmallGamma)
    } else {
        (large, IsingBranch::LargeGamma)
    };
    Ok(IsingClosedForm {
        v_fs_sq,
        branch,
        small_gamma: small,
        large_gamma: large,
        gamma_c: ising_critical_coupling(n, k, a),
        gamma_c_printed: printed_critical_coupling_self_consistent(n, k, a),
        s_grid_max: ising1sep_grid_max(n, k, a, gamma, energy).0,
    })
}

/// `(E/4) sum alpha_i^2 + (E alpha0/4) gamma + (N E/8) gamma^2`, with `alpha0`
/// the larger of the alternating partial sums.
pub fn inhomogeneous_upper_bound(alpha: &[f64], gamma: f64, n: usize, energy: f64) -> Result<f64> {
    check_unit_energy(energy)?;
    if alpha.len() != n {
        return Err(Error::WrongVectorLength {
            expected: n,
            actual: alpha.len(),
        });
    }
    if let Some(bad) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidAlpha(*bad));
    }
    let first: f64 = alpha.iter().step_by(2).sum();
    let second: f64 = alpha.iter().skip(1).step_by(2).sum();
    let alpha0 = first.max(second);
    let squares: f64 = alpha.iter().map(|a| a * a).sum();
    Ok(energy / 4.0 * squares + energy * alpha0 / 4.0 * gamma + n as f64 * energy / 8.0 * gamma * gamma)
}

fn is_z_axis(v: &[f64]) -> bool {
    v.len() == 3 && v[0].abs() < 1e-10 && v[1].abs() < 1e-10 && (v[2] - 1.0).abs() < 1e-10
}

/// `(E/8) sum_{v_i != z} alpha_i^2 + (E/4) sum_{v_i = z} alpha_i^2`, as printed.
pub fn example1_closed(spec: &ProbingHamiltonianSpec, energy: f64) -> Result<f64> {
    check_unit_energy(energy)?;
    spec.validate()?;
    if spec.d != 2 || spec.gamma != 0.0 {
        return Err(Error::InvalidArgument("requires qubits and gamma = 0".into()));
    }
    Ok(spec
        .alpha
        .iter()
        .zip(&spec.v)
        .map(|(a, v)| if is_z_axis(v) { energy / 4.0 * a * a } else { energy / 8.0 * a * a })
        .sum())
}

/// One point of a coupling sweep of the Ising chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub v_fs_closed: f64,
    pub v_fs_oracle: f64,
    pub branch: IsingBranch,
    pub gamma_c: Option<f64>,
}

pub const SWEEP_CSV_HEADER: [&str; 5] = ["gamma", "v_fs_closed", "v_fs_oracle", "branch", "gamma_c"];

/// Closed form and separable oracle on each coupling of `gammas`, in order.
pub fn ising_sweep(
    base: &IsingSpec,
    gammas: &[f64],
    energy: f64,
    config: &OptimizerConfig,
) -> Result<Vec<SweepRow>> {
    gammas
        .par_iter()
        .map(|&gamma| {
            let spec = IsingSpec { gamma, ..base.clone() };
            let closed = ising_fs_closed(spec.n, spec.k, spec.a, gamma, energy)?;
            let probing = build_ising(&spec)?;
            let oracle = separable_bound_optimize(&probing, energy, config)?;
            Ok(SweepRow {
                gamma,
                v_fs_closed: closed.v_fs_sq,
                v_fs_oracle: oracle.oracle_value,
                branch: closed.branch,
                gamma_c: closed.gamma_c,
            })
        })
        .collect()
}

/// Writes sweep rows; a missing critical coupling is an empty field.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> std::result::Result<(), csv::Error> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    out.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        out.write_record([
            fmt_sig(r.gamma),
            fmt_sig(r.v_fs_closed),
            fmt_sig(r.v_fs_oracle),
            r.branch.to_string(),
            r.gamma_c.map(fmt_sig).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{axes, BetaEntry};
    use crate::linalg::{pauli, variance};
    use crate::random::{random_hermitian, random_pure_state, rng_from_seed};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(seed: u64) -> OptimizerConfig {
        OptimizerConfig::with_seed(seed).with_restarts(8)
    }

    #[test]
    fn nu_decomposition_examples() {
        let h1 = pauli::collective(&pauli::z(), 2).unwrap();
        let zz = crate::linalg::embed_product(&[(0, &pauli::z()), (1, &pauli::z())], 2).unwrap();
        let h2 = zz.scaled(0.5);
        let plus2 = pauli::plus_product(2);
        let (a, b, c) = nu_decomposition(&plus2, &h1, &h2, 1.0).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c, 0.25, epsilon = 1e-12);
        let (a, b, c) = nu_decomposition(&plus2, &h1, &HermitianOperator::zeros(4), 2.0).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
        assert_eq!((b, c), (0.0, 0.0));
    }

    #[test]
    fn closed_forms_local_examples() {
        let spec = ProbingHamiltonianSpec::local(vec![1.0, 0.5, 0.3], axes::z(), 2);
        let corr = ProductStateCorrelators::of_basis_state(&spec, &[0, 1, 0]).unwrap();
        assert_abs_diff_eq!(incoherent_bound_closed(&spec, &corr, 1.0).unwrap(), 0.0, epsilon = 1e-14);
        let spec = ProbingHamiltonianSpec::local(vec![1.0, 0.5, 0.3], axes::x(), 2);
        let corr = ProductStateCorrelators::of_basis_state(&spec, &[0, 1, 0]).unwrap();
        assert_abs_diff_eq!(
            incoherent_bound_closed(&spec, &corr, 1.0).unwrap(),
            (1.0 + 0.25 + 0.09) / 4.0,
            epsilon = 1e-14
        );
        let single = ProbingHamiltonianSpec::local(vec![1.0], axes::z(), 2);
        let corr = ProductStateCorrelators::new(vec![1.0], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(incoherent_bound_closed(&single, &corr, 1.0).unwrap(), 0.0);
        assert!(ProductStateCorrelators::new(vec![1.5], vec![0.0], vec![1.0]).is_err());
    }

    fn pair_spec(n: usize, gamma: f64, v: Vec<f64>, u: Vec<f64>, rng: &mut crate::random::SimRng) -> ProbingHamiltonianSpec {
        use rand::Rng;
        let mut beta = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                beta.push(BetaEntry {
                    sites: vec![i, j],
                    value: rng.random::<f64>() - 0.5,
                });
            }
        }
        ProbingHamiltonianSpec {
            n,
            d: 2,
            alpha: (0..n).map(|_| rng.random::<f64>()).collect(),
            v: vec![v; n],
            k: 2,
            beta,
            u: vec![u; n],
            gamma,
        }
    }

    #[test]
    fn closed_nu1_nu3_match_moments_on_product_states() {
        // the first and last printed forms are exact for qubit product states
        let mut rng = rng_from_seed(77);
        for _ in 0..10 {
            let spec = pair_spec(3, 0.7, axes::z(), axes::x(), &mut rng);
            let sites: Vec<PureState> = (0..3).map(|_| random_pure_state(2, &mut rng)).collect();
            let state = sites[1..].iter().fold(sites[0].clone(), |acc, s| acc.kron(s));
            let corr = ProductStateCorrelators::of_product(&spec, &sites).unwrap();
            let (c1, _, c3) = nu_closed_forms(&spec, &corr, 1.0).unwrap();
            let (e1, _, e3) =
                nu_decomposition(&state, &spec.local_part().unwrap(), &spec.coupling_part().unwrap(), 1.0).unwrap();
            assert_abs_diff_eq!(c1, e1, epsilon = 1e-12);
            assert_abs_diff_eq!(c3, e3, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_nu2_is_twice_the_moment_for_aligned_directions() {
        let mut rng = rng_from_seed(78);
        let dir = vec![0.6, 0.0, 0.8];
        for _ in 0..10 {
            let spec = pair_spec(3, 0.7, dir.clone(), dir.clone(), &mut rng);
            let sites: Vec<PureState> = (0..3).map(|_| random_pure_state(2, &mut rng)).collect();
            let state = sites[1..].iter().fold(sites[0].clone(), |acc, s| acc.kron(s));
            let corr = ProductStateCorrelators::of_product(&spec, &sites).unwrap();
            let (_, c2, _) = nu_closed_forms(&spec, &corr, 1.0).unwrap();
            let (_, e2, _) =
                nu_decomposition(&state, &spec.local_part().unwrap(), &spec.coupling_part().unwrap(), 1.0).unwrap();
            assert_abs_diff_eq!(c2, 2.0 * e2, epsilon = 1e-12);
        }
    }

    #[test]
    fn enumeration_examples() {
        let spec = ProbingHamiltonianSpec::local(vec![1.0; 3], axes::z(), 2);
        let r = incoherent_bound_enumerate(&spec, 1.0).unwrap();
        assert_eq!(r.oracle_value, 0.0);
        assert_eq!(r.class_tag, StateClass::Incoherent);
        let alpha = vec![1.0, 0.4, 0.7];
        let spec = ProbingHamiltonianSpec::local(alpha.clone(), axes::x(), 2);
        let r = incoherent_bound_enumerate(&spec, 2.0).unwrap();
        let expected = 2.0 / 4.0 * alpha.iter().map(|a| a * a).sum::<f64>();
        assert_abs_diff_eq!(r.oracle_value, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.closed_form.unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.discrepancy.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn product_of_z_has_no_incoherent_spread() {
        let n = 4;
        let zs: Vec<(usize, HermitianOperator)> = (0..n).map(|i| (i, pauli::z())).collect();
        let refs: Vec<(usize, &HermitianOperator)> = zs.iter().map(|(i, o)| (*i, o)).collect();
        let h = crate::linalg::embed_product(&refs, n).unwrap();
        let r = incoherent_bound_of_operator(&h, 2, n, 1.0).unwrap();
        assert_eq!(r.oracle_value, 0.0);
        assert_abs_diff_eq!(variance(&pauli::plus_product(n), &h).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn separable_examples() {
        let (n, a) = (4, 0.8);
        let spec = ProbingHamiltonianSpec::local(vec![a; n], axes::z(), 2);
        let r = separable_bound_optimize(&spec, 1.0, &cfg(1)).unwrap();
        assert_abs_diff_eq!(r.oracle_value, n as f64 * a * a / 4.0, epsilon = 1e-7);
        let corr = r.optimizer_state.correlators.unwrap();
        assert!(corr.s.iter().all(|s| s.abs() < 1e-3));

        let alpha = vec![0.2, 1.0, 0.5];
        let spec = ProbingHamiltonianSpec::local(alpha.clone(), vec![0.6, 0.0, 0.8], 2);
        let r = separable_bound_optimize(&spec, 1.5, &cfg(2)).unwrap();
        assert_abs_diff_eq!(
            r.oracle_value,
            1.5 / 4.0 * alpha.iter().map(|a| a * a).sum::<f64>(),
            epsilon = 1e-7
        );
    }

    #[test]
    fn biseparable_examples() {
        // projector onto a biseparable state: a quarter of E
        let mut rng = rng_from_seed(4);
        let phi = random_pure_state(2, &mut rng).kron(&random_pure_state(4, &mut rng));
        let h = HermitianOperator::projector(&phi);
        let r = biseparable_bound(&h, 3, 2, 1.0, &cfg(3)).unwrap();
        assert_abs_diff_eq!(r.oracle_value, 0.25, epsilon = 1e-7);

        let h = pauli::collective(&pauli::z(), 4).unwrap();
        let r = biseparable_bound(&h, 4, 2, 1.0, &cfg(4)).unwrap();
        assert_abs_diff_eq!(r.oracle_value, (9.0 + 1.0) / 4.0, epsilon = 1e-6);

        let local = pauli::collective(&pauli::x(), 2).unwrap();
        let sep = separable_bound_of_operator(&local, 2, 2, 1.0, &cfg(5)).unwrap();
        let bis = biseparable_bound(&local, 2, 2, 1.0, &cfg(5)).unwrap();
        assert_abs_diff_eq!(sep.oracle_value, bis.oracle_value, epsilon = 1e-7);
        assert!(biseparable_bound(&pauli::z(), 1, 2, 1.0, &cfg(5)).is_err());
    }

    #[test]
    fn bipartition_count() {
        for n in 2..7 {
            let cuts = bipartitions(n);
            assert_eq!(cuts.len(), (1 << (n - 1)) - 1);
            assert!(cuts.iter().all(|(a, b)| a.contains(&0) && !b.is_empty() && a.len() + b.len() == n));
        }
    }

    #[test]
    fn class_nesting_on_random_operator() {
        let mut rng = rng_from_seed(12);
        let h = random_hermitian(8, &mut rng);
        let inc = incoherent_bound_of_operator(&h, 2, 3, 1.0).unwrap().oracle_value;
        let sep = separable_bound_of_operator(&h, 2, 3, 1.0, &cfg(6)).unwrap().oracle_value;
        let bis = biseparable_bound(&h, 3, 2, 1.0, &cfg(6)).unwrap().oracle_value;
        assert!(inc <= sep + 1e-12 && sep <= bis + 1e-12);
    }

    #[test]
    fn ising_closed_form_values() {
        let (n, a) = (8, 1.0);
        assert_abs_diff_eq!(ising_a0(n, 1, a), 65.0 / 32.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ising_a0(n, 2, a), 1.6875, epsilon = 1e-15);
        let at_zero = ising_fs_closed(n, 1, a, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(at_zero.v_fs_sq, n as f64 / 4.0, epsilon = 1e-15);
        assert_eq!(at_zero.branch, IsingBranch::SmallGamma);
        let gc = ising_critical_coupling(n, 1, a).unwrap();
        assert_abs_diff_eq!(gc, 1.0 / (65.0 / 32.0 - 1.0 - 1.0 / 8.0), epsilon = 1e-12);
        assert_abs_diff_eq!(
            ising_small_gamma(n, 1, a, gc, 1.0),
            ising_large_gamma(n, 1, a, gc, 1.0),
            epsilon = 1e-10
        );
        // the second-order chain never reaches equality
        assert!(ising_critical_coupling(n, 2, a).is_none());
        assert!(ising_fs_closed(n, 0, a, 1.0, 1.0).is_err());
        assert!(ising_fs_closed(n, 8, a, 1.0, 1.0).is_err());
    }

    #[test]
    fn ising1sep_at_zero_coupling() {
        let (v, s) = ising1sep_grid_max(6, 1, 0.5, 0.0, 1.0);
        assert_abs_diff_eq!(v, 6.0 / 4.0 * 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inhomogeneous_bound_examples() {
        assert_eq!(inhomogeneous_upper_bound(&[0.0; 3], 0.0, 3, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(inhomogeneous_upper_bound(&[1.0; 5], 0.0, 5, 2.0).unwrap(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            inhomogeneous_upper_bound(&[1.0, 0.0, 1.0, 0.0], 1.0, 4, 1.0).unwrap(),
            0.5 + 0.5 + 0.5,
            epsilon = 1e-15
        );
        assert!(inhomogeneous_upper_bound(&[1.2], 0.0, 1, 1.0).is_err());
    }

    #[test]
    fn example1_printed_values() {
        let a = 0.6;
        let z = ProbingHamiltonianSpec::local(vec![a; 3], axes::z(), 2);
        let x = ProbingHamiltonianSpec::local(vec![a; 3], axes::x(), 2);
        assert_abs_diff_eq!(example1_closed(&z, 1.0).unwrap(), 3.0 * a * a / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(example1_closed(&x, 1.0).unwrap(), 3.0 * a * a / 8.0, epsilon = 1e-15);
        let zero = ProbingHamiltonianSpec::local(vec![0.0; 3], axes::x(), 2);
        assert_eq!(example1_closed(&zero, 1.0).unwrap(), 0.0);
        // enumeration disagrees with both printed branches
        assert_eq!(incoherent_bound_enumerate(&z, 1.0).unwrap().oracle_value, 0.0);
        assert_abs_diff_eq!(
            incoherent_bound_enumerate(&x, 1.0).unwrap().oracle_value,
            3.0 * a * a / 4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sweep_rows_and_csv() {
        let base = IsingSpec::qubits(4, 1, 1.0, 0.0);
        let rows = ising_sweep(&base, &[0.0, 0.5, 1.0], 1.0, &cfg(9)).unwrap();
        assert_eq!(rows.len(), 3);
        assert_abs_diff_eq!(rows[0].v_fs_closed, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0].v_fs_oracle, 1.0, epsilon = 1e-7);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gamma,v_fs_closed,v_fs_oracle,branch,gamma_c\n"));
        assert_eq!(text.lines().count(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nu_polynomial_identity(seed in any::<u64>(), dim in 2usize..9, gamma in -4.0f64..4.0) {
            let mut rng = rng_from_seed(seed);
            let psi = random_pure_state(dim, &mut rng);
            let h1 = random_hermitian(dim, &mut rng);
            let h2 = random_hermitian(dim, &mut rng);
            let (a, b, c) = nu_decomposition(&psi, &h1, &h2, 1.7).unwrap();
            let total = &h1 + &h2.scaled(gamma);
            let direct = 1.7 * variance(&psi, &total).unwrap();
            prop_assert!((direct - (a + gamma * b + gamma * gamma * c)).abs() < 1e-9 * (1.0 + direct));
        }

        #[test]
        fn sigma_x_local_enumeration_is_exact(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = rng_from_seed(seed);
            use rand::Rng;
            let alpha: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let spec = ProbingHamiltonianSpec::local(alpha.clone(), axes::x(), 2);
            let r = incoherent_bound_enumerate(&spec, 1.0).unwrap();
            let expected = alpha.iter().map(|a| a * a).sum::<f64>() / 4.0;
            prop_assert!((r.oracle_value - expected).abs() < 1e-12);
        }
    }
}
