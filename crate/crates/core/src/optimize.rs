//! Local optimizers: Nelder–Mead for small unconstrained problems and
//! Riemannian gradient ascent of a variance over products of unit spheres.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_digits, c, hilbert_dim, CVector, HermitianOperator, PureState, C64};
use crate::random::{random_pure_state, substream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            tolerance: 1e-8,
            max_iterations: 4000,
            seed: 0x5eed,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("at least one restart is required".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead minimization from `start` with an axis-aligned initial simplex.
pub fn nelder_mead<F>(f: F, start: &[f64], step: f64, tolerance: f64, max_evaluations: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut converged = false;
    while evaluations.get() < max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() <= tolerance && size <= tolerance.sqrt() {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let reflected = along(-1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < simplex[n].1 {
            let x = along(-0.5);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x);
            (x, v)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&entry.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let v = eval(&x);
            *entry = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    Minimum {
        point,
        value,
        evaluations: evaluations.get(),
        converged,
    }
}

/// Normalized state from `2 * dim` real coordinates `(re_0, im_0, re_1, ...)`.
pub fn state_from_coordinates(x: &[f64]) -> Option<PureState> {
    let v = CVector::from_fn(x.len() / 2, |i, _| c(x[2 * i], x[2 * i + 1]));
    PureState::normalized(v).ok()
}

pub fn coordinates_of(state: &PureState) -> Vec<f64> {
    state.amplitudes().iter().flat_map(|z| [z.re, z.im]).collect()
}

#[derive(Clone, Debug)]
struct Block {
    sites: Vec<usize>,
    dim: usize,
    /// block-local index of every full-space basis index
    index_map: Vec<usize>,
}

/// Tensor layout of a register split into blocks of sites.
#[derive(Clone, Debug)]
pub struct ProductLayout {
    local_dim: usize,
    n_sites: usize,
    dim: usize,
    blocks: Vec<Block>,
}

impl ProductLayout {
    /// Blocks must partition `0..n_sites`; sites inside a block keep the given order.
    pub fn new(local_dim: usize, n_sites: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let dim = hilbert_dim(local_dim, n_sites)?;
        let mut seen = vec![false; n_sites];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &s in block {
                if s >= n_sites {
                    return Err(Error::SiteOutOfRange { site: s, n_sites });
                }
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::InvalidPartition(format!("site {s} appears twice")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPartition("blocks do not cover every site".into()));
        }
        let digits: Vec<Vec<usize>> = (0..dim).map(|x| basis_digits(x, local_dim, n_sites)).collect();
        let blocks = blocks
            .into_iter()
            .map(|sites| {
                let index_map = digits
                    .iter()
                    .map(|dg| sites.iter().fold(0, |acc, &s| acc * local_dim + dg[s]))
                    .collect();
                Block {
                    dim: local_dim.pow(sites.len() as u32),
                    sites,
                    index_map,
                }
            })
            .collect();
        Ok(Self {
            local_dim,
            n_sites,
            dim,
            blocks,
        })
    }

    /// One block per site.
    pub fn fully_separable(local_dim: usize, n_sites: usize) -> Result<Self> {
        Self::new(local_dim, n_sites, (0..n_sites).map(|s| vec![s]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn block_sites(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.sites.clone()).collect()
    }

    /// Index within block `block` of the full-register basis index `full`.
    pub fn block_index(&self, block: usize, full: usize) -> usize {
        self.blocks[block].index_map[full]
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// Full-register amplitudes of a product of block states.
    pub fn assemble(&self, parts: &[CVector]) -> CVector {
        CVector::from_fn(self.dim, |x, _| {
            self.blocks
                .iter()
                .zip(parts)
                .fold(c(1.0, 0.0), |acc, (b, p)| acc * p[b.index_map[x]])
        })
    }

    /// Projects a full-register covector onto block `which` with the other
    /// blocks contracted against their (conjugated) states.
    fn contract(&self, full: &CVector, parts: &[CVector], which: usize) -> CVector {
        let mut out = CVector::zeros(self.blocks[which].dim);
        for x in 0..self.dim {
            let mut weight = full[x];
            for (i, (b, p)) in self.blocks.iter().zip(parts).enumerate() {
                if i != which {
                    weight *= p[b.index_map[x]].conj();
                }
            }
            out[self.blocks[which].index_map[x]] += weight;
        }
        out
    }

    /// Block states of a full-register state that is a product in the
    /// single-site layout, regrouped for this layout.
    pub fn regroup_sites(&self, site_states: &[CVector]) -> Vec<CVector> {
        self.blocks
            .iter()
            .map(|b| {
                CVector::from_fn(b.dim, |y, _| {
                    let mut rest = y;
                    let mut amp = c(1.0, 0.0);
                    for &s in b.sites.iter().rev() {
                        amp *= site_states[s][rest % self.local_dim];
                        rest /= self.local_dim;
                    }
                    amp
                })
            })
            .collect()
    }
}

/// Variance `<H^2> - <H>^2` of a normalized vector and the vector `H psi`.
fn variance_with_image(h: &HermitianOperator, psi: &CVector) -> (f64, f64, CVector) {
    let image = h.matrix() * psi;
    let mean = psi.dotc(&image).re;
    let second = image.norm_squared();
    ((second - mean * mean).max(0.0), mean, image)
}

fn normalize(v: &mut CVector) -> bool {
    let n = v.norm();
    if !(n.is_finite() && n > 1e-300) {
        return false;
    }
    v.unscale_mut(n);
    true
}

#[derive(Clone, Debug)]
pub struct AscentResult {
    pub value: f64,
    pub parts: Vec<CVector>,
    pub iterations: usize,
    pub converged: bool,
}

impl AscentResult {
    pub fn state(&self, layout: &ProductLayout) -> PureState {
        PureState::normalized(layout.assemble(&self.parts)).expect("product of unit vectors is normalized")
    }
}

/// Gradient ascent of `Var(H)` over product states of `layout`, starting from `parts`.
pub fn ascend_variance(
    h: &HermitianOperator,
    layout: &ProductLayout,
    mut parts: Vec<CVector>,
    tolerance: f64,
    max_iterations: usize,
) -> AscentResult {
    for p in parts.iter_mut() {
        normalize(p);
    }
    let (mut value, mut mean, mut image) = variance_with_image(h, &layout.assemble(&parts));
    let mut step = 0.5;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        // d Var / d psi^* = H^2 psi - 2 <H> H psi
        let full = h.matrix() * &image - &image * c(2.0 * mean, 0.0);
        let grads: Vec<CVector> = (0..parts.len())
            .map(|b| {
                let g = layout.contract(&full, &parts, b);
                let along: C64 = parts[b].dotc(&g);
                g - &parts[b] * along
            })
            .collect();
        let grad_norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if grad_norm < tolerance {
            converged = true;
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let mut trial: Vec<CVector> = parts
                .iter()
                .zip(&grads)
                .map(|(p, g)| p + g * c(step, 0.0))
                .collect();
            if !trial.iter_mut().all(normalize) {
                step *= 0.5;
                continue;
            }
            let trial_psi = layout.assemble(&trial);
            let (v, m, img) = variance_with_image(h, &trial_psi);
            if v > value {
                let gain = v - value;
                parts = trial;
                value = v;
                mean = m;
                image = img;
                step *= 1.5;
                accepted = true;
                if gain < tolerance * tolerance * (1.0 + value) {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    AscentResult {
        value,
        parts,
        iterations,
        converged,
    }
}

/// Multi-start ascent: restart 0 uses `warm` when given, later restarts use
/// Haar-random block states from per-restart substreams of `config.seed`.
pub fn maximize_variance(
    h: &HermitianOperator,
    layout: &ProductLayout,
    warm: Option<Vec<CVector>>,
    config: &OptimizerConfig,
) -> Result<AscentResult> {
    config.validate()?;
    if h.dim() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            actual: h.dim(),
        });
    }
    let dims = layout.block_dims();
    let runs: Vec<AscentResult> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let start = match (&warm, r) {
                (Some(w), 0) => w.clone(),
                _ => {
                    let mut rng = substream(config.seed, r as u64);
                    dims.iter()
                        .map(|&d| random_pure_state(d, &mut rng).amplitudes().clone())
                        .collect()
                }
            };
            ascend_variance(h, layout, start, config.tolerance, config.max_iterations)
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("restarts >= 1");
    if !best.value.is_finite() {
        return Err(Error::OptimizerNotConverged("variance is not finite".into()));
    }
    Ok(best)
}
