//! Cyclic evolution of a battery and the energy-exchange speed along it.
//!
//! `F(t) = Tr(U_t rho U_t^dagger H0)` is the instantaneous extractable energy
//! with `U_t = exp(-i t H)`. The Hellinger work distance between two times is
//!
//! ```text
//! D(t, t') = sqrt( (sqrt F(t) - sqrt F(t'))^2 / Tr H0
//!                + (sqrt Fbar(t) - sqrt Fbar(t'))^2 )
//! ```
//!
//! with `Fbar = Tr(rho_t Hbar0)`, `Hbar0 = 1 - H0/Tr H0`. Its rate is
//! `v = |dF/dt| / (2 sqrt(F (Tr H0 - F)))`, and integrating `v` over an interval
//! where `F` is monotone gives the arcsin work formulas.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::complement;
use crate::linalg::{
    c, commutator, eigh, evolution_from_spectrum, trace_of_product, CMatrix, DensityMatrix, HermitianOperator,
    QuantumState, Spectrum,
};
use crate::output::fmt_sig;

/// Relative distance to `{0, Tr H0}` below which a point counts as a boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Absolute slack on `dF/dt` for the monotonicity pre-check.
pub const MONOTONE_TOL: f64 = 1e-9;
/// Grid used by the monotonicity pre-check.
pub const MONOTONE_GRID: usize = 256;
pub const MIN_SIMPSON_STEPS: usize = 100;

/// Speed sample; `boundary_limit` marks a two-sided limit taken where
/// `F` touches `0` or `Tr H0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speed {
    pub value: f64,
    pub boundary_limit: bool,
}

/// A state driven by a time-independent probing Hamiltonian and read out
/// against a bare Hamiltonian.
#[derive(Clone, Debug)]
pub struct CyclicProtocol {
    rho: DensityMatrix,
    generator: HermitianOperator,
    spectrum: Spectrum,
    bare: HermitianOperator,
    complement: HermitianOperator,
    trace_bare: f64,
    /// `[H, H0]`
    rate_operator: CMatrix,
    /// `[H, [H, H0]]`
    curvature_operator: CMatrix,
}

impl CyclicProtocol {
    pub fn new(rho: DensityMatrix, generator: HermitianOperator, bare: HermitianOperator) -> Result<Self> {
        let dim = rho.dim();
        for actual in [generator.dim(), bare.dim()] {
            if actual != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual });
            }
        }
        let bare_complement = complement(&bare)?;
        let bare_spectrum = eigh(&bare)?;
        let lowest = bare_spectrum.values[0];
        if lowest < -BOUNDARY_TOL * bare.trace() {
            return Err(Error::NegativeRadicand(lowest));
        }
        let spectrum = eigh(&generator)?;
        let rate_operator = commutator(generator.matrix(), bare.matrix());
        let curvature_operator = commutator(generator.matrix(), &rate_operator);
        Ok(Self {
            trace_bare: bare.trace(),
            rho,
            generator,
            spectrum,
            bare,
            complement: bare_complement,
            rate_operator,
            curvature_operator,
        })
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn generator(&self) -> &HermitianOperator {
        &self.generator
    }

    pub fn bare(&self) -> &HermitianOperator {
        &self.bare
    }

    pub fn trace_bare(&self) -> f64 {
        self.trace_bare
    }

    /// `rho(t) = U_t rho U_t^dagger`.
    pub fn state_at(&self, t: f64) -> Result<DensityMatrix> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite time {t}")));
        }
        if t == 0.0 {
            return Ok(self.rho.clone());
        }
        let u = evolution_from_spectrum(&self.spectrum, t)?;
        Ok(self.rho.conjugated(&u))
    }

    /// `F(t)`.
    pub fn energy(&self, t: f64) -> Result<f64> {
        let rho_t = self.state_at(t)?;
        Ok(rho_t.mean_of(self.bare.matrix()).re)
    }

    /// `Fbar(t) = Tr(rho_t Hbar0)`.
    pub fn complement_energy(&self, t: f64) -> Result<f64> {
        let rho_t = self.state_at(t)?;
        Ok(rho_t.mean_of(self.complement.matrix()).re)
    }

    /// `dF/dt = i Tr(rho_t [H, H0])`.
    pub fn energy_rate(&self, t: f64) -> Result<f64> {
        let rho_t = self.state_at(t)?;
        Ok(self.rate_in(&rho_t))
    }

    fn rate_in(&self, rho_t: &DensityMatrix) -> f64 {
        (c(0.0, 1.0) * trace_of_product(rho_t.matrix(), &self.rate_operator)).re
    }

    fn curvature_in(&self, rho_t: &DensityMatrix) -> f64 {
        -trace_of_product(rho_t.matrix(), &self.curvature_operator).re
    }

    /// `d^2F/dt^2 = -Tr(rho_t [H, [H, H0]])`.
    pub fn energy_curvature(&self, t: f64) -> Result<f64> {
        let rho_t = self.state_at(t)?;
        Ok(self.curvature_in(&rho_t))
    }

    fn clamp_energy(&self, f: f64) -> Result<f64> {
        let slack = BOUNDARY_TOL * self.trace_bare;
        if f < -slack {
            return Err(Error::NegativeRadicand(f));
        }
        if f > self.trace_bare + slack {
            return Err(Error::NegativeRadicand(self.trace_bare - f));
        }
        Ok(f.clamp(0.0, self.trace_bare))
    }

    /// Hellinger work distance between times `t` and `t_prime`.
    pub fn hellinger_distance(&self, t: f64, t_prime: f64) -> Result<f64> {
        if t == t_prime {
            return Ok(0.0);
        }
        let f1 = self.clamp_energy(self.energy(t)?)?;
        let f2 = self.clamp_energy(self.energy(t_prime)?)?;
        Ok(hellinger_from_energies(f1, f2, self.trace_bare))
    }

    /// Instantaneous speed `|dF/dt| / (2 sqrt(F (Tr H0 - F)))`.
    pub fn speed(&self, t: f64) -> Result<Speed> {
        let rho_t = self.state_at(t)?;
        let f = self.clamp_energy(rho_t.mean_of(self.bare.matrix()).re)?;
        let rate = self.rate_in(&rho_t);
        let gap = f.min(self.trace_bare - f);
        if gap > BOUNDARY_TOL * self.trace_bare {
            let value = rate.abs() / (2.0 * (f * (self.trace_bare - f)).sqrt());
            return Ok(Speed {
                value,
                boundary_limit: false,
            });
        }
        // F has a double zero here unless dF/dt is visibly non-zero
        let scale = 1.0 + self.rate_operator.norm();
        if rate.abs() > 1e-5 * scale {
            return Err(Error::BoundarySingularity { energy: f, rate });
        }
        let curvature = self.curvature_in(&rho_t);
        Ok(Speed {
            value: (curvature.abs() / (2.0 * self.trace_bare)).sqrt(),
            boundary_limit: true,
        })
    }

    fn monotone_check(&self, t_end: f64, sign: f64) -> Result<()> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("end time {t_end} must be finite and >= 0")));
        }
        if t_end == 0.0 {
            return Ok(());
        }
        let worst = (0..=MONOTONE_GRID)
            .into_par_iter()
            .map(|i| {
                let t = t_end * i as f64 / MONOTONE_GRID as f64;
                self.energy_rate(t).map(|r| (t, sign * r))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is non-empty");
        if worst.1 < -MONOTONE_TOL {
            return Err(Error::MonotonicityViolation {
                time: worst.0,
                rate: sign * worst.1,
            });
        }
        Ok(())
    }

    fn arcsin_energy(&self, f: f64) -> Result<f64> {
        let f = self.clamp_energy(f)?;
        Ok((f / self.trace_bare).sqrt().clamp(0.0, 1.0).asin())
    }

    /// Charging work `asin sqrt(F(t_end)/Tr H0) - asin sqrt(F(0)/Tr H0)`;
    /// requires `F` non-decreasing on `[0, t_end]`.
    pub fn charging_work(&self, t_end: f64) -> Result<f64> {
        self.monotone_check(t_end, 1.0)?;
        Ok(self.arcsin_energy(self.energy(t_end)?)? - self.arcsin_energy(self.energy(0.0)?)?)
    }

    /// Extracting work `asin sqrt(F(0)/Tr H0) - asin sqrt(F(t_end)/Tr H0)`;
    /// requires `F` non-increasing on `[0, t_end]`.
    pub fn extracting_work(&self, t_end: f64) -> Result<f64> {
        self.monotone_check(t_end, -1.0)?;
        Ok(self.arcsin_energy(self.energy(0.0)?)? - self.arcsin_energy(self.energy(t_end)?)?)
    }

    /// Speed at `t`, retrying at nearby nodes when `t` itself is singular.
    fn speed_refined(&self, t: f64, h: f64) -> Result<f64> {
        match self.speed(t) {
            Ok(s) => Ok(s.value),
            Err(Error::BoundarySingularity { .. }) => {
                let mut last = None;
                for shrink in [1e-3, 1e-5, 1e-7] {
                    let left = self.speed(t - h * shrink);
                    let right = self.speed(t + h * shrink);
                    match (left, right) {
                        (Ok(l), Ok(r)) => return Ok(0.5 * (l.value + r.value)),
                        (Err(e), _) | (_, Err(e)) => last = Some(e),
                    }
                }
                Err(last.expect("at least one refinement attempted"))
            }
            Err(e) => Err(e),
        }
    }

    /// Composite Simpson integral of the speed over `[t0, t1]`; reversed
    /// intervals give the negated value.
    pub fn integrate_speed(&self, t0: f64, t1: f64, steps: usize) -> Result<f64> {
        if steps < MIN_SIMPSON_STEPS {
            return Err(Error::InvalidArgument(format!(
                "at least {MIN_SIMPSON_STEPS} Simpson steps are required, got {steps}"
            )));
        }
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(Error::InvalidArgument("non-finite integration bounds".into()));
        }
        if t0 == t1 {
            return Ok(0.0);
        }
        let steps = steps + steps % 2;
        let h = (t1 - t0) / steps as f64;
        let values = (0..=steps)
            .into_par_iter()
            .map(|i| self.speed_refined(t0 + h * i as f64, h.abs()))
            .collect::<Result<Vec<f64>>>()?;
        let mut acc = values[0] + values[steps];
        for (i, v) in values.iter().enumerate().take(steps).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        Ok(acc * h / 3.0)
    }

    /// Samples `F`, `Fbar` and `v` on a time grid.
    pub fn trajectory(&self, times: &[f64]) -> Result<EnergyTrajectory> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must be strictly ascending".into()));
        }
        let rows = times
            .par_iter()
            .map(|&t| -> Result<(f64, f64, Speed)> {
                Ok((self.energy(t)?, self.complement_energy(t)?, self.speed(t)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyTrajectory {
            times: times.to_vec(),
            energies: rows.iter().map(|r| r.0).collect(),
            complement_energies: rows.iter().map(|r| r.1).collect(),
            speeds: rows.iter().map(|r| r.2.value).collect(),
            boundary_limit: rows.iter().map(|r| r.2.boundary_limit).collect(),
            trace_bare: self.trace_bare,
        })
    }
}

/// Hellinger distance from a pair of energies; both energies must lie in `[0, trace]`.
pub fn hellinger_from_energies(f1: f64, f2: f64, trace: f64) -> f64 {
    let bar1 = (1.0 - f1 / trace).max(0.0);
    let bar2 = (1.0 - f2 / trace).max(0.0);
    let first = (f1.sqrt() - f2.sqrt()).powi(2) / trace;
    let second = (bar1.sqrt() - bar2.sqrt()).powi(2);
    (first + second).sqrt()
}

/// Energies along a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrajectory {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub complement_energies: Vec<f64>,
    pub speeds: Vec<f64>,
    pub boundary_limit: Vec<bool>,
    pub trace_bare: f64,
}

impl EnergyTrajectory {
    pub const CSV_HEADER: [&'static str; 4] = ["t", "F", "F_complement", "v"];

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t,F,F_complement,v` rows with 12 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        out.write_record(Self::CSV_HEADER)?;
        for i in 0..self.len() {
            out.write_record([
                fmt_sig(self.times[i]),
                fmt_sig(self.energies[i]),
                fmt_sig(self.complement_energies[i]),
                fmt_sig(self.speeds[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `U_t rho U_t^dagger`.
pub fn evolve(rho: &DensityMatrix, h: &HermitianOperator, t: f64) -> Result<DensityMatrix> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: h.dim(),
        });
    }
    let u = crate::linalg::matrix_exponential(h, t)?;
    Ok(rho.conjugated(&u))
}

/// `Tr(U_t rho U_t^dagger H0)`.
pub fn extractable_energy(rho: &DensityMatrix, h: &HermitianOperator, t: f64, h0: &HermitianOperator) -> Result<f64> {
    let rho_t = evolve(rho, h, t)?;
    crate::linalg::expectation(&rho_t, h0)
}

/// `Tr(U_t rho U_t^dagger Hbar0)`.
pub fn complement_energy(rho: &DensityMatrix, h: &HermitianOperator, t: f64, h0: &HermitianOperator) -> Result<f64> {
    let bar = complement(h0)?;
    let rho_t = evolve(rho, h, t)?;
    crate::linalg::expectation(&rho_t, &bar)
}

pub fn hellinger_distance(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    t: f64,
    t_prime: f64,
    h0: &HermitianOperator,
) -> Result<f64> {
    CyclicProtocol::new(rho.clone(), h.clone(), h0.clone())?.hellinger_distance(t, t_prime)
}

pub fn speed_at(rho: &DensityMatrix, h: &HermitianOperator, t: f64, h0: &HermitianOperator) -> Result<Speed> {
    CyclicProtocol::new(rho.clone(), h.clone(), h0.clone())?.speed(t)
}

pub fn charging_work(rho: &DensityMatrix, h: &HermitianOperator, t_end: f64, h0: &HermitianOperator) -> Result<f64> {
    CyclicProtocol::new(rho.clone(), h.clone(), h0.clone())?.charging_work(t_end)
}

pub fn extracting_work(rho: &DensityMatrix, h: &HermitianOperator, t_end: f64, h0: &HermitianOperator) -> Result<f64> {
    CyclicProtocol::new(rho.clone(), h.clone(), h0.clone())?.extracting_work(t_end)
}

pub fn integrate_speed(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    t0: f64,
    t1: f64,
    h0: &HermitianOperator,
    steps: usize,
) -> Result<f64> {
    CyclicProtocol::new(rho.clone(), h.clone(), h0.clone())?.integrate_speed(t0, t1, steps)
}
