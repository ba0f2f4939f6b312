//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Operators and states are stored as dense `nalgebra` matrices. Site ordering
//! in tensor products follows `kron`: site 0 is the leftmost (most significant)
//! factor, so the computational basis index of `|x_0 x_1 ... x_{N-1}>` is
//! `sum_i x_i d^(N-1-i)`. Time is dimensionless with hbar = 1.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Asymmetry above which a matrix is rejected instead of symmetrized.
pub const HERMITIAN_REJECT_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|M - M^dagger|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `|U U^dagger - 1|`.
pub fn unitary_defect(m: &CMatrix) -> f64 {
    let prod = m * m.adjoint();
    let eye = CMatrix::identity(m.nrows(), m.ncols());
    max_abs(&(prod - eye))
}

/// `A B - B A`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Trace of the product `A B` without forming it.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Hermitian operator; symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let defect = hermitian_defect(&matrix);
        if defect > HERMITIAN_REJECT_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let symmetric = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        Ok(Self { matrix: symmetric })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = c(x, 0.0);
        }
        Self { matrix: m }
    }

    /// Rank-one projector `|psi><psi|`.
    pub fn projector(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self {
            matrix: v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * c(factor, 0.0),
        }
    }

    pub fn square(&self) -> Self {
        let sq = &self.matrix * &self.matrix;
        Self {
            matrix: (&sq + sq.adjoint()) * c(0.5, 0.0),
        }
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &HermitianOperator) -> Self {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Symmetrized product `(AB + BA) / 2`.
    pub fn jordan_product(&self, other: &HermitianOperator) -> Self {
        let ab = &self.matrix * &other.matrix;
        Self {
            matrix: (&ab + ab.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    /// Builds an operator without the Hermiticity check. Only used to inject
    /// faults into verification suites.
    #[doc(hidden)]
    pub fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }
}

impl<'a> Add<&'a HermitianOperator> for &'a HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &'a HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl<'a> Sub<&'a HermitianOperator> for &'a HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &'a HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

/// Unitary operator, checked to `UNITARY_TOL`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    matrix: CMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "unitary must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = unitary_defect(&matrix);
        if !(defect < UNITARY_TOL) {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn column(&self, j: usize) -> CVector {
        self.matrix.column(j).into_owned()
    }

    pub fn compose(&self, other: &UnitaryOperator) -> Result<Self> {
        Self::new(&self.matrix * &other.matrix)
    }

    /// `U M U^dagger`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        &self.matrix * m * self.matrix.adjoint()
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Accepts amplitudes whose norm is 1 within `NORM_TOL`.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension("empty state vector".into()));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if amplitudes.is_empty() || norm < 1e-300 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amplitudes))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn kron(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Applies a unitary.
    pub fn evolved(&self, u: &UnitaryOperator) -> PureState {
        PureState {
            amplitudes: u.matrix() * &self.amplitudes,
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let h = HermitianOperator::new(matrix)
            .map_err(|e| Error::InvalidDensityMatrix(e.to_string()))?;
        let trace = h.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace}")));
        }
        let spectrum = eigh(&h)?;
        let min = spectrum.values[0];
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self {
            matrix: h.into_matrix(),
        })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self {
            matrix: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    /// Convex combination `sum_i w_i rho_i`.
    pub fn mixture(components: &[(f64, DensityMatrix)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidWeights("empty mixture".into()))?;
        let dim = first.dim();
        let mut total = 0.0;
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in components {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidWeights(format!("weight {w}")));
            }
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: rho.dim(),
                });
            }
            total += w;
            m += rho.matrix() * c(*w, 0.0);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.matrix, &self.matrix).re
    }

    /// `U rho U^dagger`.
    pub fn conjugated(&self, u: &UnitaryOperator) -> DensityMatrix {
        let m = u.conjugate(&self.matrix);
        DensityMatrix {
            matrix: (&m + m.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eigh(&HermitianOperator::new(self.matrix.clone())?)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

/// Anything an observable can be averaged over.
pub trait QuantumState {
    fn dim(&self) -> usize;
    /// `Tr(rho M)` for an arbitrary square matrix of matching dimension.
    fn mean_of(&self, m: &CMatrix) -> C64;
    /// `<op^2> - <op>^2` without the dimension check.
    fn raw_variance(&self, op: &HermitianOperator) -> f64;
}

impl QuantumState for PureState {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn mean_of(&self, m: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }

    fn raw_variance(&self, op: &HermitianOperator) -> f64 {
        let hv = op.matrix() * &self.amplitudes;
        let mean = self.amplitudes.dotc(&hv).re;
        hv.norm_squared() - mean * mean
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn mean_of(&self, m: &CMatrix) -> C64 {
        trace_of_product(&self.matrix, m)
    }

    fn raw_variance(&self, op: &HermitianOperator) -> f64 {
        let rh = &self.matrix * op.matrix();
        let mean = rh.trace().re;
        let second = trace_of_product(&rh, op.matrix()).re;
        second - mean * mean
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `Tr(rho op)`.
pub fn expectation<S: QuantumState + ?Sized>(state: &S, op: &HermitianOperator) -> Result<f64> {
    check_dims(state.dim(), op.dim())?;
    let z = state.mean_of(op.matrix());
    let scale = 1.0 + max_abs(op.matrix());
    if z.im.abs() > 1e-10 * scale {
        return Err(Error::NumericalFailure(format!(
            "expectation has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `<op^2> - <op>^2`, clamped at zero.
pub fn variance<S: QuantumState + ?Sized>(state: &S, op: &HermitianOperator) -> Result<f64> {
    check_dims(state.dim(), op.dim())?;
    let v = state.raw_variance(op);
    debug_assert!(v > -1e-8 * (1.0 + max_abs(op.matrix())).powi(2));
    Ok(v.max(0.0))
}

/// Eigen-decomposition with eigenvalues sorted ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: UnitaryOperator,
}

impl Spectrum {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn apply<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let v = self.vectors.matrix();
        let mut scaled = v.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let fj = f(lambda);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * v.adjoint()
    }
}

pub fn eigh(h: &HermitianOperator) -> Result<Spectrum> {
    let n = h.dim();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let vectors = UnitaryOperator::new(vectors)
        .map_err(|e| Error::NumericalFailure(format!("eigenvectors: {e}")))?;
    Ok(Spectrum { values, vectors })
}

/// `exp(-i t H)` through the spectral decomposition.
pub fn matrix_exponential(h: &HermitianOperator, t: f64) -> Result<UnitaryOperator> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite time {t}")));
    }
    if t == 0.0 {
        return Ok(UnitaryOperator::identity(h.dim()));
    }
    let spectrum = eigh(h)?;
    evolution_from_spectrum(&spectrum, t)
}

/// `exp(-i t H)` for an already diagonalized generator.
pub fn evolution_from_spectrum(spectrum: &Spectrum, t: f64) -> Result<UnitaryOperator> {
    let m = spectrum.apply(|lambda| C64::from_polar(1.0, -lambda * t));
    UnitaryOperator::new(m).map_err(|e| Error::NumericalFailure(format!("exponential: {e}")))
}

/// Generalized Gell-Mann generators of `su(d)`, normalized to `Tr(G_a G_b) = 2 delta_ab`.
#[derive(Clone, Debug)]
pub struct GellMannBasis {
    local_dim: usize,
    generators: Vec<HermitianOperator>,
}

impl GellMannBasis {
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Ordered as the conventional `lambda_1 .. lambda_{d^2-1}`: for each level
/// `k = 1..d-1`, the symmetric/antisymmetric pairs `(j, k)` with `j < k`,
/// then the diagonal generator of level `k`. For `d = 2` this is
/// `(sigma_x, sigma_y, sigma_z)`.
pub fn gell_mann_generators(d: usize) -> Result<GellMannBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("local dimension {d} < 2")));
    }
    let mut generators = Vec::with_capacity(d * d - 1);
    for k in 1..d {
        for j in 0..k {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, k)] = c(1.0, 0.0);
            sym[(k, j)] = c(1.0, 0.0);
            generators.push(HermitianOperator { matrix: sym });

            let mut anti = CMatrix::zeros(d, d);
            anti[(j, k)] = c(0.0, -1.0);
            anti[(k, j)] = c(0.0, 1.0);
            generators.push(HermitianOperator { matrix: anti });
        }
        let norm = (2.0 / (k * (k + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for l in 0..k {
            diag[(l, l)] = c(norm, 0.0);
        }
        diag[(k, k)] = c(-(k as f64) * norm, 0.0);
        generators.push(HermitianOperator { matrix: diag });
    }
    Ok(GellMannBasis {
        local_dim: d,
        generators,
    })
}

/// `sigma_u = sum_a u_a G_a` for a unit vector `u` on the Gell-Mann sphere.
pub fn direction_operator(basis: &GellMannBasis, u: &[f64]) -> Result<HermitianOperator> {
    if u.len() != basis.len() {
        return Err(Error::WrongVectorLength {
            expected: basis.len(),
            actual: u.len(),
        });
    }
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= 1e-10) {
        return Err(Error::NonUnitDirection(norm));
    }
    let d = basis.local_dim;
    let mut m = CMatrix::zeros(d, d);
    for (g, &ua) in basis.generators.iter().zip(u) {
        m += g.matrix() * c(ua, 0.0);
    }
    Ok(HermitianOperator { matrix: m })
}

/// `1^{⊗site} ⊗ op ⊗ 1^{⊗(n_sites-site-1)}`, sites counted from 0.
pub fn embed_local(op: &HermitianOperator, site: usize, n_sites: usize) -> Result<HermitianOperator> {
    embed_product(&[(site, op)], n_sites)
}

/// Tensor product placing each `(site, op)` on its site and identities
/// elsewhere. All operators must share the same local dimension.
pub fn embed_product(factors: &[(usize, &HermitianOperator)], n_sites: usize) -> Result<HermitianOperator> {
    let (_, first) = factors
        .first()
        .ok_or_else(|| Error::InvalidArgument("no local factors".into()))?;
    let d = first.dim();
    let mut slots: Vec<Option<&HermitianOperator>> = vec![None; n_sites];
    for &(site, op) in factors {
        if site >= n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites });
        }
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: op.dim(),
            });
        }
        if slots[site].is_some() {
            return Err(Error::InvalidTuple(factors.iter().map(|f| f.0).collect()));
        }
        slots[site] = Some(op);
    }
    let eye = CMatrix::identity(d, d);
    let mut acc = CMatrix::identity(1, 1);
    for slot in slots {
        acc = match slot {
            Some(op) => acc.kronecker(op.matrix()),
            None => acc.kronecker(&eye),
        };
    }
    Ok(HermitianOperator { matrix: acc })
}

/// `d^n` with overflow and size checks.
pub fn hilbert_dim(d: usize, n_sites: usize) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..n_sites {
        dim = dim
            .checked_mul(d)
            .filter(|&x| x <= 1 << 16)
            .ok_or_else(|| Error::InvalidDimension(format!("{d}^{n_sites} is too large")))?;
    }
    Ok(dim)
}

/// Digits of a computational basis index, site 0 first.
pub fn basis_digits(index: usize, d: usize, n_sites: usize) -> Vec<usize> {
    let mut digits = vec![0; n_sites];
    let mut rest = index;
    for slot in digits.iter_mut().rev() {
        *slot = rest % d;
        rest /= d;
    }
    digits
}

/// Pauli matrices and qubit helpers.
pub mod pauli {
    use super::*;

    pub fn x() -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .expect("sigma_x")
    }

    pub fn y() -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        ))
        .expect("sigma_y")
    }

    pub fn z() -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&[1.0, -1.0])
    }

    /// `(1/2) sum_i op^{(i)}` over `n_sites` qubits.
    pub fn collective(op: &HermitianOperator, n_sites: usize) -> Result<HermitianOperator> {
        let dim = hilbert_dim(op.dim(), n_sites)?;
        let mut acc = HermitianOperator::zeros(dim);
        for site in 0..n_sites {
            acc = &acc + &embed_local(op, site, n_sites)?;
        }
        Ok(acc.scaled(0.5))
    }

    /// `|+> = (|0> + |1>)/sqrt(2)`.
    pub fn plus() -> PureState {
        PureState::from_slice(&[c(1.0, 0.0), c(1.0, 0.0)]).expect("plus state")
    }

    /// `|+>^{⊗n}`.
    pub fn plus_product(n_sites: usize) -> PureState {
        let p = plus();
        let mut acc = PureState::basis(1, 0).expect("scalar");
        for _ in 0..n_sites {
            acc = acc.kron(&p);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_unit_vector, rng_from_seed};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn assert_mat_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let diff = max_abs(&(a - b));
        assert!(diff < tol, "matrices differ by {diff:.3e}");
    }

    #[test]
    fn qubit_gell_mann_is_pauli() {
        let basis = gell_mann_generators(2).unwrap();
        assert_eq!(basis.len(), 3);
        assert_mat_close(basis.generators()[0].matrix(), pauli::x().matrix(), 0.0 + 1e-15);
        assert_mat_close(basis.generators()[1].matrix(), pauli::y().matrix(), 1e-15);
        assert_mat_close(basis.generators()[2].matrix(), pauli::z().matrix(), 1e-15);
    }

    #[test]
    fn qutrit_gell_mann_orthogonality() {
        let basis = gell_mann_generators(3).unwrap();
        assert_eq!(basis.len(), 8);
        for (a, ga) in basis.generators().iter().enumerate() {
            assert!(ga.trace().abs() < 1e-15);
            for (b, gb) in basis.generators().iter().enumerate() {
                // Tr(G_a G_b) by explicit entry sums
                let mut tr = C64::new(0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        tr += ga.matrix()[(i, j)] * gb.matrix()[(j, i)];
                    }
                }
                let expected = if a == b { 2.0 } else { 0.0 };
                assert!((tr - c(expected, 0.0)).norm() < 1e-14, "pair ({a},{b}) gives {tr}");
            }
        }
    }

    #[test]
    fn gell_mann_rejects_small_dimension() {
        assert!(matches!(gell_mann_generators(1), Err(Error::InvalidDimension(_))));
        assert!(gell_mann_generators(0).is_err());
    }

    #[test]
    fn direction_operator_axes() {
        let basis = gell_mann_generators(2).unwrap();
        let z = direction_operator(&basis, &[0.0, 0.0, 1.0]).unwrap();
        assert_mat_close(z.matrix(), pauli::z().matrix(), 1e-15);
        let x = direction_operator(&basis, &[1.0, 0.0, 0.0]).unwrap();
        assert_mat_close(x.matrix(), pauli::x().matrix(), 1e-15);
    }

    #[test]
    fn direction_operator_errors() {
        let basis = gell_mann_generators(2).unwrap();
        assert!(matches!(
            direction_operator(&basis, &[1.0, 0.0]),
            Err(Error::WrongVectorLength { expected: 3, actual: 2 })
        ));
        assert!(matches!(
            direction_operator(&basis, &[1.0, 1.0, 0.0]),
            Err(Error::NonUnitDirection(_))
        ));
    }

    #[test]
    fn qutrit_direction_is_traceless() {
        let mut rng = rng_from_seed(11);
        let basis = gell_mann_generators(3).unwrap();
        for _ in 0..20 {
            let u = random_unit_vector(8, &mut rng);
            let op = direction_operator(&basis, &u).unwrap();
            let sum: f64 = eigh(&op).unwrap().values.iter().sum();
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn embed_local_layouts() {
        let zi = embed_local(&pauli::z(), 0, 2).unwrap();
        assert_mat_close(zi.matrix(), &pauli::z().matrix().kronecker(&CMatrix::identity(2, 2)), 0.0 + 1e-15);
        let ix = embed_local(&pauli::x(), 1, 2).unwrap();
        assert_mat_close(ix.matrix(), &CMatrix::identity(2, 2).kronecker(pauli::x().matrix()), 1e-15);
        assert!(matches!(
            embed_local(&pauli::x(), 2, 2),
            Err(Error::SiteOutOfRange { site: 2, n_sites: 2 })
        ));
    }

    #[test]
    fn embedded_operators_at_distinct_sites_commute() {
        let a = embed_local(&pauli::z(), 0, 3).unwrap();
        let b = embed_local(&pauli::x(), 1, 3).unwrap();
        assert!(max_abs(&commutator(a.matrix(), b.matrix())) < 1e-12);
    }

    #[test]
    fn exponential_closed_forms() {
        let u = matrix_exponential(&pauli::z(), PI).unwrap();
        assert_mat_close(u.matrix(), &(CMatrix::identity(2, 2) * c(-1.0, 0.0)), 1e-14);
        let mut rng = rng_from_seed(3);
        let h = random_hermitian(8, &mut rng);
        let u0 = matrix_exponential(&h, 0.0).unwrap();
        assert_mat_close(u0.matrix(), &CMatrix::identity(8, 8), 0.0 + 1e-15);
        let u = matrix_exponential(&h, 0.37).unwrap();
        assert!(unitary_defect(u.matrix()) < 1e-10);
    }

    #[test]
    fn exponential_group_property() {
        let mut rng = rng_from_seed(5);
        let h = random_hermitian(6, &mut rng);
        let a = matrix_exponential(&h, 0.4).unwrap();
        let b = matrix_exponential(&h, 1.1).unwrap();
        let ab = matrix_exponential(&h, 1.5).unwrap();
        assert_mat_close(&(a.matrix() * b.matrix()), ab.matrix(), 1e-9);
        assert!(matrix_exponential(&h, f64::NAN).is_err());
    }

    #[test]
    fn expectation_and_variance_micro_cases() {
        let zero = PureState::basis(2, 0).unwrap();
        let plus = pauli::plus();
        assert_abs_diff_eq!(expectation(&zero, &pauli::z()).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(expectation(&plus, &pauli::z()).unwrap(), 0.0, epsilon = 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(expectation(&mixed, &pauli::x()).unwrap(), 0.0, epsilon = 1e-15);

        assert_abs_diff_eq!(variance(&zero, &pauli::z()).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(variance(&plus, &pauli::z()).unwrap(), 1.0, epsilon = 1e-15);

        // GHZ(2) against (1/2)(Z⊗1 + 1⊗Z): eigenvalues ±1 with weight 1/2 each
        let ghz = PureState::from_slice(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let jz = pauli::collective(&pauli::z(), 2).unwrap();
        assert_abs_diff_eq!(variance(&ghz, &jz).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(variance(&ghz.to_density(), &jz).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let zero = PureState::basis(2, 0).unwrap();
        let h = HermitianOperator::identity(4);
        assert!(matches!(
            expectation(&zero, &h),
            Err(Error::DimensionMismatch { expected: 2, actual: 4 })
        ));
        assert!(variance(&zero, &h).is_err());
    }

    #[test]
    fn eigh_sorts_and_reconstructs() {
        let s = eigh(&pauli::x()).unwrap();
        assert_abs_diff_eq!(s.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values[1], 1.0, epsilon = 1e-14);
        let s = eigh(&HermitianOperator::from_real_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.values.len(), 3);
        for (got, want) in s.values.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        let mut rng = rng_from_seed(17);
        let h = random_hermitian(7, &mut rng);
        let s = eigh(&h).unwrap();
        let rebuilt = s.apply(|l| c(l, 0.0));
        assert_mat_close(&rebuilt, h.matrix(), 1e-10);
    }

    #[test]
    fn hermitian_construction_policy() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(HermitianOperator::new(m.clone()), Err(Error::NotHermitian(_))));
        m[(1, 0)] = c(1.0, 1e-10);
        let h = HermitianOperator::new(m).unwrap();
        assert!(hermitian_defect(h.matrix()) < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(negative).is_err());
        assert!(PureState::new(CVector::from_element(2, c(1.0, 0.0))).is_err());
    }
}
