//! Dense complex linear algebra: operators, state registers, Hermitian
//! eigendecomposition, linear solves and Chebyshev (Clenshaw) application of
//! matrix polynomials.
//!
//! Everything here is dense. Operator dimensions are expected to stay at
//! desk scale (a few thousand at most).

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cr, Cplx, Real};

/// Relative tolerance used when checking Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Slack allowed above 1 for the operator norm of a Clenshaw argument.
pub const CLENSHAW_NORM_TOL: f64 = 1e-8;

/// A dense square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator<T: Real> {
    m: DMatrix<Cplx<T>>,
    hermitian: bool,
}

impl<T: Real> DenseOperator<T> {
    /// Wraps a general (not necessarily Hermitian) square matrix.
    pub fn general(m: DMatrix<Cplx<T>>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::arg(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::arg("operator has non-finite entries"));
        }
        Ok(Self { m, hermitian: false })
    }

    /// Wraps a Hermitian matrix. The deviation from Hermiticity must be within
    /// [`HERMITIAN_TOL`] relative to the largest entry; the stored matrix is
    /// the symmetrized `(H + H^†)/2`.
    pub fn hermitian(m: DMatrix<Cplx<T>>) -> Result<Self> {
        let op = Self::general(m)?;
        let dev = op.hermitian_deviation();
        let scale = op.max_abs().max(1.0);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(op.symmetrized())
    }

    /// Real symmetric matrix from row-major entries.
    pub fn from_real_rows(dim: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| cr(entries[i * dim + j]));
        Self::general(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
            hermitian: true,
        }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = cr(v);
        }
        Self { m, hermitian: true }
    }

    pub fn sigma_x() -> Self {
        let o = Cplx::<T>::new(T::zero(), T::zero());
        let l = cr(T::one());
        Self {
            m: DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
            hermitian: true,
        }
    }

    pub fn sigma_z() -> Self {
        Self::diagonal(&[T::one(), -T::one()])
    }

    /// `|0><1|`
    pub fn sigma_plus() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = cr(T::one());
        Self { m, hermitian: false }
    }

    /// `|1><0|`
    pub fn sigma_minus() -> Self {
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = cr(T::one());
        Self { m, hermitian: false }
    }

    /// Single-entry matrix `|i><j|` of dimension `dim`.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = cr(T::one());
        Self {
            m,
            hermitian: i == j,
        }
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &StateRegister<T>, v: &StateRegister<T>) -> Self {
        let m = u.amplitudes() * v.amplitudes().adjoint();
        Self {
            m,
            hermitian: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Cplx<T>> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Cplx<T>> {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Cplx<T> {
        self.m[(i, j)]
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == T::zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .map(|z| z.modulus().to_f64_lossy())
            .fold(0.0, f64::max)
    }

    /// `max |H_ij - conj(H_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.m[(i, j)] - self.m[(j, i)].conj()).modulus().to_f64_lossy();
                dev = dev.max(d);
            }
        }
        dev
    }

    fn symmetrized(self) -> Self {
        let half = cr(T::lit(0.5));
        let m = (&self.m + self.m.adjoint()) * half;
        Self { m, hermitian: true }
    }

    /// Re-checks Hermiticity and sets the flag when it holds.
    pub fn into_hermitian(self) -> Result<Self> {
        Self::hermitian(self.m)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
            hermitian: self.hermitian,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            m: &self.m * &other.m,
            hermitian: false,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            m: &self.m + &other.m,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim())?;
        Ok(Self {
            m: &self.m - &other.m,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            m: &self.m * cr(s),
            hermitian: self.hermitian,
        }
    }

    pub fn scale_complex(&self, s: Cplx<T>) -> Self {
        Self {
            m: &self.m * s,
            hermitian: self.hermitian && s.im == T::zero(),
        }
    }

    /// `self + c I`.
    pub fn shift(&self, c: Cplx<T>) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += c;
        }
        Self {
            m,
            hermitian: self.hermitian && c.im == T::zero(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            m: self.m.kronecker(&other.m),
            hermitian: self.hermitian && other.hermitian,
        }
    }

    pub fn apply(&self, v: &StateRegister<T>) -> Result<StateRegister<T>> {
        self.check_dim(v.len())?;
        Ok(StateRegister {
            amps: &self.m * &v.amps,
            ancilla_qubits: v.ancilla_qubits,
            system_qubits: v.system_qubits,
        })
    }

    /// Spectral norm. Hermitian operators use the eigenvalues, general ones the
    /// singular values.
    pub fn spectral_norm(&self) -> f64 {
        if self.hermitian {
            if let Ok(d) = eig_hermitian(self) {
                return d
                    .eigenvalues
                    .iter()
                    .map(|x| x.to_f64_lossy().abs())
                    .fold(0.0, f64::max);
            }
        }
        let s = self.m.clone().singular_values();
        s.iter().map(|x| x.to_f64_lossy()).fold(0.0, f64::max)
    }

    /// Cheap upper bound on the spectral norm: `sqrt(‖·‖_1 ‖·‖_∞)`.
    pub fn norm_upper_bound(&self) -> f64 {
        let n = self.dim();
        let mut row_max = 0.0f64;
        let mut col = vec![0.0f64; n];
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let a = self.m[(i, j)].modulus().to_f64_lossy();
                row += a;
                col[j] += a;
            }
            row_max = row_max.max(row);
        }
        let col_max = col.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> f64 {
        let s = self.m.clone().singular_values();
        s.iter().map(|x| x.to_f64_lossy()).fold(f64::INFINITY, f64::min)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

/// Spectral-norm distance between two operators of equal dimension.
pub fn operator_distance<T: Real>(a: &DenseOperator<T>, b: &DenseOperator<T>) -> Result<f64> {
    Ok(a.sub(b)?.spectral_norm())
}

/// Complex amplitude vector with an `(ancilla | system)` qubit split. The
/// ancilla register is the most significant factor, so amplitude index
/// `a * 2^system + s` belongs to ancilla basis state `a` and system state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRegister<T: Real> {
    amps: DVector<Cplx<T>>,
    ancilla_qubits: usize,
    system_qubits: usize,
}

fn log2_exact(n: usize) -> Option<usize> {
    (n.is_power_of_two()).then(|| n.trailing_zeros() as usize)
}

impl<T: Real> StateRegister<T> {
    /// Builds a register whose length must be a power of two; the leading
    /// `ancilla_qubits` qubits form the ancilla register.
    pub fn new(amps: DVector<Cplx<T>>, ancilla_qubits: usize) -> Result<Self> {
        let total = log2_exact(amps.len())
            .ok_or_else(|| Error::arg(format!("register length {} is not a power of two", amps.len())))?;
        if ancilla_qubits > total {
            return Err(Error::arg("more ancilla qubits than total qubits"));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::arg("register has non-finite amplitudes"));
        }
        Ok(Self {
            amps,
            ancilla_qubits,
            system_qubits: total - ancilla_qubits,
        })
    }

    pub fn system(amps: DVector<Cplx<T>>) -> Result<Self> {
        Self::new(amps, 0)
    }

    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::system(DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| cr(v)),
        ))
    }

    pub fn from_complex(values: &[Cplx<T>]) -> Result<Self> {
        Self::system(DVector::from_column_slice(values))
    }

    /// Computational basis state `|index>` on `dim` amplitudes.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        let mut v = DVector::zeros(dim);
        if index >= dim {
            return Err(Error::arg("basis index out of range"));
        }
        v[index] = cr(T::one());
        Self::system(v)
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn system_qubits(&self) -> usize {
        self.system_qubits
    }

    pub fn amplitudes(&self) -> &DVector<Cplx<T>> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<Cplx<T>> {
        self.amps
    }

    pub fn amp(&self, i: usize) -> Cplx<T> {
        self.amps[i]
    }

    /// Re-labels the qubit split without touching amplitudes.
    pub fn with_ancilla(mut self, ancilla_qubits: usize) -> Result<Self> {
        let total = self.ancilla_qubits + self.system_qubits;
        if ancilla_qubits > total {
            return Err(Error::arg("more ancilla qubits than total qubits"));
        }
        self.ancilla_qubits = ancilla_qubits;
        self.system_qubits = total - ancilla_qubits;
        Ok(self)
    }

    /// Same register layout with new amplitudes of equal length.
    pub(crate) fn with_amplitudes(&self, amps: DVector<Cplx<T>>) -> Self {
        debug_assert_eq!(amps.len(), self.amps.len());
        Self {
            amps,
            ancilla_qubits: self.ancilla_qubits,
            system_qubits: self.system_qubits,
        }
    }

    pub fn norm(&self) -> T {
        self.amps.norm()
    }

    pub fn norm_squared(&self) -> T {
        self.amps.norm_squared()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        Ok(self.scaled(T::one() / n))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            amps: &self.amps * cr(s),
            ..self.clone()
        }
    }

    pub fn scaled_complex(&self, s: Cplx<T>) -> Self {
        Self {
            amps: &self.amps * s,
            ..self.clone()
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Cplx<T> {
        self.amps.dotc(&other.amps)
    }

    /// Unsquared fidelity `|<a|b>| / (‖a‖ ‖b‖)`.
    pub fn fidelity(&self, other: &Self) -> T {
        let d = self.norm() * other.norm();
        if d == T::zero() {
            return T::zero();
        }
        self.inner(other).modulus() / d
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            amps: &self.amps + &other.amps,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-T::one()))
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.sub(other)?.norm())
    }

    /// Tensor product `|self> ⊗ |other>`. The ancilla count of the result is
    /// the total qubit count of `self` plus the ancilla count of `other`.
    pub fn kron(&self, other: &Self) -> Self {
        let amps = self.amps.kronecker(&other.amps);
        let self_qubits = self.ancilla_qubits + self.system_qubits;
        Self {
            amps,
            ancilla_qubits: self_qubits + other.ancilla_qubits,
            system_qubits: other.system_qubits,
        }
    }

    /// The block of amplitudes belonging to ancilla basis state `index`, as a
    /// pure system register.
    pub fn ancilla_block(&self, index: usize) -> Result<Self> {
        let block = 1usize << self.system_qubits;
        if index >= (1usize << self.ancilla_qubits) {
            return Err(Error::arg("ancilla index out of range"));
        }
        Self::system(self.amps.rows(index * block, block).into_owned())
    }

    /// Phase-aligns `self` so that `<reference|self>` is real and non-negative.
    pub fn aligned_to(&self, reference: &Self) -> Self {
        let ov = reference.inner(self);
        let n = ov.modulus();
        if n == T::zero() {
            return self.clone();
        }
        self.scaled_complex(ov.conj() / cr(n))
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: DMatrix<Cplx<T>>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(Λ) V^†`.
    pub fn matrix_function(&self, f: impl Fn(T) -> T) -> DenseOperator<T> {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = cr(f(lam));
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        let m = scaled * self.eigenvectors.adjoint();
        DenseOperator { m, hermitian: false }
            .into_hermitian_lossy()
    }

    /// `V f(Λ) V^† v`, with a complex-valued `f`.
    pub fn apply_complex(&self, f: impl Fn(T) -> Cplx<T>, v: &StateRegister<T>) -> Result<StateRegister<T>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut coeffs = self.eigenvectors.adjoint() * &v.amps;
        for (c, &lam) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= f(lam);
        }
        Ok(StateRegister {
            amps: &self.eigenvectors * coeffs,
            ..v.clone()
        })
    }

    /// `V f(Λ) V^† v`.
    pub fn apply(&self, f: impl Fn(T) -> T, v: &StateRegister<T>) -> Result<StateRegister<T>> {
        self.apply_complex(|x| cr(f(x)), v)
    }

    pub fn reconstruct(&self) -> DenseOperator<T> {
        self.matrix_function(|x| x)
    }

    /// Eigenvector for the `j`-th eigenvalue.
    pub fn vector(&self, j: usize) -> StateRegister<T> {
        StateRegister {
            amps: self.eigenvectors.column(j).into_owned(),
            ancilla_qubits: 0,
            system_qubits: log2_exact(self.dim()).unwrap_or(0),
        }
    }

    /// Orthogonal projector onto eigenvectors whose eigenvalue satisfies `pred`.
    pub fn projector(&self, pred: impl Fn(T) -> bool) -> DenseOperator<T> {
        self.matrix_function(|x| if pred(x) { T::one() } else { T::zero() })
    }
}

impl<T: Real> DenseOperator<T> {
    fn into_hermitian_lossy(self) -> Self {
        self.symmetrized()
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// The input is symmetrized first. Purely real input takes a real symmetric
/// path.
pub fn eig_hermitian<T: Real>(h: &DenseOperator<T>) -> Result<SpectralDecomposition<T>> {
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = h.dim();
    let eps = T::eps();
    let max_iter = 1000 * n.max(10);
    let (vals, vecs): (Vec<T>, DMatrix<Cplx<T>>) = if h.is_real() {
        let re = DMatrix::from_fn(n, n, |i, j| {
            (h.m[(i, j)].re + h.m[(j, i)].re) * T::lit(0.5)
        });
        let e = SymmetricEigen::try_new(re, eps, max_iter).ok_or(Error::NoConvergence { dim: n })?;
        (
            e.eigenvalues.iter().copied().collect(),
            e.eigenvectors.map(cr),
        )
    } else {
        let half = cr(T::lit(0.5));
        let sym = (&h.m + h.m.adjoint()) * half;
        let e = SymmetricEigen::try_new(sym, eps, max_iter).ok_or(Error::NoConvergence { dim: n })?;
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.iter().map(|&k| vals[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Evaluates `Σ_k c_k T_k(H) v` by the backward Clenshaw recurrence.
///
/// `H` must satisfy `‖H‖ ≤ 1 + 1e-8`; the recurrence is unstable outside
/// `[-1, 1]`.
pub fn clenshaw_apply<T: Real>(
    coeffs: &[T],
    h: &DenseOperator<T>,
    v: &StateRegister<T>,
) -> Result<StateRegister<T>> {
    if v.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: v.len(),
        });
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::arg("non-finite Chebyshev coefficient"));
    }
    check_clenshaw_norm(h)?;
    Ok(StateRegister {
        amps: clenshaw_unchecked(coeffs, h.matrix(), v.amplitudes()),
        ..v.clone()
    })
}

fn check_clenshaw_norm<T: Real>(h: &DenseOperator<T>) -> Result<()> {
    let bound = 1.0 + CLENSHAW_NORM_TOL;
    if h.norm_upper_bound() <= bound {
        return Ok(());
    }
    let norm = h.spectral_norm();
    if norm > bound {
        return Err(Error::NormTooLarge { norm, bound });
    }
    Ok(())
}

pub(crate) fn clenshaw_unchecked<T: Real>(
    coeffs: &[T],
    h: &DMatrix<Cplx<T>>,
    v: &DVector<Cplx<T>>,
) -> DVector<Cplx<T>> {
    let n = v.len();
    if coeffs.is_empty() {
        return DVector::zeros(n);
    }
    let two = cr(T::lit(2.0));
    let one = cr(T::one());
    let mut b1: DVector<Cplx<T>> = DVector::zeros(n);
    let mut b2: DVector<Cplx<T>> = DVector::zeros(n);
    let mut tmp: DVector<Cplx<T>> = DVector::zeros(n);
    for k in (1..coeffs.len()).rev() {
        // tmp = 2 H b1 - b2 + c_k v
        tmp.copy_from(&b2);
        tmp.gemv(two, h, &b1, -one);
        tmp.axpy(cr(coeffs[k]), v, one);
        std::mem::swap(&mut b2, &mut b1);
        std::mem::swap(&mut b1, &mut tmp);
    }
    // result = c_0 v + H b1 - b2
    let mut out = b2;
    out.gemv(one, h, &b1, -one);
    out.axpy(cr(coeffs[0]), v, one);
    out
}

/// Solves `A x = b` by LU with one step of iterative refinement.
pub fn linsolve<T: Real>(a: &DenseOperator<T>, b: &StateRegister<T>) -> Result<StateRegister<T>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let lu = a.matrix().clone().lu();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let u = lu.u();
    let min_pivot = u.diagonal().iter().map(|z| z.modulus().to_f64_lossy()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-14 * scale) {
        return Err(Error::Singular(format!("smallest LU pivot {min_pivot:e}")));
    }
    let mut x = lu
        .solve(b.amplitudes())
        .ok_or_else(|| Error::Singular("LU solve failed".into()))?;
    let bnorm = b.norm().to_f64_lossy();
    for _ in 0..2 {
        let r = b.amplitudes() - a.matrix() * &x;
        if r.norm().to_f64_lossy() <= 1e-13 * bnorm.max(f64::MIN_POSITIVE) {
            break;
        }
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let res = (b.amplitudes() - a.matrix() * &x).norm().to_f64_lossy();
    if !(res <= 1e-9 * bnorm) && bnorm > 0.0 {
        return Err(Error::Singular(format!("residual {res:e} too large")));
    }
    Ok(StateRegister {
        amps: x,
        ..b.clone()
    })
}

/// Complex scalar helper.
pub fn c64<T: Real>(re: f64, im: f64) -> Cplx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> DenseOperator<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::<Cplx<f64>>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z = Complex::new(rng.gen_range(-1.0..1.0), if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) });
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        DenseOperator::hermitian(m).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let d = eig_hermitian(&DenseOperator::<f64>::identity(4)).unwrap();
        assert_eq!(d.eigenvalues.len(), 4);
        for v in d.eigenvalues {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let d = eig_hermitian(&DenseOperator::<f64>::sigma_x()).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let h = random_hermitian(32, 3);
        let d = eig_hermitian(&h).unwrap();
        let err = operator_distance(&d.reconstruct(), &h).unwrap();
        assert!(err <= 1e-10 * h.spectral_norm(), "err {err}");
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let vtv = d.eigenvectors.adjoint() * &d.eigenvectors;
        let id = DMatrix::<Cplx<f64>>::identity(32, 32);
        assert!((vtv - id).norm() < 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let op = DenseOperator::<f64>::general(m.clone()).unwrap();
        assert!(matches!(eig_hermitian(&op), Err(Error::NotHermitian { .. })));
        assert!(DenseOperator::<f64>::hermitian(m).is_err());
    }

    #[test]
    fn clenshaw_constant_and_linear() {
        let h = DenseOperator::diagonal(&[0.5, -0.5]);
        let s = 1.0 / 2f64.sqrt();
        let v = StateRegister::from_real(&[s, s]).unwrap();
        let out = clenshaw_apply(&[1.0], &h, &v).unwrap();
        assert!(out.distance(&v).unwrap() < 1e-15);
        let out = clenshaw_apply(&[0.0, 1.0], &h, &v).unwrap();
        let expect = StateRegister::from_real(&[0.5 * s, -0.5 * s]).unwrap();
        assert!(out.distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn clenshaw_rejects_large_norm() {
        let h = DenseOperator::diagonal(&[1.5, 0.0]);
        let v = StateRegister::from_real(&[1.0, 0.0]).unwrap();
        assert!(matches!(clenshaw_apply(&[0.0, 1.0], &h, &v), Err(Error::NormTooLarge { .. })));
    }

    #[test]
    fn clenshaw_matches_spectral_degree_64() {
        let h0 = random_hermitian(16, 11);
        let h = h0.scale(1.0 / h0.spectral_norm());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<f64> = (0..=64).map(|_| rng.gen_range(-1.0..1.0) / 8.0).collect();
        let v = StateRegister::from_real(&(0..16).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap();
        let out = clenshaw_apply(&coeffs, &h, &v).unwrap();
        let d = eig_hermitian(&h).unwrap();
        let oracle = d
            .apply(
                |x| {
                    let t = x.clamp(-1.0, 1.0).acos();
                    coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 * t).cos()).sum()
                },
                &v,
            )
            .unwrap();
        assert!(out.distance(&oracle).unwrap() < 1e-9);
    }

    #[test]
    fn linsolve_cases() {
        let b = StateRegister::from_real(&[0.3, -0.7]).unwrap();
        let x = linsolve(&DenseOperator::identity(2), &b).unwrap();
        assert!(x.distance(&b).unwrap() < 1e-15);
        let b = StateRegister::from_real(&[1.0, 1.0]).unwrap();
        let x = linsolve(&DenseOperator::diagonal(&[2.0, 4.0]), &b).unwrap();
        let expect = StateRegister::from_real(&[0.5, 0.25]).unwrap();
        assert!(x.distance(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn linsolve_singular() {
        let b = StateRegister::from_real(&[1.0, 1.0]).unwrap();
        let a = DenseOperator::diagonal(&[1.0, 0.0]);
        assert!(matches!(linsolve(&a, &b), Err(Error::Singular(_))));
    }

    #[test]
    fn linsolve_random_64() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = DMatrix::from_fn(64, 64, |i, j| {
            Complex::new(rng.gen_range(-0.1..0.1) + if i == j { 4.0 } else { 0.0 }, rng.gen_range(-0.1..0.1))
        });
        let a = DenseOperator::general(m).unwrap();
        let b = StateRegister::from_real(&(0..64).map(|k| (k as f64).sin()).collect::<Vec<_>>()).unwrap();
        let x = linsolve(&a, &b).unwrap();
        let r = a.apply(&x).unwrap().distance(&b).unwrap();
        assert!(r <= 1e-9 * b.norm());
    }

    #[test]
    fn register_requires_power_of_two() {
        assert!(StateRegister::<f64>::from_real(&[1.0, 0.0, 0.0]).is_err());
        let r = StateRegister::<f64>::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap().with_ancilla(1).unwrap();
        assert_eq!(r.system_qubits(), 1);
        assert_eq!(r.ancilla_block(0).unwrap().len(), 2);
    }

    #[test]
    fn f32_kernel_smoke() {
        let h = DenseOperator::<f32>::diagonal(&[0.25, -0.75]);
        let d = eig_hermitian(&h).unwrap();
        assert!((d.eigenvalues[0] + 0.75).abs() < 1e-6);
        let v = StateRegister::<f32>::from_real(&[1.0, 0.0]).unwrap();
        let out = clenshaw_apply(&[0.0, 0.0, 1.0], &h, &v).unwrap();
        // T_2(0.25) = 2 * 0.0625 - 1
        assert!((out.amp(0).re + 0.875).abs() < 1e-6);
    }
}
