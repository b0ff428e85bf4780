//! Block-encoding algebra with `(α, m, ε)` bookkeeping.
//!
//! The abstract form carries the encoded matrix together with its
//! subnormalization and ancilla count. An explicit unitary can be attached for
//! small dimensions; it is built by the one-ancilla completion
//! `[[X, √(I-XX†)], [√(I-X†X), -X†]]` with `X = payload/α`, padded by identity
//! on the remaining bookkeeping ancillas.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, DenseOperator, StateRegister};
use crate::scalar::{cr, Cplx, Real};

/// Largest explicit unitary dimension, `dim · 2^(m+1)`.
pub const EXPLICIT_DIM_LIMIT: usize = 1 << 14;

const NORM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BlockEncoding<T: Real> {
    payload: DenseOperator<T>,
    alpha: T,
    ancilla: usize,
    err_bound: T,
    /// Global phase `θ` of `e^{-iθ}(A + cI)`, metadata only.
    phase: T,
    explicit: Option<DenseOperator<T>>,
}

impl<T: Real> BlockEncoding<T> {
    pub fn payload(&self) -> &DenseOperator<T> {
        &self.payload
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn ancilla(&self) -> usize {
        self.ancilla
    }

    pub fn err_bound(&self) -> T {
        self.err_bound
    }

    pub fn phase(&self) -> T {
        self.phase
    }

    pub fn dim(&self) -> usize {
        self.payload.dim()
    }

    pub fn explicit_unitary(&self) -> Option<&DenseOperator<T>> {
        self.explicit.as_ref()
    }

    /// `payload / α`, the operator a measurement of all-zero ancillas applies.
    pub fn normalized_payload(&self) -> DenseOperator<T> {
        self.payload.scale(T::one() / self.alpha)
    }

    /// Attaches the explicit dilation.
    pub fn with_explicit(mut self) -> Result<Self> {
        self.explicit = Some(dilate_to_unitary(&self)?);
        Ok(self)
    }

    fn abstract_parts(payload: DenseOperator<T>, alpha: T, ancilla: usize, err_bound: T) -> Self {
        Self {
            payload,
            alpha,
            ancilla,
            err_bound,
            phase: T::zero(),
            explicit: None,
        }
    }
}

fn check_norm<T: Real>(a: &DenseOperator<T>, alpha: T) -> Result<()> {
    let bound = alpha.to_f64_lossy() * (1.0 + NORM_SLACK);
    if a.norm_upper_bound() <= bound {
        return Ok(());
    }
    let norm = a.spectral_norm();
    if norm > bound {
        return Err(Error::NormTooLarge { norm, bound });
    }
    Ok(())
}

/// Abstract `(α, m, 0)`-encoding of `A`. Rejects `α < ‖A‖`.
pub fn encode<T: Real>(a: DenseOperator<T>, alpha: T, ancilla: usize) -> Result<BlockEncoding<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::arg("subnormalization must be positive"));
    }
    check_norm(&a, alpha)?;
    Ok(BlockEncoding::abstract_parts(a, alpha, ancilla, T::zero()))
}

/// Sparse-access encoding of a `d`-sparse matrix on `n` qubits with entries of
/// modulus at most 1: `(d, n + 2, 0)`.
pub fn encode_sparse<T: Real>(a: DenseOperator<T>) -> Result<BlockEncoding<T>> {
    let dim = a.dim();
    if !dim.is_power_of_two() {
        return Err(Error::arg(format!("dimension {dim} is not a power of two")));
    }
    if a.max_abs() > 1.0 + NORM_SLACK {
        return Err(Error::arg("sparse encoding needs entries of modulus at most 1"));
    }
    let n = dim.trailing_zeros() as usize;
    let d = sparsity(&a).max(1);
    encode(a, T::from_usize(d).unwrap(), n + 2)
}

/// Maximum number of nonzero entries in a row or column.
pub fn sparsity<T: Real>(a: &DenseOperator<T>) -> usize {
    let m = a.matrix();
    let n = a.dim();
    let zero = cr(T::zero());
    let rows = (0..n).map(|i| (0..n).filter(|&j| m[(i, j)] != zero).count());
    let cols = (0..n).map(|j| (0..n).filter(|&i| m[(i, j)] != zero).count());
    rows.chain(cols).max().unwrap_or(0)
}

/// Encodes `A + cI` with factor `α + |c|` and one more ancilla.
pub fn shift_add_identity<T: Real>(enc: &BlockEncoding<T>, c: Cplx<T>) -> BlockEncoding<T> {
    BlockEncoding {
        payload: enc.payload.shift(c),
        alpha: enc.alpha + c.norm_sqr().sqrt(),
        ancilla: enc.ancilla + 1,
        err_bound: enc.err_bound,
        phase: enc.phase + c.im.atan2(c.re),
        explicit: None,
    }
}

/// Product encoding: `(A₁A₂, α₁α₂, m₁ + m₂, α₁ε₂ + α₂ε₁)`.
pub fn multiply<T: Real>(e1: &BlockEncoding<T>, e2: &BlockEncoding<T>) -> Result<BlockEncoding<T>> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch {
            expected: e1.dim(),
            found: e2.dim(),
        });
    }
    Ok(BlockEncoding {
        payload: e1.payload.mul(&e2.payload)?,
        alpha: e1.alpha * e2.alpha,
        ancilla: e1.ancilla + e2.ancilla,
        err_bound: e1.alpha * e2.err_bound + e2.alpha * e1.err_bound,
        phase: e1.phase + e2.phase,
        explicit: None,
    })
}

/// Weighted sum through a state-preparation pair: `(Σ w_j A_j, Σ w_j α_j,
/// Σ m_j + 1, Σ w_j ε_j)`.
pub fn linear_combine<T: Real>(encs: &[&BlockEncoding<T>], weights: &[T]) -> Result<BlockEncoding<T>> {
    if encs.is_empty() || encs.len() != weights.len() {
        return Err(Error::arg("need one weight per encoding"));
    }
    if weights.iter().any(|&w| w < T::zero()) {
        return Err(Error::arg("weights must be non-negative; fold signs into the payloads"));
    }
    let dim = encs[0].dim();
    let mut m = DMatrix::zeros(dim, dim);
    let mut alpha = T::zero();
    let mut err = T::zero();
    let mut ancilla = 1;
    for (e, &w) in encs.iter().zip(weights) {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.dim(),
            });
        }
        m += e.payload.matrix() * cr(w);
        alpha += w * e.alpha;
        err += w * e.err_bound;
        ancilla += e.ancilla;
    }
    let hermitian = encs.iter().all(|e| e.payload.is_hermitian());
    let payload = if hermitian {
        DenseOperator::hermitian(m)?
    } else {
        DenseOperator::general(m)?
    };
    Ok(BlockEncoding::abstract_parts(payload, alpha, ancilla, err))
}

/// `Q_b = I - |b⟩⟨b|` as a `(1, 1, 0)`-encoding.
pub fn make_qb<T: Real>(b: &StateRegister<T>) -> Result<BlockEncoding<T>> {
    let norm = b.norm().to_f64_lossy();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    let q = DenseOperator::identity(b.len()).sub(&DenseOperator::outer(b, b))?;
    Ok(BlockEncoding::abstract_parts(q.into_hermitian()?, T::one(), 1, T::zero()))
}

/// Explicit unitary whose top-left `dim × dim` block is `payload/α`.
///
/// The result has dimension `2^max(m,1) · dim`; ancillas are the most
/// significant qubits.
pub fn dilate_to_unitary<T: Real>(enc: &BlockEncoding<T>) -> Result<DenseOperator<T>> {
    let dim = enc.dim();
    let needed = dim
        .checked_mul(1usize.checked_shl(enc.ancilla as u32 + 1).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    if needed > EXPLICIT_DIM_LIMIT {
        return Err(Error::SizeGuard {
            dim: needed,
            limit: EXPLICIT_DIM_LIMIT,
        });
    }
    check_norm(&enc.payload, enc.alpha)?;
    let x = enc.normalized_payload();
    let xd = x.adjoint();
    let complement = |g: DenseOperator<T>| -> Result<DMatrix<Cplx<T>>> {
        let e = eig_hermitian(&g.into_hermitian()?)?;
        Ok(e
            .matrix_function(|l| (T::one() - l).max(T::zero()).sqrt())
            .into_matrix())
    };
    let top = complement(x.mul(&xd)?)?;
    let bottom = complement(xd.mul(&x)?)?;
    let mut u = DMatrix::zeros(2 * dim, 2 * dim);
    u.view_mut((0, 0), (dim, dim)).copy_from(x.matrix());
    u.view_mut((0, dim), (dim, dim)).copy_from(&top);
    u.view_mut((dim, 0), (dim, dim)).copy_from(&bottom);
    u.view_mut((dim, dim), (dim, dim)).copy_from(&(-xd.matrix()));
    let u = DenseOperator::general(u)?;
    if enc.ancilla <= 1 {
        return Ok(u);
    }
    Ok(DenseOperator::identity(1 << (enc.ancilla - 1)).kron(&u))
}

/// Measured encoding error `‖A - α·(⟨0|⊗I)U(|0⟩⊗I)‖`.
pub fn verify<T: Real>(enc: &BlockEncoding<T>) -> Result<f64> {
    let u = enc
        .explicit
        .as_ref()
        .ok_or_else(|| Error::arg("encoding carries no explicit unitary"))?;
    let dim = enc.dim();
    let block = u.matrix().view((0, 0), (dim, dim)).into_owned() * cr(enc.alpha);
    let diff = DenseOperator::general(enc.payload.matrix() - block)?;
    Ok(diff.spectral_norm())
}

/// `‖U†U - I‖` in the spectral norm.
pub fn unitarity_defect<T: Real>(u: &DenseOperator<T>) -> Result<f64> {
    let g = u.adjoint().mul(u)?;
    Ok(g.sub(&DenseOperator::identity(u.dim()))?.spectral_norm())
}
