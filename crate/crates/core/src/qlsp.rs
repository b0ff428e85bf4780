//! Linear-system instances, the interpolating Hamiltonians `H(f)` whose null
//! space carries the solution, and the eigenpath `f ↦ |x(f)⟩`.
//!
//! Positive-definite instances use the `2N`-dimensional pair
//! `H₀ = σ_x ⊗ Q_b`, `H₁ = σ₊ ⊗ AQ_b + σ₋ ⊗ Q_bA`. Indefinite and general
//! instances use the `4N`-dimensional pair built around
//! `Q_{+,b} = I - |+,b⟩⟨+,b|`.

use nalgebra::DMatrix;

use crate::blockenc::{encode, linear_combine, multiply, BlockEncoding};
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, linsolve, DenseOperator, StateRegister};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    PositiveDefinite,
    HermitianIndefinite,
    General,
}

impl Form {
    pub fn tag(self) -> &'static str {
        match self {
            Form::PositiveDefinite => "positive-definite",
            Form::HermitianIndefinite => "hermitian-indefinite",
            Form::General => "general",
        }
    }

    pub fn is_dilated(self) -> bool {
        self != Form::PositiveDefinite
    }
}

impl std::str::FromStr for Form {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive-definite" | "pd" => Ok(Form::PositiveDefinite),
            "hermitian-indefinite" | "indefinite" => Ok(Form::HermitianIndefinite),
            "general" => Ok(Form::General),
            other => Err(Error::arg(format!("unknown form '{other}'"))),
        }
    }
}

/// `A|x⟩ ∝ |b⟩` with singular values of `A` in `[1/κ, 1]`.
///
/// For [`Form::General`] the stored `A` is already the Hermitian extension
/// `σ₊ ⊗ A + σ₋ ⊗ A†` and `b` is `|0, b⟩`; see [`extend_general`].
#[derive(Debug, Clone)]
pub struct QlspInstance<T: Real> {
    pub a: DenseOperator<T>,
    pub b: StateRegister<T>,
    pub kappa: T,
    pub sparsity: usize,
    pub form: Form,
}

const INSTANCE_TOL: f64 = 1e-10;

impl<T: Real> QlspInstance<T> {
    pub fn new(a: DenseOperator<T>, b: StateRegister<T>, kappa: T, sparsity: usize, form: Form) -> Result<Self> {
        if a.dim() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.len(),
            });
        }
        if !a.dim().is_power_of_two() {
            return Err(Error::arg("system dimension must be a power of two"));
        }
        if !(kappa > T::one()) {
            return Err(Error::arg("condition bound must exceed 1"));
        }
        if sparsity == 0 {
            return Err(Error::arg("sparsity must be positive"));
        }
        let bn = b.norm().to_f64_lossy();
        if (bn - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm: bn });
        }
        if !a.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: a.hermitian_deviation(),
            });
        }
        let eig = eig_hermitian(&a)?;
        let lo = eig.eigenvalues[0].to_f64_lossy();
        let hi = eig.eigenvalues[eig.dim() - 1].to_f64_lossy();
        let norm = lo.abs().max(hi.abs());
        if norm > 1.0 + INSTANCE_TOL {
            return Err(Error::NormTooLarge { norm, bound: 1.0 });
        }
        let smin = eig
            .eigenvalues
            .iter()
            .map(|x| x.to_f64_lossy().abs())
            .fold(f64::INFINITY, f64::min);
        let k = kappa.to_f64_lossy();
        if smin < 1.0 / k - INSTANCE_TOL {
            return Err(Error::arg(format!(
                "smallest singular value {smin} is below 1/kappa = {}",
                1.0 / k
            )));
        }
        if form == Form::PositiveDefinite && lo <= 0.0 {
            return Err(Error::arg("positive-definite form with a non-positive eigenvalue"));
        }
        Ok(Self {
            a,
            b,
            kappa,
            sparsity,
            form,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Qubits of the instance system register.
    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Normalized `A⁻¹|b⟩`.
    pub fn solution(&self) -> Result<StateRegister<T>> {
        linsolve(&self.a, &self.b)?.normalized()
    }

    /// For general instances, the normalized solution of the original system
    /// (the `|1⟩` block of the extended solution); otherwise [`Self::solution`].
    pub fn original_solution(&self) -> Result<StateRegister<T>> {
        let y = self.solution()?;
        if self.form != Form::General {
            return Ok(y);
        }
        let half = self.dim() / 2;
        StateRegister::system(y.amplitudes().rows(half, half).into_owned())?.normalized()
    }

    /// `Δ*(f) = 1 - f + f/κ`, times `1/√2` for dilated forms.
    pub fn gap_lower_bound(&self, f: T) -> Result<T> {
        gap_lower_bound(self.kappa, self.form, f)
    }

    /// Operator `M(f)` and right-hand side `r` with `|x(f)⟩ ∝ M(f)⁻¹ r`.
    fn path_system(&self, f: T) -> Result<(DenseOperator<T>, StateRegister<T>)> {
        let one = T::one();
        if !self.form.is_dilated() {
            let m = DenseOperator::identity(self.dim()).scale(one - f).add(&self.a.scale(f))?;
            return Ok((m, self.b.clone()));
        }
        let n = self.dim();
        let zi = DenseOperator::sigma_z().kron(&DenseOperator::identity(n));
        let xa = DenseOperator::sigma_x().kron(&self.a);
        let m = zi.scale(one - f).add(&xa.scale(f))?;
        Ok((m, plus().kron(&self.b)))
    }

    pub fn hamiltonians(&self) -> Result<QlspHamiltonians<T>> {
        if self.form.is_dilated() {
            let mut ham = dilate_indefinite(&self.a, &self.b, self.sparsity)?;
            ham.kappa = self.kappa;
            ham.form = self.form;
            Ok(ham)
        } else {
            let n = self.qubits();
            let h0 = make_h0(&self.b)?;
            let h1 = make_h1(&self.a, &self.b)?;
            let q = controlled_projector(&self.b)?;
            let h0_enc = encode(h0.clone(), T::one(), 1)?;
            let d = T::from_usize(self.sparsity).unwrap();
            let xa = encode(DenseOperator::sigma_x().kron(&self.a), d, n + 2)?;
            let h1_enc = with_payload(multiply(&q, &multiply(&xa, &q)?)?, h1.clone())?;
            let zero = StateRegister::basis(2, 0)?;
            let one = StateRegister::basis(2, 1)?;
            Ok(QlspHamiltonians {
                h0,
                h1,
                h0_enc,
                h1_enc,
                initial: zero.kron(&self.b),
                spurious: one.kron(&self.b),
                target: zero.kron(&self.solution()?),
                kappa: self.kappa,
                form: self.form,
            })
        }
    }
}

/// `Δ*(f)` for a given condition bound and form.
pub fn gap_lower_bound<T: Real>(kappa: T, form: Form, f: T) -> Result<T> {
    check_f(f)?;
    let g = T::one() - f + f / kappa;
    Ok(if form.is_dilated() {
        g / T::lit(2.0).sqrt()
    } else {
        g
    })
}

fn check_f<T: Real>(f: T) -> Result<()> {
    if !(f >= T::zero() && f <= T::one()) {
        return Err(Error::arg(format!("interpolation parameter {f} outside [0, 1]")));
    }
    Ok(())
}

fn plus<T: Real>() -> StateRegister<T> {
    let h = T::one() / T::lit(2.0).sqrt();
    StateRegister::from_real(&[h, h]).expect("two amplitudes")
}

fn minus<T: Real>() -> StateRegister<T> {
    let h = T::one() / T::lit(2.0).sqrt();
    StateRegister::from_real(&[h, -h]).expect("two amplitudes")
}

/// Replaces an encoding's payload by the exactly Hermitian assembly of the
/// same matrix (the product form accumulates roundoff).
fn with_payload<T: Real>(enc: BlockEncoding<T>, payload: DenseOperator<T>) -> Result<BlockEncoding<T>> {
    let diff = enc.payload().sub(&payload)?.max_abs();
    if diff > 1e-10 {
        return Err(Error::Validation(format!(
            "product encoding deviates from direct assembly by {diff:e}"
        )));
    }
    encode(payload, enc.alpha(), enc.ancilla())
}

/// `blockdiag(I, Q_r)` as a `(1, 1, 0)`-encoding.
fn controlled_projector<T: Real>(r: &StateRegister<T>) -> Result<BlockEncoding<T>> {
    let q = projector_complement(r)?;
    let c = DenseOperator::ket_bra(2, 0, 0)
        .kron(&DenseOperator::identity(r.len()))
        .add(&DenseOperator::ket_bra(2, 1, 1).kron(&q))?;
    encode(c.into_hermitian()?, T::one(), 1)
}

fn projector_complement<T: Real>(r: &StateRegister<T>) -> Result<DenseOperator<T>> {
    DenseOperator::identity(r.len())
        .sub(&DenseOperator::outer(r, r))?
        .into_hermitian()
}

/// Two-block operator `σ₊ ⊗ X + σ₋ ⊗ X†`.
fn offdiag_hermitian<T: Real>(x: &DenseOperator<T>) -> Result<DenseOperator<T>> {
    let n = x.dim();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(x.matrix());
    m.view_mut((n, 0), (n, n)).copy_from(&x.matrix().adjoint());
    DenseOperator::hermitian(m)
}

/// `H₀ = σ_x ⊗ Q_b`.
pub fn make_h0<T: Real>(b: &StateRegister<T>) -> Result<DenseOperator<T>> {
    check_unit(b)?;
    Ok(DenseOperator::sigma_x().kron(&projector_complement(b)?))
}

/// `H₁ = σ₊ ⊗ AQ_b + σ₋ ⊗ Q_bA`.
pub fn make_h1<T: Real>(a: &DenseOperator<T>, b: &StateRegister<T>) -> Result<DenseOperator<T>> {
    check_unit(b)?;
    if !a.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: a.hermitian_deviation(),
        });
    }
    offdiag_hermitian(&a.mul(&projector_complement(b)?)?)
}

fn check_unit<T: Real>(b: &StateRegister<T>) -> Result<()> {
    let n = b.norm().to_f64_lossy();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

/// The pair `(H₀, H₁)` with encodings, start state and the null vectors.
#[derive(Debug, Clone)]
pub struct QlspHamiltonians<T: Real> {
    pub h0: DenseOperator<T>,
    pub h1: DenseOperator<T>,
    pub h0_enc: BlockEncoding<T>,
    pub h1_enc: BlockEncoding<T>,
    /// Null vector of `H₀` the evolution starts from.
    pub initial: StateRegister<T>,
    /// Null vector shared by all `H(f)` that carries no information; removed
    /// by measuring the first qubit.
    pub spurious: StateRegister<T>,
    /// Null vector of `H₁` holding the solution.
    pub target: StateRegister<T>,
    pub kappa: T,
    pub form: Form,
}

impl<T: Real> QlspHamiltonians<T> {
    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// `H(f) = (1-f)H₀ + fH₁` with factor `1 - f + fd`.
    pub fn make_hf(&self, f: T) -> Result<BlockEncoding<T>> {
        check_f(f)?;
        linear_combine(&[&self.h0_enc, &self.h1_enc], &[T::one() - f, f])
    }

    pub fn gap_lower_bound(&self, f: T) -> Result<T> {
        gap_lower_bound(self.kappa, self.form, f)
    }

    /// Lifts a system path state into the null vector of `H(f)`:
    /// `|0⟩|x(f)⟩`.
    pub fn lift(&self, x: &StateRegister<T>) -> Result<StateRegister<T>> {
        Ok(StateRegister::basis(2, 0)?.kron(x))
    }

    /// Drops the first qubit by keeping its `|0⟩` block.
    pub fn first_qubit_zero(&self, state: &StateRegister<T>) -> Result<StateRegister<T>> {
        let half = state.len() / 2;
        StateRegister::system(state.amplitudes().rows(0, half).into_owned())
    }
}

/// The `4N`-dimensional pair for Hermitian indefinite `A`:
/// `H₀ = σ₊⊗[(σ_z⊗I)Q_{+,b}] + h.c.`, `H₁ = σ₊⊗[(σ_x⊗A)Q_{+,b}] + h.c.`,
/// starting from `|0⟩|−⟩|b⟩`; the solution is `|0⟩|+⟩|x⟩`.
pub fn dilate_indefinite<T: Real>(
    a: &DenseOperator<T>,
    b: &StateRegister<T>,
    sparsity: usize,
) -> Result<QlspHamiltonians<T>> {
    check_unit(b)?;
    let n = a.dim();
    let pb = plus().kron(b);
    let q = projector_complement(&pb)?;
    let zi = DenseOperator::sigma_z().kron(&DenseOperator::identity(n));
    let xa = DenseOperator::sigma_x().kron(a);
    let h0 = offdiag_hermitian(&zi.mul(&q)?)?;
    let h1 = offdiag_hermitian(&xa.mul(&q)?)?;
    let cq = controlled_projector(&pb)?;
    let qubits = n.trailing_zeros() as usize;
    let u0 = encode(DenseOperator::sigma_x().kron(&zi), T::one(), 0)?;
    let d = T::from_usize(sparsity).unwrap();
    let u1 = encode(DenseOperator::sigma_x().kron(&xa), d, qubits + 3)?;
    let h0_enc = with_payload(multiply(&cq, &multiply(&u0, &cq)?)?, h0.clone())?;
    let h1_enc = with_payload(multiply(&cq, &multiply(&u1, &cq)?)?, h1.clone())?;
    let zero = StateRegister::basis(2, 0)?;
    let one = StateRegister::basis(2, 1)?;
    let x = linsolve(a, b)?.normalized()?;
    let sing = eig_hermitian(a)?
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(T::max_value().unwrap(), |m, v| m.min(v));
    Ok(QlspHamiltonians {
        h0,
        h1,
        h0_enc,
        h1_enc,
        initial: zero.kron(&minus::<T>().kron(b)),
        spurious: one.kron(&pb),
        target: zero.kron(&plus::<T>().kron(&x)),
        kappa: T::one() / sing,
        form: Form::HermitianIndefinite,
    })
}

/// Hermitian extension `𝔄 = σ₊ ⊗ A + σ₋ ⊗ A†` with right-hand side `|0, b⟩`.
/// The solution of the extended system is `|1⟩ ⊗ A⁻¹|b⟩`.
pub fn extend_general<T: Real>(
    a: &DenseOperator<T>,
    b: &StateRegister<T>,
    kappa: T,
    sparsity: usize,
) -> Result<QlspInstance<T>> {
    check_unit(b)?;
    let big = offdiag_hermitian(a)?;
    let rhs = StateRegister::basis(2, 0)?.kron(b);
    QlspInstance::new(big, rhs, kappa, sparsity, Form::General)
}

/// A point `|x(f)⟩` of the eigenpath (system part only).
#[derive(Debug, Clone)]
pub struct EigenpathPoint<T: Real> {
    pub f: T,
    pub state: StateRegister<T>,
    pub derivative_norm: T,
}

/// Finite-difference step for path derivatives.
pub const PATH_FD_STEP: f64 = 1e-5;

fn path_raw<T: Real>(inst: &QlspInstance<T>, f: T) -> Result<StateRegister<T>> {
    let (m, r) = inst.path_system(f)?;
    linsolve(&m, &r)?.normalized()
}

/// `|x(f)⟩ ∝ M(f)⁻¹ r` with `M(f) = (1-f)I + fA`, `r = |b⟩` (dilated forms:
/// `M(f) = (1-f)σ_z⊗I + fσ_x⊗A`, `r = |+,b⟩`), plus `‖∂_f x‖` by a central
/// difference in the parallel-transport gauge.
pub fn eigenpath_state<T: Real>(inst: &QlspInstance<T>, f: T) -> Result<EigenpathPoint<T>> {
    check_f(f)?;
    let x = path_raw(inst, f)?;
    let h = T::lit(PATH_FD_STEP);
    let at = |g: T| -> Result<StateRegister<T>> { Ok(path_raw(inst, g)?.aligned_to(&x)) };
    let derivative_norm = if f - h < T::zero() || f + h > T::one() {
        // second-order one-sided stencil (-3x₀ + 4x₁ - x₂)/(2h) pointing inwards
        let s = if f - h < T::zero() { h } else { -h };
        let x1 = at(f + s)?;
        let x2 = at(f + s + s)?;
        let d = x1.scaled(T::lit(4.0)).sub(&x.scaled(T::lit(3.0)))?.sub(&x2)?;
        d.norm() / (T::lit(2.0) * h)
    } else {
        at(f + h)?.distance(&at(f - h)?)? / (h + h)
    };
    Ok(EigenpathPoint {
        f,
        state: x,
        derivative_norm,
    })
}

/// Path state lifted to the null vector of `H(f)`, in the gauge of the
/// instance (real positive overlap with the right-hand side).
pub fn eigenpath_null_vector<T: Real>(inst: &QlspInstance<T>, ham: &QlspHamiltonians<T>, f: T) -> Result<StateRegister<T>> {
    ham.lift(&path_raw(inst, f)?)
}

/// `L*(a, b) = 2/(1-1/κ) · ln((1-(1-1/κ)a)/(1-(1-1/κ)b))`.
pub fn path_length_bound(kappa: f64, a: f64, b: f64) -> f64 {
    let c = 1.0 - 1.0 / kappa;
    2.0 / c * ((1.0 - c * a) / (1.0 - c * b)).ln()
}

/// Trapezoidal length of the path over `[a, b]` with `samples` panels, taken
/// on the grid `f = (1-κ^{-s})/(1-κ^{-1})` which clusters points where the
/// path speeds up.
pub fn eigenpath_segment_length(inst: &QlspInstance<f64>, a: f64, b: f64, samples: usize) -> Result<f64> {
    if samples < 1 || !(0.0..=1.0).contains(&a) || !(a..=1.0).contains(&b) {
        return Err(Error::arg("need 0 <= a <= b <= 1 and at least one panel"));
    }
    let k = inst.kappa;
    let c = 1.0 - 1.0 / k;
    // s ↦ f and its inverse
    let f_of = |s: f64| (1.0 - k.powf(-s)) / c;
    let s_of = |f: f64| -(1.0 - c * f).ln() / k.ln();
    let dfds = |s: f64| k.ln() * k.powf(-s) / c;
    let (sa, sb) = (s_of(a), s_of(b));
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let hs = (sb - sa) / samples as f64;
    for i in 0..=samples {
        let s = sa + hs * i as f64;
        let f = f_of(s).clamp(0.0, 1.0);
        let v = eigenpath_state(inst, f)?.derivative_norm * dfds(s);
        if let Some(p) = prev {
            total += 0.5 * (p + v) * hs;
        }
        prev = Some(v);
    }
    Ok(total)
}

/// Length of the whole path.
pub fn eigenpath_length(inst: &QlspInstance<f64>, samples: usize) -> Result<f64> {
    if samples < 64 {
        return Err(Error::arg("use at least 64 samples"));
    }
    eigenpath_segment_length(inst, 0.0, 1.0, samples)
}

/// `2 ln κ / (1 - 1/κ)`.
pub fn eigenpath_length_bound(kappa: f64) -> f64 {
    2.0 * kappa.ln() / (1.0 - 1.0 / kappa)
}
