//! Eigenstate filtering, reflection and θ-reflection as polynomial transforms
//! of a block-encoded Hermitian operator, plus ancilla measurement.
//!
//! For an encoding of `H` with factor `α` and target eigenvalue `λ`, the
//! filters act on `H̃ = (H - λI)/(α + |λ|)`, whose gap around 0 is
//! `Δ̃ = Δ/(α + |λ|)`.

use rand::RngCore;

use crate::blockenc::{shift_add_identity, BlockEncoding};
use crate::chebpoly::{
    cheb_eval_log, filter_cheb_coeffs, max_bound_gap, decay_bound, FilterSpec, ReflectionPolynomial,
};
use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, DenseOperator, CLENSHAW_NORM_TOL, SpectralDecomposition, StateRegister};
use crate::scalar::{cr, Cplx, Real};

/// Distance below which an eigenvalue counts as equal to the target.
pub const EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureMode {
    Postselect,
    Sample,
}

impl std::str::FromStr for MeasureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "postselect" => Ok(Self::Postselect),
            "sample" => Ok(Self::Sample),
            other => Err(Error::arg(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome<T: Real> {
    pub success_probability: T,
    /// Renormalized state of the success branch. After a failed sample this is
    /// the renormalized failure branch when it is representable, otherwise the
    /// input state.
    pub post_state: StateRegister<T>,
    pub mode: MeasureMode,
    pub sampled_success: Option<bool>,
    /// Ancilla qubits of the circuit this outcome emulates.
    pub ancilla: usize,
    /// Uses of the input block-encoding (or its inverse).
    pub queries: usize,
}

impl<T: Real> MeasurementOutcome<T> {
    /// True for postselection and for successful samples.
    pub fn succeeded(&self) -> bool {
        self.sampled_success.unwrap_or(true)
    }
}

/// Shifted and rescaled operator together with its spectral data.
#[derive(Debug, Clone)]
pub struct FilterSetup<T: Real> {
    pub lambda: T,
    /// `H̃ = (H - λI)/(α + |λ|)`.
    pub h_tilde: DenseOperator<T>,
    /// Gap of `H̃` around 0 used for polynomial construction (unclamped).
    pub gap: T,
    /// Gap measured from the spectrum, before any override.
    pub measured_gap: T,
    /// Ancilla count of the shifted encoding.
    pub ancilla: usize,
    pub spectrum: SpectralDecomposition<T>,
}

impl<T: Real> FilterSetup<T> {
    /// Validates `λ` against the spectrum of the payload and measures the gap.
    /// `gap_override` replaces the measured gap of `H` (not of `H̃`).
    pub fn new(enc: &BlockEncoding<T>, lambda: T, gap_override: Option<T>) -> Result<Self> {
        let payload = enc.payload();
        if !payload.is_hermitian() {
            return Err(Error::NotHermitian {
                deviation: payload.hermitian_deviation(),
            });
        }
        let shifted = shift_add_identity(enc, cr(-lambda));
        let scale = shifted.alpha();
        let h_tilde = shifted.normalized_payload().into_hermitian()?;
        let spectrum = eig_hermitian(&h_tilde)?;
        let radius = spectrum.eigenvalues.iter().fold(0.0, |a: f64, x| a.max(x.to_f64_lossy().abs()));
        if radius > 1.0 + CLENSHAW_NORM_TOL {
            return Err(Error::NormTooLarge {
                norm: radius,
                bound: 1.0 + CLENSHAW_NORM_TOL,
            });
        }
        let tol = T::lit(EIGEN_TOL) / scale;
        let nearest = spectrum
            .eigenvalues
            .iter()
            .copied()
            .fold(T::max_value().unwrap(), |a, x| if x.abs() < a.abs() { x } else { a });
        if nearest.abs() > tol {
            return Err(Error::NotAnEigenvalue {
                lambda: lambda.to_f64_lossy(),
                nearest: (nearest * scale + lambda).to_f64_lossy(),
            });
        }
        let measured = spectrum
            .eigenvalues
            .iter()
            .map(|x| x.abs())
            .filter(|&x| x > tol)
            .fold(T::one(), |a, x| a.min(x));
        let gap = match gap_override {
            Some(g) if g > T::zero() => g / scale,
            Some(_) => return Err(Error::arg("gap override must be positive")),
            None => measured,
        };
        Ok(Self {
            lambda,
            h_tilde,
            gap: gap.min(T::lit(0.999_999)),
            measured_gap: measured * scale,
            ancilla: shifted.ancilla(),
            spectrum,
        })
    }

    /// Gap entering the bound formulas, capped at `1/√12`.
    pub fn bound_gap(&self) -> T {
        self.gap.min(max_bound_gap())
    }

    /// `2 e^{-√2 ℓ Δ̃}`.
    pub fn bound(&self, ell: usize) -> T {
        decay_bound(ell, self.gap)
    }

    /// Spectral projector onto the target eigenspace.
    pub fn projector(&self) -> DenseOperator<T> {
        let tol = T::lit(EIGEN_TOL);
        self.spectrum.projector(|x| x.abs() <= tol)
    }

    fn is_target(&self, x: T) -> bool {
        x.abs() <= T::lit(EIGEN_TOL)
    }
}

fn check_unit<T: Real>(psi: &StateRegister<T>) -> Result<()> {
    let n = psi.norm().to_f64_lossy();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

/// Turns an unnormalized projected vector into an outcome.
fn finish<T: Real>(
    projected: StateRegister<T>,
    fallback: &StateRegister<T>,
    mode: MeasureMode,
    rng: Option<&mut dyn RngCore>,
    ancilla: usize,
    queries: usize,
) -> Result<MeasurementOutcome<T>> {
    let p = projected.norm_squared().min(T::one());
    match mode {
        MeasureMode::Postselect => {
            if !(p > T::zero()) {
                return Err(Error::FilteredToZero {
                    probability: p.to_f64_lossy(),
                });
            }
            Ok(MeasurementOutcome {
                success_probability: p,
                post_state: projected.normalized()?,
                mode,
                sampled_success: None,
                ancilla,
                queries,
            })
        }
        MeasureMode::Sample => {
            let rng = rng.ok_or_else(|| Error::arg("sample mode needs a random generator"))?;
            let u = uniform(rng);
            let ok = u < p.to_f64_lossy();
            let post_state = if ok {
                projected.normalized()?
            } else {
                fallback.clone()
            };
            Ok(MeasurementOutcome {
                success_probability: p,
                post_state,
                mode,
                sampled_success: Some(ok),
                ancilla,
                queries,
            })
        }
    }
}

/// Uniform draw in `[0, 1)` from 53 random bits.
pub fn uniform(rng: &mut dyn RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Applies `R_ℓ(H̃; Δ̃)` to `ψ` by Clenshaw and measures the ancillas.
pub fn apply_filter<T: Real>(
    setup: &FilterSetup<T>,
    ell: usize,
    psi: &StateRegister<T>,
    mode: MeasureMode,
    rng: Option<&mut dyn RngCore>,
) -> Result<MeasurementOutcome<T>> {
    check_unit(psi)?;
    let spec = FilterSpec::filter(ell, setup.gap)?;
    let out = filter_cheb_coeffs(&spec).apply_checked_norm(&setup.h_tilde, psi)?;
    finish(out, psi, mode, rng, setup.ancilla + 1, 2 * ell)
}

/// `‖R_ℓ(H̃; Δ̃) - P_λ‖`, exact via the shared eigenbasis.
pub fn projector_error<T: Real>(setup: &FilterSetup<T>, ell: usize) -> Result<T> {
    let spec = FilterSpec::filter(ell, setup.gap)?;
    Ok(setup
        .spectrum
        .eigenvalues
        .iter()
        .map(|&x| {
            let target = if setup.is_target(x) { T::one() } else { T::zero() };
            (crate::chebpoly::filter_eval(&spec, x) - target).abs()
        })
        .fold(T::zero(), |a, e| a.max(e)))
}

/// Applies `S_ℓ(H̃; Δ̃) ≈ 2P_λ - I`.
pub fn reflection_apply<T: Real>(
    setup: &FilterSetup<T>,
    ell: usize,
    psi: &StateRegister<T>,
    mode: MeasureMode,
    rng: Option<&mut dyn RngCore>,
) -> Result<MeasurementOutcome<T>> {
    check_unit(psi)?;
    let poly = ReflectionPolynomial::new(ell, setup.gap)?;
    let out = poly.cheb_coeffs().apply_checked_norm(&setup.h_tilde, psi)?;
    finish(out, psi, mode, rng, setup.ancilla + 1, 2 * ell)
}

/// Emulates the one-bit phase estimation circuit around the reflection:
/// the ancilla-zero branch is `A₀² + e^{iθ}A₁²` with `A₀ = (I + S)/2`,
/// `A₁ = (I - S)/2`, which tends to `P_λ + e^{iθ}(I - P_λ)`.
pub fn theta_reflection_apply<T: Real>(
    setup: &FilterSetup<T>,
    ell: usize,
    theta: T,
    psi: &StateRegister<T>,
    mode: MeasureMode,
    rng: Option<&mut dyn RngCore>,
) -> Result<MeasurementOutcome<T>> {
    check_unit(psi)?;
    let poly = ReflectionPolynomial::new(ell, setup.gap)?;
    let series = poly.cheb_coeffs();
    let s1 = series.apply_checked_norm(&setup.h_tilde, psi)?;
    let s2 = series.apply_checked_norm(&setup.h_tilde, &s1)?;
    let quarter = T::lit(0.25);
    let two = T::lit(2.0);
    // A0² ψ = (ψ + 2Sψ + S²ψ)/4, A1² ψ = (ψ - 2Sψ + S²ψ)/4
    let a0 = psi.add(&s1.scaled(two))?.add(&s2)?.scaled(quarter);
    let a1 = psi.sub(&s1.scaled(two))?.add(&s2)?.scaled(quarter);
    let phase = Cplx::new(theta.cos(), theta.sin());
    let out = a0.add(&a1.scaled_complex(phase))?;
    finish(out, psi, mode, rng, setup.ancilla + 2, 4 * ell)
}

/// Projects onto the all-zero ancilla block (the leading amplitudes).
pub fn measure_ancilla<T: Real>(
    state: &StateRegister<T>,
    mode: MeasureMode,
    rng: Option<&mut dyn RngCore>,
) -> Result<MeasurementOutcome<T>> {
    if state.ancilla_qubits() == 0 {
        return Err(Error::arg("register has no ancilla qubits"));
    }
    let block = state.ancilla_block(0)?;
    let p = block.norm_squared();
    let total = state.norm_squared();
    // failure branch: everything outside the zero block
    let mut rest = state.amplitudes().clone();
    rest.rows_mut(0, block.len()).fill(cr(T::zero()));
    let failure = if total - p > T::zero() {
        StateRegister::new(rest, state.ancilla_qubits())?.normalized()?
    } else {
        state.clone()
    };
    finish(block.scaled(T::one() / total.sqrt()), &failure, mode, rng, state.ancilla_qubits(), 0)
}

/// Filtered states `R_ℓ(H̃; Δ̃)ψ` for every `ℓ = 0..=max_ell`, by the scaled
/// three-term recurrence of `T_ℓ(G)` with
/// `G = -I + 2(H̃² - Δ̃²)/(1 - Δ̃²)`.
pub fn filter_sweep<T: Real>(
    h_tilde: &DenseOperator<T>,
    gap: T,
    max_ell: usize,
    psi: &StateRegister<T>,
) -> Result<Vec<StateRegister<T>>> {
    let mut out = Vec::with_capacity(max_ell + 1);
    filter_sweep_each(h_tilde, gap, max_ell, psi, |_, s| {
        out.push(s.clone());
        true
    })?;
    Ok(out)
}

/// Streaming form of [`filter_sweep`]: `visit(ℓ, state)` sees each iterate in
/// order and stops the sweep by returning `false`.
///
/// Each iterate is divided by `T_ℓ(g₀)` on the fly so nothing overflows.
pub fn filter_sweep_each<T: Real>(
    h_tilde: &DenseOperator<T>,
    gap: T,
    max_ell: usize,
    psi: &StateRegister<T>,
    mut visit: impl FnMut(usize, &StateRegister<T>) -> bool,
) -> Result<()> {
    if psi.len() != h_tilde.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_tilde.dim(),
            found: psi.len(),
        });
    }
    FilterSpec::filter(1, gap)?;
    let d2 = gap * gap;
    let c = T::lit(2.0) / (T::one() - d2);
    let shift = -T::one() - c * d2;
    let g0 = shift;
    let h = h_tilde.matrix();
    let apply_g = |v: &nalgebra::DVector<Cplx<T>>| -> nalgebra::DVector<Cplx<T>> {
        let hv = h * v;
        let hhv = h * hv;
        hhv * cr(c) + v * cr(shift)
    };
    let log_t = |l: usize| cheb_eval_log(l, g0);
    // t_a / t_b
    let ratio = |a: (T, T), b: (T, T)| a.0 * b.0 * (a.1 - b.1).exp();
    let anc = psi.ancilla_qubits();
    if !visit(0, psi) || max_ell == 0 {
        return Ok(());
    }
    let r0 = psi.amplitudes().clone();
    let (mut l_prev, mut l_cur) = (log_t(0), log_t(1));
    let r1 = apply_g(&r0) * cr(ratio(l_prev, l_cur));
    if !visit(1, &StateRegister::new(r1.clone(), anc)?) {
        return Ok(());
    }
    let (mut prev, mut cur) = (r0, r1);
    for l in 1..max_ell {
        let l_next = log_t(l + 1);
        let a = T::lit(2.0) * ratio(l_cur, l_next);
        let b = ratio(l_prev, l_next);
        let next = apply_g(&cur) * cr(a) - &prev * cr(b);
        let state = StateRegister::new(next, anc)?;
        if !visit(l + 1, &state) {
            return Ok(());
        }
        prev = cur;
        cur = state.into_amplitudes();
        l_prev = l_cur;
        l_cur = l_next;
    }
    Ok(())
}
