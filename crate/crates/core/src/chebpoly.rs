//! Chebyshev machinery for the minimax filter polynomial `R_ℓ(x; Δ)`, the
//! reflection polynomial `S_ℓ(x; δ)`, Chebyshev-basis expansions and an
//! independent discrete minimax oracle.
//!
//! `R_ℓ(x; Δ) = T_ℓ(-1 + 2(x² - Δ²)/(1 - Δ²)) / T_ℓ(-1 - 2Δ²/(1 - Δ²))` is the
//! even polynomial of degree `2ℓ` with `R_ℓ(0) = 1` that is uniformly smallest
//! on `D_Δ = [-1, -Δ] ∪ [Δ, 1]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numerics::{clenshaw_apply, clenshaw_unchecked, DenseOperator, StateRegister};
use crate::scalar::Real;

/// Largest gap for which the exponential decay bound is stated.
pub fn max_bound_gap<T: Real>() -> T {
    T::one() / T::lit(12.0).sqrt()
}

/// `T_ℓ(x)` by the trigonometric/hyperbolic closed forms.
pub fn cheb_eval<T: Real>(ell: usize, x: T) -> T {
    let l = T::from_usize(ell).unwrap();
    if x.abs() <= T::one() {
        (l * x.acos()).cos()
    } else if x > T::one() {
        (l * x.acosh()).cosh()
    } else {
        let v = (l * (-x).acosh()).cosh();
        if ell % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

/// `(sign, ln|T_ℓ(x)|)`, usable when `T_ℓ(x)` itself would overflow.
pub fn cheb_eval_log<T: Real>(ell: usize, x: T) -> (T, T) {
    if x.abs() <= T::one() {
        let v = cheb_eval(ell, x);
        return (v.signum(), v.abs().ln());
    }
    let l = T::from_usize(ell).unwrap();
    let a = l * x.abs().acosh();
    // cosh(a) = e^a (1 + e^{-2a}) / 2
    let log = a + ((T::one() + (-a - a).exp()) * T::lit(0.5)).ln();
    let sign = if x < T::zero() && ell % 2 == 1 {
        -T::one()
    } else {
        T::one()
    };
    (sign, log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FilterKind {
    /// `R_ℓ(x; Δ)`
    Filter,
    /// `S_ℓ(x; δ)`
    Reflection,
}

/// Half-degree `ℓ` (total degree `2ℓ`), gap and kind of a filter polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec<T: Real> {
    pub ell: usize,
    pub gap: T,
    pub kind: FilterKind,
}

impl<T: Real> FilterSpec<T> {
    pub fn new(ell: usize, gap: T, kind: FilterKind) -> Result<Self> {
        if !(gap > T::zero() && gap < T::one()) {
            return Err(Error::arg(format!("gap must lie in (0, 1), got {gap}")));
        }
        Ok(Self { ell, gap, kind })
    }

    pub fn filter(ell: usize, gap: T) -> Result<Self> {
        Self::new(ell, gap, FilterKind::Filter)
    }

    pub fn reflection(ell: usize, gap: T) -> Result<Self> {
        Self::new(ell, gap, FilterKind::Reflection)
    }

    pub fn degree(&self) -> usize {
        2 * self.ell
    }

    /// Gap used in bound formulas, capped at `1/√12`.
    pub fn bound_gap(&self) -> T {
        self.gap.min(max_bound_gap())
    }

    /// `2 e^{-√2 ℓ Δ}` with the capped gap.
    pub fn decay_bound(&self) -> T {
        decay_bound(self.ell, self.gap)
    }

    fn chebyshev_argument(&self, x: T) -> T {
        let d2 = self.gap * self.gap;
        -T::one() + T::lit(2.0) * (x * x - d2) / (T::one() - d2)
    }
}

/// `2 e^{-√2 ℓ Δ}` with `Δ` capped at `1/√12`.
pub fn decay_bound<T: Real>(ell: usize, gap: T) -> T {
    let g = gap.min(max_bound_gap());
    T::lit(2.0) * (-T::lit(2.0).sqrt() * T::from_usize(ell).unwrap() * g).exp()
}

/// Evaluates `R_ℓ(x; Δ)` as a ratio of Chebyshev values, in the log domain
/// whenever either factor leaves `[-1, 1]`.
pub fn filter_eval<T: Real>(spec: &FilterSpec<T>, x: T) -> T {
    let u = spec.chebyshev_argument(x);
    let u0 = spec.chebyshev_argument(T::zero());
    let (sd, ld) = cheb_eval_log(spec.ell, u0);
    if u.abs() <= T::one() {
        cheb_eval(spec.ell, u) * sd * (-ld).exp()
    } else {
        let (sn, ln) = cheb_eval_log(spec.ell, u);
        sn * sd * (ln - ld).exp()
    }
}

/// `S_ℓ(x; δ) = (2R_ℓ(x; δ) - 1) / max_{[-1,1]} |2R_ℓ(y; δ) - 1|` with the
/// normalization computed once at construction.
#[derive(Debug, Clone, Copy)]
pub struct ReflectionPolynomial<T: Real> {
    spec: FilterSpec<T>,
    normalization: T,
    argmax: T,
}

impl<T: Real> ReflectionPolynomial<T> {
    pub fn new(ell: usize, gap: T) -> Result<Self> {
        let spec = FilterSpec::reflection(ell, gap)?;
        let base = FilterSpec::filter(ell, gap)?;
        // |2R - 1| is maximal either at x = 0 (value 1) or at the most negative
        // value of R. R is even, so scan [0, 1].
        let r = |x: T| filter_eval(&base, x);
        let n = 10_000usize;
        let step = T::one() / T::from_usize(n).unwrap();
        let mut best = (T::zero(), r(T::zero()));
        for i in 0..=n {
            let x = step * T::from_usize(i).unwrap();
            let v = r(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        let lo = (best.0 - step).max(T::zero());
        let hi = (best.0 + step).min(T::one());
        let (xm, vm) = golden_min(r, lo, hi, T::lit(1e-12));
        let (xmin, rmin) = if vm < best.1 { (xm, vm) } else { best };
        let candidate = T::one() - T::lit(2.0) * rmin;
        let (normalization, argmax) = if candidate > T::one() {
            (candidate, xmin)
        } else {
            (T::one(), T::zero())
        };
        Ok(Self {
            spec,
            normalization,
            argmax,
        })
    }

    pub fn spec(&self) -> &FilterSpec<T> {
        &self.spec
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    /// Point in `[0, 1]` where `|2R - 1|` attains its maximum.
    pub fn argmax(&self) -> T {
        self.argmax
    }

    pub fn eval(&self, x: T) -> T {
        reflection_eval(self, x)
    }

    pub fn cheb_coeffs(&self) -> ChebSeries<T> {
        let base = FilterSpec::filter(self.spec.ell, self.spec.gap).expect("validated spec");
        let r = filter_cheb_coeffs(&base);
        let two = T::lit(2.0);
        let mut c: Vec<T> = r.coefficients().iter().map(|&c| two * c / self.normalization).collect();
        c[0] = (two * r.coefficients()[0] - T::one()) / self.normalization;
        ChebSeries::with_parity(c, Parity::Even)
    }
}

pub fn reflection_eval<T: Real>(poly: &ReflectionPolynomial<T>, x: T) -> T {
    let base = FilterSpec {
        kind: FilterKind::Filter,
        ..poly.spec
    };
    (T::lit(2.0) * filter_eval(&base, x) - T::one()) / poly.normalization
}

fn golden_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T, tol: T) -> (T, T) {
    let g = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) * T::lit(0.5);
    (x, f(x))
}

/// Smallest `ℓ` with `2 e^{-√2 ℓ gap} ≤ eps`, gap capped at `1/√12`.
/// Returns 0 when `eps ≥ 2` (the bound is vacuous).
pub fn degree_for_accuracy(gap: f64, eps: f64) -> Result<usize> {
    if !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::arg(format!("gap must be positive, got {gap}")));
    }
    if !(eps > 0.0) {
        return Err(Error::arg(format!("accuracy must be positive, got {eps}")));
    }
    if eps >= 2.0 {
        return Ok(0);
    }
    let g = gap.min(max_bound_gap::<f64>());
    Ok(((2.0 / eps).ln() / (std::f64::consts::SQRT_2 * g)).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Coefficients `c_0..c_d` of `Σ c_k T_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries<T: Real> {
    coeffs: Vec<T>,
    parity: Parity,
}

impl<T: Real> ChebSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self {
            coeffs,
            parity: Parity::None,
        }
    }

    /// Zeroes the coefficients of the wrong parity exactly.
    pub fn with_parity(mut coeffs: Vec<T>, parity: Parity) -> Self {
        let skip = match parity {
            Parity::Even => Some(1),
            Parity::Odd => Some(0),
            Parity::None => None,
        };
        if let Some(start) = skip {
            for c in coeffs.iter_mut().skip(start).step_by(2) {
                *c = T::zero();
            }
        }
        Self { coeffs, parity }
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coeffs
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn abs_sum(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, &c| a + c.abs())
    }

    /// Scalar Clenshaw evaluation.
    pub fn eval(&self, x: T) -> T {
        let two_x = x + x;
        let (mut b1, mut b2) = (T::zero(), T::zero());
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + two_x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        match self.coeffs.first() {
            Some(&c0) => c0 + x * b1 - b2,
            None => T::zero(),
        }
    }

    /// `Σ c_k T_k(H) v` via the matrix Clenshaw recurrence.
    pub fn apply(&self, h: &DenseOperator<T>, v: &StateRegister<T>) -> Result<StateRegister<T>> {
        clenshaw_apply(&self.coeffs, h, v)
    }

    /// [`Self::apply`] for an operator whose norm the caller has already
    /// checked.
    pub(crate) fn apply_checked_norm(&self, h: &DenseOperator<T>, v: &StateRegister<T>) -> Result<StateRegister<T>> {
        if v.len() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: v.len(),
            });
        }
        Ok(v.with_amplitudes(clenshaw_unchecked(&self.coeffs, h.matrix(), v.amplitudes())))
    }
}

/// Chebyshev coefficients of the degree-`(n-1)` interpolant of `f` at the `n`
/// Chebyshev points of the first kind, computed with an FFT-based DCT-II.
pub fn chebyshev_coefficients<T: Real>(f: impl Fn(T) -> T, n: usize) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let nt = T::from_usize(n).unwrap();
    let pi = T::pi();
    let values: Vec<T> = (0..n)
        .map(|k| {
            let theta = pi * (T::from_usize(k).unwrap() + T::lit(0.5)) / nt;
            f(theta.cos())
        })
        .collect();
    let mut buf: Vec<Complex<T>> = Vec::with_capacity(2 * n);
    buf.extend(values.iter().map(|&v| Complex::new(v, T::zero())));
    buf.extend(values.iter().rev().map(|&v| Complex::new(v, T::zero())));
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(2 * n).process(&mut buf);
    let mut out: Vec<T> = (0..n)
        .map(|j| {
            let phase = -pi * T::from_usize(j).unwrap() / (T::lit(2.0) * nt);
            let w = Complex::new(phase.cos(), phase.sin());
            (w * buf[j]).re / nt
        })
        .collect();
    out[0] *= T::lit(0.5);
    out
}

/// Exact even Chebyshev expansion of `R_ℓ(x; Δ)` (length `2ℓ + 1`), obtained by
/// interpolation at `2ℓ + 1` Chebyshev nodes.
pub fn filter_cheb_coeffs<T: Real>(spec: &FilterSpec<T>) -> ChebSeries<T> {
    let base = FilterSpec {
        kind: FilterKind::Filter,
        ..*spec
    };
    let c = chebyshev_coefficients(|x| filter_eval(&base, x), 2 * spec.ell + 1);
    ChebSeries::with_parity(c, Parity::Even)
}

/// Result of the discrete minimax oracle.
#[derive(Debug, Clone)]
pub struct MinimaxResult {
    /// Minimax value `t*` on the finest grid.
    pub value: f64,
    pub grid_size: usize,
    pub exchange_iterations: usize,
    /// `t*` for every grid in the refinement sequence.
    pub refinement_trace: Vec<(usize, f64)>,
}

/// Independent oracle for `min_p max_{x ∈ D_Δ} |p(x)|` over even polynomials of
/// degree `2ℓ` with `p(0) = 1`.
///
/// Writes `p(x) = 1 + Σ_{k=1}^{ℓ} a_k x^{2k}` in the monomial basis and runs a
/// discrete single-point Remez exchange on a uniform grid over `[Δ, 1]`
/// (evenness makes the negative half redundant). The grid is doubled until
/// `t*` moves by less than `1e-8`.
pub fn minimax_oracle(ell: usize, gap: f64, grid_size: usize) -> Result<MinimaxResult> {
    if ell == 0 {
        return Err(Error::Minimax("ell must be positive".into()));
    }
    if !(gap > 0.0 && gap < 1.0) {
        return Err(Error::Minimax(format!("gap {gap} outside (0, 1)")));
    }
    if grid_size < 64 * ell {
        return Err(Error::Minimax(format!(
            "grid size {grid_size} below 64*ell = {}",
            64 * ell
        )));
    }
    let mut trace = Vec::new();
    let mut size = grid_size;
    let mut prev: Option<f64> = None;
    let mut iters_total = 0;
    for _ in 0..14 {
        let (t, iters) = discrete_remez(ell, gap, size)?;
        iters_total += iters;
        trace.push((size, t));
        if let Some(p) = prev {
            if (t - p).abs() < 1e-8 {
                return Ok(MinimaxResult {
                    value: t,
                    grid_size: size,
                    exchange_iterations: iters_total,
                    refinement_trace: trace,
                });
            }
        }
        prev = Some(t);
        size *= 2;
    }
    Err(Error::Minimax(format!(
        "grid refinement did not settle: {trace:?}"
    )))
}

fn discrete_remez(ell: usize, gap: f64, size: usize) -> Result<(f64, usize)> {
    let ys: Vec<f64> = (0..size)
        .map(|i| {
            let x = gap + (1.0 - gap) * i as f64 / (size - 1) as f64;
            x * x
        })
        .collect();
    let npts = ell + 1;
    // initial reference: Chebyshev-distributed indices
    let mut refs: Vec<usize> = (0..npts)
        .map(|r| {
            let t = 0.5 - 0.5 * (std::f64::consts::PI * r as f64 / ell as f64).cos();
            ((t * (size - 1) as f64).round() as usize).min(size - 1)
        })
        .collect();
    refs.dedup();
    if refs.len() != npts {
        refs = (0..npts).map(|r| r * (size - 1) / ell).collect();
    }
    let err_at = |a: &[f64], y: f64| -> f64 {
        let mut p = 1.0;
        let mut yk = 1.0;
        for &ak in a {
            yk *= y;
            p += ak * yk;
        }
        p
    };
    let mut trace = Vec::new();
    for iter in 0..10_000 {
        // Σ a_k y_r^k - (-1)^r h = -1
        let m = DMatrix::from_fn(npts, npts, |r, c| {
            if c < ell {
                ys[refs[r]].powi(c as i32 + 1)
            } else if r % 2 == 0 {
                -1.0
            } else {
                1.0
            }
        });
        let rhs = DVector::from_element(npts, -1.0);
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Minimax(format!("singular reference system at iteration {iter}")))?;
        let a: Vec<f64> = sol.iter().take(ell).copied().collect();
        let h = sol[ell].abs();
        let (imax, emax) = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, err_at(&a, y)))
            .fold((0, 0.0f64), |best, (i, e)| if e.abs() > best.1.abs() { (i, e) } else { best });
        trace.push((iter, h, emax.abs()));
        if emax.abs() <= h * (1.0 + 1e-13) + 1e-15 || refs.contains(&imax) {
            return Ok((emax.abs(), iter + 1));
        }
        let sgn = |i: usize| err_at(&a, ys[i]).signum();
        let s = emax.signum();
        let pos = refs.partition_point(|&r| r < imax);
        if pos == 0 {
            if sgn(refs[0]) == s {
                refs[0] = imax;
            } else {
                refs.pop();
                refs.insert(0, imax);
            }
        } else if pos == npts {
            if sgn(refs[npts - 1]) == s {
                refs[npts - 1] = imax;
            } else {
                refs.remove(0);
                refs.push(imax);
            }
        } else if sgn(refs[pos - 1]) == s {
            refs[pos - 1] = imax;
        } else {
            refs[pos] = imax;
        }
    }
    Err(Error::Minimax(format!(
        "exchange did not converge; last iterations {:?}",
        &trace[trace.len().saturating_sub(5)..]
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_endpoint_and_t2() {
        for l in 0..40 {
            assert!((cheb_eval(l, 1.0f64) - 1.0).abs() < 1e-12);
        }
        assert!((cheb_eval(2, 0.5f64) + 0.5).abs() < 1e-15);
        assert!((cheb_eval(3, -2.0f64) - (4.0 * -8.0 + 6.0)).abs() < 1e-9);
    }

    #[test]
    fn chebyshev_growth_bound() {
        let dmax = 3.0 - 2.0 * 2f64.sqrt();
        for l in [1usize, 2, 5, 16, 64, 128] {
            for k in 1..=20 {
                let d = dmax * k as f64 / 20.0;
                assert!(cheb_eval(l, 1.0 + d) >= 0.5 * (l as f64 * d.sqrt()).exp());
            }
        }
    }

    #[test]
    fn filter_is_one_at_zero() {
        for l in [1usize, 7, 64, 1000] {
            for g in [0.01, 0.1, 0.5] {
                let s = FilterSpec::filter(l, g).unwrap();
                assert!((filter_eval(&s, 0.0f64) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn filter_ell_one_closed_form() {
        let s = FilterSpec::filter(1, 0.5).unwrap();
        for i in 0..=100 {
            let x = -1.0 + 0.02 * i as f64;
            let closed = (1.0 + 0.25 - 2.0 * x * x) / 1.25;
            assert!((filter_eval(&s, x) - closed).abs() < 1e-14);
        }
        assert!((filter_eval(&s, 1.0f64).abs() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn filter_large_ell_no_overflow() {
        let s = FilterSpec::filter(20_000, 0.2).unwrap();
        assert_eq!(filter_eval(&s, 0.5f64).is_finite(), true);
        assert!(filter_eval(&s, 0.5f64).abs() < 1e-300);
        assert!((filter_eval(&s, 0.0f64) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_selection() {
        assert_eq!(degree_for_accuracy(0.1, 1e-3).unwrap(), 54);
        assert_eq!(degree_for_accuracy(0.1, 2.0).unwrap(), 0);
        assert!(degree_for_accuracy(0.0, 0.1).is_err());
    }

    #[test]
    fn ell_one_coefficients() {
        let s = FilterSpec::filter(1, 0.5).unwrap();
        let c = filter_cheb_coeffs::<f64>(&s);
        assert_eq!(c.coefficients().len(), 3);
        assert!((c.coefficients()[0] - 0.2).abs() < 1e-14);
        assert_eq!(c.coefficients()[1], 0.0);
        assert!((c.coefficients()[2] + 0.8).abs() < 1e-14);
    }

    #[test]
    fn oracle_ell_one() {
        let r = minimax_oracle(1, 0.5, 64).unwrap();
        assert!((r.value - 0.6).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn oracle_rejects_small_grid() {
        assert!(minimax_oracle(3, 0.2, 100).is_err());
    }

    #[test]
    fn reflection_normalization_attained() {
        let p = ReflectionPolynomial::new(8, 0.2f64).unwrap();
        assert!(p.normalization() >= 1.0);
        assert!((p.eval(p.argmax()).abs() - 1.0).abs() < 1e-9);
    }
}
