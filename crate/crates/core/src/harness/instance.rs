//! Random instances: a tridiagonal graph-Laplacian-like matrix rescaled so its
//! spectrum is exactly `[1/κ, 1]`, and a right-hand side uniform on the unit
//! sphere.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, DenseOperator, StateRegister};
use crate::qlsp::{extend_general, Form, QlspInstance};
use crate::scalar::cr;

/// Added to the two corner diagonal entries to make `B` positive definite.
pub const CORNER_BUMP: f64 = 1e-3;

/// Which right-hand sides to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    /// Uniform on the unit sphere.
    Uniform,
    /// Uniform on the unit sphere of the span of eigenvectors with eigenvalue
    /// at least 1/2, so that `‖A⁻¹b‖ ≤ 2`.
    UpperSpectrum,
}

/// Raw instance as generated (before any Hermitian extension).
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub seed: u64,
    pub kappa: f64,
    pub sparsity: usize,
    pub form: Form,
    pub a: DenseOperator<f64>,
    pub b: StateRegister<f64>,
}

impl InstanceRecord {
    pub fn qubits(&self) -> usize {
        self.a.dim().trailing_zeros() as usize
    }

    pub fn instance(&self) -> Result<QlspInstance<f64>> {
        match self.form {
            Form::General => extend_general(&self.a, &self.b, self.kappa, self.sparsity),
            form => QlspInstance::new(self.a.clone(), self.b.clone(), self.kappa, self.sparsity, form),
        }
    }
}

/// Generated instance with `2^n` unknowns, condition number `κ`.
pub fn gen_instance(n: usize, kappa: f64, seed: u64, form: Form) -> Result<QlspInstance<f64>> {
    gen_record(n, kappa, seed, form)?.instance()
}

pub fn gen_record(n: usize, kappa: f64, seed: u64, form: Form) -> Result<InstanceRecord> {
    gen_record_with(n, kappa, seed, form, RhsKind::Uniform)
}

pub fn gen_record_with(n: usize, kappa: f64, seed: u64, form: Form, rhs: RhsKind) -> Result<InstanceRecord> {
    if !(2..=12).contains(&n) {
        return Err(Error::arg(format!("qubit count {n} outside 2..=12")));
    }
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::arg("kappa must exceed 1"));
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let off: Vec<f64> = (0..dim - 1).map(|_| rng.gen_range(-1.0..=0.0)).collect();
    let mut b_mat = DMatrix::<f64>::zeros(dim, dim);
    for (i, &e) in off.iter().enumerate() {
        b_mat[(i, i + 1)] = e;
        b_mat[(i + 1, i)] = e;
        b_mat[(i, i)] -= e;
        b_mat[(i + 1, i + 1)] -= e;
    }
    b_mat[(0, 0)] += CORNER_BUMP;
    b_mat[(dim - 1, dim - 1)] += CORNER_BUMP;
    let b_op = DenseOperator::hermitian(b_mat.map(cr))?;
    let eig = eig_hermitian(&b_op)?;
    let mu_min = eig.eigenvalues[0];
    let mu_max = eig.eigenvalues[dim - 1];
    // affine map of [μ_min, μ_max] onto [1/κ, 1]
    let s = (1.0 - 1.0 / kappa) / (mu_max - mu_min);
    let a_pd = b_op.shift(cr(-mu_min)).scale(s).shift(cr(1.0 / kappa)).into_hermitian()?;

    let gaussian = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> { (0..k).map(|_| rng.sample(StandardNormal)).collect() };
    let b = match rhs {
        RhsKind::Uniform => StateRegister::from_real(&gaussian(&mut rng, dim))?.normalized()?,
        RhsKind::UpperSpectrum => {
            let ea = eig_hermitian(&a_pd)?;
            let cols: Vec<usize> = (0..dim).filter(|&j| ea.eigenvalues[j] >= 0.5).collect();
            let w = gaussian(&mut rng, cols.len());
            let mut v = nalgebra::DVector::zeros(dim);
            for (&j, &wj) in cols.iter().zip(&w) {
                v += ea.eigenvectors.column(j) * cr(wj);
            }
            StateRegister::system(v)?.normalized()?
        }
    };

    let (a, sparsity) = match form {
        Form::PositiveDefinite => (a_pd, 3),
        Form::HermitianIndefinite => {
            let ea = eig_hermitian(&a_pd)?;
            let mut signs: Vec<f64> = (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            // keep both signs and the extremes of the spectrum
            signs[0] = -1.0;
            signs[dim - 1] = 1.0;
            let d = DMatrix::from_fn(dim, dim, |i, j| if i == j { cr(signs[i] * ea.eigenvalues[i]) } else { cr(0.0) });
            let v = &ea.eigenvectors;
            let m = v * d * v.adjoint();
            (DenseOperator::hermitian(m)?, dim)
        }
        Form::General => {
            let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let q = g.qr().q();
            let m = a_pd.matrix() * q.map(cr);
            (DenseOperator::general(m)?, dim)
        }
    };
    Ok(InstanceRecord {
        seed,
        kappa,
        sparsity,
        form,
        a,
        b,
    })
}

/// Random Hermitian `dim × dim` matrix with eigenvalue `0` of multiplicity
/// `multiplicity` and the rest drawn uniformly from `D_gap`, in a Haar-like
/// random eigenbasis.
pub fn planted_hermitian(dim: usize, gap: f64, multiplicity: usize, seed: u64) -> Result<DenseOperator<f64>> {
    if multiplicity == 0 || multiplicity >= dim {
        return Err(Error::arg("multiplicity must lie in 1..dim"));
    }
    if !(gap > 0.0 && gap < 1.0) {
        return Err(Error::arg("gap must lie in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eig = vec![0.0; multiplicity];
    for i in multiplicity..dim {
        let mag = gap + (1.0 - gap) * rng.gen::<f64>();
        // pin both gap edges so the measured gap is exactly `gap`
        let mag = match i - multiplicity {
            0 | 1 => gap,
            _ => mag,
        };
        eig.push(if i % 2 == 0 { mag } else { -mag });
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        crate::scalar::Cplx::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let q = g.qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, eig.iter().map(|&x| cr(x))));
    DenseOperator::hermitian(&q * d * q.adjoint())
}
