//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails. Reference values are recomputed here from closed
//! forms and direct dense linear algebra, independently of the library paths.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use eigenfilter::aqc::{evolve, AqcConfig};
use eigenfilter::blockenc::{encode, encode_sparse, linear_combine, multiply, shift_add_identity, BlockEncoding};
use eigenfilter::chebpoly::minimax_oracle;
use eigenfilter::filter::{apply_filter, reflection_apply, theta_reflection_apply, FilterSetup};
use eigenfilter::harness::experiments::{
    experiment_ell_vs_kappa, experiment_fidelity_vs_ell, experiment_kappa_scaling, ExperimentResult, Method,
    ScalingConfig, SweepConfig,
};
use eigenfilter::harness::io::{instance_to_string, to_json};
use eigenfilter::harness::validate::grid_max_filter;
use eigenfilter::harness::{gen_instance, gen_record, gen_record_with, RhsKind};
use eigenfilter::numerics::{DenseOperator, StateRegister};
use eigenfilter::qlsp::{eigenpath_length, eigenpath_length_bound, eigenpath_state, Form, QlspInstance};
use eigenfilter::zeno::{solve_zeno, validate_zeno_bounds, zeno_params, ZenoOptions};
use eigenfilter::MeasureMode;

type Mat = DMatrix<C>;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------- oracles

/// `ln cosh(a)` without overflow.
fn ln_cosh(a: f64) -> f64 {
    a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// `R_ℓ(x; Δ) = T_ℓ(u(x)) / T_ℓ(u(0))` from the trigonometric and hyperbolic
/// closed forms of `T_ℓ`.
fn r_oracle(ell: usize, gap: f64, x: f64) -> f64 {
    let u = |y: f64| -1.0 + 2.0 * (y * y - gap * gap) / (1.0 - gap * gap);
    let l = ell as f64;
    let u0 = u(0.0);
    let a0 = l * (-u0).acosh();
    let s0 = if ell % 2 == 0 { 1.0 } else { -1.0 };
    let ux = u(x);
    if ux.abs() <= 1.0 {
        s0 * (l * ux.acos()).cos() * (-ln_cosh(a0)).exp()
    } else {
        let sx = if ux < 0.0 && ell % 2 == 1 { -1.0 } else { 1.0 };
        sx * s0 * (ln_cosh(l * ux.abs().acosh()) - ln_cosh(a0)).exp()
    }
}

fn bound(ell: usize, gap: f64) -> f64 {
    2.0 * (-(2.0f64).sqrt() * ell as f64 * gap.min(1.0 / 12f64.sqrt())).exp()
}

fn oracle_grid_max(ell: usize, gap: f64, points: usize) -> f64 {
    (0..=points)
        .map(|i| gap + (1.0 - gap) * i as f64 / points as f64)
        .flat_map(|x| [r_oracle(ell, gap, x).abs(), r_oracle(ell, gap, -x).abs()])
        .fold(0.0, f64::max)
}

fn spectral_norm(m: &Mat) -> f64 {
    m.clone().singular_values().max()
}

fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> Mat {
    let g = Mat::from_fn(dim, dim, |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}

/// Hermitian matrix with eigenvalue `λ` of multiplicity `mult`, the rest in
/// `[-1, 1]` at distance at least `gap` from `λ`, two of them exactly at the
/// gap edges. Returns the matrix and the spectral projector onto `λ`.
fn planted(dim: usize, lambda: f64, gap: f64, mult: usize, seed: u64) -> (Mat, Mat) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eig = vec![lambda; mult];
    let edges = [lambda - gap, lambda + gap].into_iter().filter(|x| x.abs() <= 1.0);
    eig.extend(edges);
    while eig.len() < dim {
        let x: f64 = rng.gen_range(-1.0..=1.0);
        if (x - lambda).abs() >= gap {
            eig.push(x);
        }
    }
    let q = haar_unitary(dim, &mut rng);
    let d = Mat::from_diagonal(&DVector::from_iterator(dim, eig.iter().map(|&x| C::new(x, 0.0))));
    let h = &q * d * q.adjoint();
    let h = (&h + h.adjoint()) * C::new(0.5, 0.0);
    let qt = q.columns(0, mult).into_owned();
    (h, &qt * qt.adjoint())
}

/// Matrix of a linear map given by its action on basis vectors.
fn matrix_of(dim: usize, mut col: impl FnMut(&StateRegister<f64>) -> DVector<C>) -> Mat {
    let mut m = Mat::zeros(dim, dim);
    for j in 0..dim {
        let e = StateRegister::basis(dim, j).unwrap();
        m.set_column(j, &col(&e));
    }
    m
}

fn unnormalized(o: eigenfilter::filter::MeasurementOutcome<f64>) -> DVector<C> {
    o.post_state.amplitudes() * C::new(o.success_probability.sqrt(), 0.0)
}

/// `η(ℓ) = |⟨t|R_ℓ(H/α)ψ⟩| / ‖R_ℓ(H/α)ψ‖` through a dense eigendecomposition.
struct FilterOracle {
    eigenvalues: DVector<f64>,
    coords: DVector<C>,
    target_coords: DVector<C>,
}

impl FilterOracle {
    fn new(h: &Mat, alpha: f64, psi: &DVector<C>, target: &DVector<C>) -> Self {
        let e = h.clone().symmetric_eigen();
        let v = &e.eigenvectors;
        Self {
            eigenvalues: e.eigenvalues.map(|x| x / alpha),
            coords: v.adjoint() * psi,
            target_coords: v.adjoint() * target,
        }
    }

    fn eta(&self, ell: usize, gap: f64) -> f64 {
        let f: DVector<C> = DVector::from_iterator(
            self.coords.len(),
            self.eigenvalues
                .iter()
                .zip(self.coords.iter())
                .map(|(&x, &c)| c * r_oracle(ell, gap, x)),
        );
        self.target_coords.dotc(&f).norm() / f.norm()
    }
}

fn cplx(op: &DenseOperator<f64>) -> Mat {
    op.matrix().clone()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------- criteria

const GAPS: [f64; 4] = [0.05, 0.1, 0.2, 0.288_675_134_594_812_9];
const ELLS: [usize; 4] = [8, 16, 32, 64];

fn minimax_bound() -> Outcome {
    let start = Instant::now();
    let mut worst_ratio: f64 = 0.0;
    let mut all_strict = true;
    let mut lib = Vec::new();
    for &gap in &GAPS {
        for &ell in &ELLS {
            let m = grid_max_filter(ell, gap, 20_000).unwrap();
            lib.push((gap, ell, m));
        }
    }
    let elapsed = start.elapsed();
    let mut max_disagree: f64 = 0.0;
    for &(gap, ell, m) in &lib {
        let o = oracle_grid_max(ell, gap, 20_000);
        max_disagree = max_disagree.max((m - o).abs() / o.max(1e-300));
        let b = bound(ell, gap);
        all_strict &= m < b && o < b;
        worst_ratio = worst_ratio.max(m.max(o) / b);
    }
    let pass = all_strict && elapsed < Duration::from_secs(5) && max_disagree < 1e-9;
    Outcome::new(
        pass,
        format!(
            "16 (gap, l) pairs, max grid-max/bound {worst_ratio:.4} (< 1 strict), library vs closed form rel diff {max_disagree:.1e}, {:.2} s (< 5 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn minimax_optimality() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for gap in [0.2, 0.5] {
        for ell in 1..=4 {
            let t = minimax_oracle(ell, gap, 4096).unwrap().value;
            let g = oracle_grid_max(ell, gap, 400_000);
            worst = worst.max((t - g).abs());
            rows.push(format!("l={ell},gap={gap}:{t:.6}"));
        }
    }
    let t1 = minimax_oracle(1, 0.5, 4096).unwrap().value;
    let r1 = oracle_grid_max(1, 0.5, 400_000);
    let closed = (t1 - 0.6).abs().max((r1 - 0.6).abs());
    Outcome::new(
        worst <= 1e-6 && closed <= 1e-9,
        format!(
            "max |t* - grid max| {worst:.2e} (<= 1e-6); l=1, gap=0.5 deviation from 0.6 {closed:.2e} (<= 1e-9); {}",
            rows.join(" ")
        ),
    )
}

fn filter_accuracy() -> Outcome {
    let dim = 64;
    let theta = std::f64::consts::FRAC_PI_3;
    let phase = C::new(theta.cos(), theta.sin());
    let (mut r_ratio, mut s_ratio, mut t_ratio) = (0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for (ci, &lambda) in [0.0, 0.3].iter().enumerate() {
        for (gi, &gap) in GAPS.iter().enumerate() {
            let seed = 100 + 10 * ci as u64 + gi as u64;
            let (h, p) = planted(dim, lambda, gap, 1 + gi % 2, seed);
            let enc = encode(DenseOperator::hermitian(h).unwrap(), 1.0, 0).unwrap();
            let setup = FilterSetup::new(&enc, lambda, None).unwrap();
            let gap_t = gap / (1.0 + lambda.abs());
            let id = Mat::identity(dim, dim);
            let refl_target = &p * C::new(2.0, 0.0) - &id;
            let rot_target = &p + (&id - &p) * phase;
            for &ell in &ELLS {
                let b = bound(ell, gap_t);
                let r = matrix_of(dim, |e| {
                    unnormalized(apply_filter(&setup, ell, e, MeasureMode::Postselect, None).unwrap())
                });
                let s = matrix_of(dim, |e| {
                    unnormalized(reflection_apply(&setup, ell, e, MeasureMode::Postselect, None).unwrap())
                });
                let t = matrix_of(dim, |e| {
                    unnormalized(theta_reflection_apply(&setup, ell, theta, e, MeasureMode::Postselect, None).unwrap())
                });
                r_ratio = r_ratio.max(spectral_norm(&(r - &p)) / b);
                s_ratio = s_ratio.max(spectral_norm(&(s - &refl_target)) / (4.0 * b));
                t_ratio = t_ratio.max(spectral_norm(&(t - &rot_target)) / (8.0 * b));
                cases += 1;
            }
        }
    }
    Outcome::new(
        r_ratio <= 1.0 && s_ratio <= 1.0 && t_ratio <= 1.0,
        format!(
            "{cases} (lambda, gap, l) cases on 64x64: max |R-P|/bound {r_ratio:.3}, |S-(2P-I)|/(4 bound) {s_ratio:.3}, |theta-refl - oracle|/(8 bound) {t_ratio:.3} (all <= 1)"
        ),
    )
}

fn block_check(enc: &BlockEncoding<f64>, expected: &Mat) -> (f64, f64) {
    let e = enc.clone().with_explicit().unwrap();
    let u = cplx(e.explicit_unitary().unwrap());
    let dim = expected.nrows();
    let block = u.view((0, 0), (dim, dim)).into_owned();
    let payload_err = (block - expected * C::new(1.0 / enc.alpha(), 0.0)).map(|z| z.norm()).max();
    // U†U = I probed on random vectors; the dense product is too large here
    let mut rng = ChaCha8Rng::seed_from_u64(u.nrows() as u64);
    let mut unitary_err: f64 = 0.0;
    for _ in 0..4 {
        let v = DVector::from_fn(u.nrows(), |_, _| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let v = &v / C::new(v.norm(), 0.0);
        let back = u.ad_mul(&(&u * &v));
        unitary_err = unitary_err.max((back - &v).norm());
    }
    (payload_err, unitary_err)
}

fn block_encodings() -> Outcome {
    let mut worst_payload: f64 = 0.0;
    let mut worst_unitary: f64 = 0.0;
    let mut bookkeeping_ok = true;
    let mut count = 0;
    for n in [2usize, 3] {
        let inst = gen_instance(n, 10.0, 3, Form::PositiveDefinite).unwrap();
        let dim = 1 << n;
        let a = cplx(&inst.a);
        let b = inst.b.amplitudes().clone();
        let d = inst.sparsity as f64;
        let qb = Mat::identity(dim, dim) - &b * b.adjoint();
        let mut h1 = Mat::zeros(2 * dim, 2 * dim);
        h1.view_mut((0, dim), (dim, dim)).copy_from(&(&a * &qb));
        h1.view_mut((dim, 0), (dim, dim)).copy_from(&(&qb * &a));
        let mut h0 = Mat::zeros(2 * dim, 2 * dim);
        h0.view_mut((0, dim), (dim, dim)).copy_from(&qb);
        h0.view_mut((dim, 0), (dim, dim)).copy_from(&qb);

        let ham = inst.hamiltonians().unwrap();
        bookkeeping_ok &= ham.h1_enc.alpha() == d && ham.h1_enc.ancilla() == n + 4;
        let mut cases: Vec<(BlockEncoding<f64>, Mat)> = vec![(ham.h1_enc.clone(), h1.clone())];
        for f in [0.0, 0.25, 0.5, 1.0] {
            let hf = ham.make_hf(f).unwrap();
            bookkeeping_ok &= hf.alpha() == (1.0 - f) + f * d && hf.ancilla() == n + 6;
            // at n = 3 the padded H(f) unitary is 8192-dimensional; dilate at n = 2 only
            if n == 2 && (f == 0.25 || f == 0.5) {
                let want = &h0 * C::new(1.0 - f, 0.0) + &h1 * C::new(f, 0.0);
                cases.push((hf, want));
            }
        }
        if n == 2 {
            let c = 0.25;
            let sa = encode_sparse(inst.a.clone()).unwrap();
            let shifted = shift_add_identity(&sa, C::new(c, 0.0));
            let a_shift = &a + Mat::identity(dim, dim) * C::new(c, 0.0);
            cases.push((multiply(&sa, &shifted).unwrap(), &a * &a_shift));
            cases.push((
                linear_combine(&[&sa, &shifted], &[0.3, 0.7]).unwrap(),
                &a * C::new(0.3, 0.0) + &a_shift * C::new(0.7, 0.0),
            ));
            cases.push((shifted, a_shift));
            cases.push((sa, a.clone()));
        }
        for (enc, want) in &cases {
            let (p, u) = block_check(enc, want);
            worst_payload = worst_payload.max(p);
            worst_unitary = worst_unitary.max(u);
            count += 1;
        }
    }
    Outcome::new(
        worst_payload <= 1e-10 && worst_unitary <= 1e-10 && bookkeeping_ok,
        format!(
            "{count} dilations (payload dims 4..16): max |block - payload/alpha| {worst_payload:.1e}, max |U^H U - I| {worst_unitary:.1e} (<= 1e-10); (alpha, m) = (d, n+4) and (1-f+fd, n+6) exact: {bookkeeping_ok}"
        ),
    )
}

/// AQC start state and filter oracle on `H₁` for one (κ, seed) cell.
fn cell_oracle(kappa: f64, seed: u64) -> (FilterOracle, f64) {
    let inst = gen_record_with(6, kappa, seed, Form::PositiveDefinite, RhsKind::Uniform)
        .unwrap()
        .instance()
        .unwrap();
    let ham = inst.hamiltonians().unwrap();
    let cfg = AqcConfig::for_kappa(kappa, 0.2, 1.5).unwrap();
    let start = evolve(&inst, &ham, &cfg, false).unwrap().state;
    let d = inst.sparsity as f64;
    // target |0, x⟩ from a direct dense solve
    let a = cplx(&inst.a);
    let x = a.lu().solve(inst.b.amplitudes()).unwrap();
    let x = &x / C::new(x.norm(), 0.0);
    let mut target = DVector::zeros(2 * x.len());
    target.rows_mut(0, x.len()).copy_from(&x);
    let oracle = FilterOracle::new(&cplx(&ham.h1), d, start.amplitudes(), &target);
    (oracle, (1.0 / kappa) / d)
}

fn fidelity_vs_degree() -> Outcome {
    let start = Instant::now();
    let kappas = [10.0, 50.0, 100.0];
    let grid: Vec<usize> = (0..=6000).step_by(10).collect();
    let seeds: Vec<u64> = (0..20).collect();
    let res = experiment_fidelity_vs_ell(&SweepConfig::default(), &kappas, &grid, &seeds).unwrap();
    let elapsed = start.elapsed();

    let initial: Vec<f64> = kappas
        .iter()
        .map(|k| res.summaries[&format!("initial_fidelity/kappa={k}")])
        .collect();
    let grand = mean(&initial);
    let fits: Vec<(f64, f64, usize)> = kappas
        .iter()
        .map(|k| {
            let f = res.fits[&format!("log_infidelity_vs_ell/kappa={k}")];
            (*k, f.r2, f.n)
        })
        .collect();
    let r2_ok = fits.iter().all(|f| f.1 >= 0.95);

    let mut max_dev: f64 = 0.0;
    for &(kappa, seed) in &[(10.0, 0u64), (100.0, 7)] {
        let (oracle, gap) = cell_oracle(kappa, seed);
        for row in res.fidelity_table.iter().filter(|r| r.kappa == kappa && r.seed == seed && r.ell % 1000 == 0) {
            max_dev = max_dev.max((oracle.eta(row.ell, gap) - row.eta).abs());
        }
    }

    let init_ok = (grand - 0.6).abs() <= 0.15;
    let pass = init_ok && r2_ok && elapsed < Duration::from_secs(600) && max_dev <= 1e-8;
    let per_kappa: Vec<String> = kappas.iter().zip(&initial).map(|(k, v)| format!("{k}:{v:.3}")).collect();
    let fit_str: Vec<String> = fits.iter().map(|(k, r2, n)| format!("{k}:R2={r2:.4}/{n}pts")).collect();
    Outcome::new(
        pass,
        format!(
            "mean initial fidelity {grand:.3} (0.6 +- 0.15) per kappa [{}]; log(1-eta) fits [{}] (R2 >= 0.95); eta vs eigen oracle max dev {max_dev:.1e}; {:.0} s (< 600 s)",
            per_kappa.join(" "),
            fit_str.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn degree_vs_kappa() -> Outcome {
    let start = Instant::now();
    let kappas = [10.0, 20.0, 40.0, 80.0];
    let seeds: Vec<u64> = (0..20).collect();
    let res = experiment_ell_vs_kappa(&SweepConfig::default(), &[0.99], &kappas, &seeds).unwrap();
    let elapsed = start.elapsed();
    let fit = res.fits["ell_star_vs_kappa/eta=0.99"];
    let means: Vec<String> = kappas
        .iter()
        .map(|k| format!("{k}:{:.1}", res.summaries[&format!("mean_ell_star/eta=0.99/kappa={k}")]))
        .collect();

    // ℓ* is the first crossing of the oracle fidelity curve
    let (oracle, gap) = cell_oracle(10.0, 0);
    let row = res
        .ell_star_table
        .iter()
        .find(|r| r.kappa == 10.0 && r.seed == 0)
        .unwrap();
    let crossing_ok = oracle.eta(row.ell_star, gap) >= 0.99 && (row.ell_star == 0 || oracle.eta(row.ell_star - 1, gap) < 0.99);

    Outcome::new(
        fit.r2 >= 0.95 && fit.slope > 0.0 && crossing_ok,
        format!(
            "mean l*(eta=0.99) [{}]; slope {:.3} (> 0), R2 {:.4} (>= 0.95); oracle crossing check {crossing_ok}; {:.0} s",
            means.join(" "),
            fit.slope,
            fit.r2,
            elapsed.as_secs_f64()
        ),
    )
}

fn zeno_solver() -> Outcome {
    let kappa = 10.0;
    let eps = 1e-6;
    let params = zeno_params(kappa, eps).unwrap();
    let m = params.m as f64;
    let eps_p = 1.0 / (162.0 * m * m);
    let b1 = 1.0 - 1.0 / (2.0 * m);
    let b2 = 1.0 - 4.0 * eps_p;
    let b3 = (1.0 - 1.0 / (2.0 * m) - 4.0 * eps_p - 2.0 * (2.0 * eps_p).sqrt()).max(0.5);
    let mut min_fid: f64 = 1.0;
    let mut min_margin = f64::INFINITY;
    let mut bounds_ok = (params.eps_p - eps_p).abs() <= 1e-18;
    let mut fid_dev: f64 = 0.0;
    for seed in 0..20u64 {
        let inst = gen_instance(4, kappa, seed, Form::PositiveDefinite).unwrap();
        let (rep, trace) = solve_zeno(&inst, eps, MeasureMode::Postselect, seed, ZenoOptions::default()).unwrap();
        min_fid = min_fid.min(rep.final_fidelity);
        for j in 0..params.m {
            let margins = [
                trace.path_overlap[j] - b1,
                trace.filter_overlap[j] - b2,
                trace.per_step_overlap[j] - b3,
            ];
            min_margin = min_margin.min(margins.iter().copied().fold(f64::INFINITY, f64::min));
        }
        bounds_ok &= validate_zeno_bounds(&trace, &params).is_ok();
        let x = cplx(&inst.a).lu().solve(inst.b.amplitudes()).unwrap();
        let x = &x / C::new(x.norm(), 0.0);
        // the library's reference solution against a direct dense solve
        let lib = inst.solution().unwrap();
        fid_dev = fid_dev.max(1.0 - lib.amplitudes().dotc(&x).norm());
    }
    bounds_ok &= min_margin >= 0.0;

    let inst = gen_instance(4, kappa, 0, Form::PositiveDefinite).unwrap();
    let runs = 200u64;
    let mut attempts = 0u64;
    for s in 0..runs {
        let (rep, _) = solve_zeno(&inst, eps, MeasureMode::Sample, 1000 + s, ZenoOptions::default()).unwrap();
        attempts += rep.attempts;
    }
    let rate = runs as f64 / attempts as f64;
    let pass = min_fid >= 1.0 - eps && rate >= 1.0 / 400.0 && bounds_ok && fid_dev <= 1e-12;
    Outcome::new(
        pass,
        format!(
            "M={}, min final fidelity over 20 seeds 1-{:.1e} (>= 1-1e-6); empirical success rate {rate:.4} = {runs}/{attempts} attempts (>= 1/400); overlap bounds (i)-(iii) at every step: {bounds_ok} (min margin {min_margin:.2e}); reference solution vs dense solve 1-{fid_dev:.1e}",
            params.m,
            1.0 - min_fid
        ),
    )
}

/// `‖∂_f x(f)‖` for `x ∝ ((1-f)I + fA)⁻¹b` from the exact derivative.
fn path_derivative(a: &Mat, b: &DVector<C>, f: f64) -> f64 {
    let dim = a.nrows();
    let id = Mat::identity(dim, dim);
    let m = &id * C::new(1.0 - f, 0.0) + a * C::new(f, 0.0);
    let lu = m.lu();
    let y = lu.solve(b).unwrap();
    let dy = -lu.solve(&((a - &id) * &y)).unwrap();
    let ny = y.norm();
    let x = &y / C::new(ny, 0.0);
    let dx = (&dy - &x * x.dotc(&dy)) / C::new(ny, 0.0);
    dx.norm()
}

fn l_star(kappa: f64, a: f64, b: f64) -> f64 {
    let c = 1.0 - 1.0 / kappa;
    2.0 / c * ((1.0 - c * a) / (1.0 - c * b)).ln()
}

fn eigenpath() -> Outcome {
    let mut length_ratio: f64 = 0.0;
    let mut deriv_ratio: f64 = 0.0;
    let mut fd_dev: f64 = 0.0;
    let mut seg_dev: f64 = 0.0;
    for kappa in [10.0, 100.0] {
        for seed in 0..3u64 {
            let inst: QlspInstance<f64> = gen_instance(4, kappa, seed, Form::PositiveDefinite).unwrap();
            length_ratio = length_ratio.max(eigenpath_length(&inst, 512).unwrap() / eigenpath_length_bound(kappa));
            let a = cplx(&inst.a);
            let b = inst.b.amplitudes().clone();
            for i in 0..=128 {
                let f = i as f64 / 128.0;
                let exact = path_derivative(&a, &b, f);
                let lib = eigenpath_state(&inst, f).unwrap().derivative_norm;
                let gap = 1.0 - f + f / kappa;
                deriv_ratio = deriv_ratio.max(exact.max(lib) / (2.0 / gap));
                fd_dev = fd_dev.max((exact - lib).abs() / exact.max(1e-12));
            }
        }
        for eps in [1e-2, 1e-6] {
            let p = zeno_params(kappa, eps).unwrap();
            let each = l_star(kappa, 0.0, 1.0) / p.m as f64;
            seg_dev = seg_dev.max((p.f_grid[0] - 0.0).abs()).max((p.f_grid[p.m] - 1.0).abs());
            for w in p.f_grid.windows(2) {
                seg_dev = seg_dev.max((l_star(kappa, w[0], w[1]) - each).abs());
            }
        }
    }
    Outcome::new(
        length_ratio <= 1.0 && deriv_ratio <= 1.0 && seg_dev <= 1e-10 && fd_dev <= 1e-6,
        format!(
            "kappa in {{10, 100}}: max L/bound {length_ratio:.3}, max |dx/df|/(2/gap*) {deriv_ratio:.3} (<= 1), derivative vs analytic rel dev {fd_dev:.1e}; equal-L* grid deviation {seg_dev:.1e} (<= 1e-10)"
        ),
    )
}

fn scaling() -> Outcome {
    let start = Instant::now();
    let kappas = [4.0, 8.0, 16.0, 32.0, 64.0];
    let seeds: Vec<u64> = (0..5).collect();
    let res = experiment_kappa_scaling(&ScalingConfig::default(), &Method::ALL, &kappas, &seeds).unwrap();
    let elapsed = start.elapsed();
    let slope = |m: Method| res.fits[&format!("loglog_queries_vs_kappa/{}", m.tag())];
    let ledger_slope = |m: Method| {
        let (lx, ly): (Vec<f64>, Vec<f64>) = kappas
            .iter()
            .map(|&k| {
                let v: Vec<f64> = res
                    .scaling_table
                    .iter()
                    .filter(|r| r.method == m.tag() && r.kappa == k)
                    .map(|r| r.ledger_queries as f64)
                    .collect();
                (k.ln(), mean(&v).ln())
            })
            .unzip();
        eigenfilter::harness::experiments::linear_fit(&lx, &ly).unwrap().slope
    };
    // degree/√p, the count amplitude amplification would give (not run)
    let amplified = {
        let (lx, ly): (Vec<f64>, Vec<f64>) = kappas
            .iter()
            .map(|&k| {
                let v: Vec<f64> = res
                    .scaling_table
                    .iter()
                    .filter(|r| r.method == Method::QspDirect.tag() && r.kappa == k)
                    .map(|r| (r.ledger_queries as f64 * r.expected_queries).sqrt())
                    .collect();
                (k.ln(), mean(&v).ln())
            })
            .unzip();
        eigenfilter::harness::experiments::linear_fit(&lx, &ly).unwrap().slope
    };
    let q = slope(Method::QspDirect);
    let z = slope(Method::Zeno);
    let a = slope(Method::Aqc);
    let pass = (q.slope - 2.0).abs() <= 0.2
        && (z.slope - 1.0).abs() <= 0.2
        && (a.slope - 1.0).abs() <= 0.2
        && elapsed < Duration::from_secs(900);
    Outcome::new(
        pass,
        format!(
            "expected-query log-log slopes: qsp-direct {:.3} (2.0 +- 0.2), zeno {:.3} (1.0 +- 0.2), aqc {:.3} (1.0 +- 0.2); R2 {:.4}/{:.4}/{:.4}; single-run ledger slopes {:.3}/{:.3}/{:.3}; qsp-direct degree/sqrt(p) slope {amplified:.3} (formula-derived); {:.0} s (< 900 s)",
            q.slope,
            z.slope,
            a.slope,
            q.r2,
            z.r2,
            a.r2,
            ledger_slope(Method::QspDirect),
            ledger_slope(Method::Zeno),
            ledger_slope(Method::Aqc),
            elapsed.as_secs_f64()
        ),
    )
}

fn determinism() -> Outcome {
    let outputs = |seed: u64| -> Vec<String> {
        let rec = gen_record(3, 12.0, seed, Form::PositiveDefinite).unwrap();
        let inst = rec.instance().unwrap();
        let (zeno, _) = solve_zeno(&inst, 1e-3, MeasureMode::Sample, seed, ZenoOptions::default()).unwrap();
        let sweep = SweepConfig {
            qubits: 3,
            ..SweepConfig::default()
        };
        let fid: ExperimentResult = experiment_fidelity_vs_ell(&sweep, &[8.0], &[0, 10, 20], &[seed, seed + 1]).unwrap();
        let cfg = ScalingConfig {
            qubits: 2,
            ..ScalingConfig::default()
        };
        let sc = experiment_kappa_scaling(&cfg, &Method::ALL, &[4.0, 8.0], &[seed]).unwrap();
        vec![
            instance_to_string(&rec).unwrap(),
            to_json(&zeno).unwrap(),
            to_json(&fid).unwrap(),
            fid.primary_csv().unwrap().to_csv(),
            to_json(&sc).unwrap(),
            sc.primary_csv().unwrap().to_csv(),
        ]
    };
    let first = outputs(5);
    let second = outputs(5);
    let other = outputs(6);
    let identical = first == second;
    let seed_sensitive = first[0] != other[0];
    Outcome::new(
        identical && seed_sensitive,
        format!(
            "{} serialized outputs (instance, sampled zeno report, sweep JSON/CSV, scaling JSON/CSV) byte-identical on repeat: {identical}; differ for another seed: {seed_sensitive}",
            first.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("minimax bound", minimax_bound),
        ("minimax optimality", minimax_optimality),
        ("filter accuracy", filter_accuracy),
        ("block-encoding verification", block_encodings),
        ("fidelity vs filter degree", fidelity_vs_degree),
        ("minimal degree vs kappa", degree_vs_kappa),
        ("zeno solver", zeno_solver),
        ("eigenpath bounds", eigenpath),
        ("scaling separation", scaling),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let k = i + 1;
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        println!(
            "criterion {k:>2} {} [{name}] {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
