//! Bound suites: each check compares a measured value against a bound.

use serde::{Deserialize, Serialize};

use crate::blockenc::{linear_combine, multiply, shift_add_identity, sparsity, verify};
use crate::chebpoly::{decay_bound, filter_eval, minimax_oracle, FilterSpec, ReflectionPolynomial};
use crate::error::{Error, Result};
use crate::filter::{projector_error, FilterSetup, MeasureMode};
use crate::qlsp::{eigenpath_length, eigenpath_length_bound, eigenpath_state, Form};
use crate::scalar::Cplx;
use crate::zeno::{solve_zeno, validate_zeno_bounds, zeno_params, ZenoOptions};

use super::instance::{gen_instance, gen_record, planted_hermitian, InstanceRecord};

pub const MINIMAX_GAPS: [f64; 4] = [0.05, 0.1, 0.2, 0.288_675_134_594_812_9];
pub const MINIMAX_ELLS: [usize; 4] = [8, 16, 32, 64];
const GRID: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Minimax,
    Filter,
    Blockenc,
    Zeno,
    Eigenpath,
    Instance,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Minimax,
        Suite::Filter,
        Suite::Blockenc,
        Suite::Zeno,
        Suite::Eigenpath,
        Suite::Instance,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Suite::Minimax => "minimax",
            Suite::Filter => "filter",
            Suite::Blockenc => "blockenc",
            Suite::Zeno => "zeno",
            Suite::Eigenpath => "eigenpath",
            Suite::Instance => "instance",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.tag() == s)
            .ok_or_else(|| Error::arg(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `"<"` or `">="`.
    pub relation: String,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::make(name, value, "<=", bound, value <= bound)
    }

    fn lt(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::make(name, value, "<", bound, value < bound)
    }

    fn ge(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::make(name, value, ">=", bound, value >= bound)
    }

    fn make(name: impl Into<String>, value: f64, rel: &str, bound: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            relation: rel.into(),
            bound,
            pass: pass && value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub kappa: f64,
    pub qubits: usize,
    pub seed: u64,
    pub eps: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            kappa: 10.0,
            qubits: 4,
            seed: 0,
            eps: 1e-6,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &ValidateOptions) -> Result<ValidationReport> {
    let checks = match suite {
        Suite::Minimax => minimax_checks()?,
        Suite::Filter => filter_checks(opts.seed)?,
        Suite::Blockenc => blockenc_checks(opts)?,
        Suite::Zeno => zeno_checks(opts)?,
        Suite::Eigenpath => eigenpath_checks(opts)?,
        Suite::Instance => {
            return validate_instance(&gen_record(opts.qubits, opts.kappa, opts.seed, Form::PositiveDefinite)?);
        }
    };
    let passed = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { suite, checks, passed })
}

/// Relative tolerance between the declared and the measured condition number.
pub const KAPPA_TOLERANCE: f64 = 0.05;

/// Checks an instance record against its declared parameters.
pub fn validate_instance(rec: &InstanceRecord) -> Result<ValidationReport> {
    let norm = rec.a.spectral_norm();
    let smin = rec.a.min_singular_value();
    let measured = norm / smin;
    let checks = vec![
        Check::le("spectral norm of A", norm, 1.0 + 1e-10),
        Check::le(
            "relative deviation of measured kappa",
            (measured - rec.kappa).abs() / rec.kappa,
            KAPPA_TOLERANCE,
        ),
        Check::le("row sparsity", sparsity(&rec.a) as f64, rec.sparsity as f64),
        Check::le("| |b| - 1 |", (rec.b.norm() - 1.0).abs(), 1e-12),
    ];
    let passed = checks.iter().all(|c| c.pass);
    Ok(ValidationReport {
        suite: Suite::Instance,
        checks,
        passed,
    })
}

/// Largest `|R_ℓ(x; Δ)|` over a uniform grid of `[Δ, 1]` (the filter is even).
pub fn grid_max_filter(ell: usize, gap: f64, points: usize) -> Result<f64> {
    let spec = FilterSpec::filter(ell, gap)?;
    Ok((0..=points)
        .map(|i| gap + (1.0 - gap) * i as f64 / points as f64)
        .map(|x| filter_eval(&spec, x).abs())
        .fold(0.0, f64::max))
}

fn minimax_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &gap in &MINIMAX_GAPS {
        for &ell in &MINIMAX_ELLS {
            out.push(Check::lt(
                format!("grid max |R_{ell}| on D_{gap:.4}"),
                grid_max_filter(ell, gap, GRID)?,
                decay_bound(ell, gap),
            ));
        }
    }
    let oracle = minimax_oracle(1, 0.5, 4096)?;
    out.push(Check::le("minimax value at l=1, gap=0.5 minus 0.6", (oracle.value - 0.6).abs(), 1e-9));
    Ok(out)
}

fn filter_checks(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, &gap) in [0.05, 0.1, 0.2].iter().enumerate() {
        let h = planted_hermitian(64, gap, 1 + i % 2, seed.wrapping_add(i as u64))?;
        let enc = crate::blockenc::encode(h, 1.0, 0)?;
        let setup = FilterSetup::new(&enc, 0.0, None)?;
        for &ell in &MINIMAX_ELLS {
            let bound = setup.bound(ell);
            out.push(Check::le(
                format!("|R_{ell}(H) - P| at gap {gap}"),
                projector_error(&setup, ell)?,
                bound,
            ));
            let poly = ReflectionPolynomial::new(ell, setup.gap)?;
            let theta = std::f64::consts::FRAC_PI_3;
            let phase = Cplx::new(theta.cos(), theta.sin());
            let (mut refl, mut rot) = (0.0f64, 0.0f64);
            for &x in &setup.spectrum.eigenvalues {
                let target = x.abs() <= crate::filter::EIGEN_TOL;
                let s = poly.eval(x);
                refl = refl.max((s - if target { 1.0 } else { -1.0 }).abs());
                let a0 = 0.25 * (1.0 + s).powi(2);
                let a1 = 0.25 * (1.0 - s).powi(2);
                let got = Cplx::new(a0, 0.0) + phase * a1;
                let want = if target { Cplx::new(1.0, 0.0) } else { phase };
                rot = rot.max((got - want).norm());
            }
            out.push(Check::le(format!("|S_{ell}(H) - (2P - I)| at gap {gap}"), refl, 4.0 * bound));
            out.push(Check::le(format!("theta-reflection error l={ell} at gap {gap}"), rot, 8.0 * bound));
        }
    }
    Ok(out)
}

fn blockenc_checks(opts: &ValidateOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let n = opts.qubits.min(2);
    let inst = gen_instance(n, opts.kappa, opts.seed, Form::PositiveDefinite)?;
    let ham = inst.hamiltonians()?;
    let d = inst.sparsity as f64;
    let eq = |name: &str, got: f64, want: f64| Check::le(name, (got - want).abs(), 0.0);
    out.push(eq("H1 alpha - d", ham.h1_enc.alpha(), d));
    out.push(eq("H1 ancilla - (n + 4)", ham.h1_enc.ancilla() as f64, (n + 4) as f64));
    for f in [0.0, 0.3, 1.0] {
        let hf = ham.make_hf(f)?;
        out.push(eq(&format!("H({f}) alpha - (1 - f + f d)"), hf.alpha(), 1.0 - f + f * d));
        out.push(eq(&format!("H({f}) ancilla - (n + 6)"), hf.ancilla() as f64, (n + 6) as f64));
    }
    let a = crate::blockenc::encode_sparse(inst.a.clone())?;
    let shifted = shift_add_identity(&a, Cplx::new(0.25, 0.0));
    let prod = multiply(&a, &shifted)?;
    let comb = linear_combine(&[&a, &shifted], &[0.3, 0.7])?;
    for (name, enc) in [
        ("sparse A", a.clone()),
        ("A + cI", shifted),
        ("product", prod),
        ("linear combination", comb),
        ("H1", ham.h1_enc.clone()),
        ("H(0.5)", ham.make_hf(0.5)?),
    ] {
        let e = enc.with_explicit()?;
        out.push(Check::le(format!("explicit dilation error, {name}"), verify(&e)?, 1e-10));
    }
    Ok(out)
}

fn zeno_checks(opts: &ValidateOptions) -> Result<Vec<Check>> {
    let inst = gen_instance(opts.qubits, opts.kappa, opts.seed, Form::PositiveDefinite)?;
    let params = zeno_params(opts.kappa, opts.eps)?;
    let (report, trace) = solve_zeno(&inst, opts.eps, MeasureMode::Postselect, opts.seed, ZenoOptions::default())?;
    let mut out = vec![Check::ge("final fidelity", report.final_fidelity, 1.0 - opts.eps)];
    out.push(Check::ge("total success probability", trace.total_success, 1.0 / 400.0));
    match validate_zeno_bounds(&trace, &params) {
        Ok(b) => {
            let min = |v: &mut dyn Iterator<Item = f64>| v.fold(f64::INFINITY, f64::min);
            out.push(Check::ge("min path overlap", min(&mut b.steps.iter().map(|s| s.path_overlap)), b.bound_path));
            out.push(Check::ge("min filter overlap", min(&mut b.steps.iter().map(|s| s.filter_overlap)), b.bound_filter));
            out.push(Check::ge("min step overlap", min(&mut b.steps.iter().map(|s| s.step_overlap)), b.bound_step));
        }
        Err(Error::Validation(msg)) => out.push(Check::make(msg, 0.0, ">=", 1.0, false)),
        Err(e) => return Err(e),
    }
    out.push(Check::le("segment length defect", params.segment_defect(), 1e-10));
    Ok(out)
}

fn eigenpath_checks(opts: &ValidateOptions) -> Result<Vec<Check>> {
    let inst = gen_instance(opts.qubits, opts.kappa, opts.seed, Form::PositiveDefinite)?;
    let mut out = vec![Check::le(
        "eigenpath length",
        eigenpath_length(&inst, 256)?,
        eigenpath_length_bound(opts.kappa),
    )];
    let mut worst = f64::NEG_INFINITY;
    for i in 0..=64 {
        let f = i as f64 / 64.0;
        let p = eigenpath_state(&inst, f)?;
        let bound = 2.0 / inst.gap_lower_bound(f)?;
        worst = worst.max(p.derivative_norm / bound);
    }
    out.push(Check::le("max |dx/df| / (2 / gap bound)", worst, 1.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        for suite in [Suite::Minimax, Suite::Blockenc, Suite::Eigenpath, Suite::Instance] {
            let r = run_suite(suite, &ValidateOptions::default()).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn wrong_declared_kappa_fails() {
        let mut rec = gen_record(3, 10.0, 2, Form::PositiveDefinite).unwrap();
        rec.kappa = 20.0;
        assert!(!validate_instance(&rec).unwrap().passed);
    }
}
