//! Adiabatic preparation with the AQC(p) schedule and the AQC-seeded
//! eigenstate-filtering solver.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chebpoly::degree_for_accuracy;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, uniform, FilterSetup, MeasureMode};
use crate::harness::report::{FormulaEstimate, SolverParams, SolverReport};
use crate::numerics::{eig_hermitian, StateRegister};
use crate::qlsp::{eigenpath_null_vector, QlspHamiltonians, QlspInstance};
use crate::scalar::Cplx;

/// Attempt cap for sampled runs.
pub const MAX_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// `f(s) = s`
    Vanilla,
    AqcP,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AqcConfig {
    pub t: f64,
    pub p: f64,
    pub steps: usize,
    pub schedule: Schedule,
}

impl AqcConfig {
    pub fn new(t: f64, p: f64, steps: usize, schedule: Schedule) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::arg("evolution time must be non-negative"));
        }
        if schedule == Schedule::AqcP && !(p > 1.0 && p < 2.0) {
            return Err(Error::arg(format!("p must lie in (1, 2), got {p}")));
        }
        let floor = Self::step_floor(t);
        if steps < floor || steps == 0 {
            return Err(Error::arg(format!("{steps} steps is below the floor {floor} = ceil(20 T)")));
        }
        Ok(Self { t, p, steps, schedule })
    }

    /// `T = t_factor · κ` at the step floor.
    pub fn for_kappa(kappa: f64, t_factor: f64, p: f64) -> Result<Self> {
        let t = t_factor * kappa;
        Self::new(t, p, Self::step_floor(t).max(1), Schedule::AqcP)
    }

    pub fn step_floor(t: f64) -> usize {
        (20.0 * t).ceil() as usize
    }

    pub fn f(&self, s: f64, kappa: f64) -> f64 {
        match self.schedule {
            Schedule::Vanilla => s,
            Schedule::AqcP => schedule_p(s, kappa, self.p),
        }
    }
}

/// `f(s) = κ/(κ-1) · [1 - (1 + s(κ^{p-1} - 1))^{1/(1-p)}]`.
pub fn schedule_p(s: f64, kappa: f64, p: f64) -> f64 {
    let inner = 1.0 + s * (kappa.powf(p - 1.0) - 1.0);
    let f = kappa / (kappa - 1.0) * (1.0 - inner.powf(1.0 / (1.0 - p)));
    f.clamp(0.0, 1.0)
}

/// One sampled point of an evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AqcSample {
    pub s: f64,
    /// `|⟨0, x(f(s))|ψ(s)⟩|`
    pub overlap: f64,
    /// `|⟨spurious|ψ(s)⟩|`, zero in exact arithmetic.
    pub leakage: f64,
}

#[derive(Debug, Clone)]
pub struct AqcRun {
    pub state: StateRegister<f64>,
    pub trace: Vec<AqcSample>,
}

/// Midpoint piecewise-constant propagation of `(i/T) ∂_s ψ = H(f(s)) ψ` from
/// the start vector, each step applied exactly through an eigendecomposition.
///
/// With `record`, the instantaneous overlap with the eigenpath is sampled
/// after every step.
pub fn evolve(
    inst: &QlspInstance<f64>,
    ham: &QlspHamiltonians<f64>,
    cfg: &AqcConfig,
    record: bool,
) -> Result<AqcRun> {
    let mut psi = ham.initial.clone();
    let ds = 1.0 / cfg.steps as f64;
    let tau = cfg.t * ds;
    let mut trace = Vec::new();
    if cfg.t == 0.0 {
        return Ok(AqcRun { state: psi, trace });
    }
    for k in 0..cfg.steps {
        let s = (k as f64 + 0.5) * ds;
        let f = cfg.f(s, inst.kappa);
        let h = ham.h0.scale(1.0 - f).add(&ham.h1.scale(f))?;
        let e = eig_hermitian(&h)?;
        psi = e.apply_complex(|l| Cplx::new((-tau * l).cos(), (-tau * l).sin()), &psi)?;
        if record {
            let s_end = (k + 1) as f64 * ds;
            let target = eigenpath_null_vector(inst, ham, cfg.f(s_end, inst.kappa))?;
            trace.push(AqcSample {
                s: s_end,
                overlap: target.fidelity(&psi),
                leakage: ham.spurious.fidelity(&psi),
            });
        }
    }
    Ok(AqcRun { state: psi, trace })
}

/// Evolves, filters with `R_ℓ(H₁/d; Δ*(1)/d)` and measures the first qubit.
///
/// The filter accuracy is `eps · γ₀` with `γ₀` the overlap of the evolved
/// state with the solution vector.
pub fn solve_aqc_filtered(
    inst: &QlspInstance<f64>,
    eps: f64,
    cfg: &AqcConfig,
    mode: MeasureMode,
    seed: u64,
) -> Result<SolverReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg("eps must lie in (0, 1)"));
    }
    let ham = inst.hamiltonians()?;
    let run = evolve(inst, &ham, cfg, false)?;
    let gamma0 = ham.target.fidelity(&run.state);
    let setup = FilterSetup::new(&ham.h1_enc, 0.0, Some(ham.gap_lower_bound(1.0)?))?;
    let ell = degree_for_accuracy(setup.gap, eps * gamma0)?.max(1);
    let filtered = apply_filter(&setup, ell, &run.state, MeasureMode::Postselect, None)?;
    let p_filter = filtered.success_probability;
    let first = ham.first_qubit_zero(&filtered.post_state)?;
    let p_first = first.norm_squared();
    let x = first.normalized()?;
    let target = ham.first_qubit_zero(&ham.target)?;
    let final_fidelity = x.fidelity(&target).min(1.0);
    let p_total = p_filter * p_first;

    let mut attempts = 1u64;
    let mut filter_applications = 1u64;
    if mode == MeasureMode::Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        attempts = 0;
        filter_applications = 0;
        loop {
            if attempts >= MAX_ATTEMPTS {
                return Err(Error::RetryCap {
                    cap: MAX_ATTEMPTS as usize,
                });
            }
            attempts += 1;
            filter_applications += 1;
            if uniform(&mut rng) >= p_filter {
                continue;
            }
            if uniform(&mut rng) < p_first {
                break;
            }
        }
    }

    let per_run = 2 * ell as u64;
    let d = inst.sparsity as f64;
    let dk = d * inst.kappa;
    let mut ledger = BTreeMap::new();
    ledger.insert("U_H".to_string(), per_run * filter_applications);
    ledger.insert("O_A".to_string(), per_run * filter_applications);
    ledger.insert("O_B".to_string(), 4 * per_run * filter_applications);
    ledger.insert("filter_applications".to_string(), filter_applications);
    let mut formula = BTreeMap::new();
    let aqc_cost = dk * dk.ln() / dk.ln().ln().max(f64::MIN_POSITIVE);
    formula.insert(
        "aqc_hamiltonian_simulation".to_string(),
        FormulaEstimate::new(aqc_cost * attempts as f64, "d*kappa*ln(d*kappa)/ln(ln(d*kappa)) per attempt"),
    );
    formula.insert(
        "initial_overlap_gamma0".to_string(),
        FormulaEstimate::new(gamma0, "measured overlap used to set the filter accuracy eps*gamma0"),
    );
    Ok(SolverReport {
        method: "aqc".into(),
        params: SolverParams {
            kappa: inst.kappa,
            d: inst.sparsity,
            n: inst.dim(),
            form: inst.form,
            eps,
            mode,
            seed,
            ell: Some(ell),
            m: None,
            t: Some(cfg.t),
            p: Some(cfg.p),
        },
        final_fidelity,
        success_probabilities: vec![p_filter, p_first],
        total_success_probability: p_total,
        attempts,
        query_ledger: ledger,
        expected_queries: per_run as f64 / p_total,
        formula_derived_costs: formula,
    })
}
