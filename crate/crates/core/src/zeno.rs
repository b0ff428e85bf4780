//! Zeno-style traversal of the eigenpath by a sequence of filtering
//! projections at the points `f_j = f(j/M)` of the schedule
//! `f(s) = (1 - κ^{-s})/(1 - κ^{-1})`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebpoly::degree_for_accuracy;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, uniform, FilterSetup, MeasureMode};
use crate::harness::report::{FormulaEstimate, SolverParams, SolverReport};
use crate::numerics::StateRegister;
use crate::qlsp::{eigenpath_null_vector, path_length_bound, QlspInstance};

pub const MAX_ATTEMPTS: u64 = 10_000;

/// `f(s) = (1 - κ^{-s})/(1 - κ^{-1})`.
pub fn zeno_schedule(s: f64, kappa: f64) -> f64 {
    ((1.0 - kappa.powf(-s)) / (1.0 - 1.0 / kappa)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoParams {
    pub m: usize,
    pub eps_p: f64,
    pub final_eps: f64,
    pub f_grid: Vec<f64>,
    pub kappa: f64,
}

/// `M = max(4, ⌈4 ln²κ / (1-1/κ)²⌉)`, `ε_P = 1/(162 M²)`, final accuracy `ε/4`.
pub fn zeno_params(kappa: f64, eps: f64) -> Result<ZenoParams> {
    if !(kappa > 1.0) {
        return Err(Error::arg("kappa must exceed 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg("eps must lie in (0, 1)"));
    }
    let c = 1.0 - 1.0 / kappa;
    let m = ((4.0 * kappa.ln().powi(2) / (c * c)).ceil() as usize).max(4);
    let mut f_grid: Vec<f64> = (0..=m).map(|j| zeno_schedule(j as f64 / m as f64, kappa)).collect();
    f_grid[0] = 0.0;
    f_grid[m] = 1.0;
    Ok(ZenoParams {
        m,
        eps_p: 1.0 / (162.0 * (m * m) as f64),
        final_eps: eps / 4.0,
        f_grid,
        kappa,
    })
}

impl ZenoParams {
    /// `2 ln κ / (M (1 - 1/κ))`, the common `L*` length of all segments.
    pub fn segment_length(&self) -> f64 {
        2.0 * self.kappa.ln() / (self.m as f64 * (1.0 - 1.0 / self.kappa))
    }

    /// Largest deviation of a segment's `L*` from the common value.
    pub fn segment_defect(&self) -> f64 {
        let target = self.segment_length();
        self.f_grid
            .windows(2)
            .map(|w| (path_length_bound(self.kappa, w[0], w[1]) - target).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoTrace {
    /// Success probability of step `j = 1..=M`; the last entry includes the
    /// first-qubit measurement.
    pub per_step_success: Vec<f64>,
    /// `|⟨x̃(f_j)|x(f_{j+1})⟩|` for `j = 0..M`.
    pub per_step_overlap: Vec<f64>,
    /// `|⟨x(f_j)|x(f_{j+1})⟩|` for `j = 0..M`.
    pub path_overlap: Vec<f64>,
    /// `|⟨x(f_j)|x̃(f_j)⟩|` for `j = 0..=M`.
    pub filter_overlap: Vec<f64>,
    /// Filter half-degree used at step `j = 1..=M`.
    pub ell: Vec<usize>,
    pub total_success: f64,
    pub final_fidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZenoOptions {
    /// Exact spectral projectors instead of filters (`ε_P = 0`).
    pub ideal: bool,
    /// Gaps measured from the spectrum instead of `Δ*(f)`.
    pub measured_gaps: bool,
}

/// Runs the projection sequence. Sample mode replays the deterministic
/// trajectory, flips a seeded coin per step and restarts on failure.
pub fn solve_zeno(
    inst: &QlspInstance<f64>,
    eps: f64,
    mode: MeasureMode,
    seed: u64,
    opts: ZenoOptions,
) -> Result<(SolverReport, ZenoTrace)> {
    let params = zeno_params(inst.kappa, eps)?;
    let ham = inst.hamiltonians()?;
    let m = params.m;
    let path: Vec<StateRegister<f64>> = params
        .f_grid
        .iter()
        .map(|&f| eigenpath_null_vector(inst, &ham, f))
        .collect::<Result<_>>()?;

    let mut state = ham.initial.clone();
    let mut per_step_success = Vec::with_capacity(m);
    let mut per_step_overlap = Vec::with_capacity(m);
    let mut path_overlap = Vec::with_capacity(m);
    let mut filter_overlap = vec![path[0].fidelity(&state)];
    let mut ells = Vec::with_capacity(m);
    for j in 1..=m {
        let f = params.f_grid[j];
        per_step_overlap.push(state.fidelity(&path[j]));
        path_overlap.push(path[j - 1].fidelity(&path[j]));
        let enc = ham.make_hf(f)?;
        let gap = if opts.measured_gaps {
            None
        } else {
            Some(ham.gap_lower_bound(f)?)
        };
        let setup = FilterSetup::new(&enc, 0.0, gap)?;
        let acc = if j == m { params.final_eps } else { params.eps_p };
        let ell = degree_for_accuracy(setup.gap, acc)?.max(1);
        let (p, next) = if opts.ideal {
            let proj = setup.projector().apply(&state)?;
            let p = proj.norm_squared();
            if !(p > 0.0) {
                return Err(Error::ZeroProbability { step: j });
            }
            (p, proj.normalized()?)
        } else {
            let o = apply_filter(&setup, ell, &state, MeasureMode::Postselect, None)
                .map_err(|_| Error::ZeroProbability { step: j })?;
            (o.success_probability, o.post_state)
        };
        ells.push(ell);
        per_step_success.push(p);
        state = next;
        filter_overlap.push(path[j].fidelity(&state));
    }
    let first = ham.first_qubit_zero(&state)?;
    let p_first = first.norm_squared();
    if !(p_first > 0.0) {
        return Err(Error::ZeroProbability { step: m });
    }
    *per_step_success.last_mut().expect("M >= 4") *= p_first;
    let x = first.normalized()?;
    let final_fidelity = x.fidelity(&ham.first_qubit_zero(&ham.target)?).min(1.0);
    let total_success: f64 = per_step_success.iter().product();

    let step_queries: Vec<u64> = ells.iter().map(|&l| 2 * l as u64).collect();
    let run_queries: u64 = step_queries.iter().sum();
    let (attempts, total_queries, filter_applications) = match mode {
        MeasureMode::Postselect => (1, run_queries, m as u64),
        MeasureMode::Sample => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut attempts, mut queries, mut apps) = (0u64, 0u64, 0u64);
            'attempt: loop {
                if attempts >= MAX_ATTEMPTS {
                    return Err(Error::RetryCap {
                        cap: MAX_ATTEMPTS as usize,
                    });
                }
                attempts += 1;
                for (p, q) in per_step_success.iter().zip(&step_queries) {
                    queries += q;
                    apps += 1;
                    if uniform(&mut rng) >= *p {
                        continue 'attempt;
                    }
                }
                break;
            }
            (attempts, queries, apps)
        }
    };

    let d = inst.sparsity as f64;
    let k = inst.kappa;
    let intermediate: u64 = step_queries[..m - 1].iter().sum();
    let bound_shape = (1.0 / params.eps_p).ln() * m as f64 * ((d * k - 1.0) / k.ln() - (d - 1.0) / (1.0 - 1.0 / k));
    let mut ledger = BTreeMap::new();
    ledger.insert("U_H".to_string(), total_queries);
    ledger.insert("O_A".to_string(), total_queries);
    ledger.insert("O_B".to_string(), 6 * total_queries);
    ledger.insert("filter_applications".to_string(), filter_applications);
    let mut formula = BTreeMap::new();
    formula.insert(
        "intermediate_query_constant".to_string(),
        FormulaEstimate::new(
            intermediate as f64 / bound_shape,
            "measured intermediate queries / [ln(1/eps_P) M ((d kappa - 1)/ln kappa - (d - 1)/(1 - 1/kappa))]",
        ),
    );
    let report = SolverReport {
        method: "zeno".into(),
        params: SolverParams {
            kappa: k,
            d: inst.sparsity,
            n: inst.dim(),
            form: inst.form,
            eps,
            mode,
            seed,
            ell: ells.iter().copied().max(),
            m: Some(m),
            t: None,
            p: None,
        },
        final_fidelity,
        success_probabilities: per_step_success.clone(),
        total_success_probability: total_success,
        attempts,
        query_ledger: ledger,
        expected_queries: run_queries as f64 / total_success,
        formula_derived_costs: formula,
    };
    let trace = ZenoTrace {
        per_step_success,
        per_step_overlap,
        path_overlap,
        filter_overlap,
        ell: ells,
        total_success,
        final_fidelity,
    };
    Ok((report, trace))
}

/// One step of the overlap-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoStepCheck {
    pub j: usize,
    pub path_overlap: f64,
    pub filter_overlap: f64,
    pub step_overlap: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZenoBoundsReport {
    pub bound_path: f64,
    pub bound_filter: f64,
    pub bound_step: f64,
    pub steps: Vec<ZenoStepCheck>,
    pub total_success: f64,
    /// `Π a_j - Σ b_j` with `a_j` the ideal step overlaps squared and `b_j`
    /// their losses, checked against `Π(a_j - b_j)`.
    pub product_inequality_holds: bool,
    /// `1 - 2 ln²κ / (M² (1-1/κ)²)` against the smallest path overlap.
    pub ideal_overlap_bound: f64,
    pub ideal_overlap_holds: bool,
}

/// Checks, at every step,
/// (i) `|⟨x(f_j)|x(f_{j+1})⟩| ≥ 1 - 1/(2M)`,
/// (ii) `|⟨x(f_j)|x̃(f_j)⟩| ≥ 1 - 4ε_P`,
/// (iii) `|⟨x̃(f_j)|x(f_{j+1})⟩| ≥ max(1 - 1/(2M) - 4ε_P - 2√(2ε_P), 1/2)`.
///
/// Step `j = 0` starts exactly on the path; the last filter runs at `ε/4`
/// and is not part of (ii).
pub fn validate_zeno_bounds(trace: &ZenoTrace, params: &ZenoParams) -> Result<ZenoBoundsReport> {
    let m = params.m as f64;
    let ep = params.eps_p;
    let b1 = 1.0 - 1.0 / (2.0 * m);
    let b2 = 1.0 - 4.0 * ep;
    let b3 = (1.0 - 1.0 / (2.0 * m) - 4.0 * ep - 2.0 * (2.0 * ep).sqrt()).max(0.5);
    let tol = 1e-12;
    let mut steps = Vec::new();
    for j in 0..params.m {
        let po = trace.path_overlap[j];
        let fo = trace.filter_overlap[j];
        let so = trace.per_step_overlap[j];
        let ok = po >= b1 - tol && fo >= b2 - tol && so >= b3 - tol;
        steps.push(ZenoStepCheck {
            j,
            path_overlap: po,
            filter_overlap: fo,
            step_overlap: so,
            ok,
        });
    }
    // a_j = step overlap², b_j = a_j - p_j (loss beyond the ideal overlap)
    let a: Vec<f64> = trace.per_step_overlap.iter().map(|o| o * o).collect();
    let b: Vec<f64> = a
        .iter()
        .zip(&trace.per_step_success)
        .map(|(a, p)| (a - p).max(0.0))
        .collect();
    let lhs: f64 = a.iter().zip(&b).map(|(a, b)| a - b).product();
    let rhs: f64 = a.iter().product::<f64>() - b.iter().sum::<f64>();
    let product_inequality_holds = lhs >= rhs - 1e-12;
    let c = 1.0 - 1.0 / params.kappa;
    let ideal_overlap_bound = 1.0 - 2.0 * params.kappa.ln().powi(2) / (m * m * c * c);
    let min_path = trace.path_overlap.iter().copied().fold(1.0, f64::min);
    let report = ZenoBoundsReport {
        bound_path: b1,
        bound_filter: b2,
        bound_step: b3,
        total_success: trace.total_success,
        product_inequality_holds,
        ideal_overlap_bound,
        ideal_overlap_holds: min_path >= ideal_overlap_bound - tol,
        steps,
    };
    let bad: Vec<usize> = report.steps.iter().filter(|s| !s.ok).map(|s| s.j).collect();
    if !bad.is_empty() || !report.product_inequality_holds || !report.ideal_overlap_holds {
        return Err(Error::Validation(format!(
            "Zeno overlap bounds violated at steps {bad:?} (product inequality {}, ideal overlap {})",
            report.product_inequality_holds, report.ideal_overlap_holds
        )));
    }
    Ok(report)
}
