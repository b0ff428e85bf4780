//! Sweeps over filter degree and condition number.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aqc::{evolve, solve_aqc_filtered, AqcConfig};
use crate::baseline::solve_qsp_direct;
use crate::error::{Error, Result};
use crate::filter::{filter_sweep_each, FilterSetup, MeasureMode};
use crate::numerics::StateRegister;
use crate::qlsp::{Form, QlspHamiltonians, QlspInstance};
use crate::zeno::{solve_zeno, ZenoOptions};

use super::instance::{gen_record_with, RhsKind};
use super::io::{fmt_f64, CsvTable};

/// Values of `1 - η` below this are treated as converged.
pub const FIDELITY_FLOOR: f64 = 1e-10;
/// Largest filter half-degree an `ℓ*` search will try.
pub const ELL_STAR_CAP: usize = 200_000;

pub const FIDELITY_HEADER: &str = "kappa,ell,seed,eta";
pub const ELL_STAR_HEADER: &str = "kappa,eta_target,seed,ell_star";
pub const SCALING_HEADER: &str = "method,kappa,seed,expected_queries,ledger_queries,final_fidelity";

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::arg("a fit needs at least two points"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("fit abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub kappa: f64,
    pub ell: usize,
    pub seed: u64,
    pub eta: f64,
    /// `1 - η` computed from the distance to the target, accurate far below
    /// machine epsilon.
    pub infidelity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllStarRow {
    pub kappa: f64,
    pub eta_target: f64,
    pub seed: u64,
    pub ell_star: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub method: String,
    pub kappa: f64,
    pub seed: u64,
    pub expected_queries: f64,
    pub ledger_queries: u64,
    pub final_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    /// System dimension `N`.
    pub n: usize,
    pub kappas: Vec<f64>,
    pub ell_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub fidelity_table: Vec<FidelityRow>,
    pub ell_star_table: Vec<EllStarRow>,
    pub scaling_table: Vec<ScalingRow>,
    /// Seed-mean of a per-κ summary value, keyed by label.
    pub summaries: BTreeMap<String, f64>,
    pub fits: BTreeMap<String, LinearFit>,
}

impl ExperimentResult {
    fn empty(experiment: &str, n: usize, kappas: &[f64], seeds: &[u64]) -> Self {
        Self {
            experiment: experiment.into(),
            n,
            kappas: kappas.to_vec(),
            ell_grid: Vec::new(),
            seeds: seeds.to_vec(),
            fidelity_table: Vec::new(),
            ell_star_table: Vec::new(),
            scaling_table: Vec::new(),
            summaries: BTreeMap::new(),
            fits: BTreeMap::new(),
        }
    }

    pub fn fidelity_csv(&self) -> Result<CsvTable> {
        let mut t = CsvTable::new(&["kappa", "ell", "seed", "eta"]);
        for r in &self.fidelity_table {
            t.push(vec![fmt_f64(r.kappa), r.ell.to_string(), r.seed.to_string(), fmt_f64(r.eta)])?;
        }
        Ok(t)
    }

    pub fn ell_star_csv(&self) -> Result<CsvTable> {
        let mut t = CsvTable::new(&["kappa", "eta_target", "seed", "ell_star"]);
        for r in &self.ell_star_table {
            t.push(vec![
                fmt_f64(r.kappa),
                fmt_f64(r.eta_target),
                r.seed.to_string(),
                r.ell_star.to_string(),
            ])?;
        }
        Ok(t)
    }

    pub fn scaling_csv(&self) -> Result<CsvTable> {
        let mut t = CsvTable::new(&[
            "method",
            "kappa",
            "seed",
            "expected_queries",
            "ledger_queries",
            "final_fidelity",
        ]);
        for r in &self.scaling_table {
            t.push(vec![
                r.method.clone(),
                fmt_f64(r.kappa),
                r.seed.to_string(),
                fmt_f64(r.expected_queries),
                r.ledger_queries.to_string(),
                fmt_f64(r.final_fidelity),
            ])?;
        }
        Ok(t)
    }

    /// The table that belongs to this experiment.
    pub fn primary_csv(&self) -> Result<CsvTable> {
        match self.experiment.as_str() {
            "fig-a2-right" => self.ell_star_csv(),
            "kappa-scaling" => self.scaling_csv(),
            _ => self.fidelity_csv(),
        }
    }
}

/// Instance family and AQC preparation shared by the degree sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub qubits: usize,
    pub t_factor: f64,
    pub p: f64,
    pub form: Form,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            qubits: 6,
            t_factor: 0.2,
            p: 1.5,
            form: Form::PositiveDefinite,
        }
    }
}

/// One (κ, seed) cell: AQC state, filter setup on `H₁` and the target.
struct Cell {
    ham: QlspHamiltonians<f64>,
    setup: FilterSetup<f64>,
    start: StateRegister<f64>,
}

impl Cell {
    fn new(cfg: &SweepConfig, kappa: f64, seed: u64) -> Result<Self> {
        let inst: QlspInstance<f64> = gen_record_with(cfg.qubits, kappa, seed, cfg.form, RhsKind::Uniform)?.instance()?;
        let ham = inst.hamiltonians()?;
        let aqc = AqcConfig::for_kappa(kappa, cfg.t_factor, cfg.p)?;
        let start = evolve(&inst, &ham, &aqc, false)?.state;
        let setup = FilterSetup::new(&ham.h1_enc, 0.0, Some(ham.gap_lower_bound(1.0)?))?;
        Ok(Self { ham, setup, start })
    }

    /// `(η, 1 - η)` of a filtered iterate against `|0, x⟩`.
    fn score(&self, state: &StateRegister<f64>) -> Result<(f64, f64)> {
        let s = state.normalized()?.aligned_to(&self.ham.target);
        let eta = s.fidelity(&self.ham.target).min(1.0);
        let dist = s.distance(&self.ham.target)?;
        Ok((eta, 0.5 * dist * dist))
    }

    /// Walks the filter degrees `0..=max_ell`, handing `(ℓ, η, 1-η)` to
    /// `visit` until it returns `false`.
    fn sweep(&self, max_ell: usize, mut visit: impl FnMut(usize, f64, f64) -> bool) -> Result<()> {
        let mut err = None;
        filter_sweep_each(&self.setup.h_tilde, self.setup.gap, max_ell, &self.start, |l, s| match self.score(s) {
            Ok((eta, inf)) => visit(l, eta, inf),
            Err(e) => {
                err = Some(e);
                false
            }
        })?;
        err.map_or(Ok(()), Err)
    }
}

fn cells(kappas: &[f64], seeds: &[u64]) -> Vec<(f64, u64)> {
    kappas.iter().flat_map(|&k| seeds.iter().map(move |&s| (k, s))).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn kappa_label(kappa: f64) -> String {
    format!("kappa={kappa}")
}

/// Fidelity `η = |⟨0,x|x̃_ℓ⟩|` of the filtered AQC state as a function of
/// the filter half-degree, for every κ and seed.
///
/// Fits `ln(1-η)` (seed mean) against `ℓ` per κ over the grid points where
/// every seed is still above [`FIDELITY_FLOOR`]; `summaries` holds the mean
/// `ℓ = 0` fidelity per κ.
pub fn experiment_fidelity_vs_ell(
    cfg: &SweepConfig,
    kappas: &[f64],
    ell_grid: &[usize],
    seeds: &[u64],
) -> Result<ExperimentResult> {
    if kappas.is_empty() || seeds.is_empty() || ell_grid.is_empty() {
        return Err(Error::arg("empty sweep axis"));
    }
    let mut grid = ell_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let max_ell = *grid.last().expect("non-empty");
    let per_cell: Vec<(Vec<FidelityRow>, f64)> = cells(kappas, seeds)
        .into_par_iter()
        .map(|(kappa, seed)| -> Result<(Vec<FidelityRow>, f64)> {
            let cell = Cell::new(cfg, kappa, seed)?;
            let mut rows = Vec::with_capacity(grid.len());
            let mut initial = 0.0;
            let mut next = 0usize;
            cell.sweep(max_ell, |l, eta, infidelity| {
                if l == 0 {
                    initial = eta;
                }
                if grid[next] == l {
                    rows.push(FidelityRow {
                        kappa,
                        ell: l,
                        seed,
                        eta,
                        infidelity,
                    });
                    next += 1;
                }
                next < grid.len()
            })?;
            Ok((rows, initial))
        })
        .collect::<Result<_>>()?;

    let mut res = ExperimentResult::empty("fig-a2-left", 1 << cfg.qubits, kappas, seeds);
    res.ell_grid = grid.clone();
    for (ki, &kappa) in kappas.iter().enumerate() {
        let block = &per_cell[ki * seeds.len()..(ki + 1) * seeds.len()];
        let initial: Vec<f64> = block.iter().map(|c| c.1).collect();
        res.summaries
            .insert(format!("initial_fidelity/{}", kappa_label(kappa)), mean(&initial));
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (gi, &l) in grid.iter().enumerate() {
            let inf: Vec<f64> = block.iter().map(|c| c.0[gi].infidelity).collect();
            if inf.iter().all(|&v| v >= FIDELITY_FLOOR) {
                xs.push(l as f64);
                ys.push(mean(&inf.iter().map(|v| v.ln()).collect::<Vec<_>>()));
            }
        }
        if xs.len() >= 2 {
            res.fits.insert(format!("log_infidelity_vs_ell/{}", kappa_label(kappa)), linear_fit(&xs, &ys)?);
        }
    }
    res.fidelity_table = per_cell.into_iter().flat_map(|c| c.0).collect();
    Ok(res)
}

/// Smallest `ℓ` with `η ≥ target`, per κ, target and seed; the seed mean of
/// `ℓ*` is fitted linearly against κ for every target.
pub fn experiment_ell_vs_kappa(
    cfg: &SweepConfig,
    etas: &[f64],
    kappas: &[f64],
    seeds: &[u64],
) -> Result<ExperimentResult> {
    if kappas.is_empty() || seeds.is_empty() || etas.is_empty() {
        return Err(Error::arg("empty sweep axis"));
    }
    if etas.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::arg("fidelity targets must lie in (0, 1)"));
    }
    let per_cell: Vec<Vec<usize>> = cells(kappas, seeds)
        .into_par_iter()
        .map(|(kappa, seed)| -> Result<Vec<usize>> {
            let cell = Cell::new(cfg, kappa, seed)?;
            let mut found: Vec<Option<usize>> = vec![None; etas.len()];
            cell.sweep(ELL_STAR_CAP, |l, eta, _| {
                for (slot, &target) in found.iter_mut().zip(etas) {
                    if slot.is_none() && eta >= target {
                        *slot = Some(l);
                    }
                }
                found.iter().any(Option::is_none)
            })?;
            found
                .into_iter()
                .map(|f| f.ok_or_else(|| Error::Validation(format!("no l <= {ELL_STAR_CAP} reaches the target at kappa {kappa}"))))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut res = ExperimentResult::empty("fig-a2-right", 1 << cfg.qubits, kappas, seeds);
    for (ci, (kappa, seed)) in cells(kappas, seeds).into_iter().enumerate() {
        for (ei, &eta_target) in etas.iter().enumerate() {
            res.ell_star_table.push(EllStarRow {
                kappa,
                eta_target,
                seed,
                ell_star: per_cell[ci][ei],
            });
        }
    }
    for (ei, &eta) in etas.iter().enumerate() {
        let means: Vec<f64> = (0..kappas.len())
            .map(|ki| {
                let v: Vec<f64> = (0..seeds.len())
                    .map(|si| per_cell[ki * seeds.len() + si][ei] as f64)
                    .collect();
                mean(&v)
            })
            .collect();
        for (&kappa, &m) in kappas.iter().zip(&means) {
            res.summaries
                .insert(format!("mean_ell_star/eta={eta}/{}", kappa_label(kappa)), m);
        }
        if kappas.len() >= 2 {
            res.fits.insert(format!("ell_star_vs_kappa/eta={eta}"), linear_fit(kappas, &means)?);
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Aqc,
    Zeno,
    QspDirect,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Aqc => "aqc",
            Method::Zeno => "zeno",
            Method::QspDirect => "qsp-direct",
        }
    }

    pub const ALL: [Method; 3] = [Method::QspDirect, Method::Zeno, Method::Aqc];
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aqc" => Ok(Method::Aqc),
            "zeno" => Ok(Method::Zeno),
            "qsp-direct" => Ok(Method::QspDirect),
            other => Err(Error::arg(format!("unknown method '{other}'"))),
        }
    }
}

/// Settings of the query-count scaling study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    pub qubits: usize,
    pub eps: f64,
    pub t_factor: f64,
    pub p: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            qubits: 4,
            eps: 0.01,
            t_factor: 0.2,
            p: 1.5,
        }
    }
}

/// Expected primary-oracle queries (one run's count over its success
/// probability) per method, κ and seed, on instances whose right-hand side
/// lies in the upper half of the spectrum. Fits the log of the seed mean
/// against `ln κ` per method.
pub fn experiment_kappa_scaling(
    cfg: &ScalingConfig,
    methods: &[Method],
    kappas: &[f64],
    seeds: &[u64],
) -> Result<ExperimentResult> {
    if kappas.is_empty() || seeds.is_empty() || methods.is_empty() {
        return Err(Error::arg("empty sweep axis"));
    }
    let jobs: Vec<(Method, f64, u64)> = methods
        .iter()
        .flat_map(|&m| cells(kappas, seeds).into_iter().map(move |(k, s)| (m, k, s)))
        .collect();
    let rows: Vec<ScalingRow> = jobs
        .into_par_iter()
        .map(|(method, kappa, seed)| -> Result<ScalingRow> {
            let inst = gen_record_with(cfg.qubits, kappa, seed, Form::PositiveDefinite, RhsKind::UpperSpectrum)?.instance()?;
            let (report, key) = match method {
                Method::QspDirect => (solve_qsp_direct(&inst, cfg.eps, MeasureMode::Postselect, seed)?, "U_A"),
                Method::Zeno => (
                    solve_zeno(&inst, cfg.eps, MeasureMode::Postselect, seed, ZenoOptions::default())?.0,
                    "U_H",
                ),
                Method::Aqc => {
                    let aqc = AqcConfig::for_kappa(kappa, cfg.t_factor, cfg.p)?;
                    (solve_aqc_filtered(&inst, cfg.eps, &aqc, MeasureMode::Postselect, seed)?, "U_H")
                }
            };
            Ok(ScalingRow {
                method: method.tag().into(),
                kappa,
                seed,
                expected_queries: report.expected_queries,
                ledger_queries: report.ledger_total(key),
                final_fidelity: report.final_fidelity,
            })
        })
        .collect::<Result<_>>()?;

    let mut res = ExperimentResult::empty("kappa-scaling", 1 << cfg.qubits, kappas, seeds);
    for (mi, &method) in methods.iter().enumerate() {
        let base = mi * kappas.len() * seeds.len();
        let means: Vec<f64> = (0..kappas.len())
            .map(|ki| {
                let start = base + ki * seeds.len();
                mean(&rows[start..start + seeds.len()].iter().map(|r| r.expected_queries).collect::<Vec<_>>())
            })
            .collect();
        for (&kappa, &m) in kappas.iter().zip(&means) {
            res.summaries
                .insert(format!("mean_expected_queries/{}/{}", method.tag(), kappa_label(kappa)), m);
        }
        if kappas.len() >= 2 {
            let lx: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
            let ly: Vec<f64> = means.iter().map(|q| q.ln()).collect();
            res.fits.insert(format!("loglog_queries_vs_kappa/{}", method.tag()), linear_fit(&lx, &ly)?);
        }
    }
    res.scaling_table = rows;
    Ok(res)
}
