use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use eigenfilter::aqc::{evolve, solve_aqc_filtered, AqcConfig};
use eigenfilter::baseline::solve_qsp_direct;
use eigenfilter::blockenc::{encode_sparse, sparsity};
use eigenfilter::chebpoly::{degree_for_accuracy, filter_eval, FilterSpec, ReflectionPolynomial};
use eigenfilter::filter::{apply_filter, FilterSetup, MeasureMode};
use eigenfilter::harness::experiments::{
    experiment_ell_vs_kappa, experiment_fidelity_vs_ell, experiment_kappa_scaling, Method, ScalingConfig, SweepConfig,
};
use eigenfilter::harness::instance::{gen_record_with, InstanceRecord, RhsKind};
use eigenfilter::harness::io::{fmt_f64, instance_to_string, read_instance, to_json, CsvTable};
use eigenfilter::harness::validate::{run_suite, validate_instance, Suite, ValidateOptions};
use eigenfilter::qlsp::{Form, QlspInstance};
use eigenfilter::zeno::{solve_zeno, zeno_params, ZenoOptions};
use eigenfilter::Error;

#[derive(Parser)]
#[command(name = "eigenfilter", version, about = "Minimax eigenstate filtering and filtered linear-system solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it as JSON.
    Gen(GenArgs),
    /// Tabulate R_l(x; delta) (or the reflection polynomial) on [-1, 1].
    Poly(PolyArgs),
    /// Filter an instance's state and report the measurement outcome.
    Filter(FilterArgs),
    /// Solve a linear system with one of the solvers.
    Solve(SolveArgs),
    /// Run a sweep.
    Experiment(ExperimentArgs),
    /// Run bound suites; exits with 2 if any check fails.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file written by `gen`; overrides the generation flags.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of system qubits.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "pd")]
    form: Form,
    #[arg(long, value_enum, default_value_t = Rhs::Uniform)]
    rhs: Rhs,
    /// Declared sparsity `d` (the encoding factor); must be at least the
    /// actual row sparsity.
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rhs {
    Uniform,
    UpperSpectrum,
}

impl InstanceArgs {
    fn record(&self) -> Result<InstanceRecord, Error> {
        let mut rec = match &self.input {
            Some(p) => read_instance(p)?,
            None => {
                let rhs = match self.rhs {
                    Rhs::Uniform => RhsKind::Uniform,
                    Rhs::UpperSpectrum => RhsKind::UpperSpectrum,
                };
                gen_record_with(self.n, self.kappa, self.seed, self.form, rhs)?
            }
        };
        if let Some(d) = self.d {
            let actual = sparsity(&rec.a);
            if d < actual {
                return Err(Error::InvalidArgument(format!("--d {d} is below the row sparsity {actual}")));
            }
            rec.sparsity = d;
        }
        Ok(rec)
    }

    fn instance(&self) -> Result<QlspInstance<f64>, Error> {
        self.record()?.instance()
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolyKind {
    Filter,
    Reflection,
}

#[derive(Args)]
struct PolyArgs {
    #[arg(long, default_value_t = 16)]
    ell: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Number of grid intervals on [-1, 1].
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long, value_enum, default_value_t = PolyKind::Filter)]
    kind: PolyKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    /// `A` itself, started from `|b⟩`.
    A,
    /// `H₁`, started from `|0, b⟩`.
    H1,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Operator::H1)]
    operator: Operator,
    /// Target eigenvalue; defaults to 0 for H1 and the smallest eigenvalue of A.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "eps")]
    ell: Option<usize>,
    /// Target accuracy; picks the smallest l with 2 exp(-sqrt(2) l gap) <= eps.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value = "postselect")]
    mode: MeasureMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    Aqc,
    Zeno,
    QspDirect,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: SolveMethod,
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value = "postselect")]
    mode: MeasureMode,
    #[arg(long = "T-factor", default_value_t = 0.2)]
    t_factor: f64,
    #[arg(long, default_value_t = 1.5)]
    p: f64,
    /// Report file (JSON); printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV trace: per-step data for zeno, instantaneous overlaps for aqc.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    FigA2Left,
    FigA2Right,
    KappaScaling,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// Number of system qubits; defaults to 6 for the fidelity sweeps and 4 for scaling.
    #[arg(long)]
    n: Option<usize>,
    /// Condition numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Number of seeds per condition number.
    #[arg(long, default_value_t = 20)]
    trials: u64,
    /// First seed; seeds are consecutive.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6000)]
    ell_max: usize,
    #[arg(long, default_value_t = 50)]
    ell_step: usize,
    /// Fidelity targets for fig-a2-right, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.99])]
    eta: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long = "T-factor", default_value_t = 0.2)]
    t_factor: f64,
    #[arg(long, default_value_t = 1.5)]
    p: f64,
    /// Methods for kappa-scaling, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    method: Vec<Method>,
    /// Output directory for `result.json` and `table.csv`; the table goes to
    /// stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct ValidateArgs {
    /// Suite name or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 10.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Instance file checked by the `instance` suite in place of a
    /// generated one.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<(), Error> {
    emit(a.out.as_deref(), &instance_to_string(&a.inst.record()?)?)
}

fn cmd_poly(a: &PolyArgs) -> Result<(), Error> {
    if a.points < 1 {
        return Err(Error::InvalidArgument("--points must be positive".into()));
    }
    let mut t = CsvTable::new(&["x", "value"]);
    let eval: Box<dyn Fn(f64) -> f64> = match a.kind {
        PolyKind::Filter => {
            let spec = FilterSpec::filter(a.ell, a.delta)?;
            Box::new(move |x| filter_eval(&spec, x))
        }
        PolyKind::Reflection => {
            let poly = ReflectionPolynomial::new(a.ell, a.delta)?;
            Box::new(move |x| poly.eval(x))
        }
    };
    for i in 0..=a.points {
        let x = -1.0 + 2.0 * i as f64 / a.points as f64;
        t.push(vec![fmt_f64(x), fmt_f64(eval(x))])?;
    }
    emit(a.out.as_deref(), &t.to_csv())
}

#[derive(Serialize)]
struct FilterRecord {
    operator: &'static str,
    lambda: f64,
    ell: usize,
    gap: f64,
    bound: f64,
    mode: MeasureMode,
    seed: u64,
    success_probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled_success: Option<bool>,
    /// `|⟨v|post⟩|` with `v` the normalized projection of the input onto the
    /// target eigenspace.
    fidelity: f64,
    /// `‖P ψ‖`
    overlap: f64,
    queries: usize,
    ancilla: usize,
}

fn cmd_filter(a: &FilterArgs) -> Result<(), Error> {
    let inst = a.inst.instance()?;
    let (enc, psi, name) = match a.operator {
        Operator::A => {
            if !inst.a.is_hermitian() {
                return Err(Error::InvalidArgument("operator A must be Hermitian".into()));
            }
            let mut enc = encode_sparse(inst.a.clone())?;
            if inst.sparsity as f64 > enc.alpha() {
                enc = eigenfilter::blockenc::encode(inst.a.clone(), inst.sparsity as f64, enc.ancilla())?;
            }
            (enc, inst.b.clone(), "a")
        }
        Operator::H1 => {
            let ham = inst.hamiltonians()?;
            let psi = ham.initial.clone();
            (ham.h1_enc, psi, "h1")
        }
    };
    let lambda = match (a.lambda, a.operator) {
        (Some(l), _) => l,
        (None, Operator::H1) => 0.0,
        (None, Operator::A) => eigenfilter::numerics::eig_hermitian(enc.payload())?.eigenvalues[0],
    };
    let setup = FilterSetup::new(&enc, lambda, None)?;
    let ell = match (a.ell, a.eps) {
        (Some(l), _) => l,
        (None, Some(e)) => degree_for_accuracy(setup.gap, e)?.max(1),
        (None, None) => return Err(Error::InvalidArgument("give --ell or --eps".into())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.inst.seed);
    let out = apply_filter(&setup, ell, &psi, a.mode, Some(&mut rng))?;
    let proj = setup.projector().apply(&psi)?;
    let overlap = proj.norm();
    let fidelity = if overlap > 0.0 {
        proj.normalized()?.fidelity(&out.post_state).min(1.0)
    } else {
        0.0
    };
    let rec = FilterRecord {
        operator: name,
        lambda,
        ell,
        gap: setup.gap,
        bound: setup.bound(ell),
        mode: a.mode,
        seed: a.inst.seed,
        success_probability: out.success_probability,
        sampled_success: out.sampled_success,
        fidelity,
        overlap,
        queries: out.queries,
        ancilla: out.ancilla,
    };
    emit(a.out.as_deref(), &to_json(&rec)?)
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Error> {
    let inst = a.inst.instance()?;
    let seed = a.inst.seed;
    let (report, trace) = match a.method {
        SolveMethod::Aqc => {
            let cfg = AqcConfig::for_kappa(inst.kappa, a.t_factor, a.p)?;
            let report = solve_aqc_filtered(&inst, a.eps, &cfg, a.mode, seed)?;
            let trace = match &a.trace {
                Some(_) => {
                    let run = evolve(&inst, &inst.hamiltonians()?, &cfg, true)?;
                    let mut t = CsvTable::new(&["s", "overlap"]);
                    for s in run.trace {
                        t.push(vec![fmt_f64(s.s), fmt_f64(s.overlap)])?;
                    }
                    Some(t)
                }
                None => None,
            };
            (report, trace)
        }
        SolveMethod::Zeno => {
            let (report, tr) = solve_zeno(&inst, a.eps, a.mode, seed, ZenoOptions::default())?;
            let params = zeno_params(inst.kappa, a.eps)?;
            let mut t = CsvTable::new(&["j", "f_j", "step_success", "step_overlap"]);
            for j in 1..=params.m {
                t.push(vec![
                    j.to_string(),
                    fmt_f64(params.f_grid[j]),
                    fmt_f64(tr.per_step_success[j - 1]),
                    fmt_f64(tr.per_step_overlap[j - 1]),
                ])?;
            }
            (report, Some(t))
        }
        SolveMethod::QspDirect => (solve_qsp_direct(&inst, a.eps, a.mode, seed)?, None),
    };
    if let (Some(path), Some(t)) = (&a.trace, trace) {
        t.write(path)?;
    }
    emit(a.out.as_deref(), &to_json(&report)?)
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<(), Error> {
    if a.trials == 0 {
        return Err(Error::InvalidArgument("--trials must be positive".into()));
    }
    let seeds: Vec<u64> = (0..a.trials).map(|i| a.seed + i).collect();
    let kappas = |default: &[f64]| if a.kappa.is_empty() { default.to_vec() } else { a.kappa.clone() };
    let sweep = SweepConfig {
        qubits: a.n.unwrap_or(6),
        t_factor: a.t_factor,
        p: a.p,
        form: Form::PositiveDefinite,
    };
    let res = match a.kind {
        ExperimentKind::FigA2Left => {
            if a.ell_step == 0 {
                return Err(Error::InvalidArgument("--ell-step must be positive".into()));
            }
            let grid: Vec<usize> = (0..=a.ell_max).step_by(a.ell_step).collect();
            experiment_fidelity_vs_ell(&sweep, &kappas(&[10.0, 50.0, 100.0]), &grid, &seeds)?
        }
        ExperimentKind::FigA2Right => experiment_ell_vs_kappa(&sweep, &a.eta, &kappas(&[10.0, 20.0, 40.0, 80.0]), &seeds)?,
        ExperimentKind::KappaScaling => {
            let cfg = ScalingConfig {
                qubits: a.n.unwrap_or(4),
                eps: a.eps,
                t_factor: a.t_factor,
                p: a.p,
            };
            let methods = if a.method.is_empty() { Method::ALL.to_vec() } else { a.method.clone() };
            experiment_kappa_scaling(&cfg, &methods, &kappas(&[4.0, 8.0, 16.0, 32.0, 64.0]), &seeds)?
        }
    };
    let table = res.primary_csv()?;
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("result.json"), to_json(&res)?)?;
            table.write(&dir.join("table.csv"))?;
        }
        None => print!("{}", table.to_csv()),
    }
    for (label, fit) in &res.fits {
        eprintln!("{label}: slope {:.6} intercept {:.6} r2 {:.6} (n = {})", fit.slope, fit.intercept, fit.r2, fit.n);
    }
    Ok(())
}

/// Returns whether every check passed.
fn cmd_validate(a: &ValidateArgs) -> Result<bool, Error> {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse()?]
    };
    let opts = ValidateOptions {
        kappa: a.kappa,
        qubits: a.n,
        seed: a.seed,
        eps: a.eps,
    };
    let input = a.input.as_deref().map(read_instance).transpose()?;
    let reports = suites
        .iter()
        .map(|&s| match (s, &input) {
            (Suite::Instance, Some(rec)) => validate_instance(rec),
            _ => run_suite(s, &opts),
        })
        .collect::<Result<Vec<_>, _>>()?;
    for r in &reports {
        for c in &r.checks {
            eprintln!(
                "[{}] {}: {} {} {} ... {}",
                r.suite.tag(),
                c.name,
                fmt_f64(c.value),
                c.relation,
                fmt_f64(c.bound),
                if c.pass { "pass" } else { "FAIL" }
            );
        }
    }
    emit(a.out.as_deref(), &to_json(&reports)?)?;
    Ok(reports.iter().all(|r| r.passed))
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Validation(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| true),
        Command::Poly(a) => cmd_poly(a).map(|_| true),
        Command::Filter(a) => cmd_filter(a).map(|_| true),
        Command::Solve(a) => cmd_solve(a).map(|_| true),
        Command::Experiment(a) => cmd_experiment(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
