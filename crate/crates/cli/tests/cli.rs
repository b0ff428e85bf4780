use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigenfilter"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Runs the command twice and checks the outputs are byte-identical.
fn same_twice(args: &[&str]) -> Vec<u8> {
    let a = run(args);
    let b = run(args);
    assert_eq!(code(&a), 0, "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "{args:?}");
    a.stdout
}

fn file_twice(args: &[&str], dir: &Path, name: &str) -> Vec<u8> {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", p]);
    assert_eq!(code(&run(&full)), 0);
    let first = fs::read(&path).unwrap();
    fs::remove_file(&path).unwrap();
    assert_eq!(code(&run(&full)), 0);
    assert_eq!(first, fs::read(&path).unwrap(), "{args:?}");
    first
}

#[test]
fn gen_is_deterministic_and_seed_dependent() {
    let dir = tempfile::tempdir().unwrap();
    let a = file_twice(&["gen", "--n", "3", "--kappa", "8", "--seed", "4"], dir.path(), "a.json");
    let b = file_twice(&["gen", "--n", "3", "--kappa", "8", "--seed", "5"], dir.path(), "b.json");
    assert_ne!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("%%MatrixMarket"));
}

#[test]
fn poly_csv() {
    let out = same_twice(&["poly", "--ell", "8", "--delta", "0.2", "--points", "50"]);
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("x,value\n"));
    assert_eq!(text.lines().count(), 52);
    let refl = stdout(&run(&["poly", "--ell", "8", "--delta", "0.2", "--points", "50", "--kind", "reflection"]));
    assert!(refl.starts_with("x,value\n"));
}

#[test]
fn solvers_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--n", "3", "--kappa", "6", "--seed", "2", "--eps", "1e-3", "--mode", "sample"];
    for method in ["zeno", "aqc", "qsp-direct"] {
        let mut args = vec!["solve", "--method", method];
        args.extend(base);
        let json = String::from_utf8(file_twice(&args, dir.path(), "report.json")).unwrap();
        assert!(json.contains("\"query_ledger\""), "{method}");
    }
}

#[test]
fn zeno_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let o = run(&[
        "solve",
        "--method",
        "zeno",
        "--n",
        "2",
        "--kappa",
        "5",
        "--eps",
        "1e-2",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("j,f_j,step_success,step_overlap\n"));
}

#[test]
fn filter_from_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert_eq!(code(&run(&["gen", "--n", "3", "--kappa", "5", "--out", inst.to_str().unwrap()])), 0);
    let out = same_twice(&["filter", "--input", inst.to_str().unwrap(), "--ell", "40", "--mode", "sample", "--seed", "9"]);
    let text = String::from_utf8(out).unwrap();
    assert!(text.contains("\"fidelity\""));
}

#[test]
fn small_experiments_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let left = same_twice(&[
        "experiment",
        "fig-a2-left",
        "--n",
        "3",
        "--kappa",
        "5,10",
        "--trials",
        "2",
        "--ell-max",
        "100",
        "--ell-step",
        "25",
    ]);
    assert!(String::from_utf8(left).unwrap().starts_with("kappa,ell,seed,eta\n"));
    let right = same_twice(&[
        "experiment",
        "fig-a2-right",
        "--n",
        "3",
        "--kappa",
        "5,10",
        "--trials",
        "2",
        "--eta",
        "0.9",
    ]);
    assert!(String::from_utf8(right).unwrap().starts_with("kappa,eta_target,seed,ell_star\n"));

    let out = dir.path().join("scal");
    let args = [
        "experiment",
        "kappa-scaling",
        "--n",
        "2",
        "--kappa",
        "4,8",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&run(&args)), 0);
    let first = fs::read(out.join("result.json")).unwrap();
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert!(table.starts_with("method,kappa,seed,expected_queries,ledger_queries,final_fidelity\n"));
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(first, fs::read(out.join("result.json")).unwrap());
}

#[test]
fn validate_passes_and_repeats() {
    let out = same_twice(&["validate", "--suite", "minimax"]);
    assert!(String::from_utf8(out).unwrap().contains("\"passed\": true"));
    assert_eq!(code(&run(&["validate", "--suite", "blockenc", "--n", "2"])), 0);
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["solve", "--method", "zeno", "--eps", "2"])), 1);
    assert_eq!(code(&run(&["gen", "--n", "3", "--kappa", "0.5"])), 1);
    assert_eq!(code(&run(&["validate", "--suite", "nope"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);

    // an instance whose declared condition number is wrong fails validation
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert_eq!(code(&run(&["gen", "--n", "3", "--kappa", "10", "--out", inst.to_str().unwrap()])), 0);
    let text = fs::read_to_string(&inst).unwrap();
    let edited = text.replacen("\"kappa\": 10.0", "\"kappa\": 20.0", 1);
    assert_ne!(text, edited);
    fs::write(&inst, edited).unwrap();
    let o = run(&["validate", "--suite", "instance", "--input", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}
