use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use eclc::cli::{cmd_fit, cmd_prove, cmd_run, cmd_validate, ExitStatus, Format, RunOptions};
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn golden(name: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

struct Output {
    status: ExitStatus,
    out: String,
    err: String,
}

fn capture(f: impl FnOnce(&mut Vec<u8>, &mut Vec<u8>) -> ExitStatus) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = f(&mut out, &mut err);
    Output {
        status,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn options(dir: &Path, format: Format) -> RunOptions {
    RunOptions {
        seed: None,
        trials: None,
        out: dir.to_path_buf(),
        format,
        env_seed: None,
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_reports_counts() {
    let o = capture(|out, err| cmd_validate(&scenario("coherence.eclc"), out, err));
    assert_eq!(o.status, ExitStatus::SUCCESS);
    assert_eq!(o.out, "OK: 3 worlds, 2 edges, 0 observers\n");
}

#[test]
fn validate_names_the_bad_line() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.eclc", "world a { energy=1, kappa=0, lambda=1 }\nedge a -> b { deltaE=1 }\n");
    let o = capture(|out, err| cmd_validate(&path, out, err));
    assert_eq!(o.status, ExitStatus::FAILURE);
    assert!(o.err.contains("bad.eclc:2:11: unknown world `b`"), "{}", o.err);
    let o = capture(|out, err| cmd_validate(&dir.path().join("missing.eclc"), out, err));
    assert_eq!(o.status, ExitStatus::FAILURE);
    assert!(o.err.contains("cannot read"));
}

#[test]
fn prove_prints_tree_or_reason() {
    let path = scenario("decoherence.eclc");
    let o = capture(|out, err| cmd_prove(&path, "eq1", None, out, err));
    assert_eq!(o.status, ExitStatus::SUCCESS);
    assert!(o.out.contains("proved at depth 4"));
    assert!(o.out.contains("law:decohere  E, Entangled(A,B) |- Decohered(A), Residual(B)"));
    assert!(o.out.contains("cost: gamma=2 delta=2"));

    let o = capture(|out, err| cmd_prove(&path, "eq1", Some("w2"), out, err));
    assert_eq!(o.status, ExitStatus::FAILURE);
    assert!(o.out.ends_with("depth_exceeded\n"), "{}", o.out);

    let o = capture(|out, err| cmd_prove(&path, "eq2", None, out, err));
    assert_eq!(o.status, ExitStatus::USAGE);
    assert!(o.err.contains("known: eq1"));
    let o = capture(|out, err| cmd_prove(&path, "eq1", Some("w9"), out, err));
    assert_eq!(o.status, ExitStatus::USAGE);
}

#[test]
fn coherence_run_matches_golden_files() {
    let dir = TempDir::new().unwrap();
    let o = capture(|out, err| cmd_run(&scenario("coherence.eclc"), &options(dir.path(), Format::Both), out, err));
    assert_eq!(o.status, ExitStatus::SUCCESS, "{}", o.err);
    assert!(o.out.starts_with("coherence: pi=(1.00, 0.61, 0.19) rate=0.7632"));
    let per_world = fs::read_to_string(dir.path().join("per_world.csv")).unwrap();
    assert_eq!(per_world, golden("coherence_per_world.csv"));
    assert_eq!(per_world.lines().count(), 4);
    assert_eq!(fs::read_to_string(dir.path().join("report.json")).unwrap(), golden("coherence_report.json"));

    // the frozen entropy values are binary entropies of the persistence scores
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let row: Vec<&str> = per_world.lines().nth(2).unwrap().split(',').collect();
    assert!((row[4].parse::<f64>().unwrap() - h(0.61)).abs() < 1e-15);
}

#[test]
fn reciprocity_writes_one_row_per_trial_and_direction() {
    let dir = TempDir::new().unwrap();
    let o = capture(|out, err| cmd_run(&scenario("reciprocity.eclc"), &options(dir.path(), Format::Csv), out, err));
    assert_eq!(o.status, ExitStatus::SUCCESS);
    let trials = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 101);
    assert!(trials.starts_with("trial,direction,success,proof_depth,failure_reason\n0,forward,true,3,\n"));
    assert!(!dir.path().join("report.json").exists());

    let mut opts = options(dir.path(), Format::Csv);
    opts.trials = Some(5);
    capture(|out, err| cmd_run(&scenario("reciprocity.eclc"), &opts, out, err));
    let trials = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 11);
}

#[test]
fn json_format_writes_only_the_report() {
    let dir = TempDir::new().unwrap();
    let o = capture(|out, err| cmd_run(&scenario("accessibility.eclc"), &options(dir.path(), Format::Json), out, err));
    assert_eq!(o.status, ExitStatus::SUCCESS);
    assert_eq!(o.out, "accessibility: final access fraction 0.00\n");
    let names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, vec!["report.json".to_string()]);
}

#[test]
fn failed_runs_write_nothing() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let bad = write(&dir, "kindless.eclc", "world a { energy=1, kappa=0, lambda=1 }\n");
    let o = capture(|out, err| cmd_run(&bad, &options(&out_dir, Format::Both), out, err));
    assert_eq!(o.status, ExitStatus::FAILURE);
    assert!(!out_dir.exists());

    let mut opts = options(&out_dir, Format::Both);
    opts.env_seed = Some("not-a-number".into());
    let text = fs::read_to_string(scenario("reciprocity.eclc")).unwrap().replace("seed = 42", "");
    let seedless = write(&dir, "seedless.eclc", &text);
    let o = capture(|out, err| cmd_run(&seedless, &opts, out, err));
    assert_eq!(o.status, ExitStatus::FAILURE);
    assert!(o.err.contains("ECLC_SEED"));
    assert!(!out_dir.exists());
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(scenario("reciprocity.eclc")).unwrap().replace("seed = 42", "");
    let seedless = write(&dir, "seedless.eclc", &text);
    let seed_of = |path: &Path, seed: Option<u64>, env: Option<&str>| {
        let out_dir = dir.path().join("o");
        let mut opts = options(&out_dir, Format::Json);
        opts.seed = seed;
        opts.env_seed = env.map(str::to_string);
        let o = capture(|out, err| cmd_run(path, &opts, out, err));
        assert_eq!(o.status, ExitStatus::SUCCESS);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
        json["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&seedless, None, None), 42);
    assert_eq!(seed_of(&seedless, None, Some("9")), 9);
    assert_eq!(seed_of(&seedless, Some(5), Some("9")), 5);
    assert_eq!(seed_of(&scenario("reciprocity.eclc"), None, Some("9")), 42);
    assert_eq!(seed_of(&scenario("reciprocity.eclc"), Some(5), None), 5);
}

#[test]
fn identical_runs_are_byte_identical() {
    for name in ["coherence.eclc", "reciprocity.eclc", "accessibility.eclc"] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        for dir in [&a, &b] {
            let mut opts = options(dir.path(), Format::Both);
            opts.seed = Some(1234);
            capture(|out, err| cmd_run(&scenario(name), &opts, out, err));
        }
        for file in ["report.json", "per_world.csv", "trials.csv"] {
            assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{name}/{file}");
        }
    }
}

#[test]
fn fit_reads_two_column_csv() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "pi.csv", "kappa,pi\n0,1.0\n1,0.61\n2,0.19\n");
    let o = capture(|out, err| cmd_fit(&path, out, err));
    assert_eq!(o.status, ExitStatus::SUCCESS);
    assert!(o.out.starts_with("rate=0.76315"), "{}", o.out);
    let bad = write(&dir, "bad.csv", "0,1.0\n1,zero\n");
    assert_eq!(capture(|out, err| cmd_fit(&bad, out, err)).status, ExitStatus::FAILURE);
    let short = write(&dir, "short.csv", "0,1.0\n");
    assert_eq!(capture(|out, err| cmd_fit(&short, out, err)).status, ExitStatus::FAILURE);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_eclc");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code().unwrap();
    let valid = scenario("coherence.eclc");
    let valid = valid.to_str().unwrap();
    assert_eq!(status(&["validate", valid]), 0);
    assert_eq!(status(&["validate", "/nonexistent/file.eclc"]), 1);
    assert_eq!(status(&["frobnicate"]), 2);
    assert_eq!(status(&["run", valid, "--format", "xml"]), 2);
    let decoherence = scenario("decoherence.eclc");
    assert_eq!(status(&["prove", decoherence.to_str().unwrap(), "--sequent", "nope"]), 2);
    assert_eq!(status(&["prove", decoherence.to_str().unwrap(), "--sequent", "eq1"]), 0);
}
