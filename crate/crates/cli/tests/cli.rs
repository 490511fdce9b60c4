//! End-to-end runs of the library entry points and the binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use mirroropt_cli::config::{ExperimentConfig, VerifyConfig};
use mirroropt_cli::run::{cmd_run, file_sha256, Manifest, RunOverrides, BOUNDS_HEADER, MANIFEST, TRAJ_HEADER};
use mirroropt_cli::sigma::{cmd_sigma, sigma_for};
use mirroropt_cli::suite::{cmd_verify, Suite, VerifyOptions};

const MARKOV: &str = r#"
[problem]
kind = "markov"
m = 5
seed = 3

[geometry]
map = "neg_entropy"

[[rules]]
kind = "constant"
eta = 1.0

[run]
iterations = 1000
replicates = 100
record_every = 10
"#;

const SWEEP: &str = r#"
[problem]
kind = "linear_system"
n = 30
d = 6
seed = 1

[[rules]]
kind = "constant_sweep"
etas = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5]

[run]
iterations = 300
replicates = 10
record_every = 10
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mirroropt"))
}

#[test]
fn markov_run_writes_csvs_and_manifest_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "markov.toml", MARKOV);
    let mut digests = Vec::new();
    for sub in ["a", "b"] {
        let out = tmp.path().join(sub);
        let report = cmd_run(&cfg, &RunOverrides { out: Some(out.clone()), ..Default::default() }).unwrap();
        let m = Manifest::load(&out).unwrap();
        assert_eq!(m, report.manifest);
        let csvs: Vec<_> = m.files.keys().cloned().collect();
        assert_eq!(csvs.len(), 2, "{csvs:?}");
        assert!(csvs.iter().any(|f| f.starts_with("traj_00_")));
        assert!(csvs.iter().any(|f| f.starts_with("bounds_thm3_00_")));
        let traj = fs::read_to_string(out.join(&m.rules[0].file)).unwrap();
        assert_eq!(traj.lines().next().unwrap(), TRAJ_HEADER);
        assert_eq!(traj.lines().count(), 1 + 101);
        let bounds_file = m.rules[0].bounds.iter().find_map(|b| b.file.clone()).unwrap();
        let bounds = fs::read_to_string(out.join(bounds_file)).unwrap();
        assert_eq!(bounds.lines().next().unwrap(), BOUNDS_HEADER);
        for (name, hash) in &m.files {
            assert_eq!(&file_sha256(&out.join(name)).unwrap(), hash);
        }
        assert_eq!(m.seed, 0);
        assert_eq!(m.replicates, 100);
        assert_eq!(m.version, mirroropt_core::VERSION);
        digests.push((m.config_digest.clone(), m.files.clone()));
    }
    assert_eq!(digests[0], digests[1]);

    let out = tmp.path().join("c");
    let other = cmd_run(&cfg, &RunOverrides { out: Some(out), seed: Some(9), ..Default::default() }).unwrap();
    assert_ne!(other.manifest.config_digest, digests[0].0);
    assert_ne!(other.manifest.files, digests[0].1);
}

#[test]
fn stepsize_sweep_flags_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.toml", SWEEP);
    let out = tmp.path().join("out");
    let report = cmd_run(&cfg, &RunOverrides { out: Some(out.clone()), ..Default::default() }).unwrap();
    let rules = &report.manifest.rules;
    assert_eq!(rules.len(), 11);
    let traj = report.manifest.files.keys().filter(|f| f.starts_with("traj_")).count();
    assert_eq!(traj, 11);
    assert!(!rules[0].flagged);
    assert!(rules[10].flagged);
    assert_eq!(rules[10].diverged, 10);
    for r in rules {
        assert!(out.join(&r.file).exists());
        if r.flagged {
            assert!(r.bounds.iter().all(|b| b.file.is_none()));
        }
    }
}

#[test]
fn unsupported_pair_exits_nonzero_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MARKOV.replace("kind = \"markov\"\nm = 5\nseed = 3", "kind = \"linear_system\"\nn = 10\nd = 3\nseed = 1")
        + "\n[set]\nkind = \"reals\"\n";
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let output = bin()
        .args(["run", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr).to_lowercase();
    assert!(err.contains("neg") && err.contains("entropy"), "{err}");
    assert!(err.contains("reals"), "{err}");
}

#[test]
fn invalid_rule_is_rejected_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MARKOV.replace("kind = \"constant\"\neta = 1.0", "kind = \"smoothed_msps_max\"\nc = 1.0\ntau = 2.0");
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let out = tmp.path().join("out");
    let err = cmd_run(&cfg, &RunOverrides { out: Some(out.clone()), ..Default::default() }).unwrap_err();
    assert!(format!("{err:#}").contains("tau"));
    assert!(!out.exists());
}

#[test]
fn sigma_on_interpolating_system_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SWEEP.replace("etas = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5]", "etas = [0.1]");
    let cfg = write_config(tmp.path(), "sys.toml", &text);
    let r = cmd_sigma(&cfg).unwrap();
    assert!(r.sigma_sq.abs() < 1e-20, "{}", r.sigma_sq);
    assert!(r.sigma_sq_x.abs() < 1e-20);
    assert!(r.grad_norm_sq.abs() < 1e-20);
    assert!(r.interpolation.sigma_x_zero);
    assert!(r.interpolation.xstar_in_all_component_minima);
    assert!(!r.xstar_approximate);
}

fn quad1d(coeffs: &str, set: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        "[problem]\nkind = \"quad1d\"\ncoeffs = {coeffs}\nstrongly_convex = true\n\n{set}\n\
         [[rules]]\nkind = \"constant\"\neta = 0.1\n\n[run]\niterations = 10\nx_init = [1.0]\n"
    ))
    .unwrap()
}

#[test]
fn sigma_on_nonnegative_quadratics() {
    let cfg = quad1d(
        "[[1.0, 1.0, 0.0], [2.0, 3.0, 0.0], [0.5, 2.0, 0.0], [1.5, 0.5, 0.0]]",
        "[set]\nkind = \"nonneg\"\n",
    );
    let r = sigma_for(&cfg).unwrap();
    // f_i(x) = a x² + b x with a, b > 0: x* = 0, inf over R is −b²/(4a).
    let oracle: f64 = [(1.0, 1.0), (2.0, 3.0), (0.5, 2.0), (1.5, 0.5)]
        .iter()
        .map(|(a, b): &(f64, f64)| b * b / (4.0 * a))
        .sum::<f64>()
        / 4.0;
    let grad: f64 = [1.0f64, 3.0, 2.0, 0.5].iter().map(|b| b * b).sum::<f64>() / 4.0;
    assert!((r.sigma_sq - oracle).abs() < 1e-14, "{} vs {oracle}", r.sigma_sq);
    assert_eq!(r.sigma_sq_x, 0.0);
    assert!((r.grad_norm_sq - grad).abs() < 1e-14);
    assert!(r.interpolation.sigma_x_zero && r.interpolation.xstar_in_all_component_minima);
}

#[test]
fn sigma_with_concave_member_on_box() {
    let cfg = quad1d(
        "[[-1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [1.0, 0.0, 0.0]]",
        "[set]\nkind = \"box\"\nlo = [0.0]\nhi = [1.0]\n",
    );
    let r = sigma_for(&cfg).unwrap();
    assert_eq!(r.sigma_sq, f64::INFINITY);
    assert_eq!(r.sigma_sq_x, 0.0);
    assert!(r.interpolation.sigma_x_zero);
}

#[test]
fn sigma_without_optimum_explains_what_to_do() {
    let cfg = ExperimentConfig::from_toml(
        "[problem]\nkind = \"logistic\"\n\n[problem.synthetic]\nn = 40\nd = 3\nmargin = 0.1\nseed = 1\n\n\
         [[rules]]\nkind = \"constant\"\neta = 0.1\n\n[run]\niterations = 10\n",
    )
    .unwrap();
    let err = format!("{:#}", sigma_for(&cfg).unwrap_err());
    assert!(err.contains("reference_iterations"), "{err}");
}

#[test]
fn verify_refuses_stale_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let opts = VerifyOptions { out: Some(out.clone()), ..Default::default() };
    let results = cmd_verify(Suite::Properties, &opts, true).unwrap();
    assert!(results.iter().all(|r| r.passed));
    cmd_verify(Suite::Properties, &opts, true).unwrap();

    let reseeded = VerifyOptions { seed: 5, ..opts.clone() };
    let err = cmd_verify(Suite::Properties, &reseeded, true).unwrap_err();
    assert!(err.to_string().contains("config digest"), "{err}");

    let mut m = Manifest::load(&out).unwrap();
    let original = m.clone();
    m.version = "0.0.0-old".into();
    m.write(&out).unwrap();
    let err = cmd_verify(Suite::Properties, &opts, true).unwrap_err();
    assert!(err.to_string().contains("version"), "{err}");

    original.write(&out).unwrap();
    m = original.clone();
    m.files.insert("extra.csv".into(), "00".into());
    fs::write(out.join("extra.csv"), "t\n1\n").unwrap();
    m.write(&out).unwrap();
    let err = cmd_verify(Suite::Properties, &opts, true).unwrap_err();
    assert!(err.to_string().contains("extra.csv"), "{err}");
}

#[test]
fn verify_negative_control_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let overrides = write_config(tmp.path(), "verify.toml", "[verify]\nthm7_c = 0.1\n");
    let output = bin()
        .args(["verify", "theorems", "--config"])
        .arg(&overrides)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("[FAIL] criterion  4"), "{stdout}");
    assert!(stdout.contains("c >= 1"), "{stdout}");
    assert_eq!(VerifyConfig::load(&overrides).unwrap().thm7_c, Some(0.1));
}

#[test]
fn sample_configs_parse_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn run_binary_reports_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "markov.toml", &MARKOV.replace("replicates = 100", "replicates = 5"));
    let out = tmp.path().join("out");
    let output = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains(MANIFEST));
    assert_eq!(Manifest::load(&out).unwrap().replicates, 5);
}
