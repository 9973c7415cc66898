use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use neurodeck::neeg::{read_epochs, write_epochs, DATA_FILE};
use neurodeck::provenance::Provenance;
use neurodeck::PipelineConfig;
use neurodeck_core::dataset::TrialCounts;
use tempfile::TempDir;

fn neurodeck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurodeck"))
        .args(args)
        .env_remove("NEURODECK_THREADS")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn small_config(dir: &Path) -> PathBuf {
    let mut cfg = PipelineConfig::default();
    cfg.synthetic.trials = TrialCounts {
        mi: 10,
        vi: 10,
        si: 40,
    };
    cfg.build.per_class = Some(40);
    cfg.train.iterations = 2;
    cfg.train.eval_every = 1;
    cfg.train.batch_size = 16;
    cfg.protocol_runs = 2;
    let path = dir.join("small.json");
    cfg.save(&path).unwrap();
    path
}

struct Shared {
    _tmp: TempDir,
    config: PathBuf,
    run: PathBuf,
}

/// One full run shared by the read-only checks below.
fn shared() -> &'static Shared {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    SHARED.get_or_init(|| {
        let tmp = TempDir::new().unwrap();
        let config = small_config(tmp.path());
        let run = tmp.path().join("run");
        let out = neurodeck(&[
            "full-run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            run.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        Shared {
            _tmp: tmp,
            config,
            run,
        }
    })
}

fn copy_tree(src: &Path, dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for e in fs::read_dir(src).unwrap() {
        let p = e.unwrap().path();
        let target = dst.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_tree(&p, &target);
        } else {
            fs::copy(&p, &target).unwrap();
        }
    }
}

#[test]
fn full_run_writes_a_verifiable_tree() {
    let s = shared();
    for f in [
        "config.json",
        "index.json",
        "report/summary.json",
        "report/summary.csv",
        "train/tinn/report.json",
        "train/tinn/run1.ndk",
        "train/fbcsp/run2.fbcsp.json",
        "analysis/analysis.json",
        "epochs/manifest.json",
    ] {
        assert!(s.run.join(f).is_file(), "missing {f}");
    }
    let out = neurodeck(&["verify", "--dir", s.run.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: "));
}

#[test]
fn verify_detects_tampering() {
    let s = shared();
    let tmp = TempDir::new().unwrap();
    let copy = tmp.path().join("run");
    copy_tree(&s.run, &copy);
    let csv = fs::read_dir(copy.join("analysis"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .unwrap();
    let mut text = fs::read_to_string(&csv).unwrap();
    text.push_str("extra,0,0,0,false\n");
    fs::write(&csv, text).unwrap();
    assert_eq!(
        code(&neurodeck(&["verify", "--dir", copy.to_str().unwrap()])),
        3
    );
}

#[test]
fn dry_run_prints_the_plan_and_writes_nothing() {
    let s = shared();
    let tmp = TempDir::new().unwrap();
    let target = tmp.path().join("never");
    let out = neurodeck(&[
        "full-run",
        "--config",
        s.config.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
        "--dry-run",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for stage in ["generate", "preprocess", "analyze", "train", "report"] {
        assert!(text.contains(stage), "{stage} missing from plan:\n{text}");
    }
    assert!(!target.exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&PipelineConfig::default().to_json()).unwrap();
    value["surprise"] = serde_json::json!(1);
    fs::write(&path, value.to_string()).unwrap();
    let out = neurodeck(&["full-run", "--config", path.to_str().unwrap(), "--dry-run"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("surprise"));

    value = serde_json::from_str(&PipelineConfig::default().to_json()).unwrap();
    value["protocol_runs"] = serde_json::json!(0);
    fs::write(&path, value.to_string()).unwrap();
    assert_eq!(
        code(&neurodeck(&[
            "full-run",
            "--config",
            path.to_str().unwrap(),
            "--dry-run"
        ])),
        2
    );

    assert_eq!(code(&neurodeck(&["train", "--model", "tinn"])), 2);
    assert_eq!(
        code(&neurodeck(&[
            "analyze", "--epochs", "x", "--out", "y", "--bands", "kappa"
        ])),
        2
    );
}

#[test]
fn truncated_data_exits_3() {
    let s = shared();
    let tmp = TempDir::new().unwrap();
    let epochs = tmp.path().join("epochs");
    copy_tree(&s.run.join("epochs"), &epochs);
    let data = epochs.join(DATA_FILE);
    let bytes = fs::read(&data).unwrap();
    fs::write(&data, &bytes[..bytes.len() - 6]).unwrap();
    let out = neurodeck(&[
        "train",
        "--config",
        s.config.to_str().unwrap(),
        "--model",
        "fbcsp",
        "--data",
        epochs.to_str().unwrap(),
        "--out",
        tmp.path().join("t").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bytes"));
    assert_eq!(
        code(&neurodeck(&[
            "preprocess",
            "--raw",
            tmp.path().join("missing").to_str().unwrap(),
            "--out",
            tmp.path().join("o").to_str().unwrap()
        ])),
        3
    );
}

#[test]
fn non_finite_data_exits_4_after_writing_reports() {
    let s = shared();
    let tmp = TempDir::new().unwrap();
    let (mut set, _) = read_epochs(&s.run.join("epochs")).unwrap();
    set.data.iter_mut().step_by(101).for_each(|v| *v = f64::NAN);
    let dir = tmp.path().join("nan");
    write_epochs(&dir, &set, Provenance::new("test", 0)).unwrap();
    let out_dir = tmp.path().join("t");
    let out = neurodeck(&[
        "train",
        "--config",
        s.config.to_str().unwrap(),
        "--model",
        "tinn",
        "--data",
        dir.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["protocol"]["runs"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["diverged"] == true));
}

#[test]
fn seed_flag_changes_generated_data() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let spec = tmp.path().join("spec.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    value["synthetic"]["trials"] = serde_json::json!({"mi": 1, "vi": 1, "si": 1});
    fs::write(&spec, value["synthetic"].to_string()).unwrap();
    let run = |seed: &str, out: &str| {
        let dir = tmp.path().join(out);
        let o = neurodeck(&[
            "--seed",
            seed,
            "generate",
            "--config",
            cfg.to_str().unwrap(),
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.join("synthetic-01_mi").join(DATA_FILE)).unwrap()
    };
    let (a, b, c) = (run("1", "a"), run("1", "b"), run("2", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
