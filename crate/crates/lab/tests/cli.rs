use std::process::Command;

fn ergolab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ergolab"));
    c.env("ERGOLAB_THREADS", "2");
    c
}

#[test]
fn list_names_every_experiment() {
    let out = ergolab().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in ergolab_lab::registry() {
        assert!(text.contains(e.name), "{} missing", e.name);
    }
    let out = ergolab().args(["list", "--defaults", "runlength"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("experiment = \"runlength\"") && text.contains("n_max = 10000000"));
}

#[test]
fn run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "experiment = \"runlength\"\nensemble = 20\n").unwrap();
    let out = ergolab()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--n-max", "20000", "--set", "seed=3", "-o"])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("runlength"));
    let manifest = dir.path().join("run/manifest.json");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(m["experiments"][0]["config"]["values"]["seed"], 3);
    assert_eq!(code == 0, m["pass"] == true);

    let out = ergolab().arg("replay").arg(&manifest).arg("-o").arg(dir.path().join("again")).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("replay identical"));
}

#[test]
fn errors_exit_with_two() {
    for args in [vec!["run", "no-such-experiment"], vec!["run", "runlength", "--set", "bogus=1"], vec!["run"]] {
        let out = ergolab().args(&args).arg("-o").arg(std::env::temp_dir().join("ergolab-never")).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
