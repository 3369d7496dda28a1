use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boson-lr"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("boson-lr-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn passing_config_exits_zero_and_writes_reports() {
    let out = scratch("pass");
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/moment_check.toml");
    let o = run(&cfg, &out, &["--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("moment-check:") && stdout.contains(" 0 failed"), "{stdout}");
    for f in ["moment-check.csv", "moment-check.json", "moment-check.manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn violated_bound_exits_one() {
    let out = scratch("fail");
    let cfg = out.join("tight.toml");
    std::fs::write(
        &cfg,
        "[lattice]\nkind = \"chain\"\ndims = [4]\n[basis]\ncutoff = 3\nsector = 4\n[model]\nj = 1.0\n\
         [constants]\nzeta0 = 1e-6\n[scenario]\nkind = \"moment-check\"\ntimes = [0.05]\norders = [1]\n\
         operator = { kind = \"projector-eq\", site = 0, value = 1 }\nstate = { kind = \"mott\", filling = 1 }\n",
    )
    .unwrap();
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn bad_config_exits_two_with_location() {
    let out = scratch("bad");
    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "[lattice]\nkind = \"chain\"\ndims = [3]\nsize = 2\n[basis]\ncutoff = 1\n[scenario]\nkind = \"fs-check\"\n")
        .unwrap();
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("size") && err.contains("line"), "{err}");
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn missing_file_exits_two() {
    let out = scratch("missing");
    let o = run(&out.join("nope.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(out).unwrap();
}
