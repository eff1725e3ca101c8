use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn svarlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svarlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SVARLAB_OUT_DIR")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_lists_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = svarlab(&["--help"], tmp.path());
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["simulate", "indexes", "estimate", "identify", "irf", "hd", "girf", "lp", "run"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    for flag in ["--seed", "--out-dir", "--threads", "--verbose"] {
        assert!(text.contains(flag));
    }
}

#[test]
fn subcommands_chain_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&svarlab(&["--out-dir", "o", "--seed", "3", "simulate", "--t", "120", "--shocks-out", "true.csv"], d));
    assert!(d.join("o/data.csv").exists() && d.join("o/true.csv").exists());
    ok(&svarlab(
        &["--threads", "1", "estimate", "--data", "o/data.csv", "--lags", "1", "--draws", "120", "--out", "post"],
        d,
    ));
    ok(&svarlab(
        &[
            "identify", "--posterior", "post", "--accepted", "20", "--max-tries", "500", "--out", "ds",
            "--data", "o/data.csv", "--shocks-out", "shocks.csv",
        ],
        d,
    ));
    ok(&svarlab(&["irf", "--posterior", "post", "--drawset", "ds", "--horizon", "6"], d));
    ok(&svarlab(&["hd", "--posterior", "post", "--drawset", "ds", "--data", "o/data.csv"], d));
    ok(&svarlab(&["girf", "--posterior", "post", "--horizon", "6"], d));
    ok(&svarlab(
        &[
            "lp", "--data", "shocks.csv", "--data", "o/data.csv", "--y", "core_infl", "--shock", "gas", "--z",
            "confidence", "--horizons", "4", "--nw", "3",
        ],
        d,
    ));
    let irf = fs::read_to_string(d.join("irf.csv")).unwrap();
    assert!(irf.starts_with("variable,shock,horizon,median,lo,hi\n"));
    // 5 variables x 5 shocks x 7 horizons
    assert_eq!(irf.lines().count(), 1 + 5 * 5 * 7);
    let lp = fs::read_to_string(d.join("lp.csv")).unwrap();
    assert_eq!(lp.lines().count(), 1 + 5);
    assert!(d.join("hd.csv").exists() && d.join("girf.csv").exists());
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&svarlab(&["--seed", "8", "simulate", "--t", "60", "--out", "a.csv"], d));
    ok(&svarlab(&["--seed", "8", "simulate", "--t", "60", "--out", "b.csv"], d));
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
}

#[test]
fn run_honors_out_dir_override() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("p.toml"), "seed = 2\nout_dir = \"ignored\"\n[[stage]]\nname = \"sim\"\nkind = \"simulate\"\nt = 50\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_svarlab"))
        .args(["run", "p.toml"])
        .current_dir(d)
        .env("SVARLAB_OUT_DIR", d.join("elsewhere"))
        .output()
        .unwrap();
    ok(&out);
    assert!(d.join("elsewhere/manifest.txt").exists());
    assert!(!d.join("ignored").exists());
}

#[test]
fn failures_exit_nonzero_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = svarlab(&["estimate", "--data", "missing.csv"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    fs::write(d.join("p.toml"), "seed = 2\n[[stage]]\nname = \"fit\"\nkind = \"estimate\"\ndata = [\"gone.csv\"]\n").unwrap();
    let out = svarlab(&["run", "p.toml"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `fit`"));
    assert!(d.join("out/FAILED").exists());
}
