//! CLI acceptance: every subcommand with a fixed seed produces
//! byte-identical output across two runs, and exit codes follow the
//! 0/1/2 contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_wavegcn")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

/// Runs one command in two fresh directories (after `setup` populated each)
/// and asserts stdout plus every listed output file match byte for byte.
fn assert_deterministic(setup: &dyn Fn(&Path), args: &[&str], outputs: &[&str], what: &str) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    setup(a.path());
    setup(b.path());
    let out_a = run_in(a.path(), args);
    let out_b = run_in(b.path(), args);
    assert_ok(&out_a, what);
    assert_ok(&out_b, what);
    assert_eq!(
        out_a.stdout, out_b.stdout,
        "{what}: stdout differs between runs"
    );
    for name in outputs {
        assert_eq!(
            read(a.path(), name),
            read(b.path(), name),
            "{what}: output file {name} differs between runs"
        );
    }
}

fn gen_dataset(dir: &Path) {
    let out = run_in(
        dir,
        &[
            "gen-planted",
            "--nodes",
            "60",
            "--communities",
            "2",
            "--p-in",
            "0.15",
            "--p-out",
            "0.01",
            "--seed",
            "7",
            "--out-prefix",
            "data",
        ],
    );
    assert_ok(&out, "gen-planted setup");
}

#[test]
fn criterion_10_cli_determinism() {
    assert_deterministic(
        &|_| {},
        &[
            "gen-planted",
            "--nodes",
            "60",
            "--communities",
            "2",
            "--p-in",
            "0.15",
            "--p-out",
            "0.01",
            "--seed",
            "7",
            "--out-prefix",
            "data",
        ],
        &["data.graph.txt", "data.features.txt", "data.labels.txt"],
        "gen-planted",
    );

    assert_deterministic(
        &gen_dataset,
        &[
            "transform",
            "--graph",
            "data.graph.txt",
            "--features",
            "data.features.txt",
            "--levels",
            "3",
            "--seed",
            "5",
            "--out",
            "p.txt",
        ],
        &["p.txt", "p.txt.layout"],
        "transform",
    );

    let compress_then_reconstruct = |dir: &Path| {
        gen_dataset(dir);
        let out = run_in(
            dir,
            &[
                "compress",
                "--graph",
                "data.graph.txt",
                "--features",
                "data.features.txt",
                "--alpha",
                "0.25",
                "--seed",
                "5",
                "--out",
                "c.txt",
            ],
        );
        assert_ok(&out, "compress setup");
    };
    assert_deterministic(
        &compress_then_reconstruct,
        &["reconstruct", "--dense", "c.txt", "--out", "r.txt"],
        &["r.txt", "c.txt", "c.txt.idx", "c.txt.hier"],
        "compress + reconstruct",
    );

    assert_deterministic(
        &gen_dataset,
        &[
            "mse-sweep",
            "--graph",
            "data.graph.txt",
            "--channels",
            "4",
            "--seed",
            "3",
            "--out",
            "sweep.csv",
        ],
        &["sweep.csv"],
        "mse-sweep",
    );

    assert_deterministic(
        &gen_dataset,
        &[
            "train",
            "--graph",
            "data.graph.txt",
            "--features",
            "data.features.txt",
            "--labels",
            "data.labels.txt",
            "--alpha",
            "0.5",
            "--epochs",
            "40",
            "--hidden",
            "8",
            "--seed",
            "1",
            "--out",
            "model.txt",
        ],
        &["model.txt", "model.txt.trace.csv"],
        "train",
    );

    let train_then_infer = |dir: &Path| {
        gen_dataset(dir);
        let out = run_in(
            dir,
            &[
                "train",
                "--graph",
                "data.graph.txt",
                "--features",
                "data.features.txt",
                "--labels",
                "data.labels.txt",
                "--alpha",
                "0.5",
                "--epochs",
                "40",
                "--hidden",
                "8",
                "--seed",
                "1",
                "--out",
                "model.txt",
            ],
        );
        assert_ok(&out, "train setup");
    };
    assert_deterministic(
        &train_then_infer,
        &[
            "infer",
            "--model",
            "model.txt",
            "--graph",
            "data.graph.txt",
            "--features",
            "data.features.txt",
            "--labels",
            "data.labels.txt",
            "--out",
            "logits.txt",
        ],
        &["logits.txt"],
        "infer",
    );

    assert_deterministic(
        &train_then_infer,
        &[
            "report-compression",
            "--model",
            "model.txt",
            "--nodes",
            "60",
            "--out",
            "report.csv",
        ],
        &["report.csv"],
        "report-compression",
    );

    println!("ACCEPTANCE 10 cli-determinism: PASS");
}

#[test]
fn exit_codes_follow_contract() {
    let dir = tempfile::tempdir().unwrap();

    // Usage error: unknown subcommand / missing required flag.
    let out = run_in(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["transform"]);
    assert_eq!(out.status.code(), Some(1));

    // Help and version are not errors.
    let out = run_in(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));

    // Data error: malformed graph file (self-loop) exits 2 and names the line.
    std::fs::write(dir.path().join("bad.graph.txt"), "3 2\n0 0\n1 2\n").unwrap();
    std::fs::write(dir.path().join("f.txt"), "3 1\n1\n2\n3\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "transform",
            "--graph",
            "bad.graph.txt",
            "--features",
            "f.txt",
            "--out",
            "p.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("self-loop at line 2"),
        "stderr was: {stderr}"
    );

    // Missing file is also a data error.
    let out = run_in(
        dir.path(),
        &[
            "transform",
            "--graph",
            "missing.txt",
            "--features",
            "f.txt",
            "--out",
            "p.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
