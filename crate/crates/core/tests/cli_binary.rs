//! The `distla` binary end to end: outputs, exit codes, both backends.

use std::io::Write;
use std::process::{Command, Output};

fn distla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distla"))
        .args(args)
        .env_remove("DISTLA_RENDEZVOUS")
        .env_remove("DISTLA_WORKER_KEY")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn table(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn eigen_of_tridiagonal_matches_closed_form() {
    // Eigenvalues 3 - sqrt(3), 3, 3 + sqrt(3).
    let f = table("4 1 0\n1 3 1\n0 1 2\n");
    let path = f.path().to_str().unwrap();
    for backend in ["local", "tcp"] {
        let out = stdout(&distla(&["--ranks", "2", "--backend", backend, "eigen", "--file", path]));
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(&lines[..3], ["values", "1 x 3 [d]", "1.26795 3 4.73205"]);
        assert_eq!(lines[3], "vectors");
        assert_eq!(lines[4], "3 x 3 [d]");
    }
}

#[test]
fn print_is_identical_across_ranks_and_backends() {
    let f = table("a,b,c\n1,2.5,-3\n1e10,0,7\n");
    let path = f.path().to_str().unwrap();
    let want = "2 x 3 [d]\n1 2.5 -3\n1e+10 0 7\n";
    for (ranks, backend) in [("1", "local"), ("3", "local"), ("4", "tcp")] {
        let out = distla(&["--ranks", ranks, "--backend", backend, "print", "--file", path, "--comma", "--header"]);
        assert_eq!(stdout(&out), want);
    }
}

#[test]
fn pca_reports_sdev_rotation_and_center() {
    let f = table("1 2\n3 3\n5 7\n2 2\n");
    let out = stdout(&distla(&["--ranks", "2", "pca", "--file", f.path().to_str().unwrap()]));
    let sections: Vec<&str> = out.lines().filter(|l| l.chars().all(|c| c.is_ascii_lowercase())).collect();
    assert_eq!(sections, ["sdev", "rotation", "center"]);
    assert!(out.contains("center\n1 x 2 [d]\n2.75 3.5\n"), "{out}");
    let no_center = stdout(&distla(&["pca", "--no-center", "--file", f.path().to_str().unwrap()]));
    assert!(!no_center.contains("center"));
}

#[test]
fn failures_exit_nonzero() {
    for backend in ["local", "tcp"] {
        let o = distla(&["--ranks", "2", "--backend", backend, "print", "--file", "/nonexistent/x.txt"]);
        assert!(!o.status.success(), "{backend}");
        assert!(o.stdout.is_empty());
    }
    let ragged = table("1 2\n3\n");
    let o = distla(&["--ranks", "2", "print", "--file", ragged.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = distla(&["--ranks", "3", "--grid", "2x2", "bench", "gemm", "--n", "4"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("needs 4 ranks"));
    assert!(!distla(&["bench", "solve"]).status.success());
}

#[test]
fn explicit_grids_and_repeat() {
    for grid in ["1x4", "2x2", "4x1"] {
        let out = stdout(&distla(&["--ranks", "4", "--grid", grid, "--repeat", "2", "bench", "solve", "--n", "16"]));
        let row = out.lines().nth(1).unwrap();
        assert!(row.starts_with(&format!("solve,16,4,{grid},")), "{row}");
    }
}

#[test]
fn bench_pca_reads_files() {
    let f = table("x,y\n1,0\n0,1\n2,2\n3,1\n");
    let out = stdout(&distla(&["--ranks", "2", "bench", "pca", "--file", f.path().to_str().unwrap(), "--comma", "--header"]));
    assert!(out.lines().nth(1).unwrap().starts_with("pca,4x2,2,"), "{out}");
}
