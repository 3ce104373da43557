//! End-to-end checks of the command-line surface: the generate / mask /
//! noise / complete / evaluate pipeline, sweep report shapes, the exit-code
//! contract, and manifest-driven bit-identical reruns.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lrfmtc"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().expect("spawn").status.code().unwrap_or(-1)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_complete_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.dt3");
    let mask = dir.path().join("mask.dt3");
    let noisy = dir.path().join("noisy.dt3");
    let completed = dir.path().join("completed.dt3");

    run_ok(&[
        "generate",
        "--dims", "16,16,16",
        "--rank", "2,2,2",
        "--seed", "5",
        "-o", path_str(&truth),
    ]);
    assert!(truth.exists());
    assert!(dir.path().join("truth.dt3.model.core.dt3").exists());
    assert!(dir.path().join("truth.dt3.model.u1.dt3").exists());

    run_ok(&[
        "mask",
        "--dims", "16,16,16",
        "--sampling-ratio", "0.5",
        "--seed", "6",
        "-o", path_str(&mask),
    ]);
    run_ok(&[
        "noise",
        "--input", path_str(&truth),
        "--kind", "gaussian",
        "--snr-db", "20",
        "--seed", "7",
        "-o", path_str(&noisy),
    ]);

    let out = run_ok(&[
        "complete",
        "--method", "lrfmtc",
        "--input", path_str(&noisy),
        "--mask", path_str(&mask),
        "--alpha", "8",
        "--components", "12",
        "--max-outer", "60",
        "--seed", "8",
        "-o", path_str(&completed),
    ]);
    assert!(out.contains("estimated rank [2, 2, 2]"), "stdout: {out}");
    assert!(completed.exists());
    assert!(dir.path().join("completed.dt3.model.core.dt3").exists());
    assert!(dir.path().join("completed.dt3.report.csv").exists());
    assert!(dir.path().join("completed.dt3.manifest.txt").exists());

    // Evaluate the completion against the noiseless truth.
    let csv = dir.path().join("scores.csv");
    let out = run_ok(&[
        "evaluate",
        "--truth", path_str(&truth),
        "--estimate", path_str(&completed),
        "--csv", path_str(&csv),
    ]);
    assert!(out.contains("rse="), "stdout: {out}");
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("rse,psnr,ssim\n"));

    // A perfect estimate scores rse 0 and infinite psnr.
    let out = run_ok(&[
        "evaluate",
        "--truth", path_str(&truth),
        "--estimate", path_str(&truth),
    ]);
    assert!(out.contains("rse=0 "), "stdout: {out}");
    assert!(out.contains("psnr=inf"), "stdout: {out}");
}

#[test]
fn manifest_rerun_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("t.dt3");
    let mask = dir.path().join("m.dt3");
    run_ok(&[
        "generate", "--dims", "12,12,12", "--rank", "2,2,2", "--seed", "1",
        "-o", path_str(&truth),
    ]);
    run_ok(&[
        "mask", "--dims", "12,12,12", "--sampling-ratio", "0.6", "--seed", "2",
        "-o", path_str(&mask),
    ]);

    let first = dir.path().join("first.dt3");
    run_ok(&[
        "complete",
        "--input", path_str(&truth),
        "--mask", path_str(&mask),
        "--alpha", "4",
        "--components", "8",
        "--max-outer", "30",
        "--seed", "3",
        "-o", path_str(&first),
    ]);

    // Rerun purely from the manifest the first run wrote.
    let manifest = dir.path().join("first.dt3.manifest.txt");
    let second = dir.path().join("second.dt3");
    run_ok(&[
        "complete",
        "--input", path_str(&truth),
        "--mask", path_str(&mask),
        "--config", path_str(&manifest),
        "-o", path_str(&second),
    ]);

    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b, "manifest rerun produced different bytes");
}

#[test]
fn sweep_report_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    std::fs::write(
        &grid,
        "dims=10,10,10\nranks=1,1,1;2,2,2\nsampling_ratios=0.6\nsnr_dbs=none\n\
         methods=lrfmtc\nalphas=1\ncomponents=6\nmax_outer=20\nseed=4\n",
    )
    .unwrap();
    let report = dir.path().join("report.csv");
    run_ok(&[
        "sweep",
        "--grid", path_str(&grid),
        "--trials", "2",
        "-o", path_str(&report),
    ]);

    let agg = std::fs::read_to_string(&report).unwrap();
    // Header plus one row per cell.
    assert_eq!(agg.lines().count(), 1 + 2, "aggregated rows:\n{agg}");
    let trials = std::fs::read_to_string(dir.path().join("report.trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 4, "trial rows:\n{trials}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown arguments are argument errors.
    assert_eq!(exit_code(&["generate", "--bogus"]), 2);
    // Invalid rank triple.
    let out = dir.path().join("x.dt3");
    assert_eq!(
        exit_code(&[
            "generate", "--dims", "4,4,4", "--rank", "9,9,9", "--seed", "0",
            "-o", path_str(&out),
        ]),
        2
    );

    // Corrupt tensor files are format errors.
    let bad = dir.path().join("bad.dt3");
    std::fs::write(&bad, b"not a tensor at all").unwrap();
    assert_eq!(
        exit_code(&["evaluate", "--truth", path_str(&bad), "--estimate", path_str(&bad)]),
        3
    );

    // Help exits cleanly.
    assert_eq!(exit_code(&["--help"]), 0);
}

#[test]
fn mask_and_block_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("block.dt3");
    let out = run_ok(&[
        "mask",
        "--dims", "12,12,12",
        "--sampling-ratio", "0.6",
        "--kind", "block",
        "--block-len", "3",
        "--mode", "2",
        "--seed", "9",
        "-o", path_str(&mask),
    ]);
    // ceil(0.6 * 1728) = 1037 observed.
    assert!(out.contains("1037 of 1728"), "stdout: {out}");
}
