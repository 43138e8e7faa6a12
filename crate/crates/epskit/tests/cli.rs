//! Black-box tests of the command-line interface: exit codes, error
//! wording, flag overrides, and the simulate → analyze round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn paper_cfg() -> String {
    workspace_root()
        .join("paper.cfg")
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epskit"))
        .current_dir(workspace_root())
        .args(args)
        .output()
        .unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn design_succeeds_and_reports_the_headline_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "design",
        "--config",
        &paper_cfg(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(
        text.contains("[phase matching]"),
        "missing section in:\n{text}"
    );
    assert!(
        text.contains("790.788285"),
        "signal wavelength missing in:\n{text}"
    );
    assert!(
        text.contains("1549.681514"),
        "idler wavelength missing in:\n{text}"
    );
    assert!(tmp.path().join("design_report.txt").is_file());
}

#[test]
fn unknown_config_key_is_a_config_error_named_in_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(workspace_root().join("paper.cfg")).unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, format!("pumq = 1\n{text}")).unwrap();
    let out = run(&["design", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(
        err.contains("pumq"),
        "stderr does not name the bad key: {err}"
    );
}

#[test]
fn missing_section_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.cfg");
    std::fs::write(&empty, "").unwrap();
    let out = run(&["design", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("pump"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn set_override_with_unknown_key_is_rejected() {
    let out = run(&["design", "--config", &paper_cfg(), "--set", "pump.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_of(&out).contains("bogus"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn set_override_without_equals_is_rejected() {
    let out = run(&["design", "--config", &paper_cfg(), "--set", "pump.power_mw"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unmatchable_poling_period_is_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "design",
        "--config",
        &paper_cfg(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "crystal.poling_period_um=0.5",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("phase"),
        "stderr should describe the matching failure: {}",
        stderr_of(&out)
    );
}

#[test]
fn analyze_of_header_only_csv_is_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("empty.csv");
    std::fs::write(
        &csv,
        "theta_s_deg,theta_i_deg,duration_s,Ns_hz,Ni_hz,N_hz,bg_subtracted,seed\n",
    )
    .unwrap();
    let out = run(&[
        "analyze",
        "--config",
        &paper_cfg(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        &format!("analyze.records_csv={}", csv.to_str().unwrap()),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("no records"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = run(&["design", "--config", "/nonexistent/nowhere.cfg"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn usage_errors_exit_with_the_config_code() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["design"]); // --config is required
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn set_override_changes_the_design() {
    let tmp = tempfile::tempdir().unwrap();
    let base = run(&[
        "design",
        "--config",
        &paper_cfg(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let hot = run(&[
        "design",
        "--config",
        &paper_cfg(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "crystal.temperature_c=111.5",
    ]);
    assert_eq!(base.status.code(), Some(0));
    assert_eq!(hot.status.code(), Some(0), "stderr: {}", stderr_of(&hot));
    assert_ne!(
        stdout_of(&base),
        stdout_of(&hot),
        "temperature override had no effect"
    );
}

#[test]
fn seed_flag_changes_simulated_counts_but_not_the_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for (dir, seed) in [(&out_a, "1"), (&out_b, "2")] {
        let out = run(&[
            "simulate",
            "--config",
            &paper_cfg(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    let a = std::fs::read_to_string(out_a.join("correlation_scan.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("correlation_scan.csv")).unwrap();
    assert_ne!(a, b, "different seeds must draw different counts");
    assert_eq!(a.lines().count(), b.lines().count());
    assert_eq!(
        a.lines().next(),
        b.lines().next(),
        "header must not depend on the seed"
    );
}

#[test]
fn simulate_then_analyze_recovers_the_configured_visibilities() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap().to_string();
    let sim = run(&[
        "simulate",
        "--config",
        &paper_cfg(),
        "--out",
        &out_dir,
        "--seed",
        "11",
    ]);
    assert_eq!(sim.status.code(), Some(0), "stderr: {}", stderr_of(&sim));

    let csv = tmp.path().join("correlation_scan.csv");
    let ana = run(&[
        "analyze",
        "--config",
        &paper_cfg(),
        "--out",
        &out_dir,
        "--set",
        &format!("analyze.records_csv={}", csv.to_str().unwrap()),
    ]);
    assert_eq!(ana.status.code(), Some(0), "stderr: {}", stderr_of(&ana));
    let report = std::fs::read_to_string(tmp.path().join("analysis_report.txt")).unwrap();

    // configured per-basis visibilities, in idler-setting order 0/45/90/135
    let configured = [0.988, 0.955, 0.986, 0.954];
    let mut seen = 0;
    for line in report.lines() {
        let Some(rest) = line.trim_start().strip_prefix("idler at ") else {
            continue;
        };
        if !rest.contains("visibility") {
            continue;
        }
        let value_part = rest.split_once("visibility").unwrap().1;
        let mut nums = value_part
            .split_whitespace()
            .filter_map(|tok| tok.parse::<f64>().ok());
        let est = nums.next().unwrap();
        let unc = nums.next().unwrap();
        let want = configured[seen];
        assert!(
            (est - want).abs() < 5.0 * unc + 1e-3,
            "basis {seen}: estimated {est} ± {unc}, configured {want}"
        );
        seen += 1;
    }
    assert_eq!(seen, 4, "expected four visibility rows in:\n{report}");
}

#[test]
fn analyze_of_the_canonical_settings_reports_a_bell_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().to_str().unwrap().to_string();
    let sim = run(&[
        "simulate",
        "--config",
        &paper_cfg(),
        "--out",
        &out_dir,
        "--seed",
        "3",
    ]);
    assert_eq!(sim.status.code(), Some(0), "stderr: {}", stderr_of(&sim));

    let csv = tmp.path().join("chsh_counts.csv");
    let ana = run(&[
        "analyze",
        "--config",
        &paper_cfg(),
        "--out",
        &out_dir,
        "--set",
        &format!("analyze.records_csv={}", csv.to_str().unwrap()),
    ]);
    assert_eq!(ana.status.code(), Some(0), "stderr: {}", stderr_of(&ana));
    let report = std::fs::read_to_string(tmp.path().join("analysis_report.txt")).unwrap();
    let s_line = report
        .lines()
        .find(|l| l.trim_start().starts_with("S "))
        .unwrap_or_else(|| panic!("no S row in:\n{report}"));
    let s: f64 = s_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((2.6..2.85).contains(&s), "implausible S in: {s_line}");
}
