use std::path::Path;
use std::process::{Command, Output};

use covert_core::bounds::covert_pe_lb;
use covert_core::ScenarioParams;

fn covert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covert")).args(args).env_remove("COVERT_THREADS").output().unwrap()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 6] = [
        (&["energy-limits", "--m-grid", "100,1000"], "m,ns_min,ns_max"),
        (&["covert-bound"], "m,fidelity_lb,pe_lb,log10_pe_lb,exponent"),
        (&["covert-curves", "--m-grid", "100"], "m,log10_pe_bound,log10_pe_tmsv,log10_pe_gcs"),
        (&["perfect-covert", "--nb-grid", "0.1,0.2"], "nb,chi_tmsv_qc,chi_tmsv_qb,chi_gcs_qc,chi_gcs_qb,ratio"),
        (&["heatmap", "--nb-grid", "0.2", "--m-grid", "10", "--eps-grid", "1e-3"], "nb,m,eps,fid_ratio,flag"),
        (&["oracle-check"], "s,q_gaussian,q_fock,rel_gap"),
    ];
    for (i, (args, header)) in cases.iter().enumerate() {
        let out = dir.path().join(format!("{i}.csv"));
        let mut a = args.to_vec();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = covert(&a);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(first_line(&out), *header);
    }
}

#[test]
fn covert_bound_matches_library() {
    let o = covert(&["covert-bound", "--eta", "0.01", "--nb", "0.2", "--eps", "1e-3", "--m", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let want = covert_pe_lb(&ScenarioParams::new(0.01, 0.2, 1000, 1e-3).unwrap()).unwrap();
    assert_eq!(row[0], "1000");
    assert_eq!(row[2].parse::<f64>().unwrap(), want.pe_lb);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn deterministic_and_thread_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["heatmap", "--nb-grid", "0.002,0.2", "--m-grid", "10,100", "--eps-grid", "1e-4:1e-1:log:4"];
    let mut bytes = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("h{i}.csv"));
        let mut a = args.to_vec();
        a.extend(["--threads", threads, "--out", out.to_str().unwrap()]);
        assert_eq!(covert(&a).status.code(), Some(0));
        bytes.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], bytes[2]);
    assert_eq!(String::from_utf8_lossy(&bytes[0]).lines().count(), 1 + 2 * 2 * 4);
}

#[test]
fn env_thread_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_covert"))
        .args(["covert-bound"])
        .env("COVERT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(covert(&["heatmap", "--m-grid", ""]).status.code(), Some(1));
    assert_eq!(covert(&["perfect-covert", "--nb-grid", "1:2:log"]).status.code(), Some(1));
    assert_eq!(covert(&["covert-bound", "--eta", "1.5"]).status.code(), Some(1));
    assert_eq!(covert(&["no-such-command"]).status.code(), Some(1));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "eta = 0.01\nnb_brightness = 2\n").unwrap();
    let o = covert(&["covert-bound", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nb_brightness") && err.contains("line 2"), "{err}");
    assert_eq!(covert(&["--help"]).status.code(), Some(0));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "eta = 0.05\nnb = 0.3\neps = 0.01\nm = 500\nformat = \"json\"\n").unwrap();
    let o = covert(&["covert-bound", "--config", cfg.to_str().unwrap(), "--m", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let want = covert_pe_lb(&ScenarioParams::new(0.05, 0.3, 2000, 0.01).unwrap()).unwrap();
    assert_eq!(v[0]["m"], 2000);
    assert_eq!(v[0]["pe_lb"].as_f64().unwrap(), want.pe_lb);
}

#[test]
fn solver_flags_exit_two_with_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("heat.csv");
    let o = covert(&[
        "heatmap", "--nb-grid", "0.2", "--m-grid", "10", "--eps-grid", "1e-3,0.5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().last().unwrap().ends_with(",vacuous"));
    let log = std::fs::read_to_string(dir.path().join("heat.csv.warnings.jsonl")).unwrap();
    let w: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(w["command"], "heatmap");
    assert_eq!(w["point"]["eps"], 0.5);
}

#[test]
fn gnuplot_layout_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pc.csv");
    let o = covert(&["perfect-covert", "--nb-grid", "0.2", "--gnuplot", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let dat = std::fs::read_to_string(dir.path().join("pc.dat")).unwrap();
    assert!(dat.starts_with("# nb chi_tmsv_qc"));
    assert_eq!(dat.lines().count(), 2);
}

#[test]
fn perfect_covert_interior_maximum() {
    let o = covert(&["perfect-covert", "--eta", "0.01", "--nb-grid", "0.01:20:log:60"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 60);
    let (i, best) = rows.iter().enumerate().max_by(|a, b| a.1[5].total_cmp(&b.1[5])).unwrap();
    assert!(i > 0 && i < 59);
    assert!((best[5] - 1.45).abs() < 0.05);
}
