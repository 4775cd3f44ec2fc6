use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use namescarcity_cli::exit;
use tempfile::TempDir;

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_namescarcity")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

const CONFIG: &str = "\
n_people = 1200
n_groups = 4
nepotism_rate.G01 = 0.4
female_fraction = 0.4
regions = Lombardy, Lazio, Calabria, Sicily
seed = 5
";

/// Temp dir holding `cfg.txt` and a generated `sim/roster.csv`.
fn simulated() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.txt"), CONFIG).unwrap();
    let out = bin(&["simulate", "--config", "cfg.txt", "--common-names", "400", "--out-dir", "sim"], dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn simulate_is_reproducible() {
    let dir = simulated();
    let out = bin(&["simulate", "--config", "cfg.txt", "--common-names", "400", "--out-dir", "again"], dir.path());
    assert_eq!(code(&out), exit::OK);
    for f in ["roster.csv", "config.txt", "common_names.txt"] {
        let a = fs::read(dir.path().join("sim").join(f)).unwrap();
        let b = fs::read(dir.path().join("again").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let roster = fs::read_to_string(dir.path().join("sim/roster.csv")).unwrap();
    assert_eq!(roster.lines().count(), 1_201);
    assert!(roster.starts_with("last_name,first_name,gender,group,region"));
}

#[test]
fn analyze_writes_reports_and_is_deterministic() {
    let dir = simulated();
    let args = |out: &str| {
        vec![
            "analyze",
            "--sims",
            "999",
            "--seed",
            "42",
            "--gender-split",
            "--filter-common",
            "sim/common_names.txt",
            "--stratify",
            "macro-region",
            "--quiet",
            "--out-dir",
            out.to_string().leak(),
            "sim/roster.csv",
        ]
    };
    assert_eq!(code(&bin(&args("a"), dir.path())), exit::OK);
    assert_eq!(code(&bin(&args("b"), dir.path())), exit::OK);
    let a = fs::read(dir.path().join("a/report.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/report.json")).unwrap());

    let json: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let strata: Vec<&str> =
        json["batches"].as_array().unwrap().iter().map(|b| b["stratum"].as_str().unwrap()).collect();
    assert_eq!(strata, ["all", "North", "Center", "South", "Sardinia", "Sicily", "common", "F", "M"]);
    assert_eq!(json["provenance"]["seed"], 42);
    assert_eq!(json["provenance"]["n_sims"], 999);
    assert!(json["provenance"].get("timestamp_unix").is_none());
    assert!(json["provenance"].get("workers").is_none());

    let csv = fs::read_to_string(dir.path().join("a/report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "stratum,group,code,n_people,n_distinct,p,q,highly_significant,skipped");
    // The nepotistic group has no sample at or below its count at S = 999.
    let g01 = csv.lines().find(|l| l.starts_with("all,G01,")).unwrap();
    let p: f64 = g01.split(',').nth(5).unwrap().parse().unwrap();
    assert_eq!(p, 1.0 / 1000.0);
    let table = fs::read_to_string(dir.path().join("a/table.txt")).unwrap();
    assert!(table.contains("<0.001*"), "{table}");
    assert!(table.lines().next().unwrap().contains("F-p"));
    for f in ["report_all.csv", "report_Sicily.csv", "report_common.csv", "report_M.csv"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
}

#[test]
fn timestamp_is_opt_in() {
    let dir = simulated();
    let out =
        bin(&["analyze", "--sims", "100", "--timestamp", "--quiet", "--out-dir", "t", "sim/roster.csv"], dir.path());
    assert_eq!(code(&out), exit::OK);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("t/report.json")).unwrap()).unwrap();
    assert!(json["provenance"]["timestamp_unix"].as_u64().unwrap() > 0);
}

#[test]
fn region_sweep_and_exclusions() {
    let dir = simulated();
    let out = bin(
        &[
            "analyze",
            "--sims",
            "500",
            "--stratify",
            "region",
            "--exclude-groups",
            "G04",
            "--quiet",
            "--out-dir",
            "r",
            "sim/roster.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("r/table.txt")).unwrap();
    assert!(table.contains("Count"));
    assert!(!table.contains("G04"));
    let regions = fs::read_to_string(dir.path().join("r/regions.csv")).unwrap();
    assert!(regions.lines().skip(1).all(|l| !l.contains(",G04,")));
    assert!(regions.contains("Sicily,G01,"));
}

#[test]
fn diagnose_and_qvalues_chain_on_reports() {
    let dir = simulated();
    assert_eq!(
        code(&bin(&["analyze", "--sims", "500", "--quiet", "--out-dir", "a", "sim/roster.csv"], dir.path())),
        exit::OK
    );
    let out =
        bin(&["diagnose", "--pvalues", "a/report.csv", "--top", "2", "--out-dir", "d", "sim/roster.csv"], dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("d/logit_fit.json")).unwrap()).unwrap();
    assert_eq!(fit["n_points"], 4);
    assert!(fit["slope"].is_number() && fit["r_squared"].is_number());
    let points = fs::read_to_string(dir.path().join("d/logit_points.csv")).unwrap();
    assert!(points.starts_with("group,women_fraction,p,logit,clamped"));
    let top = fs::read_to_string(dir.path().join("d/top_names.csv")).unwrap();
    assert_eq!(top.lines().count(), 1 + 2 * 5);
    assert!(dir.path().join("d/women_fraction.csv").exists());

    let out = bin(&["qvalues", "--pi0", "1", "--stratum", "all", "--out-dir", "q", "a/report.csv"], dir.path());
    assert_eq!(code(&out), exit::OK);
    let q = fs::read_to_string(dir.path().join("q/qvalues.csv")).unwrap();
    assert_eq!(q.lines().count(), 5);
}

#[test]
fn clamped_points_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let mut roster = String::from("last_name,first_name,gender,group\n");
    for (g, women) in [("A", 1), ("B", 3)] {
        for i in 0..4 {
            let gender = if i < women { "F" } else { "M" };
            roster.push_str(&format!("X{i},Y{i},{gender},{g}\n"));
        }
    }
    fs::write(dir.path().join("r.csv"), roster).unwrap();
    fs::write(dir.path().join("p.csv"), "group,p\nA,1e-9\nB,0.5\n").unwrap();
    let out = bin(&["diagnose", "--pvalues", "p.csv", "--out-dir", "d", "r.csv"], dir.path());
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let points = fs::read_to_string(dir.path().join("d/logit_points.csv")).unwrap();
    let a = points.lines().find(|l| l.starts_with("A,")).unwrap();
    assert!(a.ends_with(",true"), "{a}");
    let fit: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("d/logit_fit.json")).unwrap()).unwrap();
    assert_eq!(fit["n_clamped"], 1);
}

#[test]
fn power_curve_file_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.txt"), "n_people = 2000\nn_groups = 4\nseed = 1\n").unwrap();
    let out = bin(
        &["simulate", "--config", "cfg.txt", "--rho", "0,0.2,0.6", "--trials", "20", "--sims", "300", "--out-dir", "p"],
        dir.path(),
    );
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("p/power.csv")).unwrap();
    let rates: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(rates.len(), 3);
    assert!(rates.windows(2).all(|w| w[0] <= w[1]), "{rates:?}");
    assert_eq!(rates[2], 1.0);
}

#[test]
fn exit_codes() {
    let dir = simulated();
    let p = dir.path();
    assert_eq!(code(&bin(&["analyze", "--bogus"], p)), exit::USAGE);
    assert_eq!(code(&bin(&["analyze", "--alpha", "2", "sim/roster.csv"], p)), exit::USAGE);
    assert_eq!(code(&bin(&["analyze", "missing.csv"], p)), exit::IO);
    assert_eq!(code(&bin(&["analyze", "--schema", "group=nope", "sim/roster.csv"], p)), exit::INPUT);
    assert_eq!(code(&bin(&["analyze", "--sims", "0", "sim/roster.csv"], p)), exit::CONFIG);

    fs::write(p.join("bad.txt"), "n_people = ten\n").unwrap();
    assert_eq!(code(&bin(&["simulate", "--config", "bad.txt"], p)), exit::CONFIG);
    fs::write(p.join("bad2.txt"), "nepotism_rate = 1.5\n").unwrap();
    assert_eq!(code(&bin(&["simulate", "--config", "bad2.txt"], p)), exit::CONFIG);

    fs::write(p.join("p.csv"), "group,p\nA,0\n").unwrap();
    assert_eq!(code(&bin(&["qvalues", "p.csv"], p)), exit::INPUT);
    fs::write(p.join("g.csv"), "last_name,gender,group\nROSSI,Q,A\n").unwrap();
    assert_eq!(code(&bin(&["analyze", "g.csv"], p)), exit::INPUT);
    // Every group has the same women fraction: nothing to regress on.
    fs::write(p.join("flat.csv"), "group,p\nG01,0.1\n").unwrap();
    assert_eq!(code(&bin(&["diagnose", "--pvalues", "flat.csv", "sim/roster.csv"], p)), exit::ANALYSIS);
}
