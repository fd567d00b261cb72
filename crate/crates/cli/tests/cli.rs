use std::path::Path;
use std::process::{Command, Output};

fn ecoentropy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecoentropy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_into(dir: &Path) {
    let out = ecoentropy(&["run", "--preset", "case1", "--seed", "42", "--ticks", "400", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn run_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into(a.path());
    run_into(b.path());
    for f in ["metrics.csv", "summary.json", "census.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let metrics = std::fs::read_to_string(a.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tick,ecosystem,n_agents,n_l1,n_l2,n_l3,entropy,cum_cost,cum_gain,value_benefit,hub_pool,orders_r1,orders_r2,orders_r3,orders_r4,orders_r5,births,deaths,kills"
    );
    assert_eq!(lines.count(), 800);
    assert!(!a.path().join("events.csv").exists());
}

#[test]
fn run_with_events_and_attribute_niches() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecoentropy(&[
        "run", "--preset", "case2", "--seed", "3", "--ticks", "40", "--niche", "attribute", "--events", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let events = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.starts_with("tick,event,agent_id,ecosystem,detail\n"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["niche"]["mode"], "attribute");
    assert_eq!(summary["ticks"], 40);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha:") && stdout.contains("beta:"));
}

#[test]
fn config_file_merges_over_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, "ticks = 15\n[params]\ninitial_beta = 20\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = ecoentropy(&["run", "--preset", "case1", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 31);
    assert!(metrics.lines().nth(2).unwrap().starts_with("0,beta,"));
}

#[test]
fn bad_config_exits_nonzero_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[alpha]\nhub_period = 0\n").unwrap();
    let out = ecoentropy(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("alpha.hub_period"), "{}", stderr(&out));

    std::fs::write(&cfg, "tick = 5\n").unwrap();
    let out = ecoentropy(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("tick"), "{}", stderr(&out));

    let out = ecoentropy(&["run", "--preset", "case9", "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn analyze_reports_optimum_and_dividing_point() {
    let dir = tempfile::tempdir().unwrap();
    let census = dir.path().join("census.csv");
    std::fs::write(&census, "niche,count\na,4\nb,4\nc,4\nd,4\n").unwrap();
    let out = ecoentropy(&["analyze", "--census", census.to_str().unwrap(), "--k", "1", "--ma", "2", "--mb", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("at optimum"), "{text}");
    assert!(text.contains("dividing demand   3.000000"), "{text}");

    std::fs::write(&census, "a,16\n").unwrap();
    let out = ecoentropy(&["analyze", "--census", census.to_str().unwrap(), "--k", "1", "--json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["entropy"], 0.0);
    assert_eq!(report["cost"], 64.0);
    assert_eq!(report["min_cost"], 16.0);

    std::fs::write(&census, "niche,count\n").unwrap();
    let out = ecoentropy(&["analyze", "--census", census.to_str().unwrap(), "--k", "1"]);
    assert!(!out.status.success());
}

#[test]
fn sweep_writes_per_seed_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecoentropy(&["sweep", "--preset", "case2", "--seeds", "1..3", "--ticks", "30", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for s in 1..=3 {
        assert!(dir.path().join(format!("seed-{s}/metrics.csv")).exists());
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["valid_runs"], 3);
    assert_eq!(report["seeds"][2]["seed"], 3);
}

#[test]
fn analyze_reads_a_run_census() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecoentropy(&["run", "--preset", "case1", "--niche", "attribute", "--ticks", "30", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let census = dir.path().join("census.csv");
    for eco in ["alpha", "beta"] {
        let out = ecoentropy(&["analyze", "--census", census.to_str().unwrap(), "--ecosystem", eco, "--json"]);
        assert!(out.status.success(), "{}", stderr(&out));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let s = &summary["summary"][eco];
        assert_eq!(report["nodes"], s["n_agents"]);
        assert!((report["entropy"].as_f64().unwrap() - s["entropy"].as_f64().unwrap()).abs() < 1e-12);
    }
    let out = ecoentropy(&["analyze", "--census", census.to_str().unwrap(), "--tick", "999"]);
    assert!(!out.status.success());
}
