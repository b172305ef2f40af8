use std::path::Path;
use std::process::{Command, Output};

fn smoothgen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothgen"))
        .args(args)
        .current_dir(dir)
        .env("SMOOTHGEN_THREADS", "2")
        .output()
        .expect("spawn smoothgen")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn entropy_of_uniform_is_log_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoothgen(
        dir.path(),
        &[
            "entropy",
            "--order",
            "max",
            "--delta",
            "0",
            "--source",
            "uniform:8",
        ],
    );
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 8f64.ln()).abs() < 1e-12);

    let o = smoothgen(
        dir.path(),
        &[
            "entropy",
            "--order",
            "min",
            "--delta",
            "0",
            "--source",
            "bernoulli:0.25",
            "--n",
            "20",
            "--json",
        ],
    );
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let want = -20.0 * 0.75f64.ln();
    assert!((j["entropy_nats"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn resolve_writes_map_and_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoothgen(
        dir.path(),
        &[
            "resolve",
            "--source",
            "bernoulli:0.3",
            "--n",
            "2",
            "--f",
            "half-variational",
            "--D",
            "0.2",
            "--gamma",
            "0.1",
        ],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("achieved D_half_variational"));
    let map: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("map.json")).unwrap())
            .unwrap();
    let counts: u64 = map["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(counts, map["m"].as_u64().unwrap());
}

#[test]
fn rates_csv_has_one_row_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoothgen(
        dir.path(),
        &[
            "rates",
            "--source",
            "bernoulli:0.11",
            "--f",
            "hellinger",
            "--D",
            "0.1",
            "--nu",
            "0.01",
            "--n",
            "8,16,32",
        ],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("_nats"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn equivalence_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoothgen(
        dir.path(),
        &[
            "equivalence",
            "--source",
            "bernoulli:0.3",
            "--f",
            "half-variational",
            "--D",
            "0.2",
            "--nu",
            "0.01",
            "--n",
            "8,16,32",
            "--out",
            "eq.csv",
        ],
    );
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("eq.csv")).unwrap();
    assert!(text.starts_with(
        "n,nu,h0_rate_nats,hinf_rate_nats,kbar_nats,kunder_nats,gap0_nats,gapinf_nats"
    ));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn extract_with_explicit_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = smoothgen(
        dir.path(),
        &[
            "extract",
            "--source",
            "uniform:4",
            "--f",
            "half-variational",
            "--Delta",
            "0",
            "--gamma",
            "0.1",
            "--m",
            "4",
            "--json",
        ],
    );
    assert!(o.status.success());
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["M"], 4);
    assert_eq!(j["achieved_nats"].as_f64().unwrap(), 0.0);
    assert_eq!(j["bins_hold"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let infeasible = smoothgen(
        dir.path(),
        &[
            "resolve",
            "--source",
            "bernoulli:0.3",
            "--f",
            "half-variational",
            "--D",
            "1.5",
            "--gamma",
            "0.1",
        ],
    );
    assert_eq!(infeasible.status.code(), Some(2));

    let usage = smoothgen(
        dir.path(),
        &[
            "entropy",
            "--order",
            "max",
            "--source",
            "uniform:2",
            "--bogus",
        ],
    );
    assert_eq!(usage.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("--bogus"));

    let bad_source = smoothgen(
        dir.path(),
        &[
            "entropy", "--order", "max", "--delta", "0", "--source", "nope:3",
        ],
    );
    assert_eq!(bad_source.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_source.stderr).contains("--source"));

    let unwritable = smoothgen(
        dir.path(),
        &[
            "rates",
            "--source",
            "uniform:2",
            "--f",
            "hellinger",
            "--D",
            "0.1",
            "--n",
            "2,4",
            "--out",
            "missing/dir/x.csv",
        ],
    );
    assert_eq!(unwritable.status.code(), Some(1));
}
